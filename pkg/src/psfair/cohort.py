"""Prediction-set ingestion, validation, alignment, and subgroup inclusion.

Input files are UTF-8 delimited text with a header row naming the columns
``example_id, finding, label, score, group`` in any order. One file holds one
model's scored test set, long format: one row per (example, finding).
"""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass
from typing import Iterable, TextIO

REQUIRED_COLUMNS = ("example_id", "finding", "label", "score", "group")


class CohortError(ValueError):
    """Base class for prediction-data validation failures."""


class IngestError(CohortError):
    """Malformed or inconsistent input file."""


class AlignmentError(CohortError):
    """Candidate model does not share the baseline's test set."""


@dataclass(frozen=True)
class PredictionRecord:
    example_id: str
    finding_id: str
    label: int
    score: float
    group_id: str


@dataclass(frozen=True)
class InclusionPolicy:
    """Minimum per-(finding, group) case counts for a subgroup to be evaluated.

    The defaults drop subgroups with fewer than 5 positive or 5 negative
    cases, whose AUROC estimates would be too noisy to act on.
    """

    min_positives: int = 5
    min_negatives: int = 5

    def __post_init__(self) -> None:
        if self.min_positives < 0 or self.min_negatives < 0:
            raise ValueError("inclusion thresholds must be >= 0")


class PredictionSet:
    """One model's scored test set, immutable after construction.

    Enforces: labels binary, scores finite, (example_id, finding) unique, and
    every finding present has at least one positive and one negative record.
    """

    def __init__(self, model_id: str, records: Iterable[PredictionRecord]):
        recs = tuple(records)
        if not model_id:
            raise CohortError("model_id must be non-empty")
        if not recs:
            raise CohortError(f"prediction set {model_id!r} is empty")
        seen: set[tuple[str, str]] = set()
        by_finding: dict[str, list[PredictionRecord]] = {}
        for r in recs:
            if r.label not in (0, 1):
                raise CohortError(
                    f"label not binary for ({r.example_id}, {r.finding_id}): {r.label!r}"
                )
            if not math.isfinite(r.score):
                raise CohortError(
                    f"score not finite for ({r.example_id}, {r.finding_id}): {r.score!r}"
                )
            key = (r.example_id, r.finding_id)
            if key in seen:
                raise CohortError(f"duplicate key {key} in prediction set {model_id!r}")
            seen.add(key)
            by_finding.setdefault(r.finding_id, []).append(r)
        for finding, rows in by_finding.items():
            labels = {r.label for r in rows}
            if labels != {0, 1}:
                raise CohortError(
                    f"finding {finding!r} in {model_id!r} has no "
                    + ("negative" if labels == {1} else "positive")
                    + " records"
                )
        self.model_id = model_id
        self.records = recs
        self._by_finding = {f: tuple(rows) for f, rows in by_finding.items()}
        self._by_key = {(r.example_id, r.finding_id): r for r in recs}

    @property
    def findings(self) -> tuple[str, ...]:
        return tuple(sorted(self._by_finding))

    @property
    def groups(self) -> tuple[str, ...]:
        return tuple(sorted({r.group_id for r in self.records}))

    def records_for(self, finding: str) -> tuple[PredictionRecord, ...]:
        if finding not in self._by_finding:
            raise CohortError(f"unknown finding {finding!r} in {self.model_id!r}")
        return self._by_finding[finding]

    def record(self, example_id: str, finding: str) -> PredictionRecord:
        return self._by_key[(example_id, finding)]

    def keys(self) -> frozenset[tuple[str, str]]:
        return frozenset(self._by_key)

    def __len__(self) -> int:
        return len(self.records)

    def __eq__(self, other: object) -> bool:
        # Record order is presentation detail, not identity.
        if not isinstance(other, PredictionSet):
            return NotImplemented
        return self.model_id == other.model_id and set(self.records) == set(other.records)

    def __repr__(self) -> str:
        return (
            f"PredictionSet({self.model_id!r}, {len(self.records)} records, "
            f"{len(self._by_finding)} findings)"
        )


@dataclass(frozen=True)
class AlignedStudy:
    """A baseline and its candidates over one identical test set.

    Alignment guarantees every candidate scores exactly the baseline's
    (example, finding) keys with identical label and group per key, so every
    performance delta is attributable to scores alone.
    """

    baseline: PredictionSet
    candidates: tuple[PredictionSet, ...]
    key_set: frozenset[tuple[str, str, int, str]]

    def candidate(self, model_id: str) -> PredictionSet:
        for c in self.candidates:
            if c.model_id == model_id:
                return c
        raise CohortError(f"unknown candidate {model_id!r}")

    @property
    def candidate_ids(self) -> tuple[str, ...]:
        return tuple(c.model_id for c in self.candidates)

    @property
    def findings(self) -> tuple[str, ...]:
        return self.baseline.findings


def ingest(source: str | os.PathLike | TextIO, model_id: str, delimiter: str = ",") -> PredictionSet:
    """Parse a delimited prediction file into a validated PredictionSet.

    Raises IngestError with a line number for malformed rows, a named key for
    duplicates, and outright for empty input.
    """
    if isinstance(source, (str, os.PathLike)):
        with open(source, "r", encoding="utf-8", newline="") as fh:
            return ingest(fh, model_id, delimiter=delimiter)

    reader = csv.reader(source, delimiter=delimiter)
    header: list[str] | None = None
    col: dict[str, int] = {}
    records: list[PredictionRecord] = []
    seen: set[tuple[str, str]] = set()
    for lineno, row in enumerate(reader, start=1):
        if not row or all(not cell.strip() for cell in row):
            continue
        if header is None:
            header = [cell.strip() for cell in row]
            missing = [c for c in REQUIRED_COLUMNS if c not in header]
            if missing:
                raise IngestError(f"line {lineno}: header missing columns {missing}")
            col = {name: header.index(name) for name in REQUIRED_COLUMNS}
            continue
        if len(row) != len(header):
            raise IngestError(
                f"line {lineno}: expected {len(header)} fields, got {len(row)}"
            )
        label_raw = row[col["label"]].strip()
        if label_raw not in ("0", "1"):
            raise IngestError(f"line {lineno}: label not binary: {label_raw!r}")
        score_raw = row[col["score"]].strip()
        try:
            score = float(score_raw)
        except ValueError:
            raise IngestError(f"line {lineno}: score not a number: {score_raw!r}") from None
        if not math.isfinite(score):
            raise IngestError(f"line {lineno}: score not finite: {score_raw!r}")
        example_id = row[col["example_id"]].strip()
        finding = row[col["finding"]].strip()
        group = row[col["group"]].strip()
        if not example_id or not finding or not group:
            raise IngestError(f"line {lineno}: empty example_id, finding, or group")
        key = (example_id, finding)
        if key in seen:
            raise IngestError(f"line {lineno}: duplicate key {key}")
        seen.add(key)
        records.append(PredictionRecord(example_id, finding, int(label_raw), score, group))
    if not records:
        raise IngestError("empty input: no data rows")
    return PredictionSet(model_id, records)


def emit(pset: PredictionSet, target: str | os.PathLike | TextIO, delimiter: str = ",") -> None:
    """Write a PredictionSet in the ingestion format, canonically ordered.

    Rows are sorted by (finding, example_id) and scores use shortest
    round-trip decimals, so identical sets emit byte-identical files.
    """
    if isinstance(target, (str, os.PathLike)):
        with open(target, "w", encoding="utf-8", newline="") as fh:
            emit(pset, fh, delimiter=delimiter)
        return
    writer = csv.writer(target, delimiter=delimiter, lineterminator="\n")
    writer.writerow(REQUIRED_COLUMNS)
    for r in sorted(pset.records, key=lambda r: (r.finding_id, r.example_id)):
        writer.writerow([r.example_id, r.finding_id, r.label, repr(r.score), r.group_id])


def emits(pset: PredictionSet, delimiter: str = ",") -> str:
    buf = io.StringIO()
    emit(pset, buf, delimiter=delimiter)
    return buf.getvalue()


def align(baseline: PredictionSet, candidates: list[PredictionSet] | tuple[PredictionSet, ...]) -> AlignedStudy:
    """Verify candidates share the baseline's exact test set and index them.

    Reports up to 10 offending keys per candidate on mismatch.
    """
    base_keys = baseline.keys()
    for cand in candidates:
        cand_keys = cand.keys()
        missing = sorted(base_keys - cand_keys)
        extra = sorted(cand_keys - base_keys)
        if missing or extra:
            parts = []
            if missing:
                parts.append(f"missing {len(missing)} baseline keys, e.g. {missing[:10]}")
            if extra:
                parts.append(f"has {len(extra)} keys absent from baseline, e.g. {extra[:10]}")
            raise AlignmentError(f"candidate {cand.model_id!r}: " + "; ".join(parts))
        mismatched = []
        for key in base_keys:
            b = baseline.record(*key)
            c = cand.record(*key)
            if b.label != c.label or b.group_id != c.group_id:
                mismatched.append(key)
                if len(mismatched) == 10:
                    break
        if mismatched:
            raise AlignmentError(
                f"candidate {cand.model_id!r} disagrees on label/group for keys "
                f"{sorted(mismatched)}"
            )
    key_set = frozenset(
        (r.example_id, r.finding_id, r.label, r.group_id) for r in baseline.records
    )
    return AlignedStudy(baseline=baseline, candidates=tuple(candidates), key_set=key_set)


def group_counts(pset: PredictionSet, finding: str) -> dict[str, tuple[int, int]]:
    """Per-group (n_pos, n_neg) counts for one finding."""
    counts: dict[str, list[int]] = {}
    for r in pset.records_for(finding):
        c = counts.setdefault(r.group_id, [0, 0])
        c[0 if r.label == 1 else 1] += 1
    return {g: (c[0], c[1]) for g, c in counts.items()}


def eligible_groups(pset: PredictionSet, finding: str, policy: InclusionPolicy = InclusionPolicy()) -> set[str]:
    """Groups meeting the minimum positive and negative counts for a finding."""
    return {
        g
        for g, (n_pos, n_neg) in group_counts(pset, finding).items()
        if n_pos >= policy.min_positives and n_neg >= policy.min_negatives
    }
