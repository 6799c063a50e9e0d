"""Synthetic cohorts with analytically controlled per-group AUC, plus oracles.

Scores follow the unit-variance binormal model: negatives ~ Normal(0, 1),
positives ~ Normal(mu, 1) with mu = sqrt(2) * probit(target_auc), which gives
AUC = Phi(mu / sqrt(2)) in closed form.

Candidate variants reuse the baseline's normal deviates and only shift the
positive-class mean per overridden group, so a candidate with no overrides is
score-identical to the baseline and overriding one group perturbs no other.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri

from .cohort import AlignedStudy, PredictionRecord, PredictionSet, align
from .seeding import substream

ORACLE_SIZE_LIMIT = 10_000


@dataclass(frozen=True)
class GroupRecipe:
    group_id: str
    n_pos: int
    n_neg: int
    target_auc: float

    def __post_init__(self) -> None:
        if self.n_pos < 1 or self.n_neg < 1:
            raise ValueError(f"group {self.group_id!r}: n_pos and n_neg must be >= 1")
        if not 0.0 < self.target_auc < 1.0:
            raise ValueError(f"group {self.group_id!r}: target_auc must be in (0, 1)")


@dataclass(frozen=True)
class CandidateSpec:
    model_id: str
    overrides: dict[str, float] = field(default_factory=dict)  # group_id -> target_auc


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    baseline_recipes: tuple[GroupRecipe, ...]
    candidates: tuple[CandidateSpec, ...]
    seed: int
    finding: str = "finding"

    def __post_init__(self) -> None:
        groups = {r.group_id for r in self.baseline_recipes}
        for cand in self.candidates:
            for g, auc in cand.overrides.items():
                if g not in groups:
                    raise ValueError(
                        f"candidate {cand.model_id!r} overrides unknown group {g!r}"
                    )
                if not 0.0 < auc < 1.0:
                    raise ValueError(
                        f"candidate {cand.model_id!r}, group {g!r}: "
                        f"target_auc must be in (0, 1)"
                    )


def mu_for_auc(target_auc: float) -> float:
    """Positive-class mean shift achieving the target AUC under the binormal model."""
    if not 0.0 < target_auc < 1.0:
        raise ValueError(f"target_auc must be in (0, 1), got {target_auc}")
    return math.sqrt(2.0) * float(ndtri(target_auc))


def _group_deviates(seed: int, finding: str, group: str, n_pos: int, n_neg: int):
    rng = substream(seed, "binormal", finding, group)
    return rng.standard_normal(n_pos), rng.standard_normal(n_neg)


def _group_records(
    recipe: GroupRecipe, seed: int, finding: str, target_auc: float
) -> list[PredictionRecord]:
    z_pos, z_neg = _group_deviates(seed, finding, recipe.group_id, recipe.n_pos, recipe.n_neg)
    mu = mu_for_auc(target_auc)
    records = [
        PredictionRecord(f"{recipe.group_id}-p{i}", finding, 1, float(z + mu), recipe.group_id)
        for i, z in enumerate(z_pos)
    ]
    records += [
        PredictionRecord(f"{recipe.group_id}-n{i}", finding, 0, float(z), recipe.group_id)
        for i, z in enumerate(z_neg)
    ]
    return records


def gen_binormal(recipe: GroupRecipe, seed: int, finding: str = "finding") -> list[PredictionRecord]:
    """Deterministic binormal scores for one group; expected AUC is the target."""
    return _group_records(recipe, seed, finding, recipe.target_auc)


def build_study(spec: ScenarioSpec) -> AlignedStudy:
    """Materialize the baseline and all candidate variants as an aligned study."""
    baseline_records: list[PredictionRecord] = []
    for recipe in spec.baseline_recipes:
        baseline_records += gen_binormal(recipe, spec.seed, spec.finding)
    baseline = PredictionSet("baseline", baseline_records)

    candidates = []
    for cand in spec.candidates:
        records: list[PredictionRecord] = []
        for recipe in spec.baseline_recipes:
            target = cand.overrides.get(recipe.group_id, recipe.target_auc)
            records += _group_records(recipe, spec.seed, spec.finding, target)
        candidates.append(PredictionSet(cand.model_id, records))
    return align(baseline, candidates)


def oracle_auroc(pos, neg) -> float:
    """Exhaustive pair-count AUROC, ties half; the independent test oracle."""
    pos = np.asarray(pos, dtype=np.float64)
    neg = np.asarray(neg, dtype=np.float64)
    if pos.size == 0 or neg.size == 0:
        raise ValueError("undefined AUROC: empty side")
    if pos.size + neg.size > ORACLE_SIZE_LIMIT:
        raise ValueError(
            f"oracle limited to {ORACLE_SIZE_LIMIT} records, got {pos.size + neg.size}"
        )
    diff = pos[:, None] - neg[None, :]
    wins = int((diff > 0).sum())
    ties = int((diff == 0).sum())
    return float((wins + 0.5 * ties) / (pos.size * neg.size))


# Preset scenarios at desk scale. Baseline subgroup targets are deliberately
# unequal (0.70 / 0.74 / 0.78); magnitudes of change are fixture choices.
_BASE_RECIPES = (
    GroupRecipe("group_a", 1000, 1000, 0.70),
    GroupRecipe("group_b", 1000, 1000, 0.74),
    GroupRecipe("group_c", 1000, 1000, 0.78),
)

_PRESET_CANDIDATES = {
    # Every group improves, the already-best group improves most: disparity
    # widens, yet nobody is worse off.
    "m2_like": CandidateSpec(
        "m2", {"group_a": 0.73, "group_b": 0.77, "group_c": 0.84}
    ),
    # Inconsistent update: slight gain for the worst group, losses elsewhere.
    "m3_like": CandidateSpec(
        "m3", {"group_a": 0.71, "group_b": 0.71, "group_c": 0.77}
    ),
    # Disparity-narrowing update that lifts the worst group but shaves the
    # best one: fairer by the traditional score, yet a subgroup is harmed.
    "m4_like": CandidateSpec(
        "m4", {"group_a": 0.75, "group_c": 0.76}
    ),
    "no_change": CandidateSpec("m_same", {}),
}

PRESET_NAMES = tuple(_PRESET_CANDIDATES)
DEFAULT_PRESET_SEED = 20240824


def preset(name: str, seed: int = DEFAULT_PRESET_SEED) -> ScenarioSpec:
    """A named desk-scale scenario; raises ValueError for unknown names."""
    if name not in _PRESET_CANDIDATES:
        raise ValueError(f"unknown preset {name!r}; available: {sorted(_PRESET_CANDIDATES)}")
    return ScenarioSpec(
        name=name,
        baseline_recipes=_BASE_RECIPES,
        candidates=(_PRESET_CANDIDATES[name],),
        seed=seed,
        finding="lung_lesion",
    )


def load_scenario(path: str | os.PathLike) -> ScenarioSpec:
    """Load a scenario from its JSON file format (see docs/scenario format in README)."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    try:
        recipes = tuple(
            GroupRecipe(g["group_id"], int(g["n_pos"]), int(g["n_neg"]), float(g["target_auc"]))
            for g in raw["groups"]
        )
        candidates = tuple(
            CandidateSpec(c["model_id"], {k: float(v) for k, v in c.get("overrides", {}).items()})
            for c in raw["candidates"]
        )
        return ScenarioSpec(
            name=str(raw["name"]),
            baseline_recipes=recipes,
            candidates=candidates,
            seed=int(raw["seed"]),
            finding=str(raw.get("finding", "finding")),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"invalid scenario file {os.fspath(path)!r}: {exc}") from exc


def scenario_to_dict(spec: ScenarioSpec) -> dict:
    return {
        "name": spec.name,
        "seed": spec.seed,
        "finding": spec.finding,
        "groups": [
            {
                "group_id": r.group_id,
                "n_pos": r.n_pos,
                "n_neg": r.n_neg,
                "target_auc": r.target_auc,
            }
            for r in spec.baseline_recipes
        ],
        "candidates": [
            {"model_id": c.model_id, "overrides": dict(sorted(c.overrides.items()))}
            for c in spec.candidates
        ],
    }
