import numpy as np
import pytest

from psfair.cohort import PredictionRecord, PredictionSet


def make_set(model_id, rows):
    """Build a PredictionSet from (example_id, finding, label, score, group) tuples."""
    return PredictionSet(model_id, [PredictionRecord(*row) for row in rows])


def group_rows(finding, group, pos_scores, neg_scores, prefix=""):
    rows = [(f"{prefix}{group}-p{i}", finding, 1, s, group) for i, s in enumerate(pos_scores)]
    rows += [(f"{prefix}{group}-n{i}", finding, 0, s, group) for i, s in enumerate(neg_scores)]
    return rows


def random_instance(rng, max_records=200, tie_prone=True):
    """Random (pos, neg) score lists; discrete scores force plenty of ties."""
    n_pos = int(rng.integers(1, max_records // 2))
    n_neg = int(rng.integers(1, max_records - n_pos))
    if tie_prone and rng.random() < 0.5:
        levels = rng.integers(2, 12)
        pos = rng.integers(0, levels, n_pos).astype(float)
        neg = rng.integers(0, levels, n_neg).astype(float)
    else:
        pos = rng.normal(size=n_pos)
        neg = rng.normal(size=n_neg)
    return list(pos), list(neg)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
