import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from itboost.data import Dataset


@pytest.fixture
def tiny_dataset():
    """12 rows, 2 features, balanced labels; small enough to reason about by hand."""
    rng = np.random.default_rng(123)
    X = rng.normal(size=(12, 2))
    y = np.array([1, -1] * 6)
    return Dataset(features=X, labels=y, row_ids=np.arange(12))


def random_dataset(n, d, seed, positive_fraction=0.5):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    n_pos = max(1, int(round(n * positive_fraction)))
    n_pos = min(n_pos, n - 1)
    labels = np.array([1] * n_pos + [-1] * (n - n_pos))
    rng.shuffle(labels)
    return Dataset(features=X, labels=labels, row_ids=np.arange(n))
