import numpy as np
import pytest

from normdescent import Dataset


def random_dataset(rng, k=None, d=None, n=None):
    """Small random classification dataset with every class present."""
    k = k or int(rng.integers(2, 6))
    d = d or int(rng.integers(1, 6))
    if n is None:
        n = int(rng.integers(k, 25))
    y = np.concatenate([np.arange(k), rng.integers(0, k, size=n - k)])
    rng.shuffle(y)
    x = rng.standard_normal((d, n))
    return Dataset.from_arrays(x, y, k)


def divisible_dataset(rng, k, d, n):
    """Random dataset with an exact sample count (for batch-divisibility)."""
    y = np.concatenate([np.arange(k), rng.integers(0, k, size=n - k)])
    rng.shuffle(y)
    x = rng.standard_normal((d, n))
    return Dataset.from_arrays(x, y, k)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
