import numpy as np
import pytest

from driftxplain.core import Dataset


def make_dataset(x, t, n_bins=None):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    t = np.asarray(t, dtype=np.int64)
    return Dataset(x=x, t=t, n_bins=int(t.max()) if n_bins is None else n_bins)


@pytest.fixture
def two_blob_dataset():
    """Bin 1 clusters at (0, 0), bin 2 at (8, 8); trivially separable."""
    rng = np.random.default_rng(42)
    a = rng.normal(0.0, 0.5, size=(40, 2))
    b = rng.normal(8.0, 0.5, size=(40, 2))
    x = np.vstack([a, b])
    t = np.repeat([1, 2], 40)
    return make_dataset(x, t)
