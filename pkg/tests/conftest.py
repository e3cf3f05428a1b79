import numpy as np
import pytest

from hikmeans import _backend


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Touch every kernel once so timed tests measure work, not compilation."""
    x = np.arange(8, dtype=np.float32).reshape(4, 2)
    c = np.zeros((2, 2), dtype=np.float64)
    labels, _ = _backend.assign(x, c)
    _backend.cluster_sums(x, labels, 2)
    _backend.min_sqdist_update(x, c[0], np.full(4, np.inf))
    _backend.kde_sum(x.astype(np.float64), x.astype(np.float64), 0.5)


@pytest.fixture()
def toy_1d():
    """5000 points equally spaced in [0.9, 1.1] plus two at 2 and two at 3."""
    xs = np.concatenate([np.linspace(0.9, 1.1, 5000), [2.0, 2.0, 3.0, 3.0]])
    return xs.astype(np.float32)[:, None]
