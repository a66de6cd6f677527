import numpy as np
import pytest


def central_difference(f, x, h=1e-5):
    """Central finite-difference gradient of a scalar function of an array."""
    fd = np.zeros_like(x, dtype=np.float64)
    for idx in np.ndindex(x.shape):
        xp = x.copy()
        xp[idx] += h
        xm = x.copy()
        xm[idx] -= h
        fd[idx] = (f(xp) - f(xm)) / (2.0 * h)
    return fd


def assert_grad_close(analytic, fd, rtol=1e-5, atol=1e-7, label=""):
    """Per-coordinate relative check with a tiny absolute floor for zeros."""
    err = np.abs(analytic - fd)
    bound = atol + rtol * np.maximum(np.abs(analytic), np.abs(fd))
    bad = err > bound
    assert not bad.any(), (
        f"{label}: {int(bad.sum())} coordinates off; worst err {err.max():.3e}"
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
