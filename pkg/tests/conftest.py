import numpy as np
import pytest


def central_diff(f, x, h):
    """Fourth-order central difference gradient."""
    x = np.asarray(x, dtype=float)
    out = np.empty(x.size)
    for j in range(x.size):
        e = np.zeros(x.size)
        e[j] = h
        out[j] = (8.0 * (f(x + e) - f(x - e))
                  - (f(x + 2 * e) - f(x - 2 * e))) / (12.0 * h)
    return out


def best_fd_match(f, x, grad, steps=(1e-2, 3e-3, 1e-3, 3e-4)):
    """Relative error of ``grad`` against the best-converged FD estimate."""
    rel = np.inf
    for h in steps:
        fd = central_diff(f, x, h)
        rel = min(rel, np.linalg.norm(grad - fd)
                  / max(np.linalg.norm(fd), 1e-12))
    return rel


@pytest.fixture
def rng():
    return np.random.default_rng(20240531)
