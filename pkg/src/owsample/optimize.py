"""Search-space sampling and acquisition maximization.

Latin hypercube designs provide both the initial datasets and the restart
points for a multi-start projected gradient ascent with a backtracking
(Armijo) line search.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

__all__ = ["BoxBounds", "lhs_design", "maximize_acquisition",
           "maximize_function"]


@dataclass(frozen=True)
class BoxBounds:
    """Axis-aligned box lo <= x <= hi."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
        hi = np.atleast_1d(np.asarray(self.hi, dtype=float))
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("lo and hi must be vectors of equal length")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("bounds must be finite")
        if not np.all(lo < hi):
            raise ValueError("lo must be strictly below hi componentwise")

    @property
    def dim(self):
        return self.lo.size

    @property
    def span(self):
        return self.hi - self.lo

    def clip(self, x):
        return np.clip(x, self.lo, self.hi)

    def contains(self, x, atol=0.0):
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lo - atol) and np.all(x <= self.hi + atol))

    def volume(self):
        return float(np.prod(self.span))


def lhs_design(n, bounds, rng):
    """Latin hypercube design of n points inside a box.

    Each dimension is split into n equal strata; one point is placed
    uniformly at random inside each stratum and the strata are permuted
    independently across dimensions.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    d = bounds.dim
    pts = np.empty((n, d))
    for j in range(d):
        perm = rng.permutation(n)
        u = rng.uniform(size=n)
        pts[:, j] = bounds.lo[j] + bounds.span[j] * (perm + u) / n
    return pts


def _ascend(value_and_grad, x0, bounds, step_len, max_steps, armijo=1e-4,
            max_backtracks=40):
    """Projected gradient ascent from x0; returns (x, value, ok)."""
    x = bounds.clip(np.asarray(x0, dtype=float))
    v, g = value_and_grad(x)
    if not (np.isfinite(v) and np.all(np.isfinite(g))):
        return x, -math.inf, False
    t = None
    for _ in range(max_steps):
        gnorm = float(np.linalg.norm(g))
        if gnorm * float(np.linalg.norm(bounds.span)) <= 1e-8 * (1.0 + abs(v)):
            break
        if t is None:
            t = step_len / gnorm
        else:
            t = min(2.0 * t, 10.0 * step_len / gnorm)
        accepted = False
        for _ in range(max_backtracks):
            xn = bounds.clip(x + t * g)
            dx = xn - x
            pred = float(g @ dx)
            if pred <= 0.0:
                break
            vn, gn = value_and_grad(xn)
            if not (np.isfinite(vn) and np.all(np.isfinite(gn))):
                return x, v, False
            if vn >= v + armijo * pred:
                x, v, g = xn, vn, gn
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break
    return x, v, True


def maximize_function(value_and_grad, bounds, rng, *, n_restarts=10,
                      n_probes=512, max_steps=50, value_batch=None):
    """Multi-start projected gradient ascent over a box.

    Starts from an LHS design of size ``n_restarts`` plus the best of
    ``n_probes`` uniform random probes.  Each ascent only ever improves
    on its start, so the returned value dominates every start value.
    If every ascent fails numerically, the best probe is returned with a
    warning.
    """
    d = bounds.dim
    probes = rng.uniform(bounds.lo, bounds.hi, size=(n_probes, d))
    if value_batch is not None:
        pvals = np.asarray(value_batch(probes), dtype=float)
    else:
        pvals = np.array([value_and_grad(p)[0] for p in probes])
    best_probe = probes[int(np.argmax(pvals))]

    starts = list(lhs_design(n_restarts, bounds, rng))
    starts.append(best_probe)
    step_len = 0.1 * float(np.linalg.norm(bounds.span)) / math.sqrt(d)

    best_x, best_v = None, -math.inf
    any_ok = False
    for x0 in starts:
        x, v, ok = _ascend(value_and_grad, x0, bounds, step_len, max_steps)
        any_ok = any_ok or ok
        if ok and v > best_v:
            best_x, best_v = x, v
    if not any_ok:
        warnings.warn("every ascent start failed; returning the best probed "
                      "point", RuntimeWarning)
        return best_probe, float(np.max(pvals))
    return np.asarray(best_x, dtype=float), float(best_v)


def maximize_acquisition(kind, ctx, bounds, n_restarts=10, rng=None, *,
                         n_probes=512, max_steps=50):
    """Maximize an acquisition function over the search box."""
    from . import acquisition as acq

    if rng is None:
        rng = np.random.default_rng(0)

    def value_and_grad(x):
        return acq.acq_value_and_grad(kind, ctx, x)

    def value_batch(X):
        return acq.acq_value_batch(kind, ctx, X)

    return maximize_function(value_and_grad, bounds, rng,
                             n_restarts=n_restarts, n_probes=n_probes,
                             max_steps=max_steps, value_batch=value_batch)
