"""Active-subspace baseline: sampled finite-difference gradients, SVD,
and a GP surrogate on the projected coordinates."""

import math
from dataclasses import dataclass

import numpy as np

from . import gp
from .optimize import BoxBounds, lhs_design

__all__ = ["ActiveSubspace", "ASSurrogate", "build_active_subspace",
           "as_surrogate"]


@dataclass(frozen=True)
class ActiveSubspace:
    """Dominant gradient directions of a black-box function.

    ``basis`` has orthonormal columns spanning the subspace;
    ``sample_budget_used`` counts every black-box evaluation spent on the
    finite-difference gradients.
    """

    basis: np.ndarray
    singular_values: np.ndarray
    sample_budget_used: int


def build_active_subspace(problem, k, alpha, q, rng, *, fd_step_rel=1e-4,
                          noise_variance=0.0):
    """Estimate the active subspace from M = floor(alpha k log d) gradients.

    Gradients are forward finite differences (d+1 evaluations each), with
    step ``fd_step_rel`` times the per-dimension prior standard deviation.
    Observations are corrupted with Gaussian noise of the given variance,
    matching the sequential algorithm's observation model.
    """
    if not 2.0 <= alpha <= 10.0:
        raise ValueError("alpha must lie between two and ten")
    d = problem.dim
    if q > d:
        raise ValueError("q must not exceed the input dimension")
    M = int(math.floor(alpha * k * math.log(d)))
    if M < 1:
        raise ValueError("budget formula produced no samples")
    X = problem.prior.sample(M, rng)
    h = fd_step_rel * problem.prior.std()
    sd = math.sqrt(noise_variance)

    grads = np.empty((d, M))
    for i in range(M):
        base = problem.evaluate(X[i]) + sd * rng.standard_normal()
        for j in range(d):
            xp = X[i].copy()
            xp[j] += h[j]
            fp = problem.evaluate(xp) + sd * rng.standard_normal()
            grads[j, i] = (fp - base) / h[j]

    try:
        U, S, _ = np.linalg.svd(grads, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError("SVD of the gradient matrix failed") from exc
    W = U[:, :q].copy()
    for j in range(q):
        i = int(np.argmax(np.abs(W[:, j])))
        if W[i, j] < 0:
            W[:, j] = -W[:, j]
    return ActiveSubspace(basis=W, singular_values=S,
                          sample_budget_used=M * (d + 1))


def _projected_box(bounds, W):
    """Bounding box of the image of a box under W^T (interval arithmetic)."""
    lo = np.where(W > 0, bounds.lo[:, None], bounds.hi[:, None])
    hi = np.where(W > 0, bounds.hi[:, None], bounds.lo[:, None])
    zlo = np.sum(W * lo, axis=0)
    zhi = np.sum(W * hi, axis=0)
    return BoxBounds(zlo, zhi)


@dataclass(frozen=True)
class ASSurrogate:
    """GP surrogate on the active variables; callable on full-space points."""

    subspace: ActiveSubspace
    model: gp.GPModel
    evaluations_total: int

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        z = np.atleast_2d(x) @ self.subspace.basis
        out = gp.posterior_mean(self.model, z)
        return float(out[0]) if x.ndim == 1 else out


def as_surrogate(asub, problem, n_surrogate, rng, *, noise_variance=0.0):
    """Fit a GP on an LHS design inside the projected search box."""
    q = asub.basis.shape[1]
    if n_surrogate < q + 1:
        raise ValueError("need at least q+1 surrogate points")
    zbox = _projected_box(problem.bounds, asub.basis)
    Z = lhs_design(n_surrogate, zbox, rng)
    X = np.clip(Z @ asub.basis.T, problem.bounds.lo, problem.bounds.hi)
    y = problem.eval_batch(X)
    y = y + math.sqrt(noise_variance) * rng.standard_normal(y.size)
    model = gp.fit_gp(gp.Dataset(Z, y), noise_mode=noise_variance, rng=rng)
    return ASSurrogate(subspace=asub, model=model,
                       evaluations_total=asub.sample_budget_used + n_surrogate)
