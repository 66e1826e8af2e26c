"""Benchmark black-box problems.

* ``oakley`` and ``michalewicz2``: smooth 2-D analytic test functions.
* ``oscillator-m2`` / ``oscillator-m10``: mean response of a nonlinear
  oscillator driven by a Gaussian process forcing, parameterized by the
  leading coefficients of its Karhunen-Loeve expansion.
* ``borehole``: water flow rate through a borehole, eight uncertain
  physical parameters rescaled to the unit hypercube.
* ``fs3d`` (plus dummy-augmented variants): a three-dimensional
  dynamical system with intermittent bursts; the objective is the danger
  map, i.e. the largest value of the z coordinate over a prediction
  horizon, as a function of the initial condition expressed in PCA
  coordinates of the background attractor.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .optimize import BoxBounds
from .priors import (InputPrior, LognormalMarginal, NormalMarginal,
                     RescaledMarginal, UniformMarginal)

__all__ = [
    "BlackBoxProblem",
    "KLExpansion",
    "PCAReduction",
    "oakley",
    "michalewicz2",
    "borehole",
    "borehole_physical",
    "kl_expansion",
    "oscillator_objective",
    "oscillator_objective_batch",
    "restoring_force",
    "fs3d_rhs",
    "danger_map",
    "danger_map_batch",
    "pca_reduce",
    "get_problem",
    "list_problems",
    "PROBLEM_NAMES",
]


@dataclass(frozen=True)
class BlackBoxProblem:
    """A benchmark: dimension, search box, input prior, and evaluator."""

    name: str
    dim: int
    bounds: BoxBounds
    prior: InputPrior
    evaluate: object
    evaluate_batch: object = None
    pca: object = None

    def eval_batch(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.evaluate_batch is not None:
            return np.asarray(self.evaluate_batch(X), dtype=float)
        return np.array([self.evaluate(x) for x in X], dtype=float)


# ---------------------------------------------------------------------------
# Analytic test functions
# ---------------------------------------------------------------------------


def oakley(x):
    """5 + x1 + x2 + 2 cos(x1) + 2 sin(x2)."""
    x = np.asarray(x, dtype=float)
    return float(5.0 + x[0] + x[1] + 2.0 * math.cos(x[0])
                 + 2.0 * math.sin(x[1]))


def _oakley_batch(X):
    return (5.0 + X[:, 0] + X[:, 1] + 2.0 * np.cos(X[:, 0])
            + 2.0 * np.sin(X[:, 1]))


def michalewicz2(x):
    """Two-dimensional Michalewicz function (steepness 20)."""
    x = np.asarray(x, dtype=float)
    return float(-math.sin(x[0]) * math.sin(x[0] ** 2 / math.pi) ** 20
                 - math.sin(x[1]) * math.sin(2.0 * x[1] ** 2 / math.pi) ** 20)


def _michalewicz2_batch(X):
    return (-np.sin(X[:, 0]) * np.sin(X[:, 0] ** 2 / np.pi) ** 20
            - np.sin(X[:, 1]) * np.sin(2.0 * X[:, 1] ** 2 / np.pi) ** 20)


# ---------------------------------------------------------------------------
# Borehole flow rate
# ---------------------------------------------------------------------------

# (name, lo, hi) in physical units; search coordinates live on [0, 1]^8.
BOREHOLE_RANGES = (
    ("r_w", 0.05, 0.15),
    ("r", 100.0, 50000.0),
    ("T_u", 63070.0, 115600.0),
    ("H_u", 990.0, 1110.0),
    ("T_l", 63.1, 116.0),
    ("H_l", 700.0, 820.0),
    ("L", 1120.0, 1680.0),
    ("K_w", 9855.0, 12045.0),
)


def borehole_physical(params):
    """Flow rate in physical units; params ordered as BOREHOLE_RANGES."""
    p = np.asarray(params, dtype=float)
    r_w, r, T_u, H_u, T_l, H_l, L, K_w = (p[..., i] for i in range(8))
    if np.any(r <= r_w):
        raise ValueError("radius of influence must exceed borehole radius")
    if np.any(p <= 0):
        raise ValueError("physical parameters must be positive")
    log_rr = np.log(r / r_w)
    denom = log_rr * (1.0 + 2.0 * L * T_u / (log_rr * r_w ** 2 * K_w)
                      + T_u / T_l)
    out = 2.0 * math.pi * T_u * (H_u - H_l) / denom
    return float(out) if out.ndim == 0 else out


def _borehole_to_physical(U):
    U = np.asarray(U, dtype=float)
    lo = np.array([r[1] for r in BOREHOLE_RANGES])
    hi = np.array([r[2] for r in BOREHOLE_RANGES])
    return lo + (hi - lo) * U


def borehole(x):
    """Flow rate as a function of unit-cube coordinates."""
    return float(borehole_physical(_borehole_to_physical(
        np.asarray(x, dtype=float))))


def _borehole_batch(X):
    return borehole_physical(_borehole_to_physical(np.atleast_2d(X)))


def _borehole_prior():
    margs = [
        RescaledMarginal(NormalMarginal(0.1, 0.0161812), 0.05, 0.15),
        RescaledMarginal(LognormalMarginal(7.71, 1.0056), 100.0, 50000.0),
    ]
    margs += [UniformMarginal(0.0, 1.0) for _ in range(6)]
    bounds = BoxBounds(np.zeros(8), np.ones(8))
    return InputPrior.product(margs, bounds)


# ---------------------------------------------------------------------------
# Stochastic oscillator driven by a Karhunen-Loeve expanded forcing
# ---------------------------------------------------------------------------

OSC_DELTA = 1.5
OSC_ALPHA = 1.0
OSC_BETA = 0.1
OSC_U1 = 0.5
OSC_U2 = 1.5
OSC_SIGMA2 = 0.1
OSC_ELL = 4.0
OSC_T = 25.0
OSC_NT = 501


@dataclass(frozen=True)
class KLExpansion:
    """Leading eigenpairs of a squared-exponential correlation operator.

    ``modes`` holds the eigenfunctions sampled on the uniform grid
    (one row per mode, orthonormal under the quadrature weight), and the
    forcing is xi(t) = sum_i x_i phi_i(t) with x ~ N(0, diag(eigenvalues)).
    """

    eigenvalues: np.ndarray
    modes: np.ndarray
    grid_dt: float
    grid: np.ndarray
    sigma2: float
    ell: float

    @property
    def m(self):
        return self.eigenvalues.size

    def modes_at(self, tq):
        """Evaluate the eigenfunctions at arbitrary times (Nystrom extension).

        Exact at the grid nodes; smooth in between because the kernel is.
        """
        tq = np.asarray(tq, dtype=float)
        Cq = self.sigma2 * np.exp(
            -0.5 * ((tq[None, :] - self.grid[:, None]) / self.ell) ** 2)
        return (self.modes @ Cq) * (self.grid_dt / self.eigenvalues[:, None])


def kl_expansion(sigma2, ell, T, m, n_t):
    """Top-m eigenpairs of the correlation matrix on a uniform grid."""
    if m > n_t:
        raise ValueError("m must not exceed the grid size")
    t = np.linspace(0.0, T, n_t)
    dt = T / (n_t - 1)
    C = sigma2 * np.exp(-0.5 * ((t[:, None] - t[None, :]) / ell) ** 2)
    try:
        w, V = np.linalg.eigh(C)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError("eigendecomposition failed") from exc
    order = np.argsort(w)[::-1][:m]
    lam = np.maximum(w[order] * dt, 0.0)
    modes = V[:, order].T / math.sqrt(dt)
    for i in range(m):
        j = int(np.argmax(np.abs(modes[i])))
        if modes[i, j] < 0:
            modes[i] = -modes[i]
    return KLExpansion(eigenvalues=lam, modes=modes, grid_dt=dt, grid=t,
                       sigma2=sigma2, ell=ell)


def restoring_force(u):
    """Piecewise restoring force, odd in u: linear, plateau, then cubic."""
    u = np.asarray(u, dtype=float)
    a = np.abs(u)
    f = np.where(a <= OSC_U1, OSC_ALPHA * a,
                 np.where(a <= OSC_U2, OSC_ALPHA * OSC_U1,
                          OSC_ALPHA * OSC_U1 + OSC_BETA * (a - OSC_U2) ** 3))
    out = np.sign(u) * f
    return float(out) if out.ndim == 0 else out


def oscillator_objective_batch(X, kl, refine=1):
    """Time-averaged response for a batch of forcing coefficients.

    Integrates u'' + delta u' + F(u) = xi(t) from rest by classical RK4
    on the KL grid (optionally refined) and returns the mean of u over
    [0, T] for each row of X.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != kl.m:
        raise ValueError("coefficient dimension must match the expansion")
    n_steps = (kl.grid.size - 1) * refine
    h = (kl.grid[-1] - kl.grid[0]) / n_steps
    ts = np.linspace(kl.grid[0], kl.grid[-1], 2 * n_steps + 1)
    phi = kl.modes_at(ts)
    xi = X @ phi
    M = X.shape[0]
    u = np.zeros(M)
    v = np.zeros(M)
    integral = np.zeros(M)
    for k in range(n_steps):
        f0, fm, f1 = xi[:, 2 * k], xi[:, 2 * k + 1], xi[:, 2 * k + 2]
        k1u = v
        k1v = f0 - OSC_DELTA * v - restoring_force(u)
        u2 = u + 0.5 * h * k1u
        v2 = v + 0.5 * h * k1v
        k2u = v2
        k2v = fm - OSC_DELTA * v2 - restoring_force(u2)
        u3 = u + 0.5 * h * k2u
        v3 = v + 0.5 * h * k2v
        k3u = v3
        k3v = fm - OSC_DELTA * v3 - restoring_force(u3)
        u4 = u + h * k3u
        v4 = v + h * k3v
        k4u = v4
        k4v = f1 - OSC_DELTA * v4 - restoring_force(u4)
        u_new = u + (h / 6.0) * (k1u + 2 * k2u + 2 * k3u + k4u)
        v_new = v + (h / 6.0) * (k1v + 2 * k2v + 2 * k3v + k4v)
        integral += 0.5 * h * (u + u_new)
        u, v = u_new, v_new
    if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
        raise RuntimeError("non-finite state during oscillator integration")
    return integral / (kl.grid[-1] - kl.grid[0])


def oscillator_objective(x, kl, refine=1):
    """Time-averaged oscillator response for one coefficient vector."""
    return float(oscillator_objective_batch(
        np.asarray(x, dtype=float).reshape(1, -1), kl, refine=refine)[0])


# ---------------------------------------------------------------------------
# Extreme-event dynamical system and its danger map
# ---------------------------------------------------------------------------

FS_ALPHA = 0.02
FS_OMEGA = 2.0 * math.pi
FS_LAMBDA = 0.1
FS_BETA = 0.7
FS_TAU = 50.0
FS_DT = 0.01
_FS_BLOWUP = 1e6


def fs3d_rhs(state):
    """Right-hand side of the bursting system; state shape (..., 3)."""
    s = np.asarray(state, dtype=float)
    x, y, z = s[..., 0], s[..., 1], s[..., 2]
    dx = (FS_ALPHA * x + FS_OMEGA * y + FS_ALPHA * x ** 6
          + 2.0 * FS_OMEGA * x * y + 5.0 * z ** 2)
    dy = -FS_OMEGA * x + FS_ALPHA * y - FS_OMEGA * x ** 2 + 6.0 * FS_ALPHA * x * y
    dz = -FS_LAMBDA * z - (FS_LAMBDA + FS_BETA) * x * z
    return np.stack([dx, dy, dz], axis=-1)


def _rk4_state_step(s, h):
    k1 = fs3d_rhs(s)
    k2 = fs3d_rhs(s + 0.5 * h * k1)
    k3 = fs3d_rhs(s + 0.5 * h * k2)
    k4 = fs3d_rhs(s + h * k3)
    return s + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def danger_map_batch(states, tau=FS_TAU, dt=FS_DT):
    """Largest z over [0, tau] for each initial state, shape (M, 3)."""
    s = np.atleast_2d(np.asarray(states, dtype=float)).copy()
    n_steps = int(round(tau / dt))
    best = s[:, 2].copy()
    for _ in range(n_steps):
        s = _rk4_state_step(s, dt)
        if not np.all(np.isfinite(s)) or np.any(np.abs(s) > _FS_BLOWUP):
            raise RuntimeError("trajectory blow-up during danger-map "
                               "integration")
        np.maximum(best, s[:, 2], out=best)
    return best


@dataclass(frozen=True)
class PCAReduction:
    """Orthonormal PCA basis with optional inert dummy coordinates."""

    mean: np.ndarray
    basis: np.ndarray
    eigenvalues: np.ndarray
    dummy_dims: int = 0
    dummy_scale: float = 0.2

    @property
    def q(self):
        return self.basis.shape[1]

    @property
    def dim(self):
        return self.q + self.dummy_dims

    def lift(self, x_red):
        """Map reduced coordinates to state space (dummies ignored)."""
        x_red = np.asarray(x_red, dtype=float)
        return self.mean + x_red[..., :self.q] @ self.basis.T

    def project(self, state):
        """Full reduced coordinates of a state (zeros on dummy dims)."""
        state = np.asarray(state, dtype=float)
        z = self.basis.T @ (state - self.mean)
        return np.concatenate([z, np.zeros(self.dummy_dims)])

    def input_prior(self, box_scale=5.0):
        var = np.concatenate([self.eigenvalues, np.ones(self.dummy_dims)])
        return InputPrior.gaussian(np.zeros(self.dim), np.diag(var),
                                   self.box(box_scale))

    def box(self, box_scale=5.0):
        """Search box: edge length box_scale * sqrt(lambda_i) per PCA dim."""
        half = 0.5 * box_scale * np.sqrt(self.eigenvalues)
        half = np.concatenate([half,
                               np.full(self.dummy_dims,
                                       0.5 * self.dummy_scale)])
        return BoxBounds(-half, half)


def danger_map(x0, tau=FS_TAU, pca=None, dt=FS_DT):
    """Danger map at one initial condition (state or reduced coords)."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    x0 = np.asarray(x0, dtype=float).ravel()
    if pca is not None:
        x0 = pca.lift(x0)
    return float(danger_map_batch(x0.reshape(1, 3), tau=tau, dt=dt)[0])


def pca_reduce(snapshots, q, dummy_dims=0, dummy_scale=0.2):
    """Centered PCA of trajectory snapshots via SVD."""
    S = np.atleast_2d(np.asarray(snapshots, dtype=float))
    N, D = S.shape
    if N <= q:
        raise ValueError("need more snapshots than components")
    mean = S.mean(axis=0)
    _, sv, Vt = np.linalg.svd(S - mean, full_matrices=False)
    if q > sv.size or sv[q - 1] <= 1e-12 * sv[0]:
        raise ValueError("snapshots are rank-deficient for the requested q")
    basis = Vt[:q].T.copy()
    for j in range(q):
        i = int(np.argmax(np.abs(basis[:, j])))
        if basis[i, j] < 0:
            basis[:, j] = -basis[:, j]
    lam = sv[:q] ** 2 / N
    return PCAReduction(mean=mean, basis=basis, eigenvalues=lam,
                        dummy_dims=dummy_dims, dummy_scale=dummy_scale)


# PCA training data: one long trajectory started near the origin, with a
# burn-in discarded, subsampled to snapshot resolution.
_FS_PCA_IC = np.array([0.1, 0.0, 0.01])
_FS_PCA_BURN = 100.0
_FS_PCA_SPAN = 2000.0
_FS_PCA_SNAP_DT = 0.2


@lru_cache(maxsize=1)
def _fs3d_snapshots():
    stride = int(round(_FS_PCA_SNAP_DT / FS_DT))
    n_burn = int(round(_FS_PCA_BURN / FS_DT))
    n_main = int(round(_FS_PCA_SPAN / FS_DT))
    s = _FS_PCA_IC.reshape(1, 3).copy()
    for _ in range(n_burn):
        s = _rk4_state_step(s, FS_DT)
    snaps = [s[0].copy()]
    for k in range(1, n_main + 1):
        s = _rk4_state_step(s, FS_DT)
        if k % stride == 0:
            snaps.append(s[0].copy())
    return np.array(snaps)


@lru_cache(maxsize=8)
def _fs3d_pca(dummy_dims):
    return pca_reduce(_fs3d_snapshots(), 3, dummy_dims=dummy_dims)


# ---------------------------------------------------------------------------
# Problem registry
# ---------------------------------------------------------------------------


def _make_oakley():
    bounds = BoxBounds([-4.0, -4.0], [4.0, 4.0])
    prior = InputPrior.gaussian(np.zeros(2), np.eye(2), bounds)
    return BlackBoxProblem("oakley", 2, bounds, prior, oakley, _oakley_batch)


def _make_michalewicz2():
    bounds = BoxBounds([0.0, 0.0], [math.pi, math.pi])
    prior = InputPrior.gaussian(np.full(2, math.pi / 2.0), 0.1 * np.eye(2),
                                bounds)
    return BlackBoxProblem("michalewicz2", 2, bounds, prior, michalewicz2,
                           _michalewicz2_batch)


@lru_cache(maxsize=4)
def _oscillator_kl(m):
    return kl_expansion(OSC_SIGMA2, OSC_ELL, OSC_T, m, OSC_NT)


def _make_oscillator(m):
    kl = _oscillator_kl(m)
    lam = kl.eigenvalues
    half = 6.0 * np.sqrt(lam)
    bounds = BoxBounds(-half, half)
    prior = InputPrior.gaussian(np.zeros(m), np.diag(lam), bounds)
    return BlackBoxProblem(
        f"oscillator-m{m}", m, bounds, prior,
        lambda x, _kl=kl: oscillator_objective(x, _kl),
        lambda X, _kl=kl: oscillator_objective_batch(X, _kl))


def _make_borehole():
    prior = _borehole_prior()
    return BlackBoxProblem("borehole", 8, prior.bounds, prior, borehole,
                           _borehole_batch)


def _make_fs3d(dummy_dims):
    pca = _fs3d_pca(dummy_dims)
    bounds = pca.box(5.0)
    prior = pca.input_prior(5.0)
    name = "fs3d" if dummy_dims == 0 else f"fs3d-dummy-{3 + dummy_dims}"

    def evaluate(x, _pca=pca):
        return danger_map(x, pca=_pca)

    def evaluate_batch(X, _pca=pca):
        states = _pca.lift(np.atleast_2d(X))
        return danger_map_batch(states)

    return BlackBoxProblem(name, pca.dim, bounds, prior, evaluate,
                           evaluate_batch, pca=pca)


_REGISTRY = {
    "oakley": _make_oakley,
    "michalewicz2": _make_michalewicz2,
    "oscillator-m2": lambda: _make_oscillator(2),
    "oscillator-m10": lambda: _make_oscillator(10),
    "borehole": _make_borehole,
    "fs3d": lambda: _make_fs3d(0),
    "fs3d-dummy-10": lambda: _make_fs3d(7),
    "fs3d-dummy-20": lambda: _make_fs3d(17),
    "fs3d-dummy-30": lambda: _make_fs3d(27),
}

PROBLEM_NAMES = tuple(_REGISTRY)


@lru_cache(maxsize=None)
def get_problem(name):
    """Look up a benchmark problem by registry name."""
    try:
        factory = _REGISTRY[name]
    except KeyError:
        raise ValueError(f"unknown problem: {name!r}") from None
    return factory()


def list_problems():
    """Registered problem names in stable order."""
    return list(PROBLEM_NAMES)
