"""Exact Gaussian-process regression with a squared-exponential ARD kernel.

Provides maximum-likelihood hyperparameter training, posterior queries
(mean, variance, covariance, mean gradient), and the closed-form kernel
integrals needed by the variance-reduction acquisition functions:

* ``khat``  -- the unweighted squared-kernel integral over all of R^d,
* ``khat_gmm`` -- the same integral weighted by a Gaussian density.

The kernel is parameterized as

    k(x, x') = signal_variance * exp(-(x - x')^T Theta^{-1} (x - x') / 2)

with ``Theta`` diagonal; ``KernelHyperparams.lengthscales`` holds the
diagonal of ``Theta`` (units of squared input distance).
"""

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular
from scipy.optimize import minimize

__all__ = [
    "KernelHyperparams",
    "Dataset",
    "GPModel",
    "FactorizationError",
    "TrainingError",
    "rbf_kernel",
    "kernel_matrix",
    "fit_gp",
    "log_marginal_likelihood",
    "posterior_mean",
    "posterior_var",
    "posterior_cov",
    "posterior_mean_grad",
    "posterior_var_grad",
    "khat",
    "khat_matrix",
    "khat_self",
    "khat_gmm",
    "khat_gmm_matrix",
    "khat_gmm_self",
]

# Jitter escalation used whenever a Cholesky factorization fails.
JITTER_START = 1e-10
JITTER_MAX = 1e-4

# Chunk size for batched posterior queries (keeps n-by-m kernel blocks small).
_CHUNK = 16384


class FactorizationError(RuntimeError):
    """Covariance matrix is not positive definite even at maximum jitter."""


class TrainingError(RuntimeError):
    """Every hyperparameter optimization start failed."""


@dataclass(frozen=True)
class KernelHyperparams:
    """Kernel and noise hyperparameters.

    Attributes
    ----------
    signal_variance : float
        Prior variance of the process, > 0.
    lengthscales : ndarray, shape (d,)
        Diagonal of the ARD scale matrix Theta, all > 0.
    noise_variance : float
        Observation noise variance, >= 0.
    """

    signal_variance: float
    lengthscales: np.ndarray
    noise_variance: float = 0.0

    def __post_init__(self):
        ls = np.atleast_1d(np.asarray(self.lengthscales, dtype=float)).copy()
        object.__setattr__(self, "lengthscales", ls)
        object.__setattr__(self, "signal_variance", float(self.signal_variance))
        object.__setattr__(self, "noise_variance", float(self.noise_variance))
        if not np.isfinite(self.signal_variance) or self.signal_variance <= 0:
            raise ValueError("signal_variance must be positive")
        if ls.ndim != 1 or not np.all(np.isfinite(ls)) or np.any(ls <= 0):
            raise ValueError("lengthscales must be a positive vector")
        if not np.isfinite(self.noise_variance) or self.noise_variance < 0:
            raise ValueError("noise_variance must be nonnegative")

    @property
    def dim(self):
        return self.lengthscales.size


@dataclass(frozen=True)
class Dataset:
    """Training data {X, y} with X of shape (n, d) and y of shape (n,)."""

    inputs: np.ndarray
    outputs: np.ndarray

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.inputs, dtype=float))
        y = np.atleast_1d(np.asarray(self.outputs, dtype=float))
        object.__setattr__(self, "inputs", X)
        object.__setattr__(self, "outputs", y)
        if X.ndim != 2 or X.shape[0] < 1:
            raise ValueError("inputs must be an (n, d) matrix with n >= 1")
        if y.shape != (X.shape[0],):
            raise ValueError("outputs length must match number of input rows")
        if not np.all(np.isfinite(X)) or not np.all(np.isfinite(y)):
            raise ValueError("dataset must be finite")

    @property
    def n(self):
        return self.inputs.shape[0]

    @property
    def dim(self):
        return self.inputs.shape[1]

    def augmented(self, x, y):
        """Return a new dataset with one extra observation appended."""
        x = np.asarray(x, dtype=float).reshape(1, -1)
        return Dataset(np.vstack([self.inputs, x]),
                       np.append(self.outputs, float(y)))


@dataclass(frozen=True)
class GPModel:
    """Trained surrogate: hyperparameters, data, and solved linear system.

    ``chol_factor`` is the lower Cholesky factor of
    K = k(X, X) + noise_variance * I (plus jitter when required), and
    ``weights`` is K^{-1} (y - prior_mean), so posterior queries are
    matrix-vector products.
    """

    prior_mean: float
    hyper: KernelHyperparams
    data: Dataset
    chol_factor: np.ndarray
    weights: np.ndarray

    @property
    def n(self):
        return self.data.n

    @property
    def dim(self):
        return self.data.dim


def _scaled(X, lengthscales):
    return np.asarray(X, dtype=float) / np.sqrt(lengthscales)


def _sqdist(A, B):
    """Pairwise squared distances between rows of A and B."""
    aa = np.sum(A * A, axis=1)
    bb = np.sum(B * B, axis=1)
    d2 = aa[:, None] + bb[None, :] - 2.0 * (A @ B.T)
    return np.maximum(d2, 0.0)


def kernel_matrix(X1, X2, hyper):
    """Noise-free kernel matrix k(X1, X2), shape (n1, n2)."""
    A = _scaled(np.atleast_2d(X1), hyper.lengthscales)
    B = _scaled(np.atleast_2d(X2), hyper.lengthscales)
    return hyper.signal_variance * np.exp(-0.5 * _sqdist(A, B))


def rbf_kernel(x1, x2, hyper):
    """Evaluate the ARD kernel between two points.

    Returns signal_variance * exp(-(x1-x2)^T Theta^{-1} (x1-x2) / 2).
    """
    x1 = np.atleast_1d(np.asarray(x1, dtype=float))
    x2 = np.atleast_1d(np.asarray(x2, dtype=float))
    if x1.shape != x2.shape or x1.size != hyper.dim:
        raise ValueError("point dimensions must match the lengthscale count")
    diff = x1 - x2
    return hyper.signal_variance * math.exp(
        -0.5 * float(np.sum(diff * diff / hyper.lengthscales)))


def _kernel_grad_x(x, X, hyper):
    """Gradient of k(x, X_i) with respect to x, stacked as an (n, d) array."""
    X = np.atleast_2d(X)
    kv = kernel_matrix(x.reshape(1, -1), X, hyper).ravel()
    return -kv[:, None] * (x[None, :] - X) / hyper.lengthscales[None, :]


def _chol_with_jitter(K, signal_variance):
    """Lower Cholesky factor of K, escalating jitter on failure."""
    try:
        return cholesky(K, lower=True), 0.0
    except np.linalg.LinAlgError:
        pass
    jitter = JITTER_START
    while jitter <= JITTER_MAX * (1.0 + 1e-12):
        try:
            L = cholesky(K + jitter * signal_variance * np.eye(K.shape[0]),
                         lower=True)
            return L, jitter * signal_variance
        except np.linalg.LinAlgError:
            jitter *= 10.0
    raise FactorizationError(
        "covariance matrix not positive definite at maximum jitter "
        f"{JITTER_MAX:g} * signal_variance")


def _chol_solve_longdouble(K, b):
    """Cholesky solve carried out in extended precision.

    Noiseless kernel matrices sit near the float64 conditioning limit;
    an 80-bit factorization keeps the interpolation weights accurate.
    """
    A = K.astype(np.longdouble).copy()
    n = A.shape[0]
    for j in range(n):
        pivot = A[j, j] - A[j, :j] @ A[j, :j]
        if not pivot > 0:
            raise np.linalg.LinAlgError("matrix not positive definite")
        A[j, j] = np.sqrt(pivot)
        if j + 1 < n:
            A[j + 1:, j] = (A[j + 1:, j] - A[j + 1:, :j] @ A[j, :j]) / A[j, j]
    x = b.astype(np.longdouble).copy()
    for j in range(n):
        x[j] = (x[j] - A[j, :j] @ x[:j]) / A[j, j]
    for j in range(n - 1, -1, -1):
        x[j] = (x[j] - A[j + 1:, j] @ x[j + 1:]) / A[j, j]
    return x.astype(float)


def _build_model(data, hyper, prior_mean):
    K = kernel_matrix(data.inputs, data.inputs, hyper)
    K = 0.5 * (K + K.T)
    K[np.diag_indices_from(K)] += hyper.noise_variance
    L, _ = _chol_with_jitter(K, hyper.signal_variance)
    b = data.outputs - prior_mean
    if hyper.noise_variance <= 1e-8 * hyper.signal_variance:
        try:
            w = _chol_solve_longdouble(K, b)
        except np.linalg.LinAlgError:
            w = cho_solve((L, True), b)
    else:
        w = cho_solve((L, True), b)
    return GPModel(prior_mean=float(prior_mean), hyper=hyper, data=data,
                   chol_factor=L, weights=w)


def _lml_value_grad(data, prior_mean, sigf2, theta, sige2):
    """Log marginal likelihood and gradient w.r.t. log hyperparameters.

    Gradient layout: [d/dlog sigf2, d/dlog theta_1..d, d/dlog sige2].
    Raises np.linalg.LinAlgError when K cannot be factorized.
    """
    X, y = data.inputs, data.outputs
    n, d = X.shape
    hyper = KernelHyperparams(sigf2, theta, 0.0)
    Kf = kernel_matrix(X, X, hyper)
    Kf = 0.5 * (Kf + Kf.T)
    K = Kf + sige2 * np.eye(n)
    L = cholesky(K, lower=True)
    r = y - prior_mean
    alpha = cho_solve((L, True), r)
    lml = (-0.5 * float(r @ alpha)
           - float(np.sum(np.log(np.diag(L))))
           - 0.5 * n * math.log(2.0 * math.pi))
    Kinv = cho_solve((L, True), np.eye(n))
    B = np.outer(alpha, alpha) - Kinv
    grad = np.empty(2 + d)
    grad[0] = 0.5 * float(np.sum(B * Kf))
    for j in range(d):
        D2 = (X[:, j, None] - X[None, :, j]) ** 2
        grad[1 + j] = 0.5 * float(np.sum(B * (Kf * D2))) / (2.0 * theta[j])
    grad[1 + d] = 0.5 * float(np.trace(B)) * sige2
    return lml, grad


def log_marginal_likelihood(hyper, data, prior_mean):
    """GP evidence and its gradient with respect to log hyperparameters.

    Returns
    -------
    (float, ndarray)
        The log marginal likelihood and the gradient laid out as
        [signal_variance, lengthscale_1..d, noise_variance], each
        differentiated in log space.
    """
    try:
        return _lml_value_grad(data, float(prior_mean), hyper.signal_variance,
                               hyper.lengthscales, hyper.noise_variance)
    except np.linalg.LinAlgError as exc:
        raise FactorizationError(str(exc)) from exc


def _resolve_prior_mean(mode, y):
    if mode == "zero":
        return 0.0
    if mode == "data-mean":
        return float(np.mean(y))
    if isinstance(mode, (int, float)) and not isinstance(mode, bool):
        return float(mode)
    raise ValueError(f"unknown prior_mean_mode: {mode!r}")


def _heuristic_hypers(data):
    X, y = data.inputs, data.outputs
    var_y = float(np.var(y))
    out_scale = max(var_y, 1e-12 * (1.0 + float(np.mean(y)) ** 2), 1e-12)
    rng_x = np.ptp(X, axis=0)
    rng_x = np.maximum(rng_x, 1e-8 * (1.0 + np.abs(X).max(axis=0)))
    theta0 = (rng_x / 4.0) ** 2
    return out_scale, theta0


def fit_gp(data, prior_mean_mode="data-mean", noise_mode="trained", *,
           hyper=None, rng=None, n_starts=8, warm_hyper=None):
    """Fit a GP model, training hyperparameters by maximum likelihood.

    Parameters
    ----------
    data : Dataset
    prior_mean_mode : {"zero", "data-mean"} or float
        Constant prior mean; "data-mean" uses the output average.
    noise_mode : "trained" or float
        Train the noise variance jointly, or fix it at the given value.
    hyper : KernelHyperparams, optional
        Skip training and use these hyperparameters as given.
    rng : numpy Generator, optional
        Source of the random optimization starts.
    n_starts : int
        Total number of local optimizations (one warm start plus
        log-uniform restarts around a data-driven scale).
    warm_hyper : KernelHyperparams, optional
        Hyperparameters of a previous fit, used as the first start.
    """
    m0 = _resolve_prior_mean(prior_mean_mode, data.outputs)
    if hyper is not None:
        return _build_model(data, hyper, m0)
    if data.n < 2:
        raise ValueError("training hyperparameters requires n >= 2")
    if rng is None:
        rng = np.random.default_rng(0)

    train_noise = noise_mode == "trained"
    if not train_noise:
        noise_fixed = float(noise_mode)
        if noise_fixed < 0:
            raise ValueError("fixed noise variance must be nonnegative")

    out_scale, theta0 = _heuristic_hypers(data)
    d = data.dim
    n_free = 1 + d + (1 if train_noise else 0)

    def objective(z):
        sigf2 = math.exp(z[0])
        theta = np.exp(z[1:1 + d])
        if train_noise:
            sige2 = math.exp(z[1 + d])
        else:
            # A floor at the jitter scale keeps the noiseless evidence
            # ridge away from numerically singular kernel matrices.
            sige2 = max(noise_fixed, JITTER_START * sigf2)
        try:
            lml, g = _lml_value_grad(data, m0, sigf2, theta, sige2)
        except np.linalg.LinAlgError:
            return 1e25, np.zeros(n_free)
        grad = -g[:n_free] if train_noise else -g[:1 + d]
        return -lml, grad

    base = np.empty(n_free)
    base[0] = math.log(out_scale)
    base[1:1 + d] = np.log(theta0)
    if train_noise:
        base[1 + d] = math.log(1e-4 * out_scale)

    lo = base - math.log(1e8)
    hi = base + math.log(1e8)
    if train_noise:
        lo[1 + d] = math.log(1e-10 * out_scale)
        hi[1 + d] = math.log(4.0 * out_scale)
    bounds = list(zip(lo, hi))

    starts = []
    if warm_hyper is not None:
        z = np.empty(n_free)
        z[0] = math.log(warm_hyper.signal_variance)
        z[1:1 + d] = np.log(warm_hyper.lengthscales)
        if train_noise:
            z[1 + d] = math.log(max(warm_hyper.noise_variance,
                                    1e-12 * out_scale))
        starts.append(np.clip(z, lo, hi))
    else:
        starts.append(base.copy())
    for _ in range(max(0, n_starts - 1)):
        z = base + rng.uniform(-math.log(1e3), math.log(1e3), size=n_free)
        starts.append(np.clip(z, lo, hi))

    best = None
    failures = []
    for z0 in starts:
        try:
            res = minimize(objective, z0, jac=True, method="L-BFGS-B",
                           bounds=bounds, options={"maxiter": 80})
        except Exception as exc:  # pragma: no cover - scipy internal failure
            failures.append(str(exc))
            continue
        if not np.isfinite(res.fun) or res.fun >= 1e24:
            failures.append("non-finite objective")
            continue
        if best is None or res.fun < best.fun:
            best = res
    if best is None:
        raise TrainingError(
            f"all {len(starts)} optimizer starts failed: {failures}")

    z = best.x
    sigf2 = math.exp(z[0])
    theta = np.exp(z[1:1 + d])
    sige2 = math.exp(z[1 + d]) if train_noise else noise_fixed
    hyper = KernelHyperparams(sigf2, theta, sige2)
    return _build_model(data, hyper, m0)


def _query_matrix(model, X):
    X = np.asarray(X, dtype=float)
    single = X.ndim == 1
    Xq = np.atleast_2d(X)
    if Xq.shape[1] != model.dim:
        raise ValueError("query dimension does not match the model")
    return Xq, single


def posterior_mean(model, x):
    """Posterior mean at one point (d,) or a batch (m, d)."""
    Xq, single = _query_matrix(model, x)
    out = np.empty(Xq.shape[0])
    for s in range(0, Xq.shape[0], _CHUNK):
        block = Xq[s:s + _CHUNK]
        out[s:s + _CHUNK] = kernel_matrix(block, model.data.inputs,
                                          model.hyper) @ model.weights
    out += model.prior_mean
    return float(out[0]) if single else out


def posterior_var(model, x):
    """Posterior variance at one point (d,) or a batch (m, d), clamped >= 0."""
    Xq, single = _query_matrix(model, x)
    out = np.empty(Xq.shape[0])
    L = model.chol_factor
    for s in range(0, Xq.shape[0], _CHUNK):
        block = Xq[s:s + _CHUNK]
        kxX = kernel_matrix(model.data.inputs, block, model.hyper)
        v = solve_triangular(L, kxX, lower=True, check_finite=False)
        out[s:s + _CHUNK] = model.hyper.signal_variance - np.sum(v * v, axis=0)
    out = np.maximum(out, 0.0)
    return float(out[0]) if single else out


def posterior_cov(model, x, x2):
    """Posterior covariance between two points."""
    x = np.asarray(x, dtype=float).ravel()
    x2 = np.asarray(x2, dtype=float).ravel()
    L = model.chol_factor
    k1 = kernel_matrix(model.data.inputs, x.reshape(1, -1), model.hyper)
    k2 = kernel_matrix(model.data.inputs, x2.reshape(1, -1), model.hyper)
    v1 = solve_triangular(L, k1, lower=True, check_finite=False)
    v2 = solve_triangular(L, k2, lower=True, check_finite=False)
    return rbf_kernel(x, x2, model.hyper) - float(v1.ravel() @ v2.ravel())


def posterior_mean_grad(model, x):
    """Analytic gradient of the posterior mean at a point."""
    x = np.asarray(x, dtype=float).ravel()
    J = _kernel_grad_x(x, model.data.inputs, model.hyper)
    return J.T @ model.weights


def posterior_var_grad(model, x):
    """Analytic gradient of the posterior variance at a point."""
    return posterior_var_and_grad(model, x)[1]


def posterior_var_and_grad(model, x):
    """Posterior variance and its gradient, sharing one linear solve."""
    x = np.asarray(x, dtype=float).ravel()
    hyper = model.hyper
    diff = x[None, :] - model.data.inputs
    kv = hyper.signal_variance * np.exp(
        -0.5 * np.sum(diff * diff / hyper.lengthscales[None, :], axis=1))
    u = cho_solve((model.chol_factor, True), kv, check_finite=False)
    J = -kv[:, None] * diff / hyper.lengthscales[None, :]
    s2 = max(hyper.signal_variance - float(kv @ u), 0.0)
    return s2, -2.0 * (J.T @ u)


# ---------------------------------------------------------------------------
# Closed-form kernel integrals.
#
# khat(x1, x2)     = int k(x1, s) k(s, x2) ds            over all of R^d
# khat_gmm(x1, x2) = int k(x1, s) k(s, x2) N(s; w, S) ds
#
# Both reduce to products of Gaussian factors for the RBF kernel.  The
# weighted integral evaluates to
#
#   sigf^4 |2 S Theta^{-1} + I|^{-1/2}
#        * exp(-(x1-x2)^T (2 Theta)^{-1} (x1-x2) / 2)
#        * exp(-(m-w)^T (Theta/2 + S)^{-1} (m-w) / 2),   m = (x1+x2)/2,
#
# which is verified against direct quadrature in the test suite.
# ---------------------------------------------------------------------------


def khat_self(hyper):
    """khat(x, x), a constant for the RBF kernel."""
    return (hyper.signal_variance ** 2 * math.pi ** (hyper.dim / 2.0)
            * math.sqrt(float(np.prod(hyper.lengthscales))))


def khat_matrix(X1, X2, hyper):
    """Unweighted squared-kernel integral for all row pairs, shape (n1, n2)."""
    doubled = KernelHyperparams(hyper.signal_variance,
                                2.0 * hyper.lengthscales, 0.0)
    c = (hyper.signal_variance * math.pi ** (hyper.dim / 2.0)
         * math.sqrt(float(np.prod(hyper.lengthscales))))
    return c * kernel_matrix(X1, X2, doubled)


def khat(x1, x2, hyper):
    """Unweighted squared-kernel integral and its gradient w.r.t. x1."""
    x1 = np.asarray(x1, dtype=float).ravel()
    x2 = np.asarray(x2, dtype=float).ravel()
    val = float(khat_matrix(x1.reshape(1, -1), x2.reshape(1, -1), hyper))
    grad = -val * (x1 - x2) / (2.0 * hyper.lengthscales)
    return val, grad


class _GaussComponent:
    """Precomputed factors for the Gaussian-weighted kernel integral."""

    def __init__(self, hyper, omega, sigma):
        d = hyper.dim
        omega = np.asarray(omega, dtype=float).ravel()
        sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
        if omega.size != d or sigma.shape != (d, d):
            raise ValueError("component dimensions must match the kernel")
        if not np.allclose(sigma, sigma.T, atol=1e-10):
            raise ValueError("component covariance must be symmetric")
        try:
            cholesky(sigma, lower=True)
        except np.linalg.LinAlgError as exc:
            raise ValueError("component covariance must be SPD") from exc
        self.omega = omega
        theta = hyper.lengthscales
        det = float(np.linalg.det(2.0 * sigma / theta[None, :] + np.eye(d)))
        self.c0 = hyper.signal_variance ** 2 / math.sqrt(det)
        self.A = sigma + 0.5 * np.diag(theta)
        self.A_chol = cholesky(self.A, lower=True)
        self.A_inv = cho_solve((self.A_chol, True), np.eye(d))
        self.theta = theta

    def _exp_pair(self, X1, X2):
        """Gaussian factors for all row pairs of X1 (n1,d) and X2 (n2,d)."""
        inv2theta = 1.0 / (2.0 * self.theta)
        A1 = X1 * np.sqrt(inv2theta)
        A2 = X2 * np.sqrt(inv2theta)
        q1 = _sqdist(A1, A2)
        # (m - w)^T A^{-1} (m - w) with m the pairwise midpoint, expanded so
        # everything is a matrix product.
        H1 = solve_triangular(self.A_chol, (0.5 * X1 - 0.5 * self.omega).T,
                              lower=True, check_finite=False).T
        H2 = solve_triangular(self.A_chol, (0.5 * X2 - 0.5 * self.omega).T,
                              lower=True, check_finite=False).T
        q2 = (np.sum(H1 * H1, axis=1)[:, None]
              + np.sum(H2 * H2, axis=1)[None, :] + 2.0 * (H1 @ H2.T))
        return np.exp(-0.5 * (q1 + q2))

    def value_matrix(self, X1, X2):
        return self.c0 * self._exp_pair(np.atleast_2d(X1), np.atleast_2d(X2))

    def value_self(self, X):
        """khat_gmm(x, x) for each row of X."""
        X = np.atleast_2d(X)
        H = solve_triangular(self.A_chol, (X - self.omega).T, lower=True,
                             check_finite=False).T
        return self.c0 * np.exp(-0.5 * np.sum(H * H, axis=1))

    def value_vec(self, X, x):
        """khat_gmm(X_i, x) against a single point, shape (n,)."""
        diff = X - x[None, :]
        q1 = np.sum(diff * diff / (2.0 * self.theta)[None, :], axis=1)
        m = 0.5 * (X + x[None, :]) - self.omega[None, :]
        q2 = np.sum((m @ self.A_inv) * m, axis=1)
        return self.c0 * np.exp(-0.5 * (q1 + q2))

    def grad_x1(self, x1, X2, values):
        """Gradient w.r.t. x1 of khat_gmm(x1, X2_i), shape (n2, d)."""
        X2 = np.atleast_2d(X2)
        m = 0.5 * (x1[None, :] + X2) - self.omega[None, :]
        t1 = -(x1[None, :] - X2) / (2.0 * self.theta)[None, :]
        t2 = -0.5 * (m @ self.A_inv)
        return values[:, None] * (t1 + t2)


def khat_gmm_matrix(X1, X2, hyper, omega, sigma):
    """Gaussian-weighted squared-kernel integral for all row pairs."""
    return _GaussComponent(hyper, omega, sigma).value_matrix(X1, X2)


def khat_gmm_self(X, hyper, omega, sigma):
    """Gaussian-weighted squared-kernel integral at coincident arguments."""
    return _GaussComponent(hyper, omega, sigma).value_self(X)


def khat_gmm(x1, x2, hyper, omega, sigma):
    """Weighted squared-kernel integral and its gradient w.r.t. x1."""
    x1 = np.asarray(x1, dtype=float).ravel()
    x2 = np.asarray(x2, dtype=float).ravel()
    comp = _GaussComponent(hyper, omega, sigma)
    val = comp.value_matrix(x1.reshape(1, -1), x2.reshape(1, -1)).ravel()
    grad = comp.grad_x1(x1, x2.reshape(1, -1), val)
    return float(val[0]), grad.ravel()
