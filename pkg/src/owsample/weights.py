"""Likelihood-ratio machinery.

The likelihood ratio w(x) = p_x(x) / p_mu(mu(x)) compares how often an
input occurs against how common its predicted output is.  This module
estimates the output density p_mu with a fast binned-FFT kernel density
estimate, evaluates w and its analytic gradient, and compresses w into a
Gaussian mixture so that the variance-reduction acquisition integrals
stay closed-form.
"""

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.interpolate import CubicHermiteSpline
from scipy.linalg import cholesky, solve_triangular
from scipy.signal import fftconvolve

from . import gp

__all__ = [
    "OutputDensity",
    "GaussianMixtureWeight",
    "kde_1d",
    "estimate_output_density",
    "output_density_with_samples",
    "likelihood_ratio",
    "likelihood_ratio_grad",
    "fit_gmm_weight",
    "gmm_eval",
    "gmm_eval_grad",
    "select_n_gmm",
]

GRID_SIZE = 1024
DENSITY_FLOOR_FRACTION = 1e-9

# Fine-grid refinement for the binned KDE: bins of at most bandwidth/512
# keep the linear-binning error below the 1e-6 direct-sum tolerance.
_KDE_REFINE = 512
_KDE_MAX_BINS = 1 << 21
_KERNEL_RADIUS_SD = 8.6


def kde_1d(samples, grid, bandwidth):
    """Gaussian-kernel density estimate on a uniform grid.

    Samples are linearly binned onto an internal refinement of the grid
    and convolved with the kernel by FFT; the result matches the direct
    O(N*G) summation to well below 1e-6 absolute.
    """
    samples = np.asarray(samples, dtype=float).ravel()
    if samples.size == 0:
        raise ValueError("samples must be non-empty")
    grid = np.asarray(grid, dtype=float)
    if grid.size < 2:
        raise ValueError("grid must have at least two nodes")
    if bandwidth <= 0:
        raise ValueError("bandwidth must be positive")
    step = (grid[-1] - grid[0]) / (grid.size - 1)

    refine = max(1, math.ceil(step * _KDE_REFINE / bandwidth))
    refine = min(refine, max(1, (_KDE_MAX_BINS - 1) // (grid.size - 1)))
    fine_step = step / refine

    lo = min(grid[0], samples.min())
    hi = max(grid[-1], samples.max())
    n_lo = max(0, math.ceil((grid[0] - lo) / fine_step - 1e-12))
    n_hi = max(0, math.ceil((hi - grid[-1]) / fine_step - 1e-12))
    t0 = grid[0] - n_lo * fine_step
    n_fine = n_lo + (grid.size - 1) * refine + 1 + n_hi

    pos = (samples - t0) / fine_step
    idx = np.clip(np.floor(pos).astype(np.int64), 0, n_fine - 2)
    frac = np.clip(pos - idx, 0.0, 1.0)
    counts = np.zeros(n_fine)
    np.add.at(counts, idx, 1.0 - frac)
    np.add.at(counts, idx + 1, frac)

    radius = min(int(math.ceil(_KERNEL_RADIUS_SD * bandwidth / fine_step)),
                 n_fine)
    u = np.arange(-radius, radius + 1) * (fine_step / bandwidth)
    kernel = np.exp(-0.5 * u * u)
    dens = fftconvolve(counts, kernel, mode="same")
    dens = dens / (samples.size * bandwidth * math.sqrt(2.0 * math.pi))
    out = dens[n_lo:n_lo + (grid.size - 1) * refine + 1:refine]
    return np.maximum(out, 0.0)


def scott_bandwidth(samples):
    """Scott's rule bandwidth for a univariate Gaussian kernel."""
    samples = np.asarray(samples, dtype=float)
    return 1.06 * float(np.std(samples)) * samples.size ** (-0.2)


@dataclass(frozen=True)
class OutputDensity:
    """Output density p_mu sampled on a uniform grid.

    Evaluation uses a C1 cubic interpolant whose node slopes are the
    central differences of the grid density, so the analytic derivative
    used in gradient formulas is the exact derivative of the evaluated
    curve.  Queries outside the grid clamp to the edge values.
    """

    grid: np.ndarray
    density: np.ndarray
    bandwidth: float

    @cached_property
    def _spline(self):
        g, rho = self.grid, self.density
        slopes = np.gradient(rho, g)
        return CubicHermiteSpline(g, rho, slopes)

    @cached_property
    def _dspline(self):
        return self._spline.derivative()

    @property
    def max_density(self):
        return float(np.max(self.density))

    @property
    def floor(self):
        return DENSITY_FLOOR_FRACTION * self.max_density

    def eval(self, y):
        """Density at y (scalar or array), clamped to the grid range."""
        y = np.asarray(y, dtype=float)
        yc = np.clip(y, self.grid[0], self.grid[-1])
        out = np.maximum(self._spline(yc), 0.0)
        return float(out) if out.ndim == 0 else out

    def deriv(self, y):
        """Derivative of the evaluated density curve; zero off the grid."""
        y = np.asarray(y, dtype=float)
        yc = np.clip(y, self.grid[0], self.grid[-1])
        out = self._dspline(yc)
        inside = (y >= self.grid[0]) & (y <= self.grid[-1])
        out = np.where(inside, out, 0.0)
        return float(out) if out.ndim == 0 else out


def output_density_with_samples(model, prior, n_samples=100_000,
                                sampling="prior", rng=None,
                                grid_size=GRID_SIZE):
    """Estimate p_mu and return the samples used.

    Returns (OutputDensity, inputs, mu_values) so callers can reuse the
    sample set, e.g. for fitting the weight mixture.
    """
    if n_samples < 1000:
        raise ValueError("need at least 1000 samples")
    if rng is None:
        rng = np.random.default_rng(0)
    if sampling == "prior":
        X = prior.sample(n_samples, rng)
    elif sampling == "uniform":
        X = rng.uniform(prior.bounds.lo, prior.bounds.hi,
                        size=(n_samples, prior.dim))
    else:
        raise ValueError(f"unknown sampling scheme: {sampling!r}")
    mu = gp.posterior_mean(model, X)
    outdens = density_from_samples(mu, grid_size=grid_size)
    return outdens, X, mu


def density_from_samples(values, grid_size=GRID_SIZE):
    """KDE of a univariate sample set on an auto-sized grid."""
    values = np.asarray(values, dtype=float).ravel()
    span = float(values.max() - values.min())
    scale_floor = 1e-12 * max(1.0, abs(float(np.mean(values))))
    bw = max(scott_bandwidth(values), span / grid_size, scale_floor)
    grid = np.linspace(values.min() - 3.0 * bw, values.max() + 3.0 * bw,
                       grid_size)
    dens = kde_1d(values, grid, bw)
    return OutputDensity(grid=grid, density=dens, bandwidth=bw)


def estimate_output_density(model, prior, n_samples=100_000, sampling="prior",
                            rng=None, grid_size=GRID_SIZE):
    """Estimate the density of the posterior mean under the input prior."""
    outdens, _, _ = output_density_with_samples(
        model, prior, n_samples=n_samples, sampling=sampling, rng=rng,
        grid_size=grid_size)
    return outdens


def likelihood_ratio(x, prior, model, outdens):
    """w(x) = p_x(x) / max(p_mu(mu(x)), floor), batch-aware."""
    px = prior.pdf(x)
    mu = gp.posterior_mean(model, x)
    pm = outdens.eval(mu)
    pm = np.maximum(pm, outdens.floor)
    return px / pm


def likelihood_ratio_grad(x, prior, model, outdens):
    """Analytic gradient of the likelihood ratio at one point."""
    x = np.asarray(x, dtype=float).ravel()
    px = prior.pdf(x)
    dpx = prior.pdf_grad(x)
    mu = gp.posterior_mean(model, x)
    pm_raw = outdens.eval(mu)
    if pm_raw <= outdens.floor:
        return dpx / outdens.floor
    dpm = outdens.deriv(mu)
    dmu = gp.posterior_mean_grad(model, x)
    return (dpx * pm_raw - dpm * dmu * px) / pm_raw ** 2


@dataclass(frozen=True)
class GaussianMixtureWeight:
    """Gaussian-mixture approximation of the likelihood ratio.

    The component weights are positive but do not sum to one: they carry
    the overall mass of w, so the mixture approximates w itself rather
    than a probability density.
    """

    weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.weights, dtype=float))
        m = np.atleast_2d(np.asarray(self.means, dtype=float))
        C = np.asarray(self.covariances, dtype=float)
        if C.ndim == 2:
            C = C[None, :, :]
        object.__setattr__(self, "weights", a)
        object.__setattr__(self, "means", m)
        object.__setattr__(self, "covariances", C)
        k, d = m.shape
        if a.shape != (k,) or C.shape != (k, d, d):
            raise ValueError("inconsistent mixture shapes")
        if np.any(a <= 0):
            raise ValueError("component weights must be positive")
        for S in C:
            try:
                cholesky(S, lower=True)
            except np.linalg.LinAlgError as exc:
                raise ValueError("component covariance must be SPD") from exc

    @property
    def n_components(self):
        return self.weights.size

    @property
    def dim(self):
        return self.means.shape[1]

    @cached_property
    def _chols(self):
        return [cholesky(S, lower=True) for S in self.covariances]

    def component_lognorms(self):
        d = self.dim
        return np.array([
            -0.5 * d * math.log(2 * math.pi) - np.sum(np.log(np.diag(L)))
            for L in self._chols])


def gmm_eval(gmm, x):
    """Mixture value sum_i alpha_i N(x; omega_i, Sigma_i), batch-aware."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    out = np.zeros(X.shape[0])
    lognorms = gmm.component_lognorms()
    for a, mu, L, ln in zip(gmm.weights, gmm.means, gmm._chols, lognorms):
        Z = solve_triangular(L, (X - mu).T, lower=True)
        out += a * np.exp(ln - 0.5 * np.sum(Z * Z, axis=0))
    return float(out[0]) if single else out


def gmm_eval_grad(gmm, x):
    """Gradient of the mixture value at one point."""
    x = np.asarray(x, dtype=float).ravel()
    out = np.zeros_like(x)
    lognorms = gmm.component_lognorms()
    for a, mu, L, ln in zip(gmm.weights, gmm.means, gmm._chols, lognorms):
        z = solve_triangular(L, x - mu, lower=True)
        val = a * math.exp(ln - 0.5 * float(z @ z))
        s = solve_triangular(L.T, z, lower=False)
        out -= val * s
    return out


def _log_gauss(X, mean, chol):
    d = mean.size
    Z = solve_triangular(chol, (X - mean).T, lower=True)
    return (-0.5 * d * math.log(2 * math.pi)
            - float(np.sum(np.log(np.diag(chol))))
            - 0.5 * np.sum(Z * Z, axis=0))


def _kmeanspp_seed(X, W, k, rng):
    """k-means++ style seeding from the weighted empirical distribution."""
    n = X.shape[0]
    p = W / W.sum()
    means = [X[rng.choice(n, p=p)]]
    for _ in range(1, k):
        d2 = np.min(
            [np.sum((X - m) ** 2, axis=1) for m in means], axis=0)
        score = p * d2
        tot = score.sum()
        if tot <= 0:
            means.append(X[rng.choice(n, p=p)])
        else:
            means.append(X[rng.choice(n, p=score / tot)])
    return np.array(means)


def fit_gmm_weight(samples, weights, n_gmm, rng=None, *, mass_factor=1.0,
                   max_iter=200, tol=1e-6, max_reinit=3):
    """Weighted EM fit of a Gaussian mixture to sample weights.

    The mixture is scaled so its total mass equals
    mean(weights) * mass_factor, the Monte-Carlo estimate of the mass of
    the weighted function under the sampling scheme used to draw
    ``samples``.  The weighted log-likelihood is asserted non-decreasing
    across EM iterations.
    """
    X = np.atleast_2d(np.asarray(samples, dtype=float))
    w = np.asarray(weights, dtype=float).ravel()
    if w.shape[0] != X.shape[0]:
        raise ValueError("weights length must match the sample count")
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    if not np.any(w > 0):
        raise ValueError("weights must not be all zero")
    if n_gmm < 1:
        raise ValueError("n_gmm must be at least 1")
    if rng is None:
        rng = np.random.default_rng(0)

    n, d = X.shape
    W = w / w.sum()
    mass = float(np.mean(w)) * mass_factor

    mu_w = W @ X
    diff = X - mu_w
    cov_w = (W[:, None] * diff).T @ diff
    reg = 1e-6 * float(np.trace(cov_w)) / d + 1e-300
    cov_w = cov_w + reg * np.eye(d)

    k = int(n_gmm)
    p_seed = W / W.sum()
    while True:
        means = _kmeanspp_seed(X, W, k, rng)
        covs = np.array([cov_w.copy() for _ in range(k)])
        pis = np.full(k, 1.0 / k)
        prev_ll = -math.inf
        reinits = 0
        failed = False
        it = 0
        while it < max_iter:
            it += 1
            chols = [None] * k
            bad = []
            for i, S in enumerate(covs):
                try:
                    chols[i] = cholesky(S, lower=True)
                except np.linalg.LinAlgError:
                    bad.append(i)
            if bad:
                reinits += 1
                if reinits > max_reinit:
                    failed = True
                    break
                for i in bad:
                    means[i] = X[rng.choice(n, p=p_seed)]
                    covs[i] = cov_w.copy()
                prev_ll = -math.inf
                continue
            logp = np.stack([math.log(pis[i]) + _log_gauss(X, means[i],
                                                           chols[i])
                             for i in range(k)], axis=1)
            m = logp.max(axis=1)
            lse = m + np.log(np.sum(np.exp(logp - m[:, None]), axis=1))
            ll = float(W @ lse)
            assert ll >= prev_ll - 1e-9 * (1.0 + abs(prev_ll)), \
                "weighted EM log-likelihood decreased"
            resp = np.exp(logp - lse[:, None]) * W[:, None]
            nk = resp.sum(axis=0)
            if np.any(nk < 1e-12):
                reinits += 1
                if reinits > max_reinit:
                    failed = True
                    break
                for i in np.nonzero(nk < 1e-12)[0]:
                    means[i] = X[rng.choice(n, p=p_seed)]
                    covs[i] = cov_w.copy()
                prev_ll = -math.inf
                continue
            done = abs(ll - prev_ll) <= tol * (1.0 + abs(ll))
            prev_ll = ll
            pis = nk / nk.sum()
            means = (resp.T @ X) / nk[:, None]
            for i in range(k):
                diff = X - means[i]
                covs[i] = ((resp[:, i, None] * diff).T @ diff) / nk[i]
                covs[i] += reg * np.eye(d)
            if done:
                break
        if not failed:
            break
        if k > 1:
            k -= 1
        else:
            raise RuntimeError("EM failed to fit even one component")

    order = np.argsort(-pis)
    return GaussianMixtureWeight(weights=pis[order] * mass,
                                 means=means[order],
                                 covariances=covs[order])


def select_n_gmm(samples, weights, candidates, rng=None, criterion="bic",
                 mass_factor=1.0):
    """Pick the mixture size minimizing AIC or BIC; off by default upstream."""
    X = np.atleast_2d(np.asarray(samples, dtype=float))
    w = np.asarray(weights, dtype=float).ravel()
    if rng is None:
        rng = np.random.default_rng(0)
    n, d = X.shape
    W = w / w.sum()
    n_eff = float(w.sum()) ** 2 / float(np.sum(w * w))
    best = None
    for k in candidates:
        gmm = fit_gmm_weight(X, w, k, rng, mass_factor=mass_factor)
        pis = gmm.weights / gmm.weights.sum()
        logp = np.stack([np.log(pis[i]) + _log_gauss(X, gmm.means[i],
                                                     gmm._chols[i])
                         for i in range(gmm.n_components)], axis=1)
        m = logp.max(axis=1)
        ll = float(W @ (m + np.log(np.sum(np.exp(logp - m[:, None]), axis=1))))
        p = gmm.n_components * (1 + d + d * (d + 1) // 2) - 1
        if criterion == "aic":
            score = 2 * p - 2 * n_eff * ll
        elif criterion == "bic":
            score = p * math.log(n_eff) - 2 * n_eff * ll
        else:
            raise ValueError(f"unknown criterion: {criterion!r}")
        if best is None or score < best[0]:
            best = (score, gmm)
    return best[1]
