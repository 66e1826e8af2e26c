"""Property and oracle checks behind the ``verify`` CLI command.

Each check compares an analytic code path against an independent oracle
(quadrature, finite differences, refit-from-scratch, or brute force) and
reports the worst observed error against a fixed tolerance.  The module
is deliberately self-contained so a fresh checkout can be validated in
under two minutes.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import nquad, quad

from . import acquisition as acq
from . import benchmarks as bm
from . import gp
from . import optimize as opt
from . import weights as lw
from .acquisition import AcquisitionContext, AcquisitionKind
from .priors import InputPrior

__all__ = ["CheckResult", "run_all_checks", "CHECKS"]


@dataclass
class CheckResult:
    name: str
    passed: bool
    max_error: float
    tolerance: float
    detail: str = ""


def _random_hyper(rng, d):
    return gp.KernelHyperparams(
        float(rng.uniform(0.5, 2.0)),
        rng.uniform(0.3, 2.0, size=d),
        0.0)


def _random_model(rng, d, n=7, noise=0.0):
    X = rng.uniform(-2.0, 2.0, (n, d))
    y = rng.normal(size=n)
    hyper = gp.KernelHyperparams(float(rng.uniform(0.5, 2.0)),
                                 rng.uniform(0.5, 2.0, size=d), noise)
    return gp.fit_gp(gp.Dataset(X, y), prior_mean_mode=0.0, hyper=hyper)


def _central_diff(f, x, h):
    """Fourth-order central differences (Richardson-extrapolated)."""
    x = np.asarray(x, dtype=float)
    out = np.empty(x.size)
    for j in range(x.size):
        e = np.zeros(x.size)
        e[j] = h
        out[j] = (8.0 * (f(x + e) - f(x - e))
                  - (f(x + 2 * e) - f(x - 2 * e))) / (12.0 * h)
    return out


def check_ghost_point_identity(n_cases=50, tol=1e-8, seed=0):
    """Variance drop from a noiseless ghost observation vs refit oracle.

    Cases are drawn so the augmented covariance stays well conditioned;
    the identity itself assumes exact arithmetic.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    done = 0
    while done < n_cases:
        d = int(rng.integers(1, 4))
        hyper = gp.KernelHyperparams(float(rng.uniform(0.5, 2.0)),
                                     rng.uniform(0.1, 0.5, size=d), 0.0)
        X = rng.uniform(-2.0, 2.0, (5, d))
        y = rng.normal(size=5)
        model = gp.fit_gp(gp.Dataset(X, y), prior_mean_mode=0.0, hyper=hyper)
        x = rng.uniform(-2, 2, d)
        xt = rng.uniform(-2, 2, d)
        s2t = gp.posterior_var(model, xt)
        if s2t < 1e-3 * hyper.signal_variance:
            continue
        cov = gp.posterior_cov(model, x, xt)
        rhs = cov ** 2 / s2t
        if rhs < 1e-6 * hyper.signal_variance:
            continue
        refit = gp.fit_gp(model.data.augmented(xt, gp.posterior_mean(model,
                                                                     xt)),
                          prior_mean_mode=model.prior_mean,
                          hyper=model.hyper)
        lhs = gp.posterior_var(model, x) - gp.posterior_var(refit, x)
        worst = max(worst, abs(lhs - rhs) / abs(rhs))
        done += 1
    return CheckResult("ghost-point variance identity", worst < tol, worst,
                       tol)


def check_khat_quadrature(n_cases=50, tol=1e-6, grad_tol=1e-5, seed=1):
    """Closed-form squared-kernel integral vs adaptive quadrature and FD."""
    rng = np.random.default_rng(seed)
    worst_v = worst_g = 0.0
    for i in range(n_cases):
        d = 1 if i % 2 == 0 else 2
        hyper = _random_hyper(rng, d)
        x1 = rng.uniform(-1.5, 1.5, d)
        x2 = rng.uniform(-1.5, 1.5, d)
        val, grad = gp.khat(x1, x2, hyper)

        def integrand(*s):
            s = np.array(s)
            return (gp.rbf_kernel(x1, s, hyper)
                    * gp.rbf_kernel(s, x2, hyper))

        lim = [(-12, 12)] * d
        ref, _ = nquad(integrand, lim,
                       opts={"epsabs": 1e-12, "epsrel": 1e-10})
        worst_v = max(worst_v, abs(val - ref) / abs(ref))
        fd = _central_diff(lambda z: gp.khat(z, x2, hyper)[0], x1, 1e-5)
        worst_g = max(worst_g,
                      np.linalg.norm(grad - fd)
                      / max(np.linalg.norm(fd), 1e-12))
    ok = worst_v < tol and worst_g < grad_tol
    return CheckResult("squared-kernel integral vs quadrature", ok,
                       max(worst_v, worst_g), tol,
                       f"value {worst_v:.2e}, gradient {worst_g:.2e}")


def check_khat_gmm_quadrature(n_cases=50, tol=1e-6, grad_tol=1e-5, seed=2):
    """Gaussian-weighted kernel integral vs quadrature and FD."""
    rng = np.random.default_rng(seed)
    worst_v = worst_g = 0.0
    for i in range(n_cases):
        d = 1 if i % 2 == 0 else 2
        hyper = _random_hyper(rng, d)
        x1 = rng.uniform(-1.5, 1.5, d)
        x2 = rng.uniform(-1.5, 1.5, d)
        omega = rng.uniform(-1.0, 1.0, d)
        A = rng.uniform(-0.8, 0.8, (d, d))
        sigma = A @ A.T + np.eye(d) * rng.uniform(0.2, 1.0)
        val, grad = gp.khat_gmm(x1, x2, hyper, omega, sigma)

        Sinv = np.linalg.inv(sigma)
        norm = 1.0 / math.sqrt((2 * math.pi) ** d * np.linalg.det(sigma))

        def integrand(*s):
            s = np.array(s)
            dz = s - omega
            return (gp.rbf_kernel(x1, s, hyper) * gp.rbf_kernel(s, x2, hyper)
                    * norm * math.exp(-0.5 * float(dz @ Sinv @ dz)))

        lim = [(-12, 12)] * d
        ref, _ = nquad(integrand, lim,
                       opts={"epsabs": 1e-13, "epsrel": 1e-10})
        worst_v = max(worst_v, abs(val - ref) / abs(ref))
        fd = _central_diff(lambda z: gp.khat_gmm(z, x2, hyper, omega,
                                                 sigma)[0], x1, 1e-5)
        worst_g = max(worst_g,
                      np.linalg.norm(grad - fd)
                      / max(np.linalg.norm(fd), 1e-12))
    ok = worst_v < tol and worst_g < grad_tol
    return CheckResult("weighted kernel integral vs quadrature", ok,
                       max(worst_v, worst_g), tol,
                       f"value {worst_v:.2e}, gradient {worst_g:.2e}")


def _toy_context(rng, d=2, n=10):
    half = np.full(d, 2.0)
    bounds = opt.BoxBounds(-half, half)
    prior = InputPrior.gaussian(np.zeros(d),
                                np.diag(rng.uniform(0.4, 1.0, d)), bounds)
    X = rng.uniform(-2, 2, (n, d))
    y = np.sin(X[:, 0]) + 0.3 * np.sum(X ** 2, axis=1)
    model = gp.fit_gp(gp.Dataset(X, y), noise_mode=1e-4, rng=rng)
    outdens, Xs, mus = lw.output_density_with_samples(model, prior,
                                                      n_samples=20000,
                                                      rng=rng)
    w = prior.pdf(Xs) / np.maximum(outdens.eval(mus), outdens.floor)
    wgmm = lw.fit_gmm_weight(Xs, w, 2, rng)
    ctx = AcquisitionContext(model=model, prior=prior, weight_gmm=wgmm,
                             outdens=outdens)
    return ctx, bounds


def check_acquisition_gradients(n_points=20, tol=1e-5, raw_tol=1e-4, seed=3):
    """Analytic acquisition gradients vs central differences, per kind."""
    rng = np.random.default_rng(seed)
    ctx, bounds = _toy_context(rng)
    worst = {}
    for kind in AcquisitionKind:
        w = 0.0
        for _ in range(n_points):
            x = rng.uniform(bounds.lo * 0.9, bounds.hi * 0.9)
            _, g = acq.acq_value_and_grad(kind, ctx, x)
            # The assembled values cancel heavily where the model is
            # confident, so pick the best-converged step of a small ladder.
            rel = math.inf
            for h in (1e-2, 3e-3, 1e-3):
                fd = _central_diff(lambda z: acq.acq_value(kind, ctx, z),
                                   x, h)
                rel = min(rel, np.linalg.norm(g - fd)
                          / max(np.linalg.norm(fd), 1e-12))
            w = max(w, rel)
        worst[kind] = w
    ok = all(w < (raw_tol if k is AcquisitionKind.US_LW_RAW else tol)
             for k, w in worst.items())
    detail = ", ".join(f"{k.value}={w:.1e}" for k, w in worst.items())
    return CheckResult("acquisition gradients vs finite differences", ok,
                       max(worst.values()), tol, detail)


def check_weight_bound_grid(tol_factor=1e-6, seed=4, grid_n=101):
    """0 <= IVR-LW <= sup(w_gmm) * IVR on an oscillator surrogate grid."""
    rng = np.random.default_rng(seed)
    problem = bm.get_problem("oscillator-m2")
    X = opt.lhs_design(12, problem.bounds, rng)
    y = problem.eval_batch(X)
    model = gp.fit_gp(gp.Dataset(X, y), noise_mode=1e-3, rng=rng)
    outdens, Xs, mus = lw.output_density_with_samples(model, problem.prior,
                                                      n_samples=20000,
                                                      rng=rng)
    w = problem.prior.pdf(Xs) / np.maximum(outdens.eval(mus), outdens.floor)
    wgmm = lw.fit_gmm_weight(Xs, w, 2, rng)
    ctx = AcquisitionContext(model=model, prior=problem.prior,
                             weight_gmm=wgmm, outdens=outdens)
    g1 = np.linspace(problem.bounds.lo[0], problem.bounds.hi[0], grid_n)
    g2 = np.linspace(problem.bounds.lo[1], problem.bounds.hi[1], grid_n)
    G = np.stack(np.meshgrid(g1, g2), -1).reshape(-1, 2)
    a_lw = acq.acq_value_batch(AcquisitionKind.IVR_LW, ctx, G)
    a_ivr = acq.acq_value_batch(AcquisitionKind.IVR, ctx, G)
    M = float(np.max(lw.gmm_eval(wgmm, G))) * (1.0 + tol_factor)
    neg = float(-np.min(a_lw))
    excess = float(np.max(a_lw - M * a_ivr))
    ok = neg <= 0.0 and excess <= 0.0
    return CheckResult("likelihood-weighted variance-reduction bound", ok,
                       max(neg, excess, 0.0), 0.0,
                       f"min a_LW {np.min(a_lw):.1e}, "
                       f"max a_LW - M a_IVR {excess:.1e}")


def check_ivr_ghost_quadrature(tol=0.01, seed=5):
    """Analytic IVR vs box quadrature of the ghost-point definition."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for d in (1, 2):
        model = _random_model(rng, d, n=6)
        half = 8.0 * np.sqrt(np.max(model.hyper.lengthscales))
        ctx = AcquisitionContext(model=model)
        if d == 1:
            grid = np.linspace(-half, half, 4001).reshape(-1, 1)
            dx = grid[1, 0] - grid[0, 0]
            wq = np.full(grid.shape[0], dx)
        else:
            g = np.linspace(-half, half, 181)
            dx = g[1] - g[0]
            grid = np.stack(np.meshgrid(g, g), -1).reshape(-1, 2)
            wq = np.full(grid.shape[0], dx * dx)
        base_var = gp.posterior_var(model, grid)
        for _ in range(3):
            x = rng.uniform(-2, 2, d)
            a_analytic = acq.acq_value(AcquisitionKind.IVR, ctx, x)
            ghost = gp.fit_gp(
                model.data.augmented(x, gp.posterior_mean(model, x)),
                prior_mean_mode=model.prior_mean, hyper=model.hyper)
            drop = base_var - gp.posterior_var(ghost, grid)
            a_quad = float(np.sum(drop * wq))
            worst = max(worst, abs(a_analytic - a_quad) / abs(a_quad))
    return CheckResult("variance-reduction integral vs ghost refit", worst < tol,
                       worst, tol)


def check_gp_basics(tol_interp=1e-6, seed=6):
    """Noiseless interpolation and posterior variance bounds."""
    rng = np.random.default_rng(seed)
    X = np.linspace(0, 2 * math.pi, 12).reshape(-1, 1)
    y = np.sin(X).ravel()
    model = gp.fit_gp(gp.Dataset(X, y), noise_mode=0.0, rng=rng)
    interp = float(np.abs(gp.posterior_mean(model, X) - y).max())
    scale = float(np.abs(y).max())
    probes = rng.uniform(-1, 2 * math.pi + 1, (200, 1))
    var = gp.posterior_var(model, probes)
    var_ok = np.all(var >= 0.0) and np.all(
        var <= model.hyper.signal_variance + 1e-10)
    ok = interp < tol_interp * scale and var_ok
    return CheckResult("noiseless interpolation and variance bounds", ok,
                       interp, tol_interp,
                       f"max train error {interp:.1e}, var in "
                       f"[0, signal] {bool(var_ok)}")


def check_kde_fft(tol=1e-6, seed=7):
    """Binned-FFT density estimate vs direct summation."""
    rng = np.random.default_rng(seed)
    samples = np.concatenate([rng.normal(-1, 0.5, 400),
                              rng.normal(2.0, 1.5, 600)])
    bw = lw.scott_bandwidth(samples)
    grid = np.linspace(samples.min() - 3 * bw, samples.max() + 3 * bw, 1024)
    dens = lw.kde_1d(samples, grid, bw)
    direct = np.exp(
        -0.5 * ((grid[:, None] - samples[None, :]) / bw) ** 2).sum(axis=1)
    direct /= samples.size * bw * math.sqrt(2 * math.pi)
    err = float(np.abs(dens - direct).max())
    return CheckResult("fft kernel density vs direct sum", err < tol, err,
                       tol)


def check_em_monotonic(seed=8):
    """Weighted EM keeps its log-likelihood non-decreasing (asserted)."""
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.normal(-1, 0.6, (700, 2)),
                   rng.normal(2, 0.9, (800, 2))])
    w = rng.uniform(0.1, 3.0, X.shape[0])
    try:
        gmm = lw.fit_gmm_weight(X, w, 2, rng)
        ok = gmm.n_components >= 1
        detail = f"{gmm.n_components} components"
    except AssertionError:
        ok = False
        detail = "log-likelihood decreased"
    return CheckResult("weighted EM monotonicity", ok, 0.0, 0.0, detail)


def check_lhs_stratification(seed=9):
    """Every dimension of an LHS design occupies each stratum once."""
    rng = np.random.default_rng(seed)
    ok = True
    for n, d in ((10, 2), (25, 4), (7, 1)):
        bounds = opt.BoxBounds(np.zeros(d), np.ones(d))
        pts = opt.lhs_design(n, bounds, rng)
        for j in range(d):
            strata = np.floor(pts[:, j] * n).astype(int)
            ok = ok and (np.sort(strata) == np.arange(n)).all()
        ok = ok and np.all(pts >= 0) and np.all(pts <= 1)
    return CheckResult("latin hypercube stratification", bool(ok), 0.0, 0.0)


CHECKS = (
    check_ghost_point_identity,
    check_khat_quadrature,
    check_khat_gmm_quadrature,
    check_acquisition_gradients,
    check_weight_bound_grid,
    check_ivr_ghost_quadrature,
    check_gp_basics,
    check_kde_fft,
    check_em_monotonic,
    check_lhs_stratification,
)


def run_all_checks():
    """Run every registered check and return the results."""
    return [chk() for chk in CHECKS]
