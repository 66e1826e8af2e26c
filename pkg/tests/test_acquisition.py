import numpy as np
import pytest

from owsample import gp
from owsample import weights as lw
from owsample.acquisition import (AcquisitionContext, AcquisitionKind,
                                  acq_grad, acq_value, acq_value_and_grad,
                                  acq_value_batch)
from owsample.optimize import BoxBounds, lhs_design
from owsample.priors import InputPrior

from conftest import best_fd_match

ALL_KINDS = list(AcquisitionKind)


@pytest.fixture(scope="module")
def state():
    rng = np.random.default_rng(77)
    bounds = BoxBounds([-2.0, -2.0], [2.0, 2.0])
    prior = InputPrior.gaussian(np.zeros(2), np.diag([1.0, 0.5]), bounds)
    X = rng.uniform(-2, 2, (12, 2))
    y = np.sin(X[:, 0]) + 0.3 * X[:, 1] ** 2
    model = gp.fit_gp(gp.Dataset(X, y), noise_mode=1e-4, rng=rng)
    dens, Xs, mus = lw.output_density_with_samples(model, prior,
                                                   n_samples=20000, rng=rng)
    w = prior.pdf(Xs) / np.maximum(dens.eval(mus), dens.floor)
    wgmm = lw.fit_gmm_weight(Xs, w, 2, rng)
    ctx = AcquisitionContext(model=model, prior=prior, weight_gmm=wgmm,
                             outdens=dens)
    return ctx, bounds


def test_us_zero_at_noiseless_training_point(rng):
    hyper = gp.KernelHyperparams(1.0, [0.4, 0.4], 0.0)
    X = rng.uniform(-1, 1, (5, 2))
    model = gp.fit_gp(gp.Dataset(X, rng.normal(size=5)), prior_mean_mode=0.0,
                      hyper=hyper)
    ctx = AcquisitionContext(model=model)
    assert acq_value(AcquisitionKind.US, ctx, X[2]) < 1e-8


@pytest.mark.parametrize("kind", ALL_KINDS, ids=lambda k: k.value)
def test_gradients_match_fd(state, kind, rng):
    ctx, bounds = state
    tol = 1e-4 if kind is AcquisitionKind.US_LW_RAW else 1e-5
    worst = 0.0
    for _ in range(6):
        x = rng.uniform(bounds.lo * 0.9, bounds.hi * 0.9)
        _, g = acq_value_and_grad(kind, ctx, x)
        rel = best_fd_match(lambda z: acq_value(kind, ctx, z), x, g)
        worst = max(worst, rel)
    assert worst < tol


@pytest.mark.parametrize("kind", ALL_KINDS, ids=lambda k: k.value)
def test_batch_matches_scalar(state, kind, rng):
    ctx, bounds = state
    Xq = rng.uniform(-2, 2, (40, 2))
    bv = acq_value_batch(kind, ctx, Xq)
    sv = np.array([acq_value(kind, ctx, x) for x in Xq])
    # the two paths order their floating-point work differently, so the
    # agreement limit is cancellation noise, not exact equality
    assert np.allclose(bv, sv, rtol=1e-5, atol=1e-12)


@pytest.mark.parametrize("kind", ALL_KINDS, ids=lambda k: k.value)
def test_nonnegative_everywhere(state, kind, rng):
    ctx, _ = state
    Xq = rng.uniform(-2, 2, (200, 2))
    assert np.all(acq_value_batch(kind, ctx, Xq) >= 0.0)


def test_gradient_vanishes_at_interior_maximizer(state):
    ctx, bounds = state
    from scipy.optimize import minimize
    kind = AcquisitionKind.US_LW
    res = minimize(lambda z: -acq_value(kind, ctx, z), np.array([0.5, 0.5]),
                   bounds=list(zip(bounds.lo, bounds.hi)))
    if np.all(np.abs(res.x) < 1.95):  # interior
        g = acq_grad(kind, ctx, res.x)
        assert np.linalg.norm(g) < 1e-5 * max(1.0, abs(res.fun))


def test_ivr_iw_gaussian_equals_single_component_lw(state, rng):
    ctx, _ = state
    prior = ctx.prior
    single = lw.GaussianMixtureWeight(
        np.array([1.0]), prior.gaussian_mean.reshape(1, -1),
        prior.gaussian_cov.reshape(1, 2, 2))
    ctx_lw = AcquisitionContext(model=ctx.model, weight_gmm=single)
    for _ in range(10):
        x = rng.uniform(-2, 2, 2)
        a = acq_value(AcquisitionKind.IVR_IW, ctx, x)
        b = acq_value(AcquisitionKind.IVR_LW, ctx_lw, x)
        assert a == b  # bit-identical


def test_ivr_matches_ghost_point_quadrature(rng):
    hyper = gp.KernelHyperparams(1.2, [0.5], 0.0)
    X = rng.uniform(-2, 2, (6, 1))
    model = gp.fit_gp(gp.Dataset(X, rng.normal(size=6)), prior_mean_mode=0.0,
                      hyper=hyper)
    ctx = AcquisitionContext(model=model)
    half = 8.0 * np.sqrt(hyper.lengthscales[0])
    grid = np.linspace(-half, half, 4001).reshape(-1, 1)
    dx = grid[1, 0] - grid[0, 0]
    base = gp.posterior_var(model, grid)
    for _ in range(3):
        x = rng.uniform(-2, 2, 1)
        analytic = acq_value(AcquisitionKind.IVR, ctx, x)
        ghost = gp.fit_gp(model.data.augmented(x, gp.posterior_mean(model,
                                                                    x)),
                          prior_mean_mode=0.0, hyper=hyper)
        quad = float(np.sum(base - gp.posterior_var(ghost, grid)) * dx)
        assert analytic == pytest.approx(quad, rel=0.01)


def test_ivr_iw_matches_weighted_quadrature(rng):
    """Eq. 2.11-style direct quadrature oracle in one dimension."""
    hyper = gp.KernelHyperparams(1.0, [0.6], 0.0)
    X = rng.uniform(-2, 2, (5, 1))
    model = gp.fit_gp(gp.Dataset(X, rng.normal(size=5)), prior_mean_mode=0.0,
                      hyper=hyper)
    prior = InputPrior.gaussian(np.array([0.3]), np.array([[0.8]]),
                                BoxBounds([-3.0], [3.0]))
    ctx = AcquisitionContext(model=model, prior=prior)
    grid = np.linspace(-12, 12, 12001).reshape(-1, 1)
    dx = grid[1, 0] - grid[0, 0]
    pw = prior.pdf(grid)
    for _ in range(3):
        x = rng.uniform(-2, 2, 1)
        analytic = acq_value(AcquisitionKind.IVR_IW, ctx, x)
        cov = np.array([gp.posterior_cov(model, x, xp) for xp in grid])
        quad = float(np.sum(cov ** 2 * pw) * dx) / gp.posterior_var(model, x)
        assert analytic == pytest.approx(quad, rel=1e-4)


def test_weight_bound_on_grid(state):
    ctx, bounds = state
    g = np.linspace(bounds.lo[0], bounds.hi[0], 51)
    G = np.stack(np.meshgrid(g, g), -1).reshape(-1, 2)
    a_lw = acq_value_batch(AcquisitionKind.IVR_LW, ctx, G)
    a_ivr = acq_value_batch(AcquisitionKind.IVR, ctx, G)
    M = float(np.max(lw.gmm_eval(ctx.weight_gmm, G))) * (1 + 1e-6)
    assert np.all(a_lw >= 0.0)
    assert np.all(a_lw <= M * a_ivr + 1e-300)


def test_context_validation():
    rng = np.random.default_rng(0)
    model = gp.fit_gp(gp.Dataset(rng.normal(size=(4, 2)),
                                 rng.normal(size=4)),
                      prior_mean_mode=0.0,
                      hyper=gp.KernelHyperparams(1.0, [1.0, 1.0], 0.0))
    with pytest.raises(ValueError):
        AcquisitionContext.for_kind(AcquisitionKind.US_LW, model)
    with pytest.raises(ValueError):
        AcquisitionContext.for_kind(AcquisitionKind.US_LW_RAW, model)
    with pytest.raises(ValueError):
        AcquisitionContext.for_kind(AcquisitionKind.IVR_IW, model,
                                    prior=InputPrior.uniform([0, 0], [1, 1]))
    AcquisitionContext.for_kind(AcquisitionKind.US, model)
    AcquisitionContext.for_kind(AcquisitionKind.IVR, model)


def test_unknown_kind_rejected(state):
    ctx, _ = state
    with pytest.raises(ValueError):
        acq_value_and_grad("US", ctx, np.zeros(2))
    with pytest.raises(ValueError):
        AcquisitionKind.from_name("NOPE")
