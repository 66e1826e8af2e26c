import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from owsample import gp
from owsample.acquisition import AcquisitionContext, AcquisitionKind
from owsample.optimize import (BoxBounds, lhs_design, maximize_acquisition,
                               maximize_function)


def test_box_bounds_validation():
    with pytest.raises(ValueError):
        BoxBounds([0.0, 0.0], [1.0, 0.0])
    with pytest.raises(ValueError):
        BoxBounds([0.0], [np.inf])
    b = BoxBounds([-1.0, 0.0], [1.0, 2.0])
    assert b.dim == 2
    assert b.volume() == pytest.approx(4.0)
    assert np.allclose(b.clip([5.0, -3.0]), [1.0, 0.0])


def test_lhs_single_point(rng):
    b = BoxBounds([2.0], [3.0])
    pts = lhs_design(1, b, rng)
    assert pts.shape == (1, 1)
    assert 2.0 <= pts[0, 0] <= 3.0


def test_lhs_decile_stratification(rng):
    b = BoxBounds([0.0, -1.0], [1.0, 1.0])
    pts = lhs_design(10, b, rng)
    for j in range(2):
        u = (pts[:, j] - b.lo[j]) / b.span[j]
        assert sorted(np.floor(u * 10).astype(int)) == list(range(10))


def test_lhs_deterministic():
    b = BoxBounds([0.0, 0.0], [1.0, 1.0])
    p1 = lhs_design(8, b, np.random.default_rng(11))
    p2 = lhs_design(8, b, np.random.default_rng(11))
    assert np.array_equal(p1, p2)


@given(st.integers(1, 40), st.integers(1, 5), st.integers(0, 2 ** 31 - 1))
@settings(max_examples=25, deadline=None)
def test_lhs_always_stratified(n, d, seed):
    r = np.random.default_rng(seed)
    b = BoxBounds(np.zeros(d), np.ones(d))
    pts = lhs_design(n, b, r)
    assert np.all(pts >= 0.0) and np.all(pts <= 1.0)
    for j in range(d):
        strata = np.floor(np.clip(pts[:, j], 0, 1 - 1e-12) * n).astype(int)
        assert sorted(strata) == list(range(n))


def test_maximize_concave_quadratic(rng):
    c = np.array([0.3, -0.7])

    def f(x):
        d = x - c
        return -float(d @ d), -2.0 * d

    b = BoxBounds([-2.0, -2.0], [2.0, 2.0])
    x, v = maximize_function(f, b, rng)
    assert np.linalg.norm(x - c) < 1e-6


def test_maximize_respects_bounds(rng):
    """Maximum outside the box lands on the boundary."""
    c = np.array([5.0, 5.0])

    def f(x):
        d = x - c
        return -float(d @ d), -2.0 * d

    b = BoxBounds([-1.0, -1.0], [1.0, 1.0])
    x, _ = maximize_function(f, b, rng)
    assert np.allclose(x, [1.0, 1.0], atol=1e-9)
    assert b.contains(x)


def test_us_single_point_model_prefers_boundary(rng):
    hyper = gp.KernelHyperparams(1.0, [0.5], 0.0)
    model = gp.fit_gp(gp.Dataset([[0.0]], [1.0]), prior_mean_mode=0.0,
                      hyper=hyper)
    ctx = AcquisitionContext(model=model)
    b = BoxBounds([-3.0], [3.0])
    x, _ = maximize_acquisition(AcquisitionKind.US, ctx, b, rng=rng)
    assert abs(abs(x[0]) - 3.0) < 1e-8


def test_best_of_restarts_beats_dense_probes():
    from owsample import weights as lw
    from owsample.benchmarks import get_problem

    problem = get_problem("oscillator-m2")
    rng = np.random.default_rng(5)
    X = lhs_design(15, problem.bounds, rng)
    y = problem.eval_batch(X)
    model = gp.fit_gp(gp.Dataset(X, y), noise_mode=1e-3, rng=rng)
    dens, Xs, mus = lw.output_density_with_samples(model, problem.prior,
                                                   n_samples=20000, rng=rng)
    w = problem.prior.pdf(Xs) / np.maximum(dens.eval(mus), dens.floor)
    wgmm = lw.fit_gmm_weight(Xs, w, 2, rng)
    ctx = AcquisitionContext(model=model, prior=problem.prior,
                             weight_gmm=wgmm, outdens=dens)
    x, v = maximize_acquisition(AcquisitionKind.IVR_LW, ctx, problem.bounds,
                                rng=rng)
    from owsample.acquisition import acq_value_batch
    probes = np.random.default_rng(123).uniform(
        problem.bounds.lo, problem.bounds.hi, size=(10_000, 2))
    best_probe = float(np.max(acq_value_batch(AcquisitionKind.IVR_LW, ctx,
                                              probes)))
    assert v >= best_probe - 1e-9
    assert problem.bounds.contains(x)
