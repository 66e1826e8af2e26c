import math

import numpy as np
import pytest
from scipy.integrate import nquad

from owsample.optimize import BoxBounds
from owsample.priors import (InputPrior, LognormalMarginal, NormalMarginal,
                             RescaledMarginal, UniformMarginal)

from conftest import central_diff


def test_standard_normal_2d_at_origin():
    prior = InputPrior.gaussian(np.zeros(2), np.eye(2),
                                BoxBounds([-4, -4], [4, 4]))
    assert prior.pdf(np.zeros(2)) == pytest.approx(1.0 / (2 * math.pi),
                                                   rel=1e-12)


def test_uniform_unit_square():
    prior = InputPrior.uniform([0.0, 0.0], [1.0, 1.0])
    assert prior.pdf([0.3, 0.9]) == pytest.approx(1.0)
    assert prior.pdf([1.4, 0.5]) == 0.0
    assert np.allclose(prior.pdf_grad([0.3, 0.9]), 0.0)


def test_gaussian_pdf_integrates_to_one_2d():
    cov = np.array([[1.0, 0.3], [0.3, 0.6]])
    prior = InputPrior.gaussian(np.array([0.2, -0.1]), cov,
                                BoxBounds([-8, -8], [8, 8]))
    total, _ = nquad(lambda a, b: prior.pdf(np.array([a, b])),
                     [(-8, 8), (-8, 8)])
    assert total == pytest.approx(1.0, abs=1e-6)


def test_gaussian_pdf_grad_matches_fd(rng):
    cov = np.array([[1.0, 0.4], [0.4, 0.9]])
    prior = InputPrior.gaussian(np.array([0.5, -0.2]), cov,
                                BoxBounds([-6, -6], [6, 6]))
    x = rng.normal(size=2)
    g = prior.pdf_grad(x)
    fd = central_diff(lambda z: prior.pdf(z), x, 1e-5)
    assert np.linalg.norm(g - fd) / np.linalg.norm(fd) < 1e-8


def test_product_prior_pdf_and_grad(rng):
    margs = [NormalMarginal(0.1, 0.7),
             LognormalMarginal(0.0, 0.5),
             UniformMarginal(-1.0, 3.0)]
    prior = InputPrior.product(margs, BoxBounds([-3, 0.01, -1], [3, 8, 3]))
    x = np.array([0.4, 1.3, 0.2])
    expected = (margs[0].pdf(x[0]) * margs[1].pdf(x[1]) * margs[2].pdf(x[2]))
    assert prior.pdf(x) == pytest.approx(float(expected), rel=1e-12)
    g = prior.pdf_grad(x)
    fd = central_diff(lambda z: prior.pdf(z), x, 1e-6)
    assert np.linalg.norm(g - fd) / max(np.linalg.norm(fd), 1e-12) < 1e-6


def test_lognormal_borehole_parametrization(rng):
    """Radius-of-influence marginal: log-mean 7.71, log-sd 1.0056."""
    marg = LognormalMarginal(7.71, 1.0056)
    samples = marg.sample(200_000, rng)
    logs = np.log(samples)
    assert np.mean(logs) == pytest.approx(7.71, abs=0.02)
    assert np.std(logs) == pytest.approx(1.0056, abs=0.02)
    # consistent with the stated physical range [100, 50000]
    inside = np.mean((samples >= 100.0) & (samples <= 50000.0))
    assert inside > 0.98


def test_rescaled_marginal_change_of_variables(rng):
    base = NormalMarginal(0.1, 0.0161812)
    marg = RescaledMarginal(base, 0.05, 0.15)
    u = np.array([0.5])  # physical 0.1, the mode
    assert marg.pdf(u)[0] == pytest.approx(base.pdf(0.1)[()] * 0.1, rel=1e-12)
    total = np.trapezoid(marg.pdf(np.linspace(-1, 2, 20001)),
                         np.linspace(-1, 2, 20001))
    assert total == pytest.approx(1.0, abs=1e-6)
    s = marg.sample(50_000, rng)
    assert np.mean(s) == pytest.approx(0.5, abs=0.01)


def test_sampling_moments_gaussian(rng):
    cov = np.array([[2.0, -0.5], [-0.5, 1.0]])
    prior = InputPrior.gaussian(np.array([1.0, -2.0]), cov,
                                BoxBounds([-9, -9], [9, 9]))
    X = prior.sample(200_000, rng)
    assert np.allclose(X.mean(axis=0), [1.0, -2.0], atol=0.02)
    assert np.allclose(np.cov(X.T), cov, atol=0.03)
    assert np.allclose(prior.std(), np.sqrt(np.diag(cov)))


def test_prior_requires_exactly_one_representation():
    with pytest.raises(ValueError):
        InputPrior(bounds=BoxBounds([0.0], [1.0]))
    with pytest.raises(ValueError):
        InputPrior(bounds=BoxBounds([0.0], [1.0]),
                   gaussian_mean=np.zeros(1), gaussian_cov=np.eye(1),
                   marginals=(UniformMarginal(0, 1),))
