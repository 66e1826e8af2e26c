import math

import numpy as np
import pytest

from owsample import benchmarks as bm


# ---------------------------------------------------------------------------
# analytic functions
# ---------------------------------------------------------------------------


def test_oakley_values():
    assert bm.oakley([0.0, 0.0]) == pytest.approx(7.0)
    assert bm.oakley([math.pi, 0.0]) == pytest.approx(3.0 + math.pi,
                                                      rel=1e-12)
    # direct evaluation: 5 - 8 + 2cos(-4) + 2sin(-4)
    expected = 5.0 - 8.0 + 2.0 * math.cos(-4.0) + 2.0 * math.sin(-4.0)
    assert bm.oakley([-4.0, -4.0]) == pytest.approx(expected, rel=1e-12)
    assert expected == pytest.approx(-2.793682, abs=1e-6)


def test_michalewicz_values():
    assert bm.michalewicz2([0.0, 0.0]) == 0.0
    val = bm.michalewicz2([math.pi / 2, math.pi / 2])
    assert val == pytest.approx(-(2.0 ** -10) - 1.0, rel=1e-9)
    assert bm.michalewicz2([math.pi, math.pi]) == pytest.approx(0.0,
                                                                abs=1e-12)


def test_analytic_priors():
    oak = bm.get_problem("oakley")
    assert np.allclose(oak.prior.gaussian_mean, 0.0)
    assert np.allclose(oak.prior.gaussian_cov, np.eye(2))
    assert np.allclose(oak.bounds.lo, [-4, -4])
    mich = bm.get_problem("michalewicz2")
    assert np.allclose(mich.prior.gaussian_mean, math.pi / 2)
    assert np.allclose(mich.prior.gaussian_cov, 0.1 * np.eye(2))
    assert np.allclose(mich.bounds.hi, math.pi)


# ---------------------------------------------------------------------------
# borehole
# ---------------------------------------------------------------------------


def test_borehole_midpoint_matches_independent_formula():
    mid = 0.5 * np.ones(8)
    phys = bm._borehole_to_physical(mid)
    r_w, r, T_u, H_u, T_l, H_l, L, K_w = phys
    lnr = math.log(r / r_w)
    oracle = (2.0 * math.pi * T_u * (H_u - H_l)
              / (lnr * (1.0 + 2.0 * L * T_u / (lnr * r_w ** 2 * K_w)
                        + T_u / T_l)))
    assert bm.borehole(mid) == pytest.approx(oracle, rel=1e-12)


def test_borehole_tu_tl_scaling_structure():
    """Doubling both transmissivities leaves the T_u/T_l ratio term fixed."""
    u = 0.5 * np.ones(8)
    phys = bm._borehole_to_physical(u)
    f0 = bm.borehole_physical(phys)
    phys2 = phys.copy()
    phys2[2] *= 2.0  # T_u
    phys2[4] *= 2.0  # T_l
    f2 = bm.borehole_physical(phys2)
    # reconstruct: the bracket depends on T_u alone apart from T_u/T_l
    r_w, r, T_u, H_u, T_l, H_l, L, K_w = phys
    lnr = math.log(r / r_w)
    bracket = 1.0 + 2.0 * L * (2 * T_u) / (lnr * r_w ** 2 * K_w) + T_u / T_l
    expected = 2.0 * math.pi * (2 * T_u) * (H_u - H_l) / (lnr * bracket)
    assert f2 == pytest.approx(expected, rel=1e-12)
    assert f2 != pytest.approx(f0)


def test_borehole_prior_matches_table():
    prob = bm.get_problem("borehole")
    margs = prob.prior.marginals
    # normal marginal for the borehole radius
    assert margs[0].base.m == pytest.approx(0.1)
    assert margs[0].base.s == pytest.approx(0.0161812)
    # lognormal marginal for the radius of influence
    assert margs[1].base.lm == pytest.approx(7.71)
    assert margs[1].base.ls == pytest.approx(1.0056)
    # six unit uniforms
    for m in margs[2:]:
        assert m.pdf(np.array([0.5]))[0] == pytest.approx(1.0)
    assert prob.bounds.lo.min() == 0.0 and prob.bounds.hi.max() == 1.0


def test_borehole_rejects_bad_physical_values():
    with pytest.raises(ValueError):
        bm.borehole_physical([0.1, 0.05, 1e5, 1000, 100, 800, 1400, 10000])
    with pytest.raises(ValueError):
        bm.borehole_physical([0.1, 100.0, -1e5, 1000, 100, 800, 1400, 10000])


# ---------------------------------------------------------------------------
# KL expansion
# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def kl10():
    return bm.kl_expansion(0.1, 4.0, 25.0, 10, 501)


def test_kl_eigenvalues_descending_nonnegative(kl10):
    lam = kl10.eigenvalues
    assert np.all(np.diff(lam) <= 1e-15)
    assert np.all(lam >= 0.0)


def test_kl_mercer_variance_reconstruction():
    kl = bm.kl_expansion(0.1, 4.0, 25.0, 501, 501)
    recon = np.sum(kl.eigenvalues[:, None] * kl.modes ** 2, axis=0)
    interior = recon[50:-50]
    assert np.abs(interior - 0.1).max() < 0.001  # within 1%


def test_kl_modes_orthonormal(kl10):
    G = kl10.modes @ kl10.modes.T * kl10.grid_dt
    assert np.abs(G - np.eye(10)).max() < 1e-6


def test_kl_leading_energy_fraction_frozen():
    """Regression value from the eigendecomposition oracle (Nystrom
    quadrature cross-check in test below)."""
    kl = bm.kl_expansion(0.1, 4.0, 25.0, 501, 501)
    frac = kl.eigenvalues[:2].sum() / kl.eigenvalues.sum()
    assert frac == pytest.approx(0.646464, abs=1e-4)
    assert frac > 0.5


def test_kl_eigenvalues_match_gauss_legendre_oracle():
    """Nystrom discretization with an independent quadrature rule."""
    n_gl = 400
    xi, wq = np.polynomial.legendre.leggauss(n_gl)
    t = 12.5 * (xi + 1.0)
    w = 12.5 * wq
    C = 0.1 * np.exp(-0.5 * ((t[:, None] - t[None, :]) / 4.0) ** 2)
    A = np.sqrt(w)[:, None] * C * np.sqrt(w)[None, :]
    lam_oracle = np.sort(np.linalg.eigvalsh(A))[::-1][:5]
    kl = bm.kl_expansion(0.1, 4.0, 25.0, 5, 501)
    assert np.allclose(kl.eigenvalues, lam_oracle, rtol=1e-4)


def test_kl_truncations_nested():
    kl2 = bm.kl_expansion(0.1, 4.0, 25.0, 2, 501)
    kl10 = bm.kl_expansion(0.1, 4.0, 25.0, 10, 501)
    assert np.allclose(kl2.eigenvalues, kl10.eigenvalues[:2], rtol=1e-12)
    assert np.allclose(np.abs(kl2.modes), np.abs(kl10.modes[:2]), atol=1e-10)


def test_kl_requires_m_le_nt():
    with pytest.raises(ValueError):
        bm.kl_expansion(0.1, 4.0, 25.0, 20, 10)


# ---------------------------------------------------------------------------
# oscillator
# ---------------------------------------------------------------------------


def test_oscillator_zero_forcing_zero_response():
    kl = bm.kl_expansion(0.1, 4.0, 25.0, 2, 501)
    assert bm.oscillator_objective(np.zeros(2), kl) == 0.0


def test_restoring_force_branch_values():
    assert bm.restoring_force(0.25) == pytest.approx(0.25)
    assert bm.restoring_force(1.0) == pytest.approx(0.5)
    assert bm.restoring_force(2.0) == pytest.approx(0.5125)
    # odd symmetry
    assert bm.restoring_force(-2.0) == pytest.approx(-0.5125)


def test_oscillator_step_halving(rng):
    kl = bm.kl_expansion(0.1, 4.0, 25.0, 2, 501)
    x = rng.normal(0.0, np.sqrt(kl.eigenvalues))
    v1 = bm.oscillator_objective(x, kl, refine=1)
    v2 = bm.oscillator_objective(x, kl, refine=2)
    assert abs(v2 - v1) < 1e-6


def test_oscillator_rk4_order_on_smooth_forcing():
    """Richardson check against a manufactured smooth forcing."""
    kl = bm.kl_expansion(0.1, 4.0, 25.0, 3, 501)
    rng = np.random.default_rng(0)
    x = rng.normal(0.0, np.sqrt(kl.eigenvalues))
    v1 = bm.oscillator_objective(x, kl, refine=1)
    v2 = bm.oscillator_objective(x, kl, refine=2)
    v4 = bm.oscillator_objective(x, kl, refine=4)
    rate = math.log2(abs(v2 - v1) / abs(v4 - v2))
    assert rate > 3.0


def test_oscillator_batch_matches_scalar(rng):
    kl = bm.kl_expansion(0.1, 4.0, 25.0, 2, 501)
    X = rng.normal(0, 1, (5, 2)) * np.sqrt(kl.eigenvalues)
    batch = bm.oscillator_objective_batch(X, kl)
    single = np.array([bm.oscillator_objective(x, kl) for x in X])
    assert np.allclose(batch, single, rtol=1e-12)


def test_problem_evaluators_pure():
    for name in ("oakley", "oscillator-m2", "borehole"):
        prob = bm.get_problem(name)
        x = 0.5 * (prob.bounds.lo + prob.bounds.hi)
        assert prob.evaluate(x) == prob.evaluate(x)


# ---------------------------------------------------------------------------
# extreme-event system
# ---------------------------------------------------------------------------


def test_fs3d_origin_is_fixed_point():
    assert np.allclose(bm.fs3d_rhs(np.zeros(3)), 0.0)
    assert bm.danger_map(np.zeros(3)) == 0.0


def test_fs3d_minus_one_is_fixed_point():
    assert np.allclose(bm.fs3d_rhs(np.array([-1.0, 0.0, 0.0])), 0.0,
                       atol=1e-15)


def test_fs3d_z_plane_invariant(rng):
    x0 = np.array([rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), 0.0])
    assert bm.danger_map(x0) == 0.0


def test_fs3d_dummy_dims_inert():
    prob3 = bm.get_problem("fs3d")
    prob10 = bm.get_problem("fs3d-dummy-10")
    x3 = np.array([0.2, -0.1, 0.05])
    x10 = np.concatenate([x3, np.full(7, 0.07)])
    assert prob10.evaluate(x10) == prob3.evaluate(x3)


def test_fs3d_prior_and_box_construction():
    prob = bm.get_problem("fs3d-dummy-10")
    pca = prob.pca
    lam = pca.eigenvalues
    assert np.allclose(prob.bounds.hi[:3], 2.5 * np.sqrt(lam))
    assert np.allclose(prob.bounds.hi[3:], 0.1)
    assert np.allclose(np.diag(prob.prior.gaussian_cov)[:3], lam)
    assert np.allclose(np.diag(prob.prior.gaussian_cov)[3:], 1.0)


def test_fs3d_blowup_guard():
    with pytest.raises(RuntimeError):
        bm.danger_map_batch(np.array([[50.0, 50.0, 50.0]]), tau=5.0)


# ---------------------------------------------------------------------------
# PCA reduction
# ---------------------------------------------------------------------------


def test_pca_recovers_diagonal_covariance(rng):
    S = rng.multivariate_normal(np.zeros(3), np.diag([4.0, 1.0, 0.25]),
                                size=10_000)
    pca = bm.pca_reduce(S, 3)
    assert np.allclose(pca.eigenvalues, [4.0, 1.0, 0.25], rtol=0.1)
    assert np.abs(pca.basis.T @ pca.basis - np.eye(3)).max() < 1e-10


def test_pca_projection_lift_roundtrip(rng):
    S = rng.normal(size=(500, 3))
    pca = bm.pca_reduce(S, 3)
    x = S[17]
    z = pca.project(x)
    assert np.allclose(pca.lift(z), x, atol=1e-10)


def test_pca_prior_covariance_is_eigenvalues(rng):
    S = rng.normal(size=(2000, 3)) * np.array([2.0, 1.0, 0.5])
    pca = bm.pca_reduce(S, 3, dummy_dims=2)
    prior = pca.input_prior(5.0)
    assert np.allclose(np.diag(prior.gaussian_cov)[:3], pca.eigenvalues)
    assert np.allclose(np.diag(prior.gaussian_cov)[3:], 1.0)


def test_pca_rejects_rank_deficient(rng):
    line = np.outer(rng.normal(size=100), np.array([1.0, 2.0, 3.0]))
    with pytest.raises(ValueError):
        bm.pca_reduce(line, 3)


# ---------------------------------------------------------------------------
# registry
# ---------------------------------------------------------------------------


def test_registry_names_and_dims():
    assert bm.list_problems() == list(bm.PROBLEM_NAMES)
    assert bm.get_problem("borehole").dim == 8
    assert bm.get_problem("oscillator-m10").dim == 10
    assert bm.get_problem("fs3d-dummy-30").dim == 30
    with pytest.raises(ValueError):
        bm.get_problem("nope")


def test_oscillator_bounds_six_sigma():
    prob = bm.get_problem("oscillator-m2")
    lam = np.diag(prob.prior.gaussian_cov)
    assert np.allclose(prob.bounds.hi, 6.0 * np.sqrt(lam))
