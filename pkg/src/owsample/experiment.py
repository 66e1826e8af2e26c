"""Sequential-search driver, baselines, and the log-pdf error metric.

One experiment observes y = f(x) + eps on an initial Latin hypercube
design, then alternates acquisition maximization, observation, and GP
refitting.  Progress is measured by the integrated absolute difference
between the log densities of the surrogate-mean pushforward and of the
true map, both estimated on a shared Monte-Carlo input cache so the
error trend is free of sampling noise.
"""

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import gp, weights as lw
from .acquisition import AcquisitionContext, AcquisitionKind
from .benchmarks import get_problem
from .optimize import lhs_design, maximize_acquisition

__all__ = [
    "ExperimentConfig",
    "GroundTruth",
    "ExperimentRecord",
    "ground_truth_pdf",
    "log_pdf_error",
    "run_sequential",
    "run_lhs_baseline",
    "run_replicates",
    "aggregate",
    "replicate_seed",
]

TRUTH_FLOOR_FRACTION = 1e-4


@dataclass(frozen=True)
class ExperimentConfig:
    """Settings for one batch of replicated experiments."""

    problem: str
    acquisition: str
    n_iter: int
    n_init: int = None
    noise_variance: float = 0.0
    noise_mode: str = "fixed"  # "fixed": GP noise pinned at noise_variance
    n_gmm: int = 2
    seed: int = 0
    mc_samples: int = 100_000
    replicate_count: int = 1
    alg3_sampling: str = "prior"
    acq_restarts: int = 10
    gp_starts: int = 8
    truth_seed: int = None

    def __post_init__(self):
        if self.n_iter < 0:
            raise ValueError("n_iter must be nonnegative")
        for name in ("n_gmm", "mc_samples", "replicate_count",
                     "acq_restarts", "gp_starts"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        if self.n_init is not None and self.n_init < 1:
            raise ValueError("n_init must be at least 1")
        if self.noise_variance < 0:
            raise ValueError("noise_variance must be nonnegative")
        if self.noise_mode not in ("fixed", "trained"):
            raise ValueError("noise_mode must be 'fixed' or 'trained'")
        if self.alg3_sampling not in ("prior", "uniform"):
            raise ValueError("alg3_sampling must be 'prior' or 'uniform'")
        if self.acquisition != "LHS":
            AcquisitionKind.from_name(self.acquisition)  # validates

    @property
    def kind(self):
        if self.acquisition == "LHS":
            return None
        return AcquisitionKind.from_name(self.acquisition)


@dataclass(frozen=True)
class GroundTruth:
    """Output density of the true map plus the input cache that made it."""

    y_grid: np.ndarray
    log_pdf: np.ndarray
    pdf: np.ndarray
    floor: float
    mc_inputs: np.ndarray


@dataclass(frozen=True)
class ExperimentRecord:
    """Per-replicate history of one sequential (or baseline) run."""

    visited: np.ndarray
    outputs: np.ndarray
    error_series: np.ndarray
    cumulative_min_series: np.ndarray
    wall_times: np.ndarray
    evaluations: int
    seed: int


def ground_truth_pdf(problem, mc_samples, rng):
    """Monte-Carlo estimate of the output density of the true map."""
    if isinstance(problem, str):
        problem = get_problem(problem)
    if mc_samples < 10_000:
        raise ValueError("mc_samples must be at least 10000")
    X = problem.prior.sample(mc_samples, rng)
    f = problem.eval_batch(X)
    dens = lw.density_from_samples(f)
    floor = TRUTH_FLOOR_FRACTION * float(np.max(dens.density))
    pdf = dens.density
    return GroundTruth(y_grid=dens.grid,
                       log_pdf=np.log(np.maximum(pdf, floor)),
                       pdf=pdf, floor=floor, mc_inputs=X)


def _segment_trapz(values, grid, mask):
    """Trapezoid rule restricted to intervals whose endpoints pass mask."""
    both = mask[:-1] & mask[1:]
    if not np.any(both):
        return 0.0
    h = np.diff(grid)
    avg = 0.5 * (values[:-1] + values[1:])
    return float(np.sum(h[both] * avg[both]))


def log_pdf_error(model, truth):
    """Integrated |log p_mu - log p_f| over the supported output range.

    ``model`` may be a GPModel or any callable mapping a batch of inputs
    to predictions.  The surrogate pushforward reuses the ground-truth
    input cache (common random numbers).
    """
    if isinstance(model, gp.GPModel):
        mu = gp.posterior_mean(model, truth.mc_inputs)
    else:
        mu = np.asarray(model(truth.mc_inputs), dtype=float)
    dens = lw.density_from_samples(mu)
    pm = np.interp(truth.y_grid, dens.grid, dens.density,
                   left=dens.density[0], right=dens.density[-1])
    log_pm = np.log(np.maximum(pm, truth.floor))
    mask = truth.pdf > truth.floor
    return _segment_trapz(np.abs(log_pm - truth.log_pdf), truth.y_grid, mask)


_truth_cache = {}


def _cached_truth(problem_name, mc_samples, seed):
    key = (problem_name, int(mc_samples), int(seed))
    if key not in _truth_cache:
        rng = np.random.default_rng(np.random.SeedSequence((seed, 0xA11CE)))
        _truth_cache[key] = ground_truth_pdf(get_problem(problem_name),
                                             mc_samples, rng)
    return _truth_cache[key]


def _observe(problem, X, noise_variance, rng):
    y = problem.eval_batch(X)
    eps = rng.standard_normal(y.size)
    return y + math.sqrt(noise_variance) * eps


def _fit(config, X, y, rng, warm=None):
    noise_mode = ("trained" if config.noise_mode == "trained"
                  else config.noise_variance)
    return gp.fit_gp(gp.Dataset(X, y), prior_mean_mode="data-mean",
                     noise_mode=noise_mode, rng=rng,
                     n_starts=config.gp_starts, warm_hyper=warm)


def _needs_outdens(kind):
    return kind in (AcquisitionKind.US_LW_RAW, AcquisitionKind.US_LW,
                    AcquisitionKind.IVR_LW)


def _needs_weight_gmm(kind):
    return kind in (AcquisitionKind.US_LW, AcquisitionKind.IVR_LW)


def run_sequential(config):
    """Run one replicate of the sequential search (Algorithm-1 loop)."""
    kind = config.kind
    if kind is None:
        raise ValueError("use run_lhs_baseline for the LHS acquisition")
    problem = get_problem(config.problem)
    d = problem.dim
    n_init = config.n_init or d + 1
    truth_seed = config.truth_seed if config.truth_seed is not None \
        else config.seed
    truth = _cached_truth(config.problem, config.mc_samples, truth_seed)
    rng = np.random.default_rng(config.seed)

    X = lhs_design(n_init, problem.bounds, rng)
    y = _observe(problem, X, config.noise_variance, rng)
    model = _fit(config, X, y, rng)

    prior_gmm = None
    if kind is AcquisitionKind.IVR_IW and not problem.prior.is_gaussian:
        n_fit = min(config.mc_samples, 100_000)
        samples = problem.prior.sample(n_fit, rng)
        prior_gmm = lw.fit_gmm_weight(samples, np.ones(n_fit), 2, rng)

    errors = [log_pdf_error(model, truth)]
    wall = []
    for _ in range(config.n_iter):
        t0 = time.perf_counter()
        outdens = weight_gmm = None
        if _needs_outdens(kind):
            outdens, Xs, mu_s = lw.output_density_with_samples(
                model, problem.prior, n_samples=config.mc_samples,
                sampling=config.alg3_sampling, rng=rng)
            if _needs_weight_gmm(kind):
                w = problem.prior.pdf(Xs) / np.maximum(outdens.eval(mu_s),
                                                       outdens.floor)
                mass_factor = (problem.bounds.volume()
                               if config.alg3_sampling == "uniform" else 1.0)
                weight_gmm = lw.fit_gmm_weight(Xs, w, config.n_gmm, rng,
                                               mass_factor=mass_factor)
        ctx = AcquisitionContext.for_kind(
            kind, model, prior=problem.prior, weight_gmm=weight_gmm,
            prior_gmm=prior_gmm, outdens=outdens)
        x_new, _ = maximize_acquisition(kind, ctx, problem.bounds,
                                        n_restarts=config.acq_restarts,
                                        rng=rng)
        y_new = _observe(problem, x_new.reshape(1, -1),
                         config.noise_variance, rng)[0]
        X = np.vstack([X, x_new])
        y = np.append(y, y_new)
        model = _fit(config, X, y, rng, warm=model.hyper)
        errors.append(log_pdf_error(model, truth))
        wall.append(time.perf_counter() - t0)

    errors = np.asarray(errors)
    return ExperimentRecord(
        visited=X, outputs=y, error_series=errors,
        cumulative_min_series=np.minimum.accumulate(errors),
        wall_times=np.asarray(wall), evaluations=n_init + config.n_iter,
        seed=config.seed)


def run_lhs_baseline(config):
    """Non-iterative baseline: a fresh LHS design of size n_init + n per n."""
    problem = get_problem(config.problem)
    d = problem.dim
    n_init = config.n_init or d + 1
    truth_seed = config.truth_seed if config.truth_seed is not None \
        else config.seed
    truth = _cached_truth(config.problem, config.mc_samples, truth_seed)
    rng = np.random.default_rng(config.seed)

    errors = []
    wall = []
    evaluations = 0
    X = y = None
    for n in range(1, config.n_iter + 1):
        t0 = time.perf_counter()
        X = lhs_design(n_init + n, problem.bounds, rng)
        y = _observe(problem, X, config.noise_variance, rng)
        evaluations += n_init + n
        model = _fit(config, X, y, rng)
        errors.append(log_pdf_error(model, truth))
        wall.append(time.perf_counter() - t0)

    errors = np.asarray(errors)
    return ExperimentRecord(
        visited=X if X is not None else np.empty((0, d)),
        outputs=y if y is not None else np.empty(0),
        error_series=errors,
        cumulative_min_series=(np.minimum.accumulate(errors)
                               if errors.size else errors),
        wall_times=np.asarray(wall), evaluations=evaluations,
        seed=config.seed)


def replicate_seed(base_seed, index):
    """Deterministic integer seed for replicate ``index``."""
    return int(np.random.SeedSequence((base_seed, index)).generate_state(1)[0])


def run_replicates(config):
    """Run all replicates of a config, sharing the ground-truth cache."""
    records = []
    for i in range(config.replicate_count):
        rep = replace(config, seed=replicate_seed(config.seed, i),
                      truth_seed=(config.truth_seed
                                  if config.truth_seed is not None
                                  else config.seed),
                      replicate_count=1)
        if config.acquisition == "LHS":
            records.append(run_lhs_baseline(rep))
        else:
            records.append(run_sequential(rep))
    return records


def aggregate(records):
    """Pointwise median and median absolute deviation of cumulative minima."""
    if not records:
        raise ValueError("need at least one record")
    lengths = {r.cumulative_min_series.size for r in records}
    if len(lengths) != 1:
        raise ValueError("records have mismatched series lengths")
    M = np.stack([r.cumulative_min_series for r in records])
    med = np.median(M, axis=0)
    mad = np.median(np.abs(M - med[None, :]), axis=0)
    return med, mad
