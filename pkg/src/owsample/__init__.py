"""Output-weighted sequential sampling for Gaussian-process surrogates.

A library for Bayesian experimental design in which acquisition functions
are weighted by the likelihood ratio between the input density and the
pushforward density of the surrogate mean, steering the search toward
inputs that produce unusually large or rare outputs.
"""

from .gp import (
    Dataset,
    GPModel,
    KernelHyperparams,
    fit_gp,
    posterior_cov,
    posterior_mean,
    posterior_mean_grad,
    posterior_var,
)
from .optimize import BoxBounds, lhs_design, maximize_acquisition
from .priors import InputPrior
from .weights import (
    GaussianMixtureWeight,
    OutputDensity,
    estimate_output_density,
    fit_gmm_weight,
    gmm_eval,
    likelihood_ratio,
)
from .acquisition import AcquisitionContext, AcquisitionKind, acq_grad, acq_value
from .benchmarks import BlackBoxProblem, get_problem, list_problems
from .experiment import (
    ExperimentConfig,
    ExperimentRecord,
    aggregate,
    ground_truth_pdf,
    log_pdf_error,
    run_lhs_baseline,
    run_replicates,
    run_sequential,
)

__version__ = "0.1.0"
