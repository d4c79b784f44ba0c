"""Probabilistic reduced-order modeling: PPCA with latent variances, BIC dimension selection,
and Gaussian-prior projection of noisy trial data."""

__version__ = "0.1.0"

from .linalg import EigenSystem, sample_covariance, symmetric_eigen  # noqa: E402
from .ppca import ClampWarning, PpcaModel, estimate_mean, fit, log_likelihood_at_mle, reconstruct  # noqa: E402
from .projection import (  # noqa: E402
    ProjectionResult,
    gaussian_project,
    l2_project,
    project_batch,
    reconstruction_error,
    shrinkage_factors,
)
from .selection import BicTable, bic_scan, parameter_count, select_model  # noqa: E402
from .synth import DataEnsemble, SyntheticSpec, gaussian_sampler, generate, sine_basis  # noqa: E402
from .estimator import ProbabilisticPCA  # noqa: E402

__all__ = [
    "BicTable",
    "ClampWarning",
    "DataEnsemble",
    "EigenSystem",
    "PpcaModel",
    "ProbabilisticPCA",
    "ProjectionResult",
    "SyntheticSpec",
    "bic_scan",
    "estimate_mean",
    "fit",
    "gaussian_project",
    "gaussian_sampler",
    "generate",
    "l2_project",
    "log_likelihood_at_mle",
    "parameter_count",
    "project_batch",
    "reconstruct",
    "reconstruction_error",
    "sample_covariance",
    "select_model",
    "shrinkage_factors",
    "sine_basis",
    "symmetric_eigen",
]
