"""Projection of trial data onto a trained model.

Two estimators of the latent vector are provided: plain L2 projection onto the
basis, and the Gaussian-prior MAP estimate that uses the training latent
variances as prior covariance while jointly estimating the trial noise
variance through a fixed-point iteration.
"""

from dataclasses import dataclass

import numpy as np

from ._validation import as_ensemble, as_vector

GAUSSIAN = "gaussian_prior"
L2 = "l2"


@dataclass(frozen=True, eq=False)
class ProjectionResult:
    """Latent estimate for one trial vector.

    ``history`` holds the successive trial-noise iterates (empty for L2).
    ``residual`` is the last change in the trial-noise estimate.
    """

    w_map: np.ndarray
    sigma2_eps_T: float
    reconstruction: np.ndarray
    iterations: int
    converged: bool
    method: str
    history: tuple = ()
    residual: float = 0.0


def _noise_estimate(model, y, w):
    r = y - model.phi @ w - model.mu
    return float(r @ r) / y.shape[0]


def shrinkage_factors(model, sigma2_eps_T):
    """Per-component multipliers ``s_i / (s_i + sigma2_eps_T)`` on the L2 coefficients.

    Components with zero latent variance get factor 0.
    """
    if sigma2_eps_T < 0:
        raise ValueError(f"sigma2_eps_T must be non-negative, got {sigma2_eps_T}")
    s = model.sigma2_w
    out = np.zeros_like(s)
    pos = s > 0
    out[pos] = s[pos] / (s[pos] + sigma2_eps_T)
    return out


def l2_project(model, y):
    y = as_vector(y, model.d, name="y")
    w = model.phi.T @ (y - model.mu)
    return ProjectionResult(
        w_map=w,
        sigma2_eps_T=_noise_estimate(model, y, w),
        reconstruction=model.phi @ w + model.mu,
        iterations=0,
        converged=True,
        method=L2,
    )


def gaussian_project(model, y, tol=1e-10, max_iter=500):
    """Gaussian-prior MAP latent vector and trial-noise variance.

    Starts from zero trial noise (the L2 solution) and alternates

    - ``w = diag(s_i / (s_i + sigma2)) @ phi.T @ (y - mu)``
    - ``sigma2 = |y - phi @ w - mu|^2 / d``

    until two successive noise iterates differ by at most
    ``tol * max(sigma2, 1e-300)``. Running out of iterations is reported
    through ``converged=False`` with the last iterate, not raised.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    y = as_vector(y, model.d, name="y")
    z = model.phi.T @ (y - model.mu)
    sigma2 = 0.0
    history = []
    converged = False
    delta = np.inf
    for _ in range(max_iter):
        w = shrinkage_factors(model, sigma2) * z
        new = _noise_estimate(model, y, w)
        history.append(new)
        delta = abs(new - sigma2)
        sigma2 = new
        if delta <= tol * max(sigma2, 1e-300):
            converged = True
            break
    w = shrinkage_factors(model, sigma2) * z
    return ProjectionResult(
        w_map=w,
        sigma2_eps_T=sigma2,
        reconstruction=model.phi @ w + model.mu,
        iterations=len(history),
        converged=converged,
        method=GAUSSIAN,
        history=tuple(history),
        residual=float(delta),
    )


def reconstruction_error(y_true, y_proj):
    """Euclidean norm of ``y_true - y_proj``."""
    a = as_vector(y_true, name="y_true")
    b = as_vector(y_proj, a.shape[0], name="y_proj")
    diff = a - b
    return float(np.sqrt(diff @ diff))


def project(model, y, method=GAUSSIAN, tol=1e-10, max_iter=500):
    if method in (GAUSSIAN, "gaussian"):
        return gaussian_project(model, y, tol=tol, max_iter=max_iter)
    if method == L2:
        return l2_project(model, y)
    raise ValueError(f"unknown projection method {method!r}")


def project_batch(model, Y, method=GAUSSIAN, tol=1e-10, max_iter=500):
    """Project every row of ``Y``; results are identical to per-row calls."""
    Y = as_ensemble(Y, name="trial data")
    if Y.shape[1] != model.d:
        raise ValueError(f"trial dimension {Y.shape[1]} does not match model dimension {model.d}")
    return [project(model, y, method, tol, max_iter) for y in Y]
