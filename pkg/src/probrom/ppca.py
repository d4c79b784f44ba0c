"""Closed-form PPCA with orthonormal basis and per-component latent variances.

The basis is the leading eigenvectors of the sample covariance (no rotation),
the noise variance is the mean of the trailing eigenvalues, and each latent
variance is the corresponding leading eigenvalue minus the noise variance.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from ._validation import as_ensemble, as_vector, check_dimension
from .linalg import sample_covariance, symmetric_eigen


class ClampWarning(UserWarning):
    """A leading eigenvalue fell below the noise estimate; its latent variance was set to 0."""


def _frozen(a):
    a = np.array(a, dtype=np.float64)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class PpcaModel:
    """A trained reduced-order model ``y = phi @ w + mu + noise``.

    Attributes
    ----------
    mu : (d,) ndarray
    phi : (d, m) ndarray
        Orthonormal basis columns.
    sigma2_w : (m,) ndarray
        Latent variances, non-increasing.
    sigma2_eps : float
        Training noise variance.
    eigenvalues : (d,) ndarray
        Full descending spectrum of the training covariance.
    n : int
        Training ensemble size.
    logL : float
        Maximized log-likelihood at this ``m``.
    clamped : tuple of int
        Zero-based indices whose latent variance was clamped to zero.
    diagnostics : tuple of str
    provenance : dict
    """

    mu: np.ndarray
    phi: np.ndarray
    sigma2_w: np.ndarray
    sigma2_eps: float
    eigenvalues: np.ndarray
    n: int
    logL: float
    clamped: tuple = ()
    diagnostics: tuple = ()
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("mu", "phi", "sigma2_w", "eigenvalues"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        d, m = self.phi.shape
        if self.mu.shape != (d,) or self.sigma2_w.shape != (m,) or self.eigenvalues.shape != (d,):
            raise ValueError("inconsistent PpcaModel field shapes")
        check_dimension(m, d)

    @property
    def d(self):
        return self.phi.shape[0]

    @property
    def m(self):
        return self.phi.shape[1]


def estimate_mean(data):
    """Sample mean of the ensemble rows."""
    Y = as_ensemble(data)
    return Y.mean(axis=0)


def log_likelihood_at_mle(eigenvalues, m, n, d):
    """Maximized PPCA log-likelihood expressed through the covariance spectrum.

    ``-(dn/2) log(2 pi) - (n/2) [sum_{j<=m} log lam_j + (d-m) log(mean(lam_{j>m})) + d]``
    """
    lam = np.asarray(eigenvalues, dtype=np.float64)
    if lam.shape != (d,):
        raise ValueError(f"expected {d} eigenvalues, got {lam.shape}")
    m = check_dimension(m, d)
    lead = lam[:m]
    if np.any(lead <= 0):
        raise ValueError(f"leading eigenvalues must be positive, got min {lead.min():.3e}")
    tail = lam[m:].mean()
    if tail <= 0:
        raise ValueError(f"trailing eigenvalue average must be positive, got {tail:.3e}")
    return -0.5 * d * n * np.log(2 * np.pi) - 0.5 * n * (np.sum(np.log(lead)) + (d - m) * np.log(tail) + d)


def model_from_spectrum(mu, eigensystem, m, n, provenance=None):
    """Assemble a :class:`PpcaModel` at dimension ``m`` from a precomputed eigensystem."""
    lam = eigensystem.eigenvalues
    d = lam.shape[0]
    m = check_dimension(m, d)
    # round-off can push the trailing mean of a PSD spectrum slightly negative
    sigma2_eps = max(float(lam[m:].mean()), 0.0)
    excess = lam[:m] - sigma2_eps
    clamped = tuple(int(i) for i in np.flatnonzero(excess < 0))
    if clamped:
        warnings.warn(
            f"latent variances clamped to zero at indices {list(clamped)}", ClampWarning, stacklevel=3
        )
    sigma2_w = np.maximum(excess, 0.0)
    diagnostics = []
    if clamped:
        diagnostics.append(f"clamped:{','.join(map(str, clamped))}")
    if sigma2_w[0] < sigma2_eps:
        diagnostics.append("weak_structure")
    try:
        logL = float(log_likelihood_at_mle(lam, m, n, d))
    except ValueError:
        logL = float("-inf")
    return PpcaModel(
        mu=mu,
        phi=eigensystem.eigenvectors[:, :m],
        sigma2_w=sigma2_w,
        sigma2_eps=sigma2_eps,
        eigenvalues=lam,
        n=int(n),
        logL=logL,
        clamped=clamped,
        diagnostics=tuple(diagnostics),
        provenance=dict(provenance or {}),
    )


def fit(data, m, provenance=None):
    """Fit the PPCA model of dimension ``m`` to an ensemble of shape (n, d)."""
    Y = as_ensemble(data)
    n, d = Y.shape
    m = check_dimension(m, d)
    if n < 2:
        raise ValueError("fit needs at least 2 realizations")
    mu = Y.mean(axis=0)
    eig = symmetric_eigen(sample_covariance(Y, mu))
    return model_from_spectrum(mu, eig, m, n, provenance)


def reconstruct(model, w):
    """Noise-free signal ``phi @ w + mu`` for a latent vector."""
    w = as_vector(w, model.m, name="w")
    return model.phi @ w + model.mu
