"""scikit-learn compatible front end."""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted, validate_data

from . import ppca
from .projection import GAUSSIAN, L2, project
from .selection import select_model


class ProbabilisticPCA(TransformerMixin, BaseEstimator):
    """PPCA with estimated latent variances and Gaussian-prior projection.

    Parameters
    ----------
    n_components : int or None, default=None
        Model dimension. ``None`` selects it by minimizing BIC.
    m_max : int or None, default=None
        Upper end of the BIC scan (``n_features - 1`` when None).
    projection : {"gaussian_prior", "l2"}, default="gaussian_prior"
        Latent estimator used by :meth:`transform`.
    tol : float, default=1e-10
        Relative tolerance of the trial-noise fixed point.
    projection_max_iter : int, default=500

    Attributes
    ----------
    model_ : PpcaModel
    mean_ : ndarray of shape (n_features,)
    components_ : ndarray of shape (n_components_, n_features)
        Orthonormal basis vectors as rows.
    latent_variances_ : ndarray of shape (n_components_,)
    noise_variance_ : float
    eigenvalues_ : ndarray of shape (n_features,)
    bic_table_ : BicTable or None
        Set only when the dimension was selected by BIC.
    n_components_ : int
    """

    def __init__(self, n_components=None, m_max=None, projection=GAUSSIAN, tol=1e-10, projection_max_iter=500):
        self.n_components = n_components
        self.m_max = m_max
        self.projection = projection
        self.tol = tol
        self.projection_max_iter = projection_max_iter

    def fit(self, X, y=None):
        X = validate_data(self, X, dtype=np.float64, ensure_min_samples=2, ensure_min_features=2)
        if self.projection not in (GAUSSIAN, L2):
            raise ValueError(f"projection must be {GAUSSIAN!r} or {L2!r}, got {self.projection!r}")
        if self.n_components is None:
            self.model_, self.bic_table_ = select_model(X, self.m_max)
        else:
            self.model_ = ppca.fit(X, self.n_components)
            self.bic_table_ = None
        m = self.model_
        self.mean_ = m.mu
        self.components_ = m.phi.T
        self.latent_variances_ = m.sigma2_w
        self.noise_variance_ = m.sigma2_eps
        self.eigenvalues_ = m.eigenvalues
        self.n_components_ = m.m
        return self

    def _project_all(self, X):
        check_is_fitted(self, "model_")
        X = validate_data(self, X, dtype=np.float64, reset=False)
        return [project(self.model_, row, self.projection, self.tol, self.projection_max_iter) for row in X]

    def transform(self, X):
        """Latent estimates, one row per sample."""
        results = self._project_all(X)
        return np.array([r.w_map for r in results]).reshape(len(results), self.n_components_)

    def inverse_transform(self, W):
        check_is_fitted(self, "model_")
        W = np.asarray(W, dtype=np.float64)
        return W @ self.components_ + self.mean_

    def estimate_noise(self, X):
        """Per-sample trial-noise variance estimates under the configured projection."""
        return np.array([r.sigma2_eps_T for r in self._project_all(X)])

    def score_samples(self, X):
        """Log density of each sample under the fitted predictive Gaussian."""
        check_is_fitted(self, "model_")
        X = validate_data(self, X, dtype=np.float64, reset=False)
        m = self.model_
        s2 = m.sigma2_eps
        if s2 <= 0:
            raise ValueError("predictive density is degenerate for zero noise variance")
        lead = m.sigma2_w + s2
        R = X - m.mu
        Z = R @ m.phi
        quad = (Z**2 / lead).sum(axis=1) + ((R**2).sum(axis=1) - (Z**2).sum(axis=1)) / s2
        logdet = np.log(lead).sum() + (m.d - m.m) * np.log(s2)
        return -0.5 * (m.d * np.log(2 * np.pi) + logdet + quad)

    def score(self, X, y=None):
        return float(np.mean(self.score_samples(X)))
