"""BIC model-dimension selection over the PPCA spectrum."""

from dataclasses import dataclass

import numpy as np

from ._validation import as_ensemble, check_dimension
from .linalg import sample_covariance, symmetric_eigen
from .ppca import log_likelihood_at_mle, model_from_spectrum


@dataclass(frozen=True, eq=False)
class BicTable:
    m_values: np.ndarray
    f_bic: np.ndarray
    selected_m: int
    n: int
    d: int

    def to_rows(self):
        return [(int(m), float(f)) for m, f in zip(self.m_values, self.f_bic)]


def parameter_count(m, d):
    """Free parameters of a rank-``m`` model in ``d`` dimensions.

    Orthonormal basis ``m(d - 1 - (m - 1)/2)``, mean ``d``, noise variance 1.
    Computed in integers; ``m(m - 1)`` is always even.
    """
    m = check_dimension(m, d)
    twice_basis = m * (2 * (d - 1) - (m - 1))
    assert twice_basis % 2 == 0
    return twice_basis // 2 + d + 1


def bic_scan(eigenvalues, n, d, m_max=None):
    """Evaluate ``f_BIC(m) = -2 L_MP(m) + k(m) log n`` for ``m = 1..m_max``.

    Ties go to the smaller ``m``.
    """
    lam = np.asarray(eigenvalues, dtype=np.float64)
    if m_max is None:
        m_max = d - 1
    m_max = check_dimension(m_max, d, name="m_max")
    if np.any(np.diff(lam) > 0):
        raise ValueError("eigenvalues must be sorted descending")
    m_values = np.arange(1, m_max + 1)
    f = np.array(
        [-2.0 * log_likelihood_at_mle(lam, m, n, d) + parameter_count(m, d) * np.log(n) for m in m_values]
    )
    selected = int(m_values[int(np.argmin(f))])
    return BicTable(m_values=m_values, f_bic=f, selected_m=selected, n=int(n), d=int(d))


def spectrum_floor(eigenvalues):
    """Resolution limit of a dense symmetric eigensolve, ``d * eps * lam_max``.

    Eigenvalues below it are round-off; flooring them keeps the logarithms in
    the likelihood finite and makes an exactly low-rank spectrum look flat.
    """
    lam = np.asarray(eigenvalues)
    top = max(float(lam[0]), np.finfo(float).tiny)
    return lam.shape[0] * np.finfo(float).eps * top


def select_model(data, m_max=None, provenance=None):
    """Fit once, scan BIC over ``m``, and return ``(model, table)`` at the minimizing ``m``."""
    Y = as_ensemble(data)
    n, d = Y.shape
    if n < 2:
        raise ValueError("model selection needs at least 2 realizations")
    mu = Y.mean(axis=0)
    eig = symmetric_eigen(sample_covariance(Y, mu))
    lam = np.maximum(eig.eigenvalues, spectrum_floor(eig.eigenvalues))
    table = bic_scan(lam, n, d, m_max)
    model = model_from_spectrum(mu, eig, table.selected_m, n, provenance)
    return model, table
