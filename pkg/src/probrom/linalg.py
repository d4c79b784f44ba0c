"""Dense symmetric linear algebra: covariance accumulation and eigendecomposition.

Eigenpairs are returned in descending order with a fixed sign convention so
that fitted models are reproducible bit for bit.
"""

from dataclasses import dataclass

import numpy as np

from ._validation import as_ensemble, as_vector

_CHUNK = 2048


class EigenError(np.linalg.LinAlgError):
    """Raised when the symmetric eigensolver fails or the input is not symmetric."""


@dataclass(frozen=True)
class EigenSystem:
    """Eigenvalues in descending order; column ``i`` of ``eigenvectors`` pairs with ``eigenvalues[i]``."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def sample_covariance(data, mean):
    """Biased sample covariance ``(1/n) sum_k (y_k - mean)(y_k - mean)^T``.

    The sum runs over fixed-size row blocks in a fixed order with Neumaier
    compensation across blocks, so the result does not depend on how the
    ensemble is partitioned and the trace stays accurate for large ``n``.
    """
    Y = as_ensemble(data)
    mu = as_vector(mean, Y.shape[1], name="mean")
    n, d = Y.shape
    total = np.zeros((d, d))
    comp = np.zeros((d, d))
    for start in range(0, n, _CHUNK):
        X = Y[start:start + _CHUNK] - mu
        block = X.T @ X
        t = total + block
        big = np.abs(total) >= np.abs(block)
        comp += np.where(big, (total - t) + block, (block - t) + total)
        total = t
    S = (total + comp) / n
    return 0.5 * (S + S.T)


def _normalize_signs(V):
    idx = np.argmax(np.abs(V), axis=0)
    signs = np.where(V[idx, np.arange(V.shape[1])] < 0, -1.0, 1.0)
    return V * signs


def symmetric_eigen(s, sym_tol=1e-10):
    """Full eigendecomposition of a real symmetric matrix.

    Parameters
    ----------
    s : (d, d) array_like
        Symmetric matrix. Asymmetry larger than ``sym_tol * max|s|`` is rejected.

    Returns
    -------
    EigenSystem
        Eigenvalues sorted descending. Each eigenvector column is flipped so
        that its largest-magnitude entry is non-negative. Eigenvalues that tie
        exactly are ordered by descending lexicographic comparison of their
        normalized eigenvectors.
    """
    S = np.asarray(s, dtype=np.float64)
    if S.ndim != 2 or S.shape[0] != S.shape[1] or S.shape[0] < 1:
        raise EigenError(f"expected a non-empty square matrix, got shape {S.shape}")
    if not np.all(np.isfinite(S)):
        raise EigenError("matrix contains non-finite entries")
    scale = np.max(np.abs(S))
    asym = np.max(np.abs(S - S.T))
    if asym > sym_tol * max(scale, np.finfo(float).tiny):
        raise EigenError(f"matrix is not symmetric (max asymmetry {asym:.3e})")
    S = 0.5 * (S + S.T)
    try:
        lam, V = np.linalg.eigh(S)
    except np.linalg.LinAlgError as exc:
        off = np.sqrt(np.sum(S**2) - np.sum(np.diag(S) ** 2))
        raise EigenError(f"eigensolver did not converge (off-diagonal norm {off:.3e})") from exc
    V = _normalize_signs(V)
    # np.lexsort treats the last key as primary.
    keys = [-V[i] for i in range(V.shape[0] - 1, -1, -1)] + [-lam]
    order = np.lexsort(keys)
    lam = np.ascontiguousarray(lam[order])
    V = np.ascontiguousarray(V[:, order])
    return EigenSystem(lam, V)
