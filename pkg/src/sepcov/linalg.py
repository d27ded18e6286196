"""Dense symmetric linear algebra primitives.

Eigen-decompositions with a fixed sign convention, symmetric inverse square
roots, dense 4-index products of two marginal covariances, and partial
traces.  The 4-index form exists only as a small-grid oracle; the hard cap
keeps it from being used on production-sized grids.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionTooLarge,
    NegativeEigenvalue,
    NotSymmetric,
    SingularMatrix,
)

# Dense 4-index tensors are oracles for small grids only.
MAX_FULL_GRID = 1024

_SYM_RTOL = 1e-12
_PSD_BAND = 1e-10


@dataclass(frozen=True)
class EigenSystem:
    """Eigenvalues (non-increasing) and matching orthonormal eigenvectors.

    ``vectors[:, r]`` is the eigenvector for ``values[r]``.  Signs are fixed
    so the largest-magnitude coordinate of each vector is positive.
    """

    values: np.ndarray
    vectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.values.shape[0]


def check_symmetric(m: np.ndarray, rtol: float = _SYM_RTOL) -> np.ndarray:
    """Validate a square symmetric matrix and return its symmetrized copy."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise NotSymmetric(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NotSymmetric("matrix has non-finite entries")
    scale = float(np.abs(m).max()) if m.size else 0.0
    if scale > 0 and float(np.abs(m - m.T).max()) > rtol * scale:
        raise NotSymmetric("matrix is not symmetric within tolerance")
    return 0.5 * (m + m.T)


def _eigh_descending(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    values, vectors = np.linalg.eigh(m)
    return values[::-1].copy(), vectors[:, ::-1].copy()


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    # Largest-magnitude coordinate positive: reproducible intermediate output
    # even though every downstream statistic is sign-invariant.
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def sym_eigen(m: np.ndarray) -> EigenSystem:
    """Eigen-decompose a symmetric PSD matrix.

    Eigenvalues come back non-increasing.  Values in the numerical noise band
    ``[-1e-10 * lambda_max, 0]`` are clamped to zero; anything below the band
    raises :class:`NegativeEigenvalue`.
    """
    m = check_symmetric(m)
    values, vectors = _eigh_descending(m)
    scale = max(float(values[0]), 0.0) if values.size else 0.0
    if values.size and float(values[-1]) < -_PSD_BAND * scale:
        raise NegativeEigenvalue(
            f"eigenvalue {values[-1]:.3e} below the PSD noise band"
        )
    return EigenSystem(values=np.maximum(values, 0.0), vectors=_fix_signs(vectors))


def inv_sqrt(m: np.ndarray, rel_tol: float = 1e-10) -> np.ndarray:
    """Symmetric inverse square root of an SPD matrix.

    Returns ``A = V diag(values^-1/2) V^T`` so that ``A m A^T = I``.  Raises
    :class:`SingularMatrix` when any eigenvalue falls below
    ``rel_tol * lambda_max``: whitening is then impossible.
    """
    m = check_symmetric(m)
    values, vectors = _eigh_descending(m)
    lam_max = float(values[0]) if values.size else 0.0
    if lam_max <= 0.0 or float(values[-1]) < rel_tol * lam_max:
        raise SingularMatrix(
            f"eigenvalue below rel_tol*lambda_max ({rel_tol:.1e} * {lam_max:.3e})"
        )
    a = (vectors / np.sqrt(values)) @ vectors.T
    return 0.5 * (a + a.T)


def psd_sqrt(m: np.ndarray) -> np.ndarray:
    """Symmetric PSD square root via eigen-decomposition.

    Rank-deficient inputs are fine (zero eigenvalues map to zero), which is
    exactly what resampled covariance fits need.
    """
    es = sym_eigen(m)
    a = (es.vectors * np.sqrt(es.values)) @ es.vectors.T
    return 0.5 * (a + a.T)


def _check_grid(d1: int, d2: int) -> None:
    if d1 * d2 > MAX_FULL_GRID:
        raise DimensionTooLarge(
            f"dense 4-index covariance capped at d1*d2 <= {MAX_FULL_GRID}, got {d1}*{d2}"
        )


def kron_full(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Dense 4-index product: ``out[i, j, k, l] = a[i, k] * b[j, l]``.

    This is the covariance tensor of a separable model with row factor ``a``
    and column factor ``b``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    _check_grid(a.shape[0], b.shape[0])
    return np.einsum("ik,jl->ijkl", a, b)


def partial_trace_1(c: np.ndarray) -> np.ndarray:
    """Contract the row indices: ``out[j, l] = sum_i c[i, j, i, l]``."""
    return np.einsum("ijil->jl", np.asarray(c, dtype=float))


def partial_trace_2(c: np.ndarray) -> np.ndarray:
    """Contract the column indices: ``out[i, k] = sum_j c[i, j, k, j]``."""
    return np.einsum("ijkj->ik", np.asarray(c, dtype=float))


def full_trace(c: np.ndarray) -> float:
    """Trace over the full index set: ``sum_ij c[i, j, i, j]``."""
    return float(np.einsum("ijij->", np.asarray(c, dtype=float)))
