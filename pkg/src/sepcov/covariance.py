"""Covariance estimation for replicated matrix-valued samples.

A sample set is an ``(n, d1, d2)`` array: n replicate surfaces observed on a
d1 x d2 grid.  The marginal (row/column) covariances are computed directly
from accumulated matrix products, never from the full 4-index covariance;
the full tensor is available only as a small-grid oracle.  The squared
Hilbert-Schmidt norm of the difference between the sample covariance and its
separable approximation streams over row-index blocks so the full covariance
is never materialized.

Covariances use divisor n (not n-1); the resulting O(1/n) bias vanishes in
all the asymptotics built on top.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateSample,
    DimensionTooLarge,
    EmptySample,
    ShapeMismatch,
)
from .linalg import MAX_FULL_GRID

# Exact-zero guard only; no data-scale cutoff.
_DEGENERATE_SS = 1e-300


@dataclass(frozen=True)
class MarginalPair:
    """Normalized marginal covariance estimates with cached scalars.

    ``c1`` (d1 x d1) and ``c2`` (d2 x d2) are the partial traces of the
    sample covariance, each divided by the square root of its own trace, so
    that ``trace(c1) == trace(c2) == sqrt(total trace)`` and the product
    ``c1 (x) c2`` is the separable approximation of the sample covariance.
    """

    c1: np.ndarray
    c2: np.ndarray
    trace_c1: float
    trace_c2: float
    hs_sq_c1: float
    hs_sq_c2: float


def validate_sample(x: np.ndarray, min_n: int = 2) -> np.ndarray:
    """Check an (n, d1, d2) stack of replicates."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 3:
        raise ShapeMismatch(f"expected (n, d1, d2) array, got shape {x.shape}")
    if x.shape[0] < min_n:
        raise EmptySample(f"need at least {min_n} replicates, got {x.shape[0]}")
    if not np.all(np.isfinite(x)):
        raise ShapeMismatch("sample contains non-finite entries")
    return x


def sample_mean(x: np.ndarray) -> np.ndarray:
    """Entrywise mean over replicates."""
    x = validate_sample(x, min_n=1)
    return x.mean(axis=0)


def _centered(x: np.ndarray) -> np.ndarray:
    return x - x.mean(axis=0)


def marginal_covariances(x: np.ndarray) -> MarginalPair:
    """Normalized marginal covariances via accumulated matrix products.

    Equals the naive double sums
    ``c1_raw[k, k'] = (1/n) sum_i sum_l xc[i, k, l] xc[i, k', l]`` (and the
    transposed-product analogue for ``c2_raw``) but runs as two tensor
    contractions.  Raises :class:`DegenerateSample` when the total centered
    sum of squares is exactly zero.
    """
    x = validate_sample(x)
    n = x.shape[0]
    xc = _centered(x)
    ss = float((xc * xc).sum())
    if ss < _DEGENERATE_SS:
        raise DegenerateSample("all replicates identical: total variance is zero")
    c1_raw = np.tensordot(xc, xc, axes=([0, 2], [0, 2])) / n
    c2_raw = np.tensordot(xc, xc, axes=([0, 1], [0, 1])) / n
    c1 = c1_raw / math.sqrt(np.trace(c1_raw))
    c2 = c2_raw / math.sqrt(np.trace(c2_raw))
    return MarginalPair(
        c1=c1,
        c2=c2,
        trace_c1=float(np.trace(c1)),
        trace_c2=float(np.trace(c2)),
        hs_sq_c1=float((c1 * c1).sum()),
        hs_sq_c2=float((c2 * c2).sum()),
    )


def full_covariance(x: np.ndarray) -> np.ndarray:
    """Dense 4-index sample covariance (small grids only).

    ``C[i, j, k, l] = (1/n) sum_m xc[m, i, j] xc[m, k, l]``.
    """
    x = validate_sample(x)
    n, d1, d2 = x.shape
    if d1 * d2 > MAX_FULL_GRID:
        raise DimensionTooLarge(
            f"dense covariance capped at d1*d2 <= {MAX_FULL_GRID}, got {d1}*{d2}"
        )
    xc = _centered(x)
    return np.einsum("nij,nkl->ijkl", xc, xc) / n


def hs_norm_dn_streaming(x: np.ndarray) -> float:
    """Squared HS norm of (sample covariance - separable approximation).

    Streams over row-index blocks: per row index i it forms the slice
    ``y[j, k, l] = (1/n) sum_m xc[m, i, j] xc[m, k, l]`` and accumulates
    ``(y - c1[i, k] c2[j, l])^2``, so memory stays at
    O(d1^2 + d2^2 + n*d1*d2) plus one slice.  Block partial sums are reduced
    with exact summation, making the result independent of the reduction
    schedule.
    """
    x = validate_sample(x)
    n, d1, _ = x.shape
    mp = marginal_covariances(x)
    xc = _centered(x)
    parts = []
    for i in range(d1):
        y = np.einsum("nj,nkl->jkl", xc[:, i, :], xc, optimize=True) / n
        sep = mp.c2[:, None, :] * mp.c1[i][None, :, None]
        d = y - sep
        parts.append(float((d * d).sum()))
    return math.fsum(parts)


def hs_norm_dn_diff_streaming(boot: np.ndarray, orig: np.ndarray) -> float:
    """Squared HS norm of the difference of two non-separability tensors.

    For a resampled set ``boot`` and the original set ``orig`` this is
    ``|D_boot - D_orig|^2`` where D is (sample covariance - separable
    approximation), accumulated entry-block by entry-block exactly like
    :func:`hs_norm_dn_streaming`.  Identical inputs give exactly zero.
    """
    boot = validate_sample(boot)
    orig = validate_sample(orig)
    if boot.shape != orig.shape:
        raise ShapeMismatch(f"shape mismatch: {boot.shape} vs {orig.shape}")
    n, d1, _ = orig.shape
    mp_o = marginal_covariances(orig)
    mp_b = marginal_covariances(boot)
    xo = _centered(orig)
    xb = _centered(boot)
    parts = []
    for i in range(d1):
        y = (
            np.einsum("nj,nkl->jkl", xo[:, i, :], xo, optimize=True)
            - np.einsum("nj,nkl->jkl", xb[:, i, :], xb, optimize=True)
        ) / n
        sep_b = mp_b.c2[:, None, :] * mp_b.c1[i][None, :, None]
        sep_o = mp_o.c2[:, None, :] * mp_o.c1[i][None, :, None]
        # y carries (orig - boot) of the raw covariances, so the separable
        # corrections enter as (boot - orig); the entry then equals
        # -(D_boot - D_orig) and squares to the right thing.
        d = y - sep_o + sep_b
        parts.append(float((d * d).sum()))
    return math.fsum(parts)
