"""Projection statistics for the covariance separability test.

The core quantity is the scaled projection of the non-separability tensor
onto a product of marginal eigendirections:

    t(r, s) = sqrt(n) * [ (1/n) sum_k (u_r' (X_k - Xbar) v_s)^2
                          - lambda_r * gamma_s ]

with (lambda_r, u_r) from the normalized row covariance and (gamma_s, v_s)
from the normalized column covariance.  Row eigenvectors act on the left,
column eigenvectors on the right; everything downstream is invariant to the
arbitrary signs of the eigenvectors.

Aggregate statistics over a projection set: the plain sum of squares, the
marginally studentized sum, and the fully studentized (whitened) squared
Frobenius norm, together with the variance estimators that drive the
studentizations.
"""

import math
import re
from dataclasses import dataclass, field

import numpy as np

from .covariance import MarginalPair, marginal_covariances, validate_sample
from .errors import (
    DegenerateVariance,
    InvalidArgument,
    NonRectangularSet,
    ZeroEigenvalue,
)
from .linalg import EigenSystem, inv_sqrt, sym_eigen

_ZERO_EIG_RTOL = 1e-12
_DEGENERATE_VAR_RTOL = 1e-15
_TIE_RTOL = 1e-8


@dataclass(frozen=True)
class ProjectionSet:
    """Finite set of 1-based (row_rank, col_rank) eigendirection pairs."""

    pairs: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if not self.pairs:
            raise InvalidArgument("projection set must be non-empty")
        if len(set(self.pairs)) != len(self.pairs):
            raise InvalidArgument("projection set has duplicate pairs")
        for r, s in self.pairs:
            if r < 1 or s < 1:
                raise InvalidArgument(f"indices are 1-based, got ({r}, {s})")

    @classmethod
    def rectangular(cls, p: int, q: int) -> "ProjectionSet":
        """The full grid {1..p} x {1..q} in row-major order."""
        if p < 1 or q < 1:
            raise InvalidArgument(f"need p, q >= 1, got ({p}, {q})")
        return cls(tuple((r, s) for r in range(1, p + 1) for s in range(1, q + 1)))

    @classmethod
    def from_pairs(cls, pairs) -> "ProjectionSet":
        return cls(tuple((int(r), int(s)) for r, s in pairs))

    @classmethod
    def parse(cls, text: str) -> "ProjectionSet":
        """Parse ``"pxq"`` or ``"(r,s);(r,s);..."``."""
        text = text.strip()
        m = re.fullmatch(r"(\d+)\s*x\s*(\d+)", text)
        if m:
            return cls.rectangular(int(m.group(1)), int(m.group(2)))
        pairs = []
        for chunk in text.split(";"):
            m = re.fullmatch(r"\s*\(\s*(\d+)\s*,\s*(\d+)\s*\)\s*", chunk)
            if not m:
                raise InvalidArgument(f"cannot parse projection set {text!r}")
            pairs.append((int(m.group(1)), int(m.group(2))))
        return cls.from_pairs(pairs)

    @property
    def max_row(self) -> int:
        return max(r for r, _ in self.pairs)

    @property
    def max_col(self) -> int:
        return max(s for _, s in self.pairs)

    @property
    def rect_shape(self) -> tuple[int, int] | None:
        """(p, q) when the pairs are exactly {1..p} x {1..q}, else None."""
        p, q = self.max_row, self.max_col
        if len(self.pairs) == p * q and set(self.pairs) == {
            (r, s) for r in range(1, p + 1) for s in range(1, q + 1)
        }:
            return p, q
        return None

    @property
    def is_rectangular(self) -> bool:
        return self.rect_shape is not None

    def canonical(self) -> str:
        shape = self.rect_shape
        if shape is not None:
            return f"{shape[0]}x{shape[1]}"
        return ";".join(f"({r},{s})" for r, s in self.pairs)


@dataclass(frozen=True)
class TMatrix:
    """Projection statistic values aligned with ``proj.pairs``."""

    proj: ProjectionSet
    values: np.ndarray

    def __getitem__(self, pair: tuple[int, int]) -> float:
        return float(self.values[self.proj.pairs.index(pair)])

    def matrix(self) -> np.ndarray:
        """Dense p x q layout; rectangular sets only."""
        shape = self.proj.rect_shape
        if shape is None:
            raise NonRectangularSet("dense layout needs a rectangular set")
        out = np.empty(shape)
        for (r, s), v in zip(self.proj.pairs, self.values):
            out[r - 1, s - 1] = v
        return out


@dataclass(frozen=True)
class SeparableFit:
    """Mean, normalized marginals and their eigensystems for one sample."""

    mean: np.ndarray
    marginals: MarginalPair
    eig1: EigenSystem
    eig2: EigenSystem
    centered: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.centered.shape[0]


def fit_separable(x: np.ndarray) -> SeparableFit:
    """Estimate the separable model: mean, marginals, eigenstructure."""
    x = validate_sample(x)
    mean = x.mean(axis=0)
    mp = marginal_covariances(x)
    return SeparableFit(
        mean=mean,
        marginals=mp,
        eig1=sym_eigen(mp.c1),
        eig2=sym_eigen(mp.c2),
        centered=x - mean,
    )


def _check_indices(proj: ProjectionSet, d1: int, d2: int) -> None:
    if proj.max_row > d1 or proj.max_col > d2:
        raise InvalidArgument(
            f"projection set needs ranks up to ({proj.max_row}, {proj.max_col}) "
            f"but the grid is {d1} x {d2}"
        )


def t_stat(
    x: np.ndarray, proj: ProjectionSet, fit: SeparableFit | None = None
) -> TMatrix:
    """Projection statistics over a set of eigendirection pairs.

    Requires every requested pair to have a strictly positive eigenvalue
    product (threshold ``1e-12 * lambda_1 * gamma_1``); degenerate requests
    raise :class:`ZeroEigenvalue`.
    """
    if fit is None:
        fit = fit_separable(x)
    n = fit.n
    d1, d2 = fit.eig1.dim, fit.eig2.dim
    _check_indices(proj, d1, d2)
    lam, gam = fit.eig1.values, fit.eig2.values
    floor = _ZERO_EIG_RTOL * lam[0] * gam[0]
    rows = sorted({r for r, _ in proj.pairs})
    cols = sorted({s for _, s in proj.pairs})
    for r, s in proj.pairs:
        if lam[r - 1] * gam[s - 1] <= floor:
            raise ZeroEigenvalue(
                f"eigenvalue product at ({r}, {s}) is numerically zero"
            )
    u = fit.eig1.vectors[:, [r - 1 for r in rows]]
    v = fit.eig2.vectors[:, [s - 1 for s in cols]]
    scores = np.einsum("nij,ir,js->nrs", fit.centered, u, v, optimize=True)
    msq = (scores * scores).mean(axis=0)
    row_pos = {r: i for i, r in enumerate(rows)}
    col_pos = {s: i for i, s in enumerate(cols)}
    values = np.array(
        [
            math.sqrt(n) * (msq[row_pos[r], col_pos[s]] - lam[r - 1] * gam[s - 1])
            for r, s in proj.pairs
        ]
    )
    return TMatrix(proj=proj, values=values)


def sigma_hat_sq(
    mp: MarginalPair, eig1: EigenSystem, eig2: EigenSystem, r: int, s: int
) -> float:
    """Asymptotic variance of one projection statistic under Gaussian data.

    With tr1, tr2 and |c1|^2, |c2|^2 the traces and squared HS norms of the
    normalized marginals:

        sigma^2 = 2 lam_r^2 gam_s^2
                  * (tr1^2 + |c1|^2 - 2 lam_r tr1)
                  * (tr2^2 + |c2|^2 - 2 gam_s tr2) / (tr1^2 tr2^2)
    """
    lam, gam = eig1.values, eig2.values
    if r < 1 or r > lam.size or s < 1 or s > gam.size:
        raise InvalidArgument(f"invalid direction ({r}, {s})")
    tr1, tr2 = mp.trace_c1, mp.trace_c2
    f1 = tr1 * tr1 + mp.hs_sq_c1 - 2.0 * lam[r - 1] * tr1
    f2 = tr2 * tr2 + mp.hs_sq_c2 - 2.0 * gam[s - 1] * tr2
    out = 2.0 * lam[r - 1] ** 2 * gam[s - 1] ** 2 * f1 * f2 / (tr1 * tr1 * tr2 * tr2)
    if out <= _DEGENERATE_VAR_RTOL * (lam[0] * gam[0]) ** 2:
        raise DegenerateVariance(
            f"variance estimate at ({r}, {s}) is numerically zero "
            "(rank-deficient marginal)"
        )
    return float(out)


def sigma_lr(
    mp: MarginalPair, eig1: EigenSystem, eig2: EigenSystem, p: int, q: int
) -> tuple[np.ndarray, np.ndarray]:
    """Row and column covariance factors of the p x q statistic matrix.

    The asymptotic covariance of the statistic matrix over a rectangular set
    is separable; this returns its estimated factors

        left[r, r']  = sqrt(2) lam_r lam_r'
                       * (d_rr' tr1^2 + |c1|^2 - (lam_r + lam_r') tr1)
                       / (tr1 tr2)

    and the analogous ``right`` for the column side.  Diagonal consistency
    with :func:`sigma_hat_sq` holds: left[r,r] * right[s,s] == sigma^2(r,s).
    """
    lam, gam = eig1.values, eig2.values
    if p < 1 or p > lam.size or q < 1 or q > gam.size:
        raise InvalidArgument(f"invalid shape ({p}, {q})")
    if lam[p - 1] <= 0.0 or gam[q - 1] <= 0.0:
        raise ZeroEigenvalue("zero eigenvalue inside the requested rectangle")
    tr1, tr2 = mp.trace_c1, mp.trace_c2
    denom = tr1 * tr2
    lp, gq = lam[:p], gam[:q]
    left = (
        math.sqrt(2.0)
        * np.outer(lp, lp)
        * (np.eye(p) * tr1 * tr1 + mp.hs_sq_c1 - np.add.outer(lp, lp) * tr1)
        / denom
    )
    right = (
        math.sqrt(2.0)
        * np.outer(gq, gq)
        * (np.eye(q) * tr2 * tr2 + mp.hs_sq_c2 - np.add.outer(gq, gq) * tr2)
        / denom
    )
    return left, right


def g_stat(t: TMatrix) -> float:
    """Sum of squared projection statistics."""
    return float((t.values * t.values).sum())


def g_tilde_a(t: TMatrix, sigmas: dict[tuple[int, int], float]) -> float:
    """Marginally studentized sum: each squared statistic over its variance."""
    total = 0.0
    for (r, s), v in zip(t.proj.pairs, t.values):
        s2 = sigmas[(r, s)]
        if s2 <= 0.0:
            raise DegenerateVariance(f"non-positive variance at ({r}, {s})")
        total += v * v / s2
    return float(total)


def g_tilde(t: TMatrix, left: np.ndarray, right: np.ndarray) -> float:
    """Fully studentized statistic: squared Frobenius norm after whitening.

    Whitens the dense statistic matrix by the inverse square roots of the
    row/column covariance factors; the value does not depend on which square
    root is used (it equals ``trace(left^-1 T right^-1 T')``).
    """
    if not t.proj.is_rectangular:
        raise NonRectangularSet("full studentization needs a rectangular set")
    li = inv_sqrt(left)
    ri = inv_sqrt(right)
    w = li @ t.matrix() @ ri.T
    return float((w * w).sum())


def eigen_gap_warnings(
    eig1: EigenSystem, eig2: EigenSystem, proj: ProjectionSet
) -> list[str]:
    """Warn when eigenvalue ties make the requested directions ill-determined."""
    warnings = []
    for name, values, kmax in (
        ("row", eig1.values, proj.max_row),
        ("column", eig2.values, proj.max_col),
    ):
        tol = _TIE_RTOL * values[0]
        for k in range(1, min(kmax + 1, values.size)):
            if values[k - 1] - values[k] < tol:
                warnings.append(
                    f"{name} eigenvalue gap below tie tolerance after rank {k}; "
                    "individual directions are not well determined"
                )
                break
    return warnings
