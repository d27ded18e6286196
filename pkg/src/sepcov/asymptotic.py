"""Chi-square reference distributions and the asymptotic tests.

Under Gaussian data the marginally studentized single-direction statistic is
asymptotically chi-square with 1 degree of freedom, and the fully
studentized statistic over a p x q rectangle is asymptotically chi-square
with p*q degrees of freedom.  This module provides the survival function,
the corresponding tests, the closed-form Gaussian covariance of the
statistic vector, and a small-instance empirical fourth-moment covariance
used to validate the Gaussian closed form (it is deliberately not exposed as
a user-facing test: its plug-in moment estimates need very large samples).
"""

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .covariance import MarginalPair
from .errors import DimensionTooLarge, InvalidArgument
from .linalg import EigenSystem
from .teststats import (
    ProjectionSet,
    SeparableFit,
    eigen_gap_warnings,
    fit_separable,
    g_tilde,
    sigma_hat_sq,
    sigma_lr,
    t_stat,
)

_GAMMA_TOL = 1e-15
_GAMMA_ITMAX = 1000


@dataclass(frozen=True)
class TestReport:
    """Outcome of one separability test, serializable as JSON."""

    __test__ = False  # keep pytest from collecting this as a test class

    statistic: str
    value: float
    p_value: float
    method: str  # asymptotic | param_boot | emp_boot
    proj: str
    df: int | None = None
    B: int | None = None
    seed: int | None = None
    p_plus: float | None = None
    warnings: list[str] = field(default_factory=list)

    def __post_init__(self):
        if not 0.0 <= self.p_value <= 1.0:
            raise InvalidArgument(f"p-value {self.p_value} outside [0, 1]")
        if self.method == "asymptotic" and (self.df is None or self.df < 1):
            raise InvalidArgument("asymptotic report needs df >= 1")

    def to_dict(self) -> dict:
        return asdict(self)


def _lower_series(a: float, x: float) -> float:
    # Regularized lower incomplete gamma P(a, x) by series expansion.
    ap = a
    term = 1.0 / a
    total = term
    for _ in range(_GAMMA_ITMAX):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _GAMMA_TOL:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _upper_cf(a: float, x: float) -> float:
    # Regularized upper incomplete gamma Q(a, x) by modified Lentz continued
    # fraction.
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, _GAMMA_ITMAX + 1):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _GAMMA_TOL:
            break
    return h * math.exp(-x + a * math.log(x) - math.lgamma(a))


def chi2_sf(x: float, df: int) -> float:
    """Chi-square survival function via the regularized incomplete gamma.

    Series expansion below ``x < df + 1``, continued fraction above; absolute
    accuracy around 1e-12 or better over the relevant range.
    """
    if df < 1:
        raise InvalidArgument(f"df must be >= 1, got {df}")
    if not math.isfinite(x) or x < 0.0:
        raise InvalidArgument(f"chi-square statistic must be >= 0, got {x}")
    if x == 0.0:
        return 1.0
    a = 0.5 * df
    xg = 0.5 * x
    if x < df + 1.0:
        return min(1.0, max(0.0, 1.0 - _lower_series(a, xg)))
    return min(1.0, max(0.0, _upper_cf(a, xg)))


def asymptotic_test(
    x: np.ndarray,
    proj: ProjectionSet,
    variant: str = "studentized_full",
    fit: SeparableFit | None = None,
) -> TestReport:
    """Chi-square test of separability.

    ``variant="single"`` needs a singleton projection set and refers the
    marginally studentized squared statistic to chi-square(1);
    ``variant="studentized_full"`` needs a rectangular set and refers the
    whitened squared Frobenius norm to chi-square(p*q).
    """
    if fit is None:
        fit = fit_separable(x)
    warnings = eigen_gap_warnings(fit.eig1, fit.eig2, proj)
    if variant == "single":
        if len(proj.pairs) != 1:
            raise InvalidArgument("variant 'single' needs a singleton projection set")
        (r, s) = proj.pairs[0]
        t = t_stat(x, proj, fit)
        s2 = sigma_hat_sq(fit.marginals, fit.eig1, fit.eig2, r, s)
        value = t.values[0] ** 2 / s2
        return TestReport(
            statistic="g",
            value=float(value),
            p_value=chi2_sf(float(value), 1),
            method="asymptotic",
            proj=proj.canonical(),
            df=1,
            warnings=warnings,
        )
    if variant == "studentized_full":
        shape = proj.rect_shape
        if shape is None:
            raise InvalidArgument(
                "variant 'studentized_full' needs a rectangular projection set"
            )
        p, q = shape
        t = t_stat(x, proj, fit)
        left, right = sigma_lr(fit.marginals, fit.eig1, fit.eig2, p, q)
        value = g_tilde(t, left, right)
        return TestReport(
            statistic="g_tilde",
            value=float(value),
            p_value=chi2_sf(float(value), p * q),
            method="asymptotic",
            proj=proj.canonical(),
            df=p * q,
            warnings=warnings,
        )
    raise InvalidArgument(f"unknown variant {variant!r}")


def gaussian_proj_covariance(
    mp: MarginalPair, eig1: EigenSystem, eig2: EigenSystem, proj: ProjectionSet
) -> np.ndarray:
    """Closed-form asymptotic covariance of the statistic vector (Gaussian data).

    Entry for pairs (r, s), (r', s'):

        2 lam_r lam_r' gam_s gam_s'
        * (d_rr' tr1^2 + |c1|^2 - (lam_r + lam_r') tr1)
        * (d_ss' tr2^2 + |c2|^2 - (gam_s + gam_s') tr2) / (tr1 tr2)^2

    The matrix is an outer product of a row factor and a column factor; for
    rectangular sets it equals ``kron(left, right)`` from
    :func:`sepcov.teststats.sigma_lr`.
    """
    lam, gam = eig1.values, eig2.values
    tr1, tr2 = mp.trace_c1, mp.trace_c2
    trc = tr1 * tr2
    m = len(proj.pairs)
    out = np.empty((m, m))
    for a, (r, s) in enumerate(proj.pairs):
        for b, (rp, sp) in enumerate(proj.pairs):
            f1 = (
                (tr1 * tr1 if r == rp else 0.0)
                + mp.hs_sq_c1
                - (lam[r - 1] + lam[rp - 1]) * tr1
            )
            f2 = (
                (tr2 * tr2 if s == sp else 0.0)
                + mp.hs_sq_c2
                - (gam[s - 1] + gam[sp - 1]) * tr2
            )
            out[a, b] = (
                2.0
                * lam[r - 1]
                * lam[rp - 1]
                * gam[s - 1]
                * gam[sp - 1]
                * f1
                * f2
                / (trc * trc)
            )
    return out


def empirical_corollary1_sigma(x: np.ndarray, proj: ProjectionSet) -> np.ndarray:
    """Plug-in fourth-moment asymptotic covariance of the statistic vector.

    Small-instance oracle for non-Gaussian data: estimates the projection
    score fourth moments empirically over the full discrete eigenbasis and
    assembles the general asymptotic covariance from them.  Restricted to
    d1*d2 <= 256 and at most 4 pairs; useful for validating the Gaussian
    closed form, too slow and too noisy for production testing.
    """
    from .covariance import _centered  # local import: oracle-only dependency

    x = np.asarray(x, dtype=float)
    n, d1, d2 = x.shape
    if d1 * d2 > 256 or len(proj.pairs) > 4:
        raise DimensionTooLarge(
            "fourth-moment oracle restricted to d1*d2 <= 256 and <= 4 pairs"
        )
    fit = fit_separable(x)
    lam, gam = fit.eig1.values, fit.eig2.values
    tr1, tr2 = fit.marginals.trace_c1, fit.marginals.trace_c2
    xc = _centered(x)
    tr_c = float((xc * xc).sum()) / n
    scores = np.einsum(
        "nkl,ki,lj->nij", xc, fit.eig1.vectors, fit.eig2.vectors, optimize=True
    )
    q = scores * scores
    beta = np.einsum("nij,nkl->ijkl", q, q, optimize=True) / n
    alpha = np.outer(lam, gam)

    b_full = float(beta.sum())
    b_ij = beta.sum(axis=(2, 3))   # free (i, j), second pair summed out
    b_il = beta.sum(axis=(1, 2))   # free (i, l)
    b_jl = beta.sum(axis=(0, 2))   # free (j, l)
    b_ik = beta.sum(axis=(1, 3))   # free (i, k)
    b_ijl = beta.sum(axis=2)       # free (i, j, l)
    b_ijk = beta.sum(axis=3)       # free (i, j, k)
    b_i = beta.sum(axis=(1, 2, 3))
    b_j = beta.sum(axis=(0, 2, 3))

    m = len(proj.pairs)
    out = np.empty((m, m))
    for a, (r1, s1) in enumerate(proj.pairs):
        r, s = r1 - 1, s1 - 1
        for c, (r2, s2) in enumerate(proj.pairs):
            rp, sp = r2 - 1, s2 - 1
            val = beta[r, s, rp, sp]
            val += (
                alpha[r, s] * b_ij[rp, sp]
                + alpha[rp, s] * b_il[r, sp]
                + alpha[r, sp] * b_il[rp, s]
                + alpha[rp, sp] * b_ij[r, s]
            ) / tr_c
            val += alpha[r, s] * alpha[rp, sp] * b_full / (tr_c * tr_c)
            val += lam[r] * lam[rp] * b_jl[s, sp] / (tr1 * tr1)
            val += gam[s] * gam[sp] * b_ik[r, rp] / (tr2 * tr2)
            val -= (lam[r] * b_ijl[rp, sp, s] + lam[rp] * b_ijl[r, s, sp]) / tr1
            val -= (gam[s] * b_ijk[rp, sp, r] + gam[sp] * b_ijk[r, s, rp]) / tr2
            val -= (alpha[r, s] / tr_c) * (
                gam[sp] * b_i[rp] / tr2 + lam[rp] * b_j[sp] / tr1
            )
            val -= (alpha[rp, sp] / tr_c) * (
                gam[s] * b_i[r] / tr2 + lam[r] * b_j[s] / tr1
            )
            out[a, c] = val
    return 0.5 * (out + out.T)
