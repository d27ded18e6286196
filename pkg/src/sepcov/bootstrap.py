"""Bootstrap approximations of the separability test distributions.

Two schemes:

* parametric: refit the separable Gaussian model (sample mean, product of
  normalized marginals) and resimulate complete samples from it, recomputing
  the statistic from scratch (including re-estimated eigendirections) on
  every replicate;
* empirical: resample replicates with replacement and recenter the statistic
  so that the separability hypothesis holds in the bootstrap world.  Each
  statistic has its own recentred form: plain/studentized sums use the
  difference of projection statistics (whitened by the resampled variance
  factors where applicable), and the Hilbert-Schmidt statistic uses the
  streaming norm of the difference of non-separability tensors.

Replicate b always draws from an RNG stream keyed by (seed, b), so p-values
are bit-identical no matter how replicates are scheduled across workers.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .asymptotic import TestReport
from .covariance import hs_norm_dn_diff_streaming, hs_norm_dn_streaming, validate_sample
from .errors import DegeneracyError, EmptySample, InvalidArgument
from .linalg import psd_sqrt
from .teststats import (
    ProjectionSet,
    SeparableFit,
    TMatrix,
    eigen_gap_warnings,
    fit_separable,
    g_stat,
    g_tilde,
    g_tilde_a,
    sigma_hat_sq,
    sigma_lr,
    t_stat,
)

STATISTICS = ("g", "g_tilde", "g_tilde_a", "hs")


@dataclass(frozen=True)
class RngStream:
    """Reproducible random stream keyed by (seed, stream_id)."""

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        return np.random.default_rng(
            np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id,))
        )


@dataclass(frozen=True)
class BootstrapConfig:
    """Replicate count, statistic choice, projection set, and seed."""

    statistic: str
    proj: ProjectionSet
    B: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.B < 1:
            raise InvalidArgument(f"need B >= 1, got {self.B}")
        if self.statistic not in STATISTICS:
            raise InvalidArgument(f"unknown statistic {self.statistic!r}")


def sample_separable_gaussian(
    mean: np.ndarray,
    c1: np.ndarray,
    c2: np.ndarray,
    rng: np.random.Generator,
    size: int | None = None,
) -> np.ndarray:
    """Draw from the matrix normal with separable covariance c1 (x) c2.

    Uses symmetric PSD square roots, so rank-deficient factors sample
    correctly; ``Cov(X[i, j], X[k, l]) = c1[i, k] * c2[j, l]``.
    """
    a = psd_sqrt(c1)
    b = psd_sqrt(c2)
    mean = np.asarray(mean, dtype=float)
    n = 1 if size is None else size
    g = rng.standard_normal((n, mean.shape[0], mean.shape[1]))
    out = mean + a @ g @ b.T
    return out[0] if size is None else out


def resample(x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Uniform with-replacement resample of the replicates."""
    x = np.asarray(x, dtype=float)
    if x.shape[0] < 2:
        raise EmptySample("resampling needs at least 2 replicates")
    idx = rng.integers(0, x.shape[0], size=x.shape[0])
    return x[idx]


def compute_statistic(
    x: np.ndarray,
    statistic: str,
    proj: ProjectionSet,
    fit: SeparableFit | None = None,
) -> float:
    """Evaluate one of the separability statistics on a sample."""
    if statistic == "hs":
        return hs_norm_dn_streaming(x)
    if fit is None:
        fit = fit_separable(x)
    t = t_stat(x, proj, fit)
    if statistic == "g":
        return g_stat(t)
    if statistic == "g_tilde":
        shape = proj.rect_shape
        if shape is None:
            raise InvalidArgument("statistic 'g_tilde' needs a rectangular set")
        left, right = sigma_lr(fit.marginals, fit.eig1, fit.eig2, *shape)
        return g_tilde(t, left, right)
    if statistic == "g_tilde_a":
        sigmas = {
            (r, s): sigma_hat_sq(fit.marginals, fit.eig1, fit.eig2, r, s)
            for r, s in proj.pairs
        }
        return g_tilde_a(t, sigmas)
    raise InvalidArgument(f"unknown statistic {statistic!r}")


def _recentered_statistic(
    x_boot: np.ndarray,
    x_orig: np.ndarray,
    statistic: str,
    proj: ProjectionSet,
    t_orig: TMatrix | None,
) -> float:
    """Null-centered bootstrap statistic; zero when the resample is the original."""
    if statistic == "hs":
        return hs_norm_dn_diff_streaming(x_boot, x_orig)
    fit_b = fit_separable(x_boot)
    t_b = t_stat(x_boot, proj, fit_b)
    diff = t_b.values - t_orig.values
    if statistic == "g":
        return float((diff * diff).sum())
    if statistic == "g_tilde":
        shape = proj.rect_shape
        left, right = sigma_lr(fit_b.marginals, fit_b.eig1, fit_b.eig2, *shape)
        return g_tilde(TMatrix(proj=proj, values=diff), left, right)
    if statistic == "g_tilde_a":
        total = 0.0
        for (r, s), d in zip(proj.pairs, diff):
            total += d * d / sigma_hat_sq(fit_b.marginals, fit_b.eig1, fit_b.eig2, r, s)
        return float(total)
    raise InvalidArgument(f"unknown statistic {statistic!r}")


def _run_replicates(one, B: int, threads: int) -> list:
    if threads <= 1:
        return [one(b) for b in range(1, B + 1)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one, range(1, B + 1)))


def parametric_bootstrap_test(
    x: np.ndarray, cfg: BootstrapConfig, threads: int = 1
) -> TestReport:
    """Gaussian parametric bootstrap p-value for a separability statistic.

    Fits the separable Gaussian model, simulates B complete samples from it,
    recomputes the statistic on each, and reports the exceedance proportion
    as the p-value (the add-one-smoothed variant rides along as ``p_plus``).
    """
    x = validate_sample(x)
    n = x.shape[0]
    fit = fit_separable(x)
    h = compute_statistic(x, cfg.statistic, cfg.proj, fit)
    warnings = eigen_gap_warnings(fit.eig1, fit.eig2, cfg.proj)
    a = psd_sqrt(fit.marginals.c1)
    b = psd_sqrt(fit.marginals.c2)

    def one(rep: int) -> bool:
        rng = RngStream(cfg.seed, rep).generator()
        g = rng.standard_normal((n,) + fit.mean.shape)
        xb = fit.mean + a @ g @ b.T
        return compute_statistic(xb, cfg.statistic, cfg.proj) > h

    exceed = sum(_run_replicates(one, cfg.B, threads))
    return TestReport(
        statistic=cfg.statistic,
        value=float(h),
        p_value=exceed / cfg.B,
        method="param_boot",
        proj=cfg.proj.canonical(),
        B=cfg.B,
        seed=cfg.seed,
        p_plus=(1 + exceed) / (1 + cfg.B),
        warnings=warnings,
    )


def empirical_bootstrap_test(
    x: np.ndarray, cfg: BootstrapConfig, threads: int = 1
) -> TestReport:
    """Empirical bootstrap p-value using the null-centered statistics.

    Resamples with replacement, evaluates the recentred statistic on each
    replicate, and reports the proportion exceeding the original statistic.
    A replicate whose variance factors are degenerate (singular whitening,
    all-identical resample) is counted as an exceedance and flagged, which
    keeps B fixed and errs conservative.
    """
    x = validate_sample(x)
    fit = fit_separable(x)
    h = compute_statistic(x, cfg.statistic, cfg.proj, fit)
    warnings = eigen_gap_warnings(fit.eig1, fit.eig2, cfg.proj)
    t_orig = None if cfg.statistic == "hs" else t_stat(x, cfg.proj, fit)

    def one(rep: int) -> tuple[bool, str | None]:
        rng = RngStream(cfg.seed, rep).generator()
        xb = resample(x, rng)
        try:
            return (
                _recentered_statistic(xb, x, cfg.statistic, cfg.proj, t_orig) > h,
                None,
            )
        except DegeneracyError as exc:
            return True, f"replicate {rep} degenerate ({exc}); counted as exceedance"

    results = _run_replicates(one, cfg.B, threads)
    exceed = sum(flag for flag, _ in results)
    warnings = warnings + [msg for _, msg in results if msg is not None]
    return TestReport(
        statistic=cfg.statistic,
        value=float(h),
        p_value=exceed / cfg.B,
        method="emp_boot",
        proj=cfg.proj.canonical(),
        B=cfg.B,
        seed=cfg.seed,
        p_plus=(1 + exceed) / (1 + cfg.B),
        warnings=warnings,
    )
