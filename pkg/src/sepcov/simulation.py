"""Simulation scenarios: a tunable non-separable covariance family,
Gaussian and heavy-tailed samplers, and size/power estimation.

The covariance family interpolates entrywise between a separable product of
two stationary marginal kernels (gamma = 0) and a fully non-separable
space-time kernel (gamma = 1):

    c[i1, j1, i2, j2] = (1 - gamma) * c1[i1, i2] * c2[j1, j2]
                        + gamma * exp(-(i1 - i2)^2 / ((j1 - j2)^2 + 1))
                                / ((j1 - j2)^2 + 1)

The default marginals are squared-exponential kernels on the integer grid
with length scales d/3; they are stand-ins (size under the null does not
depend on them, power curves do, and are compared qualitatively only).
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument
from .linalg import sym_eigen
from .runner import run_test

FAMILIES = ("gaussian", "t6")


@dataclass(frozen=True)
class TestSpec:
    """Which test to run inside a scenario."""

    __test__ = False  # keep pytest from collecting this as a test class

    statistic: str  # g | g_tilde | g_tilde_a | hs
    method: str     # asymptotic | param_boot | emp_boot
    proj: str       # canonical projection-set text, e.g. "1x1"
    B: int = 200


@dataclass(frozen=True)
class ScenarioConfig:
    """One cell of a size/power study."""

    gamma: float
    N: int
    test: TestSpec
    family: str = "gaussian"
    d1: int = 32
    d2: int = 7
    replications: int = 500
    alpha: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise InvalidArgument(f"gamma must be in [0, 1], got {self.gamma}")
        if self.N < 2:
            raise InvalidArgument(f"need N >= 2, got {self.N}")
        if self.replications < 1:
            raise InvalidArgument("need replications >= 1")
        if self.family not in FAMILIES:
            raise InvalidArgument(f"unknown family {self.family!r}")


def default_marginals(d1: int, d2: int) -> tuple[np.ndarray, np.ndarray]:
    """Stand-in marginal kernels: squared-exponential, length scale d/3."""
    def kernel(d: int) -> np.ndarray:
        grid = np.arange(1, d + 1, dtype=float)
        ell = d / 3.0
        diff = grid[:, None] - grid[None, :]
        return np.exp(-(diff * diff) / (ell * ell))

    return kernel(d1), kernel(d2)


def build_c_gamma(
    d1: int, d2: int, gamma: float, c1: np.ndarray, c2: np.ndarray
) -> np.ndarray:
    """Dense 4-index covariance of the interpolating family."""
    from .linalg import kron_full

    if not 0.0 <= gamma <= 1.0:
        raise InvalidArgument(f"gamma must be in [0, 1], got {gamma}")
    sep = kron_full(c1, c2)
    if gamma == 0.0:
        return sep
    i = np.arange(d1, dtype=float)
    j = np.arange(d2, dtype=float)
    di2 = (i[:, None] - i[None, :]) ** 2          # (i1, i2)
    denom = (j[:, None] - j[None, :]) ** 2 + 1.0  # (j1, j2)
    nonsep = (
        np.exp(-di2[:, None, :, None] / denom[None, :, None, :])
        / denom[None, :, None, :]
    )
    return (1.0 - gamma) * sep + gamma * nonsep


def _correlation_from_covariance(m: np.ndarray) -> np.ndarray:
    d = np.sqrt(np.diag(m))
    if np.any(d <= 0.0):
        raise InvalidArgument("covariance has non-positive diagonal entries")
    return m / np.outer(d, d)


class ScenarioSampler:
    """Samples replicate surfaces from one scenario.

    The spectral factor of the scenario covariance is computed once at
    construction (spectral rather than Cholesky: near gamma = 0 the matrix
    can be numerically semi-definite) and reused across draws.
    """

    def __init__(
        self,
        d1: int,
        d2: int,
        gamma: float,
        family: str = "gaussian",
        marginals: tuple[np.ndarray, np.ndarray] | None = None,
    ):
        if family not in FAMILIES:
            raise InvalidArgument(f"unknown family {family!r}")
        c1, c2 = marginals if marginals is not None else default_marginals(d1, d2)
        cov = build_c_gamma(d1, d2, gamma, c1, c2).reshape(d1 * d2, d1 * d2)
        if family == "t6":
            # Heavy-tailed draws share the correlation structure of the
            # scenario covariance; the overall scale is irrelevant to every
            # scale-invariant statistic.
            cov = _correlation_from_covariance(cov)
        es = sym_eigen(cov)
        self.d1, self.d2, self.family = d1, d2, family
        self._factor = es.vectors * np.sqrt(es.values)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        z = rng.standard_normal((n, self.d1 * self.d2))
        flat = z @ self._factor.T
        if self.family == "t6":
            w = rng.chisquare(6, size=n)
            flat = flat / np.sqrt(w / 6.0)[:, None]
        return flat.reshape(n, self.d1, self.d2)


def sample_scenario(cfg: ScenarioConfig, rng: np.random.Generator) -> np.ndarray:
    """Draw one sample set for a scenario configuration."""
    return ScenarioSampler(cfg.d1, cfg.d2, cfg.gamma, cfg.family).sample(cfg.N, rng)


def _derived_seed(master: int, *key: int) -> int:
    ss = np.random.SeedSequence(entropy=master, spawn_key=tuple(key))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def estimate_rejection_rate(
    cfg: ScenarioConfig, cell_index: int = 0, threads: int = 1
) -> dict:
    """Monte Carlo rejection proportion for one scenario cell.

    Every replication draws its data from a stream keyed by
    (seed, cell_index, replication) and runs the configured test with a seed
    derived from the same key, so the row is reproducible and independent of
    the worker schedule.  Rejection means p-value strictly below alpha,
    matching the strict-exceedance form of the tests.
    """
    sampler = ScenarioSampler(cfg.d1, cfg.d2, cfg.gamma, cfg.family)

    def one(rep: int) -> bool:
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=cfg.seed, spawn_key=(cell_index, rep, 0))
        )
        x = sampler.sample(cfg.N, rng)
        report = run_test(
            x,
            statistic=cfg.test.statistic,
            method=cfg.test.method,
            proj=cfg.test.proj,
            B=cfg.test.B,
            seed=_derived_seed(cfg.seed, cell_index, rep, 1),
        )
        return report.p_value < cfg.alpha

    if threads <= 1:
        flags = [one(rep) for rep in range(cfg.replications)]
    else:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            flags = list(pool.map(one, range(cfg.replications)))
    rejections = sum(flags)
    power = rejections / cfg.replications
    return {
        "scenario": cfg.family,
        "gamma": cfg.gamma,
        "N": cfg.N,
        "statistic": cfg.test.statistic,
        "method": cfg.test.method,
        "I": cfg.test.proj,
        "B": cfg.test.B,
        "reps": cfg.replications,
        "power": power,
        "se": math.sqrt(power * (1.0 - power) / cfg.replications),
        "seed": cfg.seed,
    }


def power_curve(
    cells: list[ScenarioConfig],
    threads: int = 1,
    skip: set | None = None,
    on_row=None,
) -> list[dict]:
    """Rejection-rate table over a grid of scenario cells.

    ``skip`` holds row keys (see :func:`row_key`) already computed; cell
    indices always follow the full grid so resumed runs reproduce the same
    streams.  ``on_row`` is called with each freshly computed row.
    """
    rows = []
    for idx, cfg in enumerate(cells):
        if skip and row_key_from_config(cfg) in skip:
            continue
        row = estimate_rejection_rate(cfg, cell_index=idx, threads=threads)
        rows.append(row)
        if on_row is not None:
            on_row(row)
    return rows


def row_key_from_config(cfg: ScenarioConfig) -> tuple:
    return (
        cfg.family,
        repr(cfg.gamma),
        cfg.N,
        cfg.test.statistic,
        cfg.test.method,
        cfg.test.proj,
    )


def row_key_from_row(row: dict) -> tuple:
    return (
        row["scenario"],
        repr(float(row["gamma"])),
        int(row["N"]),
        row["statistic"],
        row["method"],
        row["I"],
    )
