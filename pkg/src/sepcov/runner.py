"""Single entry point dispatching a separability test by name.

Validates the (statistic, method, projection set) combination: the
asymptotic method supports only the single-direction studentized statistic
and the fully studentized statistic on a rectangle; the bootstrap methods
accept all four statistics.
"""

from .asymptotic import TestReport, asymptotic_test
from .bootstrap import (
    BootstrapConfig,
    empirical_bootstrap_test,
    parametric_bootstrap_test,
)
from .errors import InvalidArgument
from .teststats import ProjectionSet

METHODS = ("asymptotic", "param_boot", "emp_boot")


def run_test(
    x,
    statistic: str,
    method: str,
    proj: str | ProjectionSet,
    B: int = 1000,
    seed: int = 0,
    threads: int = 1,
) -> TestReport:
    """Run one separability test and return its report."""
    if isinstance(proj, str):
        proj = ProjectionSet.parse(proj)
    if method == "asymptotic":
        if statistic == "g" and len(proj.pairs) == 1:
            return asymptotic_test(x, proj, variant="single")
        if statistic == "g_tilde" and proj.is_rectangular:
            return asymptotic_test(x, proj, variant="studentized_full")
        raise InvalidArgument(
            "asymptotic method supports only single-pair 'g' and rectangular "
            f"'g_tilde', got {statistic!r} on {proj.canonical()!r}"
        )
    cfg = BootstrapConfig(statistic=statistic, proj=proj, B=B, seed=seed)
    if method == "param_boot":
        return parametric_bootstrap_test(x, cfg, threads=threads)
    if method == "emp_boot":
        return empirical_bootstrap_test(x, cfg, threads=threads)
    raise InvalidArgument(f"unknown method {method!r}; expected one of {METHODS}")


def bonferroni(p_values) -> float:
    """Bonferroni combination of p-values across projection sets."""
    ps = list(p_values)
    if not ps:
        raise InvalidArgument("need at least one p-value")
    return min(1.0, len(ps) * min(ps))
