"""Separability tests for the covariance of replicated matrix-valued data.

Given n replicate surfaces observed on a d1 x d2 grid, the package estimates
the separable approximation of their covariance (the normalized product of
the two marginal covariances), projects the residual onto products of
marginal eigendirections, and tests separability via asymptotic chi-square
references or parametric/empirical bootstrap, including a streaming
Hilbert-Schmidt norm test that never materializes the full covariance.
"""

from .asymptotic import TestReport, asymptotic_test, chi2_sf
from .bootstrap import (
    BootstrapConfig,
    RngStream,
    empirical_bootstrap_test,
    parametric_bootstrap_test,
    resample,
    sample_separable_gaussian,
)
from .covariance import (
    MarginalPair,
    full_covariance,
    hs_norm_dn_diff_streaming,
    hs_norm_dn_streaming,
    marginal_covariances,
    sample_mean,
)
from .errors import DegeneracyError, SepcovError
from .linalg import EigenSystem, inv_sqrt, kron_full, partial_trace_1, partial_trace_2, sym_eigen
from .runner import bonferroni, run_test
from .simulation import (
    ScenarioConfig,
    ScenarioSampler,
    TestSpec,
    build_c_gamma,
    default_marginals,
    power_curve,
    sample_scenario,
)
from .teststats import (
    ProjectionSet,
    SeparableFit,
    TMatrix,
    fit_separable,
    g_stat,
    g_tilde,
    g_tilde_a,
    sigma_hat_sq,
    sigma_lr,
    t_stat,
)

__version__ = "0.1.0"

__all__ = [
    "BootstrapConfig",
    "DegeneracyError",
    "EigenSystem",
    "MarginalPair",
    "ProjectionSet",
    "RngStream",
    "ScenarioConfig",
    "ScenarioSampler",
    "SepcovError",
    "SeparableFit",
    "TMatrix",
    "TestReport",
    "TestSpec",
    "asymptotic_test",
    "bonferroni",
    "build_c_gamma",
    "chi2_sf",
    "default_marginals",
    "empirical_bootstrap_test",
    "fit_separable",
    "full_covariance",
    "g_stat",
    "g_tilde",
    "g_tilde_a",
    "hs_norm_dn_diff_streaming",
    "hs_norm_dn_streaming",
    "inv_sqrt",
    "kron_full",
    "marginal_covariances",
    "parametric_bootstrap_test",
    "partial_trace_1",
    "partial_trace_2",
    "power_curve",
    "resample",
    "run_test",
    "sample_mean",
    "sample_scenario",
    "sample_separable_gaussian",
    "sigma_hat_sq",
    "sigma_lr",
    "sym_eigen",
    "t_stat",
]
