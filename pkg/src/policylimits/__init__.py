"""Finite-sample limit curves for off-policy evaluation under a marginal
sensitivity model."""

from .core import (
    ConstantActionPolicy, Dataset, FunctionPolicy, BinaryPolicy, Policy, Sample, Split,
    TablePolicy, ThresholdPolicy, make_rng, policy_prob, split_dataset, treat_all, treat_none,
)
from .estimators import (
    cdf_quantile, dr_cdf, dr_mean, ipw_cdf, ipw_mean, ipw_quantile_curve, rm_cdf, rm_mean,
)
from .harness import (
    CoverageConfig, CoverageReport, IhdpScenario, SyntheticScenario, compare_methods, run_coverage,
)
from .limits import (
    LimitCurve, LimitInputs, cdf_proxy, default_alphas, informativeness, limit, limit_curve,
    limit_values, quantile_at, weight_quantile_bound,
)
from .propensity import LogisticModel, fit_logistic, predict_proba
from .sensitivity import WeightBounds, dataset_weight_bounds, odds_divergence, weight_bounds

__version__ = "0.1.0"
