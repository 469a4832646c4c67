"""Shortest fixed-width confidence intervals for a bounded parameter.

Builds the breakpoint recursion that pushes each interval lower endpoint as
far right as the coverage requirement permits, for the binomial success
probability, the hypergeometric success count, and a range-restricted
normal mean; evaluates exact and Monte Carlo coverage against the standard
fixed-width comparators.
"""

from .coverage import (
    CoverageReport,
    coverage_profile,
    exact_coverage,
    exact_coverage_at_theta,
    mc_coverage,
    mc_coverage_profile,
    mc_standard_coverage,
    midpoint_lemma_check,
    min_coverage,
    min_standard_width,
    standard_coverage,
    standard_interval,
    standard_min_coverage,
    z_coverage,
    z_width_for,
)
from .families import (
    Binomial,
    DiscretePmfView,
    Family,
    Hypergeometric,
    NormalMean,
    cdf,
    normal_cdf,
    normal_quantile,
    quantile,
)
from .grid import ParamGrid, WidthSpec, make_grid, theta_at, width_of
from .intervals import (
    CenterPoint,
    FullFunction,
    IntervalFunction,
    Sampled,
    WeightedInterval,
    achieved_width,
    build_interval_function,
    constrain,
    interval_at,
    min_width,
    report_interval,
    symmetrize,
    to_json_dict,
)
from .push import (
    BINDING_LOWER,
    BINDING_PREV,
    BINDING_UPPER,
    PushResult,
    existence_guard,
    grid_constraint_value,
    push_continuous,
    push_discrete,
    run_push,
)

__version__ = "0.1.0"

__all__ = [
    "Binomial",
    "BINDING_LOWER",
    "BINDING_PREV",
    "BINDING_UPPER",
    "CenterPoint",
    "CoverageReport",
    "DiscretePmfView",
    "Family",
    "FullFunction",
    "Hypergeometric",
    "IntervalFunction",
    "NormalMean",
    "ParamGrid",
    "PushResult",
    "Sampled",
    "WeightedInterval",
    "WidthSpec",
    "achieved_width",
    "build_interval_function",
    "cdf",
    "constrain",
    "coverage_profile",
    "exact_coverage",
    "exact_coverage_at_theta",
    "existence_guard",
    "grid_constraint_value",
    "interval_at",
    "make_grid",
    "mc_coverage",
    "mc_coverage_profile",
    "mc_standard_coverage",
    "midpoint_lemma_check",
    "min_coverage",
    "min_standard_width",
    "min_width",
    "normal_cdf",
    "normal_quantile",
    "push_continuous",
    "push_discrete",
    "quantile",
    "report_interval",
    "run_push",
    "standard_coverage",
    "standard_interval",
    "standard_min_coverage",
    "symmetrize",
    "theta_at",
    "to_json_dict",
    "width_of",
    "z_coverage",
    "z_width_for",
]
