"""Exact min-plus calculus on ultimately pseudo-periodic piecewise-affine
curves, with representation minimization, optimized convolutions of
sub-additive curves, and worst-case analysis of flow-controlled tandems."""

from .rational import (
    MINUS_INF,
    PLUS_INF,
    Rat,
    UndefinedOperation,
    factorize,
    rat,
    rat_lcm,
)
from .curves import (
    Curve,
    CurveError,
    Interval,
    Point,
    Segment,
    Sequence,
    add_jump,
    constant_curve,
    equivalent,
    first_difference,
    make_delta_zero,
    make_rate_latency,
    make_token_bucket,
    merge_well_formed,
    zero_curve,
)
from .minplus import convolution, counters, lower_envelope, minimum, set_parallel
from .minimize import (
    MinimizationReport,
    count_breakpoints,
    minimize,
    minimize_period,
    minimize_transient,
    minimize_with_report,
)
from .subadd import (
    ClosureError,
    Dominance,
    DominanceKind,
    check_dominance,
    conv_asymptotic,
    conv_dominance,
    conv_optimized,
    sac,
    sac_rate_latency_jump,
    self_conv_min,
)
from .oracles import OracleConfig, conv_oracle_eval, sac_oracle_eval
from .flowcontrol import (
    ArrivalSpec,
    NodeSpec,
    PipelineOptions,
    TandemSpec,
    approx_equivalent,
    backlog_bound,
    delay_bound,
    exact_equivalent,
    per_node_approx,
    per_node_exact,
)

__version__ = "0.1.0"

__all__ = [
    "ArrivalSpec",
    "ClosureError",
    "Curve",
    "CurveError",
    "Dominance",
    "DominanceKind",
    "Interval",
    "MINUS_INF",
    "MinimizationReport",
    "NodeSpec",
    "OracleConfig",
    "PLUS_INF",
    "PipelineOptions",
    "Point",
    "Rat",
    "Segment",
    "Sequence",
    "TandemSpec",
    "UndefinedOperation",
    "add_jump",
    "approx_equivalent",
    "backlog_bound",
    "check_dominance",
    "constant_curve",
    "conv_asymptotic",
    "conv_dominance",
    "conv_optimized",
    "conv_oracle_eval",
    "convolution",
    "count_breakpoints",
    "counters",
    "delay_bound",
    "equivalent",
    "exact_equivalent",
    "factorize",
    "first_difference",
    "lower_envelope",
    "make_delta_zero",
    "make_rate_latency",
    "make_token_bucket",
    "merge_well_formed",
    "minimize",
    "minimize_period",
    "minimize_transient",
    "minimize_with_report",
    "minimum",
    "per_node_approx",
    "per_node_exact",
    "rat",
    "rat_lcm",
    "sac",
    "sac_oracle_eval",
    "sac_rate_latency_jump",
    "self_conv_min",
    "set_parallel",
    "zero_curve",
]
