"""Flow-controlled tandem analysis.

A tandem is an ordered list of rate-latency nodes with a flow-control window
in front of every node but the first.  The exact method eliminates feedback
arcs right to left with nested closures; the approximate method lower-bounds
each per-node equivalent curve by a convolution of closed-form closures.
Horizontal and vertical deviations against a token-bucket arrival give the
delay and backlog bounds.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Optional

from .curves import Curve, CurveError, Interval, Point, Segment, add_jump, make_rate_latency
from .minimize import minimize
from .minplus import convolution
from .rational import PLUS_INF, ZERO, Rat, rat
from .subadd import conv_optimized, sac, sac_rate_latency_jump


@dataclass(frozen=True)
class NodeSpec:
    """Rate-latency server parameters."""

    rate: Rat
    latency: Rat

    def __post_init__(self):
        object.__setattr__(self, "rate", rat(self.rate))
        object.__setattr__(self, "latency", rat(self.latency))
        if not (self.rate.is_finite and self.rate > ZERO):
            raise CurveError(f"node rate must be finite and > 0, got {self.rate}")
        if not (self.latency.is_finite and self.latency >= ZERO):
            raise CurveError(f"node latency must be finite and >= 0, got {self.latency}")

    def service_curve(self) -> Curve:
        return make_rate_latency(self.rate, self.latency)


@dataclass(frozen=True)
class ArrivalSpec:
    """Token-bucket arrival constraint (burst sigma, long-term rate rho)."""

    sigma: Rat
    rho: Rat

    def __post_init__(self):
        object.__setattr__(self, "sigma", rat(self.sigma))
        object.__setattr__(self, "rho", rat(self.rho))
        for v in (self.sigma, self.rho):
            if not (v.is_finite and v >= ZERO):
                raise CurveError(f"arrival parameters must be finite and >= 0, got {v}")

    def value(self, t: Rat) -> Rat:
        if t <= ZERO:
            return ZERO
        return self.sigma + self.rho * t


@dataclass(frozen=True)
class TandemSpec:
    """Tandem of flow-controlled nodes; windows[k] sits before node k+2."""

    nodes: tuple[NodeSpec, ...]
    windows: tuple[Rat, ...]

    def __post_init__(self):
        nodes = tuple(self.nodes)
        windows = tuple(rat(w) for w in self.windows)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "windows", windows)
        if not nodes:
            raise CurveError("tandem needs at least one node")
        if len(windows) != len(nodes) - 1:
            raise CurveError(
                f"{len(nodes)} nodes need {len(nodes) - 1} windows, got {len(windows)}"
            )
        for w in windows:
            if w.is_minf or (w.is_finite and w <= ZERO):
                raise CurveError(f"windows must be > 0 (or +inf), got {w}")

    @property
    def size(self) -> int:
        return len(self.nodes)


@dataclass
class StepRecord:
    """One pipeline operation, for progress reporting and budgeting."""

    stage: str
    operation: str
    operand_cardinalities: tuple[int, ...]
    result_cardinality_raw: int
    result_cardinality_min: int
    elapsed_ns: int


ProgressHook = Callable[[StepRecord], None]


@dataclass
class PipelineOptions:
    """Optimization toggles for the analysis pipelines."""

    minimize: bool = True
    dominance: bool = True
    asymptotic: bool = True
    selfconv: bool = True
    progress: Optional[ProgressHook] = None

    def shrink(self, f: Curve) -> Curve:
        return minimize(f) if self.minimize else f


def _step(
    opts: PipelineOptions,
    stage: str,
    operation: str,
    operands: tuple[Curve, ...],
    fn: Callable[[], Curve],
) -> Curve:
    t0 = time.perf_counter_ns()
    raw = fn()
    out = opts.shrink(raw)
    elapsed = time.perf_counter_ns() - t0
    if opts.progress is not None:
        opts.progress(
            StepRecord(
                stage=stage,
                operation=operation,
                operand_cardinalities=tuple(c.cardinality for c in operands),
                result_cardinality_raw=raw.cardinality,
                result_cardinality_min=out.cardinality,
                elapsed_ns=elapsed,
            )
        )
    return out


# -- exact method --------------------------------------------------------------------


def exact_chain(tandem: TandemSpec, opts: PipelineOptions | None = None) -> list[Curve]:
    """Equivalent service curve of every node, eliminating feedback right to
    left: the curve of node i convolves node i's service with the closure of
    (node i's service (x) downstream equivalent + window)."""
    opts = opts or PipelineOptions()
    n = tandem.size
    out: list[Optional[Curve]] = [None] * n
    beq = tandem.nodes[n - 1].service_curve()
    out[n - 1] = beq
    for j in range(n - 2, -1, -1):
        beta = tandem.nodes[j].service_curve()
        stage = f"node{j + 1}"
        inner = _step(
            opts,
            stage,
            "conv(beta, downstream)",
            (beta, beq),
            lambda b=beta, q=beq: convolution(b, q, minimize_partials=opts.minimize),
        )
        jumped = add_jump(inner, tandem.windows[j])
        closed = _step(
            opts, stage, "closure", (jumped,), lambda jj=jumped: sac(jj)
        )
        beq = _step(
            opts,
            stage,
            "conv(beta, closure)",
            (beta, closed),
            lambda b=beta, cc=closed: convolution(b, cc, minimize_partials=opts.minimize),
        )
        out[j] = beq
    return out  # type: ignore[return-value]


def per_node_exact(
    tandem: TandemSpec, index: int, opts: PipelineOptions | None = None
) -> Curve:
    """Equivalent service curve of node `index` (1-based) by the exact method."""
    if not 1 <= index <= tandem.size:
        raise CurveError(f"node index out of range: {index}")
    return exact_chain(tandem, opts)[index - 1]


def exact_equivalent(tandem: TandemSpec, opts: PipelineOptions | None = None) -> Curve:
    """End-to-end equivalent service curve by the exact method."""
    opts = opts or PipelineOptions()
    chain = exact_chain(tandem, opts)
    if tandem.size == 1:
        return chain[0]
    acc = chain[0]
    for i in range(1, tandem.size - 1):
        acc = _step(
            opts,
            "end-to-end",
            "conv(per-node)",
            (acc, chain[i]),
            lambda a=acc, b=chain[i]: convolution(a, b, minimize_partials=opts.minimize),
        )
    tail = tandem.nodes[-1].service_curve()
    return _step(
        opts,
        "end-to-end",
        "conv(tail)",
        (acc, tail),
        lambda a=acc, b=tail: convolution(a, b, minimize_partials=opts.minimize),
    )


# -- approximate method ---------------------------------------------------------------


def _closure_factor(tandem: TandemSpec, j: int, opts: PipelineOptions) -> Curve:
    """Closed-form closure of (node j (x) node j+1 + window j+1), 0-based j."""
    a, b = tandem.nodes[j], tandem.nodes[j + 1]
    rate = a.rate if a.rate < b.rate else b.rate
    latency = a.latency + b.latency
    factor = sac_rate_latency_jump(rate, latency, tandem.windows[j])
    return opts.shrink(factor)


def _fold_factors(
    tandem: TandemSpec, start: int, opts: PipelineOptions, stage: str
) -> Optional[Curve]:
    acc: Optional[Curve] = None
    for j in range(start, tandem.size - 1):
        factor = _closure_factor(tandem, j, opts)
        if acc is None:
            acc = factor
            continue
        acc = _step(
            opts,
            stage,
            "conv(closure factors)",
            (acc, factor),
            lambda a=acc, b=factor: conv_optimized(
                a,
                b,
                use_dominance=opts.dominance,
                use_asymptotic=opts.asymptotic,
                use_selfconv=opts.selfconv,
                minimize_steps=opts.minimize,
            ),
        )
    return acc


def per_node_approx(
    tandem: TandemSpec, index: int, opts: PipelineOptions | None = None
) -> Curve:
    """Lower bound of node `index`'s equivalent curve: the node's service
    convolved with every downstream closure factor."""
    opts = opts or PipelineOptions()
    if not 1 <= index <= tandem.size - 1:
        raise CurveError(f"node index must be in 1..{tandem.size - 1}, got {index}")
    beta = tandem.nodes[index - 1].service_curve()
    factors = _fold_factors(tandem, index - 1, opts, f"node{index}-approx")
    if factors is None:
        return beta
    return _step(
        opts,
        f"node{index}-approx",
        "conv(beta, factors)",
        (beta, factors),
        lambda a=beta, b=factors: convolution(a, b, minimize_partials=opts.minimize),
    )


def approx_equivalent(tandem: TandemSpec, opts: PipelineOptions | None = None) -> Curve:
    """End-to-end curve by the approximate method: the collapsed rate-latency
    chain convolved with the closure factors of every adjacent node pair."""
    opts = opts or PipelineOptions()
    rate = tandem.nodes[0].rate
    latency = tandem.nodes[0].latency
    for node in tandem.nodes[1:]:
        if node.rate < rate:
            rate = node.rate
        latency = latency + node.latency
    chain = make_rate_latency(rate, latency)
    factors = _fold_factors(tandem, 0, opts, "end-to-end-approx")
    if factors is None:
        return chain
    return _step(
        opts,
        "end-to-end-approx",
        "conv(chain, factors)",
        (chain, factors),
        lambda a=chain, b=factors: convolution(a, b, minimize_partials=opts.minimize),
    )


# -- bounds ---------------------------------------------------------------------------


def _require_service_curve(beta: Curve) -> None:
    """Nonnegative and wide-sense increasing, judged on the exact representation."""
    if beta.attains_minus_inf():
        raise CurveError("service curve takes -inf")
    if beta.c.is_finite and beta.c < ZERO:
        raise CurveError("service curve decreases across periods")
    prev_high: Rat = beta.value(ZERO)
    if prev_high.is_finite and prev_high < ZERO:
        raise CurveError("service curve is negative at 0")
    for e in beta.seq.elements:
        if isinstance(e, Point):
            if e.v < prev_high:
                raise CurveError(f"service curve decreases at {e.t}")
            prev_high = e.v
        else:
            if e.slope.is_finite and e.slope < ZERO:
                raise CurveError(f"service curve has negative slope at {e.start}")
            if e.lv < prev_high:
                raise CurveError(f"service curve drops entering ]{e.start}, {e.end}[")
            prev_high = e.right_limit
    junction = beta.value(beta.T) + beta.c
    if junction < prev_high:
        raise CurveError("service curve decreases across the period junction")


def _passage_window(alpha: ArrivalSpec, beta: Curve) -> Rat:
    base = beta.value(beta.T)
    extra = 3
    if beta.c.is_finite and beta.c > ZERO and base.is_finite and base < alpha.sigma:
        extra += ((alpha.sigma - base) / beta.c).ceil()
    return beta.T + Rat(extra) * beta.d


def _first_passage(elements, idx: int, level: Rat):
    """Earliest abscissa with value >= level, scanning from elements[idx]."""
    n = len(elements)
    i = idx
    while i < n:
        e = elements[i]
        if isinstance(e, Point):
            if e.v >= level:
                return e.t, i
        else:
            if e.lv >= level:
                return e.start, i
            if not e.lv.is_finite:
                return e.start, i
            if e.slope > ZERO and e.right_limit >= level:
                return e.start + (level - e.lv) / e.slope, i
        i += 1
    return None, n


def delay_bound(alpha: ArrivalSpec, beta: Curve) -> Rat:
    """Worst-case delay: the maximum horizontal distance between the arrival
    curve and the service curve.

    The arrival curve is concave affine with a single breakpoint at 0, so the
    distance is maximized either right after the burst or at one of beta's
    corner values; corners repeat period by period with non-increasing
    distance once the arrival rate is at most the service rate, so a window
    of a few periods past the burst level is exhaustive.
    """
    _require_service_curve(beta)
    rho_a = alpha.rho
    rho_b = beta.rho
    if rho_a > rho_b:
        return PLUS_INF
    if alpha.sigma == ZERO and rho_a == ZERO:
        return ZERO
    hi = _passage_window(alpha, beta)
    cut = beta.cut(Interval.closed(ZERO, hi))
    els = cut.elements
    levels = {alpha.sigma}
    if rho_a > ZERO:
        for e in els:
            vals = (e.v,) if isinstance(e, Point) else (e.lv, e.right_limit)
            for v in vals:
                if v.is_finite and v >= alpha.sigma:
                    levels.add(v)
    best = ZERO
    idx = 0
    for level in sorted(levels):
        tau, idx = _first_passage(els, idx, level)
        if tau is None:
            if level == alpha.sigma:
                return PLUS_INF  # the burst is never served
            break
        s = ZERO if rho_a == ZERO else (level - alpha.sigma) / rho_a
        d = tau - s
        if d > best:
            best = d
    return best if best > ZERO else ZERO


def backlog_bound(alpha: ArrivalSpec, beta: Curve) -> Rat:
    """Worst-case backlog: the maximum vertical distance between the arrival
    curve and the service curve (zero floor)."""
    _require_service_curve(beta)
    rho_a = alpha.rho
    if rho_a > beta.rho:
        return PLUS_INF
    hi = beta.T + beta.d + beta.d
    els = beta.cut(Interval.closed(ZERO, hi)).elements
    best = ZERO
    for e in els:
        if isinstance(e, Point):
            gaps = ((alpha.value(e.t), e.v),)
        else:
            gaps = (
                (alpha.sigma + alpha.rho * e.start, e.lv),
                (alpha.sigma + alpha.rho * e.end, e.right_limit),
            )
        for a_val, b_val in gaps:
            if not b_val.is_finite:
                continue
            gap = a_val - b_val
            if gap > best:
                best = gap
    return best
