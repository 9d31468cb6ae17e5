"""Sub-additive machinery: closure, its rate-latency-plus-jump closed form,
dominance classification, and the optimized convolutions for sub-additive
operands (full dominance, asymptotic dominance, self-convolution of the
minimum with element coloring).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional

from .curves import (
    Curve,
    CurveError,
    Element,
    Interval,
    Point,
    Segment,
    Sequence,
    cut_cardinality,
    equivalent,
    make_delta_zero,
    make_rate_latency,
    add_jump,
    merge_well_formed,
    zero_curve,
)
from .minimize import minimize
from .minplus import (
    convolution,
    counters,
    elementary_convolution,
    lower_envelope,
    minimum,
    minimum_params,
)
from .rational import ONE, PLUS_INF, ZERO, Rat, rat, rat_lcm


class ClosureError(RuntimeError):
    """Sub-additive closure failed to stabilize or is divergent."""


# -- closed-form closure for rate-latency plus a window -----------------------------


def sac_rate_latency_jump(rate, latency, window) -> Curve:
    """Sub-additive closure of (rate-latency curve + window jump).

    The n-fold self-convolutions are n*W + R*[t - n*theta]+, so the closure is
    their pointwise minimum for t > 0 and 0 at t = 0.  For W < R*theta that is
    a staircase with period theta and height W, pseudo-periodic from W/R; for
    W >= R*theta the jump curve is already sub-additive; an infinite window
    gives the infinite step and W = 0 collapses the latency entirely.
    """
    R, theta, W = rat(rate), rat(latency), rat(window)
    if not (R.is_finite and R > ZERO):
        raise CurveError(f"rate must be finite and > 0, got {R}")
    if not (theta.is_finite and theta >= ZERO):
        raise CurveError(f"latency must be finite and >= 0, got {theta}")
    if W.is_minf or (W.is_finite and W < ZERO):
        raise CurveError(f"window must be >= 0, got {W}")
    if W.is_pinf:
        return make_delta_zero()
    if W == ZERO:
        if theta == ZERO:
            return make_rate_latency(R, ZERO)
        return zero_curve()
    if W >= R * theta:
        # includes theta == 0; the jump curve is sub-additive already
        return add_jump(make_rate_latency(R, theta), W)
    T = W / R
    seq = Sequence(
        [
            Point(ZERO, ZERO),
            Segment(ZERO, T, W, ZERO),
            Point(T, W),
            Segment(T, theta, W, ZERO),
            Point(theta, W),
            Segment(theta, theta + T, W, R),
        ]
    )
    return Curve(seq, T, theta, W)


# -- general closure -----------------------------------------------------------------


def _is_nonnegative(f: Curve) -> bool:
    if f.c.is_finite and f.c < ZERO:
        return False
    if f.c.is_minf:
        return False
    for e in f.seq.elements:
        if isinstance(e, Point):
            if e.v.is_minf or (e.v.is_finite and e.v < ZERO):
                return False
        else:
            for v in (e.lv, e.right_limit):
                if v.is_minf or (v.is_finite and v < ZERO):
                    return False
    return True


def _has_zero_prefix(f: Curve) -> bool:
    els = merge_well_formed(f.seq).elements
    if not (isinstance(els[0], Point) and els[0].v == ZERO and els[0].t == ZERO):
        return False
    s = els[1]
    return isinstance(s, Segment) and s.lv == ZERO and s.slope == ZERO


def _min_positive_value(f: Curve) -> Rat:
    """Infimum of f over ]0, +oo[ (requires c >= 0 so the tail cannot dip)."""
    best = PLUS_INF
    for e in f.seq.elements:
        if isinstance(e, Point):
            if e.t == ZERO:
                continue
            cands = (e.v,)
        else:
            cands = (e.lv, e.right_limit)
        for v in cands:
            if v < best:
                best = v
    return best


def _window_restrict(f: Curve, H: Rat) -> Sequence:
    return merge_well_formed(f.cut(Interval.closed_open(ZERO, H)))


def _window_self_conv(w: Sequence, H: Rat) -> Sequence:
    """One doubling step: (w (x) w) restricted to [0, H[."""
    els = w.elements
    out: list[Element] = []
    n = len(els)
    for i in range(n):
        a = els[i]
        for j in range(i, n):
            b = els[j]
            if a.start + b.start > H:
                break
            out.extend(elementary_convolution(a, b))
    return lower_envelope(out, ZERO, H)


def _window_max_finite(w: Sequence) -> Rat:
    best = ZERO
    for e in w.elements:
        vals = (e.v,) if isinstance(e, Point) else (e.lv, e.right_limit)
        for v in vals:
            if v.is_finite and v > best:
                best = v
    return best


def _window_curve(w: Sequence, H: Rat) -> Curve:
    els = list(w.elements)
    els.append(Point(H, PLUS_INF))
    els.append(Segment(H, H + ONE, PLUS_INF, ZERO))
    return Curve(Sequence(els), H, ONE, PLUS_INF)


def _min_growth_ratio(f: Curve) -> Rat:
    """inf over s > 0 of f(s)/s: the closure's exact long-run slope.

    A t-covering decomposition into pieces s_i costs at least (inf f(s)/s)*t,
    and repeating a near-optimal piece attains it, so the closure grows at
    exactly this rate.  The infimum is reached at an element boundary within
    one transient plus two periods, or in the limit at the period slope.
    """
    best = f.rho if f.rho.is_finite else PLUS_INF
    hi = f.T + f.d + f.d
    for e in f.cut(Interval.closed(ZERO, hi)).elements:
        if isinstance(e, Point):
            if e.t > ZERO and e.v.is_finite:
                r = e.v / e.t
                if r < best:
                    best = r
        else:
            if not e.lv.is_finite:
                continue
            if e.start > ZERO:
                r = e.lv / e.start
                if r < best:
                    best = r
            elif e.lv == ZERO and e.slope < best:
                best = e.slope
            rl = e.right_limit
            r = rl / e.end
            if r < best:
                best = r
    return best


def _piece_after(seq: Sequence, x: Rat) -> Optional[Segment]:
    """The affine piece of seq valid just after x (x strictly inside the domain)."""
    i = seq._index_at(x)
    e = seq.elements[i]
    if isinstance(e, Point):
        if i + 1 >= len(seq.elements):
            return None
        e = seq.elements[i + 1]
    return e if isinstance(e, Segment) else None


def _match_start(sa: Sequence, sb: Sequence) -> Optional[tuple[Rat, bool]]:
    """(infimum abscissa from which the sequences agree, attained?).

    Not attained means they agree strictly after the infimum only (the value
    at the infimum itself differs); the caller must start the period later."""
    if sa.start != sb.start or sa.end != sb.end:
        raise CurveError("match scan needs identical windows")
    bounds = sorted({e.start for e in sa.elements} | {e.start for e in sb.elements})
    threshold = sa.start
    strict = False
    for i, x in enumerate(bounds):
        if sa.value_at(x) != sb.value_at(x):
            threshold, strict = x, True
        up = bounds[i + 1] if i + 1 < len(bounds) else sa.end
        if up <= x:
            continue
        pa = _piece_after(sa, x)
        pb = _piece_after(sb, x)
        same = (
            pa is not None
            and pb is not None
            and pa.slope == pb.slope
            and pa.value_at(x) == pb.value_at(x)
        )
        if not same:
            threshold, strict = up, False
    if threshold >= sa.end:
        return None
    return threshold, not strict


def _detect_candidates(w: Sequence, H: Rat, mu: Rat) -> list[tuple[Rat, Rat]]:
    """Candidate (d, c) pairs for the periodic tail of an exact prefix.

    Only pairs with c/d equal to the known long-run slope mu can be right, so
    everything else is filtered out up front.
    """
    pts = [e for e in w.elements[1:] if isinstance(e, Point) and e.v.is_finite]
    cands: list[tuple[Rat, Rat]] = []
    for a_idx in range(len(pts) - 1, max(len(pts) - 3, 0) - 1, -1):
        anchor = pts[a_idx]
        for j in range(a_idx - 1, max(a_idx - 24, -1), -1):
            prev = pts[j]
            d_hat = anchor.t - prev.t
            if d_hat > ZERO and anchor.v - prev.v == mu * d_hat:
                cands.append((d_hat, anchor.v - prev.v))
    tail = w.elements[-1]
    if isinstance(tail, Segment) and tail.lv.is_finite and tail.slope == mu:
        span = H - tail.start
        d_hat = ONE if span >= Rat(4) else span / Rat(4)
        cands.append((d_hat, tail.slope * d_hat))
    seen = set()
    out = []
    for d_hat, c_hat in cands:
        if (d_hat, c_hat) in seen:
            continue
        seen.add((d_hat, c_hat))
        out.append((d_hat, c_hat))
    out.sort(key=lambda x: x[0])
    return out


def sac(f: Curve, doubling_limit: int = 20) -> Curve:
    """Sub-additive closure: the pointwise infimum of all n-fold
    self-convolutions of f (largest sub-additive minorant with value 0 at 0).

    Strategy: restrict to a finite window, square the running infimum until
    the positive jump of f at 0+ certifies that deeper self-convolutions
    cannot improve the window, detect the periodic tail of the exact prefix,
    then accept the assembled curve only after it passes exact gates
    (value 0 at 0, minorant of f, idempotent under self-convolution) and an
    extended-window recheck.
    """
    v0 = f.value(ZERO)
    if v0.is_minf or (v0.is_finite and v0 < ZERO):
        raise ClosureError("closure diverges: f(0) < 0")
    r0 = f.right_limit(ZERO)
    if r0.is_minf or (r0.is_finite and r0 < ZERO):
        raise ClosureError("closure diverges: f < 0 just after 0")
    f1 = minimize(minimum(make_delta_zero(), f))
    if _is_nonnegative(f1) and _has_zero_prefix(f1):
        return zero_curve()
    if equivalent(minimize(convolution(f1, f1)), f1):
        return f1
    minpos = _min_positive_value(f1)
    if f1.c.is_finite and f1.c < ZERO:
        raise ClosureError("closure not stabilizable: period height is negative")
    if not (minpos > ZERO):
        raise ClosureError(
            "closure not stabilizable: no positive jump after 0 "
            "(and the curve is not already sub-additive)"
        )
    has_inf = f1.attains_plus_inf()
    mu = _min_growth_ratio(f1)
    H = f1.T + Rat(4) * f1.d
    for _ in range(doubling_limit):
        w = _window_restrict(f1, H)
        covered = 1
        for _ in range(64):
            required = (_window_max_finite(w) / minpos).floor() + 1
            if covered >= required and not has_inf:
                break
            w2 = _window_self_conv(w, H)
            covered *= 2
            if has_inf and w2.elements == w.elements and covered >= required:
                w = w2
                break
            w = w2
        else:
            raise ClosureError("closure did not stabilize within the squaring budget")
        wc = _window_curve(w, H)
        result = _finish_from_window(f1, w, wc, H, mu)
        if result is not None:
            return result
        H = H + H
    raise ClosureError(
        f"no stable periodic pattern found after {doubling_limit} window doublings"
    )


def _finish_from_window(
    f1: Curve, w: Sequence, wc: Curve, H: Rat, mu: Rat
) -> Optional[Curve]:
    for d_hat, c_hat in _detect_candidates(w, H, mu):
        if d_hat <= ZERO or H <= d_hat:
            continue
        sa = merge_well_formed(wc.cut(Interval.closed_open(ZERO, H - d_hat)))
        sb = merge_well_formed(
            wc.cut(Interval.closed_open(d_hat, H))
        ).shifted(-d_hat, -c_hat)
        found = _match_start(sa, sb)
        if found is None:
            continue
        t_inf, attained = found
        t_hat = t_inf if attained else t_inf + d_hat
        if H < t_hat + Rat(3) * d_hat:
            continue
        try:
            cand = Curve(
                wc.cut(Interval.closed_open(ZERO, t_hat + d_hat)), t_hat, d_hat, c_hat
            )
        except CurveError:
            continue
        cand = minimize(cand)
        if cand.value(ZERO) != ZERO:
            continue
        if not equivalent(minimum(cand, f1), cand):
            continue
        if not equivalent(minimize(convolution(cand, cand)), cand):
            continue
        # recheck on a window extended by two further periods when needed
        h2 = t_hat + Rat(5) * d_hat
        if H < h2:
            w2 = _recompute_window(f1, h2)
            if w2 is None:
                continue
            if merge_well_formed(
                cand.cut(Interval.closed_open(ZERO, h2))
            ).elements != w2.elements:
                continue
        return cand
    return None


def _recompute_window(f1: Curve, H: Rat) -> Optional[Sequence]:
    minpos = _min_positive_value(f1)
    w = _window_restrict(f1, H)
    covered = 1
    has_inf = f1.attains_plus_inf()
    for _ in range(64):
        required = (_window_max_finite(w) / minpos).floor() + 1
        if covered >= required and not has_inf:
            return w
        w2 = _window_self_conv(w, H)
        covered *= 2
        if has_inf and w2.elements == w.elements and covered >= required:
            return w2
        w = w2
    return None


# -- dominance --------------------------------------------------------------------


class DominanceKind(Enum):
    FIRST_DOMINATES = "first"  # f >= g everywhere
    SECOND_DOMINATES = "second"  # g >= f everywhere
    ASYMPTOTIC_FIRST_OVER_SECOND = "asymptotic-first"  # f >= g for t >= t_star
    ASYMPTOTIC_SECOND_OVER_FIRST = "asymptotic-second"  # g >= f for t >= t_star
    INCOMPARABLE = "incomparable"


@dataclass(frozen=True)
class Dominance:
    kind: DominanceKind
    t_star: Optional[Rat] = None


def check_dominance(f: Curve, g: Curve) -> Dominance:
    """Classify the order relation between f and g.

    The period start the minimum would get bounds the last crossing, so one
    sign scan of f - g over that transient plus two joint hyperperiods decides
    full dominance, asymptotic dominance (with that period start as t*) and
    incomparability.  Ties report the first operand as dominant.
    """
    t_min, _, _ = minimum_params(f, g)
    lcm = rat_lcm(f.d, g.d)
    hi = t_min + lcm + lcm
    f_lt, g_lt, f_lt_tail, g_lt_tail = order_scan(f, g, t_min, hi)
    if not f_lt:
        return Dominance(DominanceKind.FIRST_DOMINATES)
    if not g_lt:
        return Dominance(DominanceKind.SECOND_DOMINATES)
    if not g_lt_tail:
        return Dominance(DominanceKind.ASYMPTOTIC_SECOND_OVER_FIRST, t_min)
    if not f_lt_tail:
        return Dominance(DominanceKind.ASYMPTOTIC_FIRST_OVER_SECOND, t_min)
    return Dominance(DominanceKind.INCOMPARABLE)


def conv_dominance(f: Curve, g: Curve) -> Curve:
    """Convolution when g >= f everywhere, g(0) = 0 and f is sub-additive:
    the result is f itself (the caller vouches for f's sub-additivity)."""
    if g.value(ZERO) != ZERO:
        raise CurveError("dominant operand must have value 0 at 0")
    rel = check_dominance(f, g)
    if rel.kind not in (DominanceKind.SECOND_DOMINATES, DominanceKind.FIRST_DOMINATES):
        raise CurveError("dominance precondition does not hold")
    if rel.kind == DominanceKind.FIRST_DOMINATES and not equivalent(f, g):
        raise CurveError("dominance runs the wrong way: f > g somewhere")
    return f


def _finite_prefix_curve(g: Curve, t_star: Rat) -> Curve:
    """g on [0, t_star[, +inf beyond."""
    prefix = g.cut(Interval.closed_open(ZERO, t_star))
    els = list(prefix.elements)
    els.append(Point(t_star, PLUS_INF))
    els.append(Segment(t_star, t_star + ONE, PLUS_INF, ZERO))
    return Curve(Sequence(els), t_star, ONE, PLUS_INF)


def conv_asymptotic(
    f: Curve, g: Curve, t_star, minimize_steps: bool = True
) -> Curve:
    """Convolution when g >= f from t_star on, f sub-additive, f(0) = g(0) = 0.

    Splitting g at t_star reduces the work to a convolution against a finite
    prefix (which involves only f's own period) followed by a minimum with f.
    """
    t_star = rat(t_star)
    if f.value(ZERO) != ZERO or g.value(ZERO) != ZERO:
        raise CurveError("both operands must have value 0 at 0")
    if f.attains_minus_inf():
        raise CurveError("dominated operand must stay above -inf")
    if t_star <= ZERO:
        return f
    g_a = _finite_prefix_curve(g, t_star)
    inner = convolution(f, g_a, minimize_partials=minimize_steps)
    if minimize_steps:
        inner = minimize(inner)
    out = minimum(inner, f)
    return minimize(out) if minimize_steps else out


# -- self-convolution of the minimum ---------------------------------------------


def _color_elements(
    h_els: list[Element], f: Curve, g: Curve, hi: Rat
) -> list[bool]:
    """True where the element's values coincide with f on its whole domain."""
    fa = merge_well_formed(f.cut(Interval.closed(ZERO, hi)))
    colors: list[bool] = []
    for e in h_els:
        colors.append(_element_matches(fa, e))
    return colors


def _element_matches(cut_seq: Sequence, e: Element) -> bool:
    if isinstance(e, Point):
        try:
            return cut_seq.value_at(e.t) == e.v
        except CurveError:
            return False
    i = cut_seq._index_at(e.start)
    host = cut_seq.elements[i]
    if isinstance(host, Point):
        if i + 1 >= len(cut_seq.elements):
            return False
        host = cut_seq.elements[i + 1]
    if not isinstance(host, Segment):
        return False
    if host.start > e.start or host.end < e.end:
        return False
    return host.slope == e.slope and host.value_at(e.start) == e.lv


def self_conv_min(f: Curve, g: Curve, precomputed_min: Optional[Curve] = None) -> Curve:
    """Convolution of sub-additive f, g (f(0) = g(0) = 0) as the
    self-convolution of h = f ^ g, skipping same-color element pairs.

    Elements of h's cut that replicate f (or g) on their whole domain cannot
    contribute below h when paired together, so only cross-color pairs are
    convolved and h's own cut joins the envelope.  The minimum is usually a
    by-product of the dominance test and can be passed in.
    """
    if f.value(ZERO) != ZERO or g.value(ZERO) != ZERO:
        raise CurveError("both operands must have value 0 at 0")
    h = precomputed_min if precomputed_min is not None else minimum(f, g)
    d = h.d
    c = h.c
    # both 2*T_h + d and T_f + T_g + d are valid period starts for the
    # result (self-convolution of h, resp. plain convolution of f and g with
    # equal slopes); their minimum is therefore valid too
    T = h.T + h.T
    alt = f.T + g.T
    if alt < T:
        T = alt
    T = T + d
    window = T + d
    s_h = h.cut(Interval.closed(ZERO, window))
    els = s_h.elements
    colors = _color_elements(els, f, g, window)
    from_f = [e for e, is_f in zip(els, colors) if is_f]
    from_g = [e for e, is_f in zip(els, colors) if not is_f]
    out: list[Element] = []
    conv = elementary_convolution
    for a in from_f:
        limit = window - a.start
        for b in from_g:
            if b.start > limit:
                break
            out.extend(conv(a, b))
    out.extend(els)
    env = lower_envelope(out, ZERO, window)
    return Curve(env, T, d, c)


# -- dispatcher --------------------------------------------------------------------


@dataclass
class DispatchTrace:
    """What conv_optimized decided and how much work the branch did."""

    branch: str = "plain"
    elementary_convolutions: int = 0
    n_first: int = 0
    n_second: int = 0
    n_result_raw: int = 0
    n_result_min: int = 0


_last_trace = DispatchTrace()


def last_trace() -> DispatchTrace:
    """Trace of the most recent conv_optimized call (not thread-safe)."""
    return _last_trace


def _theorem2_cheaper(dominated: Curve, t_star: Rat, other: Curve) -> bool:
    lcm = rat_lcm(dominated.d, other.d)
    direct_n = cut_cardinality(dominated, dominated.T + lcm + lcm, upper_closed=True)
    base = dominated.T if dominated.T > t_star else t_star
    th2_n = cut_cardinality(dominated, base + dominated.d + dominated.d)
    return th2_n <= direct_n


def conv_optimized(
    f: Curve,
    g: Curve,
    use_dominance: bool = True,
    use_asymptotic: bool = True,
    use_selfconv: bool = True,
    minimize_steps: bool = True,
) -> Curve:
    """Convolution of sub-additive curves with value 0 at 0, picking the
    cheapest applicable identity.

    Full dominance returns the smaller operand outright; asymptotic dominance
    convolves against a finite prefix unless the element-count comparison says
    the direct algorithm is cheaper; otherwise the self-convolution of the
    minimum with color filtering.  The result is always equivalent to the
    plain convolution.
    """
    global _last_trace
    trace = DispatchTrace(n_first=f.cardinality, n_second=g.cardinality)
    before = counters.elementary_convolutions
    rel: Optional[Dominance] = None
    if use_dominance or use_asymptotic:
        rel = check_dominance(f, g)
    result: Optional[Curve] = None
    if rel is not None and use_dominance:
        if rel.kind == DominanceKind.FIRST_DOMINATES:
            trace.branch = "dominance-first"
            result = g
        elif rel.kind == DominanceKind.SECOND_DOMINATES:
            trace.branch = "dominance-second"
            result = f
    if result is None and rel is not None and use_asymptotic:
        if rel.kind in (
            DominanceKind.ASYMPTOTIC_SECOND_OVER_FIRST,
            DominanceKind.ASYMPTOTIC_FIRST_OVER_SECOND,
            DominanceKind.FIRST_DOMINATES,
            DominanceKind.SECOND_DOMINATES,
        ):
            if rel.kind in (
                DominanceKind.ASYMPTOTIC_SECOND_OVER_FIRST,
                DominanceKind.SECOND_DOMINATES,
            ):
                dominated, dominant = f, g
            else:
                dominated, dominant = g, f
            t_star = rel.t_star if rel.t_star is not None else ZERO
            if _theorem2_cheaper(dominated, t_star, dominant):
                trace.branch = "asymptotic"
                result = conv_asymptotic(
                    dominated, dominant, t_star, minimize_steps=minimize_steps
                )
            else:
                trace.branch = "asymptotic-direct"
                result = convolution(f, g, minimize_partials=minimize_steps)
    if result is None:
        if use_selfconv:
            trace.branch = "self-conv"
            result = self_conv_min(f, g)
        else:
            trace.branch = "plain"
            result = convolution(f, g, minimize_partials=minimize_steps)
    trace.n_result_raw = result.cardinality
    if minimize_steps:
        result = minimize(result)
    trace.n_result_min = result.cardinality
    trace.elementary_convolutions = counters.elementary_convolutions - before
    _last_trace = trace
    return result
