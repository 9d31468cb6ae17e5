"""General min-plus operators on curves: minimum, elementary convolution,
interval-by-interval lower envelope, and full convolution.

The by-sequence algorithms work on cuts of the operands; the parameters
(T, d, c) of each result are derived from the operands' long-run slopes.
An instrumentation record counts elementary convolutions and envelope
intervals, which the benchmark front end reads.
"""

from __future__ import annotations

import heapq
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .curves import (
    Curve,
    CurveError,
    Element,
    Interval,
    Point,
    Segment,
    Sequence,
    merge_well_formed,
)
from .minimize import minimize
from .rational import MINUS_INF, ONE, PLUS_INF, ZERO, Rat, UndefinedOperation, rat_lcm


@dataclass
class OpCounters:
    """Work counters, readable as a plain record."""

    elementary_convolutions: int = 0
    envelope_intervals: int = 0

    def reset(self) -> None:
        self.elementary_convolutions = 0
        self.envelope_intervals = 0

    def snapshot(self) -> "OpCounters":
        return OpCounters(self.elementary_convolutions, self.envelope_intervals)


counters = OpCounters()

_parallel_workers = 0


def set_parallel(workers: int) -> None:
    """Enable chunked evaluation of elementary convolutions on a thread pool.

    Results are merged in submission order, so output is identical to the
    single-threaded default.
    """
    global _parallel_workers
    _parallel_workers = max(0, int(workers))


# -- elementary convolution ------------------------------------------------------


def elementary_convolution(e1: Element, e2: Element) -> list[Element]:
    """Min-plus convolution of two elements, as a chain of 1 or 3 elements.

    point x point     -> translated point
    point x segment   -> translated segment
    segment x segment -> the smaller slope first for its own length, then the
    larger one (a single segment when slopes match or a value is infinite).
    """
    counters.elementary_convolutions += 1
    if isinstance(e1, Point) and isinstance(e2, Point):
        return [Point(e1.t + e2.t, e1.v + e2.v)]
    if isinstance(e1, Point):
        e1, e2 = e2, e1
    if isinstance(e2, Point):
        return [e1.shifted(e2.t, e2.v)]
    s1: Segment = e1
    s2: Segment = e2
    start = s1.start + s2.start
    end = s1.end + s2.end
    lv = s1.lv + s2.lv
    if not lv.is_finite:
        return [Segment(start, end, lv, ZERO)]
    if s1.slope == s2.slope:
        return [Segment(start, end, lv, s1.slope)]
    lo, hi = (s1, s2) if s1.slope < s2.slope else (s2, s1)
    mid = start + lo.length
    vmid = lv + lo.slope * lo.length
    return [
        Segment(start, mid, lv, lo.slope),
        Point(mid, vmid),
        Segment(mid, end, vmid, hi.slope),
    ]


def _pairwise_convolutions(
    left: list[Element], right: list[Element], hi: Rat
) -> list[Element]:
    """Elementary convolutions of all pairs whose result starts at or before hi."""

    def run(pairs):
        out: list[Element] = []
        for a, b in pairs:
            out.extend(elementary_convolution(a, b))
        return out

    pairs = [(a, b) for a in left for b in right if a.start + b.start <= hi]
    if _parallel_workers > 1 and len(pairs) > 4096:
        size = (len(pairs) + _parallel_workers - 1) // _parallel_workers
        chunks = [pairs[i : i + size] for i in range(0, len(pairs), size)]
        with ThreadPoolExecutor(max_workers=_parallel_workers) as pool:
            parts = list(pool.map(run, chunks))
        out: list[Element] = []
        for p in parts:
            out.extend(p)
        return out
    return run(pairs)


# -- lower envelope ---------------------------------------------------------------


def _interval_envelope(lines: list[tuple[Rat, Rat]], a: Rat, b: Rat) -> list[Element]:
    """Lower envelope of affine pieces over the open interval ]a, b[, given as
    (value at a, slope) pairs that all cover the whole interval.

    Ties at the left edge and at crossings go to the smaller slope, making the
    output deterministic.  Returns an alternating S (P S)* chain.
    """
    if not lines:
        return [Segment(a, b, PLUS_INF, ZERO)]
    va, ra = lines[0]
    for v, r in lines[1:]:
        if v < va or (v == va and r < ra):
            va, ra = v, r
    out: list[Element] = []
    x, vx = a, va
    while True:
        best_x = None
        best_r = None
        for v, r in lines:
            if r >= ra:
                continue
            cross = x + ((v + r * (x - a)) - vx) / (ra - r)
            if cross <= x or cross >= b:
                continue
            if best_x is None or cross < best_x or (cross == best_x and r < best_r):
                best_x = cross
                best_r = r
        if best_x is None:
            out.append(Segment(x, b, vx, ra))
            return out
        vcross = vx + ra * (best_x - x)
        out.append(Segment(x, best_x, vx, ra))
        out.append(Point(best_x, vcross))
        x, vx, ra = best_x, vcross, best_r


def lower_envelope(
    elements: list[Element], lo: Rat, hi: Rat, upper_closed: bool = False
) -> Sequence:
    """Pointwise minimum of a set of elements over [lo, hi[ (or [lo, hi]).

    Boundary abscissas of the inputs split the window into point-sized and
    open intervals; each interval's envelope is computed from the elements
    defined on all of it, and the per-interval results are concatenated.
    Sub-intervals no element covers come out +inf.  Merged well-formed.

    Among parallel segments only the one with the smallest intercept can ever
    reach the envelope, so membership is tracked as one champion heap per
    distinct slope; interval work then scales with the number of slopes, not
    with the amount of overlap.
    """
    if hi < lo:
        raise CurveError("empty envelope window")
    if lo == hi:
        best = None
        for e in elements:
            if isinstance(e, Point) and e.t == lo:
                if best is None or e.v < best:
                    best = e.v
        return Sequence([Point(lo, PLUS_INF if best is None else best)])
    point_vals: dict[Rat, Rat] = {}
    # (start, end, intercept, slope) with intercept = value at abscissa 0
    segs: list[tuple[Rat, Rat, Rat, Rat]] = []
    minf_segs: list[tuple[Rat, Rat]] = []  # (start, end) of -inf pieces
    xs = {lo, hi}
    for e in elements:
        if isinstance(e, Point):
            if lo <= e.t and (e.t < hi or (e.t == hi and upper_closed)):
                prev = point_vals.get(e.t)
                if prev is None or e.v < prev:
                    point_vals[e.t] = e.v
                xs.add(e.t)
        else:
            if e.end <= lo or e.start >= hi:
                continue
            s = e.start if e.start >= lo else lo
            t = e.end if e.end <= hi else hi
            if e.lv.is_pinf:
                continue  # never below the +inf filler
            xs.add(s)
            xs.add(t)
            if e.lv.is_minf:
                minf_segs.append((s, t))
            else:
                segs.append((s, t, e.lv - e.slope * e.start, e.slope))
    order = sorted(xs)
    segs.sort(key=lambda sg: sg[0])
    minf_segs.sort(key=lambda sg: sg[0])
    heaps: dict[Rat, list[tuple[Rat, int, Rat]]] = {}  # slope -> (intercept, serial, end)
    champ: dict[Rat, tuple[Rat, Rat]] = {}  # slope -> (intercept, end) of the champion
    minf_active: list[Rat] = []  # ends
    serial = 0
    si = 0
    mi = 0
    nseg = len(segs)
    nminf = len(minf_segs)
    out: list[Element] = []
    heappush = heapq.heappush
    heappop = heapq.heappop

    def refresh(x: Rat) -> None:
        dead = []
        for slope, (b, end) in champ.items():
            if end > x:
                continue
            heap = heaps[slope]
            while heap and heap[0][2] <= x:
                heappop(heap)
            if heap:
                top = heap[0]
                champ[slope] = (top[0], top[2])
            else:
                dead.append(slope)
        for slope in dead:
            del champ[slope]
            del heaps[slope]

    for j, x in enumerate(order):
        while minf_active and minf_active[0] <= x:
            heappop(minf_active)
        refresh(x)
        counters.envelope_intervals += 1
        v = point_vals.get(x)
        lines: list[tuple[Rat, Rat]] = []
        if not minf_active:
            for slope, (b, _end) in champ.items():
                lines.append((b + slope * x, slope))
            for sv, _slope in lines:
                if v is None or sv < v:
                    v = sv
        else:
            v = MINUS_INF
        if x < hi or upper_closed:
            out.append(Point(x, PLUS_INF if v is None else v))
        if x == hi:
            break
        inserted = False
        while si < nseg and segs[si][0] <= x:
            s_start, s_end, b, slope = segs[si]
            si += 1
            if s_end <= x:
                continue
            heap = heaps.get(slope)
            if heap is None:
                heap = heaps[slope] = []
            heappush(heap, (b, serial, s_end))
            serial += 1
            cur = champ.get(slope)
            if cur is None or b < cur[0]:
                champ[slope] = (b, s_end)
                inserted = True
            elif b == cur[0] and s_end > cur[1]:
                champ[slope] = (b, s_end)
            elif cur is not None and heap[0][0] < cur[0]:
                top = heap[0]
                champ[slope] = (top[0], top[2])
                inserted = True
        while mi < nminf and minf_segs[mi][0] <= x:
            if minf_segs[mi][1] > x:
                heappush(minf_active, minf_segs[mi][1])
                inserted = True
            mi += 1
        nxt = order[j + 1]
        counters.envelope_intervals += 1
        if minf_active:
            out.append(Segment(x, nxt, MINUS_INF, ZERO))
            continue
        if inserted:
            lines = [(b + slope * x, slope) for slope, (b, _end) in champ.items()]
        out.extend(_interval_envelope(lines, x, nxt))
    return merge_well_formed(Sequence(out))


# -- minimum -----------------------------------------------------------------------


def _period_sup_dev(f: Curve) -> Rat:
    """sup over one period of f(t) - rho*t (upper boundary intercept)."""
    rho = f.rho
    best = MINUS_INF
    for e in f.period_elements():
        if isinstance(e, Point):
            cands = ((e.v - rho * e.t) if e.v.is_finite else e.v,)
        elif not e.lv.is_finite:
            cands = (e.lv,)
        else:
            cands = (e.lv - rho * e.start, e.right_limit - rho * e.end)
        for cand in cands:
            if cand > best:
                best = cand
    return best


def _period_inf_dev(f: Curve) -> Rat:
    """inf over one period of f(t) - rho*t (lower boundary intercept)."""
    rho = f.rho
    best = PLUS_INF
    for e in f.period_elements():
        if isinstance(e, Point):
            cands = ((e.v - rho * e.t) if e.v.is_finite else e.v,)
        elif not e.lv.is_finite:
            cands = (e.lv,)
        else:
            cands = (e.lv - rho * e.start, e.right_limit - rho * e.end)
        for cand in cands:
            if cand < best:
                best = cand
    return best


def tail_crossing_bound(lo: Curve, hi: Curve) -> Rat:
    """Abscissa past which the smaller-slope curve stays at or below the other.

    The line rho_lo*t + M runs above lo's tail and rho_hi*t + m below hi's;
    they cross at (M - m)/(rho_hi - rho_lo).  Requires finite slopes and
    finite periodic values on both sides.
    """
    M = _period_sup_dev(lo)
    m = _period_inf_dev(hi)
    if not (M.is_finite and m.is_finite):
        raise UndefinedOperation(
            "tail crossing bound undefined for mixed finite/infinite periodic parts"
        )
    return (M - m) / (hi.rho - lo.rho)


def minimum_params(f: Curve, g: Curve) -> tuple[Rat, Rat, Rat]:
    """(T, d, c) of the pointwise minimum, from the operands' parameters only.

    Equal slopes: T = max of the period starts, d = lcm of the periods.
    Different slopes: the flatter curve wins eventually, so T additionally
    covers the last-crossing bound and the result keeps the flatter curve's
    period.
    """
    rf, rg = f.rho, g.rho
    if rf == rg:
        T = f.T if f.T > g.T else g.T
        d = rat_lcm(f.d, g.d)
        c = rf * d if rf.is_finite else f.c
        return T, d, c
    lo, hi_c = (f, g) if rf < rg else (g, f)
    s_pinf = hi_c.ultimately_plus_inf_from()
    s_minf = lo.ultimately_minus_inf_from()
    if s_pinf is not None and s_minf is not None:
        tbar = s_pinf if s_pinf < s_minf else s_minf
    elif s_pinf is not None:
        tbar = s_pinf
    elif s_minf is not None:
        tbar = s_minf
    else:
        tbar = tail_crossing_bound(lo, hi_c)
    T = lo.T if lo.T > hi_c.T else hi_c.T
    if tbar > T:
        T = tbar
    # Eq. (5) is a weak inequality: at T itself the minimum must already
    # coincide with the flatter curve.
    if T == ZERO and not lo.value(ZERO) <= hi_c.value(ZERO):
        T = lo.d
    return T, lo.d, lo.c


def minimum(f: Curve, g: Curve) -> Curve:
    """Pointwise minimum of two curves."""
    T, d, c = minimum_params(f, g)
    window = T + d
    els: list[Element] = []
    els.extend(f.cut(Interval.closed_open(ZERO, window)).elements)
    els.extend(g.cut(Interval.closed_open(ZERO, window)).elements)
    env = lower_envelope(els, ZERO, window)
    return Curve(env, T, d, c)


# -- convolution --------------------------------------------------------------------


def check_convolution_defined(f: Curve, g: Curve) -> None:
    """Reject operand pairs mixing +inf on one side with -inf on the other."""
    if (f.attains_plus_inf() and g.attains_minus_inf()) or (
        f.attains_minus_inf() and g.attains_plus_inf()
    ):
        raise UndefinedOperation(
            "convolution undefined: one operand attains +inf and the other -inf"
        )


def _wrap_envelope(els: list[Element], T: Rat, d: Rat, c: Rat) -> Curve:
    env = lower_envelope(els, ZERO, T + d)
    return Curve(env, T, d, c)


def _conv_same_slope(f: Curve, g: Curve) -> Curve:
    # Cut both operands over the full result window: decompositions of any
    # t < T + d then have both halves materialized, transient content
    # included, which shorter per-operand windows do not guarantee.
    d = rat_lcm(f.d, g.d)
    T = f.T + g.T + d
    c = f.rho * d
    window = T + d
    sf = f.cut(Interval.closed(ZERO, window)).elements
    sg = g.cut(Interval.closed(ZERO, window)).elements
    els = _pairwise_convolutions(sf, sg, window)
    return _wrap_envelope(els, T, d, c)


def _conv_transient_transient(f: Curve, g: Curve) -> Curve:
    sf = f.cut(Interval.closed_open(ZERO, f.T)).elements
    sg = g.cut(Interval.closed_open(ZERO, g.T)).elements
    T = f.T + g.T
    els = _pairwise_convolutions(sf, sg, T)
    env = lower_envelope(els, ZERO, T)
    tail = [Point(T, PLUS_INF), Segment(T, T + ONE, PLUS_INF, ZERO)]
    return Curve(Sequence(list(env.elements) + tail), T, ONE, PLUS_INF)


def _conv_transient_periodic(ft: Curve, gp: Curve) -> Curve:
    """Transient content of ft against periodic content of gp; pseudo-periodic
    from the sum of the period starts with gp's period."""
    T = ft.T + gp.T
    d = gp.d
    c = gp.c
    sf = ft.cut(Interval.closed_open(ZERO, ft.T)).elements
    sg = gp.cut(Interval.closed_open(gp.T, T + d)).elements
    els = _pairwise_convolutions(sf, sg, T + d)
    return _wrap_envelope(els, T, d, c)


def _conv_periodic_periodic(f: Curve, g: Curve) -> Curve:
    d = rat_lcm(f.d, g.d)
    T = f.T + g.T + d
    rho = f.rho if f.rho < g.rho else g.rho
    c = rho * d if rho.is_finite else rho
    two_d = d + d
    sf = f.cut(Interval.closed_open(f.T, f.T + two_d)).elements
    sg = g.cut(Interval.closed_open(g.T, g.T + two_d)).elements
    els = _pairwise_convolutions(sf, sg, T + d)
    return _wrap_envelope(els, T, d, c)


def convolution(f: Curve, g: Curve, minimize_partials: bool = True) -> Curve:
    """Exact min-plus convolution of two curves.

    With equal finite slopes a single by-sequence pass suffices.  Otherwise
    each operand splits into transient and periodic parts and the partial
    convolutions are combined with minimum; partial results are minimized
    before combining unless disabled.
    """
    check_convolution_defined(f, g)
    rf, rg = f.rho, g.rho
    if rf == rg and rf.is_finite:
        return _conv_same_slope(f, g)

    f_tail_inf = f.period_all_plus_inf()
    g_tail_inf = g.period_all_plus_inf()
    parts: list[Curve] = []
    if f.T > ZERO and g.T > ZERO:
        parts.append(_conv_transient_transient(f, g))
    if f.T > ZERO and not g_tail_inf:
        parts.append(_conv_transient_periodic(f, g))
    if g.T > ZERO and not f_tail_inf:
        parts.append(_conv_transient_periodic(g, f))
    if not f_tail_inf and not g_tail_inf:
        parts.append(_conv_periodic_periodic(f, g))
    if not parts:
        # both tails infinite and at least one transient empty: the periodic
        # pass still yields the correct (possibly everywhere-infinite) result
        parts.append(_conv_periodic_periodic(f, g))
    if minimize_partials:
        parts = [minimize(p) for p in parts]
    # combine equal-slope partials first (their minimum needs no crossing
    # bound), then the cross-slope groups, so the period start of the result
    # is not inflated by intermediate crossing estimates
    parts.sort(key=lambda p: (0 if p.rho.is_finite else 1,))
    groups: list[Curve] = []
    for p in parts:
        for i, q in enumerate(groups):
            if q.rho == p.rho:
                groups[i] = minimum(q, p)
                break
        else:
            groups.append(p)
    if minimize_partials:
        groups = [minimize(q) for q in groups]
    acc = groups[0]
    for p in groups[1:]:
        acc = minimum(acc, p)
        if minimize_partials:
            acc = minimize(acc)
    return acc
