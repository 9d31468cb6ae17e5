"""Representation minimization: shrink a curve's period by testing prime
divisors of the breakpoint count, then pull the period start left by whole
periods and by trailing segment pairs.

Breakpoints are counted over ]T, T+d], junction included: with the junction
excluded, a plain staircase would count one breakpoint short per period and
the divisibility between period factors and breakpoint counts would fail.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from .curves import (
    Curve,
    Interval,
    Point,
    Segment,
    Sequence,
    merge_well_formed,
)
from .rational import ONE, ZERO, Rat, factorize


@dataclass
class MinimizationReport:
    """What one minimization pass did; serializes to one CSV row."""

    original_cardinality: int = 0
    minimized_cardinality: int = 0
    breakpoint_count: int = 0
    factors_tested: list[tuple[int, bool]] = field(default_factory=list)
    periods_removed: int = 0
    transient_segments_removed: int = 0

    CSV_HEADER = (
        "original_cardinality,minimized_cardinality,breakpoint_count,"
        "factors_tested,periods_removed,transient_segments_removed"
    )

    def csv_row(self) -> str:
        factors = ";".join(f"{p}{'+' if ok else '-'}" for p, ok in self.factors_tested)
        return (
            f"{self.original_cardinality},{self.minimized_cardinality},"
            f"{self.breakpoint_count},{factors},{self.periods_removed},"
            f"{self.transient_segments_removed}"
        )


def _remerged(f: Curve) -> Curve:
    return Curve(merge_well_formed(f.seq), f.T, f.d, f.c)


def count_breakpoints(f: Curve) -> int:
    """Number of breakpoints in ]T, T+d], judged against the periodic extension.

    Interior points of the merged one-period cut are breakpoints by
    construction; the junction at T+d is one when the period's right edge does
    not continue smoothly into the shifted image of its left edge.
    """
    period = merge_well_formed(f.cut(Interval.closed_open(f.T, f.T + f.d)))
    els = period.elements
    b = sum(1 for e in els[1:] if isinstance(e, Point))
    last: Segment = els[-1]
    first_seg: Segment = els[1]
    v_start: Rat = els[0].v
    try:
        v_junction = v_start + f.c
        right_lv = first_seg.lv + f.c
    except ArithmeticError:
        return b + 1  # opposite infinities: the junction cannot be smooth
    smooth = (
        last.right_limit == v_junction == right_lv and last.slope == first_seg.slope
    )
    return b if smooth else b + 1


def _is_ultimately_affine(f: Curve) -> bool:
    return count_breakpoints(f) == 0


def _try_period_divisor(f: Curve, p: int) -> Curve | None:
    """Replace (d, c) by (d/p, c/p) when the period splits into p matching parts."""
    d_new = f.d / Rat(p)
    c_new = f.c / Rat(p)
    base = merge_well_formed(f.cut(Interval.closed_open(f.T, f.T + d_new)))
    for k in range(1, p):
        lo = f.T + k * d_new
        part = merge_well_formed(f.cut(Interval.closed_open(lo, lo + d_new)))
        shifted = part.shifted(-(k * d_new), -(k * c_new))
        if shifted.elements != base.elements:
            return None
    seq = f.cut(Interval.closed_open(ZERO, f.T + d_new))
    return Curve(seq, f.T, d_new, c_new)


def minimize_period(f: Curve) -> tuple[Curve, MinimizationReport]:
    """Divide the period down to its minimum (or canonicalize d = 1 when the
    curve ends in a half-line, whose period length is arbitrary)."""
    rep = MinimizationReport(original_cardinality=f.cardinality)
    f = _remerged(f)
    b = count_breakpoints(f)
    rep.breakpoint_count = b
    if b == 0:
        rho = f.rho
        if f.d != ONE or f.c != rho:
            seq = f.cut(Interval.closed_open(ZERO, f.T + ONE))
            f = Curve(seq, f.T, ONE, rho)
        rep.minimized_cardinality = f.cardinality
        return f, rep
    if not f.c.is_finite:
        # per-part value shifts by c/p are meaningless here; the period is
        # already as small as this representation can state
        rep.minimized_cardinality = f.cardinality
        return f, rep
    for p, mult in sorted(Counter(factorize(b)).items()):
        for _ in range(mult):
            reduced = _try_period_divisor(f, p)
            rep.factors_tested.append((p, reduced is not None))
            if reduced is None:
                break
            f = reduced
    rep.minimized_cardinality = f.cardinality
    return f, rep


def _line_value(f: Curve, t: Rat, anchor_t: Rat, anchor_v: Rat, rho: Rat) -> Rat:
    return anchor_v + rho * (t - anchor_t)


def _pull_ultimately_affine(f: Curve) -> tuple[Curve, bool]:
    """Align T with the start of the trailing half-line (or one period past it
    when the value at the junction jumps, making the infimum unattainable)."""
    rho = f.rho
    fT = f.value(f.T)
    if not (rho.is_finite and fT.is_finite):
        return f, False
    merged = merge_well_formed(f.seq)
    els = merged.elements
    tail: Segment = els[-1]
    if tail.slope != rho or tail.lv != _line_value(f, tail.start, f.T, fT, rho):
        return f, False
    t_l = tail.start
    achievable = True
    if len(els) >= 2:
        prev = els[-2]
        achievable = isinstance(prev, Point) and prev.v == tail.lv
    t_new = t_l if achievable else (t_l + f.d if t_l + f.d < f.T else f.T)
    if t_new >= f.T:
        return f, False
    seq = f.cut(Interval.closed_open(ZERO, t_new + f.d))
    return Curve(seq, t_new, f.d, f.c), True


def minimize_transient(f: Curve) -> tuple[Curve, MinimizationReport]:
    """Bring the period start forward: drop whole trailing periods from the
    transient, then trailing (point, segment) pairs, until neither applies.
    Assumes the period is already minimal."""
    rep = MinimizationReport(original_cardinality=f.cardinality)
    f = _remerged(f)
    if not f.c.is_finite:
        # period content repeats with an infinite shift: the only admissible
        # pull is to the start of the trailing identically-infinite stretch
        s = (
            f.ultimately_plus_inf_from()
            if f.c.is_pinf
            else f.ultimately_minus_inf_from()
        )
        if s is not None and s < f.T:
            f = Curve(f.cut(Interval.closed_open(ZERO, s + f.d)), s, f.d, f.c)
        rep.minimized_cardinality = f.cardinality
        return f, rep
    ua = _is_ultimately_affine(f)
    while True:
        moved = False
        while f.T >= f.d:
            period = merge_well_formed(f.cut(Interval.closed_open(f.T, f.T + f.d)))
            prev = merge_well_formed(
                f.cut(Interval.closed_open(f.T - f.d, f.T))
            )
            if prev.elements != period.shifted(-f.d, -f.c).elements:
                break
            f = Curve(f.cut(Interval.closed_open(ZERO, f.T)), f.T - f.d, f.d, f.c)
            rep.periods_removed += 1
            moved = True
        if ua:
            f, pulled = _pull_ultimately_affine(f)
            moved = moved or pulled
            if not pulled:
                break
            continue
        period = merge_well_formed(f.cut(Interval.closed_open(f.T, f.T + f.d)))
        pair_pt = period.elements[-2]
        pair_seg = period.elements[-1]
        if isinstance(pair_pt, Point):
            l = (f.T + f.d) - pair_pt.t
            if ZERO < l <= f.T:
                target = merge_well_formed(
                    f.cut(Interval.closed_open(f.T - l, f.T))
                )
                shifted = Sequence([pair_pt, pair_seg]).shifted(-f.d, -f.c)
                if target.elements == shifted.elements:
                    t_new = f.T - l
                    f = Curve(
                        f.cut(Interval.closed_open(ZERO, t_new + f.d)), t_new, f.d, f.c
                    )
                    rep.transient_segments_removed += 1
                    moved = True
        if not moved:
            break
    rep.minimized_cardinality = f.cardinality
    return f, rep


def minimize_with_report(f: Curve) -> tuple[Curve, MinimizationReport]:
    """Full minimization: merge, minimize the period, minimize the transient."""
    original = f.cardinality
    g, rep_p = minimize_period(f)
    g, rep_t = minimize_transient(g)
    g = _remerged(g)
    report = MinimizationReport(
        original_cardinality=original,
        minimized_cardinality=g.cardinality,
        breakpoint_count=rep_p.breakpoint_count,
        factors_tested=rep_p.factors_tested,
        periods_removed=rep_t.periods_removed,
        transient_segments_removed=rep_t.transient_segments_removed,
    )
    return g, report


def minimize(f: Curve) -> Curve:
    return minimize_with_report(f)[0]
