"""Piecewise-affine curve model: points, open segments, sequences and
ultimately pseudo-periodic curves.

A curve stores a sequence over [0, T+d[ plus the period parameters (T, d, c);
beyond the stored window values follow f(t + d) = f(t) + c for t >= T.  The
period start T always carries an explicit point element even when it is not a
breakpoint, so algorithms can split transient from periodic content without
re-deriving it.
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Union

from .rational import MINUS_INF, ONE, PLUS_INF, ZERO, Rat, rat, rat_lcm


class CurveError(ValueError):
    """Malformed curve, sequence or interval."""


class Point:
    """Function sample (t, f(t)) at a single abscissa."""

    __slots__ = ("t", "v")

    def __init__(self, t: Rat, v: Rat):
        self.t = t
        self.v = v

    @property
    def start(self) -> Rat:
        return self.t

    @property
    def end(self) -> Rat:
        return self.t

    def shifted(self, dt: Rat, dv: Rat) -> "Point":
        return Point(self.t + dt, self.v + dv)

    def __eq__(self, other):
        return isinstance(other, Point) and self.t == other.t and self.v == other.v

    def __hash__(self):
        return hash((self.t, self.v))

    def __repr__(self):
        return f"P({self.t}, {self.v})"


class Segment:
    """Affine piece on the open interval ]start, end[.

    ``lv`` is the value approached at start+; constant infinite segments
    keep slope 0 by convention.
    """

    __slots__ = ("start", "end", "lv", "slope")

    def __init__(self, start: Rat, end: Rat, lv: Rat, slope: Rat):
        if not start < end:
            raise CurveError(f"segment needs start < end, got [{start}, {end}]")
        if not lv.is_finite:
            slope = ZERO
        self.start = start
        self.end = end
        self.lv = lv
        self.slope = slope

    def value_at(self, t: Rat) -> Rat:
        if not self.lv.is_finite:
            return self.lv
        return self.lv + self.slope * (t - self.start)

    @property
    def right_limit(self) -> Rat:
        if not self.lv.is_finite:
            return self.lv
        return self.lv + self.slope * (self.end - self.start)

    @property
    def length(self) -> Rat:
        return self.end - self.start

    def contains(self, t: Rat) -> bool:
        return self.start < t < self.end

    def shifted(self, dt: Rat, dv: Rat) -> "Segment":
        return Segment(self.start + dt, self.end + dt, self.lv + dv, self.slope)

    def split_at(self, t: Rat) -> tuple["Segment", Point, "Segment"]:
        v = self.value_at(t)
        return (
            Segment(self.start, t, self.lv, self.slope),
            Point(t, v),
            Segment(t, self.end, v, self.slope),
        )

    def __eq__(self, other):
        return (
            isinstance(other, Segment)
            and self.start == other.start
            and self.end == other.end
            and self.lv == other.lv
            and self.slope == other.slope
        )

    def __hash__(self):
        return hash((self.start, self.end, self.lv, self.slope))

    def __repr__(self):
        return f"S({self.start}, {self.end}, lv={self.lv}, r={self.slope})"


Element = Union[Point, Segment]


@dataclass(frozen=True)
class Interval:
    """Closed/open interval of the time axis."""

    lower: Rat
    upper: Rat
    lower_closed: bool = True
    upper_closed: bool = False

    def __post_init__(self):
        object.__setattr__(self, "lower", rat(self.lower))
        object.__setattr__(self, "upper", rat(self.upper))
        if self.lower > self.upper:
            raise CurveError(f"empty interval [{self.lower}, {self.upper}]")
        if self.lower == self.upper and not (self.lower_closed and self.upper_closed):
            raise CurveError("point interval must be closed on both sides")

    @classmethod
    def closed_open(cls, lo, hi) -> "Interval":
        return cls(rat(lo), rat(hi), True, False)

    @classmethod
    def closed(cls, lo, hi) -> "Interval":
        return cls(rat(lo), rat(hi), True, True)

    @classmethod
    def point(cls, t) -> "Interval":
        t = rat(t)
        return cls(t, t, True, True)

    def __str__(self):
        lo = "[" if self.lower_closed else "]"
        hi = "]" if self.upper_closed else "["
        return f"{lo}{self.lower}, {self.upper}{hi}"


class Sequence:
    """Ordered alternation of points and open segments tiling an interval.

    Starts with a point at the domain start; ends with a segment when the
    domain is right-open, with a point when it is right-closed.
    """

    __slots__ = ("elements", "start", "end", "right_closed", "_bounds")

    def __init__(self, elements: Iterable[Element]):
        els = list(elements)
        if not els:
            raise CurveError("empty sequence")
        if not isinstance(els[0], Point):
            raise CurveError("sequence must start with a point")
        prev = els[0]
        for e in els[1:]:
            if isinstance(prev, Point):
                if not isinstance(e, Segment) or e.start != prev.t:
                    raise CurveError(f"expected segment starting at {prev.t}, got {e!r}")
            else:
                if not isinstance(e, Point) or e.t != prev.end:
                    raise CurveError(f"expected point at {prev.end}, got {e!r}")
            prev = e
        self.elements = els
        self.start = els[0].t
        self.end = prev.end if isinstance(prev, Segment) else prev.t
        self.right_closed = isinstance(prev, Point)
        self._bounds = None

    def __len__(self):
        return len(self.elements)

    def __iter__(self) -> Iterator[Element]:
        return iter(self.elements)

    def __eq__(self, other):
        return isinstance(other, Sequence) and self.elements == other.elements

    def __repr__(self):
        closer = "]" if self.right_closed else "["
        return f"Sequence([{self.start}, {self.end}{closer}, N={len(self)})"

    @property
    def cardinality(self) -> int:
        return len(self.elements)

    def _bound_keys(self):
        if self._bounds is None:
            self._bounds = [e.start for e in self.elements]
        return self._bounds

    def _index_at(self, t: Rat) -> int:
        """Index of the element whose domain contains t (points win boundaries)."""
        bounds = self._bound_keys()
        i = bisect_left(bounds, t)
        if i < len(bounds) and bounds[i] == t:
            return i
        if i == 0:
            raise CurveError(f"{t} outside sequence domain")
        return i - 1

    def value_at(self, t: Rat) -> Rat:
        e = self.elements[self._index_at(t)]
        if isinstance(e, Point):
            if e.t != t:
                raise CurveError(f"{t} outside sequence domain")
            return e.v
        if e.contains(t):
            return e.value_at(t)
        raise CurveError(f"{t} outside sequence domain")

    def shifted(self, dt: Rat, dv: Rat) -> "Sequence":
        return Sequence(e.shifted(dt, dv) for e in self.elements)

    def split_at(self, t: Rat) -> "Sequence":
        """Return an equal sequence with an explicit point at t."""
        if t <= self.start or t >= self.end:
            return self
        out: list[Element] = []
        for e in self.elements:
            if isinstance(e, Segment) and e.contains(t):
                out.extend(e.split_at(t))
            else:
                out.append(e)
        return Sequence(out)


def merge_well_formed(seq: Sequence) -> Sequence:
    """Collapse collinear segment-point-segment triplets.

    Every interior point of the result is a breakpoint (a discontinuity or a
    slope change); values are unchanged everywhere and the cardinality never
    grows.
    """
    els = seq.elements
    out: list[Element] = [els[0]]
    i = 1
    n = len(els)
    while i < n:
        e = els[i]
        if (
            isinstance(e, Point)
            and i + 1 < n
            and isinstance(out[-1], Segment)
            and isinstance(els[i + 1], Segment)
        ):
            s1: Segment = out[-1]
            s2: Segment = els[i + 1]
            if s1.right_limit == e.v == s2.lv and s1.slope == s2.slope:
                out[-1] = Segment(s1.start, s2.end, s1.lv, s1.slope)
                i += 2
                continue
        out.append(e)
        i += 1
    return Sequence(out)


class Curve:
    """Ultimately pseudo-periodic curve (sequence over [0, T+d[, T, d, c)."""

    __slots__ = ("seq", "T", "d", "c", "_period_idx")

    def __init__(self, seq: Sequence, T: Rat, d: Rat, c: Rat):
        T, d, c = rat(T), rat(d), rat(c)
        if not (T.is_finite and T >= ZERO):
            raise CurveError(f"period start must be finite and >= 0, got {T}")
        if not (d.is_finite and d > ZERO):
            raise CurveError(f"period length must be finite and > 0, got {d}")
        if seq.start != ZERO or seq.end != T + d or seq.right_closed:
            raise CurveError(
                f"curve sequence must cover [0, {T + d}[, got [{seq.start}, {seq.end}"
                f"{']' if seq.right_closed else '['}"
            )
        seq = seq.split_at(T)
        self.seq = seq
        self.T = T
        self.d = d
        self.c = c
        self._period_idx = seq._index_at(T)

    # -- basic views -------------------------------------------------------

    @property
    def rho(self) -> Rat:
        """Long-run slope c/d."""
        if not self.c.is_finite:
            return self.c
        return self.c / self.d

    @property
    def cardinality(self) -> int:
        return len(self.seq)

    def transient_elements(self) -> list[Element]:
        return self.seq.elements[: self._period_idx]

    def period_elements(self) -> list[Element]:
        return self.seq.elements[self._period_idx :]

    def __eq__(self, other):
        return (
            isinstance(other, Curve)
            and self.T == other.T
            and self.d == other.d
            and self.c == other.c
            and self.seq == other.seq
        )

    def __repr__(self):
        return f"Curve(T={self.T}, d={self.d}, c={self.c}, N={self.cardinality})"

    # -- evaluation ----------------------------------------------------------

    def _reduce(self, t: Rat) -> tuple[Rat, int]:
        """Map t >= 0 to (abscissa in [0, T+d[, whole periods removed)."""
        if t < self.T + self.d:
            return t, 0
        k = ((t - self.T) / self.d).floor()
        return t - k * self.d, k

    def value(self, t) -> Rat:
        t = rat(t)
        if t < ZERO:
            raise CurveError("curves are defined on t >= 0")
        t0, k = self._reduce(t)
        base = self.seq.value_at(t0)
        if k == 0:
            return base
        return base + k * self.c

    def right_limit(self, t) -> Rat:
        """Value approached from t+."""
        t = rat(t)
        if t < ZERO:
            raise CurveError("curves are defined on t >= 0")
        t0, k = self._reduce(t)
        els = self.seq.elements
        i = self.seq._index_at(t0)
        e = els[i]
        if isinstance(e, Point):
            base = els[i + 1].lv if i + 1 < len(els) else None
            if base is None:  # cannot happen: curve windows end with a segment
                raise CurveError("right limit outside stored window")
        else:
            base = e.value_at(t0) if e.contains(t0) else e.lv
        return base + k * self.c if k else base

    def left_limit(self, t) -> Rat:
        """Value approached from t-; t must be > 0."""
        t = rat(t)
        if t <= ZERO:
            raise CurveError("left limit needs t > 0")
        if t <= self.T + self.d:
            t0, k = t, 0
        else:
            k = ((t - self.T - self.d) / self.d).floor() + 1
            t0 = t - k * self.d
            if t0 == self.T:  # land in ]T, T+d] instead of [T, T+d[
                t0 = self.T + self.d
                k -= 1
        els = self.seq.elements
        bounds = self.seq._bound_keys()
        i = bisect_left(bounds, t0)
        if i < len(bounds) and bounds[i] == t0:
            prev = els[i - 1]
            base = prev.right_limit if isinstance(prev, Segment) else prev.v
        else:
            e = els[i - 1]
            base = e.value_at(t0) if e.contains(t0) else e.right_limit
        return base + k * self.c if k else base

    # -- infinite-value structure ---------------------------------------------

    def attains_plus_inf(self) -> bool:
        if self.c.is_pinf:
            return True
        return any(
            (e.v.is_pinf if isinstance(e, Point) else e.lv.is_pinf)
            for e in self.seq.elements
        )

    def attains_minus_inf(self) -> bool:
        if self.c.is_minf:
            return True
        return any(
            (e.v.is_minf if isinstance(e, Point) else e.lv.is_minf)
            for e in self.seq.elements
        )

    def period_all_plus_inf(self) -> bool:
        return all(
            (e.v.is_pinf if isinstance(e, Point) else e.lv.is_pinf)
            for e in self.period_elements()
        )

    def period_all_minus_inf(self) -> bool:
        return all(
            (e.v.is_minf if isinstance(e, Point) else e.lv.is_minf)
            for e in self.period_elements()
        )

    def ultimately_plus_inf_from(self) -> Optional[Rat]:
        """Earliest abscissa s with f == +inf on [s, oo[, or None."""
        if self.period_all_plus_inf():
            s = self.T
            for e in reversed(self.transient_elements()):
                val = e.v if isinstance(e, Point) else e.lv
                if val.is_pinf:
                    s = e.start
                else:
                    break
            return s
        if self.c.is_pinf:
            return self.T + self.d
        return None

    def ultimately_minus_inf_from(self) -> Optional[Rat]:
        """Earliest abscissa s with f == -inf on [s, oo[, or None."""
        if self.period_all_minus_inf():
            s = self.T
            for e in reversed(self.transient_elements()):
                val = e.v if isinstance(e, Point) else e.lv
                if val.is_minf:
                    s = e.start
                else:
                    break
            return s
        if self.c.is_minf:
            return self.T + self.d
        return None

    # -- cutting -----------------------------------------------------------------

    def _extension_elements(self, lo: Rat) -> Iterator[Element]:
        """Yield elements of the periodic extension from the one containing lo."""
        els = self.seq.elements
        bounds = self.seq._bound_keys()
        if lo < self.T + self.d:
            k = 0
            t0 = lo
        else:
            k = ((lo - self.T) / self.d).floor()
            t0 = lo - k * self.d
        idx = bisect_left(bounds, t0)
        if idx >= len(bounds) or bounds[idx] != t0:
            idx -= 1
        if k and idx < self._period_idx:
            idx = self._period_idx
        n = len(els)
        while True:
            if idx >= n:
                idx = self._period_idx
                k += 1
            e = els[idx]
            if k == 0:
                yield e
            else:
                yield e.shifted(k * self.d, k * self.c)
            idx += 1

    def cut(self, iv: Interval) -> Sequence:
        """Materialize the curve over a bounded interval starting left-closed."""
        if not iv.lower_closed:
            raise CurveError("cut interval must be left-closed")
        if not iv.upper.is_finite:
            raise CurveError("cut interval must be bounded")
        if iv.lower < ZERO:
            raise CurveError("cut interval must lie in [0, +inf[")
        return Sequence(self.cut_elements(iv.lower, iv.upper, iv.upper_closed))

    def cut_elements(self, lo: Rat, hi: Rat, upper_closed: bool = False) -> list[Element]:
        """Elements of the cut as a plain list (no sequence validation)."""
        if lo == hi:
            return [Point(lo, self.value(lo))]
        out: list[Element] = []
        for e in self._extension_elements(lo):
            if isinstance(e, Point):
                if e.t < lo:
                    continue
                if e.t > hi or (e.t == hi and not upper_closed):
                    break
                if not out and e.t > lo:
                    raise CurveError("cut start not covered")  # defensive
                out.append(e)
                if e.t == hi:
                    break
            else:
                if e.end <= lo:
                    continue
                seg = e
                if seg.start < lo:
                    if not out:
                        out.append(Point(lo, seg.value_at(lo)))
                    seg = Segment(lo, seg.end, seg.value_at(lo), seg.slope)
                if seg.start >= hi:
                    break
                if seg.end >= hi:
                    last = Segment(seg.start, hi, seg.lv, seg.slope) if seg.end > hi else seg
                    out.append(last)
                    if upper_closed:
                        out.append(Point(hi, self.value(hi)))
                    break
                out.append(seg)
        if not out:
            raise CurveError(f"cut over [{lo}, {hi}] produced no elements")
        return out


# -- constructors ------------------------------------------------------------------


def zero_curve() -> Curve:
    return Curve(
        Sequence([Point(ZERO, ZERO), Segment(ZERO, ONE, ZERO, ZERO)]), ZERO, ONE, ZERO
    )


def constant_curve(v) -> Curve:
    """Curve identically equal to v (including at 0)."""
    v = rat(v)
    return Curve(
        Sequence([Point(ZERO, v), Segment(ZERO, ONE, v, ZERO)]), ZERO, ONE, ZERO
    )


def make_rate_latency(rate, latency) -> Curve:
    """Service curve R * max(t - theta, 0)."""
    R, theta = rat(rate), rat(latency)
    if not (R.is_finite and R > ZERO):
        raise CurveError(f"rate must be finite and > 0, got {R}")
    if not (theta.is_finite and theta >= ZERO):
        raise CurveError(f"latency must be finite and >= 0, got {theta}")
    if theta == ZERO:
        seq = Sequence([Point(ZERO, ZERO), Segment(ZERO, ONE, ZERO, R)])
        return Curve(seq, ZERO, ONE, R)
    seq = Sequence(
        [
            Point(ZERO, ZERO),
            Segment(ZERO, theta, ZERO, ZERO),
            Point(theta, ZERO),
            Segment(theta, theta + ONE, ZERO, R),
        ]
    )
    return Curve(seq, theta, ONE, R)


def make_token_bucket(burst, rate) -> Curve:
    """Arrival curve: 0 at t = 0, burst + rate * t for t > 0.

    A positive burst is a jump at 0 that never repeats, so the period cannot
    start at 0 (the pseudo-periodic identity is a weak inequality); the
    representation uses T = d instead.
    """
    sigma, rho = rat(burst), rat(rate)
    if not (sigma.is_finite and sigma >= ZERO and rho.is_finite and rho >= ZERO):
        raise CurveError("token bucket needs finite nonnegative parameters")
    if sigma == ZERO:
        seq = Sequence([Point(ZERO, ZERO), Segment(ZERO, ONE, ZERO, rho)])
        return Curve(seq, ZERO, ONE, rho)
    two = Rat(2)
    seq = Sequence(
        [
            Point(ZERO, ZERO),
            Segment(ZERO, ONE, sigma, rho),
            Point(ONE, sigma + rho),
            Segment(ONE, two, sigma + rho, rho),
        ]
    )
    return Curve(seq, ONE, ONE, rho)


def make_delta_zero() -> Curve:
    """Infinite step: 0 at t = 0, +inf for t > 0 (neutral element of convolution).

    Stored with c = +inf so the long-run slope reflects the infinite tail.
    """
    seq = Sequence([Point(ZERO, ZERO), Segment(ZERO, ONE, PLUS_INF, ZERO)])
    return Curve(seq, ZERO, ONE, PLUS_INF)


def add_jump(f: Curve, w) -> Curve:
    """Add w to f everywhere except at t = 0 (requires f(0) = 0).

    With w = +inf the result equals the infinite step.  When f is periodic
    from 0, the jump forces the period start to d (same weak-inequality
    constraint as the token bucket).
    """
    w = rat(w)
    if f.value(ZERO) != ZERO:
        raise CurveError("add_jump requires f(0) = 0")
    if w.is_minf or (w.is_finite and w < ZERO):
        raise CurveError(f"jump must be >= 0, got {w}")
    if w.is_pinf:
        return make_delta_zero()
    if w == ZERO:
        return f
    T = f.T if f.T > ZERO else f.d
    pieces = f.cut(Interval.closed_open(ZERO, T + f.d))
    out: list[Element] = []
    for e in pieces.elements:
        if isinstance(e, Point):
            out.append(Point(e.t, e.v if e.t == ZERO else e.v + w))
        else:
            out.append(Segment(e.start, e.end, e.lv + w, e.slope))
    return Curve(Sequence(out), T, f.d, f.c)


# -- function equality ---------------------------------------------------------------


def _infinity_clash(f: Curve, g: Curve) -> bool:
    return (f.attains_plus_inf() and g.attains_minus_inf()) or (
        f.attains_minus_inf() and g.attains_plus_inf()
    )


def comparison_window(f: Curve, g: Curve) -> Rat:
    """Right edge of the window on which equality of f and g is decidable.

    Two hyperperiods past the larger transient: equality there forces equal
    per-hyperperiod increments at every abscissa class, so it extends to all
    t.  One hyperperiod alone does not pin the increments.
    """
    T = f.T if f.T > g.T else g.T
    return T + Rat(2) * rat_lcm(f.d, g.d)


def order_scan(
    f: Curve, g: Curve, tail_lo: Rat, hi: Rat, stop_on_any: bool = False
) -> tuple[bool, bool, bool, bool]:
    """Sign scan of f - g over [0, hi[: (f strictly below somewhere, g strictly
    below somewhere, and the same restricted to [tail_lo, hi[).

    Two-pointer walk over the raw cuts; pieces are affine, so each slot's sign
    pattern is fully visible at its edge limits (slots straddling tail_lo are
    probed at tail_lo as well).  With stop_on_any the walk ends at the first
    strict inequality.
    """
    A = f.cut_elements(ZERO, hi)
    B = g.cut_elements(ZERO, hi)
    na, nb = len(A), len(B)
    ia = ib = 0
    f_lt = g_lt = f_lt_tail = g_lt_tail = False
    x = ZERO
    while ia < na and ib < nb and x < hi:
        ea = A[ia]
        eb = B[ib]
        va = ea.v if type(ea) is Point else ea.value_at(x)
        vb = eb.v if type(eb) is Point else eb.value_at(x)
        tail = x >= tail_lo
        if va < vb:
            f_lt = True
            f_lt_tail = f_lt_tail or tail
        elif vb < va:
            g_lt = True
            g_lt_tail = g_lt_tail or tail
        if stop_on_any and (f_lt or g_lt):
            break
        sa = ea if type(ea) is Segment else (A[ia + 1] if ia + 1 < na else None)
        sb = eb if type(eb) is Segment else (B[ib + 1] if ib + 1 < nb else None)
        if sa is None or sb is None:
            break
        nxt = sa.end if sa.end < sb.end else sb.end
        if nxt > hi:
            nxt = hi
        if x < tail_lo < nxt:
            probes = ((x, False), (tail_lo, False), (tail_lo, True), (nxt, True))
        else:
            tail = x >= tail_lo
            probes = ((x, tail), (nxt, tail))
        for at, tail_flag in probes:
            va, vb = sa.value_at(at), sb.value_at(at)
            if va < vb:
                f_lt = True
                f_lt_tail = f_lt_tail or tail_flag
            elif vb < va:
                g_lt = True
                g_lt_tail = g_lt_tail or tail_flag
        if stop_on_any and (f_lt or g_lt):
            break
        if f_lt and g_lt and f_lt_tail and g_lt_tail:
            break
        x = nxt
        while ia < na:
            e = A[ia]
            if (type(e) is Point and e.t < x) or (type(e) is Segment and e.end <= x):
                ia += 1
            else:
                break
        while ib < nb:
            e = B[ib]
            if (type(e) is Point and e.t < x) or (type(e) is Segment and e.end <= x):
                ib += 1
            else:
                break
    return f_lt, g_lt, f_lt_tail, g_lt_tail


def equivalent(f: Curve, g: Curve) -> bool:
    """True iff f(t) = g(t) for every t >= 0."""
    if f is g:
        return True
    if _infinity_clash(f, g):
        raise CurveError("cannot compare a curve attaining +inf with one attaining -inf")
    hi = comparison_window(f, g)
    f_lt, g_lt, _, _ = order_scan(f, g, hi, hi, stop_on_any=True)
    return not (f_lt or g_lt)


def first_difference(f: Curve, g: Curve):
    """Earliest abscissa where f and g differ, as (t, f-side, g-side), or None.

    For a difference on an open stretch the reported abscissa is its left
    edge and the values are the right limits there.
    """
    if _infinity_clash(f, g):
        raise CurveError("cannot compare a curve attaining +inf with one attaining -inf")
    hi = comparison_window(f, g)
    a = merge_well_formed(f.cut(Interval.closed_open(ZERO, hi)))
    b = merge_well_formed(g.cut(Interval.closed_open(ZERO, hi)))
    ts = sorted({e.start for e in a.elements} | {e.start for e in b.elements})
    for t in ts:
        va, vb = f.value(t), g.value(t)
        if va != vb:
            return t, va, vb
        ra, rb = f.right_limit(t), g.right_limit(t)
        if ra != rb:
            return t, ra, rb
    # breakpoints all agree; any residual difference is interior to a shared piece
    for i in range(len(ts)):
        lo = ts[i]
        up = ts[i + 1] if i + 1 < len(ts) else hi
        if lo >= up:
            continue
        mid = (lo + up) / Rat(2)
        va, vb = f.value(mid), g.value(mid)
        if va != vb:
            return mid, va, vb
    return None


def cut_cardinality(f: Curve, hi: Rat, upper_closed: bool = False) -> int:
    """Number of elements cut(f, [0, hi...]) would contain, without building it."""
    window = f.T + f.d
    if hi <= window:
        n = 0
        for e in f.seq.elements:
            if e.start >= hi:
                break
            n += 1
        return n + (1 if upper_closed else 0)
    periods = ((hi - f.T) / f.d).ceil()
    per = len(f.period_elements())
    n = len(f.seq.elements) + (periods - 1) * per
    overshoot = f.T + periods * f.d - hi
    if overshoot > ZERO:
        cutoff = f.T + f.d - overshoot
        drop = 0
        for e in reversed(f.period_elements()):
            if e.start >= cutoff:
                drop += 1
            else:
                break
        n -= drop
    return n + (1 if upper_closed else 0)
