"""Independent brute-force validators for convolution and closure values.

conv_oracle_eval works from first principles: f(s) + g(t - s) is piecewise
affine in s, so its infimum over [0, t] is attained at, or approached at, an
element boundary of either operand (or an interval endpoint); scanning those
finitely many candidates together with their one-sided limits gives the exact
infimum.  The closure oracle layers doubling self-convolutions on top of the
elementary convolution, stopping once any deeper term provably costs more
than the running value.
"""

from __future__ import annotations

from dataclasses import dataclass

from .curves import Curve, Interval, Point, Segment, Sequence
from .minplus import check_convolution_defined, elementary_convolution, lower_envelope
from .rational import ONE, PLUS_INF, ZERO, Rat, rat


@dataclass(frozen=True)
class OracleConfig:
    sample_count: int = 200
    horizon_periods: int = 3
    sac_doubling_limit: int = 24
    seed: int = 0x5EED


@dataclass(frozen=True)
class SacOracleValue:
    value: Rat
    stabilized: bool
    doublings: int


def _boundaries(f: Curve, t: Rat) -> list[Rat]:
    if t == ZERO:
        return [ZERO]
    return [e.start for e in f.cut(Interval.closed(ZERO, t)).elements]


def conv_oracle_eval(f: Curve, g: Curve, t) -> Rat:
    """inf over 0 <= s <= t of f(s) + g(t - s), by exhaustive candidate scan."""
    t = rat(t)
    if t < ZERO:
        raise ValueError("convolution oracle needs t >= 0")
    check_convolution_defined(f, g)
    cands = set(_boundaries(f, t))
    for b in _boundaries(g, t):
        cands.add(t - b)
    cands.add(ZERO)
    cands.add(t)
    best = PLUS_INF
    for s in cands:
        if s < ZERO or s > t:
            continue
        u = t - s
        vals = [f.value(s) + g.value(u)]
        if s < t:
            vals.append(f.right_limit(s) + g.left_limit(u))
        if s > ZERO:
            vals.append(f.left_limit(s) + g.right_limit(u))
        for v in vals:
            if v < best:
                best = v
    return best


def _clipped_self_conv(w: Sequence, t: Rat, H: Rat) -> Sequence:
    els = w.elements
    out: list = []
    n = len(els)
    for i in range(n):
        a = els[i]
        for j in range(i, n):
            b = els[j]
            if a.start + b.start > t:
                break
            out.extend(elementary_convolution(a, b))
    return lower_envelope(out, ZERO, H)


def sac_oracle_eval(f: Curve, t, cfg: OracleConfig | None = None) -> SacOracleValue:
    """Closure value at t via doubling self-convolutions clipped to [0, t].

    The running value is nonincreasing in the doubling count; once every
    decomposition into more positive parts than are covered must cost more
    than the running value, the value is exact.  Hitting the doubling limit
    is reported, not silently accepted.
    """
    cfg = cfg or OracleConfig()
    t = rat(t)
    if t < ZERO:
        raise ValueError("closure oracle needs t >= 0")
    if t == ZERO:
        return SacOracleValue(ZERO, True, 0)
    H = t + ONE
    base = list(f.cut(Interval.closed_open(ZERO, H)).elements)
    head: Point = base[0]
    if head.v > ZERO:
        base[0] = Point(ZERO, ZERO)  # the 0-fold term pins the origin at 0
    w = lower_envelope(base, ZERO, H)
    minpos = PLUS_INF
    for e in w.elements:
        vals = (e.v,) if isinstance(e, Point) else (e.lv, e.right_limit)
        for v in vals:
            if (not isinstance(e, Point) or e.t != ZERO) and v < minpos:
                minpos = v
    covered = 1
    for k in range(cfg.sac_doubling_limit):
        value = w.value_at(t)
        if minpos > ZERO and value.is_finite and Rat(covered + 1) * minpos > value:
            return SacOracleValue(value, True, k)
        w = _clipped_self_conv(w, t, H)
        covered *= 2
    value = w.value_at(t)
    stab = minpos > ZERO and value.is_finite and Rat(covered + 1) * minpos > value
    return SacOracleValue(value, stab, cfg.sac_doubling_limit)
