"""Text and CSV serialization of curves and cuts.

Curve files are line oriented: a header ``upp T=<rat> d=<rat> c=<rat>``
followed by one line per element, ``P <t> <v>`` or
``S <start> <end> <leftLimit> <slope>``.  Rationals print as ``p`` or
``p/q`` in lowest terms, infinities as ``+inf``/``-inf``; round-trips are
bit-exact.
"""

from __future__ import annotations

import io
from typing import Iterable

from .curves import Curve, CurveError, Element, Point, Segment, Sequence
from .rational import Rat

CUT_CSV_HEADER = "t,kind,value,left_limit,slope"


def curve_to_text(f: Curve) -> str:
    out = [f"upp T={f.T} d={f.d} c={f.c}"]
    for e in f.seq.elements:
        if isinstance(e, Point):
            out.append(f"P {e.t} {e.v}")
        else:
            out.append(f"S {e.start} {e.end} {e.lv} {e.slope}")
    return "\n".join(out) + "\n"


def curve_from_text(text: str) -> Curve:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("upp "):
        raise CurveError("curve text must start with an 'upp' header")
    params = {}
    for tok in lines[0][4:].split():
        key, _, val = tok.partition("=")
        params[key] = Rat.parse(val)
    missing = {"T", "d", "c"} - set(params)
    if missing:
        raise CurveError(f"curve header missing {sorted(missing)}")
    els: list[Element] = []
    for ln in lines[1:]:
        fields = ln.split()
        if fields[0] == "P" and len(fields) == 3:
            els.append(Point(Rat.parse(fields[1]), Rat.parse(fields[2])))
        elif fields[0] == "S" and len(fields) == 5:
            els.append(
                Segment(
                    Rat.parse(fields[1]),
                    Rat.parse(fields[2]),
                    Rat.parse(fields[3]),
                    Rat.parse(fields[4]),
                )
            )
        else:
            raise CurveError(f"bad element line: {ln!r}")
    return Curve(Sequence(els), params["T"], params["d"], params["c"])


def cut_to_csv(seq: Iterable[Element]) -> str:
    """CSV rows for a cut: t,kind,value,left_limit,slope."""
    buf = io.StringIO()
    buf.write(CUT_CSV_HEADER + "\n")
    for e in seq:
        if isinstance(e, Point):
            buf.write(f"{e.t},point,{e.v},,\n")
        else:
            buf.write(f"{e.start},segment,,{e.lv},{e.slope}\n")
    return buf.getvalue()
