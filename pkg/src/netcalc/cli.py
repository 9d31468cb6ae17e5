"""Command-line front end: tandem file parsing, exact/approximate analysis,
method comparison, randomized convolution benchmarks, and curve export.

Exit codes: 0 success, 1 verification failure, 2 parse error, 3 step budget
exceeded, 4 closure divergence.  Every flag can also be set through an
environment variable named NETCALC_<FLAG> (dashes become underscores).
"""

from __future__ import annotations

import argparse
import os
import random
import sys
import time
from dataclasses import dataclass
from typing import Optional

from .curves import (
    Curve,
    CurveError,
    Interval,
    cut_cardinality,
    equivalent,
    first_difference,
)
from .flowcontrol import (
    ArrivalSpec,
    NodeSpec,
    PipelineOptions,
    StepRecord,
    TandemSpec,
    approx_equivalent,
    backlog_bound,
    delay_bound,
    exact_chain,
    exact_equivalent,
    per_node_approx,
)
from .minimize import minimize
from .minplus import convolution, counters, minimum, set_parallel, tail_crossing_bound
from .oracles import conv_oracle_eval
from .rational import PLUS_INF, ZERO, Rat, rat_lcm
from .subadd import (
    ClosureError,
    DominanceKind,
    check_dominance,
    conv_optimized,
    last_trace,
    sac_rate_latency_jump,
)
from .textio import CUT_CSV_HEADER, curve_to_text, cut_to_csv

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_PARSE = 2
EXIT_BUDGET = 3
EXIT_DIVERGENCE = 4

BENCH_CSV_HEADER = (
    "trial,variant,class,branch,n_f,n_g,n_result_raw,n_result_min,"
    "elem_convs,equivalent,elapsed_ns"
)


class ParseError(ValueError):
    pass


class BudgetExceeded(RuntimeError):
    pass


@dataclass
class NetworkFile:
    tandem: TandemSpec
    arrival: Optional[ArrivalSpec]


def parse_network(path: str) -> NetworkFile:
    """Line-oriented tandem description.

    node <rate> <latency>     one per node, in tandem order
    window <size|inf>         k-th window line guards node k+1
    arrival <sigma> <rho>     optional, at most once
    '#' starts a comment; windows missing at the end default to +inf.
    """
    nodes: list[NodeSpec] = []
    windows: list[Rat] = []
    arrival: Optional[ArrivalSpec] = None
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    for ln_no, raw_line in enumerate(lines, start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        kind = fields[0]
        try:
            if kind == "node":
                if len(fields) != 3:
                    raise ParseError("expected: node <rate> <latency>")
                nodes.append(NodeSpec(Rat.parse(fields[1]), Rat.parse(fields[2])))
            elif kind == "window":
                if len(fields) != 2:
                    raise ParseError("expected: window <size|inf>")
                if not nodes:
                    raise ParseError("window before any node")
                if len(windows) >= len(nodes):
                    raise ParseError("more windows than node gaps at this point")
                windows.append(Rat.parse(fields[1]))
            elif kind == "arrival":
                if len(fields) != 3:
                    raise ParseError("expected: arrival <sigma> <rho>")
                if arrival is not None:
                    raise ParseError("duplicate arrival line")
                arrival = ArrivalSpec(Rat.parse(fields[1]), Rat.parse(fields[2]))
            else:
                raise ParseError(f"unknown directive {kind!r}")
        except (ParseError, CurveError, ValueError) as exc:
            raise ParseError(f"{path}:{ln_no}: {exc}") from exc
    if not nodes:
        raise ParseError(f"{path}: no nodes defined")
    if len(windows) > len(nodes) - 1:
        raise ParseError(f"{path}: {len(windows)} windows for {len(nodes)} nodes")
    while len(windows) < len(nodes) - 1:
        windows.append(PLUS_INF)
    try:
        tandem = TandemSpec(nodes=tuple(nodes), windows=tuple(windows))
    except CurveError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    return NetworkFile(tandem=tandem, arrival=arrival)


def _env_default(name: str, fallback):
    return os.environ.get(f"NETCALC_{name.upper().replace('-', '_')}", fallback)


def _pipeline_options(args, sink: list[StepRecord]) -> PipelineOptions:
    budget_ns = int(float(args.step_budget) * 1e9)

    def hook(rec: StepRecord) -> None:
        sink.append(rec)
        if args.verbose:
            print(_fmt_step(rec))
        if budget_ns and rec.elapsed_ns > budget_ns:
            raise BudgetExceeded(
                f"step {rec.stage}/{rec.operation} took {rec.elapsed_ns / 1e9:.1f}s "
                f"(budget {args.step_budget}s)"
            )

    return PipelineOptions(
        minimize=not args.no_minimize,
        dominance=not args.no_dominance,
        asymptotic=not args.no_asymptotic,
        selfconv=not args.no_selfconv,
        progress=hook,
    )


def _fmt_step(rec: StepRecord) -> str:
    ins = ",".join(str(n) for n in rec.operand_cardinalities)
    return (
        f"step stage={rec.stage} op={rec.operation!r} n_in={ins} "
        f"n_raw={rec.result_cardinality_raw} n_min={rec.result_cardinality_min} "
        f"elapsed_ms={rec.elapsed_ns / 1e6:.2f}"
    )


def _print_curve_summary(label: str, curve: Curve) -> None:
    print(f"{label}: T={curve.T} d={curve.d} c={curve.c} N={curve.cardinality}")


def cmd_analyze(args) -> int:
    net = parse_network(args.network)
    sink: list[StepRecord] = []
    opts = _pipeline_options(args, sink)
    method = approx_equivalent if args.method == "approx" else exact_equivalent
    t0 = time.perf_counter()
    curve = method(net.tandem, opts)
    elapsed = time.perf_counter() - t0
    print(f"method={args.method} nodes={net.tandem.size} steps={len(sink)} "
          f"elapsed_s={elapsed:.3f}")
    _print_curve_summary("equivalent service curve", curve)
    if net.arrival is not None:
        print(f"delay_bound={delay_bound(net.arrival, curve)}")
        print(f"backlog_bound={backlog_bound(net.arrival, curve)}")
    if args.export:
        with open(args.export, "w", encoding="utf-8") as fh:
            fh.write(curve_to_text(curve))
        print(f"curve written to {args.export}")
    return EXIT_OK


def cmd_compare(args) -> int:
    net = parse_network(args.network)
    sink: list[StepRecord] = []
    opts = _pipeline_options(args, sink)
    chain = exact_chain(net.tandem, opts)
    all_equal = True
    for i in range(1, net.tandem.size):
        approx_i = per_node_approx(net.tandem, i, opts)
        same = equivalent(chain[i - 1], approx_i)
        all_equal = all_equal and same
        verdict = "equal" if same else "different"
        line = f"node {i}: {verdict}"
        if not same:
            diff = first_difference(chain[i - 1], approx_i)
            if diff is not None:
                line += f" (first divergence at t={diff[0]}: exact={diff[1]} approx={diff[2]})"
        print(line)
    ee = exact_equivalent(net.tandem, opts)
    ae = approx_equivalent(net.tandem, opts)
    same = equivalent(ee, ae)
    line = f"end-to-end: {'equal' if same else 'different'}"
    if not same:
        diff = first_difference(ee, ae)
        if diff is not None:
            line += f" (first divergence at t={diff[0]}: exact={diff[1]} approx={diff[2]})"
    print(line)
    _print_curve_summary("exact", ee)
    _print_curve_summary("approx", ae)
    if net.arrival is not None:
        print(f"delay_bound exact={delay_bound(net.arrival, ee)} "
              f"approx={delay_bound(net.arrival, ae)}")
    return EXIT_OK


# -- benchmark -------------------------------------------------------------------


def _random_factor(rng: random.Random) -> Curve:
    r = rng.randint(1, 1000)
    theta = rng.randint(1, 1000)
    h = rng.randint(1, 1000)
    return sac_rate_latency_jump(r, theta, h)


def _random_equal_slope_pair(rng: random.Random) -> tuple[Curve, Curve]:
    """Two staircases with the same long-run slope (integer parameters).

    Independent draws essentially never share a slope, and the interesting
    incomparable pairs (curves crossing infinitely often) require it.
    """
    while True:
        u = rng.randint(1, 9)
        v = rng.randint(1, 9)
        lim = 1000 // max(u, v)
        m1 = rng.randint(1, lim)
        m2 = rng.randint(1, lim)
        th1, h1 = v * m1, u * m1
        th2, h2 = v * m2, u * m2
        r1 = rng.randint(1, 1000)
        r2 = rng.randint(1, 1000)
        if h1 < r1 * th1 and h2 < r2 * th2 and (th1, h1, r1) != (th2, h2, r2):
            return (
                sac_rate_latency_jump(r1, th1, h1),
                sac_rate_latency_jump(r2, th2, h2),
            )


def _predicted_pair_cost(f: Curve, g: Curve) -> int:
    """Upper estimate of the elementary convolutions a plain convolution
    needs, from arithmetic on the cut windows (nothing materialized)."""
    lcm = rat_lcm(f.d, g.d)
    nf = cut_cardinality(f, f.T + lcm + lcm, upper_closed=True)
    ng = cut_cardinality(g, g.T + lcm + lcm, upper_closed=True)
    return nf * ng


def _predicted_min_cost(f: Curve, g: Curve) -> int:
    if f.rho == g.rho:
        T = f.T if f.T > g.T else g.T
        d = rat_lcm(f.d, g.d)
    else:
        lo, hi = (f, g) if f.rho < g.rho else (g, f)
        try:
            tbar = tail_crossing_bound(lo, hi)
        except ArithmeticError:
            return 1 << 40
        T = max(lo.T, hi.T, tbar)
        d = lo.d
    return cut_cardinality(f, T + d) + cut_cardinality(g, T + d)


def generate_bench_pairs(
    seed: int,
    count: int,
    cost_cap: int = 60_000,
    quotas: Optional[dict[str, int]] = None,
) -> list[tuple[str, Curve, Curve]]:
    """Seeded random sub-additive staircase pairs, labeled by dominance class.

    Every third draw shares the long-run slope so the incomparable class is
    populated.  Pairs whose baseline would exceed the element budget are
    redrawn (unoptimized runs have to stay tractable to be measured at all),
    as are pairs of classes whose quota is already met when quotas are given.
    """
    rng = random.Random(seed)
    out: list[tuple[str, Curve, Curve]] = []
    taken: dict[str, int] = {"dominance": 0, "asymptotic": 0, "incomparable": 0}
    produced = 0
    while len(out) < count:
        if produced % 3 == 2:
            f, g = _random_equal_slope_pair(rng)
        else:
            f = _random_factor(rng)
            g = _random_factor(rng)
        produced += 1
        if _predicted_pair_cost(f, g) > cost_cap:
            continue
        if _predicted_min_cost(f, g) > cost_cap:
            continue
        rel = check_dominance(f, g)
        if rel.kind in (DominanceKind.FIRST_DOMINATES, DominanceKind.SECOND_DOMINATES):
            klass = "dominance"
        elif rel.kind == DominanceKind.INCOMPARABLE:
            klass = "incomparable"
        else:
            klass = "asymptotic"
        if quotas is not None and taken[klass] >= quotas.get(klass, count):
            continue
        taken[klass] += 1
        out.append((klass, f, g))
    return out


def run_bench(seed: int, count: int) -> list[dict]:
    rows: list[dict] = []
    for trial, (klass, f, g) in enumerate(generate_bench_pairs(seed, count)):
        before = counters.elementary_convolutions
        t0 = time.perf_counter_ns()
        base = convolution(f, g, minimize_partials=True)
        base_min = minimize(base)
        base_ns = time.perf_counter_ns() - t0
        base_convs = counters.elementary_convolutions - before
        rows.append(
            dict(
                trial=trial,
                variant="baseline",
                klass=klass,
                branch="plain",
                n_f=f.cardinality,
                n_g=g.cardinality,
                n_result_raw=base.cardinality,
                n_result_min=base_min.cardinality,
                elem_convs=base_convs,
                equivalent=True,
                elapsed_ns=base_ns,
            )
        )
        t0 = time.perf_counter_ns()
        opt = conv_optimized(f, g)
        opt_ns = time.perf_counter_ns() - t0
        tr = last_trace()
        rows.append(
            dict(
                trial=trial,
                variant="optimized",
                klass=klass,
                branch=tr.branch,
                n_f=f.cardinality,
                n_g=g.cardinality,
                n_result_raw=tr.n_result_raw,
                n_result_min=tr.n_result_min,
                elem_convs=tr.elementary_convolutions,
                equivalent=equivalent(opt, base_min),
                elapsed_ns=opt_ns,
            )
        )
    return rows


def cmd_bench(args) -> int:
    rows = run_bench(int(args.seed), int(args.count))
    lines = [BENCH_CSV_HEADER]
    for r in rows:
        lines.append(
            f"{r['trial']},{r['variant']},{r['klass']},{r['branch']},"
            f"{r['n_f']},{r['n_g']},{r['n_result_raw']},{r['n_result_min']},"
            f"{r['elem_convs']},{str(r['equivalent']).lower()},{r['elapsed_ns']}"
        )
    text = "\n".join(lines) + "\n"
    with open(args.output, "w", encoding="utf-8") as fh:
        fh.write(text)
    bad = sum(1 for r in rows if not r["equivalent"])
    print(f"{len(rows)} rows written to {args.output}; mismatches: {bad}")
    return EXIT_OK if bad == 0 else EXIT_VERIFY


# -- export ---------------------------------------------------------------------


def _select_curve(net: NetworkFile, which: str, opts: PipelineOptions) -> Curve:
    if which == "exact":
        return exact_equivalent(net.tandem, opts)
    if which == "approx":
        return approx_equivalent(net.tandem, opts)
    if which == "arrival":
        if net.arrival is None:
            raise ParseError("network file has no arrival line")
        from .curves import make_token_bucket

        return make_token_bucket(net.arrival.sigma, net.arrival.rho)
    if which.startswith("node"):
        name, _, kind = which.partition(".")
        try:
            idx = int(name[4:])
        except ValueError:
            raise ParseError(f"unknown curve id {which!r}") from None
        if kind == "exact":
            return exact_chain(net.tandem, opts)[idx - 1]
        if kind == "approx":
            return per_node_approx(net.tandem, idx, opts)
    raise ParseError(f"unknown curve id {which!r}")


def cmd_export(args) -> int:
    net = parse_network(args.network)
    horizon = Rat.parse(args.horizon)
    if not horizon > ZERO:
        raise ParseError("horizon must be > 0")
    sink: list[StepRecord] = []
    opts = _pipeline_options(args, sink)
    curve = _select_curve(net, args.which, opts)
    cut = curve.cut(Interval.closed_open(ZERO, horizon))
    with open(args.output, "w", encoding="utf-8") as fh:
        fh.write(cut_to_csv(cut))
    print(f"{cut.cardinality} elements over [0, {horizon}[ written to {args.output}")
    return EXIT_OK


# -- verify ----------------------------------------------------------------------


def cmd_verify(args) -> int:
    net = parse_network(args.network)
    sink: list[StepRecord] = []
    opts = _pipeline_options(args, sink)
    rng = random.Random(int(args.seed))
    ee = exact_equivalent(net.tandem, opts)
    ae = approx_equivalent(net.tandem, opts)
    failures = 0
    horizon = (ee.T if ee.T > ae.T else ae.T) + Rat(3) * rat_lcm(ee.d, ae.d)
    for _ in range(int(args.samples)):
        t = Rat(rng.randint(0, horizon.num * 4), rng.randint(1, 4) * max(horizon.den, 1))
        if ee.value(t) < ae.value(t):
            failures += 1
            print(f"FAIL exact < approx at t={t}: {ee.value(t)} < {ae.value(t)}")
    # oracle-check the approximate method's final convolution
    chain_rate = min((n.rate for n in net.tandem.nodes))
    chain_latency = sum((n.latency for n in net.tandem.nodes), ZERO)
    from .curves import make_rate_latency

    chain = make_rate_latency(chain_rate, chain_latency)
    factors = None
    for j in range(net.tandem.size - 1):
        a, b = net.tandem.nodes[j], net.tandem.nodes[j + 1]
        fac = sac_rate_latency_jump(
            a.rate if a.rate < b.rate else b.rate,
            a.latency + b.latency,
            net.tandem.windows[j],
        )
        factors = fac if factors is None else minimize(conv_optimized(factors, fac))
    if factors is not None:
        for _ in range(int(args.samples)):
            t = Rat(rng.randint(0, 200), rng.randint(1, 8))
            want = conv_oracle_eval(chain, factors, t)
            got = ae.value(t)
            if want != got:
                failures += 1
                print(f"FAIL oracle at t={t}: expected {want}, curve gives {got}")
    verdict = "OK" if failures == 0 else f"{failures} failures"
    print(f"verify: {verdict} (exact {ee}, approx {ae}, "
          f"end_to_end_equal={equivalent(ee, ae)})")
    return EXIT_OK if failures == 0 else EXIT_VERIFY


# -- argument plumbing -------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--no-minimize", action="store_true",
                   default=bool(_env_default("no_minimize", "")),
                   help="disable representation minimization between steps")
    p.add_argument("--no-dominance", action="store_true",
                   default=bool(_env_default("no_dominance", "")),
                   help="disable the full-dominance convolution shortcut")
    p.add_argument("--no-asymptotic", action="store_true",
                   default=bool(_env_default("no_asymptotic", "")),
                   help="disable the asymptotic-dominance convolution shortcut")
    p.add_argument("--no-selfconv", action="store_true",
                   default=bool(_env_default("no_selfconv", "")),
                   help="disable the self-convolution-of-the-minimum path")
    p.add_argument("--step-budget", default=_env_default("step_budget", "300"),
                   help="per-step time budget in seconds (0 disables)")
    p.add_argument("--parallel", action="store_true",
                   default=bool(_env_default("parallel", "")),
                   help="evaluate elementary convolutions on a thread pool")
    p.add_argument("--verbose", action="store_true",
                   default=bool(_env_default("verbose", "")),
                   help="print per-step progress records")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="netcalc",
        description="Worst-case analysis of flow-controlled tandems with exact "
        "min-plus calculus on ultimately pseudo-periodic curves.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="compute an end-to-end service curve")
    p.add_argument("network")
    p.add_argument("--method", choices=("exact", "approx"),
                   default=_env_default("method", "exact"))
    p.add_argument("--export", help="write the resulting curve to this file")
    _add_common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("compare", help="run both methods and report equivalence")
    p.add_argument("network")
    _add_common(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("bench", help="randomized optimized-vs-baseline benchmark")
    p.add_argument("--seed", default=_env_default("seed", "42"))
    p.add_argument("--count", default=_env_default("count", "20"))
    p.add_argument("--output", default=_env_default("output", "bench.csv"))
    _add_common(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("export", help="cut a computed curve to CSV")
    p.add_argument("network")
    p.add_argument("--which", default="exact",
                   help="exact | approx | arrival | node<i>.exact | node<i>.approx")
    p.add_argument("--horizon", required=True, help="cut upper bound (rational)")
    p.add_argument("--output", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("verify", help="cross-check pipeline results against oracles")
    p.add_argument("network")
    p.add_argument("--seed", default=_env_default("seed", "42"))
    p.add_argument("--samples", default=_env_default("samples", "50"))
    _add_common(p)
    p.set_defaults(func=cmd_verify)

    return ap


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.parallel:
        set_parallel(os.cpu_count() or 1)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except ClosureError as exc:
        print(f"closure divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    finally:
        set_parallel(0)


if __name__ == "__main__":
    sys.exit(main())
