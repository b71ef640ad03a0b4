"""Command-line harness: ``streammatch {run,gap,gen,analyze,selftest}``.

Every report is one JSON object per line (``--out json``, the default) so
batch runs can be concatenated and aggregated.  Exit codes:

    0  all requested checks passed
    1  a requested check failed
    2  usage error
    3  unreadable or malformed input
    4  the adjacency oracle misbehaved
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Any, Callable, Sequence

from . import __version__
from .analysis import (
    LevelProfile,
    canonical_decomposition,
    choose_pass_count,
    default_grid,
    guarantee,
    profile_bound_table,
    verify_decomposition,
)
from .exact import brute_force_max_matching, hopcroft_karp, round_on_support
from .gap import GapFormatError, OracleError, gap_decide, parse_gap_instance, write_gap_instance
from .generators import GenerationError, GenSpec, gen_lopsided_interval, gen_planted, generate, rng_for
from .graph import ArrivalStream, BipartiteGraph, StreamFormatError, parse_stream, write_stream
from .waterfill import PassConfig, matching_value, run_multipass

RUN_SCHEMA = "streammatch.run/1"
GAP_SCHEMA = "streammatch.gap/1"
ANALYZE_SCHEMA = "streammatch.analyze/1"
GEN_SCHEMA = "streammatch.gen/1"

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_INPUT, EXIT_ORACLE = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


class InputError(Exception):
    pass


@dataclass
class RunReport:
    schema: str
    source: str
    passes: int
    fractional_value: float
    integral_size: int | None
    opt_size: int | None
    ratio_fractional: float | None
    ratio_integral: float | None
    guarantee: float
    support_edges: int
    total_water: float
    wall_time_per_pass: list[float]
    peak_active_set: int | None = None
    seed: int | None = None
    order: str | None = None
    mode: str | None = None
    extra: dict[str, Any] = field(default_factory=dict)
    checks: dict[str, bool] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(self.checks.values())

    def to_json(self) -> str:
        d = asdict(self)
        extra = d.pop("extra")
        d.update(extra)
        d["ok"] = self.ok
        return json.dumps(d, sort_keys=True)

    def to_text(self) -> str:
        d = json.loads(self.to_json())
        return "\n".join(f"{k}: {v}" for k, v in d.items())


# ---------------------------------------------------------------------------
# argument helpers


def _seed_range(text: str) -> list[int]:
    lo, sep, hi = text.partition("..")
    try:
        a, b = int(lo), int(hi if sep else lo)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a..b, got {text!r}") from None
    if b < a:
        raise argparse.ArgumentTypeError(f"empty seed range {text!r}")
    return list(range(a, b + 1))


def _positive_int(text: str) -> int:
    try:
        k = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if k < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {k}")
    return k


def _epsilon(text: str) -> float:
    try:
        e = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0 < e < 0.5:
        raise argparse.ArgumentTypeError(f"epsilon must lie in (0, 1/2), got {e}")
    return e


def _threads() -> int:
    raw = os.environ.get("STREAMMATCH_THREADS")
    if raw is None or raw == "":
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"STREAMMATCH_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise UsageError(f"STREAMMATCH_THREADS must be a positive integer, got {raw!r}")
    return n


def _expand(path: str, seed: int | None) -> str:
    return path.replace("{seed}", str(seed)) if seed is not None else path


def _read(path: str) -> bytes:
    try:
        if path == "-":
            return sys.stdin.buffer.read()
        with open(path, "rb") as fh:
            return fh.read()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None


def _num(x) -> float:
    return float(x)


# ---------------------------------------------------------------------------
# jobs (module level so they can be shipped to worker processes)


def _run_job(path: str, passes: int, mode: str, order: str, seed: int | None, buffer: int, check: bool) -> RunReport:
    try:
        s = parse_stream(_read(path))
    except StreamFormatError as exc:
        raise InputError(f"{path}: {exc}") from None
    s = s.reordered(order, seed)
    return run_report(s, passes, exact=(mode == "rational"), source=path, seed=seed, order=order,
                      cycle_buffer_edges=buffer, check=check)


def run_report(
    s: ArrivalStream,
    passes: int,
    exact: bool = False,
    source: str = "<memory>",
    seed: int | None = None,
    order: str | None = None,
    cycle_buffer_edges: int = 0,
    check: bool = False,
) -> RunReport:
    """Run ``passes`` passes and measure the allocation against the optimum."""
    cfg = PassConfig(passes=passes, exact=exact, cycle_buffer_edges=cycle_buffer_edges)
    a = run_multipass(s, cfg)
    frac = matching_value(a, passes)
    rounded = round_on_support(a, passes, s.graph)
    opt = len(hopcroft_karp(s.graph))
    extra: dict[str, Any] = {}
    if exact:
        extra["fractional_value_exact"] = str(Fraction(frac))
    f = _num(frac)
    r_frac = f / opt if opt else 1.0
    r_int = len(rounded) / opt if opt else 1.0
    g = guarantee(passes)
    checks = {}
    if check:
        checks["ratio_at_least_guarantee"] = r_frac >= g - 1e-9
        checks["rounding_at_least_fractional"] = len(rounded) >= math.ceil(f - 1e-6)
        checks["fractional_at_most_opt"] = f <= opt + 1e-6
    return RunReport(
        schema=RUN_SCHEMA,
        source=source,
        passes=passes,
        fractional_value=f,
        integral_size=len(rounded),
        opt_size=opt,
        ratio_fractional=r_frac,
        ratio_integral=r_int,
        guarantee=g,
        support_edges=len(a.flow),
        total_water=_num(a.total_water()),
        wall_time_per_pass=list(a.pass_times),
        seed=seed,
        order=order,
        mode="rational" if exact else "float",
        extra=extra,
        checks=checks,
    )


def _gap_job(path: str, eps: float | None, passes: int | None, buffer: int, expect: str | None, seed: int | None) -> RunReport:
    try:
        inst = parse_gap_instance(_read(path))
    except GapFormatError as exc:
        raise InputError(f"{path}: {exc}") from None
    if eps is None:
        eps = inst.epsilon
        if eps is None or not 0 < eps < 0.5:
            raise UsageError("--epsilon is required (the instance header does not carry a usable value)")
    return gap_report(inst, eps, passes, source=path, cycle_buffer_edges=buffer, expect=expect, seed=seed)


def gap_report(inst, eps: float, passes: int | None = None, source: str = "<memory>", cycle_buffer_edges: int = 0,
               expect: str | None = None, seed: int | None = None) -> RunReport:
    t0 = time.perf_counter()
    res = gap_decide(inst, eps, passes, cycle_buffer_edges)
    elapsed = time.perf_counter() - t0
    st = res.state
    checks = {}
    if expect is not None:
        checks["decision_matches_expected"] = res.answer == expect.upper()
    return RunReport(
        schema=GAP_SCHEMA,
        source=source,
        passes=res.k,
        fractional_value=float(sum(min(res.k, x) for x in st.alloc.load.values()) / res.k),
        integral_size=None,
        opt_size=None,
        ratio_fractional=None,
        ratio_integral=None,
        guarantee=guarantee(res.k),
        support_edges=len(st.support_edges()),
        total_water=float(st.alloc.total_water()),
        wall_time_per_pass=list(st.alloc.pass_times),
        peak_active_set=st.peak_active,
        seed=seed,
        extra={
            "decision": res.answer,
            "epsilon": eps,
            "n_advertisers": inst.n_a,
            "n_impressions": inst.n_i,
            "sum_budgets": inst.sum_budgets,
            "reduced_budgets": list(res.reduced_budgets),
            "space_bound": 5 * inst.sum_budgets / eps,
            "wall_time_total": elapsed,
        },
        checks=checks,
    )


def _analyze_job(path: str, passes: int, order: str, seed: int | None, method: str) -> dict[str, Any]:
    try:
        s = parse_stream(_read(path))
    except StreamFormatError as exc:
        raise InputError(f"{path}: {exc}") from None
    s = s.reordered(order, seed)
    return analyze_report(s, passes, method, source=path, seed=seed)


def analyze_report(s: ArrivalStream, passes: int, method: str = "closed", source: str = "<memory>",
                   seed: int | None = None) -> dict[str, Any]:
    a = run_multipass(s, PassConfig(passes=passes))
    g = s.graph
    opt = len(hopcroft_karp(g))
    prof = LevelProfile.from_allocation(a, g.n_q, passes)
    value = float(matching_value(a, passes))
    out: dict[str, Any] = {
        "schema": ANALYZE_SCHEMA,
        "source": source,
        "seed": seed,
        "passes": passes,
        "opt_size": opt,
        "loads": prof.loads.tolist(),
        "fractional_value": value,
        "ratio_fractional": value / opt if opt else 1.0,
        "guarantee": guarantee(passes),
    }
    perfect = opt == g.n_p == g.n_q
    if perfect:
        rows = profile_bound_table(prof, opt, default_grid(prof), method)
        out["bound_checked"] = True
        out["grid"] = [{"x": x, "lhs": lhs, "rhs": rhs, "ok": ok} for x, lhs, rhs, ok in rows]
        out["ok"] = all(r[3] for r in rows)
    else:
        out["bound_checked"] = False
        out["warning"] = "no perfect matching; profile-bound check skipped"
        out["ok"] = True
    return out


def _gen_job(spec: GenSpec, out: str, kind_is_gap: bool) -> dict[str, Any]:
    obj = generate(spec)
    data = write_gap_instance(obj) if kind_is_gap else write_stream(obj)
    if out == "-":
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
    else:
        with open(out, "wb") as fh:
            fh.write(data)
    meta = {k: v for k, v in obj.meta.items() if k != "planted" or kind_is_gap}
    return {"schema": GEN_SCHEMA, "kind": spec.kind, "seed": spec.seed, "path": out, "meta": meta, "ok": True}


# ---------------------------------------------------------------------------
# selftest


def _selftest_checks() -> list[tuple[str, Callable[[], bool]]]:
    def hand_example() -> bool:
        g = BipartiteGraph(2, 2, ((0, 1), (1,)))
        r = run_report(ArrivalStream(g, (0, 1)), 1, exact=True)
        return r.fractional_value == 1.5 and r.opt_size == 2 and r.ratio_fractional == 0.75

    def guarantee_values() -> bool:
        ref = {1: 0.632121, 2: 0.729329, 8: 0.860413}
        return all(abs(guarantee(k) - v) < 1e-6 for k, v in ref.items())

    def oracles_agree() -> bool:
        rng = rng_for(7)
        for _ in range(40):
            n_p, n_q = int(rng.integers(1, 8)), int(rng.integers(1, 8))
            adj = [tuple(int(v) for v in range(n_q) if rng.random() < 0.4) for _ in range(n_p)]
            g = BipartiteGraph(n_p, n_q, tuple(adj))
            if len(hopcroft_karp(g)) != brute_force_max_matching(g):
                return False
        return True

    def planted_guarantee() -> bool:
        for k in (1, 3):
            r = run_report(gen_planted(40, 0.1, 3), k, check=True)
            if not r.ok:
                return False
        return True

    def decomposition() -> bool:
        rng = rng_for(11)
        for _ in range(10):
            n_p, n_q = int(rng.integers(1, 7)), int(rng.integers(1, 7))
            adj = [tuple(int(v) for v in range(n_q) if rng.random() < 0.4) for _ in range(n_p)]
            g = BipartiteGraph(n_p, n_q, tuple(adj))
            if not verify_decomposition(g, canonical_decomposition(g)):
                return False
        return True

    def gap_small() -> bool:
        yes = gen_lopsided_interval(4, 40, 3, seed=1, planted="yes", total_budget=10)
        no = gen_lopsided_interval(4, 40, 3, seed=1, planted="no", total_budget=10)
        return gap_decide(yes, 0.2).answer == "YES" and gap_decide(no, 0.2).answer == "NO"

    def pass_count() -> bool:
        return choose_pass_count(0.2, 120, 60) == 2287

    return [
        ("hand_example", hand_example),
        ("guarantee_values", guarantee_values),
        ("hopcroft_karp_vs_brute_force", oracles_agree),
        ("planted_guarantee", planted_guarantee),
        ("canonical_decomposition", decomposition),
        ("pass_count", pass_count),
        ("gap_small", gap_small),
    ]


# ---------------------------------------------------------------------------
# dispatch


def _map(fn: Callable, jobs: Sequence[tuple]) -> list:
    """Run ``fn(*job)`` for each job, in parallel when more than one worker is allowed."""
    workers = min(_threads(), len(jobs))
    if workers <= 1:
        return [fn(*job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, *job) for job in jobs]
        return [f.result() for f in futures]


def _emit(reports: Sequence, fmt: str) -> None:
    for r in reports:
        if isinstance(r, RunReport):
            if fmt == "json":
                print(r.to_json())
            else:
                if "decision" in r.extra:
                    print(r.extra["decision"])
                print(r.to_text())
        else:
            if fmt == "json":
                print(json.dumps(r, sort_keys=True))
            else:
                for k, v in r.items():
                    if k == "grid":
                        for row in v:
                            mark = "ok" if row["ok"] else "FAIL"
                            print(f"  x={row['x']:.4f} lhs={row['lhs']:.6f} rhs={row['rhs']:.6f} {mark}")
                    elif k != "loads":
                        print(f"{k}: {v}")


def _all_ok(reports: Sequence) -> bool:
    return all(r.ok if isinstance(r, RunReport) else r.get("ok", True) for r in reports)


def _seeds_for(args) -> list[int | None]:
    if args.seeds is not None:
        return list(args.seeds)
    return [args.seed]


def cmd_run(args) -> int:
    jobs = [
        (_expand(args.stream, s), args.passes, args.mode, args.order, s, args.cycle_buffer, args.check)
        for s in _seeds_for(args)
    ]
    reports = _map(_run_job, jobs)
    _emit(reports, args.out)
    return EXIT_OK if _all_ok(reports) else EXIT_CHECK


def cmd_gap(args) -> int:
    jobs = [
        (_expand(args.instance, s), args.epsilon, args.passes, args.cycle_buffer, args.expect, s)
        for s in _seeds_for(args)
    ]
    reports = _map(_gap_job, jobs)
    _emit(reports, args.out)
    return EXIT_OK if _all_ok(reports) else EXIT_CHECK


def cmd_analyze(args) -> int:
    jobs = [(_expand(args.stream, s), args.passes, args.order, s, args.method) for s in _seeds_for(args)]
    reports = _map(_analyze_job, jobs)
    for r in reports:
        if not r["bound_checked"]:
            print(f"warning: {r['source']}: {r['warning']}", file=sys.stderr)
    _emit(reports, args.out)
    return EXIT_OK if _all_ok(reports) else EXIT_CHECK


_GEN_PARAMS = {
    "planted": ("n", "extra_prob"),
    "upper_triangular": ("n",),
    "layered_adversarial": ("k", "width"),
    "lopsided_interval": ("n_a", "n_i", "max_budget", "total_budget", "planted", "eps"),
}


def cmd_gen(args) -> int:
    seeds = _seeds_for(args)
    if len(seeds) > 1 and "{seed}" not in args.output:
        raise UsageError("--seeds needs an output path containing '{seed}'")
    params = {}
    for name in _GEN_PARAMS[args.kind]:
        val = getattr(args, name)
        if val is not None:
            params[name] = val
    required = {"planted": ("n",), "upper_triangular": ("n",), "layered_adversarial": ("k", "width"),
                "lopsided_interval": ("n_a", "n_i", "max_budget")}[args.kind]
    missing = [f"--{r.replace('_', '-')}" for r in required if r not in params]
    if missing:
        raise UsageError(f"{args.kind} needs {' '.join(missing)}")
    is_gap = args.kind == "lopsided_interval"
    jobs = [
        (GenSpec(args.kind, params, 0 if s is None else s, args.order), _expand(args.output, s), is_gap)
        for s in seeds
    ]
    reports = _map(_gen_job, jobs)
    if args.output != "-":
        for r in reports:
            print(json.dumps(r, sort_keys=True))
    return EXIT_OK


def cmd_selftest(args) -> int:
    ok = True
    for name, fn in _selftest_checks():
        t0 = time.perf_counter()
        try:
            passed = bool(fn())
        except Exception as exc:  # report, do not crash the harness
            passed = False
            name = f"{name} ({type(exc).__name__}: {exc})"
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'} {name} [{time.perf_counter() - t0:.2f}s]")
    return EXIT_OK if ok else EXIT_CHECK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="streammatch", description="Multipass water-filling matching experiments.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, stream_like: bool = True) -> None:
        sp.add_argument("--out", choices=("json", "text"), default="json", help="report format (default json)")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--seeds", type=_seed_range, default=None, metavar="A..B",
                        help="batch over seeds A..B; '{seed}' in paths is substituted")
        if stream_like:
            sp.add_argument("--order", choices=("given", "reverse", "random"), default="given")

    r = sub.add_parser("run", help="run k-pass water-filling on a stream file")
    r.add_argument("stream")
    r.add_argument("--passes", type=_positive_int, default=1)
    r.add_argument("--mode", choices=("float", "rational"), default="float")
    r.add_argument("--cycle-buffer", type=int, default=0, help="defer cycle removal until this many new edges")
    r.add_argument("--check", action="store_true", help="fail unless ratio >= guarantee(k) and rounding holds")
    common(r)
    r.set_defaults(func=cmd_run)

    g = sub.add_parser("gap", help="decide Gap-Existence on an instance file")
    g.add_argument("instance")
    g.add_argument("--epsilon", type=_epsilon, default=None, help="gap parameter in (0, 1/2)")
    g.add_argument("--passes", type=_positive_int, default=None, help="override the chosen pass count")
    g.add_argument("--cycle-buffer", type=int, default=0)
    g.add_argument("--expect", choices=("yes", "no", "YES", "NO"), default=None)
    common(g, stream_like=False)
    g.set_defaults(func=cmd_gap)

    gn = sub.add_parser("gen", help="generate a stream or gap instance file")
    gn.add_argument("kind", choices=sorted(_GEN_PARAMS))
    gn.add_argument("-o", "--output", default="-")
    gn.add_argument("--n", type=_positive_int)
    gn.add_argument("--extra-prob", dest="extra_prob", type=float)
    gn.add_argument("--k", type=_positive_int)
    gn.add_argument("--width", type=int)
    gn.add_argument("--n-a", dest="n_a", type=_positive_int)
    gn.add_argument("--n-i", dest="n_i", type=_positive_int)
    gn.add_argument("--max-budget", dest="max_budget", type=_positive_int)
    gn.add_argument("--total-budget", dest="total_budget", type=_positive_int)
    gn.add_argument("--planted", choices=("yes", "no"))
    gn.add_argument("--eps", type=_epsilon)
    common(gn)
    gn.set_defaults(func=cmd_gen)

    a = sub.add_parser("analyze", help="level profile and profile-bound check")
    a.add_argument("stream")
    a.add_argument("--passes", type=_positive_int, default=1)
    a.add_argument("--method", choices=("closed", "quad"), default="closed")
    common(a)
    a.set_defaults(func=cmd_analyze)

    st = sub.add_parser("selftest", help="quick end-to-end sanity checks")
    st.set_defaults(func=cmd_selftest)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"streammatch: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InputError, GenerationError) as exc:
        print(f"streammatch: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OracleError as exc:
        print(f"streammatch: oracle error: {exc}", file=sys.stderr)
        return EXIT_ORACLE
