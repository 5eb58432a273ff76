"""Command-line workflows: analyze, simulate, estimate, optimize, tradeoff.

Results go to stdout (or ``--output``) as CSV with 9 significant digits, or as a
JSON run report that also records the configuration, seed and wall time.

Exit codes: 0 success, 1 usage error, 2 data or numerical error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
import time
from dataclasses import asdict

import numpy as np

from .analytic import metrics_general, metrics_pareto, metrics_sexp
from .dist import Pareto, ShiftedExponential, is_parametric
from .estimate import EstimateConfig, estimate_metrics
from .optimize import SearchConfig, best_single_fork
from .residual import SingleForkPolicy
from .sim import monte_carlo
from .trace import TIME_UNITS, TraceError, ingest_trace

log = logging.getLogger("singlefork")

DEFAULT_SEED = 20160
EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# -- argument helpers ----------------------------------------------------------

def parse_dist(spec: str, time_unit: str = "s"):
    """``pareto:alpha,xm``, ``sexp:delta,lambda`` or ``trace:path``; returns ``(model, info)``."""
    tag, sep, rest = spec.partition(":")
    if not sep:
        raise UsageError(f"distribution {spec!r} must look like tag:params")
    if tag == "trace":
        try:
            ing = ingest_trace(rest, time_unit)
        except FileNotFoundError:
            raise DataError(f"trace file not found: {rest}") from None
        except TraceError as exc:
            raise DataError(str(exc)) from None
        if ing.rejected:
            log.warning("%s: skipped %d row(s) with finish_ts < schedule_ts", rest, ing.rejected)
        return ing.model, {"tag": "trace", "path": rest, "accepted": ing.accepted, "rejected": ing.rejected}
    families = {"pareto": Pareto, "sexp": ShiftedExponential}
    if tag not in families:
        raise UsageError(f"unknown distribution tag {tag!r}; use pareto, sexp or trace")
    try:
        params = [float(v) for v in rest.split(",")]
    except ValueError:
        raise UsageError(f"bad parameters in {spec!r}") from None
    if len(params) != 2:
        raise UsageError(f"{tag} takes exactly two parameters, got {len(params)}")
    try:
        model = families[tag](*params)
    except ValueError as exc:
        raise UsageError(f"{spec}: {exc}") from None
    return model, {"tag": tag, "params": params}


def parse_grid(text: str) -> list[float]:
    try:
        start, stop, step = (float(v) for v in text.split(":"))
    except ValueError:
        raise UsageError(f"grid {text!r} must be start:stop:step") from None
    if step <= 0 or stop < start:
        raise UsageError(f"grid {text!r} needs step > 0 and stop >= start")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    # rounding keeps 0.05:0.95:0.05 on the printed decimals
    return [round(start + i * step, 12) for i in range(count)]


def parse_seed(text: str):
    if text == "random":
        return int(np.random.SeedSequence().entropy)
    try:
        seed = int(text)
    except ValueError:
        raise UsageError(f"seed must be an integer or 'random', got {text!r}") from None
    if seed < 0:
        raise UsageError("seed must be nonnegative")
    return seed


def make_policy(args) -> SingleForkPolicy:
    try:
        return SingleForkPolicy(args.p, args.r, args.l)
    except ValueError as exc:
        raise UsageError(f"invalid policy: {exc}") from None


def closed_form(base, policy, n):
    if isinstance(base, Pareto):
        return metrics_pareto(base.alpha, base.xm, policy, n)
    if isinstance(base, ShiftedExponential):
        return metrics_sexp(base.delta, base.lam, policy, n)
    return metrics_general(base, policy, n)


# -- commands ------------------------------------------------------------------

def _policy_row(policy) -> dict:
    return {"p": policy.p, "r": policy.r, "l": policy.l}


def cmd_analyze(base, args, seed):
    if not is_parametric(base):
        raise DataError("analyze needs a parametric distribution; use estimate for traces")
    policy = make_policy(args)
    m = closed_form(base, policy, args.n)
    return [{**_policy_row(policy), "latency": m.latency, "cost": m.cost}], {}


def cmd_simulate(base, args, seed):
    policy = make_policy(args)
    res = monte_carlo(base, policy, args.n, args.trials, seed=seed)
    row = {
        **_policy_row(policy),
        "latency": res.metrics.latency,
        "cost": res.metrics.cost,
        "latency_se": res.latency_se,
        "cost_se": res.cost_se,
        "trials": res.trials,
    }
    return [row], {}


def cmd_estimate(base, args, seed):
    policy = make_policy(args)
    est = estimate_metrics(base, policy, EstimateConfig(args.n, args.m, seed))
    row = {**_policy_row(policy), "latency": est.latency, "cost": est.cost,
           "latency_se": est.latency_se, "cost_se": est.cost_se, "m": args.m}
    return [row], {}


def cmd_optimize(base, args, seed):
    cfg = SearchConfig(
        mu=args.mu,
        estimate_cfg=EstimateConfig(args.n, args.m, seed),
        delta_p=args.delta_p,
        k=args.k,
        r_max=args.r_max,
    )
    res = best_single_fork(base, cfg)
    row = {
        **_policy_row(res.policy),
        "latency": res.latency,
        "cost": res.cost,
        "objective": res.objective,
        "baseline_objective": res.baseline_objective,
    }
    extra = {
        "trajectory": [asdict(e) for e in res.trajectory],
        "diagnostics": list(res.diagnostics),
    }
    return [row], extra


def cmd_tradeoff(base, args, seed):
    grid = parse_grid(args.grid)
    method = args.method or ("analytic" if is_parametric(base) else "estimate")
    if method == "analytic" and not is_parametric(base):
        raise DataError("analytic tradeoff needs a parametric distribution")
    rows, failures = [], []
    children = np.random.SeedSequence(seed).spawn(len(grid))
    for p, child in zip(grid, children):
        try:
            policy = SingleForkPolicy(p, args.r, args.l)
        except ValueError as exc:
            raise UsageError(f"invalid policy at p={p}: {exc}") from None
        row = _policy_row(policy)
        try:
            if method == "analytic":
                m = closed_form(base, policy, args.n)
                row.update(latency=m.latency, cost=m.cost)
            else:
                est = estimate_metrics(base, policy, EstimateConfig(args.n, args.m), seed=child)
                row.update(latency=est.latency, cost=est.cost, latency_se=est.latency_se, cost_se=est.cost_se)
        except (ValueError, ArithmeticError) as exc:
            failures.append({"p": p, "error": str(exc)})
            log.warning("p=%g: %s", p, exc)
            row.update(latency=None, cost=None)
            if method != "analytic":
                row.update(latency_se=None, cost_se=None)
        rows.append(row)
    return rows, {"method": method, "failures": failures}


COMMANDS = {
    "analyze": cmd_analyze,
    "simulate": cmd_simulate,
    "estimate": cmd_estimate,
    "optimize": cmd_optimize,
    "tradeoff": cmd_tradeoff,
}


# -- output ----------------------------------------------------------------------

def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.9g}"


def to_csv(rows) -> str:
    buf = io.StringIO()
    fields = list(rows[0]) if rows else []
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(fields)
    for row in rows:
        w.writerow([fmt(row.get(f)) for f in fields])
    return buf.getvalue()


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj) if math.isfinite(obj) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="singlefork", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, policy=True):
        sp.add_argument("--dist", required=True, help="pareto:alpha,xm | sexp:delta,lambda | trace:path")
        sp.add_argument("--n", type=int, default=400, help="tasks per job (default 400)")
        sp.add_argument("--seed", default=str(DEFAULT_SEED), help="integer seed or 'random'")
        sp.add_argument("--out", choices=("csv", "json"), default="csv", help="output format")
        sp.add_argument("--output", help="write here instead of stdout")
        sp.add_argument("--time-unit", choices=sorted(TIME_UNITS), default="s",
                        help="trace timestamp unit: decimal seconds or integer microseconds")
        if policy:
            sp.add_argument("--p", type=float, default=0.0, help="fork fraction")
            sp.add_argument("--r", type=int, default=1, help="extra replicas per straggler")
            sp.add_argument("--l", type=int, default=1, choices=(0, 1), help="1 keeps the original")

    common(sub.add_parser("analyze", help="large-n analytic latency and cost"))
    sp = sub.add_parser("simulate", help="Monte-Carlo simulation of whole jobs")
    common(sp)
    sp.add_argument("--trials", type=int, default=10_000)
    sp = sub.add_parser("estimate", help="sampling estimate from the execution-time law")
    common(sp)
    sp.add_argument("--m", type=int, default=500, help="repetitions")
    sp = sub.add_parser("optimize", help="heuristic search for a good single-fork policy")
    common(sp, policy=False)
    sp.add_argument("--mu", type=float, default=1.0, help="cost weight in J = T + mu*C")
    sp.add_argument("--m", type=int, default=500, help="repetitions per evaluation")
    sp.add_argument("--k", type=int, default=25, help="outer iterations")
    sp.add_argument("--delta-p", type=float, default=0.002, help="probe width and step size for p")
    sp.add_argument("--r-max", type=int, default=10, help="cap on extra replicas")
    sp = sub.add_parser("tradeoff", help="latency and cost along a grid of fork fractions")
    common(sp, policy=False)
    sp.add_argument("--r", type=int, default=1, help="extra replicas per straggler")
    sp.add_argument("--l", type=int, default=1, choices=(0, 1), help="1 keeps the original")
    sp.add_argument("--grid", default="0.05:0.95:0.05", help="start:stop:step")
    sp.add_argument("--method", choices=("analytic", "estimate"))
    sp.add_argument("--m", type=int, default=500, help="repetitions for --method estimate")
    return parser


def run(argv) -> tuple[str, dict, str | None]:
    """Execute one command; returns the rendered output, the report and ``--output``."""
    args = build_parser().parse_args(argv)
    seed = parse_seed(args.seed)
    if args.n < 2:
        raise UsageError("--n must be at least 2")
    for name in ("trials", "m", "k"):
        if getattr(args, name, 1) < 1:
            raise UsageError(f"--{name} must be at least 1")
    base, dist_info = parse_dist(args.dist, args.time_unit)
    t0 = time.perf_counter()
    try:
        rows, extra = COMMANDS[args.command](base, args, seed)
    except (ValueError, ArithmeticError) as exc:
        raise DataError(str(exc)) from None
    wall = time.perf_counter() - t0
    config = {k: v for k, v in vars(args).items() if k not in ("command", "output", "verbose")}
    report = {
        "command": ["singlefork", *argv],
        "config": {**config, "seed": seed},
        "distribution": dist_info,
        "seed": seed,
        "wall_time": wall,
        "rows": rows,
        **extra,
    }
    if args.out == "json":
        return json.dumps(_json_safe(report), indent=2) + "\n", report, args.output
    return to_csv(rows), report, args.output


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    logging.basicConfig(format="singlefork: %(message)s",
                        level=logging.INFO if "-v" in argv or "--verbose" in argv else logging.WARNING)
    try:
        text, _, dest = run(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    if dest:
        with open(dest, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
