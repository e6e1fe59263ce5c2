"""Command-line harness: instance generation, pipelines, audits, reports.

Subcommands: gen, run, certify, oracle, report. `certify` and `oracle` are
shortcuts for `run certify` / `run oracle`. Exit codes: 0 success, 2 when a
guarantee assertion or report re-validation fails (CI contract), 1 on errors.

Reports are JSON with sorted keys and deterministic float repr, so a fixed
--seed reproduces byte-identical files. Wall-clock timings never enter
reports. SEQSUB_THREADS caps worker threads for rounding-trial loops.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import sys

import numpy as np

from . import __version__, core, coverage, engagement, generators, oracle, policy, revenue
from .errors import SeqsubError

_ORACLE_COMPARE_N = 7  # brute force is cheap up to here; beyond, omit ratios


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems are errors, not guarantee failures
        self.exit(1, f"{self.prog}: error: {message}\n")


def _jsonable(obj):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return _jsonable(dataclasses.asdict(obj))
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        if math.isinf(f):
            return "inf"
        return f
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, frozenset):
        return sorted(obj)
    return obj


def _flatten(obj, prefix=""):
    if isinstance(obj, dict):
        for k in sorted(obj):
            yield from _flatten(obj[k], f"{prefix}{k}." if prefix else f"{k}.")
    elif isinstance(obj, list):
        if all(not isinstance(v, (dict, list)) for v in obj):
            yield prefix.rstrip("."), ";".join(str(v) for v in obj)
        else:
            for i, v in enumerate(obj):
                yield from _flatten(v, f"{prefix}{i}.")
    else:
        yield prefix.rstrip("."), obj


def _render(report: dict, fmt: str) -> str:
    data = _jsonable(report)
    if fmt == "json":
        return json.dumps(data, indent=2, sort_keys=True) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["key", "value"])
        for k, v in _flatten(data):
            writer.writerow([k, v])
        return buf.getvalue()
    lines = []
    rows = [(k, v) for k, v in _flatten(data)]
    width = max(len(k) for k, _ in rows)
    for k, v in rows:
        lines.append(f"{k:<{width}}  {v}")
    return "\n".join(lines) + "\n"


def _emit(report: dict, args, summary: str) -> None:
    print(summary)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(_render(report, args.format))
    elif args.format != "pretty-table":
        sys.stdout.write(_render(report, args.format))


def _order_out(order) -> list[int]:
    return core.order_to_external(order)


def _maybe_opt(inst: core.Instance) -> dict:
    """Oracle comparison fields, included only at sizes where it is cheap."""
    if inst.n > _ORACLE_COMPARE_N:
        return {}
    opt = oracle.brute_force_engagement_opt(inst)
    return {"opt_engagement": opt.best_value, "opt_permutation": _order_out(opt.best_witness)}


def _cmd_gen(args) -> int:
    if args.kind == "coverage":
        ci = generators.random_coverage_instance(args.n, args.seed)
        coverage.save_coverage(ci, args.out)
        print(f"wrote coverage instance n={args.n} to {args.out}")
        return 0
    inst = generators.random_instance(
        args.kind, args.n, args.seed, full_mass=True, with_payments=True
    )
    core.save_instance(inst, args.out)
    print(f"wrote {args.kind} instance n={args.n} to {args.out}")
    return 0


def _run_greedy(args) -> tuple[dict, str, int]:
    inst = core.load_instance(args.instance)
    order = engagement.greedy_rank(inst)
    f_val = core.engagement(inst, order)
    g_val = core.revenue(inst, order)
    report = {
        "algo": "greedy",
        "instance": args.instance,
        "n": inst.n,
        "permutation": _order_out(order),
        "engagement": f_val,
        "revenue": g_val,
    }
    report.update(_maybe_opt(inst))
    if "opt_engagement" in report and report["opt_engagement"] > 0:
        report["engagement_ratio"] = f_val / report["opt_engagement"]
    summary = f"greedy: permutation {report['permutation']} engagement {f_val:.6f}"
    if "engagement_ratio" in report:
        summary += f" (ratio {report['engagement_ratio']:.4f} of optimum)"
    return report, summary, 0


def _run_cg(args) -> tuple[dict, str, int]:
    inst = core.load_instance(args.instance)
    res = engagement.rank_cg(inst, steps=args.steps, samples=args.samples, seed=args.seed)
    report = {
        "algo": "cg",
        "instance": args.instance,
        "n": inst.n,
        "seed": args.seed,
        "steps": args.steps,
        "samples": args.samples,
        "permutation": _order_out(res.order),
        "engagement": res.engagement,
        "revenue": core.revenue(inst, res.order),
        "lifted_value": res.lifted_value,
        "fractional_estimate": res.fractional_estimate,
        "fractional_stderr": res.fractional_stderr,
        "rounded_size": res.rounded_size,
    }
    report.update(_maybe_opt(inst))
    if "opt_engagement" in report and report["opt_engagement"] > 0:
        report["engagement_ratio"] = res.engagement / report["opt_engagement"]
    summary = (
        f"cg: permutation {report['permutation']} engagement {res.engagement:.6f}"
        f" (rounded lifted value {res.lifted_value:.6f})"
    )
    return report, summary, 0


def _run_oracle(args) -> tuple[dict, str, int]:
    inst = core.load_instance(args.instance)
    eng = oracle.brute_force_engagement_opt(inst)
    report = {
        "algo": "oracle",
        "instance": args.instance,
        "n": inst.n,
        "engagement_opt": {
            "value": eng.best_value,
            "permutation": _order_out(eng.best_witness),
            "enumerated": eng.enumerated_count,
        },
    }
    try:
        rev = oracle.brute_force_revenue_opt(inst)
        report["revenue_opt"] = {
            "value": rev.best_value,
            "permutation": _order_out(rev.best_witness),
            "enumerated": rev.enumerated_count,
        }
        summary = (
            f"oracle: engagement OPT {eng.best_value:.6f}, "
            f"revenue OPT {rev.best_value:.6f} at {report['revenue_opt']['permutation']}"
        )
    except SeqsubError as exc:
        report["revenue_opt"] = {"infeasible": str(exc)}
        summary = f"oracle: engagement OPT {eng.best_value:.6f}; revenue floor infeasible"
    return report, summary, 0


def _run_revenue(args) -> tuple[dict, str, int]:
    inst = core.load_instance(args.instance)
    rep = revenue.run_bicriteria(
        inst,
        seeds=args.trials,
        factor=args.factor,
        threshold=args.threshold,
        root_seed=args.seed,
    )
    report = {
        "algo": "revenue",
        "instance": args.instance,
        "n": inst.n,
        "seed": args.seed,
        "trials": args.trials,
        "factor": rep.factor,
        "threshold": rep.threshold,
        "lp_value": rep.lp_value,
        "scaled_value": rep.scaled_value,
        "mean_engagement": rep.mean_engagement,
        "stderr_engagement": rep.stderr_engagement,
        "mean_revenue": rep.mean_revenue,
        "stderr_revenue": rep.stderr_revenue,
        "alpha_ratio": rep.alpha_ratio,
        "beta_ratio": rep.beta_ratio,
        "worst_alpha": rep.worst_alpha,
        "worst_beta": rep.worst_beta,
        "revenue_ok": rep.revenue_ok,
        "engagement_ok": rep.engagement_ok,
        "best": {
            "permutation": _order_out(rep.best.order),
            "engagement": rep.best.engagement,
            "revenue": rep.best.revenue,
        },
        "per_seed": [
            {
                "permutation": _order_out(t.order),
                "engagement": t.engagement,
                "revenue": t.revenue,
            }
            for t in rep.trials
        ],
    }
    ok = rep.guarantees_ok()
    summary = (
        f"revenue: LP {rep.lp_value:.6f}, mean revenue {rep.mean_revenue:.6f}"
        f" (alpha {rep.alpha_ratio:.4f}), mean engagement {rep.mean_engagement:.6f}"
        f" -> guarantees {'PASS' if ok else 'FAIL'}"
    )
    return report, summary, 0 if ok else 2


def _run_coverage(args) -> tuple[dict, str, int]:
    ci = coverage.load_coverage(args.instance)
    best = coverage.coverage_best_of(ci, trials=args.trials, seed=args.seed)
    report = {
        "algo": "coverage",
        "instance": args.instance,
        "n": ci.n,
        "seed": args.seed,
        "trials": args.trials,
        "lp_value": best.lp_value,
        "permutation": _order_out(best.order),
        "clicks": best.clicks,
    }
    summary = (
        f"coverage: LP {best.lp_value:.6f}, best clicks {best.clicks}"
        f" at {report['permutation']}"
    )
    return report, summary, 0


def _run_certify(args) -> tuple[dict, str, int]:
    pv = policy.load_policy(args.instance)
    result = policy.check_implementable(pv)
    report = {
        "algo": "certify",
        "instance": args.instance,
        "n": pv.n,
        "feasible": result.feasible,
        "failing_layer": result.failing_layer,
        "reason": result.reason,
        "layer_flows": [
            {"layer": c.layer, "flow": c.flow_value, "feasible": c.feasible}
            for c in result.certs
        ],
        "cut": [[layer, format(mask, "x")] for layer, mask in (result.cut_nodes or [])],
    }
    if result.feasible:
        summary = "certify: feasible (all layer flows = 1)"
    elif result.reason == "unnormalized":
        summary = f"certify: infeasible at layer {result.failing_layer} (unnormalized)"
    else:
        flow = result.certs[result.failing_layer - 1].flow_value
        summary = f"certify: infeasible at layer {result.failing_layer} (max-flow {flow:.6f})"
    return report, summary, 0


_RUNNERS = {
    "greedy": _run_greedy,
    "cg": _run_cg,
    "oracle": _run_oracle,
    "revenue": _run_revenue,
    "coverage": _run_coverage,
    "certify": _run_certify,
}


def _cmd_run(args) -> int:
    report, summary, code = _RUNNERS[args.algo](args)
    _emit(report, args, summary)
    return code


def _close(a: float, b: float, tol: float = 1e-9) -> bool:
    return abs(a - b) <= tol


def _cmd_report(args) -> int:
    """Re-validate a written report: permutations must re-evaluate exactly."""
    with open(args.report, "r", encoding="utf-8") as fh:
        rep = json.load(fh)
    algo = rep.get("algo")
    failures = []
    if algo in ("greedy", "cg"):
        inst = core.load_instance(args.instance)
        order = core.order_from_external(rep["permutation"])
        if not _close(core.engagement(inst, order), rep["engagement"]):
            failures.append("engagement mismatch")
        if not _close(core.revenue(inst, order), rep["revenue"]):
            failures.append("revenue mismatch")
    elif algo == "oracle":
        inst = core.load_instance(args.instance)
        eng = rep["engagement_opt"]
        order = core.order_from_external(eng["permutation"])
        if not _close(core.engagement(inst, order), eng["value"]):
            failures.append("engagement optimum mismatch")
        rev = rep.get("revenue_opt", {})
        if "permutation" in rev:
            order = core.order_from_external(rev["permutation"])
            if not _close(core.revenue(inst, order), rev["value"]):
                failures.append("revenue optimum mismatch")
    elif algo == "revenue":
        inst = core.load_instance(args.instance)
        for i, trial in enumerate(rep["per_seed"]):
            order = core.order_from_external(trial["permutation"])
            if not _close(core.engagement(inst, order), trial["engagement"]) or not _close(
                core.revenue(inst, order), trial["revenue"]
            ):
                failures.append(f"trial {i} mismatch")
    elif algo == "coverage":
        ci = coverage.load_coverage(args.instance)
        order = core.order_from_external(rep["permutation"])
        if coverage.clicks(ci, order) != rep["clicks"]:
            failures.append("click count mismatch")
    else:
        failures.append(f"unknown report algo {algo!r}")
    if failures:
        print("report INVALID: " + "; ".join(failures))
        return 2
    print(f"report validated: {args.report} ({algo})")
    return 0


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--instance", required=True, help="input file (format depends on algo)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--steps", type=int, default=40, help="continuous greedy steps")
    p.add_argument("--samples", type=int, default=200, help="marginal samples per step")
    p.add_argument("--trials", type=int, default=200, help="rounding trials / seeds")
    p.add_argument("--factor", type=float, default=1.0, help="LP solution scale factor")
    p.add_argument("--threshold", type=float, default=None, help="override engagement floor T")
    p.add_argument("--out", default=None, help="write machine-readable report here")
    p.add_argument(
        "--format",
        choices=("json", "csv", "pretty-table"),
        default="json",
        help="report format for --out (or stdout when no --out)",
    )


def _build_parser() -> _Parser:
    parser = _Parser(prog="seqsub", description=__doc__)
    parser.add_argument("--version", action="version", version=f"seqsub {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a random instance file")
    gen.add_argument("--kind", choices=generators.KINDS, required=True)
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True)
    gen.set_defaults(func=_cmd_gen)

    run = sub.add_parser("run", help="run an algorithm and write a report")
    run.add_argument("algo", choices=sorted(_RUNNERS))
    _add_run_flags(run)
    run.set_defaults(func=_cmd_run)

    certify = sub.add_parser("certify", help="shortcut for `run certify`")
    _add_run_flags(certify)
    certify.set_defaults(func=_cmd_run, algo="certify")

    orc = sub.add_parser("oracle", help="shortcut for `run oracle`")
    _add_run_flags(orc)
    orc.set_defaults(func=_cmd_run, algo="oracle")

    rpt = sub.add_parser("report", help="re-validate a written report")
    rpt.add_argument("--report", required=True)
    rpt.add_argument("--instance", required=True)
    rpt.set_defaults(func=_cmd_report)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:  # raised by our error() override and --version
        return int(exc.code or 0)
    except SeqsubError as exc:
        print(f"seqsub: error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"seqsub: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
