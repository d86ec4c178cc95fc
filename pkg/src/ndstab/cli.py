"""Command-line front end.

Subcommands: ``check`` (run every stability test on a spec), ``simulate``
(trajectory CSV), ``sweep`` (feasibility-band CSV over alpha), ``examples``
(bundled benchmark reproduction), ``compare`` (baseline threshold table),
``fundamental`` (fundamental-function trajectory CSV).

Exit codes: 0 on success, 1 when a benchmark reproduction has unwaived
mismatches, 2 on a specification parse or validation failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import criteria, report
from .eqspec import SpecError, load_spec, validate
from .expr import sin, tvar
from .params import integral_summary, summarize
from .simulate import SeededHistory, fundamental, integrate

PROG = "ndstab"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=PROG,
        description="Stability tests for scalar neutral delay differential equations, "
                    "cross-checked by direct numerical integration.",
    )
    parser.add_argument("--seed", type=int, default=42,
                        help="seed for pseudo-random histories (default 42)")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("check", help="run every stability test on a spec file")
    p.add_argument("spec", help="path to a JSON equation spec")
    p.add_argument("--alpha", default="auto",
                   help="'auto' (optimize per test) or a fixed value in [0,1]")
    p.add_argument("--grid", type=int, default=100_000,
                   help="validation/summary grid points (default 100000)")
    p.add_argument("--json", action="store_true", help="machine-readable output")

    p = sub.add_parser("simulate", help="integrate a spec and write a trajectory CSV")
    p.add_argument("spec")
    p.add_argument("--t-end", type=float, required=True, help="end of the integration window")
    p.add_argument("--step", type=float, default=1e-3, help="grid step (default 1e-3)")
    p.add_argument("--history", default="const:1",
                   help="const:<v> | sin | seeded[:<seed>] (default const:1)")
    p.add_argument("--out", default="-", help="output CSV path (default stdout)")

    p = sub.add_parser("sweep", help="feasibility bands of the swept coefficient over alpha")
    p.add_argument("spec", help="spec with the swept coefficient at unit amplitude")
    p.add_argument("--param", default="r", choices=("r",),
                   help="swept parameter (only the b amplitude 'r' is supported)")
    p.add_argument("--alpha-grid", default="0:1:0.01", metavar="A:B:S",
                   help="start:stop:step for alpha (default 0:1:0.01)")
    p.add_argument("--threads", type=int, default=os.cpu_count(),
                   help="worker threads (default: available parallelism)")
    p.add_argument("--out", default="-", help="output CSV path (default stdout)")

    p = sub.add_parser("examples", help="reproduce the bundled benchmark corpus")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--all", action="store_true", help="all bundled examples (default)")
    group.add_argument("--id", type=int, choices=range(1, 6), metavar="N",
                       help="one example by number (1-5)")
    p.add_argument("--no-simulation", action="store_true",
                   help="skip the cross-validating integration")
    p.add_argument("--json", action="store_true", help="machine-readable output")

    p = sub.add_parser("compare", help="baseline threshold table for a spec")
    p.add_argument("spec")
    p.add_argument("--json", action="store_true", help="machine-readable output")

    p = sub.add_parser("fundamental", help="fundamental-function trajectory CSV")
    p.add_argument("spec", help="spec supplying b and h (the neutral part is ignored)")
    p.add_argument("--s", type=float, required=True, help="unit-impulse time")
    p.add_argument("--t-end", type=float, required=True)
    p.add_argument("--step", type=float, default=1e-3)
    p.add_argument("--out", default="-", help="output CSV path (default stdout)")

    return parser


def _load_validated(path, grid: int = 100_000):
    spec = load_spec(path)
    rep = validate(spec, grid)
    if not rep.passed:
        lines = [f"{path}: structural validation failed"]
        for c in rep.failures():
            wit = ", ".join(f"{w:g}" for w in c.witnesses)
            lines.append(f"  [{c.check_id}] {c.description}; witness t = {wit}")
        raise SpecError("\n".join(lines))
    return spec


def _parse_history(text: str, spec, seed: int):
    if text.startswith("const:"):
        return float(text.split(":", 1)[1])
    if text == "sin":
        return sin(tvar())
    if text == "seeded" or text.startswith("seeded:"):
        n = int(text.split(":", 1)[1]) if ":" in text else seed
        probe = np.linspace(spec.t0, spec.horizon, 1024)
        reach = min(float(np.min(spec.g.eval_array(probe))),
                    float(np.min(spec.h.eval_array(probe))))
        lo = min(spec.t0 - 1.0, reach - 1e-9)
        return SeededHistory(n, lo, spec.t0)
    raise SpecError(f"unknown history {text!r} (use const:<v>, sin, or seeded[:<seed>])")


def _open_out(path: str):
    if path == "-":
        return sys.stdout, False
    return open(path, "w", newline=""), True


def _parse_alpha_grid(text: str) -> list[float]:
    try:
        a, b, s = (float(x) for x in text.split(":"))
    except ValueError as exc:
        raise SpecError(f"bad alpha grid {text!r}, expected start:stop:step") from exc
    if s <= 0 or b < a:
        raise SpecError(f"bad alpha grid {text!r}: need step > 0 and stop >= start")
    n = int(round((b - a) / s))
    return [a + i * s for i in range(n + 1)]


def _fmt_verdict(v) -> str:
    mark = "satisfied" if v.satisfied else ("not satisfied" if v.applicable else "not applicable")
    margin = "" if math.isnan(v.margin) else f"  margin={v.margin:+.6g}"
    alpha = "" if v.witness_alpha is None else f"  alpha={v.witness_alpha:.6g}"
    reason = f"  ({v.reason})" if v.reason else ""
    return f"{v.criterion:<18} {mark:<14}{margin}{alpha}  [{v.stability_kind}, {v.certification}]{reason}"


def _cmd_check(args) -> int:
    spec = _load_validated(args.spec, args.grid)
    summary = summarize(spec, args.grid)
    if args.alpha == "auto":
        verdicts = criteria.best_verdict(spec, summary)
    else:
        alpha = float(args.alpha)
        verdicts = [criteria.check_theorem1(summary, alpha)]
        if summary.limit_tau is not None:
            verdicts.append(criteria.check_corollary3(summary, alpha))
        verdicts.append(criteria.check_theorem2(summary, alpha))
        try:
            verdicts.append(criteria.check_theorem3(integral_summary(spec), alpha))
        except ValueError:
            pass
    if args.json:
        print(json.dumps([v.to_dict() for v in verdicts], indent=2))
    else:
        print(f"# {args.spec}" + (f" ({spec.name})" if spec.name else ""))
        for v in verdicts:
            print(_fmt_verdict(v))
        satisfied = [v for v in verdicts if v.satisfied]
        best = next((v for v in satisfied if v.stability_kind == "uniform-exponential"),
                    satisfied[0] if satisfied else None)
        if best is None:
            print("no test satisfied (stability undecided by these criteria)")
        else:
            print(f"stability certified by {best.criterion} ({best.stability_kind})")
    return 0


def _cmd_simulate(args, seed: int) -> int:
    spec = _load_validated(args.spec)
    history = _parse_history(args.history, spec, seed)
    traj = integrate(spec, history, args.t_end, args.step)
    fh, close = _open_out(args.out)
    try:
        traj.write_csv(fh)
    finally:
        if close:
            fh.close()
    return 0


def _cmd_sweep(args) -> int:
    spec = _load_validated(args.spec)
    alphas = _parse_alpha_grid(args.alpha_grid)
    rows = report.sweep_alpha_r(spec, alphas, threads=args.threads)
    fh, close = _open_out(args.out)
    try:
        report.write_sweep_csv(rows, fh)
    finally:
        if close:
            fh.close()
    return 0


def _cmd_examples(args) -> int:
    ids = (f"ex{args.id}",) if args.id else None
    reports = report.reproduce_examples(ids, with_simulation=not args.no_simulation)
    waived = report.load_waivers()
    bad = report.unwaived_mismatches(reports, waived)
    if args.json:
        print(json.dumps({
            "reports": [r.to_dict() for r in reports],
            "waived": sorted(waived),
            "unwaived_mismatches": bad,
        }, indent=2))
    else:
        for rep in reports:
            print(f"== {rep.example_id}: {rep.name}")
            for q in rep.quantities:
                flag = "ok      " if q.match else "MISMATCH"
                print(f"  {flag} {q.name:<28} quoted {q.quoted:<12g} derived {q.derived:<.9g} [{q.method}]")
            for c in rep.claims:
                flag = "ok      " if c.holds else "MISMATCH"
                print(f"  {flag} {c.name}")
            if rep.simulation is not None:
                print(f"  simulation: {rep.simulation.verdict} "
                      f"(fitted rate {rep.simulation.rate:.4g}; {rep.simulation_note})")
            for note in rep.notes:
                print(f"  note: {note}")
        if bad:
            print("unwaived mismatches: " + ", ".join(bad))
        else:
            print("all reference checks match or are waived")
    return 1 if bad else 0


def _cmd_compare(args) -> int:
    spec = _load_validated(args.spec)
    rows = report.compare_baselines(spec)
    if args.json:
        print(json.dumps(rows, indent=2))
    else:
        print(f"{'criterion':<18} {'scale':<14} {'threshold':<12} applicable  note")
        for r in rows:
            thr = "-" if r["threshold"] is None else f"{r['threshold']:.6g}"
            print(f"{r['criterion']:<18} {r['scale']:<14} {thr:<12} {str(r['applicable']):<11} {r['note']}")
    return 0


def _cmd_fundamental(args) -> int:
    spec = _load_validated(args.spec)
    traj = fundamental(spec.b, spec.h, args.s, args.t_end, args.step)
    fh, close = _open_out(args.out)
    try:
        traj.write_csv(fh)
    finally:
        if close:
            fh.close()
    return 0


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "check":
            return _cmd_check(args)
        if args.command == "simulate":
            return _cmd_simulate(args, args.seed)
        if args.command == "sweep":
            return _cmd_sweep(args)
        if args.command == "examples":
            return _cmd_examples(args)
        if args.command == "compare":
            return _cmd_compare(args)
        if args.command == "fundamental":
            return _cmd_fundamental(args)
        parser.error(f"unknown command {args.command!r}")
    except SpecError as exc:
        print(f"{PROG}: {exc}", file=sys.stderr)
        return 2
    return 0


def main() -> None:
    sys.exit(run())
