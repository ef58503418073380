"""Command-line front end.

Subcommands: ``validate`` (assumption checks), ``synth`` (controller
export), ``simulate`` (trace + summary, optionally figures), ``verify``
(full check suite).  Exit codes: 0 success, 1 a check or synthesis
failed, 2 usage or parse error.  Set ``DAGCTRL_LOG`` to control
verbosity.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import fileio, plots
from .config import DEFAULT_TOLERANCES
from .errors import DagctrlError
from .lti import connect_feedback, h2_norm_sq
from .runtime import simulate
from .synthesis import FORMS, build_controller, compute_gains, validate
from .verify import SuiteOptions, run_suite

log = logging.getLogger("dagctrl")

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2


def _jsonable(v):
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, (np.integer, int)):
        return int(v)
    if isinstance(v, (np.floating, float)):
        return float(v)
    return v


def _load_problem_or_exit(path: str):
    try:
        return fileio.load_problem(path)
    except (OSError, ValueError, json.JSONDecodeError, DagctrlError) as exc:
        print(f"error: cannot read problem file {path}: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def cmd_validate(args: argparse.Namespace) -> int:
    problem, _ = _load_problem_or_exit(args.problem)
    report = validate(problem)
    print(report)
    print(f"{'OK' if report.ok else 'FAILED'}: "
          f"{sum(ok for _, ok, _ in report.items)}/{len(report.items)} checks passed")
    return EXIT_OK if report.ok else EXIT_FAIL


def cmd_synth(args: argparse.Namespace) -> int:
    problem, _ = _load_problem_or_exit(args.problem)
    try:
        gains = compute_gains(problem)
        ctrl = build_controller(problem, gains, args.form)
        cost = h2_norm_sq(connect_feedback(problem.plant, ctrl.ss))
    except DagctrlError as exc:
        print(f"synthesis failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    print(f"form: {ctrl.form}")
    print(f"state dimension: {ctrl.n_states}")
    print(f"closed-loop cost (squared H2): {cost:.9g}")
    if args.out:
        fileio.save_controller(ctrl, gains, args.out)
        print(f"wrote {args.out}")
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    problem, _ = _load_problem_or_exit(args.problem)
    kwargs = dict(horizon=args.T, dt=args.dt, store_every=args.store_every)
    if args.impulse:
        kwargs["x0"] = problem.B1 @ np.ones(problem.dims.total_q)
    elif args.seed is not None:
        kwargs["noise_seed"] = args.seed
    try:
        gains = compute_gains(problem)
        trace = simulate(problem, mode=args.mode, form=args.form,
                         gains=gains, **kwargs)
        other = None
        if args.compare:
            counterpart = "monolithic" if args.mode == "network" else "network"
            other = simulate(problem, mode=counterpart, form=args.form,
                             gains=gains, **kwargs)
    except DagctrlError as exc:
        print(f"simulation failed: {exc}", file=sys.stderr)
        return EXIT_FAIL

    out = Path(args.out) if args.out else Path("trace.csv")
    fileio.save_trace_csv(trace, out)
    summary = {
        "mode": trace.mode,
        "horizon": args.T,
        "dt": args.dt,
        "final_running_cost": trace.final_cost,
        "samples": int(trace.t.size),
    }
    if other is not None:
        summary["compare_mode"] = other.mode
        summary["max_abs_deviation_u"] = float(np.abs(trace.u - other.u).max())
        summary["max_abs_deviation_x"] = float(np.abs(trace.x - other.x).max())
    summary_path = out.with_suffix(".summary.json")
    fileio.save_summary_json(summary, summary_path)
    print(f"wrote {out} and {summary_path}")
    print(f"final running cost: {trace.final_cost:.9g}")
    if other is not None:
        print(f"max |u| deviation vs {other.mode}: "
              f"{summary['max_abs_deviation_u']:.3e}")
        print(f"max |x| deviation vs {other.mode}: "
              f"{summary['max_abs_deviation_x']:.3e}")
    if args.plot:
        fig_path = out.with_suffix(".png")
        plots.save_trace_figure(trace, fig_path)
        written = [str(fig_path)]
        if other is not None:
            cmp_path = out.with_suffix(".compare.png")
            plots.save_compare_figure(trace, other, cmp_path)
            written.append(str(cmp_path))
        print("wrote " + " and ".join(written))
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    problem, options = _load_problem_or_exit(args.problem)
    # file options provide defaults, command-line flags win
    tols = DEFAULT_TOLERANCES
    file_tols = options.get("tolerances", {})
    try:
        if file_tols:
            tols = tols.with_(**file_tols)
    except TypeError as exc:
        print(f"error: bad tolerances block in options: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.rtol is not None:
        tols = tols.with_(equivalence_rtol=args.rtol)
    grid_points = args.grid_points
    if grid_points is None:
        grid_points = int(options.get("grid", {}).get("points", 60))
    suite_options = SuiteOptions(
        tols=tols,
        grid_seed=args.seed if args.seed is not None else int(options.get("seed", 0)),
        grid_points=grid_points,
        sim_horizon=args.T,
        sim_dt=args.dt,
    )
    extra = None
    if args.controller:
        try:
            form, ss, _ = fileio.load_controller(args.controller)
        except (OSError, ValueError, json.JSONDecodeError) as exc:
            print(f"error: cannot read controller file: {exc}", file=sys.stderr)
            return EXIT_USAGE
        extra = (form, ss)
    try:
        reports = run_suite(problem, suite_options, extra_controller=extra)
    except DagctrlError as exc:
        print(f"verification aborted: {exc}", file=sys.stderr)
        return EXIT_FAIL
    for report in reports:
        print(report)
    n_pass = sum(r.passed for r in reports)
    print(f"{n_pass}/{len(reports)} checks passed")
    if args.out:
        doc = [
            {
                "name": r.name, "passed": r.passed, "metric": r.metric,
                "tol": r.tol, "witnesses": list(r.witnesses),
                "values": {k: _jsonable(v) for k, v in r.values.items()},
            }
            for r in reports
        ]
        Path(args.out).write_text(json.dumps(doc, indent=1))
        print(f"wrote {args.out}")
    if args.plot:
        fig_path = Path(args.out or "verify.json").with_suffix(".png")
        plots.save_suite_figure(reports, fig_path)
        print(f"wrote {fig_path}")
    return EXIT_OK if n_pass == len(reports) else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dagctrl",
        description="Optimal decentralized controllers on an information DAG: "
                    "validate, synthesize, simulate, verify.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_val = sub.add_parser("validate", help="check problem assumptions")
    p_val.add_argument("problem")
    p_val.set_defaults(func=cmd_validate)

    p_syn = sub.add_parser("synth", help="synthesize and export a controller")
    p_syn.add_argument("problem")
    p_syn.add_argument("--form", choices=FORMS, default="minimal-state")
    p_syn.add_argument("--out", help="controller JSON output path")
    p_syn.set_defaults(func=cmd_synth)

    p_sim = sub.add_parser("simulate", help="integrate the closed loop")
    p_sim.add_argument("problem")
    p_sim.add_argument("--mode", choices=("network", "monolithic"),
                       default="network")
    p_sim.add_argument("--form", choices=FORMS, default="minimal-state",
                       help="realization used in monolithic mode")
    p_sim.add_argument("--T", type=float, default=20.0)
    p_sim.add_argument("--dt", type=float, default=1e-3)
    group = p_sim.add_mutually_exclusive_group()
    group.add_argument("--seed", type=int, help="white-noise run with this seed")
    group.add_argument("--impulse", action="store_true",
                       help="impulse through the noise channels (x0 = B1 1)")
    p_sim.add_argument("--store-every", type=int, default=10)
    p_sim.add_argument("--compare", action="store_true",
                       help="also run the counterpart mode and report deviations")
    p_sim.add_argument("--out", default="trace.csv")
    p_sim.add_argument("--plot", action="store_true",
                       help="render PNG figures next to the CSV")
    p_sim.set_defaults(func=cmd_simulate)

    p_ver = sub.add_parser("verify", help="run the verification suite")
    p_ver.add_argument("problem")
    p_ver.add_argument("--controller", help="exported controller JSON to cross-check")
    p_ver.add_argument("--rtol", type=float, help="equivalence tolerance override")
    p_ver.add_argument("--grid-points", type=int,
                       help="log-spaced frequency points in the check grid "
                            "(default 60, or the problem file's options.grid.points)")
    p_ver.add_argument("--seed", type=int, help="grid seed override")
    p_ver.add_argument("--T", type=float, default=20.0,
                       help="trace-fidelity horizon")
    p_ver.add_argument("--dt", type=float, default=1e-3)
    p_ver.add_argument("--out", help="JSON results path")
    p_ver.add_argument("--plot", action="store_true",
                       help="render a PNG report next to the JSON output")
    p_ver.set_defaults(func=cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        level=os.environ.get("DAGCTRL_LOG", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
