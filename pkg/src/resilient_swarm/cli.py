"""Command-line interface.

Subcommands: run, validate, plot, report, accept. Exit codes: 0 success,
1 unexpected error, 2 validation failure, 3 intact-agent safety violation in
a --resilient on run (acceptance-gate mode).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import engine, output
from .errors import ScenarioError
from .scenario import parse_scenario, validate_data
from .scenario_suite import AcceptanceHarness


def _load_raw(path):
    with open(path) as fh:
        return json.load(fh)


def _onoff(value: str) -> bool:
    if value not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected 'on' or 'off'")
    return value == "on"


def _cmd_run(args) -> int:
    try:
        raw = _load_raw(args.scenario)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read scenario: {exc}", file=sys.stderr)
        return 2
    violations = validate_data(raw)
    if violations:
        for path, msg in violations:
            print(f"error: {path}: {msg}", file=sys.stderr)
        return 2
    sc = parse_scenario(raw)
    out_dir = args.out or os.environ.get("RESILIENT_SWARM_OUT") or f"runs/{sc.name}"
    log = engine.run(sc, resilient=args.resilient, detect=args.detect)
    output.write_run(out_dir, log, scenario=sc)
    with open(os.path.join(out_dir, "scenario.json.tmp"), "w") as fh:
        json.dump(raw, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(os.path.join(out_dir, "scenario.json.tmp"),
               os.path.join(out_dir, "scenario.json"))
    print(f"run complete: {len(log.events)} events, artifacts in {out_dir}")
    adversaries = {a.id for a in sc.agents if a.adversary is not None}
    if args.resilient and log.intact_violation(adversaries):
        print("error: intact-agent safety violation under resilient control",
              file=sys.stderr)
        return 3
    return 0


def _cmd_validate(args) -> int:
    try:
        raw = _load_raw(args.scenario)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read scenario: {exc}", file=sys.stderr)
        return 2
    violations = validate_data(raw)
    if violations:
        for path, msg in violations:
            print(f"error: {path}: {msg}", file=sys.stderr)
        return 2
    print("scenario is valid")
    return 0


def _cmd_plot(args) -> int:
    traj_path = os.path.join(args.rundir, "trajectories.csv")
    if not os.path.exists(traj_path):
        print(f"error: no trajectories.csv in {args.rundir}", file=sys.stderr)
        return 1
    _, trajs = output.read_trajectories(traj_path)
    obstacles, goals = [], []
    sc_path = os.path.join(args.rundir, "scenario.json")
    if os.path.exists(sc_path):
        try:
            sc = parse_scenario(_load_raw(sc_path))
            obstacles = [(o.c_o, o.r_o) for o in sc.obstacles]
            for a in sc.agents:
                goals.extend(g.point for g in a.goals)
            if sc.formation_goal is not None:
                goals.append(sc.formation_goal)
        except (ScenarioError, json.JSONDecodeError):
            pass
    svg = output.render_svg(trajs, obstacles, goals)
    output.write_svg(os.path.join(args.rundir, "plot.svg"), svg)
    print(f"wrote {os.path.join(args.rundir, 'plot.svg')}")
    return 0


def _cmd_report(args) -> int:
    ev_path = os.path.join(args.rundir, "events.jsonl")
    if not os.path.exists(ev_path):
        print(f"error: no events.jsonl in {args.rundir}", file=sys.stderr)
        return 1
    events = output.read_events(ev_path)
    by_kind = {}
    for e in events:
        by_kind.setdefault(e["type"], []).append(e)
    print(f"events: {len(events)} total")
    for kind in ("detection", "safety_violation", "goal_arrival", "qp_infeasible"):
        rows = by_kind.get(kind, [])
        print(f"  {kind}: {len(rows)}")
        for e in rows:
            extra = {k: v for k, v in e.items() if k not in ("t", "type")}
            fields = " ".join(f"{k}={v}" for k, v in sorted(extra.items()))
            print(f"    t={e['t']:g} {fields}")
    return 0


def _cmd_accept(args) -> int:
    results = AcceptanceHarness().run_all()
    for r in results:
        print(r.line())
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    return 1 if failed else 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="resilient-swarm",
        description="Multi-agent safety simulator with adversary detection "
                    "and resilient control.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate a scenario file")
    p_run.add_argument("scenario")
    p_run.add_argument("--out", default=None, help="output directory")
    p_run.add_argument("--resilient", type=_onoff, default=False,
                       metavar="on|off", help="switch to resilient control "
                       "after the first adversary verdict")
    p_run.add_argument("--detect", type=_onoff, default=True,
                       metavar="on|off", help="run the adversary detectors")
    p_run.set_defaults(func=_cmd_run)

    p_val = sub.add_parser("validate", help="validate a scenario file")
    p_val.add_argument("scenario")
    p_val.set_defaults(func=_cmd_validate)

    p_plot = sub.add_parser("plot", help="regenerate plot.svg for a run directory")
    p_plot.add_argument("rundir")
    p_plot.set_defaults(func=_cmd_plot)

    p_rep = sub.add_parser("report", help="print the event summary of a run")
    p_rep.add_argument("rundir")
    p_rep.set_defaults(func=_cmd_report)

    p_acc = sub.add_parser("accept", help="run the acceptance criteria suite")
    p_acc.set_defaults(func=_cmd_accept)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
