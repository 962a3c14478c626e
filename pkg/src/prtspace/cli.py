"""Command-line front end for the verification pipeline.

Subcommands mirror the pipeline stages: validate a model file, check bounded
reachability, sweep a density, simulate the robot scenario, run spatial
collision analysis, and export PRISM / occupancy-text artifacts.  Every run
writes a JSON manifest recording the tool version, input digests, command
line, parameters and a result summary.

Exit codes: 0 success, 1 domain or verification failure (including model
diagnostics), 2 I/O or usage errors.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from dataclasses import fields, replace
from fractions import Fraction
from pathlib import Path
from typing import Optional

from . import __version__
from .checker import (
    CheckerError,
    HorizonError,
    ReachabilityQuery,
    check_bounded_reachability,
    density_sweep,
)
from .composer import CompositionError, compose
from .distributions import TICKS_PER_SECOND
from .model import validate_prtesm
from .prism import ExportError, export_prism
from .sim import (
    ScenarioConfig,
    TraceFormatError,
    read_trace,
    run_scenario,
    worst_case_sweep,
    write_trace,
)
from .spatial import (
    SpatialError,
    check_collision,
    export_bespaced,
    threshold_filter,
    trace_to_spec,
)
from .textio import ElaborationError, document_to_network, parse_model

OK, FAIL, USAGE = 0, 1, 2


class _Run:
    """Collects manifest data for exactly one command invocation."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.started = time.monotonic()
        self.inputs: dict[str, str] = {}
        self.results: dict = {}

    def add_input(self, path: Path) -> None:
        digest = hashlib.sha256(path.read_bytes()).hexdigest()
        self.inputs[str(path)] = digest

    def write(self) -> None:
        manifest = {
            "tool": "prtspace",
            "version": __version__,
            "command": list(getattr(self.args, "argv", sys.argv[1:])),
            "inputs": self.inputs,
            "parameters": {
                k: v
                for k, v in vars(self.args).items()
                if k not in ("func", "manifest", "argv") and v is not None
            },
            "wall_time_s": round(time.monotonic() - self.started, 6),
            "results": self.results,
        }
        path = Path(self.args.manifest)
        path.write_text(json.dumps(manifest, indent=2, default=str) + "\n")


def _fmt_number(value, digits: Optional[int]) -> str:
    as_float = float(value)
    text = repr(as_float) if digits is None else f"{as_float:.{digits}g}"
    if isinstance(value, Fraction) and value.denominator != 1:
        return f"{text} (exact {value})"
    return text


def _load_document(path_text: str, run: _Run):
    path = Path(path_text)
    try:
        text = path.read_text(encoding="utf-8", errors="replace")
    except OSError as exc:
        print(f"error: cannot read {path}: {exc}", file=sys.stderr)
        return None, USAGE
    run.add_input(path)
    result = parse_model(text)
    for diag in result.diagnostics:
        print(f"{path}:{diag}", file=sys.stderr)
    if result.document is None:
        return None, FAIL
    return result.document, OK


def _network_and_mdp(doc, run: _Run):
    network, target = document_to_network(doc)
    mdp = compose(network)
    run.results["states_explored"] = mdp.state_count
    return network, mdp, target


def cmd_validate(args) -> int:
    run = _Run(args)
    doc, status = _load_document(args.model, run)
    if doc is None:
        run.results["valid"] = False
        run.write()
        return status
    problems = 0
    for name, machine in doc.machines.items():
        for diag in validate_prtesm(machine):
            problems += 1
            print(f"{args.model}: machine {name}: {diag.message} ({diag.subject})",
                  file=sys.stderr)
    run.results["valid"] = problems == 0
    run.write()
    return OK if problems == 0 else FAIL


def _resolve_query(doc, args, network_target) -> list[ReachabilityQuery]:
    modes = [args.mode] if args.mode in ("max", "min") else ["max", "min"]
    if args.query:
        if args.query not in doc.queries:
            raise CheckerError(f"unknown query {args.query!r}")
        q = doc.queries[args.query]
        target = q.target or network_target
        bound = q.bound
        if args.mode is None:
            modes = [q.mode] if q.mode in ("max", "min") else ["max", "min"]
    else:
        target = args.target or network_target
        if args.bound is None:
            raise CheckerError("either --query or --bound is required")
        bound = round(args.bound * TICKS_PER_SECOND)
    if not target:
        raise CheckerError("no target expression (model declares none)")
    return [ReachabilityQuery(target, bound, mode) for mode in modes]


def cmd_check(args) -> int:
    run = _Run(args)
    doc, status = _load_document(args.model, run)
    if doc is None:
        run.write()
        return status
    try:
        if args.profile:
            doc.network = replace(doc.network, profile=args.profile)
        _, mdp, network_target = _network_and_mdp(doc, run)
        queries = _resolve_query(doc, args, network_target)
        outcomes = {}
        for query in queries:
            result = check_bounded_reachability(mdp, query, engine=args.engine)
            outcomes[query.mode] = result
            seconds = query.bound / TICKS_PER_SECOND
            print(
                f"P{query.mode}(F<={query.bound} ticks = {seconds} s "
                f"[{query.target}]) = {_fmt_number(result.probability, args.digits)}"
                f"  [{result.engine}: {result.states_explored} states, "
                f"{result.iterations} iterations]"
            )
            run.results[f"p_{query.mode}"] = str(result.probability)
        if args.compare is not None:
            reference = Fraction(args.compare)
            ours = outcomes[queries[0].mode].probability
            diff = abs(Fraction(ours) - reference)
            verdict = "matches" if diff <= Fraction(1, 10**10) else "differs from"
            print(
                f"comparison: computed {_fmt_number(ours, args.digits)} {verdict} "
                f"reference {args.compare} (|diff| = {float(diff):.6g})"
            )
            run.results["reference"] = args.compare
            run.results["reference_diff"] = float(diff)
    except (CheckerError, HorizonError, CompositionError, ElaborationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        run.write()
        return FAIL
    run.write()
    return OK


def cmd_density(args) -> int:
    run = _Run(args)
    doc, status = _load_document(args.model, run)
    if doc is None:
        run.write()
        return status
    if args.bin <= 0:
        print("error: --bin must be positive", file=sys.stderr)
        return FAIL
    try:
        _, mdp, network_target = _network_and_mdp(doc, run)
        target = args.target or network_target
        if not target:
            raise CheckerError("no target expression (model declares none)")
        step = round(args.bin * TICKS_PER_SECOND)
        upto = round(args.upto * TICKS_PER_SECOND)
        grid = list(range(step, upto + 1, step))
        if not grid:
            raise CheckerError("grid is empty; increase --upto")
        result = density_sweep(mdp, target, grid, args.mode, engine=args.engine)
        lines = ["T_seconds,cumulative,density"]
        for (t, cum), hist in zip(result.grid, result.density):
            lines.append(
                f"{t / TICKS_PER_SECOND},{float(cum)!r},{float(hist.mass)!r}"
            )
        text = "\n".join(lines) + "\n"
        if args.out:
            Path(args.out).write_text(text)
        else:
            sys.stdout.write(text)
        run.results["final_cumulative"] = str(result.grid[-1][1])
    except (CheckerError, HorizonError, CompositionError, ElaborationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        run.write()
        return FAIL
    run.write()
    return OK


def _scenario_from(doc, args) -> ScenarioConfig:
    overrides = dict(doc.scenario) if doc is not None else {}
    if args.delay is not None:
        overrides["reaction_delay"] = args.delay
    known = {f.name for f in fields(ScenarioConfig)}
    unknown = set(overrides) - known
    if unknown:
        raise ValueError(f"unknown scenario settings: {sorted(unknown)}")
    return ScenarioConfig(**overrides)


def cmd_simulate(args) -> int:
    run = _Run(args)
    doc, status = _load_document(args.model, run)
    if doc is None:
        run.write()
        return status
    try:
        config = _scenario_from(doc, args)
        if args.sweep:
            delays = [float(v) for v in args.sweep.split(",") if v.strip()]
            if not delays or any(b < a for a, b in zip(delays, delays[1:])):
                raise ValueError("--sweep needs a sorted, non-empty delay list")
            reports = worst_case_sweep(config, delays)
            for delay, report in zip(delays, reports):
                _print_report(delay, report, args.digits)
                if args.trace:
                    trace, _ = run_scenario(replace(config, reaction_delay=delay))
                    write_trace(trace, f"{args.trace}.{delay}")
            run.results["impact_speeds"] = [
                report.robot_speed_at_impact for report in reports
            ]
        else:
            trace, report = run_scenario(config)
            _print_report(config.reaction_delay, report, args.digits)
            if args.trace:
                write_trace(trace, args.trace)
            run.results["collided"] = report.collided
            run.results["impact_speed"] = report.robot_speed_at_impact
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        run.write()
        return FAIL
    run.write()
    return OK


def _print_report(delay, report, digits) -> None:
    if report.collided:
        print(
            f"delay {delay} s: collision at t={report.impact_time} s, "
            f"robot speed {_fmt_number(report.robot_speed_at_impact, digits)} m/s, "
            f"position {_fmt_number(report.impact_pos, digits)} m"
        )
    else:
        print(f"delay {delay} s: no collision")


def cmd_spatial(args) -> int:
    run = _Run(args)
    path = Path(args.trace)
    try:
        records = read_trace(path)
    except OSError as exc:
        print(f"error: cannot read {path}: {exc}", file=sys.stderr)
        run.write()
        return USAGE
    except TraceFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        run.write()
        return FAIL
    run.add_input(path)
    try:
        robot = trace_to_spec(records, "robot", args.robot_probability)
        human = trace_to_spec(records, "human", args.human_probability)
        events = check_collision(robot, human)
        kept = threshold_filter(events, args.threshold)
        print(
            f"{len(events)} collision event(s), {len(kept)} above "
            f"threshold {args.threshold}"
        )
        for event in kept:
            print(
                f"t={event.time_s:.6f} s overlap={event.overlap} "
                f"joint probability {_fmt_number(event.joint_probability, args.digits)}"
            )
        if args.bespaced:
            spec = robot if args.bespaced_entity == "robot" else human
            Path(args.bespaced).write_text(export_bespaced(spec))
        run.results["events"] = len(events)
        run.results["events_above_threshold"] = len(kept)
    except SpatialError as exc:
        print(f"error: {exc}", file=sys.stderr)
        run.write()
        return FAIL
    run.write()
    return OK


def cmd_export_prism(args) -> int:
    run = _Run(args)
    doc, status = _load_document(args.model, run)
    if doc is None:
        run.write()
        return status
    try:
        network, _ = document_to_network(doc)
        text = export_prism(network)
    except (ExportError, ElaborationError, CompositionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        run.write()
        return FAIL
    Path(args.out).write_text(text)
    run.results["modules"] = len(network.modules)
    run.write()
    return OK


def cmd_export_bespaced(args) -> int:
    run = _Run(args)
    path = Path(args.trace)
    try:
        records = read_trace(path)
    except OSError as exc:
        print(f"error: cannot read {path}: {exc}", file=sys.stderr)
        run.write()
        return USAGE
    except TraceFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        run.write()
        return FAIL
    run.add_input(path)
    try:
        spec = trace_to_spec(records, args.entity, args.probability)
    except SpatialError as exc:
        print(f"error: {exc}", file=sys.stderr)
        run.write()
        return FAIL
    Path(args.out).write_text(export_bespaced(spec))
    run.results["entries"] = len(spec.entries)
    run.write()
    return OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="prtspace",
        description="probabilistic real-time state machine verification toolkit",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p):
        p.add_argument("--manifest", default="prtspace_manifest.json",
                       help="manifest output path")
        p.add_argument("--digits", type=int, default=None,
                       help="truncate printed numbers to N significant digits")

    p = sub.add_parser("validate", help="parse and validate a model file")
    p.add_argument("model")
    common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("check", help="bounded-reachability probability")
    p.add_argument("model")
    p.add_argument("--query", help="name of a query declared in the model")
    p.add_argument("--target", help="target expression override")
    p.add_argument("--bound", type=float, help="bound in seconds")
    p.add_argument("--mode", choices=["max", "min", "both"], default=None)
    p.add_argument("--engine", choices=["auto", "staircase", "layered"],
                   default="auto")
    p.add_argument("--profile", choices=["exact", "window"], default=None,
                   help="override the completion guard profile")
    p.add_argument("--compare", help="reference probability to report against")
    common(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("density", help="cumulative/density sweep over a grid")
    p.add_argument("model")
    p.add_argument("--bin", type=float, default=0.02, help="bin width in seconds")
    p.add_argument("--upto", type=float, default=0.5, help="grid end in seconds")
    p.add_argument("--mode", choices=["max", "min"], default="max")
    p.add_argument("--target", help="target expression override")
    p.add_argument("--engine", choices=["auto", "staircase", "layered"],
                   default="auto")
    p.add_argument("--out", help="write CSV here instead of stdout")
    common(p)
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("simulate", help="run the robot scenario")
    p.add_argument("model")
    p.add_argument("--delay", type=float, help="reaction delay in seconds")
    p.add_argument("--sweep", help="comma-separated sorted delay list")
    p.add_argument("--trace", help="trace output file (suffixed per sweep delay)")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("spatial", help="collision-check a trace file")
    p.add_argument("trace")
    p.add_argument("--threshold", default="0", help="residual-risk threshold")
    p.add_argument("--robot-probability", default="1")
    p.add_argument("--human-probability", default="1")
    p.add_argument("--bespaced", help="write occupancy text here")
    p.add_argument("--bespaced-entity", choices=["robot", "human"],
                   default="robot")
    common(p)
    p.set_defaults(func=cmd_spatial)

    p = sub.add_parser("export-prism", help="write the PTA network as PRISM text")
    p.add_argument("model")
    p.add_argument("out")
    common(p)
    p.set_defaults(func=cmd_export_prism)

    p = sub.add_parser("export-bespaced", help="write a trace as occupancy text")
    p.add_argument("trace")
    p.add_argument("out")
    p.add_argument("--entity", choices=["robot", "human"], default="robot")
    p.add_argument("--probability", default="1")
    common(p)
    p.set_defaults(func=cmd_export_bespaced)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    args.argv = list(argv) if argv is not None else sys.argv[1:]
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
