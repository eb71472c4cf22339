"""Command-line front end.

Subcommands: ``optimize`` runs one task and writes a line-delimited trace,
``exhaustive`` writes the per-graph study table, ``analyze`` condenses a
trace into a summary file, ``enumerate`` streams every connected graph on
n nodes.  Tasks are registry ids, or ``ext:<command>`` for a child-process
objective (which also needs ``--space``).
"""
from __future__ import annotations

import argparse
import json
import sys

from .bench import Task, external_task, get_task, task_ids
from .engine import (
    RunConfig,
    read_trace,
    run,
    trace_summary,
    write_exhaustive_csv,
    write_trace,
)
from .external import ExternalObjective
from .graphmold import enumerate_connected_graphs, graph_to_dict
from .space import space_from_json


def _resolve_task(spec: str, space_path: str | None, timeout: float) -> Task | str:
    if not spec.startswith("ext:"):
        return spec
    if not space_path:
        raise SystemExit("ext: tasks need --space pointing to a space file")
    with open(space_path) as fh:
        space = space_from_json(fh.read())
    ext = ExternalObjective.from_command(spec[4:], timeout=timeout)
    return external_task(ext, space)


def _add_run_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--task", required=True,
                        help=f"task id ({', '.join(task_ids())}) or ext:<command>")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--budget", type=int, default=100)
    parser.add_argument("--init", type=int, default=40,
                        help="initial uniform design size")
    parser.add_argument("--slots", type=int, default=5, help="candidate graphs K")
    parser.add_argument("--centered", type=int, default=3,
                        help="centered-node draws c")
    parser.add_argument("--kappa", type=float, default=2.0)
    parser.add_argument("--space", help="space file for ext: tasks")
    parser.add_argument("--timeout", type=float, default=60.0,
                        help="per-evaluation timeout for ext: tasks (seconds)")


def _config_from_args(args, mode: str) -> RunConfig:
    task = _resolve_task(args.task, args.space, args.timeout)
    return RunConfig(
        task=task,
        budget=args.budget,
        seed=args.seed,
        n_slots=args.slots,
        n_centered=args.centered,
        n_initial=args.init,
        kappa=args.kappa,
        mode=mode,
        time_budget=getattr(args, "time_budget", None),
        repeats=getattr(args, "repeats", 10),
    )


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="moldbo",
        description="Mixed-space optimization with learned interaction graphs",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    p_opt = commands.add_parser("optimize", help="run one optimization")
    _add_run_arguments(p_opt)
    p_opt.add_argument("--mode", default="gebo",
                       choices=["gebo", "prior-graph", "random-search"])
    p_opt.add_argument("--time-budget", type=float, default=None,
                       help="stop suggesting after this many seconds")
    p_opt.add_argument("--out", required=True, help="trace file to write")

    p_exh = commands.add_parser("exhaustive", help="study every connected graph")
    _add_run_arguments(p_exh)
    p_exh.add_argument("--repeats", type=int, default=10,
                       help="runs per graph")
    p_exh.add_argument("--out", required=True, help="table file to write")

    p_ana = commands.add_parser("analyze", help="summarize a trace file")
    p_ana.add_argument("--trace", required=True)
    p_ana.add_argument("--report", required=True, help="summary file to write")

    p_enum = commands.add_parser("enumerate",
                                 help="stream all connected graphs on n nodes")
    p_enum.add_argument("--n", type=int, required=True)

    args = parser.parse_args(argv)

    if args.command == "optimize":
        trace = run(_config_from_args(args, args.mode))
        write_trace(trace, args.out)
        print(json.dumps(trace_summary(trace), indent=2))
        return 0

    if args.command == "exhaustive":
        cfg = _config_from_args(args, "exhaustive")
        result = run(cfg)
        write_exhaustive_csv(result, args.out)
        print(f"{result.n_graphs} graphs -> {args.out}")
        return 0

    if args.command == "analyze":
        summary = trace_summary(read_trace(args.trace))
        with open(args.report, "w") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
        print(json.dumps(summary, indent=2, sort_keys=True))
        return 0

    for graph in enumerate_connected_graphs(args.n):
        sys.stdout.write(json.dumps(graph_to_dict(graph)) + "\n")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
