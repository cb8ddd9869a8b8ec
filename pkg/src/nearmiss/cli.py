"""Command-line interface.

    nearmiss run --config case1 --method rrt --runs 5 --budget 60 --seed 0 --out results/
    nearmiss replay --tree results/run_0_tree.json --node 7 --out trace.csv
    nearmiss plot --report results/report.json
    nearmiss --dump-default-config

Exit codes: 0 success, 2 configuration error, 3 runtime failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config_io import dump_config, load_config
from .defaults import default_config
from .errors import ConfigError, NearMissError
from .reporting import METHODS, load_report, emit_box_plot, run_batch
from .simulation import export_trace_csv


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nearmiss",
        description="Search for boundary-case collisions between a simulated "
                    "ego vehicle and adversarial agents.")
    parser.add_argument("--dump-default-config", action="store_true",
                        help="print a default scenario configuration and exit")
    sub = parser.add_subparsers(dest="command")

    run = sub.add_parser("run", help="execute a batch of searches")
    run.add_argument("--config", required=True,
                     help="scenario JSON file or preset name (case1, case2)")
    run.add_argument("--method", required=True, choices=METHODS)
    run.add_argument("--runs", type=int, default=1)
    run.add_argument("--budget", type=float, default=None,
                     help="wall-clock budget per run in seconds "
                          "(default: the config's time budget)")
    run.add_argument("--seed", type=int, default=0, help="base seed")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--dump-tree", action="store_true",
                     help="also write per-run tree dumps (rrt only)")

    replay = sub.add_parser("replay", help="re-simulate a stored tree node")
    replay.add_argument("--tree", required=True, help="tree JSON dump")
    replay.add_argument("--node", required=True, type=int)
    replay.add_argument("--out", default=None,
                        help="trace CSV path (default: stdout summary only)")

    plot = sub.add_parser("plot", help="re-render figures from a report")
    plot.add_argument("--report", required=True, help="report.json path")
    plot.add_argument("--out", default=None,
                      help="output directory (default: next to the report)")
    return parser


def _cmd_run(args) -> int:
    config = load_config(args.config)
    budget = args.budget if args.budget is not None else config.search.time_budget
    out = Path(args.out)
    report, traces = run_batch(config, args.method, args.runs, budget,
                               args.seed, workers=args.workers, out_dir=out)
    if args.dump_tree and args.method == "rrt":
        from .rrt import search
        from .treeio import dump_tree_csv, dump_tree_json
        for rec in report.records:
            if rec.error is not None:
                continue
            result = search(config, seed=rec.seed, time_budget=budget)
            dump_tree_json(result, config, out / f"run_{rec.index}_tree.json")
            dump_tree_csv(result, out / f"run_{rec.index}_tree.csv")
    failed = [r for r in report.records if r.error is not None]
    for rec in failed:
        print(f"run {rec.index} (seed {rec.seed}) failed: {rec.error}",
              file=sys.stderr)
    agg = report.aggregates()
    print(json.dumps({"method": report.method, "out": str(out),
                      "summary": agg}, indent=2))
    return 3 if len(failed) == len(report.records) else 0


def _cmd_replay(args) -> int:
    from .rrt import replay
    from .treeio import load_tree_json, rehydrate_states
    tree, config = load_tree_json(args.tree)
    rehydrate_states(tree, config)
    trace = replay(tree, args.node, config)
    node = tree.node(args.node)
    print(f"node {args.node}: sim_time={node.sim_time:.2f}s "
          f"cost={node.cost.value:.4f} ticks={trace.n_ticks}")
    if args.out is not None:
        export_trace_csv(trace, [s.name for s in config.vehicles], args.out)
        print(f"trace written to {args.out}")
    return 0


def _cmd_plot(args) -> int:
    report_path = Path(args.report)
    report = load_report(report_path)
    doc = json.loads(report_path.read_text(encoding="utf-8"))
    if "config" not in doc:
        raise ConfigError("report has no embedded config; cannot re-plot")
    from .config_io import config_from_dict
    config = config_from_dict(doc["config"])
    out = Path(args.out) if args.out is not None else report_path.parent
    out.mkdir(parents=True, exist_ok=True)
    emit_box_plot([report], config, out / "box.svg")
    print(f"box plot written to {out / 'box.svg'}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.dump_default_config:
            print(dump_config(default_config()))
            return 0
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "replay":
            return _cmd_replay(args)
        if args.command == "plot":
            return _cmd_plot(args)
        parser.print_help()
        return 0
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except NearMissError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
