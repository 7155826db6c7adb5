"""Command line entry point: ``magneto2d <task> --config FILE --out DIR``."""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from .errors import ConfigError
from .scenario import EXIT_CONFIG, TaskKind, load_scenario, run

TASKS = [k.value for k in TaskKind]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="magneto2d",
                                 description="Charged-particle dynamics in planar magnetic fields.")
    ap.add_argument("task", choices=TASKS + ["presets"],
                    help="task to run; 'presets' lists the built-in scenarios")
    src = ap.add_mutually_exclusive_group()
    src.add_argument("--config", help="scenario file (JSON)")
    src.add_argument("--preset", help="built-in scenario name")
    ap.add_argument("--out", default="out", help="output directory")
    ap.add_argument("--t-max", type=float, help="override the time horizon")
    ap.add_argument("--tol", type=float, help="override the integrator relative tolerance")
    return ap


def _apply_overrides(scenario, task: str, args):
    kind = TaskKind(task)
    if kind is TaskKind.FIGURE:
        from .presets import figure_preset

        scenario = figure_preset(scenario.task.name or scenario.name)
        kind = scenario.task.kind
    elif kind is not scenario.task.kind:
        scenario.task = dataclasses.replace(scenario.task, kind=kind)
    if args.t_max is not None:
        if scenario.task.kind in (TaskKind.BOUND, TaskKind.CONFINE_CHECK):
            scenario.task.T = args.t_max
        else:
            scenario.task.t_max = args.t_max
    if args.tol is not None:
        scenario.tolerances.rel_tol = args.tol
    return scenario


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.task == "presets":
        from .presets import all_presets

        for name, sc in all_presets().items():
            print(f"{name:24s} {sc.task.kind.value:14s} {sc.field.expr}")
        return 0
    try:
        if args.preset:
            from .presets import preset

            try:
                scenario = preset(args.preset)
            except KeyError as exc:
                raise ConfigError(str(exc.args[0])) from None
        elif args.config:
            scenario = load_scenario(args.config)
        else:
            raise ConfigError("one of --config or --preset is required")
        scenario = _apply_overrides(scenario, args.task, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    report = run(scenario, args.out)
    print(json.dumps(report.summary, indent=2, default=str))
    for path in report.files:
        print(f"wrote {path}")
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
