"""Command-line interface.

Subcommands::

    lsasim run <config|preset> [--seed N] [--out DIR]
    lsasim sweep <config|preset> [--jobs K] [--out DIR]
    lsasim report <record-or-sweep-dir>
    lsasim presets list

``run`` exits nonzero if the run faulted; ``sweep`` always exits 0 and
records per-run faults in the manifest.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .backend import active_backend
from .core import ConfigError
from .harness import (
    compute_metrics,
    load_config,
    load_record,
    run,
    sweep,
    write_metrics_csv,
    write_plots,
)
from .presets import PRESETS, get_preset


def _load(config_arg: str):
    if config_arg in PRESETS:
        return get_preset(config_arg)
    path = Path(config_arg)
    if not path.exists():
        raise ConfigError(
            f"{config_arg!r} is neither a preset name nor a config file; "
            f"try `lsasim presets list`"
        )
    return load_config(path)


def _cmd_run(args) -> int:
    config = _load(args.config)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    out_dir = Path(args.out) if args.out else None
    record = run(config, out_dir=out_dir)
    if record.fault is None:
        metrics = compute_metrics(record)
        for name in sorted(metrics):
            print(f"{name}: {metrics[name]}")
        if out_dir is not None:
            rows = [
                {
                    "run_id": config.name,
                    "seed": config.seed,
                    "metric_name": name,
                    "value": metrics[name],
                }
                for name in sorted(metrics)
            ]
            write_metrics_csv(rows, out_dir / "metrics.csv")
            for path in write_plots(record, out_dir):
                print(f"wrote {path}")
        return 0
    print(f"run faulted: {record.fault}", file=sys.stderr)
    return 1


def _cmd_sweep(args) -> int:
    config = _load(args.config)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    out_dir = Path(args.out) if args.out else Path(f"{config.name}-sweep")
    rows = sweep(config, out_dir=out_dir, jobs=args.jobs)
    print(f"{len(rows)} metric rows -> {out_dir / 'metrics.csv'}")
    return 0


def _cmd_report(args) -> int:
    target = Path(args.directory)
    record_dirs = []
    if (target / "meta.json").exists():
        record_dirs = [target]
    elif (target / "runs").is_dir():
        record_dirs = sorted(p for p in (target / "runs").iterdir() if (p / "meta.json").exists())
    if not record_dirs:
        print(f"no records found under {target}", file=sys.stderr)
        return 1
    all_rows = []
    for rec_dir in record_dirs:
        record = load_record(rec_dir)
        metrics = compute_metrics(record) if record.fault is None else {}
        for name in sorted(metrics):
            all_rows.append(
                {
                    "run_id": rec_dir.name,
                    "seed": record.seed,
                    "metric_name": name,
                    "value": metrics[name],
                }
            )
        write_plots(record, rec_dir)
        status = record.fault or "ok"
        print(f"{rec_dir.name}: {status}")
    write_metrics_csv(all_rows, target / "metrics.csv")
    print(f"wrote {target / 'metrics.csv'}")
    return 0


def _cmd_presets(args) -> int:
    if args.action == "list":
        for name in sorted(PRESETS):
            print(name)
        return 0
    print(f"unknown presets action {args.action!r}", file=sys.stderr)
    return 2


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="lsasim",
        description=f"closed-loop spiking network experiments (backend: {active_backend()})",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute one run")
    p_run.add_argument("config", help="config JSON path or preset name")
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--out", default=None, help="record output directory")
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="execute a parameter sweep")
    p_sweep.add_argument("config", help="config JSON path or preset name")
    p_sweep.add_argument("--jobs", type=int, default=1)
    p_sweep.add_argument("--seed", type=int, default=None)
    p_sweep.add_argument("--out", default=None)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_rep = sub.add_parser("report", help="recompute metrics and plots")
    p_rep.add_argument("directory")
    p_rep.set_defaults(func=_cmd_report)

    p_pre = sub.add_parser("presets", help="preset utilities")
    p_pre.add_argument("action", choices=["list"])
    p_pre.set_defaults(func=_cmd_presets)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
