"""Command-line interface: ``imdrive run|list|summary|sweep``."""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from imdrive.configfile import ConfigError, UnknownScenarioError, load_config, with_overrides
from imdrive.scenario import (
    BUILTIN_NAMES,
    ScenarioConfig,
    SimulationError,
    TimeSeries,
    builtin_scenarios,
    get_builtin,
    run,
    summarize,
)

EXIT_OK = 0
EXIT_UNKNOWN_SCENARIO = 2
EXIT_BAD_CONFIG = 3
EXIT_OUTPUT = 4
EXIT_SIMULATION = 5


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code

    def __reduce__(self):
        return (CliError, (str(self), self.code))


def resolve_scenario(target: str) -> ScenarioConfig:
    """A built-in scenario name, or a path to a config file."""
    if target in BUILTIN_NAMES:
        return get_builtin(target)
    path = Path(target)
    if not path.exists():
        raise CliError(
            f"unknown scenario {target!r} (built-ins: {', '.join(BUILTIN_NAMES)}; or give a config file path)",
            EXIT_UNKNOWN_SCENARIO,
        )
    try:
        return load_config(path)
    except UnknownScenarioError as exc:
        raise CliError(f"{target}: unknown base scenario {exc.args[0]!r}", EXIT_UNKNOWN_SCENARIO) from None
    except ConfigError as exc:
        raise CliError(f"{target}: {exc}", EXIT_BAD_CONFIG) from None


def prepare_output(out: str) -> Path:
    path = Path(out)
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError(f"cannot create output directory {out}: {exc.strerror}", EXIT_OUTPUT) from None
    if not os.access(path, os.W_OK):
        raise CliError(f"output directory {out} is not writable", EXIT_OUTPUT)
    return path


def _safe_name(text: str) -> str:
    return "".join(c if c.isalnum() or c in "-_.=" else "_" for c in text)


def _run_to(cfg: ScenarioConfig, csv_path: Path):
    try:
        series, summary = run(cfg)
    except SimulationError as exc:
        raise CliError(f"{cfg.name}: {exc}", EXIT_SIMULATION) from None
    try:
        series.to_csv(csv_path)
    except OSError as exc:
        raise CliError(f"cannot write {csv_path}: {exc.strerror}", EXIT_OUTPUT) from None
    return summary


def cmd_run(args) -> int:
    cfg = resolve_scenario(args.scenario)
    out = prepare_output(args.out)
    csv_path = out / f"{_safe_name(cfg.name)}.csv"
    summary = _run_to(cfg, csv_path)
    print(f"scenario {cfg.name} -> {csv_path}")
    for line in summary.lines():
        print("  " + line)
    return EXIT_OK


def cmd_list(args) -> int:
    for cfg in builtin_scenarios():
        mode = "adaptive" if cfg.adaptation_enabled else "fixed"
        print(f"{cfg.name:14s} cmd_Rr={cfg.cmd_Rr:.4f} ohm  true_Rr={cfg.true_Rr:.4f} ohm  Rr {mode}")
    return EXIT_OK


def cmd_summary(args) -> int:
    try:
        series = TimeSeries.from_csv(args.csv)
    except OSError as exc:
        raise CliError(f"cannot read {args.csv}: {exc.strerror}", EXIT_BAD_CONFIG) from None
    except ValueError as exc:
        raise CliError(f"{args.csv}: {exc}", EXIT_BAD_CONFIG) from None
    summary = summarize(series, args.true_rr, args.speed_rpm)
    for line in summary.lines():
        print(line)
    return EXIT_OK


def _parse_values(text: str) -> list:
    values = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        try:
            values.append(json.loads(item))
        except json.JSONDecodeError:
            values.append(item)
    return values


def _sweep_one(job):
    cfg, csv_path = job
    return _run_to(cfg, csv_path)


def cmd_sweep(args) -> int:
    base = resolve_scenario(args.scenario)
    out = prepare_output(args.out)
    values = _parse_values(args.values)
    if not values:
        raise CliError("--values needs at least one value", EXIT_BAD_CONFIG)
    jobs = []
    for value in values:
        try:
            cfg = with_overrides(base, {args.param: value})
        except ConfigError as exc:
            raise CliError(f"{args.param}={value!r}: {exc}", EXIT_BAD_CONFIG) from None
        label = f"{base.name}_{args.param}={value}"
        jobs.append((cfg, out / f"{_safe_name(label)}.csv"))
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            summaries = list(pool.map(_sweep_one, jobs))
    else:
        summaries = [_sweep_one(job) for job in jobs]

    print(f"sweep of {args.param} on {base.name}")
    print(f"{'value':>12s} {'final_Rr':>10s} {'settle_s':>10s} {'qr_ratio':>10s} {'overshoot%':>10s}  csv")
    for value, summary, (_, path) in zip(values, summaries, jobs):
        settle = "-" if summary.Rr_settling_time is None else f"{summary.Rr_settling_time:.4f}"
        print(
            f"{str(value):>12s} {summary.final_Rr_hat:10.5f} {settle:>10s} "
            f"{summary.steady_lambda_qr_ratio:10.3e} {summary.max_speed_overshoot:10.3f}  {path}"
        )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="imdrive", description=__doc__)
    parser.add_argument("--out", default=".", help="directory for CSV output (default: current directory)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate one scenario and write its CSV")
    p.add_argument("scenario", help="built-in scenario name or config file path")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("list", help="list built-in scenarios")
    p.set_defaults(func=cmd_list)

    p = sub.add_parser("summary", help="recompute run metrics from a CSV")
    p.add_argument("csv")
    p.add_argument("--true-rr", type=float, default=0.412, help="true rotor resistance, ohm (default 0.412)")
    p.add_argument("--speed-rpm", type=float, default=250.0, help="final speed command, rpm (default 250)")
    p.set_defaults(func=cmd_summary)

    p = sub.add_parser("sweep", help="batch runs varying one config field")
    p.add_argument("scenario", nargs="?", default="adapt-quarter", help="base scenario (default adapt-quarter)")
    p.add_argument("--param", required=True, help="dotted config key, e.g. gains.Kp")
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--jobs", type=int, default=1, help="parallel runs (default 1)")
    p.set_defaults(func=cmd_sweep)

    for name in ("run", "sweep"):
        sub.choices[name].add_argument("--out", default=argparse.SUPPRESS, help="output directory")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"imdrive: error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
