"""Command-line interface: run scenarios, sweep initial conditions, check configs."""

import argparse
import logging
import os
import sys
from pathlib import Path

import yaml

from .runner import run_batch, sweep_runs
from .scenario import (
    ScenarioError,
    apply_overrides,
    default_scenario,
    scenario_from_dict,
    serialize_scenario,
)

log = logging.getLogger("mamr.cli")

EXIT_OK = 0
EXIT_NONCONVERGED = 1
EXIT_USAGE = 2


def _configure_logging() -> None:
    level_name = os.environ.get("MAMR_LOG_LEVEL", "INFO").upper()
    level = getattr(logging, level_name, None)
    if not isinstance(level, int):
        level = logging.INFO
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--scenario", required=True, help="path to the scenario YAML file")
    parser.add_argument("--out", default="mamr_out", help="output directory (default: mamr_out)")
    parser.add_argument("--seed", type=int, default=None, help="override sim.seed")
    parser.add_argument("--parallel", type=int, default=1, help="worker processes for the batch")
    parser.add_argument(
        "--allow-nonconvergence",
        action="store_true",
        help="exit 0 even when some runs do not converge",
    )
    parser.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="PATH=VALUE",
        dest="overrides",
        help="override any scenario field, e.g. --set controller.k_p=12",
    )


def _collect_overrides(args) -> dict:
    overrides = {}
    for item in args.overrides:
        if "=" not in item:
            raise ScenarioError(f"override {item!r} must look like section.key=value")
        dotted, _, value = item.partition("=")
        overrides[dotted.strip()] = yaml.safe_load(value)
    if args.seed is not None:
        overrides["sim.seed"] = args.seed
    return overrides


def _load_scenario(args):
    path = Path(args.scenario)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file {path}: {exc}") from exc
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError(f"{path} is not valid YAML: {exc}") from exc
    raw = apply_overrides(raw, _collect_overrides(args))
    return scenario_from_dict(raw)


def _report_outcome(reports, allow_nonconvergence: bool) -> int:
    for r in reports:
        status = "converged" if r.converged else ("error" if r.error else "NOT converged")
        times = ""
        if r.alignment_time is not None:
            times += f" align={r.alignment_time:.2f}s"
        if r.total_time is not None:
            times += f" total={r.total_time:.2f}s"
        print(f"[{r.index:03d}] {r.name}: {status}{times}")
    n_bad = sum(1 for r in reports if not r.converged)
    if n_bad:
        print(f"{n_bad} of {len(reports)} runs did not converge")
        return EXIT_OK if allow_nonconvergence else EXIT_NONCONVERGED
    print(f"all {len(reports)} runs converged")
    return EXIT_OK


def _cmd_run(args) -> int:
    scenario = _load_scenario(args)
    if not scenario.runs:
        log.warning("scenario has an empty run list; nothing to do")
        return EXIT_OK
    reports = run_batch(scenario, Path(args.out), parallel=args.parallel)
    return _report_outcome(reports, args.allow_nonconvergence)


def _parse_grid(text: str, flag: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip() != ""]
    except ValueError as exc:
        raise ScenarioError(f"{flag} expects comma-separated numbers, got {text!r}") from exc
    if not values:
        raise ScenarioError(f"{flag} must list at least one value")
    return values


def _cmd_sweep(args) -> int:
    scenario = _load_scenario(args)
    expanded = sweep_runs(
        scenario,
        _parse_grid(args.y0, "--y0"),
        _parse_grid(args.theta0, "--theta0"),
    )
    reports = run_batch(expanded, Path(args.out), parallel=args.parallel)
    print(f"sweep grid: y0={args.y0} theta0={args.theta0}")
    return _report_outcome(reports, args.allow_nonconvergence)


def _cmd_validate(args) -> int:
    _load_scenario(args)
    print(f"{args.scenario}: OK")
    return EXIT_OK


def _cmd_print_defaults(_args) -> int:
    print("# built-in defaults; any omitted key falls back to these values")
    print(serialize_scenario(default_scenario()), end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mamr",
        description="Parking simulations for the brake-steered nonholonomic robot.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute every run in a scenario file")
    _add_common(p_run)
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="grid-sweep initial y and heading of the first run")
    _add_common(p_sweep)
    p_sweep.add_argument("--y0", required=True, help="comma-separated initial y values, m")
    p_sweep.add_argument("--theta0", required=True, help="comma-separated initial headings, deg")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_val = sub.add_parser("validate-config", help="parse and validate a scenario file")
    _add_common(p_val)
    p_val.set_defaults(func=_cmd_validate)

    p_def = sub.add_parser("print-defaults", help="print the built-in default configuration")
    p_def.set_defaults(func=_cmd_print_defaults)

    return parser


def main(argv=None) -> int:
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
