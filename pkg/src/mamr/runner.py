"""Batch execution of scenario runs, trajectory export and run reports."""

import json
import logging
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .controller import Configuration
from .scenario import RunSpec, Scenario
from .simulator import IntegrationDivergenceError, TrajectoryLog, run_scenario

__all__ = [
    "RunReport",
    "CSV_HEADER",
    "export_trajectory",
    "read_trajectory_csv",
    "derive_run_seed",
    "execute_run",
    "run_batch",
    "sweep_runs",
]

log = logging.getLogger("mamr.runner")

CSV_HEADER = "t,x,y,theta_deg,v_xr,omega_deg_s,F_d,F1,F2,phase,e_y,e_theta"

_CSV_FLOAT_FIELDS = ("t", "x", "y", "theta_deg", "v_xr", "omega_deg_s", "f_d")


@dataclass(frozen=True)
class RunReport:
    """Per-run metrics plus the paths of the exported artifacts."""

    name: str
    index: int
    mode: str
    converged: bool
    alignment_time: Optional[float]
    total_time: Optional[float]
    final_x: Optional[float]
    final_y: Optional[float]
    final_theta_deg: Optional[float]
    e_x: Optional[float]
    e_y: Optional[float]
    e_theta: Optional[float]
    max_constraint_residual: Optional[float]
    ticks: int
    error: Optional[str] = None
    csv_path: Optional[str] = None
    summary_path: Optional[str] = None


def format_number(value: float) -> str:
    """Fixed-decimal text with 6 significant digits."""
    value = round(float(value), 12)  # keep sub-picoscale noise from exploding the width
    if value == 0.0:
        value = 0.0  # normalize -0.0
    return np.format_float_positional(value, precision=6, unique=False, fractional=False)


def export_trajectory(trajectory: TrajectoryLog, path, fmt: str = "csv") -> Path:
    """Write the per-tick records; `fmt` is 'csv' (the only trajectory format)."""
    if fmt != "csv":
        raise ValueError(f"unsupported trajectory format {fmt!r}")
    path = Path(path)
    lines = [CSV_HEADER]
    for r in trajectory.records:
        lines.append(
            ",".join(
                (
                    format_number(r.t),
                    format_number(r.x),
                    format_number(r.y),
                    format_number(r.theta_deg),
                    format_number(r.v_xr),
                    format_number(r.omega_deg_s),
                    format_number(r.f_d),
                    str(r.f1),
                    str(r.f2),
                    r.phase,
                    format_number(r.e_y),
                    format_number(r.e_theta),
                )
            )
        )
    try:
        path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    except OSError as exc:
        raise OSError(f"cannot write trajectory file {path}: {exc}") from exc
    return path


def read_trajectory_csv(path) -> dict[str, list]:
    """Parse a trajectory CSV back into columns (floats, ints and phase strings)."""
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if ln]
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError(f"{path}: missing or unexpected header")
    names = CSV_HEADER.split(",")
    columns: dict[str, list] = {name: [] for name in names}
    for ln in lines[1:]:
        cells = ln.split(",")
        if len(cells) != len(names):
            raise ValueError(f"{path}: malformed row {ln!r}")
        for name, cell in zip(names, cells):
            if name in ("F1", "F2"):
                columns[name].append(int(cell))
            elif name == "phase":
                columns[name].append(cell)
            else:
                columns[name].append(float(cell))
    return columns


def derive_run_seed(global_seed: int, index: int) -> int:
    """Stable per-run seed so sweeps are reproducible run by run."""
    return int(np.random.SeedSequence([global_seed, index]).generate_state(1, np.uint64)[0])


def _safe_name(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", name) or "run"


def execute_run(
    scenario: Scenario, index: int, out_dir: Optional[Path] = None
) -> tuple[RunReport, Optional[TrajectoryLog]]:
    """Execute one run of the scenario, exporting its artifacts if out_dir is set."""
    run = scenario.runs[index]
    sim = scenario.sim
    if run.noise is not None:
        sim = replace(sim, noise=run.noise)
    ctrl = scenario.controller_config(beta=run.beta)
    start = Configuration(*run.start)
    target = Configuration(*run.target)
    seed = derive_run_seed(scenario.sim.seed, index)
    try:
        trajectory = run_scenario(
            scenario.robot, sim, ctrl, start, target, mode=run.mode, seed=seed
        )
    except IntegrationDivergenceError as exc:
        log.error("run %s diverged: %s", run.name, exc)
        report = RunReport(
            name=run.name, index=index, mode=run.mode, converged=False,
            alignment_time=None, total_time=None, final_x=None, final_y=None,
            final_theta_deg=None, e_x=None, e_y=None, e_theta=None,
            max_constraint_residual=None, ticks=0, error=str(exc),
        )
        return report, None

    fs = trajectory.final_state
    report = RunReport(
        name=run.name,
        index=index,
        mode=run.mode,
        converged=trajectory.converged,
        alignment_time=trajectory.alignment_time,
        total_time=trajectory.total_time,
        final_x=fs.x,
        final_y=fs.y,
        final_theta_deg=trajectory.records[-1].theta_deg,
        e_x=trajectory.final_errors["e_x"],
        e_y=trajectory.final_errors["e_y"],
        e_theta=trajectory.final_errors["e_theta"],
        max_constraint_residual=trajectory.max_constraint_residual,
        ticks=len(trajectory.records),
    )
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        stem = f"{index:03d}_{_safe_name(run.name)}"
        csv_path = export_trajectory(trajectory, out_dir / f"{stem}.csv")
        summary_path = out_dir / f"{stem}.json"
        summary_path.write_text(
            json.dumps(asdict(replace(report, csv_path=str(csv_path))), indent=2, sort_keys=True)
            + "\n",
            encoding="utf-8",
        )
        report = replace(report, csv_path=str(csv_path), summary_path=str(summary_path))
    return report, trajectory


def _execute_for_pool(args) -> RunReport:
    scenario, index, out_dir = args
    report, _ = execute_run(scenario, index, out_dir)
    return report


def run_batch(
    scenario: Scenario, out_dir: Optional[Path], parallel: int = 1
) -> list[RunReport]:
    """Execute every run in the scenario, optionally on a process pool."""
    indices = range(len(scenario.runs))
    out_dir = Path(out_dir) if out_dir is not None else None
    if parallel > 1 and len(scenario.runs) > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            reports = list(pool.map(_execute_for_pool, [(scenario, i, out_dir) for i in indices]))
    else:
        reports = [_execute_for_pool((scenario, i, out_dir)) for i in indices]
    if out_dir is not None and reports:
        batch = {
            "all_converged": all(r.converged for r in reports),
            "runs": [asdict(r) for r in reports],
        }
        (out_dir / "report.json").write_text(
            json.dumps(batch, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    return reports


def sweep_runs(
    scenario: Scenario, y0_values: Sequence[float], theta0_values: Sequence[float]
) -> Scenario:
    """Expand the scenario's first run into a grid over initial y and heading."""
    if not scenario.runs:
        raise ValueError("sweep needs a scenario with at least one run as template")
    if not y0_values or not theta0_values:
        raise ValueError("sweep grids must be non-empty")
    template = scenario.runs[0]
    runs = []
    for y0 in y0_values:
        for theta0 in theta0_values:
            runs.append(
                replace(
                    template,
                    name=f"{template.name}_y{y0:g}_th{theta0:g}",
                    start=(template.start[0], float(y0), float(theta0)),
                )
            )
    return replace(scenario, runs=tuple(runs))
