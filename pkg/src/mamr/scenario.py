"""Scenario files: strict schema, defaults, parsing and serialization.

A scenario is a single YAML document with sections `robot`, `sim`,
`controller`, `fis` and `runs`.  Every section is optional and falls back
to built-in defaults; unknown keys are rejected with the offending path
named.  Parse -> serialize -> parse is idempotent.
"""

import math
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Optional

import yaml

from .controller import ControllerConfig
from .dynamics import RobotParams
from .fuzzy import FisDefinition, default_fis
from .simulator import NoiseConfig, SimConfig

__all__ = [
    "ScenarioError",
    "FisSettings",
    "RunSpec",
    "Scenario",
    "default_scenario",
    "parse_scenario",
    "parse_scenario_file",
    "serialize_scenario",
    "apply_overrides",
]


class ScenarioError(ValueError):
    """Configuration rejected; the message names the offending field."""


@dataclass(frozen=True)
class FisSettings:
    """Declared tunables of the fuzzy system; symmetric by construction."""

    e_theta_range: float = 90.0      # deg
    e_y_range: float = 2.0           # m
    e_theta_dot_range: float = 90.0  # deg/s
    output_range: float = 1.0
    crossover_frac: float = 0.25
    sharpness: float = 3.0
    delta: float = 0.05
    samples: int = 1001

    def build(self) -> FisDefinition:
        return default_fis(
            e_theta_range=self.e_theta_range,
            e_y_range=self.e_y_range,
            e_theta_dot_range=self.e_theta_dot_range,
            output_range=self.output_range,
            crossover_frac=self.crossover_frac,
            sharpness=self.sharpness,
            delta=self.delta,
            samples=self.samples,
        )


@dataclass(frozen=True)
class ControlSettings:
    """Numeric controller parameters (the fuzzy system comes from `fis`)."""

    f_drive: float = 5.0
    k_p: float = 10.0
    k_d: float = 15.0
    f_sat: float = 10.0
    f_min: float = 1.0
    tol_y: float = 0.02
    tol_theta: float = 2.0
    tol_x: float = 0.05
    t_hold: float = 0.5
    reentry_guard: bool = True


@dataclass(frozen=True)
class RunSpec:
    """One maneuver: start and target configurations plus mode and final heading."""

    name: str
    start: tuple[float, float, float]                    # x, y, theta_deg
    target: tuple[Optional[float], float, float]         # x may be None ("free")
    mode: str = "full_parking"
    beta: float = 0.0                                    # final heading, deg
    noise: Optional[NoiseConfig] = None                  # overrides sim.noise


@dataclass(frozen=True)
class Scenario:
    robot: RobotParams = field(default_factory=RobotParams)
    sim: SimConfig = field(default_factory=SimConfig)
    control: ControlSettings = field(default_factory=ControlSettings)
    fis: FisSettings = field(default_factory=FisSettings)
    runs: tuple[RunSpec, ...] = ()

    def controller_config(self, beta: float = 0.0) -> ControllerConfig:
        c = self.control
        return ControllerConfig(
            fis=self.fis.build(),
            f_drive=c.f_drive,
            k_p=c.k_p,
            k_d=c.k_d,
            f_sat=c.f_sat,
            f_min=c.f_min,
            tol_y=c.tol_y,
            tol_theta=c.tol_theta,
            tol_x=c.tol_x,
            t_hold=c.t_hold,
            beta=beta,
            reentry_guard=c.reentry_guard,
        )


def default_scenario() -> Scenario:
    return Scenario()


# ---------------------------------------------------------------------------
# strict coercion helpers

def _fail(path: str, message: str):
    raise ScenarioError(f"{path}: {message}")


def _num(value: Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(path, f"expected a number, got {value!r}")
    if not math.isfinite(value):
        _fail(path, f"expected a finite number, got {value!r}")
    return float(value)


def _int(value: Any, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        _fail(path, f"expected an integer, got {value!r}")
    return value


def _bool(value: Any, path: str) -> bool:
    if not isinstance(value, bool):
        _fail(path, f"expected true/false, got {value!r}")
    return value


def _str(value: Any, path: str) -> str:
    if not isinstance(value, str):
        _fail(path, f"expected a string, got {value!r}")
    return value


def _mapping(value: Any, path: str) -> dict:
    if value is None:
        return {}
    if not isinstance(value, dict):
        _fail(path, f"expected a mapping, got {value!r}")
    return value


def _check_keys(d: dict, allowed: set[str], path: str) -> None:
    for key in d:
        if key not in allowed:
            _fail(f"{path}.{key}" if path else str(key), "unknown key")


def _pair(value: Any, path: str) -> tuple[float, float]:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        _fail(path, f"expected a pair [a, b], got {value!r}")
    return (_num(value[0], f"{path}[0]"), _num(value[1], f"{path}[1]"))


def _triple(value: Any, path: str, free_x: bool = False) -> tuple:
    if not isinstance(value, (list, tuple)) or len(value) != 3:
        _fail(path, f"expected a triple [x, y, theta_deg], got {value!r}")
    x = value[0]
    if free_x and (x is None or x == "free"):
        x = None
    else:
        x = _num(x, f"{path}[0]")
    return (x, _num(value[1], f"{path}[1]"), _num(value[2], f"{path}[2]"))


# ---------------------------------------------------------------------------
# section parsers

def _parse_robot(d: dict, path: str) -> RobotParams:
    _check_keys(d, {"m", "inertia", "g", "mu_k", "brake_x", "brake_y", "slip_eps"}, path)
    base = RobotParams()
    try:
        return RobotParams(
            m=_num(d.get("m", base.m), f"{path}.m"),
            inertia=_num(d.get("inertia", base.inertia), f"{path}.inertia"),
            g=_num(d.get("g", base.g), f"{path}.g"),
            mu_k=_pair(d["mu_k"], f"{path}.mu_k") if "mu_k" in d else base.mu_k,
            brake_x=_num(d.get("brake_x", base.brake_x), f"{path}.brake_x"),
            brake_y=_pair(d["brake_y"], f"{path}.brake_y") if "brake_y" in d else base.brake_y,
            slip_eps=_num(d.get("slip_eps", base.slip_eps), f"{path}.slip_eps"),
        )
    except ValueError as exc:
        if isinstance(exc, ScenarioError):
            raise
        _fail(path, str(exc))


def _parse_noise(d: dict, path: str) -> NoiseConfig:
    _check_keys(d, {"std_x", "std_y", "std_theta_deg"}, path)
    base = NoiseConfig()
    try:
        return NoiseConfig(
            std_x=_num(d.get("std_x", base.std_x), f"{path}.std_x"),
            std_y=_num(d.get("std_y", base.std_y), f"{path}.std_y"),
            std_theta_deg=_num(d.get("std_theta_deg", base.std_theta_deg), f"{path}.std_theta_deg"),
        )
    except ValueError as exc:
        if isinstance(exc, ScenarioError):
            raise
        _fail(path, str(exc))


def _parse_sim(d: dict, path: str) -> SimConfig:
    _check_keys(
        d,
        {"dt_physics", "control_period", "duration_max", "integrator", "noise", "seed"},
        path,
    )
    base = SimConfig()
    try:
        return SimConfig(
            dt_physics=_num(d.get("dt_physics", base.dt_physics), f"{path}.dt_physics"),
            control_period=_num(
                d.get("control_period", base.control_period), f"{path}.control_period"
            ),
            duration_max=_num(d.get("duration_max", base.duration_max), f"{path}.duration_max"),
            integrator=_str(d.get("integrator", base.integrator), f"{path}.integrator"),
            noise=_parse_noise(_mapping(d.get("noise"), f"{path}.noise"), f"{path}.noise"),
            seed=_int(d.get("seed", base.seed), f"{path}.seed"),
        )
    except ValueError as exc:
        if isinstance(exc, ScenarioError):
            raise
        _fail(path, str(exc))


def _parse_control(d: dict, path: str) -> ControlSettings:
    fields = {
        "f_drive", "k_p", "k_d", "f_sat", "f_min",
        "tol_y", "tol_theta", "tol_x", "t_hold", "reentry_guard",
    }
    _check_keys(d, fields, path)
    base = ControlSettings()
    kwargs = {}
    for name in fields:
        if name not in d:
            continue
        if name == "reentry_guard":
            kwargs[name] = _bool(d[name], f"{path}.{name}")
        else:
            kwargs[name] = _num(d[name], f"{path}.{name}")
    return replace(base, **kwargs)


def _parse_fis(d: dict, path: str) -> FisSettings:
    fields = {
        "e_theta_range", "e_y_range", "e_theta_dot_range", "output_range",
        "crossover_frac", "sharpness", "delta", "samples",
    }
    _check_keys(d, fields, path)
    base = FisSettings()
    kwargs = {}
    for name in fields:
        if name not in d:
            continue
        if name == "samples":
            kwargs[name] = _int(d[name], f"{path}.{name}")
        else:
            kwargs[name] = _num(d[name], f"{path}.{name}")
    settings = replace(base, **kwargs)
    try:
        settings.build()  # surface invalid combinations at parse time
    except ValueError as exc:
        _fail(path, str(exc))
    return settings


def _parse_run(d: Any, path: str) -> RunSpec:
    d = _mapping(d, path)
    _check_keys(d, {"name", "start", "target", "mode", "beta", "noise"}, path)
    if "start" not in d or "target" not in d:
        _fail(path, "a run needs both 'start' and 'target'")
    mode = _str(d.get("mode", "full_parking"), f"{path}.mode")
    if mode not in ("full_parking", "flc_only"):
        _fail(f"{path}.mode", f"expected 'full_parking' or 'flc_only', got {mode!r}")
    target = _triple(d["target"], f"{path}.target", free_x=True)
    if target[2] != 0.0:
        _fail(f"{path}.target", "target heading must be 0; use 'beta' for a rotated goal")
    if mode == "full_parking" and target[0] is None:
        _fail(f"{path}.target", "full_parking requires a definite target x")
    noise = None
    if "noise" in d and d["noise"] is not None:
        noise = _parse_noise(_mapping(d["noise"], f"{path}.noise"), f"{path}.noise")
    return RunSpec(
        name=_str(d.get("name", "run"), f"{path}.name"),
        start=_triple(d["start"], f"{path}.start"),
        target=target,
        mode=mode,
        beta=_num(d.get("beta", 0.0), f"{path}.beta"),
        noise=noise,
    )


def parse_scenario(text: str) -> Scenario:
    """Parse and validate a scenario document from YAML text."""
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError(f"not valid YAML: {exc}") from exc
    return scenario_from_dict(raw)


def scenario_from_dict(raw: Any) -> Scenario:
    raw = _mapping(raw, "<root>")
    _check_keys(raw, {"robot", "sim", "controller", "fis", "runs"}, "")
    runs_raw = raw.get("runs") or []
    if not isinstance(runs_raw, list):
        _fail("runs", f"expected a list, got {runs_raw!r}")
    return Scenario(
        robot=_parse_robot(_mapping(raw.get("robot"), "robot"), "robot"),
        sim=_parse_sim(_mapping(raw.get("sim"), "sim"), "sim"),
        control=_parse_control(_mapping(raw.get("controller"), "controller"), "controller"),
        fis=_parse_fis(_mapping(raw.get("fis"), "fis"), "fis"),
        runs=tuple(_parse_run(r, f"runs[{i}]") for i, r in enumerate(runs_raw)),
    )


def parse_scenario_file(path) -> Scenario:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file {path}: {exc}") from exc
    return parse_scenario(text)


def scenario_to_dict(s: Scenario) -> dict:
    d = {
        "robot": {
            "m": s.robot.m,
            "inertia": s.robot.inertia,
            "g": s.robot.g,
            "mu_k": list(s.robot.mu_k),
            "brake_x": s.robot.brake_x,
            "brake_y": list(s.robot.brake_y),
            "slip_eps": s.robot.slip_eps,
        },
        "sim": {
            "dt_physics": s.sim.dt_physics,
            "control_period": s.sim.control_period,
            "duration_max": s.sim.duration_max,
            "integrator": s.sim.integrator,
            "noise": asdict(s.sim.noise),
            "seed": s.sim.seed,
        },
        "controller": asdict(s.control),
        "fis": asdict(s.fis),
        "runs": [],
    }
    for run in s.runs:
        entry: dict[str, Any] = {
            "name": run.name,
            "start": list(run.start),
            "target": ["free" if run.target[0] is None else run.target[0], *run.target[1:]],
            "mode": run.mode,
            "beta": run.beta,
        }
        if run.noise is not None:
            entry["noise"] = asdict(run.noise)
        d["runs"].append(entry)
    return d


def serialize_scenario(s: Scenario) -> str:
    return yaml.safe_dump(scenario_to_dict(s), sort_keys=False)


def apply_overrides(raw: Any, overrides: dict[str, Any]) -> dict:
    """Set dotted-path overrides (e.g. ``sim.seed``) into a raw scenario dict.

    Applied before validation, so CLI flags take precedence over the file,
    which takes precedence over built-in defaults.
    """
    raw = dict(_mapping(raw, "<root>"))
    for dotted, value in overrides.items():
        parts = dotted.split(".")
        if not all(parts):
            raise ScenarioError(f"invalid override path {dotted!r}")
        node = raw
        for part in parts[:-1]:
            child = node.get(part)
            if child is None:
                child = {}
                node[part] = child
            elif not isinstance(child, dict):
                raise ScenarioError(f"override path {dotted!r} does not address a section")
            node = child
        node[parts[-1]] = value
    return raw
