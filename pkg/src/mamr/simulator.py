"""Closed-loop time stepping: fixed-step integration with zero-order-hold actuation.

The controller runs at the control period; between ticks the actuation is
held constant and the continuous dynamics are advanced by an integer
number of physics substeps (RK4 by default, semi-implicit Euler as a
cross-check).  Brake switching therefore only happens on tick boundaries,
so every physics window integrates a smooth vector field apart from the
friction regularization.
"""

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .controller import Configuration, ControllerConfig, ParkingController, Phase, compute_errors, wrap_deg
from .dynamics import (
    ActuationInput,
    RobotParams,
    RobotState,
    lateral_velocity,
    local_acceleration,
    to_global_velocity,
)

__all__ = [
    "NoiseConfig",
    "SimConfig",
    "TickRecord",
    "TrajectoryLog",
    "IntegrationDivergenceError",
    "integrate_step",
    "sense",
    "run_scenario",
]


class IntegrationDivergenceError(RuntimeError):
    """The integrated state left the finite domain."""


@dataclass(frozen=True)
class NoiseConfig:
    """Per-channel Gaussian standard deviations of the simulated sensor."""

    std_x: float = 0.0          # m
    std_y: float = 0.0          # m
    std_theta_deg: float = 0.0  # deg

    def __post_init__(self):
        if min(self.std_x, self.std_y, self.std_theta_deg) < 0:
            raise ValueError("noise standard deviations must be non-negative")

    @property
    def any(self) -> bool:
        return self.std_x > 0 or self.std_y > 0 or self.std_theta_deg > 0


@dataclass(frozen=True)
class SimConfig:
    dt_physics: float = 0.001      # integration step, s
    control_period: float = 0.02   # controller tick, s
    duration_max: float = 60.0     # simulated-time budget, s
    integrator: str = "rk4"        # "rk4" or "semi_implicit_euler"
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    seed: int = 0

    def __post_init__(self):
        if self.dt_physics <= 0 or self.control_period <= 0 or self.duration_max <= 0:
            raise ValueError("time steps and duration must be positive")
        n = self.control_period / self.dt_physics
        if abs(n - round(n)) > 1e-9 or round(n) < 1:
            raise ValueError("control_period must be an integer multiple of dt_physics")
        if self.integrator not in ("rk4", "semi_implicit_euler"):
            raise ValueError(f"unknown integrator {self.integrator!r}")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    @property
    def substeps(self) -> int:
        return round(self.control_period / self.dt_physics)


# state tuples are (x, y, theta, v_xr, omega); plain floats keep the
# inner integration loop cheap

def _deriv(p: RobotParams, s: tuple, act: ActuationInput) -> tuple:
    x, y, theta, v, w = s
    a_x = act.drive_force / p.m
    torque = 0.0
    for idx, engaged in ((0, act.brakes.f1), (1, act.brakes.f2)):
        if not engaged:
            continue
        y_i = p.brake_y[idx]
        slip = v - y_i * w
        s_reg = abs(slip)
        if s_reg < p.slip_eps:
            s_reg = p.slip_eps
        c = p.g * p.mu_k[idx] / (3.0 * s_reg)
        a_x -= c * slip
        torque += p.m * c * (y_i * v - y_i * y_i * w)
    ydot_r = -p.brake_x * w
    a_x += ydot_r * w
    alpha_dd = (torque + p.m * p.brake_x * v * w) / (p.inertia + p.m * p.brake_x**2)
    cth, sth = math.cos(theta), math.sin(theta)
    return (v * cth - ydot_r * sth, v * sth + ydot_r * cth, w, a_x, alpha_dd)


def _rk4_step(p: RobotParams, s: tuple, act: ActuationInput, dt: float) -> tuple:
    h2, h6 = dt / 2.0, dt / 6.0
    k1 = _deriv(p, s, act)
    k2 = _deriv(p, tuple(si + h2 * ki for si, ki in zip(s, k1)), act)
    k3 = _deriv(p, tuple(si + h2 * ki for si, ki in zip(s, k2)), act)
    k4 = _deriv(p, tuple(si + dt * ki for si, ki in zip(s, k3)), act)
    return tuple(
        si + h6 * (a + 2.0 * (b + c) + d) for si, a, b, c, d in zip(s, k1, k2, k3, k4)
    )


def _semi_implicit_euler_step(p: RobotParams, s: tuple, act: ActuationInput, dt: float) -> tuple:
    x, y, theta, v, w = s
    _, _, _, a_x, alpha_dd = _deriv(p, s, act)
    v_new = v + dt * a_x
    w_new = w + dt * alpha_dd
    ydot_r = -p.brake_x * w_new
    cth, sth = math.cos(theta), math.sin(theta)
    return (
        x + dt * (v_new * cth - ydot_r * sth),
        y + dt * (v_new * sth + ydot_r * cth),
        theta + dt * w_new,
        v_new,
        w_new,
    )


_STEPPERS = {"rk4": _rk4_step, "semi_implicit_euler": _semi_implicit_euler_step}


def _check_finite(s: tuple, t: float, act: ActuationInput) -> None:
    for v in s:
        if not math.isfinite(v):
            raise IntegrationDivergenceError(
                f"non-finite state at t={t:.4f}s: {s} under drive_force="
                f"{act.drive_force} brakes=({act.brakes.f1},{act.brakes.f2})"
            )


def integrate_step(
    params: RobotParams,
    state: RobotState,
    act: ActuationInput,
    dt: float,
    method: str = "rk4",
) -> RobotState:
    """Advance the state by one physics step with the actuation held constant."""
    stepper = _STEPPERS[method]
    s = stepper(params, (state.x, state.y, state.theta, state.v_xr, state.omega), act, dt)
    _check_finite(s, dt, act)
    return RobotState(*s)


def sense(
    state: RobotState,
    noise: NoiseConfig,
    rng: Optional[np.random.Generator] = None,
) -> tuple[Configuration, float]:
    """Observed pose (degrees, wrapped) and yaw rate in deg/s.

    With zero standard deviations the observation is the ground truth
    exactly and the random stream is left untouched.
    """
    x, y, theta = state.x, state.y, state.theta
    if noise.any:
        if rng is None:
            raise ValueError("noise configured but no random generator supplied")
        x = x + noise.std_x * rng.standard_normal()
        y = y + noise.std_y * rng.standard_normal()
        theta = theta + math.radians(noise.std_theta_deg) * rng.standard_normal()
    return Configuration(x=x, y=y, theta=wrap_deg(math.degrees(theta))), math.degrees(state.omega)


@dataclass(frozen=True)
class TickRecord:
    """Ground-truth state plus the actuation and errors of one control tick."""

    t: float
    x: float
    y: float
    theta_deg: float
    v_xr: float
    omega_deg_s: float
    f_d: float
    f1: int
    f2: int
    phase: str
    e_y: float
    e_theta: float
    e_x: Optional[float] = None  # not part of the trajectory file


@dataclass
class TrajectoryLog:
    """Per-tick records plus summary metrics of one closed-loop run."""

    records: list[TickRecord]
    converged: bool
    alignment_time: Optional[float]
    total_time: Optional[float]
    final_state: RobotState
    final_errors: dict[str, Optional[float]]
    max_constraint_residual: float
    mode: str
    beta: float

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])


def run_scenario(
    params: RobotParams,
    sim: SimConfig,
    ctrl: ControllerConfig,
    start: Configuration,
    target: Configuration,
    mode: str = "full_parking",
    seed: Optional[int] = None,
) -> TrajectoryLog:
    """Run one closed-loop parking maneuver and record its trajectory.

    `mode` is "full_parking" or "flc_only"; the latter leaves the axial
    position uncontrolled and finishes once alignment holds.  The run
    terminates on DONE or when the time budget is exhausted; hitting a
    non-finite state raises :class:`IntegrationDivergenceError`.
    """
    if mode not in ("full_parking", "flc_only"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "full_parking" and target.x is None:
        raise ValueError("full_parking requires a definite target x")
    if start.x is None:
        raise ValueError("start configuration must have a definite x")

    controller = ParkingController(ctrl, flc_only=(mode == "flc_only"))
    stepper = _STEPPERS[sim.integrator]
    rng = np.random.default_rng(sim.seed if seed is None else seed) if sim.noise.any else None

    s = (start.x, start.y, math.radians(start.theta), 0.0, 0.0)
    dt, n_sub = sim.dt_physics, sim.substeps
    records: list[TickRecord] = []
    max_resid = 0.0
    tick = 0
    while True:
        t = tick * sim.control_period
        state = RobotState(*s)
        obs, omega_obs = sense(state, sim.noise, rng)
        fe, e_x = compute_errors(obs, omega_obs, target, ctrl.beta)
        act, phase = controller.step(fe, e_x, sim.control_period)
        records.append(
            TickRecord(
                t=t,
                x=state.x,
                y=state.y,
                theta_deg=wrap_deg(math.degrees(state.theta)),
                v_xr=state.v_xr,
                omega_deg_s=math.degrees(state.omega),
                f_d=act.drive_force,
                f1=act.brakes.f1,
                f2=act.brakes.f2,
                phase=phase.name,
                e_y=fe.e_y,
                e_theta=fe.e_theta,
                e_x=e_x,
            )
        )
        resid = abs(lateral_velocity(params, state) + params.brake_x * state.omega)
        if resid > max_resid:
            max_resid = resid
        if phase == Phase.DONE or t >= sim.duration_max - 1e-9:
            break
        for _ in range(n_sub):
            s = stepper(params, s, act, dt)
        _check_finite(s, t + sim.control_period, act)
        tick += 1

    final_state = RobotState(*s)
    last = records[-1]
    final_errors = {
        "e_x": last.e_x,
        "e_y": last.e_y,
        "e_theta": last.e_theta,
    }
    converged = controller.phase == Phase.DONE and _within_tolerance(final_errors, ctrl, mode)
    alignment_time = next((r.t for r in records if r.phase != Phase.ALIGN.name), None)
    total_time = last.t if controller.phase == Phase.DONE else None
    return TrajectoryLog(
        records=records,
        converged=converged,
        alignment_time=alignment_time,
        total_time=total_time,
        final_state=final_state,
        final_errors=final_errors,
        max_constraint_residual=max_resid,
        mode=mode,
        beta=ctrl.beta,
    )


def _within_tolerance(errors: dict, ctrl: ControllerConfig, mode: str) -> bool:
    ok = abs(errors["e_y"]) < ctrl.tol_y and abs(errors["e_theta"]) < ctrl.tol_theta
    if mode == "full_parking":
        ok = ok and errors["e_x"] is not None and abs(errors["e_x"]) < ctrl.tol_x
    return ok
