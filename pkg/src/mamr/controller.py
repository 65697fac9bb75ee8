"""Sequential parking controller.

Phase 1 (ALIGN): a constant drive force pushes the robot while the fuzzy
system switches the brakes to bring the lateral offset and heading to
zero.  Phase 2 (PARK_X): with the robot aligned, a saturated proportional
law with a deadzone floor (plus optional damping) drives the remaining
distance along the axis.  Phases never regress; once DONE, actuation is
identically zero.

An arbitrary final heading beta is handled by re-expressing the observed
pose in a global frame rotated by beta about the origin, so the rest of
the controller always parks along its local x-axis.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Optional

from .dynamics import ActuationInput, BrakeCommand
from .fuzzy import FisDefinition, FuzzyError, default_fis, evaluate

__all__ = [
    "Configuration",
    "ControllerConfig",
    "Phase",
    "compute_errors",
    "ParkingController",
    "wrap_deg",
]

log = logging.getLogger("mamr.controller")


def wrap_deg(angle: float) -> float:
    """Wrap an angle in degrees to (-180, 180]."""
    wrapped = math.fmod(angle, 360.0)
    if wrapped > 180.0:
        wrapped -= 360.0
    elif wrapped <= -180.0:
        wrapped += 360.0
    return wrapped


@dataclass(frozen=True)
class Configuration:
    """A planar pose as reported externally: meters and degrees.

    `x` may be None in a target to leave the position along the axis
    uncontrolled.
    """

    x: Optional[float]
    y: float
    theta: float  # deg, in (-180, 180]


class Phase(IntEnum):
    ALIGN = 0
    PARK_X = 1
    DONE = 2


@dataclass
class ControllerConfig:
    """Gains, tolerances and the fuzzy system used by the parking controller."""

    fis: FisDefinition = field(default_factory=default_fis)
    f_drive: float = 5.0     # constant drive force during alignment, N
    k_p: float = 10.0        # position gain along the axis, N/m
    k_d: float = 15.0        # damping gain on the position error rate, N s/m
    f_sat: float = 10.0      # drive force saturation, N
    f_min: float = 1.0       # deadzone floor on the commanded force, N
    tol_y: float = 0.02      # lateral convergence tolerance, m
    tol_theta: float = 2.0   # heading convergence tolerance, deg
    tol_x: float = 0.05      # axial convergence tolerance, m
    t_hold: float = 0.5      # time errors must stay inside tolerance, s
    beta: float = 0.0        # final heading, deg
    reentry_guard: bool = True  # re-engage the fuzzy brakes if alignment drifts 2x out

    def __post_init__(self):
        if not (self.f_sat >= self.f_min > 0):
            raise ValueError("need f_sat >= f_min > 0")
        if self.k_p <= 0 or self.k_d < 0:
            raise ValueError("k_p must be positive and k_d non-negative")
        if min(self.tol_y, self.tol_theta, self.tol_x) <= 0:
            raise ValueError("tolerances must be positive")
        if self.t_hold < 0:
            raise ValueError("t_hold must be non-negative")


def compute_errors(
    observed: Configuration,
    omega_deg_s: float,
    target: Configuration,
    beta: float = 0.0,
) -> tuple[FuzzyError, Optional[float]]:
    """Errors between the observed pose and the target, in the beta-rotated frame.

    The target is interpreted in the rotated frame (its heading must be
    zero there).  Returns the fuzzy error triple plus the axial error,
    or None for the axial error when the target leaves x free.
    """
    if observed.x is None:
        raise ValueError("observed configuration must have a definite x")
    if target.theta != 0.0:
        raise ValueError("target heading must be 0 in the rotated frame; use beta instead")
    b = math.radians(beta)
    c, s = math.cos(b), math.sin(b)
    x_r = observed.x * c + observed.y * s
    y_r = -observed.x * s + observed.y * c
    theta_r = observed.theta - beta
    e_theta = target.theta - theta_r
    e_y = target.y - y_r
    e_x = None if target.x is None else target.x - x_r
    return FuzzyError(e_theta=e_theta, e_y=e_y, e_theta_dot=-omega_deg_s), e_x


_ZERO_ACTUATION = ActuationInput(0.0, BrakeCommand(0, 0))


class ParkingController:
    """Stateful sequential controller; one instance per simulation run."""

    def __init__(self, config: ControllerConfig, flc_only: bool = False):
        self.config = config
        self.phase = Phase.ALIGN
        self._flc_only = flc_only
        self._hold_align = 0.0
        self._hold_x = 0.0
        self._prev_e_x: Optional[float] = None
        self._initial_e_x_sign: Optional[float] = None
        self._warned_crossing = False

    def flc_only_mode(self) -> "ParkingController":
        """Skip the axial phase: report DONE as soon as alignment holds."""
        self._flc_only = True
        return self

    def step(
        self, errors: FuzzyError, e_x: Optional[float], dt: float
    ) -> tuple[ActuationInput, Phase]:
        """Advance one control tick and return the actuation to hold until the next."""
        cfg = self.config
        if self.phase == Phase.ALIGN:
            self._check_target_crossing(e_x)
            aligned = abs(errors.e_y) < cfg.tol_y and abs(errors.e_theta) < cfg.tol_theta
            self._hold_align = self._hold_align + dt if aligned else 0.0
            if self._hold_align >= cfg.t_hold:
                if self._flc_only or e_x is None:
                    self.phase = Phase.DONE
                else:
                    self.phase = Phase.PARK_X
                    self._prev_e_x = e_x

        if self.phase == Phase.ALIGN:
            brakes = evaluate(cfg.fis, errors)
            return ActuationInput(cfg.f_drive, brakes), self.phase

        if self.phase == Phase.PARK_X:
            assert e_x is not None
            if abs(e_x) < cfg.tol_x:
                self._hold_x += dt
                if self._hold_x >= cfg.t_hold:
                    self.phase = Phase.DONE
                    return _ZERO_ACTUATION, self.phase
            else:
                self._hold_x = 0.0
            brakes = BrakeCommand(0, 0)
            if cfg.reentry_guard and (
                abs(errors.e_y) > 2.0 * cfg.tol_y or abs(errors.e_theta) > 2.0 * cfg.tol_theta
            ):
                brakes = evaluate(cfg.fis, errors)
            f_d = self._axial_force(e_x, dt)
            return ActuationInput(f_d, brakes), self.phase

        return _ZERO_ACTUATION, self.phase

    def _axial_force(self, e_x: float, dt: float) -> float:
        cfg = self.config
        ed_x = 0.0 if self._prev_e_x is None else (e_x - self._prev_e_x) / dt
        self._prev_e_x = e_x
        raw = cfg.k_p * e_x + cfg.k_d * ed_x
        magnitude = min(max(abs(raw), cfg.f_min), cfg.f_sat)
        return math.copysign(magnitude, raw) if raw != 0.0 else cfg.f_min

    def _check_target_crossing(self, e_x: Optional[float]) -> None:
        if e_x is None or self._warned_crossing:
            return
        if self._initial_e_x_sign is None:
            self._initial_e_x_sign = math.copysign(1.0, e_x) if e_x != 0.0 else 0.0
            return
        if self._initial_e_x_sign != 0.0 and e_x * self._initial_e_x_sign < 0.0:
            log.warning(
                "crossed the target x position before alignment converged "
                "(e_x=%.3f m); consider a target farther along the axis", e_x,
            )
            self._warned_crossing = True
