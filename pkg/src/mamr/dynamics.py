"""Planar rigid-body dynamics of the brake-steered robot.

The robot is driven by a single omni-directional wheel exerting a force
along the body x-axis and steered by two ON/OFF wheel brakes mounted
ahead of the center of mass.  The free front wheels forbid lateral
motion at their axle, which makes the platform nonholonomic: the lateral
body velocity is slaved to the yaw rate, ydot_r = -brake_x * omega.

All functions are pure; state is expressed in the body frame with the
heading kept in radians and unwrapped.
"""

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "RobotParams",
    "RobotState",
    "BrakeCommand",
    "ActuationInput",
    "LocalAcceleration",
    "rotation_to_global",
    "lateral_velocity",
    "brake_slip_speed",
    "friction_force",
    "friction_moment",
    "local_acceleration",
    "constraint_force",
    "to_global_velocity",
    "kinetic_energy",
]


@dataclass(frozen=True)
class RobotParams:
    """Mass, geometry and contact properties of the robot."""

    m: float = 6.8                  # mass, kg
    inertia: float = 1.0            # yaw inertia about the center of mass, kg m^2
    g: float = 9.81                 # gravity, m/s^2
    mu_k: tuple[float, float] = (0.46, 0.46)  # kinetic friction, brake 1 / brake 2
    brake_x: float = 0.93           # longitudinal brake offset, m (same for both)
    brake_y: tuple[float, float] = (0.155, -0.155)  # lateral offsets, m
    slip_eps: float = 1e-4          # slip-speed regularization floor, m/s

    def __post_init__(self):
        if not (self.m > 0 and self.inertia > 0 and self.g > 0):
            raise ValueError("m, inertia and g must be positive")
        if self.mu_k[0] < 0 or self.mu_k[1] < 0:
            raise ValueError("friction coefficients must be non-negative")
        if not self.brake_x > 0:
            raise ValueError("brake_x must be positive")
        # brake 1 is the left brake, brake 2 the right one
        if not (self.brake_y[0] > 0 > self.brake_y[1]):
            raise ValueError("expected brake_y[0] > 0 > brake_y[1]")
        if not self.slip_eps > 0:
            raise ValueError("slip_eps must be positive")

    @property
    def yaw_inertia_effective(self) -> float:
        """Inertia seen by the yaw dynamics once the lateral constraint is folded in."""
        return self.inertia + self.m * self.brake_x**2


@dataclass
class RobotState:
    """Pose plus the two independent velocities.

    The lateral body velocity is never stored; it is derived from omega
    through the no-side-slip constraint (see :func:`lateral_velocity`),
    so the constraint residual of a state is identically zero.
    """

    x: float = 0.0      # global position, m
    y: float = 0.0      # global position, m
    theta: float = 0.0  # heading, rad, unwrapped
    v_xr: float = 0.0   # longitudinal body velocity, m/s
    omega: float = 0.0  # yaw rate, rad/s


@dataclass(frozen=True)
class BrakeCommand:
    """Discrete brake states: 1 engages the brake, 0 releases it."""

    f1: int = 0
    f2: int = 0

    def __post_init__(self):
        if self.f1 not in (0, 1) or self.f2 not in (0, 1):
            raise ValueError("brake states must be exactly 0 or 1")

    def swapped(self) -> "BrakeCommand":
        return BrakeCommand(self.f2, self.f1)


@dataclass(frozen=True)
class ActuationInput:
    """Drive force along the body x-axis (through the center of mass) plus brakes."""

    drive_force: float = 0.0  # N, signed
    brakes: BrakeCommand = BrakeCommand(0, 0)


@dataclass(frozen=True)
class LocalAcceleration:
    """Body-frame accelerations; a_yr = -brake_x * alpha_dd always."""

    a_xr: float      # m/s^2
    a_yr: float      # m/s^2
    alpha_dd: float  # rad/s^2


def rotation_to_global(theta: float) -> np.ndarray:
    """3x3 rotation taking body-frame configuration/velocity triples to the global frame."""
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def lateral_velocity(params: RobotParams, state: RobotState) -> float:
    """Lateral body velocity ydot_r implied by the no-side-slip constraint."""
    return -params.brake_x * state.omega


def brake_slip_speed(params: RobotParams, state: RobotState, i: int) -> float:
    """Sliding speed of brake contact point i (1 or 2) over the ground, m/s."""
    y_i = params.brake_y[_index(i)]
    return abs(state.v_xr - y_i * state.omega)


def _index(i: int) -> int:
    if i not in (1, 2):
        raise ValueError(f"brake index must be 1 or 2, got {i}")
    return i - 1


def _slip_regularized(params: RobotParams, v_xr: float, omega: float, y_i: float):
    """Signed slip velocity and its magnitude floored at slip_eps."""
    slip = v_xr - y_i * omega
    return slip, max(abs(slip), params.slip_eps)


def friction_force(
    params: RobotParams, state: RobotState, brakes: BrakeCommand, i: int
) -> np.ndarray:
    """Coulomb friction force at brake i in the body frame, N.

    Each contact carries a third of the weight.  The force opposes the
    slip velocity, which under the lateral constraint points along the
    body x-axis only, so the y-component is always zero.  Near zero slip
    the direction is regularized by flooring the slip magnitude.
    """
    idx = _index(i)
    engaged = (brakes.f1, brakes.f2)[idx]
    if not engaged:
        return np.zeros(2)
    slip, s_reg = _slip_regularized(params, state.v_xr, state.omega, params.brake_y[idx])
    fx = -(params.m * params.g * params.mu_k[idx] / 3.0) * slip / s_reg
    return np.array([fx, 0.0])


def friction_moment(
    params: RobotParams, state: RobotState, brakes: BrakeCommand, i: int
) -> float:
    """Yaw moment about the center of mass produced by brake i, N m."""
    idx = _index(i)
    engaged = (brakes.f1, brakes.f2)[idx]
    if not engaged:
        return 0.0
    y_i = params.brake_y[idx]
    slip, s_reg = _slip_regularized(params, state.v_xr, state.omega, y_i)
    coef = params.m * params.g * params.mu_k[idx] / (3.0 * s_reg)
    return -coef * (-y_i * state.v_xr + y_i * y_i * state.omega)


def local_acceleration(
    params: RobotParams, state: RobotState, act: ActuationInput
) -> LocalAcceleration:
    """Body-frame accelerations under the given actuation.

    Longitudinal: drive force, brake drag, and the -brake_x*omega^2 term
    that appears once the constrained lateral velocity is substituted
    into the Coriolis coupling.  Yaw: brake moments plus the reaction
    moment of the lateral constraint forces, divided by the effective
    inertia I + m*brake_x^2.  Lateral acceleration follows from the
    differentiated constraint.
    """
    v, w = state.v_xr, state.omega
    a_xr = act.drive_force / params.m
    torque = 0.0
    for idx, engaged in ((0, act.brakes.f1), (1, act.brakes.f2)):
        if not engaged:
            continue
        y_i = params.brake_y[idx]
        slip, s_reg = _slip_regularized(params, v, w, y_i)
        c = params.g * params.mu_k[idx] / (3.0 * s_reg)
        a_xr -= c * slip
        torque += params.m * c * (y_i * v - y_i * y_i * w)
    a_xr += lateral_velocity(params, state) * w
    denom = params.yaw_inertia_effective
    alpha_dd = (torque + params.m * params.brake_x * v * w) / denom
    return LocalAcceleration(a_xr=a_xr, a_yr=-params.brake_x * alpha_dd, alpha_dd=alpha_dd)


def constraint_force(params: RobotParams, state: RobotState, alpha_dd: float) -> float:
    """Resultant lateral reaction force at the free wheels, N.

    Diagnostic reconstruction from the yaw acceleration; the equations
    of motion never need it because the constraint is eliminated.
    """
    return -params.m * params.brake_x * alpha_dd + params.m * state.v_xr * state.omega


def to_global_velocity(params: RobotParams, state: RobotState) -> tuple[float, float, float]:
    """(xdot, ydot, thetadot) in the global frame, with ydot_r taken from the constraint."""
    c, s = math.cos(state.theta), math.sin(state.theta)
    ydot_r = lateral_velocity(params, state)
    return (
        state.v_xr * c - ydot_r * s,
        state.v_xr * s + ydot_r * c,
        state.omega,
    )


def kinetic_energy(params: RobotParams, state: RobotState) -> float:
    """Total kinetic energy, J; uses the constrained lateral velocity."""
    ydot_r = lateral_velocity(params, state)
    return 0.5 * params.m * (state.v_xr**2 + ydot_r**2) + 0.5 * params.inertia * state.omega**2
