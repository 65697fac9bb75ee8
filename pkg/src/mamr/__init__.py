"""Simulator and fuzzy parking controller for a brake-steered nonholonomic robot."""

from .controller import (
    Configuration,
    ControllerConfig,
    ParkingController,
    Phase,
    compute_errors,
)
from .dynamics import (
    ActuationInput,
    BrakeCommand,
    LocalAcceleration,
    RobotParams,
    RobotState,
    brake_slip_speed,
    constraint_force,
    friction_force,
    friction_moment,
    kinetic_energy,
    lateral_velocity,
    local_acceleration,
    rotation_to_global,
    to_global_velocity,
)
from .fuzzy import (
    FisDefinition,
    FuzzyError,
    default_fis,
    default_rule_base,
    defuzzify_coa,
    discretize_brakes,
    evaluate,
    fuzzify,
    infer,
)
from .runner import RunReport, execute_run, export_trajectory, run_batch, sweep_runs
from .scenario import (
    Scenario,
    ScenarioError,
    default_scenario,
    parse_scenario,
    parse_scenario_file,
    serialize_scenario,
)
from .simulator import (
    IntegrationDivergenceError,
    NoiseConfig,
    SimConfig,
    TrajectoryLog,
    integrate_step,
    run_scenario,
    sense,
)

__version__ = "0.1.0"
