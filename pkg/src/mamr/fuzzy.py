"""Mamdani fuzzy inference mapping parking errors to brake commands.

Three inputs (heading error in degrees, lateral offset in meters, heading
error rate in degrees per second) are fuzzified against negative / zero /
positive terms, pushed through a 27-rule base with min-AND and min
implication, aggregated by max, and defuzzified by centroid of area.  The
crisp output is then snapped to one of three discrete brake commands:
left brake, right brake, or neither.

The rule base and the default membership layout are exactly mirror
symmetric, so negating all three inputs swaps the two brakes.
"""

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Optional

import numpy as np

from .dynamics import BrakeCommand

__all__ = [
    "SigmaZ",
    "SigmaS",
    "Gaussian",
    "Universe",
    "FuzzyVariable",
    "OutputVariable",
    "FuzzyError",
    "FisDefinition",
    "default_rule_base",
    "default_fis",
    "fuzzify",
    "infer",
    "defuzzify_coa",
    "discretize_brakes",
    "evaluate",
]

TERMS = ("N", "Z", "P")

_NEG = {"N": "P", "Z": "Z", "P": "N", None: None}


def _sigmoid(z):
    z = np.clip(z, -700.0, 700.0)  # keep exp() finite
    return 1.0 / (1.0 + np.exp(-z))


@dataclass(frozen=True)
class SigmaZ:
    """Monotone non-increasing sigmoid; value 0.5 at `center`."""

    center: float
    slope: float  # > 0, in 1/(variable units)

    def __call__(self, x):
        return _sigmoid(-self.slope * (x - self.center))


@dataclass(frozen=True)
class SigmaS:
    """Monotone non-decreasing sigmoid; value 0.5 at `center`."""

    center: float
    slope: float

    def __call__(self, x):
        return _sigmoid(self.slope * (x - self.center))


@dataclass(frozen=True)
class Gaussian:
    """Unimodal bell with peak value 1 at `mean`."""

    mean: float
    sigma: float

    def __call__(self, x):
        z = (x - self.mean) / self.sigma
        return np.exp(-0.5 * z * z)


@dataclass(frozen=True)
class Universe:
    """Admissible range of a fuzzy variable plus its defuzzification grid size."""

    lower: float
    upper: float
    samples: int = 1001

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ValueError(f"universe lower bound {self.lower} must be < upper {self.upper}")
        if self.samples < 101:
            raise ValueError("universe needs at least 101 samples")

    def clamp(self, x: float) -> float:
        return min(max(x, self.lower), self.upper)

    @cached_property
    def grid(self) -> np.ndarray:
        u = np.linspace(self.lower, self.upper, self.samples)
        if self.lower == -self.upper:
            # symmetrize to the last ulp so mirrored inputs defuzzify to
            # exactly mirrored centroids
            u = (u - u[::-1]) / 2.0
        u.flags.writeable = False
        return u


@dataclass(frozen=True)
class FuzzyVariable:
    """An input variable with its universe and N/Z/P membership functions."""

    name: str
    universe: Universe
    negative: SigmaZ
    zero: Gaussian
    positive: SigmaS

    def degrees(self, x: float) -> dict[str, float]:
        x = self.universe.clamp(x)
        return {
            "N": float(self.negative(x)),
            "Z": float(self.zero(x)),
            "P": float(self.positive(x)),
        }


@dataclass(frozen=True)
class OutputVariable:
    """The crisp braking-tendency output: negative engages the right brake,
    positive the left one."""

    universe: Universe
    negative: SigmaZ
    positive: SigmaS


@dataclass(frozen=True)
class FuzzyError:
    """Crisp controller errors fed to the inference system."""

    e_theta: float      # heading error, deg
    e_y: float          # lateral offset error, m
    e_theta_dot: float  # heading error rate, deg/s

    def mirrored(self) -> "FuzzyError":
        return FuzzyError(-self.e_theta, -self.e_y, -self.e_theta_dot)


def default_rule_base() -> dict[tuple[str, str, str], Optional[str]]:
    """The 27-entry rule table keyed by (e_y term, e_theta term, e_theta_dot term).

    Layout: when the heading is turning fast, counter the turn; when the
    heading error dominates, steer it out; only with the heading settled
    does the lateral offset pick the brake.  The all-zero cell fires
    nothing, which releases both brakes.
    """
    by_heading = {
        # e_theta term -> {e_theta_dot term -> consequent}
        "N": {"N": "N", "Z": "N", "P": "P"},
        "P": {"N": "N", "Z": "P", "P": "P"},
    }
    mid_row = {
        # e_y term -> {e_theta_dot term -> consequent}, for e_theta == Z
        "N": {"N": "N", "Z": "N", "P": "P"},
        "Z": {"N": "N", "Z": None, "P": "P"},
        "P": {"N": "N", "Z": "P", "P": "P"},
    }
    rules: dict[tuple[str, str, str], Optional[str]] = {}
    for ey in TERMS:
        for eth in TERMS:
            for edot in TERMS:
                if eth == "Z":
                    rules[(ey, eth, edot)] = mid_row[ey][edot]
                else:
                    rules[(ey, eth, edot)] = by_heading[eth][edot]
    return rules


@dataclass(frozen=True)
class FisDefinition:
    """Immutable definition of the full inference system."""

    e_theta: FuzzyVariable
    e_y: FuzzyVariable
    e_theta_dot: FuzzyVariable
    output: OutputVariable
    rules: Mapping[tuple[str, str, str], Optional[str]] = field(
        default_factory=default_rule_base
    )
    delta: float = 0.05  # dead-band half-width on the crisp output

    def __post_init__(self):
        expected = {(a, b, c) for a in TERMS for b in TERMS for c in TERMS}
        if set(self.rules) != expected:
            raise ValueError("rule base must cover exactly the 27 antecedent combinations")
        if self.rules[("Z", "Z", "Z")] is not None:
            raise ValueError("the all-zero rule cell must fire nothing")
        for key, consequent in self.rules.items():
            if consequent not in ("N", "P", None):
                raise ValueError(f"rule {key} has invalid consequent {consequent!r}")
            mirror = tuple(_NEG[t] for t in key)
            if self.rules[mirror] != _NEG[consequent]:
                raise ValueError(f"rule base is not mirror-symmetric at {key}")
        if not 0.0 <= self.delta < self.output.universe.upper:
            raise ValueError("delta must be non-negative and inside the output universe")

    @cached_property
    def _output_grids(self) -> tuple[np.ndarray, np.ndarray]:
        u = self.output.universe.grid
        return self.output.negative(u), self.output.positive(u)


def default_fis(
    e_theta_range: float = 90.0,       # deg
    e_y_range: float = 2.0,            # m
    e_theta_dot_range: float = 90.0,   # deg/s
    output_range: float = 1.0,
    crossover_frac: float = 0.25,
    sharpness: float = 3.0,
    z_width: float = 1.0,
    delta: float = 0.05,
    samples: int = 1001,
) -> FisDefinition:
    """Build the symmetric default system.

    Each input gets a zero-centered Gaussian and two sigmoids whose 0.5
    crossings sit at +/- crossover_frac of the half-range.  `z_width`
    scales the overlap: at 1.0 the Gaussian also reads 0.5 at the
    crossover (half-height overlap); smaller values shrink the zero term
    and push the sigmoid terms closer to the origin.  `sharpness` is the
    sigmoid exponent at the crossover distance, i.e.
    slope = sharpness / (crossover_frac * range).
    """

    def make_var(name: str, half_range: float) -> FuzzyVariable:
        cross = crossover_frac * half_range
        slope = sharpness / cross
        sigma = z_width * cross / math.sqrt(2.0 * math.log(2.0))
        return FuzzyVariable(
            name=name,
            universe=Universe(-half_range, half_range, samples),
            negative=SigmaZ(center=-cross, slope=slope),
            zero=Gaussian(mean=0.0, sigma=sigma),
            positive=SigmaS(center=cross, slope=slope),
        )

    cross_out = crossover_frac * output_range
    slope_out = sharpness / cross_out
    output = OutputVariable(
        universe=Universe(-output_range, output_range, samples),
        negative=SigmaZ(center=-cross_out, slope=slope_out),
        positive=SigmaS(center=cross_out, slope=slope_out),
    )
    return FisDefinition(
        e_theta=make_var("e_theta", e_theta_range),
        e_y=make_var("e_y", e_y_range),
        e_theta_dot=make_var("e_theta_dot", e_theta_dot_range),
        output=output,
        delta=delta,
    )


def fuzzify(fis: FisDefinition, e: FuzzyError) -> dict[str, dict[str, float]]:
    """Membership degrees of the (clamped) crisp errors for every variable and term."""
    for label, value in (
        ("e_theta", e.e_theta),
        ("e_y", e.e_y),
        ("e_theta_dot", e.e_theta_dot),
    ):
        if not math.isfinite(value):
            raise ValueError(f"non-finite fuzzy input {label}={value!r}")
    return {
        "e_theta": fis.e_theta.degrees(e.e_theta),
        "e_y": fis.e_y.degrees(e.e_y),
        "e_theta_dot": fis.e_theta_dot.degrees(e.e_theta_dot),
    }


def infer(fis: FisDefinition, degrees: dict[str, dict[str, float]]) -> np.ndarray:
    """Aggregated output membership sampled on the output universe grid.

    Rule activation is the min of its three antecedent degrees; each rule
    clips its consequent membership at that level; rules sharing a
    consequent combine by max.
    """
    act = {"N": 0.0, "P": 0.0}
    d_ey, d_eth, d_edot = degrees["e_y"], degrees["e_theta"], degrees["e_theta_dot"]
    for (ey_t, eth_t, edot_t), consequent in fis.rules.items():
        if consequent is None:
            continue
        a = min(d_ey[ey_t], d_eth[eth_t], d_edot[edot_t])
        if a > act[consequent]:
            act[consequent] = a
    mf_n, mf_p = fis._output_grids
    return np.maximum(np.minimum(mf_n, act["N"]), np.minimum(mf_p, act["P"]))


def defuzzify_coa(aggregate: np.ndarray, universe: Universe) -> Optional[float]:
    """Centroid of area of the sampled aggregate; None when the area is zero."""
    u = universe.grid
    if len(aggregate) != len(u):
        raise ValueError("aggregate not sampled on the universe grid")
    area = np.trapezoid(aggregate, u)
    if area <= 0.0:
        return None
    return float(np.trapezoid(u * aggregate, u) / area)


def discretize_brakes(crisp: Optional[float], delta: float = 0.05) -> BrakeCommand:
    """Snap the crisp output to brake states.

    Above +delta the left brake engages, below -delta the right one;
    inside the dead band (or with no activation at all) both stay off.
    """
    if crisp is None or abs(crisp) <= delta:
        return BrakeCommand(0, 0)
    if crisp > 0.0:
        return BrakeCommand(1, 0)
    return BrakeCommand(0, 1)


def evaluate(fis: FisDefinition, e: FuzzyError) -> BrakeCommand:
    """Full pipeline: fuzzify, infer, defuzzify, discretize."""
    degrees = fuzzify(fis, e)
    aggregate = infer(fis, degrees)
    crisp = defuzzify_coa(aggregate, fis.output.universe)
    return discretize_brakes(crisp, fis.delta)


def evaluate_crisp(fis: FisDefinition, e: FuzzyError) -> Optional[float]:
    """Crisp braking tendency before discretization (None if nothing fired)."""
    return defuzzify_coa(infer(fis, fuzzify(fis, e)), fis.output.universe)
