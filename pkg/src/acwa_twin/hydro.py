"""Fluid properties and single-pipe hydraulics.

Everything here is a pure function of its arguments.  Temperatures are in
degrees Celsius, lengths in metres, flows in m^3/s.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

from .errors import DomainError, RegimeConstraintError, SolverError
from .units import G

log = logging.getLogger(__name__)

LAMINAR_LIMIT = 2300.0
TURBULENT_LIMIT = 4000.0
SPECIFIC_HEAT = 4186.0  # J/(kg K), held constant

COLEBROOK_TOL = 1e-10
COLEBROOK_MAX_ITER = 100
GRAVITY_TOL = 1e-10
GRAVITY_MAX_ITER = 200


class Regime(str, enum.Enum):
    STILL = "Still"
    LAMINAR = "Laminar"
    TRANSITIONAL = "Transitional"
    TURBULENT = "Turbulent"


class RegimePolicy(str, enum.Enum):
    STRICT = "strict"
    LENIENT = "lenient"


class Material(str, enum.Enum):
    PVC = "PVC"
    CPVC = "CPVC"
    STEEL = "steel"
    CUSTOM = "custom"

    @classmethod
    def parse(cls, text: str) -> "Material":
        key = text.strip().replace("-", "").upper()
        for member in cls:
            if member.value.upper() == key:
                return member
        raise ValueError(f"unknown pipe material {text!r}")


# absolute roughness in metres
DEFAULT_ROUGHNESS = {
    Material.PVC: 2e-5,
    Material.CPVC: 2e-5,
    Material.STEEL: 4.5e-5,
}

ENTRY_LOSS_K = 0.5
EXIT_LOSS_K = 1.0
OPEN_VALVE_K = 0.2


def valve_loss_coefficient(opening: float) -> float:
    """Loss coefficient of a valve at ``opening`` in (0, 1]; a closed valve carries no flow."""
    if not 0.0 < opening <= 1.0:
        raise DomainError(f"valve opening must lie in (0, 1], got {opening}")
    return OPEN_VALVE_K / opening**2


def _check_temperature(t: float, lo: float = 0.0, hi: float = 100.0) -> None:
    if not (lo <= t <= hi):
        raise DomainError(f"temperature {t} degC outside the valid interval [{lo}, {hi}] degC")


def kell_density(t: float) -> float:
    """Density of air-free water at one atmosphere (Kell 1975), kg/m^3."""
    _check_temperature(t)
    num = (
        999.83952
        + 16.945176 * t
        - 7.9870401e-3 * t**2
        - 46.170461e-6 * t**3
        + 105.56302e-9 * t**4
        - 280.54253e-12 * t**5
    )
    return num / (1.0 + 16.879850e-3 * t)


def b1_dynamic_viscosity(t: float) -> float:
    """Numerator of the kinematic-viscosity correlation, Pa s."""
    _check_temperature(t)
    return 1.773e-3 / (1.0 + 0.0337 * t + 0.00022 * t**2)


def b1_density(t: float) -> float:
    """Denominator of the kinematic-viscosity correlation, kg/m^3."""
    _check_temperature(t)
    return 999.457 * (1.0 + 0.000052939 * t - 0.0000065322 * t**2 + 0.00000001445 * t**3)


def kinematic_viscosity(t: float) -> float:
    """Kinematic viscosity of water, m^2/s."""
    return b1_dynamic_viscosity(t) / b1_density(t)


@dataclass(frozen=True)
class FluidProperties:
    temperature: float
    density: float
    dynamic_viscosity: float
    kinematic_viscosity: float
    specific_weight: float
    specific_heat: float = SPECIFIC_HEAT

    @classmethod
    def at(cls, temperature: float) -> "FluidProperties":
        rho = kell_density(temperature)
        nu = kinematic_viscosity(temperature)
        # mu is stored as nu*rho so the record is self-consistent with the
        # Kell density used for every mass and pressure computation.
        return cls(
            temperature=temperature,
            density=rho,
            dynamic_viscosity=nu * rho,
            kinematic_viscosity=nu,
            specific_weight=rho * G,
        )


@dataclass(frozen=True)
class PipeSpec:
    length: float
    diameter: float
    roughness: Optional[float] = None
    minor_loss_coefficients: tuple[float, ...] = (ENTRY_LOSS_K, EXIT_LOSS_K)
    surface_temperature: float = 20.0
    convective_coefficient: float = 10.0
    material: Material = Material.PVC

    def __post_init__(self) -> None:
        object.__setattr__(self, "material", Material(self.material))
        object.__setattr__(
            self, "minor_loss_coefficients", tuple(float(k) for k in self.minor_loss_coefficients)
        )
        if self.roughness is None:
            if self.material is Material.CUSTOM:
                raise DomainError("a custom pipe material needs an explicit roughness")
            object.__setattr__(self, "roughness", DEFAULT_ROUGHNESS[self.material])
        if not self.length > 0:
            raise DomainError(f"pipe length must be positive, got {self.length}")
        if not self.diameter > 0:
            raise DomainError(f"pipe diameter must be positive, got {self.diameter}")
        if not self.roughness >= 0:
            raise DomainError(f"pipe roughness must be non-negative, got {self.roughness}")
        if not self.roughness < 0.1 * self.diameter:
            raise DomainError(
                f"pipe roughness {self.roughness} m must stay below a tenth of the diameter {self.diameter} m"
            )
        if any(not k >= 0 for k in self.minor_loss_coefficients):
            raise DomainError("minor loss coefficients must be non-negative")
        if not self.convective_coefficient >= 0:
            raise DomainError("convective coefficient must be non-negative")

    @property
    def area(self) -> float:
        return math.pi * self.diameter**2 / 4.0

    @property
    def perimeter(self) -> float:
        return math.pi * self.diameter

    @property
    def volume(self) -> float:
        return self.area * self.length

    @property
    def relative_roughness(self) -> float:
        return self.roughness / self.diameter

    @property
    def k_total(self) -> float:
        return math.fsum(self.minor_loss_coefficients)


@dataclass(frozen=True)
class FlowState:
    flow_rate: float
    velocity: float
    reynolds: float
    regime: Regime
    friction_factor: Optional[float]
    pipe_head_loss: float
    minor_head_loss: float

    @property
    def total_head_loss(self) -> float:
        return self.pipe_head_loss + self.minor_head_loss


STILL = FlowState(0.0, 0.0, 0.0, Regime.STILL, None, 0.0, 0.0)


def reynolds(velocity: float, diameter: float, kinematic_viscosity: float) -> float:
    if not diameter > 0 or not kinematic_viscosity > 0:
        raise DomainError("diameter and kinematic viscosity must be positive")
    if velocity < 0:
        raise DomainError(f"velocity must be non-negative, got {velocity}")
    return velocity * diameter / kinematic_viscosity


def classify_regime(re: float, policy: RegimePolicy = RegimePolicy.LENIENT) -> Regime:
    if re < 0:
        raise DomainError(f"Reynolds number must be non-negative, got {re}")
    if re == 0:
        return Regime.STILL
    if re < LAMINAR_LIMIT:
        return Regime.LAMINAR
    if re > TURBULENT_LIMIT:
        return Regime.TURBULENT
    if RegimePolicy(policy) is RegimePolicy.STRICT:
        raise RegimeConstraintError(re)
    log.debug("transitional flow at Re=%.1f treated as turbulent", re)
    return Regime.TRANSITIONAL


def swamee_jain(re: float, relative_roughness: float) -> float:
    """Explicit approximation to the Colebrook-White friction factor."""
    return 0.25 / math.log10(relative_roughness / 3.7 + 5.74 / re**0.9) ** 2


def colebrook_residual(f: float, re: float, relative_roughness: float) -> float:
    """Signed residual ``1/sqrt(f) + 2 log10(eps/3.71D + 2.51/(Re sqrt(f)))``."""
    s = math.sqrt(f)
    return 1.0 / s + 2.0 * math.log10(relative_roughness / 3.71 + 2.51 / (re * s))


def colebrook(re: float, relative_roughness: float) -> float:
    """Solve Colebrook-White for the Darcy friction factor.

    Fixed-point iteration on ``x = 1/sqrt(f)`` seeded with Swamee-Jain.  The
    map has derivative magnitude ``~0.87 * 2.51 / (Re * (...))`` which is far
    below one for any Re of practical interest, so convergence is fast.
    """
    if not re > 0:
        raise DomainError(f"Reynolds number must be positive, got {re}")
    if not 0.0 <= relative_roughness < 0.1:
        raise DomainError(f"relative roughness must lie in [0, 0.1), got {relative_roughness}")
    a = relative_roughness / 3.71
    b = 2.51 / re
    x = 1.0 / math.sqrt(swamee_jain(re, relative_roughness))
    residual = math.inf
    for _ in range(COLEBROOK_MAX_ITER):
        rhs = -2.0 * math.log10(a + b * x)
        residual = abs(x - rhs)
        if residual < COLEBROOK_TOL:
            return 1.0 / (x * x)
        x = rhs
    raise SolverError(f"Colebrook-White did not converge at Re={re}, eps/D={relative_roughness}", residual)


def friction_factor(re: float, relative_roughness: float) -> float:
    """Darcy friction factor: ``64/Re`` below the laminar limit, Colebrook-White above."""
    if not re > 0:
        raise DomainError(f"Reynolds number must be positive, got {re}")
    if not 0.0 <= relative_roughness < 0.1:
        raise DomainError(f"relative roughness must lie in [0, 0.1), got {relative_roughness}")
    if re < LAMINAR_LIMIT:
        return 64.0 / re
    return colebrook(re, relative_roughness)


def pipe_head_loss(f: float, pipe: PipeSpec, velocity: float) -> float:
    if not f > 0:
        raise DomainError(f"friction factor must be positive, got {f}")
    if velocity < 0:
        raise DomainError(f"velocity must be non-negative, got {velocity}")
    return f * (pipe.length / pipe.diameter) * velocity**2 / (2.0 * G)


def minor_head_loss(k_total: float, velocity: float) -> float:
    if k_total < 0 or velocity < 0:
        raise DomainError("loss coefficient and velocity must be non-negative")
    return k_total * velocity**2 / (2.0 * G)


def elevation_pressure(density: float, water_level: float) -> float:
    """Gauge pressure (Pa) at the bed of a water column open to the atmosphere."""
    if not density > 0:
        raise DomainError(f"density must be positive, got {density}")
    if water_level < 0:
        raise DomainError(f"water level must be non-negative, got {water_level}")
    return density * G * water_level


def flow_state(
    flow_rate: float,
    pipe: PipeSpec,
    fluid: FluidProperties,
    extra_k: float = 0.0,
    policy: RegimePolicy = RegimePolicy.LENIENT,
    friction: Optional[float] = None,
) -> FlowState:
    """Diagnostics for a pipe carrying ``flow_rate``.

    ``friction`` overrides the friction factor; the gravity solver uses it
    when the energy balance pins the flow at the laminar limit.
    """
    if flow_rate < 0:
        raise DomainError(f"flow rate must be non-negative, got {flow_rate}")
    if flow_rate == 0:
        return STILL
    v = flow_rate / pipe.area
    re = reynolds(v, pipe.diameter, fluid.kinematic_viscosity)
    regime = classify_regime(re, policy)
    f = friction if friction is not None else friction_factor(re, pipe.relative_roughness)
    k = pipe.k_total + extra_k
    return FlowState(
        flow_rate=flow_rate,
        velocity=v,
        reynolds=re,
        regime=regime,
        friction_factor=f,
        pipe_head_loss=pipe_head_loss(f, pipe, v),
        minor_head_loss=minor_head_loss(k, v),
    )


def _fixed_point_velocity(
    head: float, pipe: PipeSpec, nu: float, k: float, friction: Callable[[float, float], float]
) -> float:
    ld = pipe.length / pipe.diameter
    rr = pipe.relative_roughness
    v = math.sqrt(2.0 * G * head / (0.02 * ld + k))
    delta = math.inf
    for _ in range(GRAVITY_MAX_ITER):
        f = friction(v * pipe.diameter / nu, rr)
        v_new = math.sqrt(2.0 * G * head / (f * ld + k))
        delta = abs(v_new - v)
        v = v_new
        if delta < GRAVITY_TOL:
            return v
    raise SolverError(f"gravity flow solve did not converge for head {head} m", delta)


def gravity_velocity(
    head: float,
    pipe: PipeSpec,
    fluid: FluidProperties,
    extra_k: float = 0.0,
    policy: RegimePolicy = RegimePolicy.LENIENT,
    friction: Optional[Callable[[float, float], float]] = None,
) -> FlowState:
    """Velocity that dissipates a driving head ``head`` through friction and fittings.

    Solves ``H = (f(v) L/D + sum K) v^2 / 2g``.  With the default piecewise
    friction law the energy curve jumps upward at the laminar limit, so the
    turbulent branch is tried first, then the laminar branch (closed form),
    and a head falling inside the jump pins the flow at ``Re = 2300`` with the
    friction factor that closes the balance.  ``friction`` replaces the
    friction law altogether (used for manufactured-solution tests).
    """
    if not math.isfinite(head):
        raise DomainError(f"head difference must be finite, got {head}")
    if head <= 0:
        return STILL
    nu = fluid.kinematic_viscosity
    k = pipe.k_total + extra_k
    if friction is not None:
        v = _fixed_point_velocity(head, pipe, nu, k, friction)
        f = friction(v * pipe.diameter / nu, pipe.relative_roughness)
        return flow_state(v * pipe.area, pipe, fluid, extra_k, policy, friction=f)

    # Re is floored at the laminar limit while iterating: Colebrook has no root
    # far below it, and any consistent turbulent solution lies above it anyway.
    v = _fixed_point_velocity(head, pipe, nu, k, lambda re, rr: colebrook(max(re, LAMINAR_LIMIT), rr))
    if v * pipe.diameter / nu >= LAMINAR_LIMIT:
        return flow_state(v * pipe.area, pipe, fluid, extra_k, policy)

    # laminar: H = b v + a v^2
    a = k / (2.0 * G)
    b = 64.0 * nu * pipe.length / (2.0 * G * pipe.diameter**2)
    v = 2.0 * head / (b + math.sqrt(b * b + 4.0 * a * head))
    if v * pipe.diameter / nu < LAMINAR_LIMIT:
        return flow_state(v * pipe.area, pipe, fluid, extra_k, policy)

    v = LAMINAR_LIMIT * nu / pipe.diameter
    f = (2.0 * G * head / v**2 - k) * pipe.diameter / pipe.length
    return flow_state(v * pipe.area, pipe, fluid, extra_k, policy, friction=f)
