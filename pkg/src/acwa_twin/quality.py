"""Water-quality state: plug-flow pipe transport, fully mixed tanks, reactions.

Concentrations are mg/L except ``net_strong_base`` (mol/L, signed).  The
only coupled species are pH with NaOH (through a strong acid/base charge
balance) and BOD with dissolved oxygen.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Optional, Sequence

from .errors import ContractViolation, DomainError
from .hydro import SPECIFIC_HEAT, PipeSpec, kell_density
from .units import NAOH_MOLAR_MASS

KW = 1e-14
SECONDS_PER_DAY = 86400.0
DO_HEADROOM = 1.05
EQUAL_TOL = 1e-12

_MASS_FIELDS = ("bod", "dissolved_oxygen", "nitrate", "naoh", "temperature", "net_strong_base")


def ph_from_base(net_strong_base: float) -> float:
    """pH of pure water carrying a net strong base (negative: strong acid) in mol/L."""
    cb = net_strong_base
    if not abs(cb) < 1.0:
        raise DomainError(f"net strong base must satisfy |C| < 1 mol/L, got {cb}")
    root = math.sqrt(cb * cb + 4.0 * KW)
    # pick the cancellation-free form of the positive root
    h = (root - cb) / 2.0 if cb <= 0 else 2.0 * KW / (cb + root)
    return -math.log10(h)


def base_from_ph(ph: float) -> float:
    if not 0.0 < ph < 14.0:
        raise DomainError(f"pH must lie in (0, 14), got {ph}")
    h = 10.0 ** (-ph)
    return KW / h - h


def naoh_to_molar(naoh_mg_per_l: float) -> float:
    return naoh_mg_per_l / (NAOH_MOLAR_MASS * 1000.0)


def do_saturation(temperature: float) -> float:
    """Dissolved-oxygen saturation in fresh water at one atmosphere, mg/L (Benson & Krause)."""
    if not 0.0 <= temperature <= 50.0:
        raise DomainError(f"temperature {temperature} degC outside the valid interval [0, 50] degC")
    tk = temperature + 273.15
    return math.exp(
        -139.34411
        + 1.575701e5 / tk
        - 6.642308e7 / tk**2
        + 1.243800e10 / tk**3
        - 8.621949e11 / tk**4
    )


@dataclass(frozen=True)
class ConstituentVector:
    bod: float = 0.0
    dissolved_oxygen: float = 0.0
    nitrate: float = 0.0
    naoh: float = 0.0
    temperature: float = 20.0
    net_strong_base: float = 0.0

    @classmethod
    def from_inputs(
        cls,
        *,
        ph: float = 7.0,
        bod: float = 0.0,
        dissolved_oxygen: Optional[float] = None,
        nitrate: float = 0.0,
        naoh: float = 0.0,
        temperature: float = 20.0,
    ) -> "ConstituentVector":
        """Build a vector from measured inputs; the water's pH and dosed NaOH add as strong base."""
        if dissolved_oxygen is None:
            dissolved_oxygen = do_saturation(temperature)
        vec = cls(
            bod=bod,
            dissolved_oxygen=dissolved_oxygen,
            nitrate=nitrate,
            naoh=naoh,
            temperature=temperature,
            net_strong_base=base_from_ph(ph) + naoh_to_molar(naoh),
        )
        vec.check()
        return vec

    @property
    def ph(self) -> float:
        return ph_from_base(self.net_strong_base)

    def check(self) -> None:
        for name in ("bod", "dissolved_oxygen", "nitrate", "naoh"):
            if getattr(self, name) < 0:
                raise DomainError(f"{name} must be non-negative, got {getattr(self, name)}")

    def isclose(self, other: "ConstituentVector", tol: float = EQUAL_TOL) -> bool:
        return all(
            math.isclose(getattr(self, n), getattr(other, n), rel_tol=tol, abs_tol=tol * 1e-3)
            for n in _MASS_FIELDS
        )


def blend(parts: Iterable[tuple[float, ConstituentVector]]) -> ConstituentVector:
    """Volume-weighted mean of ``(volume, vector)`` pairs."""
    parts = [(v, c) for v, c in parts if v > 0]
    if not parts:
        raise ContractViolation("cannot blend an empty set of parcels")
    if len(parts) == 1:
        return parts[0][1]
    total = math.fsum(v for v, _ in parts)
    return ConstituentVector(
        **{n: math.fsum(v * getattr(c, n) for v, c in parts) / total for n in _MASS_FIELDS}
    )


@dataclass(frozen=True)
class Parcel:
    volume: float
    constituents: ConstituentVector
    entered_at: float = 0.0

    def __post_init__(self) -> None:
        if not self.volume > 0:
            raise ContractViolation(f"parcel volume must be positive, got {self.volume}")


@dataclass(frozen=True)
class ReactionParams:
    bod_decay_rate: float = 0.23  # 1/day
    reaeration_rate: float = 0.4  # 1/day
    nitrate_bulk_rate: float = 0.0  # 1/day
    wall_rate: float = 0.0  # m/day
    tank_exchange_rate: float = 0.0  # 1/day, Newtonian relaxation toward air temperature

    def __post_init__(self) -> None:
        for name, value in vars(self).items():
            if not value >= 0:
                raise DomainError(f"{name} must be non-negative, got {value}")

    def pipe_rate(self, diameter: float) -> float:
        """First-order transit decay rate (1/day) for a full circular pipe."""
        return self.nitrate_bulk_rate + 4.0 * self.wall_rate / diameter


ZERO_RATES = ReactionParams(0.0, 0.0, 0.0, 0.0, 0.0)


def pipe_outlet_temperature(
    t_in: float, pipe: PipeSpec, mass_flow: float, specific_heat: float = SPECIFIC_HEAT
) -> float:
    """Exit temperature of water convecting with a pipe wall held at its surface temperature."""
    if not mass_flow > 0:
        raise ContractViolation("outlet temperature is undefined for a pipe with no flow")
    exponent = pipe.convective_coefficient * pipe.perimeter * pipe.length / (specific_heat * mass_flow)
    if exponent == 0.0:
        return t_in
    ts = pipe.surface_temperature
    return ts - (ts - t_in) * math.exp(-exponent)


def _transit(piece: Parcel, pipe: PipeSpec, params: ReactionParams, flow_rate: float, now: float) -> Parcel:
    c = piece.constituents
    rate = params.pipe_rate(pipe.diameter)
    nitrate = c.nitrate
    if rate > 0:
        tau_days = max(now - piece.entered_at, 0.0) / SECONDS_PER_DAY
        nitrate = c.nitrate * math.exp(-rate * tau_days)
    mass_flow = kell_density(c.temperature) * flow_rate
    temperature = pipe_outlet_temperature(c.temperature, pipe, mass_flow)
    if nitrate == c.nitrate and temperature == c.temperature:
        return piece
    return replace(piece, constituents=replace(c, nitrate=nitrate, temperature=temperature))


def advect(
    queue: Sequence[Parcel],
    inflow: Optional[Parcel],
    flow_rate: float,
    dt: float,
    pipe: PipeSpec,
    params: ReactionParams = ZERO_RATES,
    now: float = 0.0,
) -> tuple[tuple[Parcel, ...], Optional[Parcel]]:
    """Move one step of plug flow through a full pipe.

    ``queue[0]`` is the downstream (oldest) parcel.  ``inflow`` is pushed on
    the upstream end, the same volume leaves downstream, and the pieces that
    leave are decayed, heated or cooled, then blended into one delivered
    parcel.  ``now`` is the simulation time at the end of the step.
    """
    if flow_rate < 0:
        raise ContractViolation(f"flow rate must be non-negative, got {flow_rate}")
    if flow_rate == 0:
        return tuple(queue), None
    if inflow is None:
        raise ContractViolation("a flowing pipe needs an inflow parcel")
    expected = flow_rate * dt
    if abs(inflow.volume - expected) > 1e-12 * expected:
        raise ContractViolation(f"inflow volume {inflow.volume} does not match Q*dt = {expected}")

    parcels = list(queue)
    if parcels and parcels[-1].constituents.isclose(inflow.constituents) and (
        params.pipe_rate(pipe.diameter) == 0 or parcels[-1].entered_at == inflow.entered_at
    ):
        last = parcels[-1]
        merged = last.constituents
        if merged != inflow.constituents:
            merged = blend([(last.volume, merged), (inflow.volume, inflow.constituents)])
        parcels[-1] = Parcel(last.volume + inflow.volume, merged, last.entered_at)
    else:
        parcels.append(inflow)

    need = inflow.volume
    out: list[Parcel] = []
    i = 0
    while need > 1e-15 * expected and i < len(parcels):
        p = parcels[i]
        if p.volume <= need:
            out.append(p)
            need -= p.volume
            i += 1
        else:
            out.append(Parcel(need, p.constituents, p.entered_at))
            parcels[i] = Parcel(p.volume - need, p.constituents, p.entered_at)
            need = 0.0
    remaining = tuple(parcels[i:])

    pieces = [_transit(p, pipe, params, flow_rate, now) for p in out]
    volume = math.fsum(p.volume for p in pieces)
    entered = math.fsum(p.volume * p.entered_at for p in pieces) / volume
    delivered = Parcel(volume, blend((p.volume, p.constituents) for p in pieces), entered)
    return remaining, delivered


def mix_tank(tank_volume: float, tank: ConstituentVector, delivered: Optional[Parcel]) -> ConstituentVector:
    """Complete instantaneous mixing of a delivered parcel into a tank."""
    if tank_volume < 0:
        raise ContractViolation(f"tank volume must be non-negative, got {tank_volume}")
    if delivered is None:
        return tank
    if tank_volume + delivered.volume == 0:
        raise ContractViolation("mixture of zero total volume is undefined")
    if tank_volume == 0:
        return delivered.constituents
    return blend([(tank_volume, tank), (delivered.volume, delivered.constituents)])


def _decay_difference(k1: float, k2: float, t: float) -> float:
    """``(exp(-k1 t) - exp(-k2 t)) / (k2 - k1)``, stable as ``k2 -> k1``."""
    delta = k2 - k1
    if delta == 0.0:
        return t * math.exp(-k1 * t)
    return math.exp(-k1 * t) * -math.expm1(-delta * t) / delta


def react(
    c: ConstituentVector,
    params: ReactionParams,
    dt: float,
    air_temperature: Optional[float] = None,
) -> ConstituentVector:
    """Advance in-tank kinetics by ``dt`` seconds with exact exponential updates.

    BOD decays first order; the oxygen deficit follows the linear
    Streeter-Phelps equation, integrated exactly over the step at fixed
    temperature.  NaOH and the strong-base balance are conserved.
    """
    if not dt > 0:
        raise DomainError(f"time step must be positive, got {dt}")
    t = dt / SECONDS_PER_DAY
    kd, ka = params.bod_decay_rate, params.reaeration_rate
    sat = do_saturation(c.temperature)

    bod = c.bod * math.exp(-kd * t)
    do = (
        c.dissolved_oxygen * math.exp(-ka * t)
        + sat * -math.expm1(-ka * t)
        - kd * c.bod * _decay_difference(kd, ka, t)
    )
    # the cap only guards rounding; it must not strip oxygen from water that is already supersaturated
    do = min(max(do, 0.0), max(DO_HEADROOM * sat, c.dissolved_oxygen))
    nitrate = c.nitrate * math.exp(-params.nitrate_bulk_rate * t)

    temperature = c.temperature
    if params.tank_exchange_rate > 0 and air_temperature is not None:
        temperature = air_temperature + (c.temperature - air_temperature) * math.exp(
            -params.tank_exchange_rate * t
        )
    if (bod, do, nitrate, temperature) == (c.bod, c.dissolved_oxygen, c.nitrate, c.temperature):
        return c
    return replace(c, bod=bod, dissolved_oxygen=do, nitrate=nitrate, temperature=temperature)
