from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Union

from ..hydro import PipeSpec, RegimePolicy, valve_loss_coefficient
from ..quality import ConstituentVector, ReactionParams


class TankShape(str, enum.Enum):
    RECTANGULAR = "Rectangular"
    CYLINDRICAL = "Cylindrical"

    @classmethod
    def parse(cls, text: str) -> "TankShape":
        for member in cls:
            if member.value.lower() == text.strip().lower():
                return member
        raise ValueError(f"unknown tank type {text!r} (expected Rectangular or Cylindrical)")


class OutputSchema(str, enum.Enum):
    TABLE4 = "Table4"
    SI = "Seconds-SI"

    @classmethod
    def parse(cls, text: str) -> "OutputSchema":
        key = text.strip().lower()
        if key in ("table4", "table 4"):
            return cls.TABLE4
        if key in ("seconds-si", "si"):
            return cls.SI
        raise ValueError(f"unknown output schema {text!r}")


@dataclass(frozen=True)
class TankSpec:
    """Geometry and initial fill of one tank.

    Dimension checks live in :func:`validate` so that a bad scenario yields a
    report instead of an exception at construction.
    """

    shape: TankShape
    height: float
    initial_water_level: float = 0.0
    length: Optional[float] = None
    width: Optional[float] = None
    diameter: Optional[float] = None
    base_elevation: float = 0.0
    reservoir: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "shape", TankShape(self.shape))

    @property
    def area(self) -> float:
        if self.shape is TankShape.RECTANGULAR:
            return (self.length or 0.0) * (self.width or 0.0)
        return math.pi * (self.diameter or 0.0) ** 2 / 4.0

    @property
    def capacity(self) -> float:
        return self.area * self.height


@dataclass(frozen=True)
class PositiveDisplacementPump:
    """Ideal constant-flow pump; ``unit`` groups links driven by one physical pump."""

    rated_flow: float
    unit: Optional[str] = None


@dataclass(frozen=True)
class Gravity:
    pass


Driver = Union[PositiveDisplacementPump, Gravity]


@dataclass(frozen=True)
class LinkSpec:
    id: str
    source: str
    destination: str
    pipe: PipeSpec
    driver: Driver = field(default_factory=Gravity)
    valve_opening: Optional[float] = None  # None: no valve fitted
    is_return: bool = False

    @property
    def pumped(self) -> bool:
        return isinstance(self.driver, PositiveDisplacementPump)

    @property
    def valve_closed(self) -> bool:
        return self.valve_opening is not None and self.valve_opening == 0.0

    @property
    def extra_k(self) -> float:
        if self.valve_opening is None or self.valve_opening == 0.0:
            return 0.0
        return valve_loss_coefficient(self.valve_opening)


@dataclass(frozen=True)
class Scenario:
    nodes: dict[str, TankSpec]
    links: tuple[LinkSpec, ...]
    initial_constituents: ConstituentVector
    duration: float
    unique_id: str
    air_temperature: float = 20.0
    reaction_params: ReactionParams = field(default_factory=ReactionParams)
    time_step: float = 1.0
    output_schema: OutputSchema = OutputSchema.TABLE4
    rng_seed: int = 0
    regime_policy: RegimePolicy = RegimePolicy.LENIENT
    max_dt: Optional[float] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "links", tuple(self.links))
        object.__setattr__(self, "output_schema", OutputSchema(self.output_schema))
        object.__setattr__(self, "regime_policy", RegimePolicy(self.regime_policy))

    @property
    def reservoir(self) -> Optional[str]:
        for name, tank in self.nodes.items():
            if tank.reservoir:
                return name
        return None

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.time_step))

    def link(self, link_id: str) -> LinkSpec:
        for link in self.links:
            if link.id == link_id:
                return link
        raise KeyError(link_id)

    def pump_units(self) -> set[str]:
        """Distinct physical pumps (links sharing a ``unit`` count once)."""
        units = set()
        for link in self.links:
            if link.pumped:
                units.add(link.driver.unit or link.id)
        return units
