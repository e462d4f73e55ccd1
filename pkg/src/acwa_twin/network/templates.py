"""Pre-wired scenarios for the testbed's physical topologies.

Tank dimensions are the printed inch measurements converted to metres.  The
reservoir is modeled as a 35-gallon drum (20 in diameter, 28 in tall).
Pipes are 1/2 in PVC/CPVC except the bus main (3/4 in CPVC).
"""

from __future__ import annotations

import enum

from ..hydro import Material, PipeSpec
from ..quality import ConstituentVector
from ..units import M3_PER_US_GALLON, M_PER_INCH
from .model import Gravity, LinkSpec, PositiveDisplacementPump, Scenario, TankShape, TankSpec


class TemplateKind(str, enum.Enum):
    LINE = "line"
    BUS = "bus"
    STAR = "star"
    TWO_TANK = "twotank"


# nominal capacities in US gallons, as rated by the manufacturer
NOMINAL_GALLONS = {
    "line": 10.0,
    "bus": 5.5,
    "star-central": 14.0,
    "star-satellite": 3.0,
    "reservoir": 35.0,
}

PUMP_FLOW = 1.0 * M3_PER_US_GALLON / 60.0  # 1 gal/min diaphragm pump
HALF_INCH = 0.5 * M_PER_INCH
THREE_QUARTER_INCH = 0.75 * M_PER_INCH


def _inches(*dims: float) -> tuple[float, ...]:
    return tuple(d * M_PER_INCH for d in dims)


def _box(length_in: float, width_in: float, height_in: float, level: float = 0.0) -> TankSpec:
    length, width, height = _inches(length_in, width_in, height_in)
    return TankSpec(TankShape.RECTANGULAR, height=height, initial_water_level=level, length=length, width=width)


def _reservoir() -> TankSpec:
    diameter, height = _inches(20.0, 28.0)
    return TankSpec(
        TankShape.CYLINDRICAL, height=height, initial_water_level=0.6, diameter=diameter, reservoir=True
    )


def _pipe(diameter: float, length: float, material: Material) -> PipeSpec:
    return PipeSpec(length=length, diameter=diameter, material=material)


def _default_constituents() -> ConstituentVector:
    return ConstituentVector.from_inputs(ph=7.0, bod=2.0, nitrate=10.0, naoh=0.0, temperature=20.0)


def _pump(q: float, unit: str) -> PositiveDisplacementPump:
    return PositiveDisplacementPump(rated_flow=q, unit=unit)


def line() -> Scenario:
    """Reservoir -> T1 -> T2 -> T3 -> reservoir; feed and return pumps, valved gravity links between tanks."""
    pipe = _pipe(HALF_INCH, 1.0, Material.PVC)
    nodes = {"Reservoir": _reservoir()}
    for i in (1, 2, 3):
        nodes[f"T{i}"] = _box(20.25, 12.625, 10.5)
    links = (
        LinkSpec("feed", "Reservoir", "T1", pipe, _pump(PUMP_FLOW, "P1")),
        LinkSpec("T1-T2", "T1", "T2", pipe, Gravity(), valve_opening=1.0),
        LinkSpec("T2-T3", "T2", "T3", pipe, Gravity(), valve_opening=1.0),
        LinkSpec("return", "T3", "Reservoir", pipe, _pump(PUMP_FLOW, "P2"), is_return=True),
    )
    return Scenario(nodes, links, _default_constituents(), duration=300.0, unique_id="template-line")


def bus() -> Scenario:
    """A main line from the reservoir branching to four tanks; one pump feeds the main, one returns."""
    pipe = _pipe(THREE_QUARTER_INCH, 1.0, Material.CPVC)
    nodes = {"Reservoir": _reservoir()}
    links = []
    for i in (1, 2, 3, 4):
        nodes[f"T{i}"] = _box(16.25, 8.375, 10.5)
        links.append(LinkSpec(f"main-T{i}", "Reservoir", f"T{i}", pipe, _pump(PUMP_FLOW / 4, "P1"), valve_opening=1.0))
    for i in (1, 2, 3, 4):
        links.append(
            LinkSpec(f"T{i}-return", f"T{i}", "Reservoir", pipe, _pump(PUMP_FLOW / 4, "P2"), is_return=True)
        )
    return Scenario(nodes, tuple(links), _default_constituents(), duration=300.0, unique_id="template-bus")


def star() -> Scenario:
    """Reservoir feeds a central cube; two pumps each serve two satellites; a fourth returns all four."""
    pipe = _pipe(HALF_INCH, 1.0, Material.CPVC)
    nodes = {"Reservoir": _reservoir(), "Central": _box(15.25, 15.25, 15.25)}
    links = [LinkSpec("feed", "Reservoir", "Central", pipe, _pump(PUMP_FLOW, "P1"))]
    for i in (1, 2, 3, 4):
        nodes[f"S{i}"] = _box(9.25, 9.25, 9.25)
    for i, unit in ((1, "P2"), (2, "P2"), (3, "P3"), (4, "P3")):
        links.append(
            LinkSpec(f"Central-S{i}", "Central", f"S{i}", pipe, _pump(PUMP_FLOW / 2, unit), valve_opening=1.0)
        )
    for i in (1, 2, 3, 4):
        links.append(
            LinkSpec(f"S{i}-return", f"S{i}", "Reservoir", pipe, _pump(PUMP_FLOW / 4, "P4"), is_return=True)
        )
    return Scenario(nodes, tuple(links), _default_constituents(), duration=300.0, unique_id="template-star")


def two_tank() -> Scenario:
    """The canonical two-tank experiment of the simulator's example input file."""
    tank1 = TankSpec(TankShape.RECTANGULAR, height=0.3, initial_water_level=0.2, length=0.5, width=0.3, reservoir=True)
    tank2 = TankSpec(TankShape.RECTANGULAR, height=0.3, initial_water_level=0.0, length=0.5, width=0.3)
    pipe = PipeSpec(length=3.0, diameter=0.1, roughness=0.02 * 1e-3, material=Material.PVC, surface_temperature=20.0)
    constituents = ConstituentVector.from_inputs(ph=7.0, nitrate=10.0, temperature=26.0)
    return Scenario(
        nodes={"Tank 1": tank1, "Tank 2": tank2},
        links=(LinkSpec("Pipe", "Tank 1", "Tank 2", pipe, PositiveDisplacementPump(rated_flow=3.5 * 1e-3)),),
        initial_constituents=constituents,
        duration=300.0,
        unique_id="20230916205552_1A67EF",
        air_temperature=20.0,
    )


_BUILDERS = {
    TemplateKind.LINE: line,
    TemplateKind.BUS: bus,
    TemplateKind.STAR: star,
    TemplateKind.TWO_TANK: two_tank,
}


def topology_template(kind: TemplateKind | str) -> Scenario:
    if not isinstance(kind, TemplateKind):
        kind = TemplateKind(kind.lower())
    return _BUILDERS[kind]()
