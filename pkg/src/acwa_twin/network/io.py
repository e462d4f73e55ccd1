"""Reading and writing scenario documents.

Two surface forms are accepted:

* the *flat* form: a key/value document with string values and the exact
  field names of the testbed's simulator input file (``"Tank 1 Length"``...),
  optionally without the enclosing braces.  It always yields a two-tank,
  one-pump scenario.  Unitless numbers follow the input file's conventions:
  metres for geometry, seconds for time, **litres per second** for
  ``Pump Flow Rate`` and **millimetres** for ``Pipe Roughness``.
* the *extended* form: a JSON object with ``simulation``, ``nodes``,
  ``links``, ``constituents`` and ``reactions`` sections in which every
  dimensioned quantity carries a unit suffix (``"3.5 L/s"``, ``"0.02 mm"``).
"""

from __future__ import annotations

import hashlib
import json
import re
from pathlib import Path
from typing import Any, Optional

from ..errors import AcwaError, ScenarioError
from ..hydro import DEFAULT_ROUGHNESS, Material, PipeSpec, RegimePolicy
from ..quality import ConstituentVector, ReactionParams
from ..units import factor, format_quantity, split_quantity
from .model import (
    Gravity,
    LinkSpec,
    OutputSchema,
    PositiveDisplacementPump,
    Scenario,
    TankShape,
    TankSpec,
)

FLAT_FIELDS = (
    "Tank 1 Type",
    "Tank 1 Length",
    "Tank 1 Width",
    "Tank 1 Height",
    "Tank 1 Diameter",
    "Tank 2 Type",
    "Tank 2 Length",
    "Tank 2 Width",
    "Tank 2 Height",
    "Tank 2 Diameter",
    "Pipe Diameter",
    "Pipe Length",
    "Pipe Material",
    "Pipe Roughness",
    "Pump Type",
    "Tank 1 Initial Water Level",
    "Tank 2 Initial Water Level",
    "Water Temperature",
    "Air Temperature",
    "Kinematic Viscosity",
    "Density",
    "Water pH",
    "Nitrate Concentration",
    "BOD",
    "DO",
    "NaOH Concentration",
    "Simulation Time",
    "Pump Flow Rate",
    "Unique ID",
)

FLAT_LINK_ID = "Pipe"
_NUMBER = re.compile(r"^[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?$")

CANONICAL_DOCUMENT = """\
"Tank 1 Type": "Rectangular",

"Tank 1 Length": "0.5",
 "Tank 1 Width": "0.3",
 "Tank 1 Height": "0.3",
 "Tank 1 Diameter": "",
 "Tank 2 Type": "Rectangular",
 "Tank 2 Length": "0.5",
 "Tank 2 Width": "0.3",
 "Tank 2 Height": "0.3",
 "Tank 2 Diameter": "",
 "Pipe Diameter": "0.1",
 "Pipe Length": "3",
 "Pipe Material": "PVC",
 "Pipe Roughness": 0.02,
 "Pump Type": "Positive Displacement",
 "Tank 1 Initial Water Level": "0.2",
 "Tank 2 Initial Water Level": "0",
 "Water Temperature": "26",
 "Air Temperature": "20",
 "Kinematic Viscosity": 0.63,
 "Density": 981.8,
 "Water pH": "7.00",
 "Nitrate Concentration": "10",
 "BOD": "",
 "DO": "",
 "NaOH Concentration": "",
 "Simulation Time": "300",
 "Pump Flow Rate": "3.5",
 "Unique ID": "20230916205552_1A67EF"
"""


def _load_json(document: str) -> dict[str, Any]:
    text = document.strip()
    if not text.startswith("{"):
        text = "{" + text.rstrip(",") + "}"
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError([f"scenario is not valid JSON: {exc.msg} (line {exc.lineno}, column {exc.colno})"])
    if not isinstance(data, dict):
        raise ScenarioError(["scenario document must be a key/value mapping"])
    return data


def parse_scenario(document: str) -> Scenario:
    data = _load_json(document)
    if "nodes" in data or "links" in data:
        return _parse_extended(data)
    return _parse_flat(data, document)


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError([f"cannot read scenario file {path}: {exc.strerror}"])
    return parse_scenario(text)


# -- flat ------------------------------------------------------------------


class _FlatReader:
    def __init__(self, data: dict[str, Any], document: str) -> None:
        self.data = data
        self.lines = document.splitlines()
        self.problems: list[str] = []
        self.missing: list[str] = []

    def line_of(self, name: str) -> Optional[int]:
        needle = f'"{name}"'
        for i, line in enumerate(self.lines, start=1):
            if needle in line:
                return i
        return None

    def raw(self, name: str) -> Any:
        value = self.data.get(name)
        if value is None or (isinstance(value, str) and not value.strip()):
            return None
        return value

    def text(self, name: str, default: Optional[str] = None, required: bool = False) -> Optional[str]:
        value = self.raw(name)
        if value is None:
            if required:
                self.missing.append(name)
            return default
        return str(value).strip()

    def number(self, name: str, default: Optional[float] = None, required: bool = False) -> Optional[float]:
        value = self.raw(name)
        if value is None:
            if required:
                self.missing.append(name)
            return default
        if isinstance(value, bool):
            ok = False
        elif isinstance(value, (int, float)):
            return float(value)
        else:
            ok = bool(_NUMBER.match(str(value).strip()))
        if not ok:
            line = self.line_of(name)
            where = f" (line {line})" if line else ""
            self.problems.append(f"malformed number in field {name!r}{where}: {value!r}")
            return default
        return float(str(value).strip())


def _flat_tank(r: _FlatReader, n: int, reservoir: bool) -> Optional[TankSpec]:
    prefix = f"Tank {n}"
    kind = r.text(f"{prefix} Type", required=True)
    height = r.number(f"{prefix} Height", required=True)
    level = r.number(f"{prefix} Initial Water Level", default=0.0)
    if kind is None:
        return None
    try:
        shape = TankShape.parse(kind)
    except ValueError as exc:
        r.problems.append(f"field {prefix + ' Type'!r}: {exc}")
        return None
    if shape is TankShape.RECTANGULAR:
        length = r.number(f"{prefix} Length", required=True)
        width = r.number(f"{prefix} Width", required=True)
        if r.raw(f"{prefix} Diameter") is not None:
            r.problems.append(f"field {prefix + ' Diameter'!r} must be blank for a rectangular tank")
        dims = dict(length=length, width=width)
    else:
        diameter = r.number(f"{prefix} Diameter", required=True)
        for side in ("Length", "Width"):
            if r.raw(f"{prefix} {side}") is not None:
                r.problems.append(f"field {prefix + ' ' + side!r} must be blank for a cylindrical tank")
        dims = dict(diameter=diameter)
    if height is None or any(v is None for v in dims.values()):
        return None
    return TankSpec(shape=shape, height=height, initial_water_level=level, reservoir=reservoir, **dims)


def _parse_flat(data: dict[str, Any], document: str) -> Scenario:
    r = _FlatReader(data, document)
    unknown = [k for k in data if k not in FLAT_FIELDS]
    for name in unknown:
        r.problems.append(f"unknown field {name!r}")

    tank1 = _flat_tank(r, 1, reservoir=True)
    tank2 = _flat_tank(r, 2, reservoir=False)
    diameter = r.number("Pipe Diameter", required=True)
    length = r.number("Pipe Length", required=True)
    duration = r.number("Simulation Time", required=True)

    material_text = r.text("Pipe Material", default="PVC")
    try:
        material = Material.parse(material_text)
    except ValueError as exc:
        r.problems.append(f"field 'Pipe Material': {exc}")
        material = Material.CUSTOM
    roughness_mm = r.number("Pipe Roughness")
    if roughness_mm is None and material is Material.CUSTOM:
        r.missing.append("Pipe Roughness")

    pump_type = r.text("Pump Type", default="Positive Displacement")
    gravity = pump_type.lower() in ("gravity", "none")
    if not gravity and pump_type.lower().replace("-", " ") != "positive displacement":
        r.problems.append(f"field 'Pump Type': unsupported pump type {pump_type!r}")
    flow_lps = r.number("Pump Flow Rate", required=not gravity)

    water_t = r.number("Water Temperature", default=20.0)
    air_t = r.number("Air Temperature", default=water_t)
    # parsed for syntax only; both are recomputed from temperature
    r.number("Kinematic Viscosity")
    r.number("Density")
    ph = r.number("Water pH", default=7.0)
    nitrate = r.number("Nitrate Concentration", default=0.0)
    bod = r.number("BOD", default=0.0)
    do = r.number("DO")
    naoh = r.number("NaOH Concentration", default=0.0)
    unique_id = r.text("Unique ID")

    if r.missing:
        r.problems.insert(0, "missing mandatory fields: " + ", ".join(r.missing))
    if r.problems:
        raise ScenarioError(r.problems)

    try:
        roughness = roughness_mm * 1e-3 if roughness_mm is not None else DEFAULT_ROUGHNESS[material]
        pipe = PipeSpec(
            length=length,
            diameter=diameter,
            roughness=roughness,
            material=material,
            surface_temperature=air_t,
        )
        constituents = ConstituentVector.from_inputs(
            ph=ph, bod=bod, dissolved_oxygen=do, nitrate=nitrate, naoh=naoh, temperature=water_t
        )
        driver = Gravity() if gravity else PositiveDisplacementPump(rated_flow=flow_lps * 1e-3)
    except (AcwaError, ValueError) as exc:
        raise ScenarioError([str(exc)])
    if not unique_id:
        unique_id = hashlib.sha256(document.encode("utf-8")).hexdigest()[:16]
    return Scenario(
        nodes={"Tank 1": tank1, "Tank 2": tank2},
        links=(LinkSpec(FLAT_LINK_ID, "Tank 1", "Tank 2", pipe, driver),),
        initial_constituents=constituents,
        duration=duration,
        unique_id=unique_id,
        air_temperature=air_t,
    )


# -- extended --------------------------------------------------------------

_SECTIONS = {"format", "simulation", "nodes", "links", "constituents", "reactions"}
_SIM_KEYS = {
    "unique_id",
    "duration",
    "time_step",
    "output_schema",
    "rng_seed",
    "regime_policy",
    "max_dt",
    "air_temperature",
}
_NODE_KEYS = {"shape", "length", "width", "height", "diameter", "base_elevation", "initial_water_level", "reservoir"}
_LINK_KEYS = {"id", "source", "destination", "pipe", "driver", "valve_opening", "return"}
_PIPE_KEYS = {
    "length",
    "diameter",
    "roughness",
    "material",
    "minor_loss_coefficients",
    "surface_temperature",
    "convective_coefficient",
}
_CONSTITUENT_KEYS = {"ph", "net_strong_base", "bod", "dissolved_oxygen", "nitrate", "naoh", "temperature"}
_REACTION_UNITS = {
    "bod_decay_rate": "1/day",
    "reaeration_rate": "1/day",
    "nitrate_bulk_rate": "1/day",
    "wall_rate": "m/day",
    "tank_exchange_rate": "1/day",
}
_TEMPERATURE = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(degC|°C|C)\s*$")


class _ExtendedReader:
    def __init__(self) -> None:
        self.problems: list[str] = []

    def keys(self, where: str, obj: Any, allowed: set[str]) -> dict[str, Any]:
        if not isinstance(obj, dict):
            self.problems.append(f"{where} must be an object")
            return {}
        for key in obj:
            if key not in allowed:
                self.problems.append(f"unknown field {where}.{key}")
        return obj

    def quantity(self, where: str, obj: dict, key: str, unit: str, default: Any = ...) -> Optional[float]:
        if key not in obj or obj[key] is None:
            if default is ...:
                self.problems.append(f"missing mandatory field {where}.{key}")
                return None
            return default
        value = obj[key]
        if not isinstance(value, str):
            self.problems.append(f"field {where}.{key} needs an explicit unit suffix (e.g. '{value} {unit}')")
            return None
        try:
            magnitude, suffix = split_quantity(value)
            if not suffix:
                self.problems.append(f"field {where}.{key} needs an explicit unit suffix, got {value!r}")
                return None
            return magnitude * factor(suffix, unit)
        except ValueError as exc:
            self.problems.append(f"field {where}.{key}: {exc}")
            return None

    def temperature(self, where: str, obj: dict, key: str, default: Any = ...) -> Optional[float]:
        if key not in obj or obj[key] is None:
            if default is ...:
                self.problems.append(f"missing mandatory field {where}.{key}")
                return None
            return default
        match = _TEMPERATURE.match(str(obj[key]))
        if match is None:
            self.problems.append(f"field {where}.{key} must be a temperature in degC, got {obj[key]!r}")
            return None
        return float(match.group(1))

    def plain(self, where: str, obj: dict, key: str, kind: type, default: Any = ...) -> Any:
        if key not in obj or obj[key] is None:
            if default is ...:
                self.problems.append(f"missing mandatory field {where}.{key}")
            return None if default is ... else default
        value = obj[key]
        if kind is float and isinstance(value, (int, float)) and not isinstance(value, bool):
            return float(value)
        if not isinstance(value, kind) or (kind is int and isinstance(value, bool)):
            self.problems.append(f"field {where}.{key} must be of type {kind.__name__}, got {value!r}")
            return None
        return value


def _parse_extended(data: dict[str, Any]) -> Scenario:
    r = _ExtendedReader()
    r.keys("scenario", data, _SECTIONS)
    sim = r.keys("simulation", data.get("simulation", {}), _SIM_KEYS)
    duration = r.quantity("simulation", sim, "duration", "s")
    time_step = r.quantity("simulation", sim, "time_step", "s", default=1.0)
    max_dt = r.quantity("simulation", sim, "max_dt", "s", default=None)
    air_t = r.temperature("simulation", sim, "air_temperature", default=20.0)
    unique_id = r.plain("simulation", sim, "unique_id", str)
    rng_seed = r.plain("simulation", sim, "rng_seed", int, default=0)
    schema_text = r.plain("simulation", sim, "output_schema", str, default="Table4")
    policy_text = r.plain("simulation", sim, "regime_policy", str, default="lenient")
    try:
        schema = OutputSchema.parse(schema_text or "Table4")
        policy = RegimePolicy((policy_text or "lenient").lower())
    except ValueError as exc:
        r.problems.append(f"simulation: {exc}")
        schema, policy = OutputSchema.TABLE4, RegimePolicy.LENIENT

    nodes: dict[str, TankSpec] = {}
    raw_nodes = data.get("nodes")
    if not isinstance(raw_nodes, dict) or not raw_nodes:
        r.problems.append("section 'nodes' must be a non-empty object")
        raw_nodes = {}
    for name, spec in raw_nodes.items():
        where = f"nodes.{name}"
        spec = r.keys(where, spec, _NODE_KEYS)
        try:
            shape = TankShape.parse(r.plain(where, spec, "shape", str, default="Rectangular"))
        except ValueError as exc:
            r.problems.append(f"{where}: {exc}")
            continue
        dims: dict[str, Optional[float]] = {}
        if shape is TankShape.RECTANGULAR:
            dims["length"] = r.quantity(where, spec, "length", "m")
            dims["width"] = r.quantity(where, spec, "width", "m")
            if spec.get("diameter") is not None:
                r.problems.append(f"field {where}.diameter must be absent for a rectangular tank")
        else:
            dims["diameter"] = r.quantity(where, spec, "diameter", "m")
            for side in ("length", "width"):
                if spec.get(side) is not None:
                    r.problems.append(f"field {where}.{side} must be absent for a cylindrical tank")
        height = r.quantity(where, spec, "height", "m")
        level = r.quantity(where, spec, "initial_water_level", "m", default=0.0)
        base = r.quantity(where, spec, "base_elevation", "m", default=0.0)
        reservoir = r.plain(where, spec, "reservoir", bool, default=False)
        if height is None or level is None or base is None or any(v is None for v in dims.values()):
            continue
        nodes[name] = TankSpec(
            shape=shape,
            height=height,
            initial_water_level=level,
            base_elevation=base,
            reservoir=bool(reservoir),
            **dims,
        )

    links: list[LinkSpec] = []
    raw_links = data.get("links", [])
    if not isinstance(raw_links, list):
        r.problems.append("section 'links' must be a list")
        raw_links = []
    for i, spec in enumerate(raw_links):
        where = f"links[{i}]"
        spec = r.keys(where, spec, _LINK_KEYS)
        link_id = r.plain(where, spec, "id", str, default=f"L{i + 1}")
        source = r.plain(where, spec, "source", str)
        dest = r.plain(where, spec, "destination", str)
        valve = r.plain(where, spec, "valve_opening", float, default=None)
        is_return = r.plain(where, spec, "return", bool, default=False)
        driver_spec = spec.get("driver", {"type": "gravity"})
        driver = None
        if isinstance(driver_spec, dict):
            r.keys(f"{where}.driver", driver_spec, {"type", "rated_flow", "unit"})
            kind = str(driver_spec.get("type", "gravity")).lower()
            if kind == "gravity":
                driver = Gravity()
            elif kind in ("pump", "positive displacement", "positive_displacement"):
                rated = r.quantity(f"{where}.driver", driver_spec, "rated_flow", "m3/s")
                unit = driver_spec.get("unit")
                if rated is not None:
                    driver = PositiveDisplacementPump(rated_flow=rated, unit=unit)
            else:
                r.problems.append(f"field {where}.driver.type: unknown driver {kind!r}")
        else:
            r.problems.append(f"field {where}.driver must be an object")
        pipe_spec = r.keys(f"{where}.pipe", spec.get("pipe", {}), _PIPE_KEYS)
        pw = f"{where}.pipe"
        p_len = r.quantity(pw, pipe_spec, "length", "m")
        p_dia = r.quantity(pw, pipe_spec, "diameter", "m")
        p_rough = r.quantity(pw, pipe_spec, "roughness", "m", default=None)
        p_ts = r.temperature(pw, pipe_spec, "surface_temperature", default=air_t)
        p_h = r.quantity(pw, pipe_spec, "convective_coefficient", "W/m2K", default=10.0)
        p_k = pipe_spec.get("minor_loss_coefficients", [0.5, 1.0])
        material_text = r.plain(pw, pipe_spec, "material", str, default="PVC")
        if None in (source, dest, p_len, p_dia, p_ts, p_h, driver):
            continue
        try:
            pipe = PipeSpec(
                length=p_len,
                diameter=p_dia,
                roughness=p_rough,
                minor_loss_coefficients=tuple(p_k),
                surface_temperature=p_ts,
                convective_coefficient=p_h,
                material=Material.parse(material_text),
            )
        except (AcwaError, ValueError, TypeError) as exc:
            r.problems.append(f"{pw}: {exc}")
            continue
        links.append(LinkSpec(link_id, source, dest, pipe, driver, valve, bool(is_return)))

    c = r.keys("constituents", data.get("constituents", {}), _CONSTITUENT_KEYS)
    temperature = r.temperature("constituents", c, "temperature", default=20.0)
    bod = r.quantity("constituents", c, "bod", "mg/L", default=0.0)
    do = r.quantity("constituents", c, "dissolved_oxygen", "mg/L", default=None)
    nitrate = r.quantity("constituents", c, "nitrate", "mg/L", default=0.0)
    naoh = r.quantity("constituents", c, "naoh", "mg/L", default=0.0)
    net = r.quantity("constituents", c, "net_strong_base", "mol/L", default=None)
    ph = r.plain("constituents", c, "ph", float, default=7.0)
    if "ph" in c and "net_strong_base" in c:
        r.problems.append("constituents: give either ph or net_strong_base, not both")

    rx = r.keys("reactions", data.get("reactions", {}), set(_REACTION_UNITS))
    rates = {}
    for key, unit in _REACTION_UNITS.items():
        rates[key] = r.quantity("reactions", rx, key, unit, default=getattr(ReactionParams(), key))

    if unique_id is not None and not unique_id.strip():
        r.problems.append("simulation.unique_id must be non-empty")
    if r.problems:
        raise ScenarioError(r.problems)

    try:
        if net is not None:
            constituents = ConstituentVector(
                bod=bod,
                dissolved_oxygen=do if do is not None else ConstituentVector.from_inputs(temperature=temperature).dissolved_oxygen,
                nitrate=nitrate,
                naoh=naoh,
                temperature=temperature,
                net_strong_base=net,
            )
            constituents.check()
        else:
            constituents = ConstituentVector.from_inputs(
                ph=ph, bod=bod, dissolved_oxygen=do, nitrate=nitrate, naoh=naoh, temperature=temperature
            )
        params = ReactionParams(**rates)
    except (AcwaError, ValueError) as exc:
        raise ScenarioError([str(exc)])
    return Scenario(
        nodes=nodes,
        links=tuple(links),
        initial_constituents=constituents,
        duration=duration,
        unique_id=unique_id,
        air_temperature=air_t,
        reaction_params=params,
        time_step=time_step,
        output_schema=schema,
        rng_seed=rng_seed,
        regime_policy=policy,
        max_dt=max_dt,
    )


def _q(value: float, unit: str) -> str:
    return format_quantity(float(value), unit)


def _t(value: float) -> str:
    return format_quantity(float(value), "degC")


def scenario_to_dict(s: Scenario) -> dict[str, Any]:
    """Extended-form representation; ``parse_scenario(json.dumps(...))`` restores ``s`` exactly."""
    nodes = {}
    for name, tank in s.nodes.items():
        entry: dict[str, Any] = {"shape": tank.shape.value}
        if tank.shape is TankShape.RECTANGULAR:
            entry["length"] = _q(tank.length, "m")
            entry["width"] = _q(tank.width, "m")
        else:
            entry["diameter"] = _q(tank.diameter, "m")
        entry["height"] = _q(tank.height, "m")
        entry["base_elevation"] = _q(tank.base_elevation, "m")
        entry["initial_water_level"] = _q(tank.initial_water_level, "m")
        entry["reservoir"] = tank.reservoir
        nodes[name] = entry
    links = []
    for link in s.links:
        if isinstance(link.driver, PositiveDisplacementPump):
            driver: dict[str, Any] = {"type": "pump", "rated_flow": _q(link.driver.rated_flow, "m3/s")}
            if link.driver.unit is not None:
                driver["unit"] = link.driver.unit
        else:
            driver = {"type": "gravity"}
        p = link.pipe
        links.append(
            {
                "id": link.id,
                "source": link.source,
                "destination": link.destination,
                "driver": driver,
                "valve_opening": link.valve_opening,
                "return": link.is_return,
                "pipe": {
                    "length": _q(p.length, "m"),
                    "diameter": _q(p.diameter, "m"),
                    "roughness": _q(p.roughness, "m"),
                    "material": p.material.value,
                    "minor_loss_coefficients": list(p.minor_loss_coefficients),
                    "surface_temperature": _t(p.surface_temperature),
                    "convective_coefficient": _q(p.convective_coefficient, "W/m2K"),
                },
            }
        )
    c = s.initial_constituents
    sim: dict[str, Any] = {
        "unique_id": s.unique_id,
        "duration": _q(s.duration, "s"),
        "time_step": _q(s.time_step, "s"),
        "output_schema": s.output_schema.value,
        "rng_seed": s.rng_seed,
        "regime_policy": s.regime_policy.value,
        "air_temperature": _t(s.air_temperature),
    }
    if s.max_dt is not None:
        sim["max_dt"] = _q(s.max_dt, "s")
    return {
        "format": "acwa-twin/scenario",
        "simulation": sim,
        "nodes": nodes,
        "links": links,
        "constituents": {
            "temperature": _t(c.temperature),
            "net_strong_base": _q(c.net_strong_base, "mol/L"),
            "bod": _q(c.bod, "mg/L"),
            "dissolved_oxygen": _q(c.dissolved_oxygen, "mg/L"),
            "nitrate": _q(c.nitrate, "mg/L"),
            "naoh": _q(c.naoh, "mg/L"),
        },
        "reactions": {k: _q(getattr(s.reaction_params, k), u) for k, u in _REACTION_UNITS.items()},
    }


def serialize_scenario(s: Scenario) -> str:
    return json.dumps(scenario_to_dict(s), indent=2, ensure_ascii=False) + "\n"


def scenario_digest(s: Scenario) -> str:
    return hashlib.sha256(serialize_scenario(s).encode("utf-8")).hexdigest()
