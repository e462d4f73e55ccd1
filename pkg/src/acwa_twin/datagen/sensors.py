"""Sensor bindings and emission of sensor-style records from simulation output."""

from __future__ import annotations

import datetime as _dt
import hashlib
import math
import random
import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Optional, Sequence

from ..errors import ConfigError
from ..quality import do_saturation
from ..units import factor

INTERVALS = (1, 5, 30)
NODE_SELECTORS = {
    "water_level": "m",
    "pressure": "Pa",
    "temperature": "degC",
    "ph": "",
    "do": "mg/L",
    "do_saturation": "percent",
    "nitrate": "mg/L",
    "ec_placeholder": "",
    "turbidity_placeholder": "",
}
LINK_SELECTORS = {"flow": "m3/s"}
PLACEHOLDERS = ("ec_placeholder", "turbidity_placeholder")

# field names as the lab's gateway reports them
DEFAULT_FIELDS = {
    "water_level": "sensor_data.Level",
    "pressure": "sensor_data.Pressure",
    "flow": "sensor_data.Flow",
    "temperature": "sensor_data.Temp",
    "ph": "sensor_data.pH",
    "do": "sensor_data.DO",
    "do_saturation": "sensor_data.DO_Saturation",
    "ec_placeholder": "sensor_data.EC",
    "nitrate": "sensor_data.Nitrate",
    "turbidity_placeholder": "sensor_data.Turbidity",
}

BATTERY_START_V = 3.29
BATTERY_DECAY_V_PER_S = 1e-7
BATTERY_PERCENT_START = 99.64
BATTERY_PERCENT_DECAY_PER_S = 3e-6
RSSI = 40

_STAMP = re.compile(r"^(\d{14})")


@dataclass(frozen=True)
class Channel:
    selector: str
    field: str = ""
    unit: Optional[str] = None  # target unit; None keeps the simulation unit
    noise: Optional[float] = None  # overrides the noise floor for this field
    constant: float = 0.0  # value reported by placeholder selectors

    def __post_init__(self):
        if not self.field:
            object.__setattr__(self, "field", DEFAULT_FIELDS.get(self.selector, f"sensor_data.{self.selector}"))


@dataclass(frozen=True)
class SensorBinding:
    sensor_id: str
    source: str
    channels: tuple[Channel, ...]
    interval: int = 5
    sensor_name: str = ""
    sensor_type: int = 0

    @property
    def fields(self) -> tuple[str, ...]:
        return tuple(c.field for c in self.channels)


@dataclass(frozen=True)
class SensorRecord:
    timestamp: int  # epoch ms
    time: float  # simulation seconds
    sensor_id: str
    sensor_name: str
    sensor_type: int
    readings: dict[str, float]
    battery: float
    battery_percent: float
    rssi: int
    counter: int
    attacked: bool = False
    noise: dict[str, float] = field(default_factory=dict, compare=False, repr=False)


def epoch_ms_from_unique_id(unique_id: str) -> int:
    """Base timestamp encoded in ids such as ``20230916205552_1A67EF`` (UTC); 0 otherwise."""
    match = _STAMP.match(unique_id or "")
    if not match:
        return 0
    try:
        stamp = _dt.datetime.strptime(match.group(1), "%Y%m%d%H%M%S").replace(tzinfo=_dt.timezone.utc)
    except ValueError:
        return 0
    return int(stamp.timestamp()) * 1000


def substream(seed: int, *labels: str) -> random.Random:
    """Independent deterministic generator for ``(seed, labels...)``."""
    digest = hashlib.sha256(":".join([str(int(seed)), *labels]).encode()).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def _conversion(channel: Channel) -> tuple[float, list[str]]:
    base = {**NODE_SELECTORS, **LINK_SELECTORS}[channel.selector]
    if channel.unit is None or channel.unit == base:
        return 1.0, []
    if channel.selector == "temperature" or base in ("", "percent"):
        return 1.0, [f"selector {channel.selector!r} does not support unit conversion to {channel.unit!r}"]
    try:
        return factor(base, channel.unit), []
    except ValueError as exc:
        return 1.0, [str(exc)]


def check_bindings(
    bindings: Sequence[SensorBinding], nodes: Iterable[str], links: Iterable[str], time_step: float = 1.0
) -> list[str]:
    """Every problem with ``bindings`` against the given node and link ids."""
    nodes, links = set(nodes), set(links)
    problems = []
    seen = set()
    for b in bindings:
        tag = f"sensor {b.sensor_id}"
        if b.sensor_id in seen:
            problems.append(f"{tag}: duplicate sensor_id")
        seen.add(b.sensor_id)
        if b.interval not in INTERVALS:
            problems.append(f"{tag}: interval {b.interval} s not in {INTERVALS}")
        elif not math.isclose(round(b.interval / time_step) * time_step, b.interval, rel_tol=1e-9):
            problems.append(f"{tag}: interval {b.interval} s is not a multiple of the time step {time_step} s")
        if not b.channels:
            problems.append(f"{tag}: no channels")
        fields = [c.field for c in b.channels]
        for dup in sorted({f for f in fields if fields.count(f) > 1}):
            problems.append(f"{tag}: field {dup!r} bound twice")
        for c in b.channels:
            if c.selector in LINK_SELECTORS:
                if b.source not in links:
                    problems.append(f"{tag}: selector {c.selector!r} needs a link, {b.source!r} is not one")
            elif c.selector in NODE_SELECTORS:
                if b.source not in nodes:
                    problems.append(f"{tag}: selector {c.selector!r} needs a node, {b.source!r} is not one")
            else:
                problems.append(f"{tag}: unknown selector {c.selector!r}")
                continue
            if c.noise is not None and not c.noise >= 0:
                problems.append(f"{tag}: noise for {c.field!r} must be non-negative")
            problems.extend(f"{tag}: {p}" for p in _conversion(c)[1])
    return problems


def _raw(record, binding: SensorBinding, channel: Channel) -> float:
    sel, src = channel.selector, binding.source
    if sel == "flow":
        return record.flows[src]
    if sel == "water_level":
        return record.levels[src]
    if sel == "pressure":
        return record.pressures[src]
    if sel in PLACEHOLDERS:
        return channel.constant
    c = record.constituents[src]
    if sel == "temperature":
        return c.temperature
    if sel == "ph":
        return c.ph
    if sel == "do":
        return c.dissolved_oxygen
    if sel == "do_saturation":
        return 100.0 * c.dissolved_oxygen / do_saturation(c.temperature)
    return c.nitrate


def emit(
    records: Iterable,
    bindings: Sequence[SensorBinding],
    noise_floor: Optional[Mapping[str, float]] = None,
    seed: int = 0,
    base_epoch_ms: int = 0,
) -> Iterator[SensorRecord]:
    """Sample simulation records into sensor records.

    Each sensor reads the row at t = 0, interval, 2 x interval, ... and adds
    zero-mean Gaussian noise drawn from its own substream of ``seed``, so
    adding or removing one sensor never changes another's readings.
    Output is ordered by time, then by binding order.
    """
    noise_floor = dict(noise_floor or {})
    rngs = {b.sensor_id: substream(seed, "noise", b.sensor_id) for b in bindings}
    factors = {(b.sensor_id, c.field): _conversion(c)[0] for b in bindings for c in b.channels}
    counters = {b.sensor_id: 0 for b in bindings}
    checked = False
    for record in records:
        if not checked:
            problems = check_bindings(bindings, record.levels, record.flows)
            if problems:
                raise ConfigError(problems)
            checked = True
        t = record.time
        for b in bindings:
            k = round(t / b.interval)
            if not math.isclose(k * b.interval, t, rel_tol=0.0, abs_tol=1e-9):
                continue
            readings, noise = {}, {}
            rng = rngs[b.sensor_id]
            for c in b.channels:
                value = _raw(record, b, c) * factors[(b.sensor_id, c.field)]
                sigma = c.noise if c.noise is not None else noise_floor.get(c.field, 0.0)
                eps = rng.gauss(0.0, sigma) if sigma > 0 else 0.0
                readings[c.field] = value + eps
                noise[c.field] = eps
            counters[b.sensor_id] += 1
            yield SensorRecord(
                timestamp=base_epoch_ms + round(t * 1000),
                time=t,
                sensor_id=b.sensor_id,
                sensor_name=b.sensor_name,
                sensor_type=b.sensor_type,
                readings=readings,
                battery=BATTERY_START_V - BATTERY_DECAY_V_PER_S * t,
                battery_percent=BATTERY_PERCENT_START - BATTERY_PERCENT_DECAY_PER_S * t,
                rssi=RSSI,
                counter=counters[b.sensor_id],
                noise=noise,
            )


def parse_bindings(document: Mapping) -> tuple[list[SensorBinding], dict[str, float]]:
    """Bindings and noise floor from a ``{"sensors": [...], "noise_floor": {...}}`` document."""
    problems = []
    out = []
    sensors = document.get("sensors")
    if not isinstance(sensors, list) or not sensors:
        raise ConfigError(["'sensors' must be a non-empty list"])
    for i, entry in enumerate(sensors):
        tag = f"sensors[{i}]"
        if not isinstance(entry, Mapping):
            problems.append(f"{tag}: expected an object")
            continue
        missing = [k for k in ("sensor_id", "source", "channels") if k not in entry]
        if missing:
            problems.append(f"{tag}: missing {', '.join(missing)}")
            continue
        unknown = set(entry) - {"sensor_id", "source", "channels", "interval", "sensor_name", "sensor_type"}
        if unknown:
            problems.append(f"{tag}: unknown key(s) {', '.join(sorted(unknown))}")
        channels = []
        for j, ch in enumerate(entry["channels"]):
            if isinstance(ch, str):
                ch = {"selector": ch}
            try:
                channels.append(
                    Channel(
                        selector=ch["selector"],
                        field=ch.get("field", ""),
                        unit=ch.get("unit"),
                        noise=None if ch.get("noise") is None else float(ch["noise"]),
                        constant=float(ch.get("constant", 0.0)),
                    )
                )
            except (KeyError, TypeError, ValueError, AttributeError) as exc:
                problems.append(f"{tag}.channels[{j}]: {exc!r}")
        try:
            out.append(
                SensorBinding(
                    sensor_id=str(entry["sensor_id"]),
                    source=str(entry["source"]),
                    channels=tuple(channels),
                    interval=int(entry.get("interval", 5)),
                    sensor_name=str(entry.get("sensor_name", "")),
                    sensor_type=int(entry.get("sensor_type", 0)),
                )
            )
        except (TypeError, ValueError) as exc:
            problems.append(f"{tag}: {exc}")
    noise = document.get("noise_floor", {})
    if not isinstance(noise, Mapping):
        problems.append("'noise_floor' must map field names to standard deviations")
        noise = {}
    floor = {}
    for k, v in noise.items():
        try:
            floor[str(k)] = float(v)
        except (TypeError, ValueError):
            problems.append(f"noise_floor[{k!r}]: not a number")
            continue
        if not floor[str(k)] >= 0:
            problems.append(f"noise_floor[{k!r}]: must be non-negative")
    if problems:
        raise ConfigError(problems)
    return out, floor
