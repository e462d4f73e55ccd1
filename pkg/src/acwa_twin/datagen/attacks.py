"""Labeled integrity attacks applied to a clean sensor stream."""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Mapping, Optional, Sequence, Union

from ..errors import ConfigError
from .sensors import SensorRecord, substream


class AttackKind(str, enum.Enum):
    BIAS = "bias"
    DRIFT = "drift"
    STUCK_AT = "stuck_at"
    NOISE = "noise"
    DROPOUT = "dropout"
    REPLAY = "replay"


@dataclass(frozen=True)
class AttackSpec:
    """One attack on one field of one sensor over the closed window [start, end] s.

    ``value`` is interpreted per kind: the offset for Bias, the rate per
    second for Drift, the frozen value (or ``"last"``) for StuckAt, the noise
    multiplier for Noise and the deletion probability for Dropout.  Replay
    reads ``source_window`` instead.  Noise uses ``sigma`` as an absolute
    standard deviation when the clean stream carries no noise to scale.
    Dropout removes whole records and so claims every field of the sensor.
    """

    kind: AttackKind
    sensor_id: str
    field: str
    start: float
    end: float
    value: Union[float, str, None] = None
    source_window: Optional[tuple[float, float]] = None
    sigma: Optional[float] = None
    seed: int = 0

    def covers(self, t: float) -> bool:
        return self.start <= t <= self.end


def _overlaps(a: AttackSpec, b: AttackSpec) -> bool:
    if a.sensor_id != b.sensor_id:
        return False
    dropout = AttackKind.DROPOUT in (a.kind, b.kind)
    if a.field != b.field and not dropout:
        return False
    return a.start <= b.end and b.start <= a.end


def check_attacks(
    attacks: Sequence[AttackSpec], duration: float, sensor_fields: Optional[Mapping[str, Sequence[str]]] = None
) -> list[str]:
    problems = []
    for i, a in enumerate(attacks):
        tag = f"attack {i} ({a.kind.value} on {a.sensor_id}/{a.field})"
        if not a.start < a.end:
            problems.append(f"{tag}: window start {a.start} must precede end {a.end}")
        if a.start < 0 or a.end > duration:
            problems.append(f"{tag}: window [{a.start}, {a.end}] s outside the run [0, {duration}] s")
        if sensor_fields is not None:
            if a.sensor_id not in sensor_fields:
                problems.append(f"{tag}: unknown sensor {a.sensor_id!r}")
            elif a.kind is not AttackKind.DROPOUT and a.field not in sensor_fields[a.sensor_id]:
                problems.append(f"{tag}: sensor {a.sensor_id} has no field {a.field!r}")
        if a.kind in (AttackKind.BIAS, AttackKind.DRIFT) and not isinstance(a.value, (int, float)):
            problems.append(f"{tag}: needs a numeric value")
        if a.kind is AttackKind.STUCK_AT and not (isinstance(a.value, (int, float)) or a.value == "last"):
            problems.append(f"{tag}: value must be a number or 'last'")
        if a.kind is AttackKind.NOISE:
            if a.sigma is None and not isinstance(a.value, (int, float)):
                problems.append(f"{tag}: needs a multiplier value or an absolute sigma")
            if a.sigma is not None and not a.sigma >= 0:
                problems.append(f"{tag}: sigma must be non-negative")
        if a.kind is AttackKind.DROPOUT and not (isinstance(a.value, (int, float)) and 0.0 <= a.value <= 1.0):
            problems.append(f"{tag}: probability must lie in [0, 1]")
        if a.kind is AttackKind.REPLAY:
            w = a.source_window
            if w is None or not w[0] < w[1] or w[0] < 0 or w[1] > duration:
                problems.append(f"{tag}: source window must be an ordered interval within the run")
        for j in range(i):
            if _overlaps(attacks[j], a):
                problems.append(f"{tag}: overlaps attack {j} on the same sensor field")
    return problems


def apply_attacks(
    stream: Sequence[SensorRecord], attacks: Sequence[AttackSpec], duration: Optional[float] = None
) -> list[SensorRecord]:
    """Tampered copy of ``stream``; records outside every window are returned unchanged.

    A record is labeled attacked exactly when some attack window on its
    sensor covers its time.
    """
    if duration is None:
        duration = max((r.time for r in stream), default=0.0)
    fields: dict[str, set] = {}
    for r in stream:
        fields.setdefault(r.sensor_id, set()).update(r.readings)
    problems = check_attacks(attacks, duration, fields)
    if problems:
        raise ConfigError(problems)

    by_sensor: dict[str, list[int]] = {}
    for i, r in enumerate(stream):
        by_sensor.setdefault(r.sensor_id, []).append(i)

    out: list[Optional[SensorRecord]] = list(stream)
    for a in attacks:
        idx = [i for i in by_sensor.get(a.sensor_id, []) if a.covers(stream[i].time)]
        if not idx:
            continue
        if a.kind is AttackKind.DROPOUT:
            rng = substream(a.seed, "dropout", a.sensor_id)
            for i in idx:
                if rng.random() < a.value:
                    out[i] = None
                elif out[i] is not None:
                    out[i] = replace(out[i], attacked=True)
            continue
        values = _tampered_values(a, [stream[i] for i in idx], [stream[i] for i in by_sensor[a.sensor_id]])
        for i, v in zip(idx, values):
            cur = out[i]
            if cur is None:
                continue
            readings = dict(cur.readings)
            readings[a.field] = v
            out[i] = replace(cur, readings=readings, attacked=True)
    return [r for r in out if r is not None]


def _tampered_values(a: AttackSpec, window: list[SensorRecord], sensor: list[SensorRecord]) -> list[float]:
    f = a.field
    clean = [r.readings[f] for r in window]
    if a.kind is AttackKind.BIAS:
        return [v + a.value for v in clean]
    if a.kind is AttackKind.DRIFT:
        return [v + a.value * (r.time - a.start) for v, r in zip(clean, window)]
    if a.kind is AttackKind.STUCK_AT:
        frozen = clean[0] if a.value == "last" else float(a.value)
        return [frozen] * len(clean)
    if a.kind is AttackKind.NOISE:
        if a.sigma is not None:
            rng = substream(a.seed, "noise-attack", a.sensor_id, f)
            return [v + rng.gauss(0.0, a.sigma) for v in clean]
        return [v + (a.value - 1.0) * r.noise.get(f, 0.0) for v, r in zip(clean, window)]
    # replay: cycle through the sensor's clean readings from the source window
    lo, hi = a.source_window
    source = [r.readings[f] for r in sensor if lo <= r.time <= hi]
    if not source:
        raise ConfigError([f"replay on {a.sensor_id}/{f}: source window holds no records"])
    return [source[k % len(source)] for k in range(len(clean))]


def parse_attacks(document: Mapping) -> list[AttackSpec]:
    """Attacks from ``{"attacks": [{"kind": "bias", "sensor": ..., "field": ..., "window": [a, b], ...}]}``."""
    entries = document.get("attacks")
    if not isinstance(entries, list):
        raise ConfigError(["'attacks' must be a list"])
    problems, out = [], []
    for i, e in enumerate(entries):
        tag = f"attacks[{i}]"
        try:
            kind = AttackKind(str(e["kind"]).lower().replace("-", "_").replace("stuckat", "stuck_at"))
            window = e["window"]
            source = e.get("source_window")
            value = e.get("value", e.get("offset", e.get("rate", e.get("probability", e.get("multiplier")))))
            if isinstance(value, str) and value != "last":
                value = float(value)
            out.append(
                AttackSpec(
                    kind=kind,
                    sensor_id=str(e["sensor"]),
                    field=str(e.get("field", "*")),
                    start=float(window[0]),
                    end=float(window[1]),
                    value=value,
                    source_window=(float(source[0]), float(source[1])) if source is not None else None,
                    sigma=None if e.get("sigma") is None else float(e["sigma"]),
                    seed=int(e.get("seed", 0)),
                )
            )
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            problems.append(f"{tag}: {exc!r}")
    if problems:
        raise ConfigError(problems)
    return out
