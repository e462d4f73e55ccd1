"""Sensor-style datasets and labeled attacks derived from simulation runs."""

from .attacks import AttackKind, AttackSpec, apply_attacks, check_attacks, parse_attacks
from .dataset import FORMATS, read_dataset, record_to_dict, render_csv, render_jsonl, write_dataset
from .sensors import (
    DEFAULT_FIELDS,
    INTERVALS,
    Channel,
    SensorBinding,
    SensorRecord,
    check_bindings,
    emit,
    epoch_ms_from_unique_id,
    parse_bindings,
    substream,
)
from .stream import StreamServer, serve

__all__ = [
    "AttackKind",
    "AttackSpec",
    "apply_attacks",
    "check_attacks",
    "parse_attacks",
    "FORMATS",
    "read_dataset",
    "record_to_dict",
    "render_csv",
    "render_jsonl",
    "write_dataset",
    "DEFAULT_FIELDS",
    "INTERVALS",
    "Channel",
    "SensorBinding",
    "SensorRecord",
    "check_bindings",
    "emit",
    "epoch_ms_from_unique_id",
    "parse_bindings",
    "substream",
    "StreamServer",
    "serve",
]
