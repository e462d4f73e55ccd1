"""Flat-file datasets (CSV or JSONL) with a ground-truth label column."""

from __future__ import annotations

import csv
import hashlib
import io
import json
from pathlib import Path
from typing import Iterable, Optional, Sequence

from ..engine.output import atomic_write_bytes
from .sensors import SensorRecord

FORMATS = ("csv", "jsonl")
HEADER = ("timestamp", "sensor_id", "sensor_name", "sensor_type", "type", "battery", "battery_percent", "rssi", "counter")


def record_to_dict(record: SensorRecord) -> dict:
    row = {
        "timestamp": record.timestamp,
        "sensor_id": record.sensor_id,
        "sensor_name": record.sensor_name,
        "sensor_type": record.sensor_type,
        "type": "sensor_data",
        "battery": record.battery,
        "battery_percent": record.battery_percent,
        "rssi": record.rssi,
        "counter": record.counter,
    }
    row.update(record.readings)
    row["label"] = record.attacked
    return row


def jsonl_line(record: SensorRecord) -> str:
    return json.dumps(record_to_dict(record), ensure_ascii=False, allow_nan=False) + "\n"


def render_jsonl(stream: Iterable[SensorRecord]) -> str:
    return "".join(jsonl_line(r) for r in stream)


def reading_fields(stream: Iterable[SensorRecord]) -> list[str]:
    fields: dict[str, None] = {}
    for r in stream:
        for f in r.readings:
            fields.setdefault(f)
    return list(fields)


def render_csv(stream: Sequence[SensorRecord], fields: Optional[Sequence[str]] = None) -> str:
    fields = list(fields) if fields is not None else reading_fields(stream)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([*HEADER, *fields, "label"])
    for r in stream:
        d = record_to_dict(r)
        w.writerow(
            [d[h] for h in HEADER]
            + ["" if f not in r.readings else repr(r.readings[f]) for f in fields]
            + ["true" if r.attacked else "false"]
        )
    return buf.getvalue()


def _csv_value(text: str):
    if text in ("true", "false"):
        return text == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def read_dataset(path: Path) -> list[dict]:
    """Rows of a dataset file as dicts, with numbers and labels typed."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".jsonl":
        return [json.loads(line) for line in text.splitlines() if line]
    rows = []
    for raw in csv.DictReader(io.StringIO(text)):
        row = {}
        for k, v in raw.items():
            if k in ("sensor_id", "sensor_name", "type"):
                row[k] = v
            elif v != "":
                row[k] = _csv_value(v)
        rows.append(row)
    return rows


def write_dataset(
    clean: Sequence[SensorRecord],
    tampered: Optional[Sequence[SensorRecord]],
    out_dir: Path,
    fmt: str = "jsonl",
    unique_id: str = "",
    extra: Optional[dict] = None,
) -> dict:
    """Write ``clean`` (and ``tampered``) plus ``dataset.manifest.json`` into ``out_dir``.

    All files are rendered in memory first and each is renamed into place
    only after being fully written.
    """
    if fmt not in FORMATS:
        raise ValueError(f"unknown dataset format {fmt!r}; expected one of {FORMATS}")
    out_dir = Path(out_dir)
    fields = reading_fields(list(clean) + list(tampered or ()))
    render = render_jsonl if fmt == "jsonl" else (lambda s: render_csv(s, fields))
    blobs = {f"clean.{fmt}": render(clean).encode("utf-8")}
    if tampered is not None:
        blobs[f"tampered.{fmt}"] = render(tampered).encode("utf-8")
    manifest = {
        "unique_id": unique_id,
        "format": fmt,
        "files": {
            name: {"sha256": hashlib.sha256(data).hexdigest(), "records": data.count(b"\n") - (fmt == "csv")}
            for name, data in blobs.items()
        },
        "attacked_records": sum(r.attacked for r in tampered) if tampered is not None else 0,
    }
    if extra:
        manifest.update(extra)
    manifest_blob = (json.dumps(manifest, indent=2, ensure_ascii=False) + "\n").encode("utf-8")
    try:
        for name, data in blobs.items():
            atomic_write_bytes(out_dir / name, data)
        atomic_write_bytes(out_dir / "dataset.manifest.json", manifest_blob)
    except OSError as exc:
        raise OSError(f"writing dataset to {out_dir}: {exc}") from exc
    return manifest
