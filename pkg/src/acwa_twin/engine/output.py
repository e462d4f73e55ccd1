"""CSV and manifest writers for simulation output."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Callable, Iterable, Optional

from ..network import OutputSchema, Scenario, scenario_digest, scenario_to_dict
from ..units import PA_PER_PSI
from .core import Event, RunResult, SimRecord, run

TABLE4_TWO_NODE = (
    "Time",
    "Reservoir Water Level",
    "Tank Water Level",
    "Pressure at Reservoir Bed",
    "Pressure at Tank Bed",
    "Water Temperature (°C)",
    "pH",
    "BOD (mg/L)",
    "DO (mg/L)",
    "Nitrate (mg/L)",
    "NaOH (mg/L)",
)

_TABLE4_CONSTITUENTS = (
    ("Water Temperature (°C)", "temperature"),
    ("pH", "ph"),
    ("BOD (mg/L)", "bod"),
    ("DO (mg/L)", "dissolved_oxygen"),
    ("Nitrate (mg/L)", "nitrate"),
    ("NaOH (mg/L)", "naoh"),
)

_SI_CONSTITUENTS = (
    ("Nitrate Concentration (mg/L)", "nitrate"),
    ("BOD Concentration (mg/L)", "bod"),
    ("DO Concentration (mg/L)", "dissolved_oxygen"),
    ("pH", "ph"),
    ("Temperature (Degree Celsius)", "temperature"),
)


def hhmmss(seconds: float) -> str:
    whole = int(seconds)
    frac = seconds - whole
    h, rem = divmod(whole, 3600)
    m, s = divmod(rem, 60)
    text = f"{h:02d}:{m:02d}:{s:02d}"
    if frac > 1e-9:
        text += f"{frac:.3f}"[1:]
    return text


def si_seconds(seconds: float) -> str:
    if float(seconds).is_integer():
        return str(int(seconds))
    return _fmt(seconds)


def _fmt(value: float) -> str:
    text = f"{value:.6f}"
    return "0.000000" if text == "-0.000000" else text


class RecordFormatter:
    """Maps :class:`SimRecord` objects to rows of the scenario's output schema.

    Two-node scenarios with one reservoir use the fixed column layout of the
    testbed's reference table, reporting the constituents of the non-reservoir
    tank.  Larger networks repeat the level, pressure and constituent groups
    per node.
    """

    def __init__(self, scenario: Scenario, schema: Optional[OutputSchema] = None):
        self.schema = OutputSchema.parse(schema) if schema is not None else scenario.output_schema
        nodes = list(scenario.nodes)
        reservoir = scenario.reservoir
        self.two_node = len(nodes) == 2
        if self.two_node:
            if reservoir is not None:
                other = next(n for n in nodes if n != reservoir)
                self.level_nodes = [reservoir, other]
            else:
                other = nodes[1]
                self.level_nodes = nodes
            self.quality_nodes = [other]
        else:
            self.level_nodes = nodes
            self.quality_nodes = nodes
        self.columns = self._columns(reservoir is not None)

    def _columns(self, has_reservoir: bool) -> list[str]:
        if self.schema is OutputSchema.TABLE4:
            if self.two_node and has_reservoir:
                return list(TABLE4_TWO_NODE)
            cols = ["Time"]
            cols += [f"{n} Water Level" for n in self.level_nodes]
            cols += [f"Pressure at {n} Bed" for n in self.level_nodes]
            for n in self.quality_nodes:
                cols += [f"{n} {label}" for label, _ in _TABLE4_CONSTITUENTS]
            return cols
        cols = ["Time (seconds)"]
        cols += [f"{n} Water Level (m)" for n in self.level_nodes]
        cols += [f"{n} Pressure (Pa)" for n in self.level_nodes]
        if self.two_node:
            cols += [label for label, _ in _SI_CONSTITUENTS]
        else:
            for n in self.quality_nodes:
                cols += [f"{n} {label}" for label, _ in _SI_CONSTITUENTS]
        return cols

    def row(self, record: SimRecord) -> list[str]:
        table4 = self.schema is OutputSchema.TABLE4
        out = [hhmmss(record.time) if table4 else si_seconds(record.time)]
        out += [_fmt(record.levels[n]) for n in self.level_nodes]
        scale = 1.0 / PA_PER_PSI if table4 else 1.0
        out += [_fmt(record.pressures[n] * scale) for n in self.level_nodes]
        fields = _TABLE4_CONSTITUENTS if table4 else _SI_CONSTITUENTS
        for n in self.quality_nodes:
            c = record.constituents[n]
            out += [_fmt(getattr(c, attr)) for _, attr in fields]
        return out


def _new_writer(handle) -> csv.writer:
    return csv.writer(handle, lineterminator="\n")


def atomic_write_bytes(path: Path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class CsvSink:
    """Streams rows to a temporary file; :meth:`commit` renames it into place.

    Nothing appears at the destination unless the run completes, so a failed
    simulation never leaves a partial CSV behind.
    """

    def __init__(self, path: Path, formatter: RecordFormatter):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.formatter = formatter
        fd, self._tmp = tempfile.mkstemp(dir=self.path.parent, prefix=f".{self.path.name}.", suffix=".tmp")
        self._fh = os.fdopen(fd, "w", encoding="utf-8", newline="")
        self._hash = hashlib.sha256()
        self._writer = _new_writer(self)
        self._writer.writerow(formatter.columns)

    # file protocol for csv.writer, hashing as we go
    def write(self, text: str) -> int:
        self._hash.update(text.encode("utf-8"))
        return self._fh.write(text)

    def __call__(self, record: SimRecord) -> None:
        self._writer.writerow(self.formatter.row(record))

    @property
    def sha256(self) -> str:
        return self._hash.hexdigest()

    def commit(self) -> None:
        self._fh.close()
        os.replace(self._tmp, self.path)

    def abort(self) -> None:
        self._fh.close()
        if os.path.exists(self._tmp):
            os.unlink(self._tmp)


def render_csv(records: Iterable[SimRecord], formatter: RecordFormatter) -> str:
    buf = io.StringIO()
    writer = _new_writer(buf)
    writer.writerow(formatter.columns)
    for record in records:
        writer.writerow(formatter.row(record))
    return buf.getvalue()


def build_manifest(
    scenario: Scenario, result: RunResult, csv_name: str, csv_sha256: str, schema: OutputSchema
) -> dict:
    return {
        "unique_id": scenario.unique_id,
        "scenario_digest": scenario_digest(scenario),
        "scenario": scenario_to_dict(scenario),
        "output_schema": schema.value,
        "csv": {"file": csv_name, "sha256": csv_sha256},
        "events": [e.to_dict() for e in result.events],
        "summary": result.summary.to_dict(),
    }


def run_to_files(
    scenario: Scenario,
    csv_path: Path,
    manifest_path: Optional[Path] = None,
    schema: Optional[OutputSchema] = None,
    on_record: Optional[Callable[[SimRecord], None]] = None,
) -> tuple[RunResult, dict]:
    """Run ``scenario`` writing the CSV and its manifest; both appear only on success."""
    csv_path = Path(csv_path)
    manifest_path = Path(manifest_path) if manifest_path else csv_path.with_suffix(".manifest.json")
    formatter = RecordFormatter(scenario, schema)
    sink = CsvSink(csv_path, formatter)

    def both(record: SimRecord) -> None:
        sink(record)
        if on_record is not None:
            on_record(record)

    try:
        result = run(scenario, on_record=both, keep_records=False)
    except BaseException:
        sink.abort()
        raise
    manifest = build_manifest(scenario, result, csv_path.name, sink.sha256, formatter.schema)
    data = (json.dumps(manifest, indent=2, ensure_ascii=False) + "\n").encode("utf-8")
    try:
        atomic_write_bytes(manifest_path, data)
    except BaseException:
        sink.abort()
        raise
    sink.commit()
    return result, manifest


def events_table(events: Iterable[Event]) -> str:
    return "\n".join(f"{e.time:>10g}s  {e.kind.value:<16} {e.link}: {e.detail}" for e in events)
