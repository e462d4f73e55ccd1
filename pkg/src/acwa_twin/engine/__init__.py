"""Time stepping and output for scenario simulations."""

from .core import (
    Dispatch,
    Event,
    EventKind,
    LinkState,
    RunResult,
    RunSummary,
    SimRecord,
    SimState,
    TankState,
    constituent_inventory,
    dispatch_link,
    init_state,
    iterate,
    make_record,
    run,
    step,
    water_volume,
)
from .output import (
    TABLE4_TWO_NODE,
    CsvSink,
    RecordFormatter,
    build_manifest,
    hhmmss,
    render_csv,
    run_to_files,
)

__all__ = [
    "Dispatch",
    "Event",
    "EventKind",
    "LinkState",
    "RunResult",
    "RunSummary",
    "SimRecord",
    "SimState",
    "TankState",
    "constituent_inventory",
    "dispatch_link",
    "init_state",
    "iterate",
    "make_record",
    "run",
    "step",
    "water_volume",
    "TABLE4_TWO_NODE",
    "CsvSink",
    "RecordFormatter",
    "build_manifest",
    "hhmmss",
    "render_csv",
    "run_to_files",
]
