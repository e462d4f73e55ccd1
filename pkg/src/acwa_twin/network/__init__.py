"""Scenario model, document formats, topology templates and pre-run validation."""

from .io import (
    CANONICAL_DOCUMENT,
    FLAT_FIELDS,
    load_scenario,
    parse_scenario,
    scenario_digest,
    scenario_to_dict,
    serialize_scenario,
)
from .model import (
    Gravity,
    LinkSpec,
    OutputSchema,
    PositiveDisplacementPump,
    Scenario,
    TankShape,
    TankSpec,
)
from .templates import NOMINAL_GALLONS, TemplateKind, topology_template
from .validation import Severity, ValidationReport, Violation, validate

__all__ = [
    "CANONICAL_DOCUMENT",
    "FLAT_FIELDS",
    "Gravity",
    "LinkSpec",
    "NOMINAL_GALLONS",
    "OutputSchema",
    "PositiveDisplacementPump",
    "Scenario",
    "Severity",
    "TankShape",
    "TankSpec",
    "TemplateKind",
    "ValidationReport",
    "Violation",
    "load_scenario",
    "parse_scenario",
    "scenario_digest",
    "scenario_to_dict",
    "serialize_scenario",
    "topology_template",
    "validate",
]
