"""Physical constants and unit handling for scenario and dataset files."""

from __future__ import annotations

import re
from functools import lru_cache

G = 9.80665  # m/s^2
PA_PER_PSI = 6894.757
M_PER_INCH = 0.0254
M3_PER_US_GALLON = 3.785411784e-3
NAOH_MOLAR_MASS = 40.0  # g/mol

_QUANTITY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(.*?)\s*$")

# Spellings pint does not parse natively.
_ALIASES = {
    "m³/s": "m**3/s",
    "m3/s": "m**3/s",
    "m³": "m**3",
    "m3": "m**3",
    "m²": "m**2",
    "m2": "m**2",
    "gpm": "gallon/minute",
    "gal/min": "gallon/minute",
    "g/min": "gallon/minute",
    "L/s": "liter/second",
    "L/min": "liter/minute",
    "1/d": "1/day",
    "m/d": "m/day",
    "W/m2K": "W/(m**2*K)",
    "W/(m2K)": "W/(m**2*K)",
    "W/m²K": "W/(m**2*K)",
    "W/(m²·K)": "W/(m**2*K)",
    "in": "inch",
}


@lru_cache(maxsize=1)
def _registry():
    import pint

    return pint.UnitRegistry()


def _normalise(unit: str) -> str:
    unit = unit.strip()
    return _ALIASES.get(unit, unit)


@lru_cache(maxsize=256)
def factor(source: str, target: str) -> float:
    """Multiplicative factor taking a magnitude in ``source`` units to ``target`` units."""
    source, target = _normalise(source), _normalise(target)
    if source == target:
        return 1.0
    ureg = _registry()
    try:
        return float(ureg.Quantity(1.0, source).to(target).magnitude)
    except Exception as exc:  # pint raises several unrelated types
        raise ValueError(f"cannot convert {source!r} to {target!r}: {exc}") from None


def split_quantity(text: str) -> tuple[float, str]:
    """Split ``"3.5 L/s"`` into ``(3.5, "L/s")``; the unit is empty for a bare number."""
    match = _QUANTITY.match(text)
    if match is None:
        raise ValueError(f"malformed quantity {text!r}")
    return float(match.group(1)), match.group(2)


def parse_quantity(text: str | float | int, target: str) -> float:
    """Parse ``"3.5 L/s"`` style text into a float expressed in ``target`` units.

    Bare numbers are taken to be in ``target`` units already.  Conversion is
    skipped entirely when the suffix already names the target, so values
    written by :func:`format_quantity` round-trip bit-exactly.
    """
    if isinstance(text, bool):
        raise ValueError(f"expected a quantity, got {text!r}")
    if isinstance(text, (int, float)):
        return float(text)
    magnitude, unit = split_quantity(text)
    if not unit:
        return magnitude
    return magnitude * factor(unit, target)


def format_quantity(value: float, unit: str) -> str:
    return f"{value!r} {unit}"
