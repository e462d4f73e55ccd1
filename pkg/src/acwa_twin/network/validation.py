"""Pre-run checks on a parsed scenario.

Errors block simulation; warnings describe behaviour the run will exhibit
(an unprimed pipe, a clamped transfer) without rejecting it.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

from ..errors import AcwaError
from ..hydro import FluidProperties, RegimePolicy, TURBULENT_LIMIT, LAMINAR_LIMIT
from .model import Scenario

PRIMING_FACTOR = 1.5
TABLE4_MAX_DURATION = 86400.0


class Severity(str, enum.Enum):
    ERROR = "Error"
    WARNING = "Warning"


@dataclass(frozen=True)
class Violation:
    code: str
    severity: Severity
    message: str
    subject: Optional[str] = None

    def format(self) -> str:
        where = f" [{self.subject}]" if self.subject else ""
        return f"{self.severity.value}: {self.code}{where}: {self.message}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def errors(self) -> tuple[Violation, ...]:
        return tuple(v for v in self.violations if v.severity is Severity.ERROR)

    @property
    def warnings(self) -> tuple[Violation, ...]:
        return tuple(v for v in self.violations if v.severity is Severity.WARNING)

    @property
    def ok(self) -> bool:
        return not self.errors

    def codes(self) -> list[str]:
        return [v.code for v in self.violations]

    def format(self) -> str:
        if not self.violations:
            return "no violations"
        return "\n".join(v.format() for v in self.violations)


def _reachable(scenario: Scenario, start: str, skip_return: bool = False) -> set[str]:
    adj: dict[str, list[str]] = {}
    for link in scenario.links:
        if skip_return and link.is_return:
            continue
        adj.setdefault(link.source, []).append(link.destination)
    seen = set()
    stack = [start]
    while stack:
        node = stack.pop()
        for nxt in adj.get(node, ()):
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return seen


def _is_multiple(duration: float, step: float) -> bool:
    n = round(duration / step)
    return n >= 1 and math.isclose(n * step, duration, rel_tol=1e-9, abs_tol=0.0)


def validate(scenario: Scenario) -> ValidationReport:
    out: list[Violation] = []

    def error(code: str, message: str, subject: Optional[str] = None) -> None:
        out.append(Violation(code, Severity.ERROR, message, subject))

    def warning(code: str, message: str, subject: Optional[str] = None) -> None:
        out.append(Violation(code, Severity.WARNING, message, subject))

    s = scenario
    if not s.unique_id:
        error("unique-id", "unique_id must be non-empty")
    if not s.nodes:
        error("no-nodes", "scenario declares no tanks")
    if sum(t.reservoir for t in s.nodes.values()) > 1:
        error("reservoir-count", "at most one node may be flagged as the reservoir")

    for name, tank in s.nodes.items():
        dims = {"height": tank.height}
        dims.update({"length": tank.length, "width": tank.width} if tank.shape.value == "Rectangular" else {"diameter": tank.diameter})
        bad = [k for k, v in dims.items() if v is None or not v > 0]
        if bad:
            error("nonpositive-dimension", f"tank dimension(s) {', '.join(bad)} must be positive", name)
            continue
        if not 0.0 <= tank.initial_water_level <= tank.height:
            error(
                "level-out-of-range",
                f"initial water level {tank.initial_water_level} m outside [0, {tank.height}] m",
                name,
            )

    ids = [link.id for link in s.links]
    for dup in sorted({i for i in ids if ids.count(i) > 1}):
        error("duplicate-link", "link ids must be unique", dup)
    known_links = []
    for link in s.links:
        if link.source not in s.nodes or link.destination not in s.nodes:
            missing = [n for n in (link.source, link.destination) if n not in s.nodes]
            error("unknown-node", f"link refers to undeclared node(s) {', '.join(missing)}", link.id)
            continue
        if link.source == link.destination:
            error("self-loop", "link source and destination must differ", link.id)
            continue
        if link.pumped and not link.driver.rated_flow > 0:
            error("rated-flow", f"pump rated flow must be positive, got {link.driver.rated_flow}", link.id)
            continue
        if link.valve_opening is not None and not 0.0 <= link.valve_opening <= 1.0:
            error("valve-opening", f"valve opening must lie in [0, 1], got {link.valve_opening}", link.id)
            continue
        known_links.append(link)

    if not s.duration > 0:
        error("duration", f"duration must be positive, got {s.duration} s")
    if not s.time_step > 0:
        error("time-step", f"time step must be positive, got {s.time_step} s")
    elif s.duration > 0 and not _is_multiple(s.duration, s.time_step):
        error("duration-multiple", f"duration {s.duration} s is not an integer multiple of the time step {s.time_step} s")
    if s.max_dt is not None and not s.max_dt > 0:
        error("max-dt", f"max_dt must be positive, got {s.max_dt} s")
    if s.output_schema.value == "Table4" and s.duration >= TABLE4_MAX_DURATION:
        error("table4-duration", "the HH:MM:SS time column cannot represent 24 h or more; use the Seconds-SI schema")
    try:
        fluid = FluidProperties.at(s.initial_constituents.temperature)
    except AcwaError as exc:
        error("temperature", str(exc))
        fluid = None

    if any(v.severity is Severity.ERROR and v.code in ("unknown-node", "nonpositive-dimension") for v in out):
        return ValidationReport(tuple(out))

    for node in s.nodes:
        if node in _reachable(s, node, skip_return=True):
            error("cycle", "non-return links form a cycle through this node; flag one of them as a return link", node)
            break

    inbound = {n: 0 for n in s.nodes}
    outbound = {n: 0 for n in s.nodes}
    for link in known_links:
        inbound[link.destination] += 1
        outbound[link.source] += 1

    for link in known_links:
        src, dst = s.nodes[link.source], s.nodes[link.destination]
        threshold = PRIMING_FACTOR * link.pipe.diameter
        if src.initial_water_level <= threshold:
            warning(
                "pipe-full",
                f"source level {src.initial_water_level} m <= 1.5 x pipe diameter = {threshold:g} m; the pipe starts unprimed",
                link.id,
            )
        if not link.pumped:
            continue
        q = link.driver.rated_flow
        headroom = dst.area * (dst.height - dst.initial_water_level)
        contents = src.area * src.initial_water_level
        returns = link.source in _reachable(s, link.destination)
        if headroom < contents and not returns:
            error(
                "overflow-check",
                f"destination free volume {headroom:.6g} m3 is less than the source contents {contents:.6g} m3 "
                "and no return path exists",
                link.id,
            )
        usable = src.area * max(src.initial_water_level - threshold, 0.0)
        if inbound[link.source] == 0 and src.initial_water_level > threshold and usable < q * s.duration:
            drawdown = src.initial_water_level - threshold
            warning(
                "pipe-full",
                f"1.5 x pipe diameter = {threshold:g} m and the source starts at {src.initial_water_level:g} m, "
                f"leaving only {drawdown:.6g} m of primed drawdown; the pipe runs unprimed after about "
                f"{usable / q:.1f} s",
                link.id,
            )
        transferable = q * s.duration if inbound[link.source] else min(q * s.duration, usable)
        if outbound[link.destination] == 0 and transferable > headroom:
            warning(
                "transfer-clamp",
                f"rated transfer of {transferable:.6g} m3 exceeds the destination free volume {headroom:.6g} m3; "
                "the flow will be clamped when the tank fills",
                link.id,
            )
        if fluid is not None and s.regime_policy is RegimePolicy.STRICT:
            re = (q / link.pipe.area) * link.pipe.diameter / fluid.kinematic_viscosity
            if LAMINAR_LIMIT <= re <= TURBULENT_LIMIT:
                warning(
                    "transitional-flow",
                    f"Re = {re:.0f} at rated flow is transitional; the strict regime policy will abort the run",
                    link.id,
                )
    return ValidationReport(tuple(out))
