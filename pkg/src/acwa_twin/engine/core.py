"""Deterministic time stepping of a scenario.

Each step runs a fixed sequence: dispatch every link (declaration order),
withdraw from sources, advect pipes, deliver and mix into destinations,
react every tank, then compute bed pressures and emit a record.
"""

from __future__ import annotations

import enum
import logging
import math
import time
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Callable, Iterator, NamedTuple, Optional

from ..errors import InvariantBreach, RegimeConstraintError, ValidationFailed
from ..hydro import (
    STILL,
    FlowState,
    FluidProperties,
    Regime,
    elevation_pressure,
    flow_state,
    gravity_velocity,
    kell_density,
)
from ..network import LinkSpec, Scenario, validate
from ..network.validation import PRIMING_FACTOR
from ..quality import ConstituentVector, Parcel, advect, mix_tank, react

log = logging.getLogger(__name__)

LEVEL_SNAP = 1e-12
VOLUME_DRIFT_LIMIT = 1e-9


class EventKind(str, enum.Enum):
    PIPE_UNPRIMED = "PipeUnprimed"
    OVERFLOW_CLAMPED = "OverflowClamped"
    SOURCE_DEPLETED = "SourceDepleted"
    TRANSITIONAL_FLOW = "TransitionalFlow"
    VALVE_CLOSED = "ValveClosed"


@dataclass(frozen=True)
class Event:
    time: float
    kind: EventKind
    link: str
    detail: str
    seq: int = 0

    def to_dict(self) -> dict:
        return {"time": self.time, "kind": self.kind.value, "link": self.link, "detail": self.detail}


@dataclass(frozen=True)
class TankState:
    water_level: float
    constituents: ConstituentVector


@dataclass(frozen=True)
class LinkState:
    queue: tuple[Parcel, ...]
    flow: FlowState = STILL
    delivered_volume: float = 0.0
    active: frozenset = frozenset()


@dataclass(frozen=True)
class SimState:
    clock: float
    tanks: dict[str, TankState]
    links: dict[str, LinkState]
    events: tuple[Event, ...] = ()


@dataclass(frozen=True)
class SimRecord:
    time: float
    levels: dict[str, float]
    pressures: dict[str, float]  # gauge, Pa
    constituents: dict[str, ConstituentVector]
    flows: dict[str, float]  # mean m^3/s over the step just completed


class Dispatch(NamedTuple):
    flow_rate: float
    flow: FlowState
    conditions: tuple[EventKind, ...]


def init_state(scenario: Scenario) -> SimState:
    report = validate(scenario)
    if not report.ok:
        raise ValidationFailed(report)
    c0 = scenario.initial_constituents
    tanks = {name: TankState(t.initial_water_level, c0) for name, t in scenario.nodes.items()}
    links = {
        link.id: LinkState(queue=(Parcel(link.pipe.volume, tanks[link.source].constituents, 0.0),))
        for link in scenario.links
    }
    return SimState(0.0, tanks, links)


def water_volume(state: SimState, scenario: Scenario) -> float:
    tanks = math.fsum(scenario.nodes[n].area * t.water_level for n, t in state.tanks.items())
    pipes = math.fsum(link.pipe.volume for link in scenario.links)
    return tanks + pipes


def constituent_inventory(state: SimState, scenario: Scenario) -> dict[str, float]:
    """Total ``volume x concentration`` of each mass-like field over tanks and pipe parcels."""
    fields = ("bod", "dissolved_oxygen", "nitrate", "naoh", "net_strong_base", "temperature")
    terms: dict[str, list[float]] = {f: [] for f in fields}
    for name, tank in state.tanks.items():
        v = scenario.nodes[name].area * tank.water_level
        for f in fields:
            terms[f].append(v * getattr(tank.constituents, f))
    for ls in state.links.values():
        for p in ls.queue:
            for f in fields:
                terms[f].append(p.volume * getattr(p.constituents, f))
    return {f: math.fsum(v) for f, v in terms.items()}


def dispatch_link(
    state: SimState,
    scenario: Scenario,
    link: LinkSpec,
    dt: float,
    committed_out: Optional[dict[str, float]] = None,
    committed_in: Optional[dict[str, float]] = None,
) -> Dispatch:
    """Flow a link carries this step after the valve, priming, source and overflow guards.

    ``committed_out``/``committed_in`` hold volumes already promised by links
    dispatched earlier in the same step, so several links sharing a tank
    cannot jointly overdraw or overfill it.
    """
    committed_out = committed_out or {}
    committed_in = committed_in or {}
    if link.valve_closed:
        return Dispatch(0.0, STILL, (EventKind.VALVE_CLOSED,))
    src_spec, dst_spec = scenario.nodes[link.source], scenario.nodes[link.destination]
    src, dst = state.tanks[link.source], state.tanks[link.destination]
    if src.water_level <= PRIMING_FACTOR * link.pipe.diameter:
        return Dispatch(0.0, STILL, (EventKind.PIPE_UNPRIMED,))

    policy = scenario.regime_policy
    fluid = FluidProperties.at(src.constituents.temperature)
    try:
        if link.pumped:
            q = link.driver.rated_flow
            flow = None
        else:
            head = (src_spec.base_elevation + src.water_level) - (dst_spec.base_elevation + dst.water_level)
            flow = gravity_velocity(head, link.pipe, fluid, extra_k=link.extra_k, policy=policy)
            q = flow.flow_rate
    except RegimeConstraintError as exc:
        raise RegimeConstraintError(exc.reynolds, link.id) from None

    conditions: list[EventKind] = []
    available = src_spec.area * src.water_level - committed_out.get(link.source, 0.0)
    if q * dt > available:
        q = max(available, 0.0) / dt
        flow = None
        conditions.append(EventKind.SOURCE_DEPLETED)
    headroom = dst_spec.area * (dst_spec.height - dst.water_level) - committed_in.get(link.destination, 0.0)
    if q * dt > headroom:
        q = max(headroom, 0.0) / dt
        flow = None
        conditions.append(EventKind.OVERFLOW_CLAMPED)
    if flow is None:
        try:
            flow = flow_state(q, link.pipe, fluid, link.extra_k, policy)
        except RegimeConstraintError as exc:
            raise RegimeConstraintError(exc.reynolds, link.id) from None
    if flow.regime is Regime.TRANSITIONAL:
        conditions.append(EventKind.TRANSITIONAL_FLOW)
    return Dispatch(q, flow, tuple(conditions))


def _snap_level(level: float, height: float, node: str, state: SimState) -> float:
    if -LEVEL_SNAP < level < 0.0:
        return 0.0
    if height < level < height + LEVEL_SNAP:
        return height
    if not 0.0 <= level <= height:
        raise InvariantBreach(
            f"water level {level!r} m of {node!r} left [0, {height}] m at t={state.clock}",
            _dump(state),
        )
    return level


def _dump(state: SimState) -> dict:
    return {
        "clock": state.clock,
        "levels": {n: t.water_level for n, t in state.tanks.items()},
        "flows": {k: ls.flow.flow_rate for k, ls in state.links.items()},
    }


def _substep(state: SimState, scenario: Scenario, h: float, seq: list[int]) -> SimState:
    t = state.clock
    committed_out = {n: 0.0 for n in scenario.nodes}
    committed_in = {n: 0.0 for n in scenario.nodes}
    dispatches: list[tuple[LinkSpec, Dispatch]] = []
    new_events: list[Event] = []
    link_states = dict(state.links)

    for link in scenario.links:
        d = dispatch_link(state, scenario, link, h, committed_out, committed_in)
        committed_out[link.source] += d.flow_rate * h
        committed_in[link.destination] += d.flow_rate * h
        dispatches.append((link, d))
        previous = link_states[link.id].active
        for kind in d.conditions:
            if kind not in previous:
                seq[0] += 1
                new_events.append(Event(t, kind, link.id, _describe(kind, link, state, scenario, d), seq[0]))
                if kind is not EventKind.VALVE_CLOSED:
                    log.info("t=%gs %s on %s", t, kind.value, link.id)

    levels = {n: ts.water_level for n, ts in state.tanks.items()}
    vectors = {n: ts.constituents for n, ts in state.tanks.items()}
    start_vectors = dict(vectors)

    for link, d in dispatches:
        if d.flow_rate > 0:
            levels[link.source] -= d.flow_rate * h / scenario.nodes[link.source].area

    deliveries = []
    for link, d in dispatches:
        ls = link_states[link.id]
        if d.flow_rate > 0:
            inflow = Parcel(d.flow_rate * h, start_vectors[link.source], t)
            queue, delivered = advect(ls.queue, inflow, d.flow_rate, h, link.pipe, scenario.reaction_params, t + h)
        else:
            queue, delivered = ls.queue, None
        link_states[link.id] = LinkState(
            queue=queue,
            flow=d.flow,
            delivered_volume=ls.delivered_volume + (delivered.volume if delivered else 0.0),
            active=frozenset(d.conditions),
        )
        deliveries.append((link, delivered))

    for link, delivered in deliveries:
        if delivered is None:
            continue
        area = scenario.nodes[link.destination].area
        vectors[link.destination] = mix_tank(area * max(levels[link.destination], 0.0), vectors[link.destination], delivered)
        levels[link.destination] += delivered.volume / area

    tanks = {}
    for name, spec in scenario.nodes.items():
        level = _snap_level(levels[name], spec.height, name, state)
        vec = react(vectors[name], scenario.reaction_params, h, scenario.air_temperature)
        tanks[name] = TankState(level, vec)

    return SimState(t + h, tanks, link_states, state.events + tuple(new_events))


def _describe(kind: EventKind, link: LinkSpec, state: SimState, scenario: Scenario, d: Dispatch) -> str:
    src = state.tanks[link.source].water_level
    if kind is EventKind.PIPE_UNPRIMED:
        return f"source level {src:.6g} m <= {PRIMING_FACTOR * link.pipe.diameter:.6g} m"
    if kind is EventKind.OVERFLOW_CLAMPED:
        return f"flow clamped to {d.flow_rate:.6g} m3/s by the free volume of {link.destination}"
    if kind is EventKind.SOURCE_DEPLETED:
        return f"flow clamped to {d.flow_rate:.6g} m3/s by the contents of {link.source}"
    if kind is EventKind.TRANSITIONAL_FLOW:
        return f"Re = {d.flow.reynolds:.1f} in the transitional band, treated as turbulent"
    return "valve closed"


def make_record(state: SimState, scenario: Scenario, flows: Optional[dict[str, float]] = None) -> SimRecord:
    levels = {n: t.water_level for n, t in state.tanks.items()}
    pressures = {
        n: elevation_pressure(kell_density(t.constituents.temperature), t.water_level) for n, t in state.tanks.items()
    }
    return SimRecord(
        time=state.clock,
        levels=levels,
        pressures=pressures,
        constituents={n: t.constituents for n, t in state.tanks.items()},
        flows=flows if flows is not None else {link.id: 0.0 for link in scenario.links},
    )


def step(state: SimState, scenario: Scenario, _seq: Optional[list[int]] = None) -> tuple[SimState, SimRecord]:
    """Advance one output time step, sub-stepping when ``scenario.max_dt`` is smaller."""
    dt = scenario.time_step
    if state.clock >= scenario.duration - 1e-9 * dt:
        raise InvariantBreach(f"clock {state.clock} s already at the scenario duration", _dump(state))
    seq = _seq if _seq is not None else [len(state.events)]
    n_sub = 1
    if scenario.max_dt is not None and scenario.max_dt < dt:
        n_sub = math.ceil(dt / scenario.max_dt - 1e-12)
    h = dt / n_sub
    target = state.clock + dt
    before = {k: ls.delivered_volume for k, ls in state.links.items()}
    new = state
    for _ in range(n_sub):
        new = _substep(new, scenario, h, seq)
    new = replace(new, clock=target)
    flows = {k: (new.links[k].delivered_volume - before[k]) / dt for k in before}
    return new, make_record(new, scenario, flows)


@dataclass
class RunSummary:
    unique_id: str
    record_count: int
    link_volumes: dict[str, float]
    mass_balance_residual: float
    event_counts: dict[str, int]
    runtime_s: float

    def to_dict(self) -> dict:
        return {
            "unique_id": self.unique_id,
            "record_count": self.record_count,
            "link_volumes_m3": self.link_volumes,
            "mass_balance_residual": self.mass_balance_residual,
            "event_counts": self.event_counts,
            "runtime_s": self.runtime_s,
        }


@dataclass
class RunResult:
    records: Optional[list[SimRecord]]
    events: tuple[Event, ...]
    summary: RunSummary
    final_state: SimState = field(repr=False)


def iterate(scenario: Scenario) -> Iterator[tuple[SimState, SimRecord]]:
    """Yield ``(state, record)`` for t = 0, dt, ..., duration."""
    state = init_state(scenario)
    v0 = water_volume(state, scenario)
    yield state, make_record(state, scenario)
    seq = [0]
    for _ in range(scenario.n_steps):
        state, record = step(state, scenario, seq)
        drift = abs(water_volume(state, scenario) - v0) / v0 if v0 > 0 else 0.0
        if drift > VOLUME_DRIFT_LIMIT:
            raise InvariantBreach(f"water volume drifted by {drift:.3e} (relative) at t={state.clock}", _dump(state))
        yield state, record


def run(
    scenario: Scenario,
    on_record: Optional[Callable[[SimRecord], None]] = None,
    keep_records: bool = True,
) -> RunResult:
    """Simulate ``scenario`` end to end.

    Records are handed to ``on_record`` in order, exactly once each; pass
    ``keep_records=False`` to stream without holding them in memory.
    """
    started = time.perf_counter()
    records: Optional[list[SimRecord]] = [] if keep_records else None
    state = None
    count = 0
    v0 = None
    for state, record in iterate(scenario):
        if v0 is None:
            v0 = water_volume(state, scenario)
        count += 1
        if on_record is not None:
            on_record(record)
        if records is not None:
            records.append(record)
    residual = (water_volume(state, scenario) - v0) / v0 if v0 else 0.0
    summary = RunSummary(
        unique_id=scenario.unique_id,
        record_count=count,
        link_volumes={k: ls.delivered_volume for k, ls in state.links.items()},
        mass_balance_residual=residual,
        event_counts=dict(sorted(Counter(e.kind.value for e in state.events).items())),
        runtime_s=time.perf_counter() - started,
    )
    return RunResult(records, state.events, summary, state)
