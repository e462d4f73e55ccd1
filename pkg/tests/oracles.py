"""Independent reference implementations used as test oracles.

None of these import the package's solvers; they re-derive each quantity
from its defining equation by a different route.
"""

from __future__ import annotations

import math
import random

from mpmath import mp, mpf

G = 9.80665


def viscosity_b1_mp(t: float, digits: int = 40) -> float:
    """Kinematic viscosity correlation evaluated at ``digits`` significant digits."""
    with mp.workdps(digits):
        t = mpf(t)
        num = mpf("1.773e-3") / (1 + mpf("0.0337") * t + mpf("0.00022") * t**2)
        den = mpf("999.457") * (
            1 + mpf("0.000052939") * t - mpf("0.0000065322") * t**2 + mpf("0.00000001445") * t**3
        )
        return float(num / den)


def kell_mp(t: float, digits: int = 40) -> float:
    with mp.workdps(digits):
        t = mpf(t)
        poly = (
            mpf("999.83952")
            + mpf("16.945176") * t
            - mpf("7.9870401e-3") * t**2
            - mpf("46.170461e-6") * t**3
            + mpf("105.56302e-9") * t**4
            - mpf("280.54253e-12") * t**5
        )
        return float(poly / (1 + mpf("16.879850e-3") * t))


def colebrook_bisection(re: float, rr: float, lo: float = 1e-3, hi: float = 0.2, tol: float = 1e-15) -> float:
    """Darcy friction factor by bisection on the implicit Colebrook-White residual in f."""

    def g(f: float) -> float:
        return 1.0 / math.sqrt(f) + 2.0 * math.log10(rr / 3.71 + 2.51 / (re * math.sqrt(f)))

    a, b = lo, hi
    ga = g(a)
    assert ga * g(b) < 0, "bracket does not contain a root"
    while b - a > tol:
        m = 0.5 * (a + b)
        gm = g(m)
        if (gm > 0) == (ga > 0):
            a, ga = m, gm
        else:
            b = m
    return 0.5 * (a + b)


def log_grid(lo: float, hi: float, n: int) -> list[float]:
    step = (math.log10(hi) - math.log10(lo)) / (n - 1)
    return [10 ** (math.log10(lo) + i * step) for i in range(n)]


def streeter_phelps_deficit(kd: float, ka: float, bod0: float, d0: float, t_days: float) -> float:
    return kd * bod0 / (ka - kd) * (math.exp(-kd * t_days) - math.exp(-ka * t_days)) + d0 * math.exp(-ka * t_days)


def ph_quadratic(cb: float, kw: float = 1e-14) -> float:
    """pH of water with net strong base ``cb`` mol/L: [H+] solves H^2 + cb H - Kw = 0."""
    with mp.workdps(50):
        cb = mpf(cb)
        h = (-cb + mp.sqrt(cb * cb + 4 * mpf(kw))) / 2
        return float(-mp.log10(h))


def tape_average(tape: list[tuple[float, float]], a: float, b: float) -> float:
    """Volume-average of a piecewise-constant tape ``[(length, value), ...]`` over [a, b)."""
    total = 0.0
    pos = 0.0
    for length, value in tape:
        lo, hi = max(pos, a), min(pos + length, b)
        if hi > lo:
            total += (hi - lo) * value
        pos += length
    return total / (b - a)


def random_network(rng: random.Random):
    """A randomized but valid closed network: a feed-forward DAG of pump and
    gravity links over 2-5 tanks, with return links back into node 0."""
    from acwa_twin.hydro import Material, PipeSpec
    from acwa_twin.network import Gravity, LinkSpec, PositiveDisplacementPump, Scenario, TankShape, TankSpec
    from acwa_twin.quality import ConstituentVector

    n = rng.randint(2, 5)
    nodes = {}
    for i in range(n):
        height = rng.uniform(0.3, 1.5)
        level = rng.uniform(0.0, height)
        elev = rng.uniform(0.0, 1.0)
        if rng.random() < 0.5:
            tank = TankSpec(
                TankShape.RECTANGULAR, height=height, initial_water_level=level,
                length=rng.uniform(0.2, 1.5), width=rng.uniform(0.2, 1.5), base_elevation=elev,
            )
        else:
            tank = TankSpec(
                TankShape.CYLINDRICAL, height=height, initial_water_level=level,
                diameter=rng.uniform(0.2, 1.5), base_elevation=elev,
            )
        nodes[f"N{i}"] = tank
    names = list(nodes)
    links = []
    for j in range(1, n):
        for i in range(j):
            if i != j - 1 and rng.random() < 0.7:
                continue
            pipe = PipeSpec(
                length=rng.uniform(0.5, 5.0), diameter=rng.uniform(0.01, 0.06),
                material=Material.PVC, convective_coefficient=0.0,
            )
            valve = rng.choice([None, 1.0, 0.5, 0.0]) if rng.random() < 0.3 else None
            if rng.random() < 0.6:
                driver = PositiveDisplacementPump(rng.uniform(1e-5, 4e-3))
            else:
                driver = Gravity()
            links.append(LinkSpec(f"L{i}-{j}", names[i], names[j], pipe, driver, valve_opening=valve))
    for j in range(1, n):
        if rng.random() < 0.6:
            pipe = PipeSpec(length=rng.uniform(0.5, 5.0), diameter=rng.uniform(0.01, 0.06), convective_coefficient=0.0)
            links.append(
                LinkSpec(f"R{j}", names[j], names[0], pipe, PositiveDisplacementPump(rng.uniform(1e-5, 4e-3)), is_return=True)
            )
    c0 = ConstituentVector.from_inputs(ph=rng.uniform(5, 9), bod=rng.uniform(0, 5), nitrate=rng.uniform(0, 20),
                                       temperature=rng.uniform(5, 35))
    return Scenario(nodes, tuple(links), c0, duration=300.0, unique_id=f"fuzz-{rng.getrandbits(32):08x}")


def random_vector(rng: random.Random):
    from acwa_twin.quality import ConstituentVector

    return ConstituentVector.from_inputs(
        ph=rng.uniform(3, 11), bod=rng.uniform(0, 10), dissolved_oxygen=rng.uniform(0, 8),
        nitrate=rng.uniform(0, 50), naoh=rng.uniform(0, 5), temperature=rng.uniform(5, 35),
    )


def cstr_state(volume: float = 0.03, flow: float = 3e-4, c_in: float = 10.0):
    """Source -> tank -> sink at matched flow, with the tank initially free of nitrate.

    Returns ``(scenario, state, tau)``; only the tank and its outlet pipe
    start clean, so the tank sees a step input of ``c_in``.
    """
    import dataclasses

    from acwa_twin.engine import init_state
    from acwa_twin.hydro import PipeSpec
    from acwa_twin.network import LinkSpec, PositiveDisplacementPump, Scenario, TankShape, TankSpec
    from acwa_twin.quality import ConstituentVector, Parcel, ZERO_RATES

    level = 0.2
    area = volume / level
    side = math.sqrt(area)
    nodes = {
        "Source": TankSpec(TankShape.RECTANGULAR, height=2.0, initial_water_level=1.5, length=2.0, width=2.0),
        "Tank": TankSpec(TankShape.RECTANGULAR, height=0.5, initial_water_level=level, length=side, width=side),
        "Sink": TankSpec(TankShape.RECTANGULAR, height=2.0, initial_water_level=0.0, length=2.0, width=2.0),
    }
    pipe = PipeSpec(length=1.0, diameter=0.02, convective_coefficient=0.0)
    links = (
        LinkSpec("in", "Source", "Tank", pipe, PositiveDisplacementPump(flow)),
        LinkSpec("out", "Tank", "Sink", pipe, PositiveDisplacementPump(flow)),
        LinkSpec("back", "Sink", "Source", pipe, PositiveDisplacementPump(flow), valve_opening=0.0, is_return=True),
    )
    feed = ConstituentVector(nitrate=c_in, dissolved_oxygen=8.0, temperature=20.0)
    clean = dataclasses.replace(feed, nitrate=0.0)
    scenario = Scenario(nodes, links, feed, duration=600.0, unique_id="cstr", reaction_params=ZERO_RATES)
    state = init_state(scenario)
    tanks = dict(state.tanks)
    tanks["Tank"] = dataclasses.replace(tanks["Tank"], constituents=clean)
    links_state = dict(state.links)
    links_state["out"] = dataclasses.replace(links_state["out"], queue=(Parcel(pipe.volume, clean, 0.0),))
    return scenario, dataclasses.replace(state, tanks=tanks, links=links_state), volume / flow
