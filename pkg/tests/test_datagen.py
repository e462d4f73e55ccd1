import asyncio
import json
import time

import pytest

from acwa_twin.datagen import (
    AttackKind,
    AttackSpec,
    Channel,
    SensorBinding,
    StreamServer,
    apply_attacks,
    emit,
    epoch_ms_from_unique_id,
    parse_attacks,
    parse_bindings,
    read_dataset,
    render_csv,
    render_jsonl,
    write_dataset,
)
from acwa_twin.engine import run
from acwa_twin.errors import ConfigError
from acwa_twin.network import CANONICAL_DOCUMENT, parse_scenario

CANONICAL = parse_scenario(CANONICAL_DOCUMENT)
RECORDS = run(CANONICAL).records

LEVEL = SensorBinding("lvl-1", "Tank 1", (Channel("water_level"), Channel("pressure", unit="psi")), interval=5)
FLOW = SensorBinding("flow-1", "Pipe", (Channel("flow", unit="gal/min"),), interval=1)
QUALITY = SensorBinding(
    "wq-2", "Tank 2", (Channel("temperature"), Channel("ph"), Channel("do"), Channel("do_saturation")), interval=30
)
BINDINGS = [LEVEL, FLOW, QUALITY]
FLOOR = {"sensor_data.Level": 1e-4, "sensor_data.pH": 0.01}


def clean_stream(seed=0):
    return list(emit(RECORDS, BINDINGS, FLOOR, seed=seed))


def test_sample_counts_per_interval():
    s = clean_stream()
    assert sum(r.sensor_id == "lvl-1" for r in s) == 61
    assert sum(r.sensor_id == "flow-1" for r in s) == 301
    assert sum(r.sensor_id == "wq-2" for r in s) == 11
    assert [r.counter for r in s if r.sensor_id == "lvl-1"] == list(range(1, 62))


def test_ordering_time_then_binding():
    s = clean_stream()
    keys = [(r.time, [b.sensor_id for b in BINDINGS].index(r.sensor_id)) for r in s]
    assert keys == sorted(keys)


def test_unit_conversion_flow_gpm():
    flow = [r for r in clean_stream() if r.sensor_id == "flow-1"]
    assert flow[0].readings["sensor_data.Flow"] == 0.0
    assert flow[1].readings["sensor_data.Flow"] == pytest.approx(55.4761, abs=1e-3)
    assert flow[5].readings["sensor_data.Flow"] == 0.0


def test_pressure_psi_and_do_saturation_percent():
    s = clean_stream()
    lvl0 = next(r for r in s if r.sensor_id == "lvl-1")
    assert lvl0.readings["sensor_data.Pressure"] == pytest.approx(0.283552, abs=1e-5)
    wq0 = next(r for r in s if r.sensor_id == "wq-2")
    assert wq0.readings["sensor_data.DO_Saturation"] == pytest.approx(100.0, abs=1e-9)


def test_noise_is_seeded_and_substreamed():
    a, b, c = clean_stream(0), clean_stream(0), clean_stream(1)
    assert a == b
    assert a != c
    # dropping a sensor leaves the others' readings untouched
    solo = list(emit(RECORDS, [LEVEL], FLOOR, seed=0))
    assert [r.readings for r in solo] == [r.readings for r in a if r.sensor_id == "lvl-1"]
    lv = [r.noise["sensor_data.Level"] for r in a if r.sensor_id == "lvl-1"]
    assert any(e != 0 for e in lv)
    assert all(r.noise.get("sensor_data.Pressure", 0.0) == 0.0 for r in a)


def test_battery_and_rssi():
    r = clean_stream()[-1]
    assert r.battery == pytest.approx(3.29 - 1e-7 * 300)
    assert r.rssi == 40


def test_epoch_from_unique_id():
    assert epoch_ms_from_unique_id("20240131120000_x") == 1706702400000
    assert epoch_ms_from_unique_id("nope") == 0


def test_binding_errors_are_listed():
    bad = [
        SensorBinding("a", "Nowhere", (Channel("water_level"),)),
        SensorBinding("b", "Tank 1", (Channel("temperature", unit="degF"),)),
        SensorBinding("c", "Tank 1", (Channel("water_level"),), interval=7),
    ]
    with pytest.raises(ConfigError) as info:
        list(emit(RECORDS, bad))
    text = str(info.value)
    assert "Nowhere" in text and "temperature" in text and "interval" in text


def test_parse_bindings_shorthand():
    bindings, floor = parse_bindings(
        {"sensors": [{"sensor_id": "x", "source": "Tank 1", "channels": ["water_level"], "interval": 1}],
         "noise_floor": {"sensor_data.Level": 0.001}}
    )
    assert bindings[0].fields == ("sensor_data.Level",)
    assert floor == {"sensor_data.Level": 0.001}


def _field(stream, sid, f):
    return [(r.time, r.readings[f]) for r in stream if r.sensor_id == sid]


def test_bias_drift_stuck_replay_noise():
    clean = clean_stream()
    lv = "sensor_data.Level"
    attacks = [
        AttackSpec(AttackKind.BIAS, "lvl-1", lv, 50, 100, 0.05),
        AttackSpec(AttackKind.DRIFT, "lvl-1", lv, 150, 200, 1e-3),
        AttackSpec(AttackKind.STUCK_AT, "lvl-1", lv, 210, 240, "last"),
        AttackSpec(AttackKind.REPLAY, "lvl-1", lv, 250, 265, None, source_window=(0, 5)),
        AttackSpec(AttackKind.NOISE, "lvl-1", lv, 270, 300, 3.0),
    ]
    bad = apply_attacks(clean, attacks, 300)
    c, t = dict(_field(clean, "lvl-1", lv)), dict(_field(bad, "lvl-1", lv))
    assert t[75] == pytest.approx(c[75] + 0.05)
    assert t[200] == pytest.approx(c[200] + 0.05)
    assert t[215] == t[240] == c[210]
    assert [t[x] for x in (250, 255, 260, 265)] == [c[0], c[5], c[0], c[5]]
    noise = {r.time: r.noise[lv] for r in clean if r.sensor_id == "lvl-1"}
    assert t[280] == pytest.approx(c[280] + 2.0 * noise[280])
    assert t[45] == c[45] and t[105] == c[105]


def test_labels_exact_and_local():
    clean = clean_stream()
    attacks = [AttackSpec(AttackKind.BIAS, "lvl-1", "sensor_data.Level", 50, 100, 0.05)]
    bad = apply_attacks(clean, attacks, 300)
    assert len(bad) == len(clean)
    for a, b in zip(clean, bad):
        inside = b.sensor_id == "lvl-1" and 50 <= b.time <= 100
        assert b.attacked == inside
        if not inside:
            assert a == b
        else:
            assert a.readings["sensor_data.Pressure"] == b.readings["sensor_data.Pressure"]


def test_dropout_leaves_counter_gaps():
    clean = clean_stream()
    bad = apply_attacks(clean, [AttackSpec(AttackKind.DROPOUT, "flow-1", "*", 100, 200, 0.5, seed=3)], 300)
    kept = [r for r in bad if r.sensor_id == "flow-1"]
    dropped = 301 - len(kept)
    assert 20 < dropped < 80
    counters = [r.counter for r in kept]
    assert counters != list(range(1, len(kept) + 1))
    assert all(r.attacked == (100 <= r.time <= 200) for r in kept)
    assert apply_attacks(clean, [AttackSpec(AttackKind.DROPOUT, "flow-1", "*", 100, 200, 0.5, seed=3)], 300) == bad


def test_overlapping_attacks_rejected():
    clean = clean_stream()
    with pytest.raises(ConfigError, match="overlap"):
        apply_attacks(
            clean,
            [
                AttackSpec(AttackKind.BIAS, "lvl-1", "sensor_data.Level", 50, 100, 0.05),
                AttackSpec(AttackKind.DRIFT, "lvl-1", "sensor_data.Level", 90, 120, 0.01),
            ],
            300,
        )


def test_windows_outside_duration_rejected():
    with pytest.raises(ConfigError):
        apply_attacks(clean_stream(), [AttackSpec(AttackKind.BIAS, "lvl-1", "sensor_data.Level", 250, 400, 1)], 300)
    with pytest.raises(ConfigError):
        apply_attacks(clean_stream(), [AttackSpec(AttackKind.BIAS, "ghost", "sensor_data.Level", 0, 10, 1)], 300)


def test_parse_attacks_document():
    (a,) = parse_attacks({"attacks": [{"kind": "StuckAt", "sensor": "lvl-1", "field": "sensor_data.Level",
                                       "window": [10, 20], "value": "last"}]})
    assert a.kind is AttackKind.STUCK_AT and a.value == "last"
    with pytest.raises(ConfigError):
        parse_attacks({"attacks": [{"kind": "melt", "sensor": "x", "window": [0, 1]}]})


def test_csv_and_jsonl_hold_the_same_records(tmp_path):
    clean = clean_stream()
    bad = apply_attacks(clean, [AttackSpec(AttackKind.BIAS, "lvl-1", "sensor_data.Level", 50, 100, 0.05)], 300)
    write_dataset(clean, bad, tmp_path / "j", "jsonl", "u")
    write_dataset(clean, bad, tmp_path / "c", "csv", "u")
    for name in ("clean", "tampered"):
        j = read_dataset(tmp_path / "j" / f"{name}.jsonl")
        c = read_dataset(tmp_path / "c" / f"{name}.csv")
        assert len(j) == len(c)
        for x, y in zip(j, c):
            assert x == y


def test_dataset_manifest_and_determinism(tmp_path):
    def build(d):
        clean = clean_stream()
        bad = apply_attacks(clean, [AttackSpec(AttackKind.BIAS, "lvl-1", "sensor_data.Level", 50, 100, 0.05)], 300)
        return write_dataset(clean, bad, d, "jsonl", "u")

    m1, m2 = build(tmp_path / "a"), build(tmp_path / "b")
    assert m1 == m2
    assert m1["attacked_records"] == 11
    for name in ("clean.jsonl", "tampered.jsonl"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_jsonl_line_shape():
    line = render_jsonl(clean_stream()[:1]).splitlines()[0]
    doc = json.loads(line)
    assert doc["sensor_id"] == "lvl-1" and doc["counter"] == 1 and "sensor_data.Level" in doc
    assert render_csv(clean_stream()[:3]).splitlines()[0].startswith("timestamp,sensor_id")


async def _collect(port):
    reader, writer = await asyncio.open_connection("127.0.0.1", port)
    data = await reader.read()
    writer.close()
    return data


async def _serve_and_read(records, pace, n):
    server = StreamServer(records, pace=pace, subscribers=n)
    port = await server.start()
    clients = [asyncio.ensure_future(_collect(port)) for _ in range(n)]
    sent = await server.produce()
    out = await asyncio.gather(*clients)
    await server.close()
    return sent, out


def test_stream_matches_jsonl_for_two_subscribers():
    stream = clean_stream()
    sent, out = asyncio.run(_serve_and_read(stream, 0.0, 2))
    expected = render_jsonl(stream).encode()
    assert sent == len(stream)
    assert out[0] == out[1] == expected


def test_stream_pacing():
    head = [r for r in clean_stream() if r.time <= 10]
    t0 = time.monotonic()
    asyncio.run(_serve_and_read(head, 0.02, 1))
    elapsed = time.monotonic() - t0
    assert 0.18 <= elapsed < 2.0
