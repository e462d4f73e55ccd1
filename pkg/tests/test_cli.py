import json
import shutil
import subprocess
import sys
from pathlib import Path

import pytest

from acwa_twin.cli import compare_tables
from acwa_twin.engine import TABLE4_TWO_NODE
from acwa_twin.network import CANONICAL_DOCUMENT

EXE = shutil.which("acwa-twin")
BASE = [EXE] if EXE else [sys.executable, "-m", "acwa_twin"]

BINDINGS = {
    "sensors": [
        {"sensor_id": "lvl-1", "source": "Tank 1", "channels": ["water_level", {"selector": "pressure", "unit": "psi"}]},
        {"sensor_id": "flow-1", "source": "Pipe", "interval": 1, "channels": [{"selector": "flow", "unit": "gal/min"}]},
    ],
    "noise_floor": {"sensor_data.Level": 0.0005},
}
ATTACKS = {"attacks": [{"kind": "bias", "sensor": "lvl-1", "field": "sensor_data.Level", "window": [100, 150], "offset": 0.02}]}


def cli(*args, cwd=None):
    return subprocess.run([*BASE, *map(str, args)], capture_output=True, text=True, cwd=cwd, timeout=120)


@pytest.fixture
def scenario_file(tmp_path):
    p = tmp_path / "scenario.json"
    p.write_text(CANONICAL_DOCUMENT)
    return p


def test_help_lists_subcommands():
    out = cli("--help").stdout
    for name in ("validate", "run", "generate", "compare"):
        assert name in out
    assert "--strict-regime" in cli("run", "--help").stdout


def test_validate_ok_and_usage(scenario_file):
    r = cli("validate", scenario_file)
    assert r.returncode == 0, r.stderr
    assert cli("validate").returncode == 2
    assert cli("frobnicate").returncode == 2


def test_validate_reports_errors(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text(CANONICAL_DOCUMENT.replace('"Simulation Time": "300"', '"Simulation Time": "-5"'))
    r = cli("validate", p)
    assert r.returncode == 1
    assert "Error" in r.stdout


def test_missing_file_exits_1(tmp_path):
    r = cli("run", tmp_path / "none.json")
    assert r.returncode == 1 and "cannot read" in r.stderr


def test_run_writes_table4_and_manifest(tmp_path, scenario_file):
    out = tmp_path / "run.csv"
    r = cli("run", scenario_file, "--out", out)
    assert r.returncode == 0, r.stderr
    lines = out.read_text().splitlines()
    assert lines[0] == ",".join(TABLE4_TWO_NODE)
    assert len(lines) == 302
    manifest = json.loads((tmp_path / "run.manifest.json").read_text())
    assert manifest["summary"]["record_count"] == 301
    assert "PipeUnprimed" in r.stdout


def test_run_default_output_name(tmp_path):
    r = cli("run", "--template", "line", cwd=tmp_path)
    assert r.returncode == 0, r.stderr
    assert (tmp_path / "template-line.csv").exists()


def test_invalid_run_leaves_no_artifacts(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text(CANONICAL_DOCUMENT.replace('"Simulation Time": "300"', '"Simulation Time": "-5"'))
    r = cli("run", p, "--out", tmp_path / "o.csv")
    assert r.returncode == 1
    assert sorted(x.name for x in tmp_path.iterdir()) == ["bad.json"]


def test_strict_regime_aborts_without_partial_output(tmp_path):
    r = cli("run", "--template", "star", "--strict-regime", "--out", tmp_path / "s.csv")
    assert r.returncode == 1
    assert "transitional" in r.stderr.lower() or "Re" in r.stderr
    assert list(tmp_path.iterdir()) == []


def test_rerun_and_compare_zero(tmp_path, scenario_file):
    assert cli("run", scenario_file, "--out", tmp_path / "a.csv").returncode == 0
    assert cli("run", scenario_file, "--out", tmp_path / "b.csv").returncode == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    r = cli("compare", tmp_path / "a.csv", tmp_path / "b.csv")
    assert r.returncode == 0, r.stdout
    assert all(v == (0.0, 0.0) for v in compare_tables(tmp_path / "a.csv", tmp_path / "b.csv").values())


def test_compare_detects_difference_and_schema_mismatch(tmp_path, scenario_file):
    cli("run", scenario_file, "--out", tmp_path / "a.csv")
    cli("run", scenario_file, "--out", tmp_path / "si.csv", "--schema", "si")
    text = (tmp_path / "a.csv").read_text().replace("0.130000", "0.130100", 1)
    (tmp_path / "c.csv").write_text(text)
    r = cli("compare", tmp_path / "a.csv", tmp_path / "c.csv")
    assert r.returncode == 1
    assert cli("compare", tmp_path / "a.csv", tmp_path / "c.csv", "--tolerance", "1e-3").returncode == 0
    r = cli("compare", tmp_path / "a.csv", tmp_path / "si.csv")
    assert r.returncode == 1 and "Time (seconds)" in (r.stdout + r.stderr)


def test_generate_dataset_with_attacks(tmp_path, scenario_file):
    cli("run", scenario_file, "--out", tmp_path / "run.csv")
    (tmp_path / "b.json").write_text(json.dumps(BINDINGS))
    (tmp_path / "a.json").write_text(json.dumps(ATTACKS))
    out = tmp_path / "ds"
    r = cli("generate", tmp_path / "run.manifest.json", tmp_path / "b.json", "--attacks", tmp_path / "a.json",
            "--out-dir", out, "--seed", "7")
    assert r.returncode == 0, r.stderr
    manifest = json.loads((out / "dataset.manifest.json").read_text())
    assert manifest["attacked_records"] == 11
    clean = (out / "clean.jsonl").read_text().splitlines()
    assert len(clean) == 61 + 301
    again = tmp_path / "ds2"
    cli("generate", tmp_path / "run.manifest.json", tmp_path / "b.json", "--attacks", tmp_path / "a.json",
        "--out-dir", again, "--seed", "7")
    for name in ("clean.jsonl", "tampered.jsonl"):
        assert (out / name).read_bytes() == (again / name).read_bytes()


def test_generate_rejects_bad_attack_without_output(tmp_path, scenario_file):
    cli("run", scenario_file, "--out", tmp_path / "run.csv")
    (tmp_path / "b.json").write_text(json.dumps(BINDINGS))
    bad = {"attacks": [{"kind": "bias", "sensor": "lvl-1", "field": "sensor_data.Level", "window": [250, 400], "offset": 1}]}
    (tmp_path / "a.json").write_text(json.dumps(bad))
    r = cli("generate", tmp_path / "run.manifest.json", tmp_path / "b.json", "--attacks", tmp_path / "a.json",
            "--out-dir", tmp_path / "ds")
    assert r.returncode == 1
    assert not (tmp_path / "ds").exists()


def test_tampered_run_output_is_refused(tmp_path, scenario_file):
    cli("run", scenario_file, "--out", tmp_path / "run.csv")
    (tmp_path / "b.json").write_text(json.dumps(BINDINGS))
    with open(tmp_path / "run.csv", "a") as fh:
        fh.write("junk\n")
    r = cli("generate", tmp_path / "run.manifest.json", tmp_path / "b.json", "--out-dir", tmp_path / "ds")
    assert r.returncode == 1 and "digest" in r.stderr


def test_unreproducible_manifest_is_internal_error(tmp_path, scenario_file):
    cli("run", scenario_file, "--out", tmp_path / "run.csv")
    (tmp_path / "b.json").write_text(json.dumps(BINDINGS))
    mpath = tmp_path / "run.manifest.json"
    manifest = json.loads(mpath.read_text())
    manifest["scenario"]["nodes"]["Tank 1"]["initial_water_level"] = "0.19 m"
    mpath.write_text(json.dumps(manifest))
    r = cli("generate", mpath, tmp_path / "b.json", "--out-dir", tmp_path / "ds")
    assert r.returncode == 3, r.stderr
    assert not (tmp_path / "ds").exists()


def test_generate_serve_streams_jsonl(tmp_path, scenario_file):
    import socket
    import time

    cli("run", scenario_file, "--out", tmp_path / "run.csv")
    (tmp_path / "b.json").write_text(json.dumps(BINDINGS))
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        port = s.getsockname()[1]
    proc = subprocess.Popen(
        [*BASE, "generate", tmp_path / "run.manifest.json", tmp_path / "b.json", "--serve", f"127.0.0.1:{port}",
         "--out-dir", tmp_path / "ds"],
        stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True,
    )
    try:
        data = b""
        for _ in range(100):
            try:
                with socket.create_connection(("127.0.0.1", port), timeout=5) as c:
                    while chunk := c.recv(65536):
                        data += chunk
                break
            except ConnectionRefusedError:
                time.sleep(0.1)
        assert proc.wait(timeout=60) == 0
    finally:
        proc.kill()
    assert data == (tmp_path / "ds" / "clean.jsonl").read_bytes()
