"""Command-line front end: validate, run, generate, compare.

Exit codes: 0 success, 1 validation or domain error, 2 usage error,
3 internal invariant breach.
"""

from __future__ import annotations

import argparse
import asyncio
import csv
import dataclasses
import hashlib
import json
import logging
import math
import os
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .datagen import (
    FORMATS,
    StreamServer,
    apply_attacks,
    emit,
    epoch_ms_from_unique_id,
    parse_attacks,
    parse_bindings,
    write_dataset,
)
from .engine import RecordFormatter, iterate, render_csv, run_to_files
from .errors import AcwaError, ContractViolation, InvariantBreach, SolverError
from .hydro import RegimePolicy
from .network import OutputSchema, TemplateKind, load_scenario, parse_scenario, topology_template, validate

log = logging.getLogger("acwa_twin")

EXIT_OK, EXIT_ERROR, EXIT_USAGE, EXIT_INTERNAL = 0, 1, 2, 3
_SCHEMAS = {"table4": OutputSchema.TABLE4, "si": OutputSchema.SI}


class UsageError(Exception):
    pass


def _configure_logging() -> None:
    level = os.environ.get("ACWA_TWIN_LOG", "warning").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def _read_json(path: Path, what: str) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise AcwaError(f"cannot read {what} {path}: {exc.strerror or exc}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise AcwaError(f"{what} {path} is not valid JSON: {exc}") from None


def _load(args) -> "Scenario":
    if getattr(args, "template", None):
        if args.scenario:
            raise UsageError("give either a scenario file or --template, not both")
        return topology_template(args.template)
    if not args.scenario:
        raise UsageError("a scenario file or --template is required")
    path = Path(args.scenario)
    try:
        return load_scenario(path)
    except OSError as exc:
        raise AcwaError(f"cannot read scenario {path}: {exc.strerror or exc}") from None


def cmd_validate(args) -> int:
    scenario = _load(args)
    report = validate(scenario)
    print(report.format())
    return EXIT_OK if report.ok else EXIT_ERROR


def cmd_run(args) -> int:
    scenario = _load(args)
    if args.schema:
        scenario = dataclasses.replace(scenario, output_schema=_SCHEMAS[args.schema])
    if args.strict_regime:
        scenario = dataclasses.replace(scenario, regime_policy=RegimePolicy.STRICT)
    report = validate(scenario)
    if not report.ok:
        print(report.format())
        return EXIT_ERROR
    for w in report.warnings:
        print(w.format())
    out = Path(args.out) if args.out else Path(f"{scenario.unique_id}.csv")
    manifest_path = out.with_suffix(".manifest.json")
    result, manifest = run_to_files(scenario, out, manifest_path)
    s = result.summary
    print(f"records: {s.record_count}")
    print(f"events: {', '.join(f'{k} x{v}' for k, v in s.event_counts.items()) or 'none'}")
    for e in result.events[:20]:
        print(f"  t={e.time:g}s {e.kind.value} {e.link}: {e.detail}")
    if len(result.events) > 20:
        print(f"  ... {len(result.events) - 20} more in the manifest")
    print(f"mass-balance residual: {s.mass_balance_residual:.3e}")
    print(f"runtime: {s.runtime_s:.3f} s")
    print(f"wrote {out} and {manifest_path}")
    return EXIT_OK


def _rerun_from_manifest(manifest_path: Path):
    manifest = _read_json(manifest_path, "run manifest")
    try:
        scenario = parse_scenario(json.dumps(manifest["scenario"]))
        csv_info = manifest["csv"]
        schema = OutputSchema.parse(manifest.get("output_schema", scenario.output_schema.value))
    except (KeyError, TypeError) as exc:
        raise AcwaError(f"run manifest {manifest_path} is missing {exc}") from None
    csv_path = manifest_path.parent / csv_info["file"]
    try:
        on_disk = hashlib.sha256(csv_path.read_bytes()).hexdigest()
    except OSError as exc:
        raise AcwaError(f"run output {csv_path} referenced by the manifest is unreadable: {exc.strerror}") from None
    if on_disk != csv_info["sha256"]:
        raise AcwaError(f"run output {csv_path} does not match the digest recorded in {manifest_path}")
    records = [record for _, record in iterate(scenario)]
    rendered = render_csv(records, RecordFormatter(scenario, schema)).encode("utf-8")
    if hashlib.sha256(rendered).hexdigest() != on_disk:
        raise InvariantBreach(f"re-running the scenario of {manifest_path} did not reproduce {csv_path}")
    return scenario, records


def cmd_generate(args) -> int:
    manifest_path = Path(args.manifest)
    scenario, records = _rerun_from_manifest(manifest_path)
    bindings, noise_floor = parse_bindings(_read_json(Path(args.bindings), "bindings file"))
    base = epoch_ms_from_unique_id(scenario.unique_id)
    clean = list(emit(records, bindings, noise_floor, seed=args.seed, base_epoch_ms=base))
    tampered = None
    attacks = []
    if args.attacks:
        attack_doc = _read_json(Path(args.attacks), "attacks file")
        attacks = parse_attacks(attack_doc)
        tampered = apply_attacks(clean, attacks, duration=scenario.duration)
    out_dir = Path(args.out_dir) if args.out_dir else manifest_path.parent / f"{scenario.unique_id}-dataset"
    written = False
    if not args.serve or args.out_dir:
        manifest = write_dataset(
            clean,
            tampered,
            out_dir,
            args.format,
            unique_id=scenario.unique_id,
            extra={
                "seed": args.seed,
                "run_manifest": str(manifest_path),
                "sensors": [b.sensor_id for b in bindings],
                "attacks": [
                    {k: (v.value if hasattr(v, "value") and not isinstance(v, (int, float, str)) else v)
                     for k, v in dataclasses.asdict(a).items()}
                    for a in attacks
                ],
            },
        )
        written = True
        for name, info in manifest["files"].items():
            print(f"wrote {out_dir / name}: {info['records']} records")
        if tampered is not None:
            print(f"attacked records: {manifest['attacked_records']}")
    if args.serve:
        stream = tampered if tampered is not None else clean
        host, _, port = args.serve.rpartition(":")
        try:
            port_number = int(port)
        except ValueError:
            raise UsageError(f"--serve expects host:port, got {args.serve!r}") from None
        server = StreamServer(stream, host or "127.0.0.1", port_number, args.pace, args.subscribers)

        async def _serve() -> int:
            bound = await server.start()
            print(f"serving {len(stream)} records on {server.host}:{bound}", flush=True)
            try:
                return await server.produce()
            finally:
                await server.close()

        sent = asyncio.run(_serve())
        print(f"streamed {sent} records")
    elif not written:
        print("nothing to do")
    return EXIT_OK


def _numeric(cell: str) -> Optional[float]:
    if cell in ("true", "false"):
        return 1.0 if cell == "true" else 0.0
    parts = cell.split(":")
    if len(parts) == 3:
        try:
            return int(parts[0]) * 3600 + int(parts[1]) * 60 + float(parts[2])
        except ValueError:
            return None
    try:
        return float(cell)
    except ValueError:
        return None


def _cell_delta(a: str, b: str) -> float:
    if a == b:
        return 0.0
    x, y = _numeric(a), _numeric(b)
    if x is None or y is None:
        return math.inf if (a == "") != (b == "") else 1.0
    return abs(x - y)


def _read_table(path: Path) -> tuple[list[str], list[list[str]]]:
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise AcwaError(f"cannot read {path}: {exc.strerror or exc}") from None
    if not rows:
        raise AcwaError(f"{path} is empty")
    return rows[0], rows[1:]


def compare_tables(path_a: Path, path_b: Path) -> dict[str, tuple[float, float]]:
    """Per-column (max-abs, RMS) deviation between two CSVs sharing a header."""
    head_a, rows_a = _read_table(path_a)
    head_b, rows_b = _read_table(path_b)
    if head_a != head_b:
        only_a = [c for c in head_a if c not in head_b]
        only_b = [c for c in head_b if c not in head_a]
        detail = []
        if only_a:
            detail.append(f"only in {path_a}: {', '.join(only_a)}")
        if only_b:
            detail.append(f"only in {path_b}: {', '.join(only_b)}")
        if not detail:
            detail.append("same columns in a different order")
        raise AcwaError("schema mismatch; " + "; ".join(detail))
    if len(rows_a) != len(rows_b):
        raise AcwaError(f"row count differs: {len(rows_a)} in {path_a}, {len(rows_b)} in {path_b}")
    stats = {}
    for j, col in enumerate(head_a):
        deltas = [_cell_delta(ra[j], rb[j]) for ra, rb in zip(rows_a, rows_b)]
        worst = max(deltas, default=0.0)
        rms = math.sqrt(math.fsum(d * d for d in deltas) / len(deltas)) if deltas else 0.0
        stats[col] = (worst, rms)
    return stats


def cmd_compare(args) -> int:
    stats = compare_tables(Path(args.a), Path(args.b))
    width = max(len(c) for c in stats)
    print(f"{'column':<{width}}  {'max_abs':>14}  {'rms':>14}")
    for col, (worst, rms) in stats.items():
        print(f"{col:<{width}}  {worst:14.6g}  {rms:14.6g}")
    failing = [c for c, (worst, _) in stats.items() if worst > args.tolerance]
    if failing:
        print(f"{len(failing)} column(s) exceed tolerance {args.tolerance:g}: {', '.join(failing)}")
        return EXIT_ERROR
    return EXIT_OK


class _HelpFormatter(argparse.ArgumentDefaultsHelpFormatter):
    """Show defaults only when they carry information."""

    def _get_help_string(self, action):
        if action.default is None or action.default is False or action.default == argparse.SUPPRESS:
            return action.help
        return super()._get_help_string(action)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="acwa-twin", description="Tank-network water quality simulator and dataset generator.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, metavar="{validate,run,generate,compare}")
    templates = [k.value for k in TemplateKind]

    v = sub.add_parser("validate", help="check a scenario file", description="Print the validation report of a scenario.")
    v.add_argument("scenario", nargs="?", help="scenario file (flat key/value or extended JSON)")
    v.add_argument("--template", choices=templates, help="validate a built-in topology instead of a file")
    v.set_defaults(func=cmd_validate)

    r = sub.add_parser(
        "run",
        help="simulate a scenario to CSV",
        description="Simulate a scenario, writing the CSV and a .manifest.json sidecar.",
        formatter_class=_HelpFormatter,
    )
    r.add_argument("scenario", nargs="?", help="scenario file")
    r.add_argument("--out", help="output CSV path; <unique_id>.csv in the working directory when omitted")
    r.add_argument("--schema", choices=sorted(_SCHEMAS), help="output schema: table4 (HH:MM:SS, m, psi) or si (s, m, Pa); the scenario decides when omitted")
    r.add_argument("--strict-regime", action="store_true", help="abort on transitional flow (2300 <= Re <= 4000) instead of treating it as turbulent")
    r.add_argument("--template", choices=templates, help="run a built-in topology instead of a file")
    r.set_defaults(func=cmd_run)

    g = sub.add_parser(
        "generate",
        help="derive sensor datasets from a run",
        description="Re-run the scenario recorded in a run manifest and emit sensor datasets.",
        formatter_class=_HelpFormatter,
    )
    g.add_argument("manifest", help="run manifest written by 'run'")
    g.add_argument("bindings", help="sensor bindings JSON")
    g.add_argument("--attacks", help="attack specification JSON; writes a tampered dataset alongside the clean one")
    g.add_argument("--format", choices=FORMATS, default="jsonl", help="dataset file format")
    g.add_argument("--seed", type=int, default=0, help="seed for sensor noise and attack randomness")
    g.add_argument("--out-dir", help="dataset directory; <unique_id>-dataset next to the manifest when omitted")
    g.add_argument("--serve", metavar="HOST:PORT", help="stream newline-delimited JSON records over TCP")
    g.add_argument("--pace", type=float, default=0.0, help="wall-clock seconds per simulated second when serving; 0 sends unpaced")
    g.add_argument("--subscribers", type=int, default=1, help="subscribers to wait for before streaming")
    g.set_defaults(func=cmd_generate)

    c = sub.add_parser(
        "compare",
        help="diff two CSV files column by column",
        description="Report per-column max-abs and RMS deviation; exit 0 iff every max-abs is within tolerance.",
        formatter_class=_HelpFormatter,
    )
    c.add_argument("a", help="first CSV")
    c.add_argument("b", help="second CSV")
    c.add_argument("--tolerance", type=float, default=0.0, help="largest acceptable absolute deviation, in column units")
    c.set_defaults(func=cmd_compare)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    started = time.perf_counter()
    try:
        code = args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"acwa-twin: error: {exc}", file=sys.stderr)
        code = EXIT_USAGE
    except (InvariantBreach, SolverError, ContractViolation) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        dump = getattr(exc, "dump", None)
        if dump:
            print(json.dumps(dump, indent=2, default=str), file=sys.stderr)
        code = EXIT_INTERNAL
    except (AcwaError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        code = EXIT_ERROR
    log.debug("%s finished in %.3f s with exit %d", args.command, time.perf_counter() - started, code)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
