"""Batch command line: ``nzeb <command> [options]``.

Every command writes CSV files, a plain-text summary and ``manifest.json``
into ``--out``. Exit status is 0 when all requested outputs were written,
1 on a model error, 2 on a usage error and 3 when a data file is missing.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

from . import __version__
from .config import ConfigError, load_config
from .errors import MissingDataError
from .projections import default_data_dir, load_curves
from .reports import (
    Filters,
    atomic_write_text,
    crossover_tables,
    finance_tables,
    gas_tables,
    h2_tables,
    lcoe_tables,
    savings_tables,
)

COMMANDS = ("lcoe", "gas-equiv", "savings", "finance", "crossover", "h2", "report-all")
CASES = ("existing", "code", "new", "improved")


@dataclass(frozen=True)
class RunManifest:
    """Everything that determines a run's outputs, with a hash-based run id."""

    command: str
    data_dir: str
    output_dir: str
    config_path: str | None
    config_sha256: str | None
    filters: dict
    data_sha256: dict

    @property
    def run_id(self) -> str:
        payload = {
            "command": self.command,
            "config_sha256": self.config_sha256,
            "filters": self.filters,
            "data_sha256": self.data_sha256,
        }
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _data_hashes(data_dir: Path) -> dict:
    return {p.name: _sha256(p) for p in sorted(data_dir.iterdir()) if p.is_file() and p.suffix in (".csv", ".cfg")}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--data-dir", type=Path, default=None, help="curve bundle with manifest.csv")
    common.add_argument("--out", type=Path, default=Path("out"), help="output directory (default: ./out)")
    common.add_argument("--config", type=Path, default=None, help="key = value parameter file")
    common.add_argument("--case", choices=CASES, default=None, help="restrict to one home type")
    common.add_argument("--year", type=int, default=None, help="restrict to one install year")
    common.add_argument("--itc", action=argparse.BooleanOptionalAction, default=None,
                        help="restrict to scenarios with (or without) the tax credit")
    common.add_argument("--storage", type=float, default=None, metavar="FRACTION",
                        help="storage effectiveness in [0, 1]")
    common.add_argument("--v2h", action="store_true", help="use vehicle-to-home storage")
    common.add_argument("--nominal", action="store_true", help="report money in nominal dollars of each year")

    parser = argparse.ArgumentParser(prog="nzeb", description="Net-zero home and hydrogen techno-economics.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command")
    helps = {
        "lcoe": "residential, utility and grid LCOE",
        "gas-equiv": "electricity prices as $/gallon of gasoline",
        "savings": "monthly savings for every scenario figure",
        "finance": "NPV, IRR, SIR and SPB tables",
        "crossover": "first install month with non-negative savings",
        "h2": "hydrogen LCOH, optimal sizing and sensitivity",
        "report-all": "every report",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def _run_tables(command: str, cfg, curves, f: Filters):
    files: dict[str, str] = {}

    def add(tables):
        for t in tables:
            files[f"{t.name}.csv"] = t.to_csv()
            files[f"{t.name}.txt"] = t.to_text()

    if command in ("lcoe", "report-all"):
        add(lcoe_tables(cfg, curves, f))
    if command in ("gas-equiv", "report-all"):
        add(gas_tables(cfg, curves, f))
    if command in ("savings", "report-all"):
        add(savings_tables(cfg, curves, f))
    if command in ("finance", "report-all"):
        tables, schedules = finance_tables(cfg, curves, f)
        add(tables)
        files.update({f"schedules/{k}.csv": v for k, v in schedules.items()})
    if command in ("crossover", "report-all"):
        add(crossover_tables(cfg, curves, f))
    if command in ("h2", "report-all"):
        add(h2_tables(cfg, curves, f))
    return files


def run(command: str, args: argparse.Namespace) -> int:
    """Execute one command. Returns the process exit status."""
    data_dir = Path(args.data_dir) if args.data_dir is not None else default_data_dir()
    if args.storage is not None and not 0 <= args.storage <= 1:
        print("error: --storage must lie in [0, 1]", file=sys.stderr)
        return 2
    try:
        cfg = load_config(args.config)
        curves = load_curves(data_dir)
        f = Filters(args.case, args.year, args.itc, args.storage, args.v2h, args.nominal)
        files = _run_tables(command, cfg, curves, f)
        manifest = RunManifest(
            command=command,
            data_dir=str(data_dir),
            output_dir=str(args.out),
            config_path=None if args.config is None else str(args.config),
            config_sha256=None if args.config is None else _sha256(Path(args.config)),
            filters=asdict(f),
            data_sha256=_data_hashes(data_dir),
        )
    except MissingDataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    out = Path(args.out)
    record = asdict(manifest)
    record["run_id"] = manifest.run_id
    record["files"] = {name: hashlib.sha256(text.encode()).hexdigest() for name, text in sorted(files.items())}
    try:
        for name, text in sorted(files.items()):
            atomic_write_text(out / name, text)
        atomic_write_text(out / "manifest.json", json.dumps(record, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        print(f"error: cannot write outputs: {exc}", file=sys.stderr)
        return 1
    for name in sorted(n for n in files if n.endswith(".txt")):
        print(files[name])
    print(f"run {manifest.run_id}: wrote {len(files) + 1} files to {out}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    return run(args.command, args)


if __name__ == "__main__":
    sys.exit(main())
