"""Command-line frontend.

Four commands: repair a table, explain one repaired cell, count violations,
and serve the HTTP API. Exit codes are stable: 0 success, 2 bad input
(unreadable files, parse or bind failures, bad arguments), 3 repair failure
(external process trouble or a diverging repair), 4 the named cell was not
changed by the repair, 5 environment problems such as an occupied port.
"""

from __future__ import annotations

import sys
from fractions import Fraction
from pathlib import Path
from typing import NoReturn, Optional, Sequence

import click

from . import wire
from .adapter import load_adapter_registry
from .dc_lang import DenialConstraint, parse_constraints, violations
from .errors import (
    BlackBoxError,
    FixpointError,
    RepairLensError,
    UnexplainableCellError,
)
from .repair_engine import RepairAlgorithm, make_task, reference_repair
from .shapley_engine import (
    rank,
    shapley_cells_exact,
    shapley_cells_sampled,
    shapley_constraints,
)
from .table_model import CellRef, Table, diff_tables, parse_table, serialize_table

EXIT_INPUT = 2
EXIT_REPAIR = 3
EXIT_UNEXPLAINABLE = 4
EXIT_ENVIRONMENT = 5


def _fail(code: int, message: str) -> NoReturn:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        _fail(EXIT_INPUT, f"cannot read {path}: {exc}")


def _load_inputs(table_path: str, dc_path: str) -> tuple[Table, list[DenialConstraint]]:
    try:
        table = parse_table(_read_text(table_path))
        constraints = parse_constraints(_read_text(dc_path))
        for dc in constraints:
            dc.bind(table.schema)
    except RepairLensError as exc:
        _fail(EXIT_INPUT, str(exc))
    return table, constraints


def _algorithm(name: str, adapters: Optional[str]) -> RepairAlgorithm:
    if name == "reference":
        return reference_repair
    if adapters is None:
        _fail(EXIT_INPUT, f"algorithm {name!r} needs an adapter registry (--adapters)")
    try:
        registry = load_adapter_registry(Path(adapters))
    except (OSError, ValueError) as exc:
        _fail(EXIT_INPUT, f"cannot load adapter registry {adapters}: {exc}")
    if name not in registry:
        known = ", ".join(sorted(registry)) or "none"
        _fail(EXIT_INPUT, f"unknown algorithm {name!r} (registry has: {known})")
    from .adapter import ExternalRepairAlgorithm

    return ExternalRepairAlgorithm(registry[name])


def _parse_cell(text: str, table: Table) -> CellRef:
    row_text, sep, attr = text.partition(":")
    if not sep or not attr:
        _fail(EXIT_INPUT, f"--cell wants ROW:ATTR, got {text!r}")
    try:
        ref = CellRef(int(row_text), attr)
        table.check_ref(ref)
    except (ValueError, RepairLensError) as exc:
        _fail(EXIT_INPUT, f"bad cell {text!r}: {exc}")
    return ref


def _render_value(value) -> str:
    if isinstance(value, dict):  # encoded fraction
        return f"{value['num']}/{value['den']} ({value['decimal']})"
    return f"{float(value):.9g}"


def _print_text_report(doc: dict) -> None:
    target = doc["task"]["target"]
    click.echo(f"target: {target['row']}:{target['attr']}")
    expected = doc["task"]["expected"]
    click.echo(f"repaired to: {'' if expected is None else expected}")
    method = doc["method"]
    if "samples" in doc:
        method += f" (m={doc['samples']}, seed={doc.get('seed')}, {doc['imputation']})"
    elif "imputation" in doc:
        method += f" ({doc['imputation']})"
    click.echo(f"method: {method}")
    by_player = {}
    for entry in doc["values"]:
        p = entry["player"]
        key = p if isinstance(p, str) else f"{p['row']}:{p['attr']}"
        by_player[key] = entry
    names = [p if isinstance(p, str) else f"{p['row']}:{p['attr']}" for p in doc["ranking"]]
    width = max(6, max((len(n) for n in names), default=0))
    click.echo(f"{'rank':>4}  {'player'.ljust(width)}  value")
    for i, name in enumerate(names, start=1):
        entry = by_player[name]
        line = f"{i:>4}  {name.ljust(width)}  {_render_value(entry['value'])}"
        if "stderr" in entry:
            line += f"  (stderr {entry['stderr']:.3g})"
        click.echo(line)


@click.group()
def main() -> None:
    """Repair dirty tables under denial constraints and explain the repairs."""


@main.command("repair")
@click.argument("table_path")
@click.argument("dc_path")
@click.option("--algorithm", default="reference", show_default=True)
@click.option("--adapters", default=None, help="Adapter registry file.")
@click.option("--out", default=None, help="Write the clean CSV here plus a .changes.json sidecar.")
def cmd_repair(table_path: str, dc_path: str, algorithm: str, adapters: Optional[str], out: Optional[str]) -> None:
    """Repair TABLE_PATH under DC_PATH and emit the clean table."""
    table, constraints = _load_inputs(table_path, dc_path)
    alg = _algorithm(algorithm, adapters)
    try:
        clean = alg(constraints, table)
    except (BlackBoxError, FixpointError) as exc:
        _fail(EXIT_REPAIR, str(exc))
    except TypeError as exc:
        _fail(EXIT_INPUT, str(exc))
    csv_text = serialize_table(clean)
    changes = [wire.encode_change(c) for c in diff_tables(table, clean)]
    if out is None:
        click.echo(csv_text, nl=False)
    else:
        try:
            Path(out).write_text(csv_text, encoding="utf-8")
            Path(out + ".changes.json").write_text(
                wire.dumps({"changes": changes}) + "\n", encoding="utf-8"
            )
        except OSError as exc:
            _fail(EXIT_ENVIRONMENT, f"cannot write {out}: {exc}")
        click.echo(f"wrote {out} ({len(changes)} cell(s) changed)")


@main.command("explain")
@click.argument("table_path")
@click.argument("dc_path")
@click.option("--cell", required=True, metavar="ROW:ATTR", help="Repaired cell to explain.")
@click.option(
    "--mode",
    type=click.Choice(["constraints", "cells", "cells-exact"]),
    default="constraints",
    show_default=True,
)
@click.option("--m", default=5000, show_default=True, help="Samples per player (cells mode).")
@click.option("--seed", default=0, show_default=True)
@click.option(
    "--imputation",
    type=click.Choice(["column-distribution", "null"]),
    default="column-distribution",
    show_default=True,
)
@click.option("--workers", default=1, show_default=True)
@click.option("--format", "fmt", type=click.Choice(["text", "json"]), default="text", show_default=True)
@click.option("--algorithm", default="reference", show_default=True)
@click.option("--adapters", default=None, help="Adapter registry file.")
def cmd_explain(
    table_path: str,
    dc_path: str,
    cell: str,
    mode: str,
    m: int,
    seed: int,
    imputation: str,
    workers: int,
    fmt: str,
    algorithm: str,
    adapters: Optional[str],
) -> None:
    """Attribute the repair of one cell to constraints or to other cells."""
    table, constraints = _load_inputs(table_path, dc_path)
    target = _parse_cell(cell, table)
    alg = _algorithm(algorithm, adapters)
    try:
        task = make_task(alg, constraints, table, target)
        if mode == "constraints":
            report = shapley_constraints(alg, task)
        elif mode == "cells-exact":
            report = shapley_cells_exact(alg, task)
        else:
            report = shapley_cells_sampled(
                alg, task, m=m, seed=seed, imputation=imputation, workers=workers
            )
    except UnexplainableCellError as exc:
        _fail(EXIT_UNEXPLAINABLE, str(exc))
    except (BlackBoxError, FixpointError) as exc:
        _fail(EXIT_REPAIR, str(exc))
    except (RepairLensError, TypeError) as exc:
        _fail(EXIT_INPUT, str(exc))
    doc = wire.encode_report(report, rank(report))
    if fmt == "json":
        click.echo(wire.dumps(doc))
    else:
        _print_text_report(doc)


@main.command("validate")
@click.argument("table_path")
@click.argument("dc_path")
def cmd_validate(table_path: str, dc_path: str) -> None:
    """Count violations per constraint; a dirty table is not an error."""
    table, constraints = _load_inputs(table_path, dc_path)
    for dc in constraints:
        click.echo(f"{dc.id}: {len(violations(dc, table))}")


@main.command("serve")
@click.option("--addr", default="127.0.0.1:8000", show_default=True, metavar="HOST:PORT")
@click.option("--data-dir", default="./repairlens-data", show_default=True)
@click.option("--workers", default=1, show_default=True, help="Sampler worker threads.")
@click.option("--adapters", default=None, help="Adapter registry file.")
def cmd_serve(addr: str, data_dir: str, workers: int, adapters: Optional[str]) -> None:
    """Run the HTTP service until interrupted."""
    import socket

    import uvicorn

    from .service_api import create_app

    host, sep, port_text = addr.partition(":")
    try:
        port = int(port_text)
        if not sep or not host:
            raise ValueError(addr)
    except ValueError:
        _fail(EXIT_INPUT, f"--addr wants HOST:PORT, got {addr!r}")
    registry = None
    if adapters is not None:
        try:
            registry = load_adapter_registry(Path(adapters))
        except (OSError, ValueError) as exc:
            _fail(EXIT_INPUT, f"cannot load adapter registry {adapters}: {exc}")
    # Claim the port before booting so a clash is a clean exit, not a traceback.
    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        probe.bind((host, port))
    except OSError as exc:
        _fail(EXIT_ENVIRONMENT, f"cannot bind {addr}: {exc}")
    finally:
        probe.close()
    app = create_app(data_dir, workers=workers, adapter_registry=registry)
    uvicorn.run(app, host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()
