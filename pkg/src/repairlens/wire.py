"""Wire format: JSON with exact decimal numbers.

Cell numbers are decimals and must survive transport bit-for-bit, so the
emitter renders Decimal values as raw JSON number literals and the reader
parses JSON numbers back into exact types (int for structure fields,
Decimal at the cell boundary). Rationals travel as {num, den} plus a
12-significant-digit decimal rendering for display.
"""

from __future__ import annotations

import json
import math
from decimal import Decimal, localcontext
from fractions import Fraction
from typing import Union

from .table_model import CellChange, CellRef, Table, Value


def dumps(doc) -> str:
    out: list[str] = []
    _emit(doc, out)
    return "".join(out)


def _emit(x, out: list[str]) -> None:
    if x is None:
        out.append("null")
    elif x is True:
        out.append("true")
    elif x is False:
        out.append("false")
    elif isinstance(x, str):
        out.append(json.dumps(x, ensure_ascii=False))
    elif isinstance(x, Decimal):
        if not x.is_finite():
            raise ValueError(f"non-finite decimal {x} has no wire form")
        out.append(str(x))
    elif isinstance(x, int):
        out.append(str(x))
    elif isinstance(x, float):
        if not math.isfinite(x):
            raise ValueError(f"non-finite float {x} has no wire form")
        out.append(json.dumps(x))
    elif isinstance(x, (list, tuple)):
        out.append("[")
        for i, item in enumerate(x):
            if i:
                out.append(",")
            _emit(item, out)
        out.append("]")
    elif isinstance(x, dict):
        out.append("{")
        for i, (key, item) in enumerate(x.items()):
            if not isinstance(key, str):
                raise TypeError(f"wire object keys must be text, got {key!r}")
            if i:
                out.append(",")
            out.append(json.dumps(key, ensure_ascii=False))
            out.append(":")
            _emit(item, out)
        out.append("}")
    else:
        raise TypeError(f"{type(x).__name__} has no wire form")


def loads(text: str):
    """Parse wire JSON; fractional numbers come back as exact Decimals."""
    return json.loads(text, parse_float=Decimal)


def decode_value(x) -> Value:
    """Normalize a parsed wire scalar into a cell value."""
    if x is None or isinstance(x, str) or isinstance(x, Decimal):
        return x
    if isinstance(x, bool):
        raise ValueError("booleans are not cell values")
    if isinstance(x, int):
        return Decimal(x)
    raise ValueError(f"{type(x).__name__} is not a cell value")


def encode_table(table: Table) -> dict:
    return {"schema": list(table.schema), "rows": [list(row) for row in table.rows]}


def decode_table(doc) -> Table:
    if not isinstance(doc, dict) or "schema" not in doc or "rows" not in doc:
        raise ValueError("a table document needs 'schema' and 'rows'")
    schema = doc["schema"]
    rows = doc["rows"]
    if not isinstance(schema, list) or not all(isinstance(a, str) for a in schema):
        raise ValueError("'schema' must be a list of attribute names")
    if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
        raise ValueError("'rows' must be a list of value lists")
    return Table(tuple(schema), tuple(tuple(decode_value(v) for v in r) for r in rows))


def encode_cellref(ref: CellRef) -> dict:
    return {"row": ref.row, "attr": ref.attr}


def decode_cellref(doc) -> CellRef:
    if (
        not isinstance(doc, dict)
        or not isinstance(doc.get("row"), int)
        or isinstance(doc.get("row"), bool)
        or not isinstance(doc.get("attr"), str)
    ):
        raise ValueError("a cell reference needs an integer 'row' and text 'attr'")
    return CellRef(doc["row"], doc["attr"])


def encode_change(change: CellChange) -> dict:
    return {
        "row": change.ref.row,
        "attr": change.ref.attr,
        "before": change.before,
        "after": change.after,
    }


def encode_fraction(fr: Fraction) -> dict:
    with localcontext() as ctx:
        ctx.prec = 12
        rendered = str(Decimal(fr.numerator) / Decimal(fr.denominator))
    return {"num": fr.numerator, "den": fr.denominator, "decimal": rendered}


def _encode_shap_value(v: Union[Fraction, float]):
    if isinstance(v, Fraction):
        return encode_fraction(v)
    return float(v)


def encode_task(task) -> dict:
    return {
        "target": encode_cellref(task.target),
        "expected": task.expected,
        "constraints": [dc.id for dc in task.constraints],
    }


def encode_report(report, ranking) -> dict:
    """Serialize a Shapley report plus its ranking; shared by the service and
    the CLI so both emit identical documents."""
    from .shapley_engine import ConstraintShapleyReport

    constraint_mode = isinstance(report, ConstraintShapleyReport)
    doc: dict = {"task": encode_task(report.task), "method": report.method}
    if constraint_mode:
        players = sorted(report.values)
        encode_player = lambda p: p
    else:
        doc["imputation"] = report.imputation
        if report.samples is not None:
            doc["samples"] = report.samples
        if report.seed is not None:
            doc["seed"] = report.seed
        pos = report.task.dirty.attr_position
        players = sorted(report.values, key=lambda r: (r.row, pos(r.attr)))
        encode_player = encode_cellref
    rows = []
    for p in players:
        entry = {"player": encode_player(p), "value": _encode_shap_value(report.values[p])}
        if not constraint_mode and report.stderr is not None and p in report.stderr:
            entry["stderr"] = report.stderr[p]
        rows.append(entry)
    doc["values"] = rows
    doc["ranking"] = [encode_player(p) for p in ranking.players]
    return doc
