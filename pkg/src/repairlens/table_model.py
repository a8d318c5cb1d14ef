"""Tabular data model: nullable cell values, immutable tables, CSV ingestion,
diffing, coalition masking, and empirical column distributions."""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass
from decimal import Decimal
from functools import cached_property
from typing import Iterable, Iterator

from .errors import ArityError, RefError, SchemaError, ShapeError

# A cell holds unicode text, an exact decimal number, or null (None).
Value = str | Decimal | None

_NUMBER_RE = re.compile(r"[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?\Z")


def parse_value(text: str) -> Value:
    """Interpret one CSV field: empty becomes null, decimal syntax becomes a
    number, anything else stays text."""
    if text == "":
        return None
    if _NUMBER_RE.match(text):
        return Decimal(text)
    return text


def render_value(value: Value) -> str:
    """Inverse of parse_value for CSV output; null renders as the empty field."""
    if value is None:
        return ""
    if isinstance(value, Decimal):
        return str(value)
    return value


def values_equal(a: Value, b: Value) -> bool:
    """Exact cell equality: numbers by decimal value, text verbatim, null only
    to null.

    This is diffing equality. Predicate evaluation treats null differently
    (a predicate touching null is false; see the constraint module).
    """
    if a is None or b is None:
        return a is None and b is None
    if isinstance(a, Decimal) != isinstance(b, Decimal):
        return False
    return a == b


def canonical_key(value: Value) -> tuple:
    """Total order over non-null values: numbers first (ascending), then text.

    Used for deterministic argmax tie-breaking and stable report ordering.
    """
    if value is None:
        raise ValueError("null has no position in the canonical order")
    if isinstance(value, Decimal):
        return (0, value, "")
    return (1, Decimal(0), value)


@dataclass(frozen=True)
class CellRef:
    """Address of one cell: 1-based row index plus attribute name."""

    row: int
    attr: str


@dataclass(frozen=True)
class CellChange:
    """One repaired cell: its address and the values before and after."""

    ref: CellRef
    before: Value
    after: Value

    def __post_init__(self):
        if values_equal(self.before, self.after):
            raise ValueError(f"change at {self.ref} must alter the value")


@dataclass(frozen=True)
class Table:
    """Immutable table: an ordered schema and rows of nullable values.

    Rows keep their position; every operation returns a fresh table, so
    instances are safe to share across threads.
    """

    schema: tuple[str, ...]
    rows: tuple[tuple[Value, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "schema", tuple(self.schema))
        object.__setattr__(self, "rows", tuple(tuple(r) for r in self.rows))
        if not self.schema:
            raise SchemaError("a table needs at least one attribute")
        seen = set()
        for name in self.schema:
            if not name:
                raise SchemaError("attribute names must be non-empty")
            if name in seen:
                raise SchemaError(f"duplicate attribute name {name!r}")
            seen.add(name)
        m = len(self.schema)
        for i, row in enumerate(self.rows, start=1):
            if len(row) != m:
                raise ArityError(f"row {i} has {len(row)} fields, expected {m}")

    @cached_property
    def _positions(self) -> dict[str, int]:
        return {name: k for k, name in enumerate(self.schema)}

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    @property
    def n_attrs(self) -> int:
        return len(self.schema)

    def attr_position(self, attr: str) -> int:
        try:
            return self._positions[attr]
        except KeyError:
            raise RefError(f"unknown attribute {attr!r}") from None

    def check_ref(self, ref: CellRef) -> None:
        if not 1 <= ref.row <= self.n_rows:
            raise RefError(f"row {ref.row} outside 1..{self.n_rows}")
        self.attr_position(ref.attr)

    def value_at(self, ref: CellRef) -> Value:
        self.check_ref(ref)
        return self.rows[ref.row - 1][self.attr_position(ref.attr)]

    def with_value(self, ref: CellRef, value: Value) -> "Table":
        self.check_ref(ref)
        k = self.attr_position(ref.attr)
        rows = list(self.rows)
        row = list(rows[ref.row - 1])
        row[k] = value
        rows[ref.row - 1] = tuple(row)
        return Table(self.schema, tuple(rows))

    def column(self, attr: str) -> tuple[Value, ...]:
        k = self.attr_position(attr)
        return tuple(row[k] for row in self.rows)

    def cell_refs(self) -> Iterator[CellRef]:
        """All cell addresses in canonical order: row ascending, then schema order."""
        for i in range(1, self.n_rows + 1):
            for attr in self.schema:
                yield CellRef(i, attr)


@dataclass
class ColumnDistribution:
    """Empirical counts over the non-null values of one column."""

    attr: str
    weights: dict[Value, int]

    def total(self) -> int:
        return sum(self.weights.values())

    def argmax(self) -> Value:
        """Most frequent value, ties broken by canonical order; None if empty."""
        if not self.weights:
            return None
        return min(self.weights.items(), key=lambda kv: (-kv[1], canonical_key(kv[0])))[0]


def parse_table(csv_text: str) -> Table:
    """Parse CSV text (comma separated, double-quote quoting, LF or CRLF).

    The first record is the header. Fields parse as numbers when they are
    valid decimals, empty fields become null, everything else is text. A
    fully blank line reads as a single empty field.
    """
    reader = csv.reader(io.StringIO(csv_text))
    try:
        header = next(reader)
    except StopIteration:
        raise SchemaError("empty CSV input") from None
    if not header:
        raise SchemaError("empty CSV header")
    rows = []
    for record in reader:
        if not record:
            record = [""]
        rows.append(tuple(parse_value(field) for field in record))
    return Table(tuple(header), tuple(rows))


def _csv_field(text: str) -> str:
    # csv.writer leaves a bare CR unquoted under an LF line terminator, which
    # the reader then rejects, so fields are quoted here exactly per RFC 4180
    if any(ch in text for ch in ',"\r\n'):
        return '"' + text.replace('"', '""') + '"'
    return text


def serialize_table(table: Table) -> str:
    """Render a table back to CSV; numbers keep their exact decimal form.

    NUL is the one character the dialect cannot carry (the csv reader
    rejects it), so emitting it is refused rather than silently mangled.
    """
    lines = [",".join(_csv_field(name) for name in table.schema)]
    for row in table.rows:
        lines.append(",".join(_csv_field(render_value(v)) for v in row))
    text = "\n".join(lines) + "\n"
    if "\x00" in text:
        raise ValueError("cell text contains NUL, which CSV cannot represent")
    return text


def diff_tables(dirty: Table, clean: Table) -> list[CellChange]:
    """All cells whose value differs, ordered by (row, attribute position)."""
    if dirty.schema != clean.schema:
        raise ShapeError("schemas differ")
    if dirty.n_rows != clean.n_rows:
        raise ShapeError(f"row counts differ: {dirty.n_rows} vs {clean.n_rows}")
    changes = []
    for i, (before_row, after_row) in enumerate(zip(dirty.rows, clean.rows), start=1):
        for attr, before, after in zip(dirty.schema, before_row, after_row):
            if not values_equal(before, after):
                changes.append(CellChange(CellRef(i, attr), before, after))
    return changes


def mask_cells(table: Table, coalition: Iterable[CellRef]) -> Table:
    """Copy of the table where every cell NOT in the coalition is null."""
    keep = set()
    for ref in coalition:
        table.check_ref(ref)
        keep.add((ref.row - 1, table.attr_position(ref.attr)))
    rows = tuple(
        tuple(v if (i, k) in keep else None for k, v in enumerate(row))
        for i, row in enumerate(table.rows)
    )
    return Table(table.schema, rows)


def column_distribution(table: Table, attr: str) -> ColumnDistribution:
    """Empirical counts over the column's non-null cells."""
    weights: dict[Value, int] = {}
    for v in table.column(attr):
        if v is None:
            continue
        weights[v] = weights.get(v, 0) + 1
    return ColumnDistribution(attr, weights)
