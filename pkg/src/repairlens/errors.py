"""Exception types shared across the package."""

from __future__ import annotations


class RepairLensError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(RepairLensError):
    """Constraint text that does not conform to the grammar.

    Carries the 1-based line and column of the offending input.
    """

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.reason = message
        self.line = line
        self.column = column


class TableError(RepairLensError):
    """Base class for malformed table input."""


class SchemaError(TableError):
    """Missing, empty, or duplicate attribute names."""


class ArityError(TableError):
    """A row whose field count disagrees with the schema."""


class ShapeError(TableError):
    """Two tables whose schema or row count should match but do not."""


class RefError(TableError):
    """A cell reference pointing outside the table."""


class BindError(RepairLensError):
    """A constraint referencing an attribute missing from the schema."""


class FixpointError(RepairLensError):
    """The repair sweep loop exceeded its iteration cap.

    The last working table is attached so callers can inspect how far the
    repair got before giving up.
    """

    def __init__(self, message: str, last_table=None):
        super().__init__(message)
        self.last_table = last_table


class BlackBoxError(RepairLensError):
    """An external repair process crashed, hung, or exited uncleanly."""


class ContractError(BlackBoxError):
    """A repair algorithm broke its output contract (shape, protocol)."""


class CapError(RepairLensError):
    """An exact enumeration was requested beyond the configured player cap."""


class ArgError(RepairLensError, ValueError):
    """An argument outside its documented range (e.g. zero samples)."""


class UnexplainableCellError(RepairLensError):
    """A request to explain a cell the repair did not change."""
