"""Explain denial-constraint data repairs with Shapley values.

The package repairs a dirty table under denial constraints with a pluggable
black-box repair algorithm and attributes any single cell's repair to the
constraints and to the other cells, exactly or by permutation sampling.
"""

from .adapter import AdapterConfig, ExternalRepairAlgorithm, load_adapter_registry
from .dc_lang import (
    AttrTerm,
    ConstTerm,
    DenialConstraint,
    Op,
    Predicate,
    Violation,
    format_dc,
    holds_violated,
    parse_constraints,
    parse_dc,
    violations,
)
from .errors import (
    ArgError,
    ArityError,
    BindError,
    BlackBoxError,
    CapError,
    ContractError,
    FixpointError,
    ParseError,
    RefError,
    RepairLensError,
    SchemaError,
    ShapeError,
    TableError,
    UnexplainableCellError,
)
from .repair_engine import (
    RepairAlgorithm,
    RepairTask,
    indicator,
    make_task,
    reference_repair,
)
from .shapley_engine import (
    CellShapleyReport,
    ConstraintShapleyReport,
    Ranking,
    rank,
    shapley_cells_exact,
    shapley_cells_sampled,
    shapley_constraints,
)
from .table_model import (
    CellChange,
    CellRef,
    ColumnDistribution,
    Table,
    Value,
    column_distribution,
    diff_tables,
    mask_cells,
    parse_table,
    serialize_table,
    values_equal,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
