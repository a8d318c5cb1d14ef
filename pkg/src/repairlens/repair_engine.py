"""Black-box repair contract, the built-in sweep repairer, and the binary
repair indicator that Shapley computations evaluate.

A repair algorithm is any deterministic callable (constraints, dirty table)
-> repaired table that preserves schema and row count and acts as the
identity under an empty constraint set.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from .dc_lang import DenialConstraint, violations
from .errors import ContractError, FixpointError, UnexplainableCellError
from .table_model import (
    CellRef,
    ColumnDistribution,
    Table,
    Value,
    column_distribution,
    values_equal,
)

RepairAlgorithm = Callable[[Sequence[DenialConstraint], Table], Table]

# Rule k is hard-wired to constraint id Ck: (id, attribute written, conditioning
# attribute or None). Dropping Ck from the input set disables rule k.
_RULES: tuple[tuple[str, str, Optional[str]], ...] = (
    ("C1", "City", None),
    ("C2", "Country", "City"),
    ("C3", "Country", None),
    ("C4", "Place", "Team"),
)


@dataclass(frozen=True)
class RepairTask:
    """Frozen inputs of one explanation: constraint set, dirty table, target
    cell, and the value the full repair gave that cell."""

    constraints: tuple[DenialConstraint, ...]
    dirty: Table
    target: CellRef
    expected: Value

    def __post_init__(self):
        object.__setattr__(self, "constraints", tuple(self.constraints))
        self.dirty.check_ref(self.target)
        if values_equal(self.dirty.value_at(self.target), self.expected):
            raise UnexplainableCellError(
                f"cell {self.target.row}:{self.target.attr} is not changed by the repair"
            )


def make_task(
    alg: RepairAlgorithm,
    constraints: Sequence[DenialConstraint],
    dirty: Table,
    target: CellRef,
) -> RepairTask:
    """Run the full repair once and freeze the task for the given target cell.

    Raises UnexplainableCellError when the repair leaves the target unchanged.
    """
    clean = _checked_run(alg, constraints, dirty)
    return RepairTask(tuple(constraints), dirty, target, clean.value_at(target))


def reference_repair(
    constraints: Sequence[DenialConstraint], dirty: Table
) -> Table:
    """Built-in rule-based repairer.

    Each active rule runs as one pass: violation participation and value
    distributions are read from the table state at the start of the pass,
    every participating row is overwritten with the rule's argmax (conditional
    rules key the distribution on the row's value of the conditioning
    attribute), and the next rule sees the updated table. Passes repeat until
    a full sweep changes nothing. Distributions count non-null cells only;
    a row whose conditioning value is null, or an empty distribution, leaves
    the cell unchanged.
    """
    for dc in constraints:
        dc.bind(dirty.schema)
    by_id = {dc.id: dc for dc in constraints}
    present = set(dirty.schema)
    active = [
        (by_id[cid], attr, cond)
        for cid, attr, cond in _RULES
        if cid in by_id and attr in present and (cond is None or cond in present)
    ]
    schema = dirty.schema
    pos = {name: k for k, name in enumerate(schema)}
    rows = [list(r) for r in dirty.rows]
    cap = 2 * dirty.n_rows * dirty.n_attrs
    for _ in range(cap + 1):
        changed = False
        for dc, write_attr, cond_attr in active:
            snapshot = Table(schema, tuple(tuple(r) for r in rows))
            viol = violations(dc, snapshot)
            if not viol:
                continue
            participating = sorted({i for v in viol for i in v.pair})
            wk = pos[write_attr]
            if cond_attr is None:
                best = column_distribution(snapshot, write_attr).argmax()
                if best is None:
                    continue
                for i in participating:
                    if not values_equal(rows[i - 1][wk], best):
                        rows[i - 1][wk] = best
                        changed = True
            else:
                ck = pos[cond_attr]
                counts: dict[Value, dict[Value, int]] = {}
                for srow in snapshot.rows:
                    c, w = srow[ck], srow[wk]
                    if c is None or w is None:
                        continue
                    bucket = counts.setdefault(c, {})
                    bucket[w] = bucket.get(w, 0) + 1
                for i in participating:
                    c = snapshot.rows[i - 1][ck]
                    if c is None or c not in counts:
                        continue
                    best = ColumnDistribution(write_attr, counts[c]).argmax()
                    if not values_equal(rows[i - 1][wk], best):
                        rows[i - 1][wk] = best
                        changed = True
        if not changed:
            return Table(schema, tuple(tuple(r) for r in rows))
    raise FixpointError(
        f"no fixpoint within {cap} sweeps",
        Table(schema, tuple(tuple(r) for r in rows)),
    )


def _checked_run(
    alg: RepairAlgorithm, constraints: Sequence[DenialConstraint], table: Table
) -> Table:
    out = alg(tuple(constraints), table)
    if not isinstance(out, Table):
        raise ContractError(f"repair returned {type(out).__name__}, not a table")
    if out.schema != table.schema or out.n_rows != table.n_rows:
        raise ContractError("repair output shape differs from its input")
    return out


def indicator(
    alg: RepairAlgorithm,
    task: RepairTask,
    constraints_subset: Sequence[DenialConstraint],
    table_variant: Table,
) -> int:
    """1 iff running the algorithm on (subset, variant) puts the task's
    expected value in the target cell, else 0.

    The built-in repairer's rules can disagree forever on some inputs
    (conditional and global modes fighting over one cell); such a
    non-converging run counts as not repairing the target. External-process
    failures are real errors and propagate.
    """
    try:
        out = _checked_run(alg, constraints_subset, table_variant)
    except FixpointError:
        return 0
    return 1 if values_equal(out.value_at(task.target), task.expected) else 0
