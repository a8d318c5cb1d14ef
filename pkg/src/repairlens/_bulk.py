"""Vectorized evaluation of the built-in repairer over many table variants.

The Shapley sampler needs millions of indicator evaluations. When the
algorithm under explanation is the built-in one, whole batches of variants
are repaired at once on integer-coded tables. Semantics must match
`reference_repair` exactly; an agreement property test enforces this, and
`compile_problem` returns None for inputs the coded form cannot represent
faithfully (order comparisons over mixed value kinds), falling back to
per-call evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal
from typing import Optional, Sequence

import numpy as np

from .dc_lang import AttrTerm, ConstTerm, DenialConstraint, Op, _ORDER_OPS
from .repair_engine import _RULES
from .table_model import Table, Value


@dataclass
class Coding:
    """Global integer codes for cell values, ordered canonically (numbers
    ascending, then text ascending) so code comparison is value comparison.
    Null is code -1."""

    value_of: list[Value]
    code_of: dict[Value, int]
    n_numbers: int


# predicate side: ("attr", column index) or ("const", value code)
_Pred = tuple[bool, int, Op, bool, int]


@dataclass
class _CodedDC:
    preds: list[_Pred]
    single: bool


@dataclass
class _CodedRule:
    dcc: _CodedDC
    write_col: int
    cond_col: Optional[int]


@dataclass
class CodedProblem:
    coding: Coding
    schema: tuple[str, ...]
    n_rows: int
    rules: list[_CodedRule]
    cap: int

    @property
    def n_codes(self) -> int:
        return len(self.coding.value_of)


def build_coding(table: Table, constraints: Sequence[DenialConstraint]) -> Coding:
    numbers: set[Decimal] = set()
    texts: set[str] = set()

    def add(v: Value) -> None:
        if v is None:
            return
        if isinstance(v, Decimal):
            numbers.add(v)
        else:
            texts.add(v)

    for row in table.rows:
        for v in row:
            add(v)
    for dc in constraints:
        for p in dc.predicates:
            for t in (p.left, p.right):
                if isinstance(t, ConstTerm):
                    add(t.value)
    value_of: list[Value] = sorted(numbers) + sorted(texts)
    return Coding(value_of, {v: i for i, v in enumerate(value_of)}, len(numbers))


def encode_table(coding: Coding, table: Table) -> np.ndarray:
    arr = np.empty((table.n_rows, table.n_attrs), dtype=np.int16)
    for i, row in enumerate(table.rows):
        for k, v in enumerate(row):
            arr[i, k] = -1 if v is None else coding.code_of[v]
    return arr


def decode_codes(coding: Coding, schema: Sequence[str], arr: np.ndarray) -> Table:
    value_of = coding.value_of
    rows = tuple(
        tuple(None if c < 0 else value_of[c] for c in row) for row in arr.tolist()
    )
    return Table(tuple(schema), rows)


def _code_kind(coding: Coding, code: int) -> bool:
    """True for number codes."""
    return code < coding.n_numbers


def compile_problem(
    constraints: Sequence[DenialConstraint], table: Table
) -> Optional[CodedProblem]:
    """Coded form of (constraints, table) for batch repair, or None when the
    input needs the per-call path."""
    for dc in constraints:
        dc.bind(table.schema)
    coding = build_coding(table, constraints)
    pos = {name: k for k, name in enumerate(table.schema)}
    col_kinds: list[set[bool]] = [
        {_code_kind(coding, coding.code_of[v]) for v in table.column(a) if v is not None}
        for a in table.schema
    ]

    def side(term) -> tuple[bool, int, set[bool]]:
        if isinstance(term, AttrTerm):
            k = pos[term.attr]
            return True, k, col_kinds[k]
        code = coding.code_of[term.value]
        return False, code, {_code_kind(coding, code)}

    by_id = {dc.id: dc for dc in constraints}
    present = set(table.schema)
    rules: list[_CodedRule] = []
    for cid, wattr, cattr in _RULES:
        if cid not in by_id or wattr not in present:
            continue
        if cattr is not None and cattr not in present:
            continue
        dc = by_id[cid]
        preds: list[_Pred] = []
        for p in dc.predicates:
            la, li, lk = side(p.left)
            ra, ri, rk = side(p.right)
            if p.op in _ORDER_OPS and len(lk | rk) > 1:
                return None  # mixed-kind ordering raises in the exact evaluator
            preds.append((la, li, p.op, ra, ri))
        rules.append(_CodedRule(_CodedDC(preds, dc.single_tuple), pos[wattr], None if cattr is None else pos[cattr]))
    return CodedProblem(
        coding, table.schema, table.n_rows, rules, 2 * table.n_rows * table.n_attrs
    )


def _apply_op(op: Op, a, b):
    nonnull = (a >= 0) & (b >= 0)
    if op is Op.EQ:
        return (a == b) & nonnull
    if op is Op.NEQ:
        return (a != b) & nonnull
    if op is Op.LT:
        return (a < b) & nonnull
    if op is Op.LEQ:
        return (a <= b) & nonnull
    if op is Op.GT:
        return (a > b) & nonnull
    return (a >= b) & nonnull


def _participation(dcc: _CodedDC, X: np.ndarray) -> np.ndarray:
    """(V, n) mask of rows appearing in some violating pair of the coded DC."""
    V, n, _ = X.shape
    if dcc.single:
        hold = np.ones((V, n), dtype=bool)
        for la, li, op, ra, ri in dcc.preds:
            a = X[:, :, li] if la else li
            b = X[:, :, ri] if ra else ri
            hold &= _apply_op(op, a, b)
        return hold
    conj = np.ones((V, n, n), dtype=bool)
    for la, li, op, ra, ri in dcc.preds:
        a = X[:, :, li][:, :, None] if la else li
        b = X[:, :, ri][:, None, :] if ra else ri
        conj &= _apply_op(op, a, b)
    idx = np.arange(n)
    conj[:, idx, idx] = False
    return conj.any(axis=2) | conj.any(axis=1)


def repair_codes(problem: CodedProblem, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Repair every variant in X (V, n, m) of coded values.

    Returns (repaired, converged): a new array plus a (V,) bool mask, False for
    variants still changing after the sweep cap (the batch analogue of
    FixpointError; their rows hold the last state reached). Pass structure
    mirrors reference_repair: per rule, participation and distributions read
    the pass-start state, writes land together. Each variant evolves exactly
    as it would alone, so converged variants drop out of later sweeps.
    """
    X = np.array(X, dtype=np.int16, copy=True)
    if X.ndim != 3:
        raise ValueError("expected a (variants, rows, attrs) array")
    V = X.shape[0]
    codes = np.arange(problem.n_codes, dtype=np.int16)
    converged = np.zeros(V, dtype=bool)
    alive = np.arange(V)
    for _ in range(problem.cap + 1):
        if alive.size == 0:
            break
        sub = X[alive]
        changed = np.zeros(alive.size, dtype=bool)
        for rule in problem.rules:
            part = _participation(rule.dcc, sub)
            if not part.any():
                continue
            W = sub[:, :, rule.write_col]  # view; writes go through
            if rule.cond_col is None:
                onehot = W[:, :, None] == codes
                counts = onehot.sum(axis=1, dtype=np.int32)  # (V, K)
                best = np.argmax(counts, axis=1).astype(np.int16)
                has_any = counts.max(axis=1) > 0
                target = np.broadcast_to(best[:, None], W.shape)
                update = part & has_any[:, None] & (W != target)
            else:
                C = sub[:, :, rule.cond_col]
                match = (C[:, :, None] == C[:, None, :]) & (C[:, :, None] >= 0)
                match &= W[:, None, :] >= 0
                onehot = (W[:, :, None] == codes).astype(np.int16)
                counts = match.astype(np.int16) @ onehot  # (V, n, K)
                best = np.argmax(counts, axis=2).astype(np.int16)
                has_any = counts.max(axis=2) > 0
                target = best
                update = part & has_any & (W != target)
            if update.any():
                W[update] = target[update]
                changed |= update.any(axis=1)
        X[alive] = sub
        converged[alive[~changed]] = True
        alive = alive[changed]
    return X, converged


def indicator_codes(
    problem: CodedProblem,
    X: np.ndarray,
    target_row0: int,
    target_col: int,
    expected_code: int,
) -> np.ndarray:
    """Batch indicator: 1 where the repaired variant holds the expected code.

    Non-converging variants count as not repairing the target, matching the
    per-call indicator's handling of FixpointError.
    """
    out, converged = repair_codes(problem, X)
    hit = out[:, target_row0, target_col] == expected_code
    return (hit & converged).astype(np.uint8)
