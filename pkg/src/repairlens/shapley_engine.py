"""Shapley attribution of constraints and cells to one cell's repair.

Exact modes enumerate coalitions and report rationals; the cell sampler
estimates by permutation sampling with per-player random streams, so results
are independent of worker scheduling.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np

from . import _bulk
from .errors import ArgError, CapError
from .repair_engine import RepairAlgorithm, RepairTask, indicator, reference_repair
from .table_model import CellRef, Value, canonical_key, column_distribution, mask_cells

DEFAULT_CAP = 20
_CHUNK = 16384


@dataclass(frozen=True)
class ConstraintShapleyReport:
    """Exact rational Shapley value per constraint id."""

    task: RepairTask
    values: dict[str, Fraction]
    method: str = "exact-enumeration"


@dataclass(frozen=True)
class CellShapleyReport:
    """Shapley value per non-target cell; exact rationals or sampled floats."""

    task: RepairTask
    values: dict[CellRef, Union[Fraction, float]]
    method: str
    imputation: str
    samples: Optional[int] = None
    seed: Optional[int] = None
    stderr: Optional[dict[CellRef, float]] = None


@dataclass(frozen=True)
class Ranking:
    """(player, value) pairs, descending by value, ties in canonical order."""

    entries: tuple[tuple[object, object], ...]

    @property
    def players(self) -> tuple[object, ...]:
        return tuple(p for p, _ in self.entries)


def rank(report: Union[ConstraintShapleyReport, CellShapleyReport]) -> Ranking:
    """Descending stable sort; ties keep canonical player order (constraints
    by id, cells by row then attribute position)."""
    if isinstance(report, ConstraintShapleyReport):
        items = sorted(report.values.items(), key=lambda kv: kv[0])
    else:
        pos = report.task.dirty.attr_position
        items = sorted(report.values.items(), key=lambda kv: (kv[0].row, pos(kv[0].attr)))
    items.sort(key=lambda kv: kv[1], reverse=True)
    return Ranking(tuple(items))


def _players_of(task: RepairTask) -> list[CellRef]:
    """Every cell except the target, in canonical order. The target is pinned:
    it keeps its dirty value in every coalition variant."""
    return [ref for ref in task.dirty.cell_refs() if ref != task.target]


def _shapley_from_subset_values(v: np.ndarray, k: int) -> list[Fraction]:
    """Exact Shapley values from the characteristic function tabulated over
    all 2^k player subsets (bitmask-indexed 0/1 array)."""
    if k == 0:
        return []
    masks = np.arange(1 << k, dtype=np.uint32)
    popcnt = np.zeros(1 << k, dtype=np.uint8)
    for b in range(k):
        popcnt[(masks >> np.uint32(b)) & 1 == 1] += 1
    fact = [math.factorial(i) for i in range(k + 1)]
    out = []
    for a in range(k):
        without = masks[(masks >> np.uint32(a)) & 1 == 0]
        diff = v[without | (1 << a)].astype(np.int32) - v[without]
        # weight marginal contributions by |S|; counts stay exact in float64
        sums = np.bincount(popcnt[without], weights=diff, minlength=k)
        phi = Fraction(0)
        for s in range(k):
            c = int(round(sums[s]))
            if c:
                phi += Fraction(fact[s] * fact[k - s - 1], fact[k]) * c
        out.append(phi)
    return out


def shapley_constraints(
    alg: RepairAlgorithm, task: RepairTask, cap: int = DEFAULT_CAP
) -> ConstraintShapleyReport:
    """Exact constraint attribution by full subset enumeration.

    Evaluates the indicator exactly once per subset (2^n calls), always on the
    original dirty table with the subset as the constraint input.
    """
    cs = task.constraints
    k = len(cs)
    if k > cap:
        raise CapError(f"{k} constraints exceed the enumeration cap of {cap}")
    if len({dc.id for dc in cs}) != k:
        raise ArgError("constraint ids must be unique for attribution")
    v = np.zeros(1 << k, dtype=np.uint8)
    for mask in range(1 << k):
        subset = tuple(cs[i] for i in range(k) if mask >> i & 1)
        v[mask] = indicator(alg, task, subset, task.dirty)
    phis = _shapley_from_subset_values(v, k)
    return ConstraintShapleyReport(task, {cs[i].id: phis[i] for i in range(k)})


def _coded_or_none(alg: RepairAlgorithm, task: RepairTask):
    if alg is not reference_repair:
        return None
    return _bulk.compile_problem(task.constraints, task.dirty)


def _expected_code(coding: _bulk.Coding, expected: Value) -> int:
    return -1 if expected is None else coding.code_of[expected]


def shapley_cells_exact(
    alg: RepairAlgorithm, task: RepairTask, cap: int = DEFAULT_CAP
) -> CellShapleyReport:
    """Exact cell attribution: coalitions are masked tables (absent cells
    null), the target cell always keeps its dirty value."""
    players = _players_of(task)
    k = len(players)
    if k > cap:
        raise CapError(f"{k} player cells exceed the enumeration cap of {cap}")
    dirty = task.dirty
    problem = _coded_or_none(alg, task)
    v = np.zeros(1 << k, dtype=np.uint8)
    if problem is not None:
        base = _bulk.encode_table(problem.coding, dirty)
        tr, tc = task.target.row - 1, dirty.attr_position(task.target.attr)
        exp = _expected_code(problem.coding, task.expected)
        spots = [(p.row - 1, dirty.attr_position(p.attr)) for p in players]
        masks = np.arange(1 << k, dtype=np.uint32)
        for start in range(0, 1 << k, _CHUNK):
            mb = masks[start : start + _CHUNK]
            X = np.full((len(mb), dirty.n_rows, dirty.n_attrs), -1, dtype=np.int16)
            X[:, tr, tc] = base[tr, tc]
            for q, (r0, c0) in enumerate(spots):
                inset = ((mb >> np.uint32(q)) & 1).astype(bool)
                X[inset, r0, c0] = base[r0, c0]
            v[start : start + len(mb)] = _bulk.indicator_codes(problem, X, tr, tc, exp)
    else:
        for mask in range(1 << k):
            coalition = [players[q] for q in range(k) if mask >> q & 1]
            coalition.append(task.target)
            variant = mask_cells(dirty, coalition)
            v[mask] = indicator(alg, task, task.constraints, variant)
    phis = _shapley_from_subset_values(v, k)
    return CellShapleyReport(
        task, {players[i]: phis[i] for i in range(k)}, "exact-enumeration", "null"
    )


def _column_pools(coding: _bulk.Coding, task: RepairTask) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    """Per attribute: (value codes, cumulative probabilities) of the dirty
    table's empirical column distribution, in canonical value order."""
    pools = {}
    for attr in task.dirty.schema:
        dist = column_distribution(task.dirty, attr)
        items = sorted(dist.weights.items(), key=lambda kv: canonical_key(kv[0]))
        if not items:
            pools[attr] = (np.empty(0, dtype=np.int16), np.empty(0))
            continue
        codes = np.array([coding.code_of[val] for val, _ in items], dtype=np.int16)
        weights = np.array([w for _, w in items], dtype=np.float64)
        cum = np.cumsum(weights) / weights.sum()
        cum[-1] = 1.0
        pools[attr] = (codes, cum)
    return pools


def _batch_indicator(problem, X, tr, tc, exp) -> np.ndarray:
    parts = []
    for start in range(0, len(X), _CHUNK):
        parts.append(_bulk.indicator_codes(problem, X[start : start + _CHUNK], tr, tc, exp))
    return np.concatenate(parts) if parts else np.empty(0, dtype=np.uint8)


def shapley_cells_sampled(
    alg: RepairAlgorithm,
    task: RepairTask,
    m: int,
    seed: int,
    imputation: str = "column-distribution",
    workers: int = 1,
) -> CellShapleyReport:
    """Permutation-sampling estimate of cell Shapley values.

    Per player and iteration: draw a uniform player permutation; cells
    preceding the player form the coalition; remaining cells are imputed
    (drawn from their column's empirical distribution, or set to null).
    The contribution is the indicator difference between the variant keeping
    the player's original value and the one imputing it too. Each player owns
    an independent random stream derived from the seed, so reports are
    byte-identical for any worker count.

    A cell in an all-null column has no distribution to draw from and is
    imputed as null.
    """
    if m < 1:
        raise ArgError(f"sample count must be >= 1, got {m}")
    if imputation not in ("column-distribution", "null"):
        raise ArgError(f"unknown imputation mode {imputation!r}")
    if workers < 1:
        raise ArgError(f"worker count must be >= 1, got {workers}")
    dirty = task.dirty
    players = _players_of(task)
    n_p = len(players)
    if n_p == 0:
        return CellShapleyReport(task, {}, "permutation-sampling", imputation, m, seed, {})
    problem = _coded_or_none(alg, task)
    coding = problem.coding if problem is not None else _bulk.build_coding(dirty, task.constraints)
    base = _bulk.encode_table(coding, dirty)
    tr, tc = task.target.row - 1, dirty.attr_position(task.target.attr)
    exp = _expected_code(coding, task.expected)
    spots = [(p.row - 1, dirty.attr_position(p.attr)) for p in players]
    pools = _column_pools(coding, task)
    children = np.random.SeedSequence(seed).spawn(n_p)

    def run_player(p: int) -> tuple[float, float]:
        rng = np.random.default_rng(children[p])
        order = rng.random((m, n_p))
        if imputation == "column-distribution":
            draws = np.empty((m, n_p), dtype=np.int16)
            for q in range(n_p):
                codes, cum = pools[players[q].attr]
                u = rng.random(m)
                if codes.size:
                    draws[:, q] = codes[np.searchsorted(cum, u, side="right")]
                else:
                    draws[:, q] = -1
        else:
            draws = np.full((m, n_p), -1, dtype=np.int16)
        impute = order >= order[:, [p]]  # everything not preceding p
        impute[:, p] = False  # variant A keeps p original
        xa = np.broadcast_to(base, (m,) + base.shape).copy()
        for q, (r0, c0) in enumerate(spots):
            xa[:, r0, c0] = np.where(impute[:, q], draws[:, q], base[r0, c0])
        pr, pc = spots[p]
        # iterations whose imputed value equals the original contribute 0
        live = draws[:, p] != base[pr, pc]
        diffs = np.zeros(m, dtype=np.int8)
        if live.any():
            xa_live = xa[live]
            xb_live = xa_live.copy()
            xb_live[:, pr, pc] = draws[live, p]
            if problem is not None:
                va = _batch_indicator(problem, xa_live, tr, tc, exp)
                vb = _batch_indicator(problem, xb_live, tr, tc, exp)
            else:
                va = np.empty(len(xa_live), dtype=np.uint8)
                vb = np.empty(len(xb_live), dtype=np.uint8)
                for t in range(len(xa_live)):
                    ta = _bulk.decode_codes(coding, dirty.schema, xa_live[t])
                    tb = _bulk.decode_codes(coding, dirty.schema, xb_live[t])
                    va[t] = indicator(alg, task, task.constraints, ta)
                    vb[t] = indicator(alg, task, task.constraints, tb)
            diffs[live] = va.astype(np.int8) - vb.astype(np.int8)
        phi = float(diffs.sum()) / m
        se = float(diffs.std(ddof=1)) / math.sqrt(m) if m > 1 else 0.0
        return phi, se

    if workers == 1:
        results = [run_player(p) for p in range(n_p)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_player, range(n_p)))
    values = {players[p]: results[p][0] for p in range(n_p)}
    errs = {players[p]: results[p][1] for p in range(n_p)}
    return CellShapleyReport(
        task, values, "permutation-sampling", imputation, m, seed, errs
    )
