"""Constraint grammar, round-tripping, and violation detection.

naive_violations below is a deliberately separate second implementation of
the violation semantics (dict rows, op table) used as the oracle for the
package's checker.
"""

from __future__ import annotations

from decimal import Decimal

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from repairlens import (
    AttrTerm,
    BindError,
    ParseError,
    Table,
    Violation,
    format_dc,
    mask_cells,
    parse_constraints,
    parse_dc,
    violations,
)
from repairlens.dc_lang import Op
from repairlens.table_model import CellRef

# -- independent violation oracle --------------------------------------------


def _same_kind(a, b) -> bool:
    return isinstance(a, Decimal) == isinstance(b, Decimal)


def _naive_pred(pred, row1: dict, row2: dict) -> bool:
    def get(term):
        if isinstance(term, AttrTerm):
            return (row1 if term.slot == 1 else row2)[term.attr]
        return term.value

    a, b = get(pred.left), get(pred.right)
    if a is None or b is None:
        return False
    if pred.op is Op.EQ:
        return _same_kind(a, b) and a == b
    if pred.op is Op.NEQ:
        return not (_same_kind(a, b) and a == b)
    assert _same_kind(a, b), "ordering text against numbers is undefined"
    return {
        Op.LT: a < b,
        Op.LEQ: a <= b,
        Op.GT: a > b,
        Op.GEQ: a >= b,
    }[pred.op]


def naive_violations(dc, table: Table) -> list[Violation]:
    rows = [dict(zip(table.schema, r)) for r in table.rows]
    out = []
    if dc.single_tuple:
        for i, row in enumerate(rows, start=1):
            if all(_naive_pred(p, row, row) for p in dc.predicates):
                out.append(Violation(dc.id, (i, i)))
        return out
    for i, row_i in enumerate(rows, start=1):
        for j, row_j in enumerate(rows, start=1):
            if i != j and all(_naive_pred(p, row_i, row_j) for p in dc.predicates):
                out.append(Violation(dc.id, (i, j)))
    return out


# -- parser corpus -----------------------------------------------------------

# The last two entries are the degenerate as-printed duplicate-check rule
# (its first predicate can never hold) and its corrected two-tuple form.
CORPUS = [
    "C1: !(t1.Team = t2.Team & t1.City != t2.City)",
    "C2: !(t1.City = t2.City & t1.Country != t2.Country)",
    "C3: !(t1.League = t2.League & t1.Country != t2.Country)",
    "S1: !(t1.Place >= 4)",
    'S2: !(t1.Country = "España")',
    "E1: !(t1.City = t2.City)",
    "N1: !(t1.Year < t2.Year & t1.Place > t2.Place)",
    "N2: !(t1.Year <= t2.Year)",
    "N3: !(t1.Year >= 2019)",
    "N4: !(t1.Place < 2.5)",
    'Q1: !(t1.Team = "say \\"hi\\"")',
    'Q2: !(t1.Team = "back\\\\slash")',
    'Q3: !(t1.Team = "")',
    "M1: !(t1.Year = 2019 & t2.Year = 2018)",
    "M2: !(t1.Year = t2.Year & t1.League != t2.League & t1.Place = t2.Place"
    " & t1.City != t2.City & t1.Country = t2.Country)",
    "W1:!(t1.Team=t2.Team&t1.City!=t2.City)",
    "W2:   !(  t1.Team   =    t2.Team  )",
    "X1: !(t1.Team != t2.Team)  # trailing comment",
    "X2: !(t1.A_1 = t2.A_1)",
    "X3: !(t1.Year = -5)",
    "X4: !(t1.Year = 1.5e2)",
    "X5: !(2019 = t1.Year)",
    "C4: !(t1.Team != t1.Team & t1.Year = t1.Year"
    " & t1.League = t2.League & t1.Place = t2.Place)",
    "C4: !(t1.Team != t2.Team & t1.Year = t2.Year"
    " & t1.League = t2.League & t1.Place = t2.Place)",
]


@pytest.mark.parametrize("text", CORPUS)
def test_parse_print_parse_fixpoint(text):
    dc = parse_dc(text)
    printed = format_dc(dc)
    again = parse_dc(printed)
    assert again == dc
    assert format_dc(again) == printed


def test_corpus_is_large_enough():
    assert len(CORPUS) >= 20


def test_printed_duplicate_rule_is_inert(laliga_table):
    # t1.Team != t1.Team can never hold, so the as-printed form fires nowhere
    printed = parse_dc(CORPUS[-2])
    assert violations(printed, laliga_table) == []


def test_single_tuple_detection():
    assert parse_dc("S1: !(t1.Place >= 4)").single_tuple
    assert not parse_dc("E1: !(t1.City = t2.City)").single_tuple
    # a t2-only constraint still ranges over pairs
    assert not parse_dc("E2: !(t2.City = \"x\" & t1.City = \"y\")").single_tuple


def test_single_tuple_violations_are_diagonal():
    t = Table(("Place",), ((Decimal(5),), (Decimal(1),), (None,), (Decimal(4),)))
    dc = parse_dc("S1: !(t1.Place >= 4)")
    assert violations(dc, t) == [Violation("S1", (1, 1)), Violation("S1", (4, 4))]


def test_null_never_violates():
    t = Table(("Country",), (("Spain",), (None,)))
    # even != is false when one side is null
    dc = parse_dc("D1: !(t1.Country != t2.Country)")
    assert violations(dc, t) == []
    assert naive_violations(dc, t) == []


def test_equality_is_exact_decimal():
    t = Table(("Year", "Tag"), ((Decimal("2019"), "x"), (Decimal("2019.0"), "y")))
    dup = parse_dc("D1: !(t1.Year = t2.Year & t1.Tag != t2.Tag)")
    assert len(violations(dup, t)) == 2
    # text "2019" is not the number 2019
    t2 = Table(("Year",), ((Decimal("2019"),), ("2019",)))
    assert violations(parse_dc("D2: !(t1.Year = t2.Year)"), t2) == []


def test_mixed_kind_ordering_is_an_error():
    t = Table(("Year",), ((Decimal(1),), ("old",)))
    with pytest.raises(TypeError):
        violations(parse_dc("D1: !(t1.Year < t2.Year)"), t)


def test_constants_and_escapes_evaluate():
    t = Table(("Team",), (('say "hi"',), ("back\\slash",), ("",)))
    assert violations(parse_dc(CORPUS[10]), t) == [Violation("Q1", (1, 1))]
    assert violations(parse_dc(CORPUS[11]), t) == [Violation("Q2", (2, 2))]
    assert violations(parse_dc(CORPUS[12]), t) == [Violation("Q3", (3, 3))]


def test_fixture_violation_counts(laliga_table, laliga_dcs):
    counts = {}
    for dc in laliga_dcs:
        found = violations(dc, laliga_table)
        assert found == naive_violations(dc, laliga_table)
        counts[dc.id] = len(found)
    assert counts == {"C1": 4, "C2": 0, "C3": 8, "C4": 0}


def test_fixture_symmetric_closure(laliga_table, laliga_dcs):
    # C1-C3 swap-symmetric: (i, j) violates iff (j, i) does
    for dc in laliga_dcs[:3]:
        pairs = {v.pair for v in violations(dc, laliga_table)}
        assert pairs == {(j, i) for i, j in pairs}


def test_parse_constraints_file_handling():
    text = "# header comment\n\nC1: !(t1.A = t2.A)\n  # indented comment\nC2: !(t1.B = t2.B)\n"
    dcs = parse_constraints(text)
    assert [dc.id for dc in dcs] == ["C1", "C2"]

    with pytest.raises(ParseError) as err:
        parse_constraints("C1: !(t1.A = t2.A)\n\nC1: !(t1.B = t2.B)\n")
    assert err.value.line == 3 and "duplicate" in str(err.value)


@pytest.mark.parametrize(
    "bad, line, column",
    [
        ("C1 !(t1.A = t2.A)", 1, 4),  # missing colon
        ("C1: (t1.A = t2.A)", 1, 5),  # bare parenthesis
        ("C1: !(t1.A = t2.A", 1, 18),  # unclosed
        ("C1: !(3 = 4)", 1, 7),  # no tuple slot
        ("C1: !()", 1, 7),  # empty conjunction
        ("C1: !(t1.A ! t2.A)", 1, 13),  # lone bang
        ("C1: !(t1.A = t2.A))", 1, 19),  # trailing junk
        ('C1: !(t1.A = "abc)', 1, 14),  # unterminated string
        ("C1: !(t3.A = t2.A)", 1, 7),  # unknown slot
    ],
)
def test_parse_errors_carry_position(bad, line, column):
    with pytest.raises(ParseError) as err:
        parse_dc(bad)
    assert err.value.line == line
    assert err.value.column == column


def test_parse_constraints_reports_offending_line():
    text = "C1: !(t1.A = t2.A)\nC2: !(t1.B =\n"
    with pytest.raises(ParseError) as err:
        parse_constraints(text)
    assert err.value.line == 2


def test_bind_lists_missing_attributes(laliga_table):
    dc = parse_dc("B1: !(t1.Nope = t2.Also & t1.Team = t2.Team)")
    with pytest.raises(BindError) as err:
        dc.bind(laliga_table.schema)
    assert "Also, Nope" in str(err.value)
    with pytest.raises(BindError):
        violations(dc, laliga_table)


# -- property tests ----------------------------------------------------------

_POOL = [
    parse_dc(text)
    for text in [
        "P1: !(t1.B = t2.B & t1.C != t2.C)",
        "P2: !(t1.A = t2.A)",
        "P3: !(t1.A < t2.A & t1.C = t2.C)",
        "P4: !(t1.B = t2.B)",
        'P5: !(t1.C = "x")',
        "P6: !(t1.A >= t2.A & t1.B != t2.B)",
    ]
]

# column A numeric so order predicates never hit mixed kinds
_abc_rows = st.tuples(
    st.none() | st.integers(0, 3).map(Decimal),
    st.none() | st.sampled_from(["u", "v", "w"]),
    st.none() | st.sampled_from(["x", "y"]),
)
_abc_tables = st.lists(_abc_rows, max_size=5).map(
    lambda rows: Table(("A", "B", "C"), tuple(rows))
)


@given(_abc_tables, st.sampled_from(_POOL))
@settings(max_examples=120)
def test_checker_matches_naive_oracle(t, dc):
    assert violations(dc, t) == naive_violations(dc, t)


# only = and != predicates are swap-symmetric; order predicates are directional
_SYMMETRIC = [dc for dc in _POOL if all(p.op in (Op.EQ, Op.NEQ) for p in dc.predicates)]


@given(_abc_tables, st.sampled_from(_SYMMETRIC))
@settings(max_examples=80)
def test_symmetric_constraints_have_symmetric_violations(t, dc):
    pairs = {v.pair for v in violations(dc, t)}
    assert pairs == {(j, i) for i, j in pairs}


@given(st.data())
@settings(max_examples=80)
def test_masked_violations_touch_only_coalition_cells(data):
    t = data.draw(_abc_tables)
    refs = list(t.cell_refs())
    keep = data.draw(st.lists(st.sampled_from(refs), unique=True) if refs else st.just([]))
    masked = mask_cells(t, keep)
    for dc in _POOL:
        for v in violations(dc, masked):
            i, j = v.pair
            for p in dc.predicates:
                for term in (p.left, p.right):
                    if isinstance(term, AttrTerm):
                        row = i if term.slot == 1 else j
                        assert masked.value_at(CellRef(row, term.attr)) is not None
