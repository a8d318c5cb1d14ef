"""Denial-constraint language: grammar, parser, printer, predicate evaluation,
and brute-force violation detection.

A constraint line reads like

    C1: !(t1.Team = t2.Team & t1.City != t2.City)

meaning: for every ordered pair of distinct rows, NOT all predicates hold.
A predicate that touches a null value is false, so nulls never violate.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal
from enum import Enum
from typing import Sequence

from .errors import BindError, ParseError
from .table_model import Table, Value, values_equal, _NUMBER_RE


class Op(Enum):
    EQ = "="
    NEQ = "!="
    LT = "<"
    LEQ = "<="
    GT = ">"
    GEQ = ">="


_ORDER_OPS = frozenset({Op.LT, Op.LEQ, Op.GT, Op.GEQ})


@dataclass(frozen=True)
class AttrTerm:
    """Reference to an attribute of tuple slot t1 or t2."""

    slot: int
    attr: str


@dataclass(frozen=True)
class ConstTerm:
    """Literal text or number; the grammar has no null literal."""

    value: Value


Term = AttrTerm | ConstTerm


@dataclass(frozen=True)
class Predicate:
    left: Term
    op: Op
    right: Term

    def __post_init__(self):
        if isinstance(self.left, ConstTerm) and isinstance(self.right, ConstTerm):
            raise ValueError("a predicate must reference at least one tuple slot")


@dataclass(frozen=True)
class DenialConstraint:
    """Labeled, universally quantified negated conjunction over a tuple pair."""

    id: str
    predicates: tuple[Predicate, ...]

    def __post_init__(self):
        object.__setattr__(self, "predicates", tuple(self.predicates))
        if not self.predicates:
            raise ValueError("a denial constraint needs at least one predicate")

    @property
    def single_tuple(self) -> bool:
        """True when no predicate references t2; checked per row, not per pair."""
        return not any(
            isinstance(t, AttrTerm) and t.slot == 2
            for p in self.predicates
            for t in (p.left, p.right)
        )

    def attrs(self) -> set[str]:
        return {
            t.attr
            for p in self.predicates
            for t in (p.left, p.right)
            if isinstance(t, AttrTerm)
        }

    def bind(self, schema: Sequence[str]) -> None:
        missing = sorted(self.attrs() - set(schema))
        if missing:
            raise BindError(
                f"constraint {self.id} references unknown attribute(s): "
                + ", ".join(missing)
            )


@dataclass(frozen=True)
class Violation:
    """One violating ordered row pair; single-tuple constraints report (i, i)."""

    dc_id: str
    pair: tuple[int, int]


# --- lexer ------------------------------------------------------------------

_IDENT_START = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_")
_IDENT_CONT = _IDENT_START | set("0123456789")


def _tokenize(text: str, line_no: int) -> list[tuple[str, object, int]]:
    """Produce (kind, payload, column) tokens; kind is the literal for symbols."""
    out: list[tuple[str, object, int]] = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        col = i + 1
        if c in " \t":
            i += 1
            continue
        if c == "#":
            break
        if c == "!":
            if i + 1 < n and text[i + 1] == "=":
                out.append(("op", Op.NEQ, col))
                i += 2
            elif i + 1 < n and text[i + 1] == "(":
                out.append(("!(", None, col))
                i += 2
            else:
                raise ParseError("expected '=' or '(' after '!'", line_no, col + 1)
            continue
        if c in "<>":
            if i + 1 < n and text[i + 1] == "=":
                out.append(("op", Op.LEQ if c == "<" else Op.GEQ, col))
                i += 2
            else:
                out.append(("op", Op.LT if c == "<" else Op.GT, col))
                i += 1
            continue
        if c == "=":
            out.append(("op", Op.EQ, col))
            i += 1
            continue
        if c in ":&)" or (c == "." and not (i + 1 < n and text[i + 1].isdigit())):
            out.append((c, None, col))
            i += 1
            continue
        if c == '"':
            i += 1
            chars = []
            while i < n and text[i] != '"':
                if text[i] == "\\" and i + 1 < n and text[i + 1] in '\\"':
                    chars.append(text[i + 1])
                    i += 2
                else:
                    chars.append(text[i])
                    i += 1
            if i >= n:
                raise ParseError("unterminated string literal", line_no, col)
            i += 1
            out.append(("string", "".join(chars), col))
            continue
        m = _NUMBER_RE.match(text, i)
        if m is None and c in "0123456789+-.":
            # a prefix may still be a number even if the tail is not
            m = None
            for j in range(n, i, -1):
                if _NUMBER_RE.fullmatch(text[i:j]):
                    m = text[i:j]
                    break
            if m is not None:
                out.append(("number", Decimal(m), col))
                i += len(m)
                continue
        elif m is not None:
            out.append(("number", Decimal(m.group()), col))
            i = m.end()
            continue
        if c in _IDENT_START:
            j = i + 1
            while j < n and text[j] in _IDENT_CONT:
                j += 1
            out.append(("ident", text[i:j], col))
            i = j
            continue
        raise ParseError(f"unexpected character {c!r}", line_no, col)
    out.append(("eof", None, n + 1))
    return out


# --- parser -----------------------------------------------------------------


class _Parser:
    def __init__(self, tokens, line_no: int):
        self.tokens = tokens
        self.line_no = line_no
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def take(self, kind: str):
        tok = self.tokens[self.pos]
        if tok[0] != kind:
            raise ParseError(
                f"expected {kind!r}, found {self._describe(tok)}", self.line_no, tok[2]
            )
        self.pos += 1
        return tok

    @staticmethod
    def _describe(tok) -> str:
        kind, payload, _ = tok
        if kind == "eof":
            return "end of line"
        if payload is None:
            return repr(kind)
        if isinstance(payload, Op):
            return repr(payload.value)
        return repr(str(payload))

    def term(self) -> Term:
        kind, payload, col = self.peek()
        if kind == "string":
            self.pos += 1
            return ConstTerm(payload)
        if kind == "number":
            self.pos += 1
            return ConstTerm(payload)
        if kind == "ident":
            if payload not in ("t1", "t2"):
                raise ParseError(
                    f"expected t1, t2, or a literal, found {payload!r}",
                    self.line_no,
                    col,
                )
            self.pos += 1
            self.take(".")
            attr_tok = self.take("ident")
            return AttrTerm(1 if payload == "t1" else 2, attr_tok[1])
        raise ParseError(
            f"expected a term, found {self._describe(self.peek())}",
            self.line_no,
            col,
        )

    def predicate(self) -> Predicate:
        start_col = self.peek()[2]
        left = self.term()
        op_tok = self.take("op")
        right = self.term()
        if isinstance(left, ConstTerm) and isinstance(right, ConstTerm):
            raise ParseError(
                "a predicate must reference t1 or t2", self.line_no, start_col
            )
        return Predicate(left, op_tok[1], right)

    def constraint(self) -> DenialConstraint:
        label_tok = self.take("ident")
        self.take(":")
        self.take("!(")
        preds = [self.predicate()]
        while self.peek()[0] == "&":
            self.pos += 1
            preds.append(self.predicate())
        self.take(")")
        self.take("eof")
        return DenialConstraint(label_tok[1], tuple(preds))


def parse_dc(text: str, line_no: int = 1) -> DenialConstraint:
    """Parse a single constraint line; errors carry line and column."""
    return _Parser(_tokenize(text, line_no), line_no).constraint()


def parse_constraints(text: str) -> list[DenialConstraint]:
    """Parse a constraint file: one constraint per line, '#' comments, blank
    lines ignored; duplicate labels are rejected."""
    out: list[DenialConstraint] = []
    seen: dict[str, int] = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        dc = parse_dc(line, line_no)
        if dc.id in seen:
            raise ParseError(
                f"duplicate constraint label {dc.id!r} (first at line {seen[dc.id]})",
                line_no,
                1,
            )
        seen[dc.id] = line_no
        out.append(dc)
    return out


def format_dc(dc: DenialConstraint) -> str:
    """Canonical text for a constraint; parse(format_dc(x)) equals x."""

    def term(t: Term) -> str:
        if isinstance(t, AttrTerm):
            return f"t{t.slot}.{t.attr}"
        if isinstance(t.value, Decimal):
            return str(t.value)
        escaped = t.value.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'

    body = " & ".join(f"{term(p.left)} {p.op.value} {term(p.right)}" for p in dc.predicates)
    return f"{dc.id}: !({body})"


# --- evaluation -------------------------------------------------------------


def _term_value(term: Term, row_i, row_j, positions) -> Value:
    if isinstance(term, ConstTerm):
        return term.value
    row = row_i if term.slot == 1 else row_j
    return row[positions[term.attr]]


def _pred_holds(pred: Predicate, row_i, row_j, positions) -> bool:
    a = _term_value(pred.left, row_i, row_j, positions)
    b = _term_value(pred.right, row_i, row_j, positions)
    if a is None or b is None:
        return False
    if pred.op is Op.EQ:
        return values_equal(a, b)
    if pred.op is Op.NEQ:
        return not values_equal(a, b)
    if isinstance(a, Decimal) != isinstance(b, Decimal):
        raise TypeError(f"cannot order {a!r} against {b!r}: mixed kinds")
    if pred.op is Op.LT:
        return a < b
    if pred.op is Op.LEQ:
        return a <= b
    if pred.op is Op.GT:
        return a > b
    return a >= b


def holds_violated(dc: DenialConstraint, schema: Sequence[str], row_i, row_j) -> bool:
    """True iff the ordered pair (t1 := row_i, t2 := row_j) satisfies every
    predicate, i.e. the negated conjunction is breached."""
    positions = {name: k for k, name in enumerate(schema)}
    return all(_pred_holds(p, row_i, row_j, positions) for p in dc.predicates)


def violations(dc: DenialConstraint, table: Table) -> list[Violation]:
    """All violating ordered pairs (i, j), i != j, by quadratic enumeration,
    sorted by (i, j); single-tuple constraints are checked per row as (i, i)."""
    dc.bind(table.schema)
    positions = {name: k for k, name in enumerate(table.schema)}
    found = []
    if dc.single_tuple:
        for i, row in enumerate(table.rows, start=1):
            if all(_pred_holds(p, row, row, positions) for p in dc.predicates):
                found.append(Violation(dc.id, (i, i)))
        return found
    for i, row_i in enumerate(table.rows, start=1):
        for j, row_j in enumerate(table.rows, start=1):
            if i == j:
                continue
            if all(_pred_holds(p, row_i, row_j, positions) for p in dc.predicates):
                found.append(Violation(dc.id, (i, j)))
    return found
