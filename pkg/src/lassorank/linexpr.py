"""Parsing and printing of linear expressions and constraints.

Grammar (used by the .slcp, .poly and CLI surfaces):

    constraint := expr (REL expr)+          REL in { <=, <, >=, >, = }
    expr       := ['+'|'-'] term (('+'|'-') term)*
    term       := coeff ['*'] ident | coeff | ident
    coeff      := integer or rational literal like 3, -2, 5/4
    ident      := letter (letter|digit|_)* with an optional trailing '

Chained relations like ``0 <= X <= 1`` expand to one row per adjacent pair.
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Sequence

from .polyhedron import InputError, Row
from .rationals import format_rat, rat

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:/\d+)?)|(?P<ident>[A-Za-z_][A-Za-z0-9_]*'?)"
    r"|(?P<rel><=|>=|=|<|>)|(?P<op>[+\-*]))"
)


def _tokenize(text: str, lineno: int | None = None):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            if text[pos:].strip() == "":
                break
            where = f"line {lineno}, " if lineno else ""
            raise InputError(f"{where}column {pos + 1}: unexpected character {text[pos]!r}")
        pos = m.end()
        for kind in ("num", "ident", "rel", "op"):
            if m.group(kind) is not None:
                tokens.append((kind, m.group(kind)))
                break
    return tokens


class _Parser:
    def __init__(self, tokens, names: Sequence[str], lineno=None):
        self.tokens = tokens
        self.i = 0
        self.index = {n: j for j, n in enumerate(names)}
        self.n = len(names)
        self.lineno = lineno

    def _err(self, msg):
        where = f"line {self.lineno}: " if self.lineno else ""
        raise InputError(where + msg)

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else (None, None)

    def take(self):
        tok = self.peek()
        self.i += 1
        return tok

    def parse_expr(self):
        coeffs = [Fraction(0)] * self.n
        const = Fraction(0)
        sign = Fraction(1)
        expect_term = True
        while True:
            kind, val = self.peek()
            if kind == "op" and val in "+-":
                self.take()
                if expect_term and val == "-":
                    sign = -sign
                elif expect_term:
                    pass
                else:
                    sign = Fraction(1) if val == "+" else Fraction(-1)
                    expect_term = True
                continue
            if kind == "num":
                self.take()
                value = sign * rat(val)
                k2, v2 = self.peek()
                if k2 == "op" and v2 == "*":
                    self.take()
                    k2, v2 = self.peek()
                    if k2 != "ident":
                        self._err("expected a variable after '*'")
                if k2 == "ident":
                    self.take()
                    self._add_var(coeffs, v2, value)
                else:
                    const += value
                sign = Fraction(1)
                expect_term = False
                continue
            if kind == "ident":
                self.take()
                self._add_var(coeffs, val, sign)
                sign = Fraction(1)
                expect_term = False
                continue
            break
        if expect_term:
            self._err("expected a term")
        return coeffs, const

    def _add_var(self, coeffs, name, value):
        j = self.index.get(name)
        if j is None:
            self._err(f"unknown identifier {name!r}")
        coeffs[j] += value


def parse_constraint_line(
    line: str,
    names: Sequence[str],
    allow_primed: bool = False,
    lineno: int | None = None,
) -> list[Row]:
    """Parse one constraint (possibly chained) into <=-rows over `names`.

    `names` must already include primed variables when allow_primed is set;
    when it is not, a primed identifier is a syntax error.
    """
    if not allow_primed:
        for kind, val in _tokenize(line, lineno):
            if kind == "ident" and val.endswith("'"):
                where = f"line {lineno}: " if lineno else ""
                raise InputError(where + f"primed variable {val!r} not allowed here")
    parser = _Parser(_tokenize(line, lineno), names, lineno)
    sides = [parser.parse_expr()]
    rels = []
    while True:
        kind, val = parser.peek()
        if kind != "rel":
            break
        parser.take()
        rels.append(val)
        sides.append(parser.parse_expr())
    if parser.peek()[0] is not None:
        parser._err("trailing tokens after constraint")
    if not rels:
        parser._err("expected a relation (<=, <, >=, >, =)")
    rows: list[Row] = []
    for (lc, lk), rel, (rc, rk) in zip(sides, rels, sides[1:]):
        diff = [a - b for a, b in zip(lc, rc)]
        bound = rk - lk
        if rel in ("<=", "<"):
            rows.append(Row(tuple(diff), bound, strict=(rel == "<")))
        elif rel in (">=", ">"):
            rows.append(Row(tuple(-d for d in diff), -bound, strict=(rel == ">")))
        else:  # '='
            rows.append(Row(tuple(diff), bound))
            rows.append(Row(tuple(-d for d in diff), -bound))
    return rows


def integer_tighten(row: Row) -> Row:
    """Rescale a row to integer coefficients; resolve strictness by the
    integer-model shift (t < b over integer-valued t becomes t <= b-1 after
    clearing denominators)."""
    from math import lcm

    denoms = [c.denominator for c in row.coeffs] + [row.bound.denominator]
    scale = Fraction(lcm(*denoms)) if len(denoms) > 1 else Fraction(denoms[0])
    coeffs = tuple(c * scale for c in row.coeffs)
    bound = row.bound * scale
    if row.strict:
        bound = bound - 1 if bound.denominator == 1 else Fraction(bound.__floor__())
        return Row(coeffs, bound, strict=False)
    return Row(coeffs, bound, strict=False)


def format_term(coeff: Fraction, name: str, first: bool) -> str:
    sign = "-" if coeff < 0 else ("" if first else "+")
    mag = abs(coeff)
    body = name if mag == 1 else f"{format_rat(mag)}{name}"
    if first:
        return f"{sign}{body}"
    return f"{sign} {body}"


def format_linear(coeffs: Sequence[Fraction], names: Sequence[str], const: Fraction = Fraction(0)) -> str:
    parts = []
    for c, n in zip(coeffs, names):
        if c:
            parts.append(format_term(c, n, not parts))
    if const or not parts:
        sign = "-" if const < 0 else ("" if not parts else "+")
        lead = f"{sign}{format_rat(abs(const))}"
        parts.append(lead if not parts else f"{sign} {format_rat(abs(const))}")
    return " ".join(parts)


def format_row(row: Row, names: Sequence[str]) -> str:
    op = "<" if row.strict else "<="
    return f"{format_linear(row.coeffs, names)} {op} {format_rat(row.bound)}"
