"""Polyhedra in constraint form and Farkas-certificate values.

A polyhedron over n variables is a finite list of rows, each meaning
``coeffs . x <= bound`` (or ``< bound`` when the strict flag is set).
Equalities are stored as paired inequalities.  The empty row list denotes
the full space; dimension 0 is legal.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .rationals import format_rat, rat


class InputError(ValueError):
    """Malformed input data (dimension mismatch, bad syntax, ...)."""


@dataclass(frozen=True)
class Row:
    coeffs: tuple[Fraction, ...]
    bound: Fraction
    strict: bool = False

    def eval_lhs(self, point: Sequence[Fraction]) -> Fraction:
        if len(point) != len(self.coeffs):
            raise InputError(
                f"point of dimension {len(point)} against row of dimension {len(self.coeffs)}"
            )
        return sum((c * rat(x) for c, x in zip(self.coeffs, point) if c), Fraction(0))

    def holds_at(self, point: Sequence[Fraction]) -> bool:
        lhs = self.eval_lhs(point)
        return lhs < self.bound if self.strict else lhs <= self.bound

    def scaled(self, factor: Fraction) -> "Row":
        if factor <= 0:
            raise InputError("row scaling must be positive")
        return Row(tuple(c * factor for c in self.coeffs), self.bound * factor, self.strict)

    def __str__(self) -> str:
        op = "<" if self.strict else "<="
        terms = " + ".join(
            f"{format_rat(c)}*x{i}" for i, c in enumerate(self.coeffs) if c != 0
        ) or "0"
        return f"{terms} {op} {format_rat(self.bound)}"


def make_row(coeffs: Iterable, bound, strict: bool = False) -> Row:
    return Row(tuple(rat(c) for c in coeffs), rat(bound), strict)


@dataclass(frozen=True)
class Polyhedron:
    dim: int
    rows: tuple[Row, ...] = ()

    def __post_init__(self):
        if self.dim < 0:
            raise InputError("negative dimension")
        for r in self.rows:
            if len(r.coeffs) != self.dim:
                raise InputError(
                    f"row of arity {len(r.coeffs)} in polyhedron of dimension {self.dim}"
                )

    @staticmethod
    def full(dim: int) -> "Polyhedron":
        return Polyhedron(dim, ())

    @staticmethod
    def from_rows(dim: int, rows: Iterable[Row]) -> "Polyhedron":
        return Polyhedron(dim, tuple(rows))

    def contains(self, point: Sequence) -> bool:
        pt = [rat(x) for x in point]
        if len(pt) != self.dim:
            raise InputError("dimension mismatch in membership test")
        return all(r.holds_at(pt) for r in self.rows)

    def with_rows(self, extra: Iterable[Row]) -> "Polyhedron":
        return Polyhedron(self.dim, self.rows + tuple(extra))

    def conjoin(self, other: "Polyhedron") -> "Polyhedron":
        if other.dim != self.dim:
            raise InputError("conjoining polyhedra of different dimensions")
        return Polyhedron(self.dim, self.rows + other.rows)

    @property
    def has_strict(self) -> bool:
        return any(r.strict for r in self.rows)


def eq_rows(coeffs: Iterable, bound) -> list[Row]:
    """An equality coeffs.x = bound as a pair of inequalities."""
    cs = tuple(rat(c) for c in coeffs)
    b = rat(bound)
    return [Row(cs, b), Row(tuple(-c for c in cs), -b)]


@dataclass(frozen=True)
class FarkasCertificate:
    """Nonnegative multipliers combining premise rows into a target inequality.

    The combination sum_i lam_i * row_i must yield coefficients equal to the
    target's and a bound at most the target's.  Checked on construction.
    """

    multipliers: tuple[Fraction, ...]
    premise: Polyhedron
    target_coeffs: tuple[Fraction, ...] = field(default=())
    target_bound: Optional[Fraction] = None  # None encodes "< 0" (infeasibility)

    def __post_init__(self):
        if len(self.multipliers) != len(self.premise.rows):
            raise InputError("one multiplier per premise row required")
        if any(m < 0 for m in self.multipliers):
            raise InputError("Farkas multipliers must be nonnegative")
        combo = [Fraction(0)] * self.premise.dim
        bound = Fraction(0)
        any_strict = False
        for m, row in zip(self.multipliers, self.premise.rows):
            if m == 0:
                continue
            if row.strict:
                any_strict = True
            for j, c in enumerate(row.coeffs):
                if c:
                    combo[j] += m * c
            bound += m * row.bound
        if self.target_bound is None:
            # infeasibility witness: 0 <= bound with bound < 0 (or <= 0 with
            # a strict row involved)
            if any(c != 0 for c in combo):
                raise InputError("infeasibility certificate must cancel all coefficients")
            if not (bound < 0 or (any_strict and bound <= 0)):
                raise InputError("infeasibility certificate does not derive a contradiction")
        else:
            if tuple(combo) != tuple(self.target_coeffs):
                raise InputError("certificate does not reproduce the target coefficients")
            if bound > self.target_bound:
                raise InputError("certificate bound exceeds the target bound")


# ---------------------------------------------------------------------------
# .poly text format: a 'vars:' header then one constraint per line.
# ---------------------------------------------------------------------------


def parse_poly(text: str) -> tuple[Polyhedron, list[str]]:
    from .linexpr import parse_constraint_line

    names: list[str] = []
    rows: list[Row] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("vars:"):
            names = line[len("vars:"):].split()
            if len(set(names)) != len(names):
                raise InputError(f"line {lineno}: duplicate variable names")
            continue
        if not names:
            raise InputError(f"line {lineno}: constraint before 'vars:' header")
        rows.extend(parse_constraint_line(line, names, allow_primed=False, lineno=lineno))
    return Polyhedron(len(names), tuple(rows)), names


def emit_poly(poly: Polyhedron, names: Sequence[str]) -> str:
    from .linexpr import format_row

    lines = ["vars: " + " ".join(names)]
    for row in poly.rows:
        lines.append(format_row(row, names))
    return "\n".join(lines) + "\n"
