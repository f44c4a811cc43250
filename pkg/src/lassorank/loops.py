"""Single-path linear-constraint loops with preconditions.

A loop is ``pre: C x <= c;  while (B x <= b) do A (x;x') <= a`` over n
variables, interpreted over the integers or the rationals.  This module
holds the data model, transition membership, bounded exploration of
integer loops, and the line-oriented ``.slcp`` file format.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .linexpr import format_row, integer_tighten, parse_constraint_line
from .polyhedron import InputError, Polyhedron, Row
from .rationals import rat

INTEGER = "int"
RATIONAL = "rat"


@dataclass(frozen=True)
class SlcpLoop:
    var_names: tuple[str, ...]
    precondition: Polyhedron
    guard: Polyhedron
    update: Polyhedron
    interpretation: str = INTEGER

    def __post_init__(self):
        n = len(self.var_names)
        if len(set(self.var_names)) != n:
            raise InputError("variable names must be distinct")
        if self.interpretation not in (INTEGER, RATIONAL):
            raise InputError(f"unknown interpretation {self.interpretation!r}")
        if self.precondition.dim != n or self.guard.dim != n:
            raise InputError("precondition/guard dimension mismatch")
        if self.update.dim != 2 * n:
            raise InputError("update must range over unprimed then primed variables")

    @property
    def n(self) -> int:
        return len(self.var_names)

    @property
    def is_integer(self) -> bool:
        return self.interpretation == INTEGER

    def transition_polyhedron(self) -> Polyhedron:
        """Guard lifted to 2n variables, conjoined with the update."""
        n = self.n
        lifted = [
            Row(row.coeffs + (Fraction(0),) * n, row.bound, row.strict)
            for row in self.guard.rows
        ]
        return Polyhedron(2 * n, tuple(lifted) + self.update.rows)


@dataclass(frozen=True)
class PartialInput:
    """A partially-specified input: some variables fixed, the rest free."""

    assignments: tuple[tuple[int, Fraction], ...]

    @staticmethod
    def of(mapping) -> "PartialInput":
        items = tuple(sorted((int(i), rat(v)) for i, v in dict(mapping).items()))
        return PartialInput(items)

    def check(self, n: int, integer: bool) -> None:
        for i, v in self.assignments:
            if not 0 <= i < n:
                raise InputError(f"assigned index {i} out of range")
            if integer and v.denominator != 1:
                raise InputError(f"integer loop given non-integer input {v} at index {i}")

    def matches(self, state) -> bool:
        return all(rat(state[i]) == v for i, v in self.assignments)

    def instantiate(self, n: int, free_value=Fraction(0)):
        s = [rat(free_value)] * n
        for i, v in self.assignments:
            s[i] = v
        return tuple(s)


State = tuple  # rational vector of length n


def _all_integers(point) -> bool:
    return all(rat(v).denominator == 1 for v in point)


def is_initial(loop: SlcpLoop, state) -> bool:
    if len(state) != loop.n:
        raise InputError("state dimension mismatch")
    point = tuple(rat(v) for v in state)
    if loop.is_integer and not _all_integers(point):
        return False
    return loop.precondition.contains(point)


def is_transition(loop: SlcpLoop, x, x2) -> bool:
    if len(x) != loop.n or len(x2) != loop.n:
        raise InputError("state dimension mismatch")
    px = tuple(rat(v) for v in x)
    px2 = tuple(rat(v) for v in x2)
    if loop.is_integer and not (_all_integers(px) and _all_integers(px2)):
        return False
    return loop.guard.contains(px) and loop.update.contains(px + px2)


# ---------------------------------------------------------------------------
# bounded integer successor enumeration
# ---------------------------------------------------------------------------


def _floor_div(a: Fraction, b: Fraction) -> int:
    return (a / b).__floor__()


def _ceil_div(a: Fraction, b: Fraction) -> int:
    return -((-a / b).__floor__())


def _propagate(rows, lo, hi):
    """Interval propagation on  sum c_j y_j <= r  rows; returns False on a
    wipe-out.  lo/hi are integer bound lists mutated in place."""
    n = len(lo)
    changed = True
    while changed:
        changed = False
        for terms, r in rows:
            mins = []
            total_min = Fraction(0)
            for j, c in terms:
                m = c * lo[j] if c > 0 else c * hi[j]
                mins.append(m)
                total_min += m
            if total_min > r:
                return False
            for k, (j, c) in enumerate(terms):
                rest = r - (total_min - mins[k])
                if c > 0:
                    cap = _floor_div(rest, c)
                    if cap < hi[j]:
                        hi[j] = cap
                        changed = True
                else:
                    cap = _ceil_div(rest, c)
                    if cap > lo[j]:
                        lo[j] = cap
                        changed = True
                if lo[j] > hi[j]:
                    return False
    return True


def successors_bounded(loop: SlcpLoop, state, box) -> list:
    """All integer successors of `state` whose coordinates lie in `box`
    (a per-variable list of inclusive integer intervals), in lexicographic
    order.  The box must be sound for the intended use: successors outside
    it are silently not reported."""
    if not loop.is_integer:
        raise InputError("successors_bounded supports integer loops only")
    n = loop.n
    if len(state) != n or len(box) != n:
        raise InputError("state/box dimension mismatch")
    px = tuple(rat(v) for v in state)
    if not _all_integers(px) or not loop.guard.contains(px):
        return []
    lo = []
    hi = []
    for a, b in box:
        a, b = int(a), int(b)
        if a > b:
            raise InputError("empty box interval")
        lo.append(a)
        hi.append(b)

    rows = []
    for row in loop.update.rows:
        tight = integer_tighten(row)
        residual = tight.bound - sum(
            (c * px[j] for j, c in enumerate(tight.coeffs[:n]) if c), Fraction(0)
        )
        terms = [(j, c) for j, c in enumerate(tight.coeffs[n:]) if c]
        if not terms:
            if residual < 0:
                return []
            continue
        rows.append((terms, residual))

    results = []

    def search(lo, hi, rows):
        if not _propagate(rows, lo, hi):
            return
        # branch on the unfixed variable with the smallest domain
        pick = -1
        width = None
        for j in range(n):
            w = hi[j] - lo[j]
            if w > 0 and (width is None or w < width):
                pick, width = j, w
        if pick < 0:
            results.append(tuple(Fraction(v) for v in lo))
            return
        for v in range(lo[pick], hi[pick] + 1):
            nlo, nhi = list(lo), list(hi)
            nlo[pick] = nhi[pick] = v
            search(nlo, nhi, rows)

    search(lo, hi, rows)
    results.sort()
    return results


# ---------------------------------------------------------------------------
# bounded exploration
# ---------------------------------------------------------------------------

HALTED = "Halted"
CYCLE_FOUND = "CycleFound"
BUDGET_EXCEEDED = "BudgetExceeded"


@dataclass(frozen=True)
class ExplorationReport:
    status: str
    visited: tuple
    cycle: Optional[tuple] = None   # s_1 ... s_k with s_k -> s_1
    stem: Optional[tuple] = None    # s0 ... up to (excluding) cycle[0]

    @property
    def lasso(self):
        if self.cycle is None:
            return None
        return (self.stem or ()) + self.cycle


def explore(loop: SlcpLoop, s0, box, max_steps: int) -> ExplorationReport:
    """Breadth-first exploration of the integer state graph within `box`.

    Classifies the outcome as Halted (every run leaves the guard within the
    budget), CycleFound (a reachable cycle exists; a verified lasso witness
    is attached), or BudgetExceeded.
    """
    if max_steps <= 0:
        raise InputError("max_steps must be positive")
    for a, b in box:
        if int(a) > int(b):
            raise InputError("empty box interval")
    start = tuple(rat(v) for v in s0)
    parent = {start: None}
    edges: dict = {}
    frontier = [start]
    truncated = False
    for _ in range(max_steps):
        if not frontier:
            break
        nxt = []
        for s in frontier:
            succs = successors_bounded(loop, s, box)
            edges[s] = succs
            for t in succs:
                if t not in parent:
                    parent[t] = s
                    nxt.append(t)
        frontier = nxt
    if frontier:
        truncated = True

    # cycle search restricted to expanded states
    color = {}
    stack_path = []

    def dfs(root):
        stack = [(root, iter(edges.get(root, ())))]
        color[root] = 1
        stack_path.append(root)
        while stack:
            node, it = stack[-1]
            advanced = False
            for t in it:
                if t not in edges:
                    continue  # not expanded; unknown beyond budget
                c = color.get(t, 0)
                if c == 0:
                    color[t] = 1
                    stack_path.append(t)
                    stack.append((t, iter(edges.get(t, ()))))
                    advanced = True
                    break
                if c == 1:
                    k = stack_path.index(t)
                    return tuple(stack_path[k:])
            if not advanced:
                stack.pop()
                stack_path.pop()
                color[node] = 2
        return None

    cycle = None
    for s in edges:
        if color.get(s, 0) == 0:
            cycle = dfs(s)
            if cycle is not None:
                break
    visited = tuple(parent)
    if cycle is not None:
        stem = []
        node = parent[cycle[0]]
        while node is not None:
            stem.append(node)
            node = parent[node]
        stem.reverse()
        return ExplorationReport(CYCLE_FOUND, visited, cycle=cycle, stem=tuple(stem))
    if truncated:
        return ExplorationReport(BUDGET_EXCEEDED, visited)
    return ExplorationReport(HALTED, visited)


# ---------------------------------------------------------------------------
# .slcp format
# ---------------------------------------------------------------------------


def _strip(line: str) -> str:
    if "#" in line:
        line = line[: line.index("#")]
    return line.strip()


def parse_loop(text: str) -> SlcpLoop:
    names: Optional[list[str]] = None
    interp = INTEGER
    sections: dict[str, list[tuple[int, str]]] = {"pre": [], "guard": [], "update": []}
    current: Optional[str] = None
    saw_interp = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip(raw)
        if not line:
            continue
        head, sep, rest = line.partition(":")
        key = head.strip().lower() if sep else None
        if key == "vars":
            names = rest.split()
            if not names:
                raise InputError(f"line {lineno}: empty variable list")
            current = None
            continue
        if key == "interp":
            interp = rest.strip()
            if interp not in (INTEGER, RATIONAL):
                raise InputError(f"line {lineno}: interp must be 'int' or 'rat'")
            saw_interp = True
            current = None
            continue
        if key in sections and rest.strip() == "":
            current = key
            continue
        if current is None:
            raise InputError(f"line {lineno}: constraint outside any section")
        sections[current].append((lineno, line))
    if names is None:
        raise InputError("missing 'vars:' header")
    if not saw_interp:
        raise InputError("missing 'interp:' header")
    n = len(names)
    primed = list(names) + [name + "'" for name in names]

    def build(section: str, dim: int, allow_primed: bool) -> Polyhedron:
        rows: list[Row] = []
        ns = primed if allow_primed else names
        for lineno, line in sections[section]:
            rows.extend(parse_constraint_line(line, ns, allow_primed, lineno))
        if interp == INTEGER:
            rows = [integer_tighten(r) for r in rows]
        return Polyhedron(dim, tuple(rows))

    return SlcpLoop(
        var_names=tuple(names),
        precondition=build("pre", n, False),
        guard=build("guard", n, False),
        update=build("update", 2 * n, True),
        interpretation=interp,
    )


def emit_loop(loop: SlcpLoop) -> str:
    names = list(loop.var_names)
    primed = names + [name + "'" for name in names]
    out = [f"vars: {' '.join(names)}", f"interp: {loop.interpretation}"]
    for label, poly, ns in (
        ("pre", loop.precondition, names),
        ("guard", loop.guard, names),
        ("update", loop.update, primed),
    ):
        out.append(f"{label}:")
        for row in poly.rows:
            out.append(f"  {format_row(row, ns)}")
    return "\n".join(out) + "\n"
