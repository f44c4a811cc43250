"""Vector addition systems / Petri nets: model, brute-force oracles, and
the reduction compilers to SLCP loops (plus the linear-recurrence gadget).

A Petri transition consumes v_minus and produces v_plus (enabled when
x >= v_minus); a plain VAS displacement d is stored via the canonical
split (negative parts into v_minus).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .affine import AffineFunction
from .loops import INTEGER, PartialInput, SlcpLoop
from .polyhedron import InputError, Polyhedron, Row, eq_rows
from .rationals import rat

DEFAULT_STATE_CAP = 10**6


def _nat_vector(vec, what: str) -> tuple[int, ...]:
    out = []
    for v in vec:
        iv = int(v)
        if iv != v or iv < 0:
            raise InputError(f"{what} entries must be nonnegative integers")
        out.append(iv)
    return tuple(out)


@dataclass(frozen=True)
class PetriNet:
    dim: int
    transitions: tuple[tuple[tuple[int, ...], tuple[int, ...]], ...]

    def __post_init__(self):
        fixed = []
        for minus, plus in self.transitions:
            minus = _nat_vector(minus, "v_minus")
            plus = _nat_vector(plus, "v_plus")
            if len(minus) != self.dim or len(plus) != self.dim:
                raise InputError("transition dimension mismatch")
            fixed.append((minus, plus))
        object.__setattr__(self, "transitions", tuple(fixed))

    @staticmethod
    def from_displacements(dim: int, vectors) -> "PetriNet":
        """Plain VAS: each signed displacement split into (v_minus, v_plus)."""
        trans = []
        for vec in vectors:
            if len(vec) != dim:
                raise InputError("displacement dimension mismatch")
            minus = tuple(max(0, -int(v)) for v in vec)
            plus = tuple(max(0, int(v)) for v in vec)
            trans.append((minus, plus))
        return PetriNet(dim, tuple(trans))

    def displacement(self, k: int) -> tuple[int, ...]:
        minus, plus = self.transitions[k]
        return tuple(p - m for m, p in zip(minus, plus))

    def enabled(self, state, k: int) -> bool:
        minus, _ = self.transitions[k]
        return all(s >= m for s, m in zip(state, minus))

    def fire(self, state, k: int) -> tuple[int, ...]:
        minus, plus = self.transitions[k]
        return tuple(s - m + p for s, m, p in zip(state, minus, plus))


# ---------------------------------------------------------------------------
# breadth-first oracles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Cover:
    target: tuple[int, ...]


@dataclass(frozen=True)
class Reach:
    target: tuple[int, ...]


@dataclass(frozen=True)
class Positive:
    coord: int  # 0-based


@dataclass(frozen=True)
class OracleYes:
    path: tuple[int, ...]       # transition indices from s0
    state: tuple[int, ...]      # the witnessing state


@dataclass(frozen=True)
class OracleNo:
    explored: int


@dataclass(frozen=True)
class OracleInconclusive:
    explored: int


def _query_predicate(net: PetriNet, query):
    if isinstance(query, Positive):
        if not 0 <= query.coord < net.dim:
            raise InputError("coordinate out of range")
        target = tuple(1 if j == query.coord else 0 for j in range(net.dim))
        return lambda s: all(a >= b for a, b in zip(s, target))
    if isinstance(query, Cover):
        target = _nat_vector(query.target, "cover target")
        if len(target) != net.dim:
            raise InputError("target dimension mismatch")
        return lambda s: all(a >= b for a, b in zip(s, target))
    if isinstance(query, Reach):
        target = _nat_vector(query.target, "reach target")
        if len(target) != net.dim:
            raise InputError("target dimension mismatch")
        return lambda s: s == target
    raise InputError(f"unknown query {query!r}")


def replay_path(net: PetriNet, s0, path) -> tuple[int, ...]:
    """Fire the transitions of `path` from s0, checking enabledness."""
    state = _nat_vector(s0, "initial state")
    for k in path:
        if not net.enabled(state, k):
            raise InputError(f"path not enabled at transition {k}")
        state = net.fire(state, k)
    return state


def vas_bfs(net: PetriNet, s0, query, state_cap: int = DEFAULT_STATE_CAP):
    """Exhaustive BFS answer to a coverability/reachability/positivity query.

    Yes answers carry a transition-index path (rechecked); No is returned
    only when the whole reachable set fit under the cap.
    """
    if state_cap <= 0:
        raise InputError("state cap must be positive")
    pred = _query_predicate(net, query)
    start = _nat_vector(s0, "initial state")
    parent = {start: None}
    queue = deque([start])
    while queue:
        state = queue.popleft()
        if pred(state):
            path = []
            node = state
            while parent[node] is not None:
                prev, k = parent[node]
                path.append(k)
                node = prev
            path.reverse()
            assert replay_path(net, start, path) == state
            return OracleYes(tuple(path), state)
        for k in range(len(net.transitions)):
            if net.enabled(state, k):
                nxt = net.fire(state, k)
                if nxt not in parent:
                    if len(parent) >= state_cap:
                        return OracleInconclusive(len(parent))
                    parent[nxt] = (state, k)
                    queue.append(nxt)
    return OracleNo(len(parent))


# ---------------------------------------------------------------------------
# reductions to SLCP loops
# ---------------------------------------------------------------------------

_ZERO = Fraction(0)
_ONE = Fraction(1)


def _unit(total: int, idx: int, value=_ONE):
    row = [_ZERO] * total
    row[idx] = rat(value)
    return row


def _positivity_parts(n: int, trans):
    """Names, guard and update shared by the positivity reducer and its
    structural recognizer."""
    m = len(trans)
    total = n + m + 1
    names = tuple(
        [f"X{i+1}" for i in range(n)] + [f"A{k+1}" for k in range(m)] + ["Y"]
    )
    ix = lambda i: i              # X_i, 0-based
    ia = lambda k: n + k          # A_k, 0-based
    iy = n + m

    guard_rows = [Row(tuple(_unit(total, ix(i), -1)), _ZERO) for i in range(n)]
    guard_rows.append(Row(tuple(_unit(total, iy, -1)), Fraction(-1)))  # Y >= 1

    up = []
    w = 2 * total
    # one and only one primed flag is set
    for k in range(m):
        up.append(Row(tuple(_unit(w, total + ia(k), -1)), _ZERO))
    sum_a = [_ZERO] * w
    for k in range(m):
        sum_a[total + ia(k)] = _ONE
    up.extend(eq_rows(sum_a, _ONE))
    # the chosen transition must be enabled:  X_i >= sum_k vminus_k[i] A'_k
    for i in range(n):
        coeffs = [_ZERO] * w
        coeffs[ix(i)] = Fraction(-1)
        for k, (minus, _) in enumerate(trans):
            if minus[i]:
                coeffs[total + ia(k)] = Fraction(minus[i])
        up.append(Row(tuple(coeffs), _ZERO))
    # effect:  X'_i = X_i - sum vminus A'_k + sum vplus A'_k
    for i in range(n):
        coeffs = [_ZERO] * w
        coeffs[total + ix(i)] = _ONE
        coeffs[ix(i)] = Fraction(-1)
        for k, (minus, plus) in enumerate(trans):
            if minus[i] != plus[i]:
                coeffs[total + ia(k)] = Fraction(minus[i] - plus[i])
        up.extend(eq_rows(coeffs, _ZERO))
    # budget:  Y' <= Y - 1 + X_n  (recharged only while X_n is positive)
    coeffs = [_ZERO] * w
    coeffs[total + iy] = _ONE
    coeffs[iy] = Fraction(-1)
    coeffs[ix(n - 1)] += Fraction(-1)
    up.append(Row(tuple(coeffs), Fraction(-1)))
    return names, Polyhedron(total, tuple(guard_rows)), Polyhedron(w, tuple(up))


def partial_to_precondition(partial: PartialInput, total: int) -> Polyhedron:
    """Equality rows x_i = d_i for every assigned coordinate."""
    rows = []
    for i, v in partial.assignments:
        rows.extend(eq_rows(_unit(total, i), v))
    return Polyhedron(total, tuple(rows))


def reduce_vas_positivity(net: PetriNet, s0):
    """Compile "does coordinate n ever become positive?" into supported-LRF
    form: a loop whose flags pick a transition each step, with a budget
    variable Y recharged only while coordinate n is positive.

    An idle transition (consume and re-emit one token on coordinate n) is
    appended so a positive coordinate n allows running forever.  Returns
    (loop, partial input with Y free, suggested ranking function Y).
    """
    n = net.dim
    s0 = _nat_vector(s0, "initial state")
    if len(s0) != n:
        raise InputError("initial state dimension mismatch")
    idle = tuple(1 if j == n - 1 else 0 for j in range(n))
    trans = net.transitions + ((idle, idle),)
    m = len(trans)
    total = n + m + 1
    names, guard, update = _positivity_parts(n, trans)
    assigns = {i: Fraction(s0[i]) for i in range(n)}
    assigns.update({n + k: _ZERO for k in range(m)})
    partial = PartialInput.of(assigns)
    loop = SlcpLoop(
        var_names=names,
        precondition=partial_to_precondition(partial, total),
        guard=guard,
        update=update,
        interpretation=INTEGER,
    )
    f = AffineFunction(tuple(_unit(total, n + m)), 0)
    return loop, partial, f


def recognize_positivity_loop(loop: SlcpLoop) -> Optional[PetriNet]:
    """If the loop is structurally an output of reduce_vas_positivity
    (any precondition), reconstruct and return the underlying Petri net
    (idle transition included); otherwise None."""
    names = loop.var_names
    n = sum(1 for s in names if s.startswith("X"))
    m = sum(1 for s in names if s.startswith("A"))
    if n < 1 or m < 1 or len(names) != n + m + 1 or names[-1] != "Y":
        return None
    total = n + m + 1
    expected_names = _positivity_parts(n, [((0,) * n, (0,) * n)] * m)[0]
    if names != expected_names:
        return None
    up = loop.update.rows
    if len(up) != m + 2 + n + 2 * n + 1:
        return None
    # enabling rows give v_minus, effect equalities give v_plus
    try:
        trans = []
        enab = up[m + 2 : m + 2 + n]
        eff = up[m + 2 + n : m + 2 + n + 2 * n : 2]
        for k in range(m):
            minus = tuple(int(enab[i].coeffs[total + n + k]) for i in range(n))
            plus = tuple(
                minus[i] - int(eff[i].coeffs[total + n + k]) for i in range(n)
            )
            trans.append((minus, plus))
        net = PetriNet(n, tuple(trans))
    except (ValueError, InputError):
        return None
    names2, guard2, update2 = _positivity_parts(n, net.transitions)
    if loop.guard.rows != guard2.rows or loop.update.rows != update2.rows:
        return None
    if not loop.is_integer:
        return None
    return net


def add_sentinel(vectors, s, t):
    """Append a permanently-positive coordinate to a VAS instance so that no
    computation from s reaches the zero vector (the reachability reduction's
    standing assumption).  The sentinel is 1 in s and in t and untouched by
    every displacement."""
    vecs = [tuple(v) + (0,) for v in vectors]
    return vecs, tuple(s) + (1,), tuple(t) + (1,)


def reduce_vas_reachability(net: PetriNet, s, t, apply_sentinel: bool = False):
    """Compile VAS reachability of t from s into supported-LRF form.

    The net is read as a plain VAS of its displacements.  The caller must
    guarantee that no computation from s reaches the zero vector, or pass
    apply_sentinel=True to enforce it by construction.  Returns
    (loop, partial input, suggested ranking function X_{n+1}).
    """
    vectors = [net.displacement(k) for k in range(len(net.transitions))]
    s = _nat_vector(s, "source")
    t = _nat_vector(t, "target")
    if len(s) != net.dim or len(t) != net.dim:
        raise InputError("source/target dimension mismatch")
    if apply_sentinel:
        vectors, s, t = add_sentinel(vectors, s, t)
    n = len(s)
    m = len(vectors)
    total = (n + 1) + (m + 2)
    names = tuple(
        [f"X{j+1}" for j in range(n + 1)] + [f"A{i+1}" for i in range(m + 2)]
    )
    ix = lambda j: j
    ia = lambda i: n + 1 + i

    guard_rows = [Row(tuple(_unit(total, j, -1)), _ZERO) for j in range(total)]
    sum_a = [_ZERO] * total
    for i in range(m + 2):
        sum_a[ia(i)] = _ONE
    guard_rows.extend(eq_rows(sum_a, _ONE))

    up = []
    w = 2 * total
    # X'_j = X_j + sum_i v_i[j] A_i - t[j] A_{m+1}
    for j in range(n):
        coeffs = [_ZERO] * w
        coeffs[total + ix(j)] = _ONE
        coeffs[ix(j)] = Fraction(-1)
        for i, vec in enumerate(vectors):
            if vec[j]:
                coeffs[ia(i)] += Fraction(-vec[j])
        if t[j]:
            coeffs[ia(m)] += Fraction(t[j])
        up.extend(eq_rows(coeffs, _ZERO))
    # one primed flag set
    for i in range(m + 2):
        up.append(Row(tuple(_unit(w, total + ia(i), -1)), _ZERO))
    sum_ap = [_ZERO] * w
    for i in range(m + 2):
        sum_ap[total + ia(i)] = _ONE
    up.extend(eq_rows(sum_ap, _ONE))
    # X'_{n+1} = X_{n+1} - sum_j X_j
    coeffs = [_ZERO] * w
    coeffs[total + ix(n)] = _ONE
    coeffs[ix(n)] = Fraction(-1)
    for j in range(n):
        coeffs[ix(j)] += _ONE
    up.extend(eq_rows(coeffs, _ZERO))
    # the freeze flag, once on (or after the subtraction step), stays on
    coeffs = [_ZERO] * w
    coeffs[ia(m)] = _ONE
    coeffs[ia(m + 1)] = _ONE
    coeffs[total + ia(m + 1)] = Fraction(-1)
    up.append(Row(tuple(coeffs), _ZERO))

    partial = PartialInput.of({ix(j): Fraction(s[j]) for j in range(n)})
    loop = SlcpLoop(
        var_names=names,
        precondition=partial_to_precondition(partial, total),
        guard=Polyhedron(total, tuple(guard_rows)),
        update=Polyhedron(w, tuple(up)),
        interpretation=INTEGER,
    )
    f = AffineFunction(tuple(_unit(total, ix(n))), 0)
    return loop, partial, f


# ---------------------------------------------------------------------------
# linear recurrence sequences
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LrsInstance:
    """x' = A x + a iterated from x0; the tracked coordinate's eventual
    positivity is encoded as a ranking-function verification question."""

    matrix: tuple[tuple[Fraction, ...], ...]
    offset: tuple[Fraction, ...]
    x0: tuple[Fraction, ...]
    track: int = 0

    def __post_init__(self):
        mat = tuple(tuple(rat(v) for v in row) for row in self.matrix)
        n = len(mat)
        if any(len(row) != n for row in mat):
            raise InputError("matrix must be square")
        off = tuple(rat(v) for v in self.offset)
        x0 = tuple(rat(v) for v in self.x0)
        if len(off) != n or len(x0) != n:
            raise InputError("offset/initial dimension mismatch")
        if not 0 <= self.track < n:
            raise InputError("tracked coordinate out of range")
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "offset", off)
        object.__setattr__(self, "x0", x0)

    @property
    def dim(self) -> int:
        return len(self.matrix)

    def step(self, x):
        return tuple(
            sum((self.matrix[j][k] * x[k] for k in range(self.dim)), self.offset[j])
            for j in range(self.dim)
        )

    def sequence(self, length: int):
        """Tracked-coordinate values at steps 0..length-1."""
        x = self.x0
        out = []
        for _ in range(length):
            out.append(x[self.track])
            x = self.step(x)
        return out


def reduce_lrs_to_verification(inst: LrsInstance):
    """Add a budget coordinate x_{n+1} with x'_{n+1} = x_{n+1} - x_tracked and
    guard x_{n+1} >= 0; f = x_{n+1} is then to be (dis)proved a ranking
    function.  Returns (loop, partial input with x_{n+1} free, f)."""
    n = inst.dim
    total = n + 1
    names = tuple(f"x{j+1}" for j in range(total))
    guard_rows = (Row(tuple(_unit(total, n, -1)), _ZERO),)
    up = []
    w = 2 * total
    for j in range(n):
        coeffs = [_ZERO] * w
        coeffs[total + j] = _ONE
        for k in range(n):
            if inst.matrix[j][k]:
                coeffs[k] -= inst.matrix[j][k]
        up.extend(eq_rows(coeffs, inst.offset[j]))
    coeffs = [_ZERO] * w
    coeffs[total + n] = _ONE
    coeffs[n] = Fraction(-1)
    coeffs[inst.track] += _ONE
    up.extend(eq_rows(coeffs, _ZERO))
    partial = PartialInput.of({j: inst.x0[j] for j in range(n)})
    loop = SlcpLoop(
        var_names=names,
        precondition=partial_to_precondition(partial, total),
        guard=Polyhedron(total, guard_rows),
        update=Polyhedron(w, tuple(up)),
        interpretation=INTEGER,
    )
    f = AffineFunction(tuple(_unit(total, n)), 0)
    return loop, partial, f


# ---------------------------------------------------------------------------
# file formats
# ---------------------------------------------------------------------------


def parse_net(text: str) -> PetriNet:
    dim: Optional[int] = None
    trans = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("dim"):
            try:
                dim = int(line.split()[1])
            except (IndexError, ValueError):
                raise InputError(f"line {lineno}: expected 'dim n'") from None
            if dim <= 0:
                raise InputError(f"line {lineno}: dimension must be positive")
            continue
        if dim is None:
            raise InputError(f"line {lineno}: 'dim n' must come first")
        if not line.startswith("minus:") or "plus:" not in line:
            raise InputError(f"line {lineno}: expected 'minus: ... plus: ...'")
        minus_part, plus_part = line[len("minus:"):].split("plus:", 1)
        try:
            minus = tuple(int(v) for v in minus_part.split())
            plus = tuple(int(v) for v in plus_part.split())
        except ValueError:
            raise InputError(f"line {lineno}: transition entries must be integers") from None
        if len(minus) != dim or len(plus) != dim:
            raise InputError(f"line {lineno}: expected {dim} entries per vector")
        trans.append((minus, plus))
    if dim is None:
        raise InputError("missing 'dim n' header")
    return PetriNet(dim, tuple(trans))


def emit_net(net: PetriNet) -> str:
    out = [f"dim {net.dim}"]
    for minus, plus in net.transitions:
        out.append(
            "minus: " + " ".join(map(str, minus)) + " plus: " + " ".join(map(str, plus))
        )
    return "\n".join(out) + "\n"


def parse_lrs(text: str) -> LrsInstance:
    dim: Optional[int] = None
    matrix: list[tuple[Fraction, ...]] = []
    offset = None
    init = None
    track = 0
    mode = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, _, rest = line.partition(":")
        key = head.strip().lower()
        if key == "dim" or line.startswith("dim "):
            dim = int(line.split()[1] if not rest else rest)
            mode = None
            continue
        if key == "matrix" and rest.strip() == "":
            mode = "matrix"
            continue
        if key in ("offset", "init", "track"):
            vals = rest.split()
            if key == "track":
                track = int(vals[0]) - 1
            elif key == "offset":
                offset = tuple(rat(v) for v in vals)
            else:
                init = tuple(rat(v) for v in vals)
            mode = None
            continue
        if mode == "matrix":
            matrix.append(tuple(rat(v) for v in line.split()))
            continue
        raise InputError(f"line {lineno}: unexpected content {line!r}")
    if dim is None or offset is None or init is None:
        raise InputError("missing dim/offset/init")
    if len(matrix) != dim:
        raise InputError(f"expected {dim} matrix rows, got {len(matrix)}")
    return LrsInstance(tuple(matrix), offset, init, track)


def emit_lrs(inst: LrsInstance) -> str:
    from .rationals import format_rat

    out = [f"dim {inst.dim}", "matrix:"]
    for row in inst.matrix:
        out.append("  " + " ".join(format_rat(v) for v in row))
    out.append("offset: " + " ".join(format_rat(v) for v in inst.offset))
    out.append("init: " + " ".join(format_rat(v) for v in inst.x0))
    if inst.track != 0:
        out.append(f"track: {inst.track + 1}")
    return "\n".join(out) + "\n"
