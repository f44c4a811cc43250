"""Boolean counter programs: interpreter, exact halting oracle, the
compilation to SLCP loops, and the lockstep-embedding checker.

A program is a list of instructions 1..m over 0/1 variables X_1..X_n
(label m+1 is the implicit stop):

    incr(X_j)   -- 0 -> 1, aborts on 1
    decr(X_j)   -- 1 -> 0, aborts on 0
    if X_j then k1 else k2

The compiled loop simulates the program in lockstep via instruction flags
A_1..A_{m+1}, scratch flags N_i, and branch-choice flags T_k/F_k.  The
optional gadgets add a budget variable Y (and a fuel variable R) so that
halting of the program is reflected in (non-)existence of a supported
ranking function Y.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Union

from .affine import AffineFunction
from .loops import INTEGER, PartialInput, SlcpLoop, is_transition
from .polyhedron import InputError, Polyhedron, Row, eq_rows
from .vas import partial_to_precondition

_ZERO = Fraction(0)
_ONE = Fraction(1)

RANK_Y = "y"
RANK_Y_TERM = "y-term"
GADGETS = (None, RANK_Y, RANK_Y_TERM)

HALTS = "Halts"
LOOPS = "Loops"
ABORTS = "Aborts"


@dataclass(frozen=True)
class Incr:
    var: int  # 1-based


@dataclass(frozen=True)
class Decr:
    var: int


@dataclass(frozen=True)
class Branch:
    var: int
    then_label: int
    else_label: int


Instr = Union[Incr, Decr, Branch]


@dataclass(frozen=True)
class BoolProgram:
    n: int
    instrs: tuple[Instr, ...]

    def __post_init__(self):
        m = len(self.instrs)
        if self.n < 1 or m < 1:
            raise InputError("program needs at least one variable and instruction")
        for instr in self.instrs:
            if not 1 <= instr.var <= self.n:
                raise InputError(f"variable X{instr.var} out of range")
            if isinstance(instr, Branch):
                for lab in (instr.then_label, instr.else_label):
                    if not 1 <= lab <= m + 1:
                        raise InputError(f"branch target {lab} out of range")

    @property
    def m(self) -> int:
        return len(self.instrs)


@dataclass(frozen=True)
class BoolState:
    pc: int                    # 1..m+1
    vals: tuple[int, ...]      # 0/1 vector length n


@dataclass(frozen=True)
class Next:
    state: BoolState


@dataclass(frozen=True)
class Halted:
    pass


@dataclass(frozen=True)
class Aborted:
    pass


def initial_state(prog: BoolProgram) -> BoolState:
    return BoolState(1, (0,) * prog.n)


def bp_step(prog: BoolProgram, state: BoolState):
    if not 1 <= state.pc <= prog.m + 1 or len(state.vals) != prog.n:
        raise InputError("invalid program state")
    if any(v not in (0, 1) for v in state.vals):
        raise InputError("invalid program state")
    if state.pc == prog.m + 1:
        return Halted()
    instr = prog.instrs[state.pc - 1]
    j = instr.var - 1
    if isinstance(instr, Incr):
        if state.vals[j] == 1:
            return Aborted()
        vals = state.vals[:j] + (1,) + state.vals[j + 1 :]
        return Next(BoolState(state.pc + 1, vals))
    if isinstance(instr, Decr):
        if state.vals[j] == 0:
            return Aborted()
        vals = state.vals[:j] + (0,) + state.vals[j + 1 :]
        return Next(BoolState(state.pc + 1, vals))
    target = instr.then_label if state.vals[j] == 1 else instr.else_label
    return Next(BoolState(target, state.vals))


def bp_run(prog: BoolProgram):
    """The full deterministic run from the initial state.

    Returns (verdict, states) where states ends at the halting state, the
    state whose step aborts, or the first repeated state (for Loops)."""
    state = initial_state(prog)
    seen = {state}
    states = [state]
    while True:
        res = bp_step(prog, state)
        if isinstance(res, Halted):
            return HALTS, states
        if isinstance(res, Aborted):
            return ABORTS, states
        state = res.state
        if state in seen:
            return LOOPS, states
        seen.add(state)
        states.append(state)


def bp_halts(prog: BoolProgram, max_vars: int = 20) -> str:
    """Exact halting verdict: Halts | Loops | Aborts."""
    if prog.n > max_vars:
        raise InputError(
            f"state space budget exceeded: {prog.n} variables (cap {max_vars})"
        )
    verdict, _ = bp_run(prog)
    return verdict


# ---------------------------------------------------------------------------
# .bp format
# ---------------------------------------------------------------------------


def parse_bp(text: str) -> BoolProgram:
    instrs: list[Instr] = []
    maxvar = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        try:
            if toks[0] in ("incr", "decr") and len(toks) == 2:
                var = int(toks[1].lstrip("X"))
                instrs.append(Incr(var) if toks[0] == "incr" else Decr(var))
            elif (
                toks[0] == "if"
                and len(toks) == 6
                and toks[2] == "goto"
                and toks[4] == "else"
            ):
                instrs.append(Branch(int(toks[1].lstrip("X")), int(toks[3]), int(toks[5])))
            else:
                raise ValueError
        except ValueError:
            raise InputError(f"line {lineno}: cannot parse instruction {line!r}") from None
        maxvar = max(maxvar, instrs[-1].var)
    if not instrs:
        raise InputError("empty program")
    return BoolProgram(maxvar, tuple(instrs))


def emit_bp(prog: BoolProgram) -> str:
    out = []
    for instr in prog.instrs:
        if isinstance(instr, Incr):
            out.append(f"incr X{instr.var}")
        elif isinstance(instr, Decr):
            out.append(f"decr X{instr.var}")
        else:
            out.append(
                f"if X{instr.var} goto {instr.then_label} else {instr.else_label}"
            )
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# compilation to an SLCP loop
# ---------------------------------------------------------------------------


class _Layout:
    """Variable indices of the compiled loop."""

    def __init__(self, prog: BoolProgram, gadget):
        if gadget not in GADGETS:
            raise InputError(f"unknown gadget {gadget!r}")
        n, m = prog.n, prog.m
        self.prog = prog
        self.gadget = gadget
        self.x = list(range(n))
        self.a = [n + i for i in range(m + 1)]
        self.nn = [n + m + 1 + i for i in range(m + 1)]
        base = n + 2 * (m + 1)
        self.t = {}
        self.f = {}
        names = (
            [f"X{j+1}" for j in range(n)]
            + [f"A{i+1}" for i in range(m + 1)]
            + [f"N{i+1}" for i in range(m + 1)]
        )
        for k, instr in enumerate(prog.instrs, start=1):
            if isinstance(instr, Branch):
                self.t[k] = base
                self.f[k] = base + 1
                names += [f"T{k}", f"F{k}"]
                base += 2
        self.y = None
        self.r = None
        if gadget in (RANK_Y, RANK_Y_TERM):
            self.y = base
            names.append("Y")
            base += 1
        if gadget == RANK_Y_TERM:
            self.r = base
            names.append("R")
            base += 1
        self.total = base
        self.names = tuple(names)


def reduce_bool_to_loop(prog: BoolProgram, gadget=None):
    """Compile the program into an SLCP loop that simulates it in lockstep.

    gadget None: bare simulation; RANK_Y adds Y > 0, Y' = Y-1+N_{m+1};
    RANK_Y_TERM further adds R' = R-1, Y' <= Y+R (the loop then always
    halts).  Returns (loop, partial input, suggested ranking function or
    None)."""
    lay = _Layout(prog, gadget)
    n, m, total = prog.n, prog.m, lay.total
    w = 2 * total

    def unit(idx, value=_ONE, width=None):
        row = [_ZERO] * (width or total)
        row[idx] = value
        return row

    guard: list[Row] = []
    for i in range(m):  # 0 <= A_k <= 1 for k = 1..m
        guard.append(Row(tuple(unit(lay.a[i], Fraction(-1))), _ZERO))
        guard.append(Row(tuple(unit(lay.a[i])), _ONE))
    for j in range(n):  # 0 <= X_j <= 1
        guard.append(Row(tuple(unit(lay.x[j], Fraction(-1))), _ZERO))
        guard.append(Row(tuple(unit(lay.x[j])), _ONE))
    if lay.y is not None:  # Y > 0, integer-tightened
        guard.append(Row(tuple(unit(lay.y, Fraction(-1))), Fraction(-1)))

    up: list[Row] = []
    # X'_j = X_j + sum(incr on j) A_k - sum(decr on j) A_k
    for j in range(n):
        coeffs = [_ZERO] * w
        coeffs[total + lay.x[j]] = _ONE
        coeffs[lay.x[j]] = Fraction(-1)
        for k, instr in enumerate(prog.instrs, start=1):
            if instr.var == j + 1:
                if isinstance(instr, Incr):
                    coeffs[lay.a[k - 1]] -= _ONE
                elif isinstance(instr, Decr):
                    coeffs[lay.a[k - 1]] += _ONE
        up.extend(eq_rows(coeffs, _ZERO))
    # branch-choice flags, against unprimed A_k and X_j
    for k, instr in enumerate(prog.instrs, start=1):
        if not isinstance(instr, Branch):
            continue
        tk, fk = total + lay.t[k], total + lay.f[k]
        ak, xj = lay.a[k - 1], lay.x[instr.var - 1]
        up.append(Row(tuple(unit(tk, Fraction(-1), w)), _ZERO))
        coeffs = unit(tk, _ONE, w)
        coeffs[ak] = Fraction(-1)
        up.append(Row(tuple(coeffs), _ZERO))
        coeffs = unit(tk, _ONE, w)
        coeffs[xj] = Fraction(-1)
        up.append(Row(tuple(coeffs), _ZERO))
        up.append(Row(tuple(unit(fk, Fraction(-1), w)), _ZERO))
        coeffs = unit(fk, _ONE, w)
        coeffs[ak] = Fraction(-1)
        up.append(Row(tuple(coeffs), _ZERO))
        coeffs = unit(fk, _ONE, w)
        coeffs[xj] = _ONE
        up.append(Row(tuple(coeffs), _ONE))  # F'_k <= 1 - X_j
        coeffs = [_ZERO] * w
        coeffs[tk] = Fraction(-1)
        coeffs[fk] = Fraction(-1)
        coeffs[ak] = _ONE
        up.append(Row(tuple(coeffs), _ZERO))  # T'_k + F'_k >= A_k
    # N'_i = base_i + branch adjustments
    for i in range(1, m + 2):
        coeffs = [_ZERO] * w
        coeffs[total + lay.nn[i - 1]] = _ONE
        if i == m + 1:
            coeffs[lay.a[m - 1]] -= _ONE
            coeffs[lay.a[m]] -= _ONE
        elif i >= 2:
            coeffs[lay.a[i - 2]] -= _ONE
        for k, instr in enumerate(prog.instrs, start=1):
            if not isinstance(instr, Branch):
                continue
            if k + 1 == i:
                coeffs[lay.a[k - 1]] += _ONE
            if instr.then_label == i:
                coeffs[total + lay.t[k]] -= _ONE
            if instr.else_label == i:
                coeffs[total + lay.f[k]] -= _ONE
        up.extend(eq_rows(coeffs, _ZERO))
    # A'_i = N'_i
    for i in range(m + 1):
        coeffs = [_ZERO] * w
        coeffs[total + lay.a[i]] = _ONE
        coeffs[total + lay.nn[i]] = Fraction(-1)
        up.extend(eq_rows(coeffs, _ZERO))
    if lay.y is not None:  # Y' = Y - 1 + N_{m+1}   (unprimed N)
        coeffs = [_ZERO] * w
        coeffs[total + lay.y] = _ONE
        coeffs[lay.y] = Fraction(-1)
        coeffs[lay.nn[m]] = Fraction(-1)
        up.extend(eq_rows(coeffs, Fraction(-1)))
    if lay.r is not None:  # R' = R - 1,  Y' <= Y + R
        coeffs = [_ZERO] * w
        coeffs[total + lay.r] = _ONE
        coeffs[lay.r] = Fraction(-1)
        up.extend(eq_rows(coeffs, Fraction(-1)))
        coeffs = [_ZERO] * w
        coeffs[total + lay.y] = _ONE
        coeffs[lay.y] = Fraction(-1)
        coeffs[lay.r] = Fraction(-1)
        up.append(Row(tuple(coeffs), _ZERO))

    assigns = {idx: _ZERO for idx in range(total)}
    if lay.y is not None:
        del assigns[lay.y]
    if lay.r is not None:
        del assigns[lay.r]
    assigns[lay.a[0]] = _ONE
    partial = PartialInput.of(assigns)
    loop = SlcpLoop(
        var_names=lay.names,
        precondition=partial_to_precondition(partial, total),
        guard=Polyhedron(total, tuple(guard)),
        update=Polyhedron(w, tuple(up)),
        interpretation=INTEGER,
    )
    f = None
    if lay.y is not None:
        fc = [_ZERO] * total
        fc[lay.y] = _ONE
        f = AffineFunction(tuple(fc), 0)
    return loop, partial, f


def loop_layout(prog: BoolProgram, gadget=None) -> "_Layout":
    return _Layout(prog, gadget)


# ---------------------------------------------------------------------------
# lockstep embedding
# ---------------------------------------------------------------------------


def embed_state(prog: BoolProgram, state: BoolState, prev: Optional[BoolState],
                gadget=None, y_val=0, r_val=0):
    """The unique loop state that corresponds to a program state inside a
    run; `prev` is the predecessor program state (None at the start).
    Aux flag values are the ones forced on reachable loop states."""
    lay = _Layout(prog, gadget)
    vec = [_ZERO] * lay.total
    for j, v in enumerate(state.vals):
        vec[lay.x[j]] = Fraction(v)
    vec[lay.a[state.pc - 1]] = _ONE
    if prev is not None:
        vec[lay.nn[state.pc - 1]] = _ONE
        for k, instr in enumerate(prog.instrs, start=1):
            if isinstance(instr, Branch) and prev.pc == k:
                if prev.vals[instr.var - 1] == 1:
                    vec[lay.t[k]] = _ONE
                else:
                    vec[lay.f[k]] = _ONE
    if lay.y is not None:
        vec[lay.y] = Fraction(y_val)
    if lay.r is not None:
        vec[lay.r] = Fraction(r_val)
    return tuple(vec)


def embed_aborted(prog: BoolProgram, state: BoolState, prev, gadget=None,
                  y_val=0, r_val=0):
    """The loop state an aborting increment/decrement actually produces
    (the violating variable leaves {0,1}, so the 0/1 guard fails there)."""
    vec = list(embed_state(prog, BoolState(state.pc + 1, state.vals), state,
                           gadget, y_val, r_val))
    lay = _Layout(prog, gadget)
    instr = prog.instrs[state.pc - 1]
    j = instr.var - 1
    vec[lay.x[j]] += _ONE if isinstance(instr, Incr) else Fraction(-1)
    return tuple(vec)


@dataclass
class PropertyReport:
    """Results of the lockstep run: which restated correctness properties
    held on every embedded state/step."""

    steps: int = 0
    transitions_ok: bool = True
    zero_one: bool = True          # all non-budget coordinates in {0,1}
    branch_flags: bool = True      # T'/F' exactly as forced
    single_flag: bool = True       # at most one A_i = 1
    halt_marker: bool = True       # N_{m+1}=1 exactly in post-halt states
    idle_fixpoint: bool = True     # N_{m+1}=1 states idle
    expected_stuck: Optional[bool] = None  # aborting runs: loop stuck as expected
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return (
            self.transitions_ok and self.zero_one and self.branch_flags
            and self.single_flag and self.halt_marker and self.idle_fixpoint
            and self.expected_stuck is not False
        )

    def _fail(self, what, detail):
        setattr(self, what, False)
        self.failures.append((what, detail))


def embedded_run(prog: BoolProgram, gadget=None, idle_steps: int = 3):
    """The full run of the program embedded as loop states.

    Halting runs are extended by `idle_steps` repeats of the final state,
    looping runs by one step past the revisit, and aborting runs end at
    the guard-violating escape state.  Returns (verdict, states, index of
    the first post-halt state or None)."""
    verdict, states = bp_run(prog)
    bool_seq = list(states)
    post_halt_from = None
    if verdict == HALTS:
        post_halt_from = len(bool_seq) - 1
        for _ in range(idle_steps):
            bool_seq.append(bool_seq[-1])
    elif verdict == LOOPS:
        # extend one step to exercise the revisit transition
        res = bp_step(prog, states[-1])
        bool_seq.append(res.state)

    y = r = len(bool_seq) + 2
    embedded = []
    prev = None
    for st in bool_seq:
        embedded.append(embed_state(prog, st, prev, gadget, y, r))
        n_mp1 = _ONE if (prev is not None and st.pc == prog.m + 1) else _ZERO
        y = y - 1 + n_mp1
        r = r - 1
        prev = st

    if verdict == ABORTS:
        aborted = embed_aborted(prog, bool_seq[-1], bool_seq[-2] if len(bool_seq) > 1 else None,
                                gadget, y, r)
        embedded.append(aborted)
    return verdict, embedded, post_halt_from


def lockstep_check(prog: BoolProgram, gadget=None, idle_steps: int = 3) -> PropertyReport:
    """Run the program, embed every state, and assert the restated
    correctness properties on all embedded states and steps."""
    lay = _Layout(prog, gadget)
    loop, _, _ = reduce_bool_to_loop(prog, gadget)
    report = PropertyReport()
    verdict, embedded, post_halt_from = embedded_run(prog, gadget, idle_steps)

    budget = {lay.y, lay.r} - {None}
    for idx, vec in enumerate(embedded):
        is_abort_state = verdict == ABORTS and idx == len(embedded) - 1
        if not is_abort_state:
            bad = [
                c for c in range(lay.total)
                if c not in budget and vec[c] not in (0, 1)
            ]
            if bad:
                report._fail("zero_one", (idx, bad))
            if sum(1 for i in lay.a if vec[i] == 1) > 1:
                report._fail("single_flag", idx)
    for idx in range(len(embedded) - 1):
        x, x2 = embedded[idx], embedded[idx + 1]
        if not is_transition(loop, x, x2):
            report._fail("transitions_ok", idx)
        for k, instr in enumerate(prog.instrs, start=1):
            if not isinstance(instr, Branch):
                continue
            want_t = _ONE if (
                x[lay.a[k - 1]] == 1 and x[lay.x[instr.var - 1]] == 1
            ) else _ZERO
            want_f = _ONE if (
                x[lay.a[k - 1]] == 1 and x[lay.x[instr.var - 1]] == 0
            ) else _ZERO
            if x2[lay.t[k]] != want_t or x2[lay.f[k]] != want_f:
                report._fail("branch_flags", (idx, k))
    # halt marker: N_{m+1}=1 exactly in post-halt embedded states, and those
    # are exactly the states with A_1..A_m all zero (past the initial state)
    for idx, vec in enumerate(embedded):
        if verdict == ABORTS and idx == len(embedded) - 1:
            continue
        post_halt = post_halt_from is not None and idx >= post_halt_from
        marker = vec[lay.nn[prog.m]] == 1
        flags_zero = all(vec[lay.a[i]] == 0 for i in range(prog.m))
        halted_flag = vec[lay.a[prog.m]] == 1
        if marker != post_halt or (flags_zero and halted_flag) != post_halt:
            report._fail("halt_marker", idx)
    # idle property: an N_{m+1}=1 state keeps X/A/N and Y in its successor;
    # from the second such state on, everything but the fuel R is fixed
    # (the first idle step still clears stale branch flags)
    tf = set(lay.t.values()) | set(lay.f.values())
    for idx in range(len(embedded) - 1):
        vec = embedded[idx]
        if vec[lay.nn[prog.m]] != 1:
            continue
        nxt = embedded[idx + 1]
        skip = budget | (tf if idx == post_halt_from else set())
        same = all(
            nxt[c] == vec[c] for c in range(lay.total) if c not in skip
        )
        y_kept = lay.y is None or nxt[lay.y] == vec[lay.y]
        if not (same and y_kept):
            report._fail("idle_fixpoint", idx)
    if verdict == ABORTS:
        stuck = embedded[-1]
        report.expected_stuck = not loop.guard.contains(stuck)
        if not report.expected_stuck:
            report.failures.append(("expected_stuck", stuck))
    report.steps = len(embedded) - 1
    return report
