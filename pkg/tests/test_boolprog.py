import random
from pathlib import Path

import pytest

from lassorank.boolprog import (
    ABORTS,
    HALTS,
    LOOPS,
    RANK_Y,
    RANK_Y_TERM,
    BoolProgram,
    Branch,
    Decr,
    Incr,
    bp_halts,
    bp_run,
    emit_bp,
    embedded_run,
    initial_state,
    lockstep_check,
    loop_layout,
    parse_bp,
    reduce_bool_to_loop,
)
from lassorank.loops import is_initial, is_transition
from lassorank.polyhedron import InputError

CORPUS = Path(__file__).resolve().parent.parent / "corpus"


def load(name):
    return parse_bp((CORPUS / name).read_text())


def random_program(rng, max_vars=3, max_instrs=5):
    n = rng.randint(1, max_vars)
    m = rng.randint(1, max_instrs)
    instrs = []
    for _ in range(m):
        kind = rng.randint(0, 2)
        var = rng.randint(1, n)
        if kind == 0:
            instrs.append(Incr(var))
        elif kind == 1:
            instrs.append(Decr(var))
        else:
            instrs.append(Branch(var, rng.randint(1, m + 1), rng.randint(1, m + 1)))
    return BoolProgram(n, tuple(instrs))


def test_interpreter_verdicts_on_corpus():
    assert bp_halts(load("halts_simple.bp")) == HALTS
    assert bp_halts(load("loops_forever.bp")) == LOOPS
    assert bp_halts(load("aborts_double_incr.bp")) == ABORTS
    assert bp_halts(load("toggle.bp")) == HALTS


def test_run_trace_of_toggle():
    prog = load("toggle.bp")
    verdict, states = bp_run(prog)
    assert verdict == HALTS
    assert states[0].pc == 1 and states[-1].pc == len(prog.instrs) + 1
    # incr, branch (taken), decr, branch (not taken) -> 5 states
    assert [s.pc for s in states] == [1, 2, 3, 4, 5]
    assert states[-1].vals == (0,)


def test_parse_validates_targets():
    with pytest.raises(InputError):
        parse_bp("if X1 goto 9 else 1\n")  # target beyond m+1
    with pytest.raises(InputError):
        parse_bp("incr X2\n")  # program only mentions X2: allowed (n = 2)
        parse_bp("incr X0\n")


def test_emit_parse_round_trip():
    rng = random.Random(5)
    for _ in range(30):
        prog = random_program(rng)
        text = emit_bp(prog)
        # variable count is inferred from the highest index mentioned, so
        # compare via a second emission
        assert emit_bp(parse_bp(text)) == text


def test_reduction_dimensions_and_precondition():
    prog = load("toggle.bp")
    m = len(prog.instrs)
    loop, partial, f = reduce_bool_to_loop(prog, RANK_Y)
    lay = loop_layout(prog, RANK_Y)
    # X's, A_1..A_{m+1}, N_1..N_{m+1}, one T/F pair per branch, Y
    branches = sum(isinstance(i, Branch) for i in prog.instrs)
    assert loop.n == prog.n + 2 * (m + 1) + 2 * branches + 1
    assert f.coeffs[lay.y] == 1
    start = partial.instantiate(loop.n, free_value=5)
    assert is_initial(loop, start)
    assert start[lay.a[0]] == 1 and all(start[lay.a[k]] == 0 for k in range(1, m + 1))


def test_embedded_run_steps_are_loop_transitions():
    rng = random.Random(9)
    for gadget in (None, RANK_Y, RANK_Y_TERM):
        for _ in range(25):
            prog = random_program(rng)
            loop, partial, _ = reduce_bool_to_loop(prog, gadget)
            verdict, emb, post = embedded_run(prog, gadget)
            assert partial.matches(emb[0]) or is_initial(loop, emb[0])
            for a, b in zip(emb, emb[1:]):
                assert is_transition(loop, a, b), (gadget, emit_bp(prog))


def test_lockstep_check_all_gadgets_small_sample():
    rng = random.Random(3)
    for _ in range(40):
        prog = random_program(rng)
        for gadget in (None, RANK_Y, RANK_Y_TERM):
            report = lockstep_check(prog, gadget)
            assert report.ok, (gadget, emit_bp(prog), report.failures)


def test_abort_state_fails_guard():
    prog = load("aborts_double_incr.bp")
    loop, partial, _ = reduce_bool_to_loop(prog, RANK_Y)
    verdict, emb, _ = embedded_run(prog, RANK_Y)
    assert verdict == ABORTS
    # the final embedded state has an out-of-range X and no loop successor
    assert not loop.guard.contains(emb[-1])
