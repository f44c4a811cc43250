from fractions import Fraction
from pathlib import Path

import pytest

from lassorank.loops import (
    BUDGET_EXCEEDED,
    CYCLE_FOUND,
    HALTED,
    PartialInput,
    explore,
    emit_loop,
    is_initial,
    is_transition,
    parse_loop,
    successors_bounded,
)
from lassorank.polyhedron import InputError

CORPUS = Path(__file__).resolve().parent.parent / "corpus"


def load(name):
    return parse_loop((CORPUS / name).read_text())


def test_parse_emit_round_trip_all_corpus_loops():
    for path in sorted(CORPUS.glob("*.slcp")):
        loop = parse_loop(path.read_text())
        text = emit_loop(loop)
        again = parse_loop(text)
        assert emit_loop(again) == text


def test_is_transition_integer_mode():
    loop = load("count_down.slcp")
    one = (Fraction(3),)
    assert is_transition(loop, one, (Fraction(2),))
    assert not is_transition(loop, one, (Fraction(3),))
    assert not is_transition(loop, (Fraction(-1),), (Fraction(-2),))  # guard fails


def test_is_transition_rejects_fractional_states_in_integer_mode():
    loop = load("count_down.slcp")
    assert not is_transition(loop, (Fraction(1, 2),), (Fraction(-1, 2),))


def test_successors_bounded_enumerates_exactly():
    loop = load("nondet_down.slcp")  # x' <= x - 1
    succ = successors_bounded(loop, (Fraction(3),), [(-2, 5)])
    assert succ == [(Fraction(v),) for v in range(-2, 3)]


def test_explore_halting_and_cycling():
    down = load("count_down.slcp")
    rep = explore(down, (Fraction(3),), [(-1, 5)], 50)
    assert rep.status == HALTED and rep.cycle is None

    stall = load("stall.slcp")
    rep = explore(stall, (Fraction(2),), [(0, 5)], 50)
    assert rep.status == CYCLE_FOUND
    assert rep.cycle == ((Fraction(2),),)
    # the stem ends one transition before the cycle entry point
    chain = (rep.stem or ()) + rep.cycle
    for a, b in zip(chain, chain[1:]):
        assert is_transition(stall, a, b)
    assert is_transition(stall, rep.cycle[-1], rep.cycle[0])


def test_explore_budget():
    loop = load("count_up.slcp")
    rep = explore(loop, (Fraction(0),), [(0, 10**6)], 5)
    assert rep.status == BUDGET_EXCEEDED


def test_partial_input_instantiate_and_check():
    partial = PartialInput.of({0: Fraction(1)})
    state = partial.instantiate(3, free_value=Fraction(5))
    assert state == (Fraction(1), Fraction(5), Fraction(5))
    assert partial.matches(state)
    assert not partial.matches((Fraction(2), Fraction(5), Fraction(5)))


def test_is_initial_uses_precondition():
    loop = load("precond_down.slcp")  # pre: x = 3, y = 0
    assert is_initial(loop, (Fraction(3), Fraction(0)))
    assert not is_initial(loop, (Fraction(2), Fraction(0)))


def test_parse_errors():
    with pytest.raises(InputError):
        parse_loop("guard:\n x >= 0\n")  # missing vars header
    with pytest.raises(InputError):
        parse_loop("vars: x\ninterp: int\nguard:\n  y >= 0\nupdate:\n  x' = x\n")
