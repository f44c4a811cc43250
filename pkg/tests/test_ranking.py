import itertools
import random
from fractions import Fraction
from pathlib import Path

from lassorank import ranking
from lassorank.affine import AffineFunction, parse_affine
from lassorank.invariants import hull_invariant_of
from lassorank.loops import PartialInput, parse_loop, successors_bounded
from lassorank.polyhedron import parse_poly

CORPUS = Path(__file__).resolve().parent.parent / "corpus"


def load(name):
    return parse_loop((CORPUS / name).read_text())


def enumerate_transitions(loop, lo=-3, hi=3):
    """All integer transitions of the loop inside the [lo, hi] box."""
    out = []
    for src in itertools.product(range(lo, hi + 1), repeat=loop.n):
        state = tuple(Fraction(v) for v in src)
        if not loop.guard.contains(state):
            continue
        for dst in successors_bounded(loop, state, [(lo, hi)] * loop.n):
            out.append((state, dst))
    return out


def check_on_box(loop, f):
    for x, x2 in enumerate_transitions(loop):
        assert f(x) >= 0, (x, x2)
        assert f(x) - f(x2) >= 1, (x, x2)


def test_verify_universal_examples():
    down = load("count_down.slcp")
    fx = parse_affine("x:1", down.var_names)
    verdict = ranking.verify_universal(down, fx)
    assert isinstance(verdict, ranking.HasLRF)
    for cert in verdict.certificates:
        assert all(m >= 0 for m in cert.multipliers)

    stall = load("stall.slcp")
    verdict = ranking.verify_universal(stall, parse_affine("x:1", stall.var_names))
    assert isinstance(verdict, ranking.NoUniversalLRF)
    x, x2 = verdict.counterexample
    assert x == x2  # identity step: decrease is 0

    xy = load("xy_transfer.slcp")
    verdict = ranking.verify_universal(xy, parse_affine("y:1", xy.var_names))
    assert isinstance(verdict, ranking.HasLRF)


def test_synth_matches_catalog_and_rechecks_on_box():
    expected = {
        "count_down.slcp": ranking.HasLRF,
        "count_up.slcp": ranking.NoneExists,
        "stall.slcp": ranking.NoneExists,
        "xy_transfer.slcp": ranking.HasLRF,
        "halving.slcp": ranking.HasLRF,
        "strict_drop_int.slcp": ranking.HasLRF,
        "nondet_down.slcp": ranking.HasLRF,
        "nondet_stall.slcp": ranking.NoneExists,
        "unguarded_transfer.slcp": ranking.NoneExists,
        "infeasible_guard.slcp": ranking.VacuouslyAny,
        "free_update.slcp": ranking.NoneExists,
        "bounded_box.slcp": ranking.NoneExists,
        "precond_down.slcp": ranking.HasLRF,
        "two_phase.slcp": ranking.HasLRF,
    }
    for name, cls in expected.items():
        loop = load(name)
        verdict = ranking.synth_universal(loop)
        assert isinstance(verdict, cls), (name, verdict)
        if isinstance(verdict, ranking.HasLRF):
            if loop.interpretation == "int":
                check_on_box(loop, verdict.f)
            recheck = ranking.verify_universal(loop, verdict.f)
            assert isinstance(recheck, ranking.HasLRF)


def test_synth_xy_transfer_zero_x_coefficient():
    loop = load("xy_transfer.slcp")
    verdict = ranking.synth_universal(loop)
    assert isinstance(verdict, ranking.HasLRF)
    x_idx = loop.var_names.index("x")
    y_idx = loop.var_names.index("y")
    assert verdict.f.coeffs[x_idx] == 0
    assert verdict.f.coeffs[y_idx] >= 1


def test_synth_integer_note():
    verdict = ranking.synth_universal(load("count_down.slcp"))
    assert verdict.note == "rational-certificate"
    verdict = ranking.synth_universal(load("halving.slcp"))
    assert verdict.note == ""


def test_synth_is_deterministic():
    loop = load("two_phase.slcp")
    a = ranking.synth_universal(loop)
    b = ranking.synth_universal(loop)
    assert a.f == b.f


def brute_force_lrf(loop, entries=(-2, -1, 0, 1, 2), denoms=(1, 2)):
    """Sound-only screen: try small coefficient vectors exhaustively."""
    transitions = enumerate_transitions(loop, -2, 2)
    if not transitions:
        return None
    grid = sorted({Fraction(e, d) for e in entries for d in denoms})
    consts = sorted({Fraction(e, d) for e in (-2, -1, 0, 1, 2) for d in (1, 2)})
    for coeffs in itertools.product(grid, repeat=loop.n):
        for c in consts:
            f = AffineFunction(tuple(coeffs), c)
            if all(f(x) >= 0 and f(x) - f(x2) >= 1 for x, x2 in transitions):
                return f
    return None


def test_noneexists_never_contradicted_by_brute_force():
    # Box-bounded loops: a brute-force Found with NoneExists would be a bug.
    rng = random.Random(17)
    hard_failures = []
    for _ in range(25):
        n = rng.randint(1, 2)
        names = ["x", "y"][:n]
        lines = [f"vars: {' '.join(names)}", "interp: int", "guard:"]
        for nm in names:
            lines += [f"  {nm} >= -2", f"  {nm} <= 2"]
        lines.append("update:")
        for nm in names:
            src = rng.choice(names)
            delta = rng.randint(-1, 1)
            op = rng.choice(["=", "<="])
            sign = "+" if delta >= 0 else "-"
            lines.append(f"  {nm}' {op} {src} {sign} {abs(delta)}")
            lines.append(f"  {nm}' >= -2")
        loop = parse_loop("\n".join(lines) + "\n")
        verdict = ranking.synth_universal(loop)
        if isinstance(verdict, ranking.NoneExists):
            if brute_force_lrf(loop) is not None:
                hard_failures.append(loop)
        elif isinstance(verdict, ranking.HasLRF):
            check_on_box(loop, verdict.f)
    assert not hard_failures


def test_verify_supported_polyhedral():
    loop = load("precond_down.slcp")
    inv, _ = parse_poly("vars: x y\nx + y = 3\nx <= 3\n")
    f = parse_affine("x:1", loop.var_names)
    verdict = ranking.verify_supported(loop, f, inv)
    assert isinstance(verdict, ranking.SupportedYes)


def test_verify_supported_invalid_invariant():
    loop = load("precond_down.slcp")
    inv, _ = parse_poly("vars: x y\nx <= 0\n")  # misses the initial state
    f = parse_affine("x:1", loop.var_names)
    verdict = ranking.verify_supported(loop, f, inv)
    assert isinstance(verdict, ranking.InvariantInvalid)


def test_verify_supported_downward():
    from lassorank.vas import PetriNet, reduce_vas_positivity
    from lassorank.invariants import karp_miller

    # token never reaches place 2: Y is a supported LRF
    net = PetriNet(2, (((0, 1), (0, 1)),))
    loop, partial, f = reduce_vas_positivity(net, (1, 0))
    dset = karp_miller(net, (1, 0))
    verdict = ranking.verify_supported(loop, f, dset)
    assert isinstance(verdict, ranking.SupportedYes), verdict


def test_refute_by_run_examples():
    stall = load("stall.slcp")
    verdict = ranking.refute_by_run(
        stall, PartialInput.of({0: 0}), [(0, 3)], budget=20
    )
    assert isinstance(verdict, ranking.RefutedByRun)
    assert verdict.cycle == ((Fraction(0),),)

    down = load("count_down.slcp")
    verdict = ranking.refute_by_run(
        down, PartialInput.of({0: 5}), [(-1, 6)], budget=30
    )
    assert isinstance(verdict, ranking.Unknown)


def test_refuted_loop_rejects_all_candidates():
    # mutual consistency: a reachable lasso kills every tried f
    stall = load("stall.slcp")
    refute = ranking.refute_by_run(stall, PartialInput.of({0: 0}), [(0, 3)], budget=20)
    assert isinstance(refute, ranking.RefutedByRun)
    for coeff in (-2, -1, 0, 1, 2):
        f = AffineFunction((Fraction(coeff),), Fraction(0))
        assert not isinstance(ranking.verify_universal(stall, f), ranking.HasLRF)
    inv = hull_invariant_of([(Fraction(v),) for v in range(4)], 1, free=())
    pinned = parse_loop(
        "vars: x\ninterp: int\npre:\n  x = 0\nguard:\n  x >= 0\n  x <= 3\n"
        "update:\n  x' = x\n"
    )
    verdict = ranking.verify_supported(pinned, AffineFunction((Fraction(1),), Fraction(0)), inv)
    assert not isinstance(verdict, ranking.SupportedYes)
