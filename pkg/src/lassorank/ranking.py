"""Linear ranking functions: verification and synthesis.

An LRF for a transition set T is an affine f with f(x) >= 0 and
f(x) - f(x') >= 1 for every (x, x') in T.  Universal verdicts quantify
over all guard+update transitions; supported verdicts restrict the
sources to an inductive invariant.  A reachable lasso refutes every
candidate at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product

from . import simplex
from .affine import AffineFunction
from .invariants import (
    DownwardClosedSet,
    HullInvariant,
    check_downward,
    check_hull,
    check_polyhedral,
    is_omega,
    kept_successors,
    split_kept_free,
)
from .loops import (
    CYCLE_FOUND,
    PartialInput,
    SlcpLoop,
    explore,
    is_transition,
    successors_bounded,
)
from .polyhedron import InputError, Polyhedron, Row, eq_rows
from .rationals import rat

_ZERO = Fraction(0)
_ONE = Fraction(1)


# ---------------------------------------------------------------------------
# verdicts
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HasLRF:
    f: AffineFunction
    certificates: tuple  # (nonnegativity certificate, decrease certificate)
    note: str = ""


@dataclass(frozen=True)
class NoUniversalLRF:
    counterexample: tuple  # (x, x') violating one of the two inequalities
    note: str = ""


@dataclass(frozen=True)
class VacuouslyYes:
    """No transitions at all, so the given f ranks them all."""


@dataclass(frozen=True)
class NoneExists:
    note: str = ""


@dataclass(frozen=True)
class VacuouslyAny:
    """No transitions at all, so any f is an LRF."""


@dataclass(frozen=True)
class SupportedYes:
    certificates: tuple = ()
    evidence: str = ""
    note: str = ""


@dataclass(frozen=True)
class SupportedNo:
    counterexample: tuple
    note: str = ""


@dataclass(frozen=True)
class InvariantInvalid:
    reason: str
    report: object = None


@dataclass(frozen=True)
class RefutedByRun:
    initial: tuple
    stem: tuple
    cycle: tuple


@dataclass(frozen=True)
class Unknown:
    reason: str = ""


def _note(loop: SlcpLoop) -> str:
    return "rational-certificate" if loop.is_integer else ""


def _targets(f: AffineFunction, n: int):
    """The two entailment targets as (coeffs over (x,x'), bound) rows:
    f.x + f0 >= 0 and f.x - f.x' >= 1 rewritten in <= form."""
    neg = tuple(-c for c in f.coeffs)
    t1 = (neg + (_ZERO,) * n, rat(f.constant))
    t2 = (neg + tuple(f.coeffs), Fraction(-1))
    return t1, t2


def _verify_on(loop: SlcpLoop, f: AffineFunction, premise: Polyhedron):
    n = loop.n
    (c1, b1), (c2, b2) = _targets(f, n)
    r1 = simplex.entails(premise, c1, b1)
    if isinstance(r1, simplex.EmptyPremise):
        return VacuouslyYes()
    if isinstance(r1, simplex.EntailNo):
        p = r1.counterexample
        return NoUniversalLRF((p[:n], p[n:]), note=_note(loop))
    r2 = simplex.entails(premise, c2, b2)
    if isinstance(r2, simplex.EntailNo):
        p = r2.counterexample
        return NoUniversalLRF((p[:n], p[n:]), note=_note(loop))
    return HasLRF(f, (r1.certificate, r2.certificate), note=_note(loop))


def verify_universal(loop: SlcpLoop, f: AffineFunction):
    """Is f an LRF for every guard+update transition?  Complete over the
    rationals; for integer loops a No may carry a rational witness."""
    if f.dim != loop.n:
        raise InputError("candidate dimension mismatch")
    return _verify_on(loop, f, loop.transition_polyhedron())


def synth_universal(loop: SlcpLoop):
    """Find an LRF for all guard+update transitions, or show none exists.

    The two entailments are solved jointly as one LP over (f, f0) and two
    multiplier vectors; the sum of |f_i| is minimized so the output is
    deterministic.  Complete for rational loops; for integer loops
    NoneExists means no rational-certificate LRF.
    """
    trans = loop.transition_polyhedron()
    if isinstance(simplex.lp_feasible(trans), simplex.UnsatCertificate):
        return VacuouslyAny()
    n = loop.n
    q = len(trans.rows)
    # variables: f+ (n), f- (n), f0+ , f0-, lambda (q), mu (q), all >= 0
    fp, fm = 0, n
    f0p, f0m = 2 * n, 2 * n + 1
    lam, mu = 2 * n + 2, 2 * n + 2 + q
    width = 2 * n + 2 + 2 * q

    rows = []
    for v in range(width):
        coeffs = [_ZERO] * width
        coeffs[v] = Fraction(-1)
        rows.append(Row(tuple(coeffs), _ZERO))
    # lambda.M = (-f, 0)  and  mu.M = (-f, f)
    for j in range(2 * n):
        c_l = [_ZERO] * width
        c_m = [_ZERO] * width
        for i, row in enumerate(trans.rows):
            c_l[lam + i] = row.coeffs[j]
            c_m[mu + i] = row.coeffs[j]
        if j < n:
            c_l[fp + j] += _ONE
            c_l[fm + j] -= _ONE
            c_m[fp + j] += _ONE
            c_m[fm + j] -= _ONE
        else:
            c_m[fp + j - n] -= _ONE
            c_m[fm + j - n] += _ONE
        rows.extend(eq_rows(c_l, _ZERO))
        rows.extend(eq_rows(c_m, _ZERO))
    # lambda.m <= f0  and  mu.m <= -1
    c = [_ZERO] * width
    for i, row in enumerate(trans.rows):
        c[lam + i] = row.bound
    c[f0p] = Fraction(-1)
    c[f0m] = _ONE
    rows.append(Row(tuple(c), _ZERO))
    c = [_ZERO] * width
    for i, row in enumerate(trans.rows):
        c[mu + i] = row.bound
    rows.append(Row(tuple(c), Fraction(-1)))

    system = Polyhedron(width, tuple(rows))
    obj = [_ONE] * (2 * n) + [_ZERO] * (width - 2 * n)
    res = simplex.optimize(system, obj, "min")
    if isinstance(res, simplex.Empty):
        if loop.is_integer:
            return NoneExists("no rational-certificate LRF")
        return NoneExists("no affine f exists")
    point = res.point
    coeffs = tuple(point[fp + j] - point[fm + j] for j in range(n))
    f = AffineFunction(coeffs, point[f0p] - point[f0m])
    verdict = verify_universal(loop, f)
    if not isinstance(verdict, HasLRF):
        raise simplex.LPInternalError("synthesized f failed verification")
    return verdict


# ---------------------------------------------------------------------------
# invariant-supported verification
# ---------------------------------------------------------------------------


def _lift_rows(poly: Polyhedron, n: int):
    return tuple(Row(r.coeffs + (_ZERO,) * n, r.bound, r.strict) for r in poly.rows)


def _fix_rows(coords, values, width):
    rows = []
    for j, v in zip(coords, values):
        for sign in (_ONE, Fraction(-1)):
            coeffs = [_ZERO] * width
            coeffs[j] = sign
            rows.append(Row(tuple(coeffs), sign * rat(v)))
    return rows


def _supported_polyhedral(loop, f, inv):
    report = check_polyhedral(loop, inv)
    if not report.ok:
        return InvariantInvalid("invariant is not inductive", report)
    premise = loop.transition_polyhedron().with_rows(_lift_rows(inv, loop.n))
    verdict = _verify_on(loop, f, premise)
    if isinstance(verdict, (HasLRF, VacuouslyYes)):
        certs = getattr(verdict, "certificates", ())
        return SupportedYes(certs, note=_note(loop))
    return SupportedNo(verdict.counterexample, note=verdict.note)


def _supported_downward(loop, f, inv):
    report = check_downward(loop, inv)
    if not report.ok:
        return InvariantInvalid("invariant is not inductive", report)
    n = loop.n
    trans = loop.transition_polyhedron()
    certs = []
    for g in inv.generators:
        rows = []
        for j, gi in enumerate(g):
            coeffs = [_ZERO] * (2 * n)
            coeffs[j] = Fraction(-1)
            rows.append(Row(tuple(coeffs), _ZERO))
            if not is_omega(gi):
                coeffs = [_ZERO] * (2 * n)
                coeffs[j] = _ONE
                rows.append(Row(tuple(coeffs), Fraction(gi)))
        verdict = _verify_on(loop, f, trans.with_rows(rows))
        if isinstance(verdict, NoUniversalLRF):
            return SupportedNo(verdict.counterexample, note=verdict.note)
        if isinstance(verdict, HasLRF):
            certs.extend(verdict.certificates)
    return SupportedYes(tuple(certs), note=_note(loop))


def _integer_counterexample(loop, f, premise, kept, vertex, opt_point):
    """Search an integer transition from a source projecting onto
    `vertex` that violates one of the two LRF inequalities."""
    n = loop.n
    free = [j for j in range(n) if j not in set(kept)]
    pools = []
    for j in free:
        v = opt_point[j]
        pools.append(sorted({math.floor(v), math.ceil(v), 0, 1, 2}))
    for combo in product(*pools) if free else [()]:
        src = [_ZERO] * n
        for k, j in enumerate(kept):
            src[j] = rat(vertex[k])
        for k, j in enumerate(free):
            src[j] = Fraction(combo[k])
        src = tuple(src)
        if not loop.guard.contains(src):
            continue
        box = [
            (min(src[j], 0) - 3, max(src[j], 1) + 3) for j in range(n)
        ]
        for nxt in successors_bounded(loop, src, box):
            if f(src) < 0 or f(src) - f(nxt) < 1:
                return (src, nxt)
    return None


def _supported_hull_fast(loop, f, inv: HullInvariant, split):
    """Vertex-wise check when the loop decomposes along the free
    coordinates and f only involves them: integer sources in the invariant
    project exactly onto the vertices, and for each vertex the two LRF
    inequalities reduce to entailments over the small free subsystem."""
    ff = tuple(f.coeffs[j] for j in split.free)
    width = 2 * len(split.free)
    neg = tuple(-c for c in ff)
    c1, b1 = neg + (_ZERO,) * len(ff), rat(f.constant)
    c2, b2 = neg + ff, Fraction(-1)
    verts = sorted(inv.vertices)
    vmax = max((abs(x) for v in verts for x in v), default=_ZERO)
    mmax = max(
        (abs(r.bound) + sum(abs(c) for c in r.coeffs)
         for r in split.kept_loop.update.rows),
        default=_ZERO,
    )
    radius = (vmax + 1) * (mmax + 1)
    certs = []
    for v in verts:
        if not kept_successors(split, v, radius):
            continue  # kept guard fails or kept subsystem is stuck
        fs = split.free_system(v)
        for coeffs, bound in ((c1, b1), (c2, b2)):
            res = simplex.entails(fs, coeffs, bound) if width else None
            if width == 0 or isinstance(res, simplex.EntailNo):
                p = res.counterexample if width else ()
                seed = [_ZERO] * loop.n
                for k, j in enumerate(split.free):
                    seed[j] = p[k]
                cex = _integer_counterexample(loop, f, None, inv.kept, v, seed)
                if cex is not None:
                    return SupportedNo(cex, note="found by integer enumeration")
                return Unknown(
                    "rational violation without an integer witness at vertex "
                    f"{tuple(map(str, v))}"
                )
            if isinstance(res, simplex.EmptyPremise):
                break  # free subsystem infeasible: no transitions here
            certs.append(res.certificate)
    return SupportedYes(
        tuple(certs),
        evidence="integer-exact vertex enumeration",
        note=_note(loop),
    )


def _supported_hull(loop, f, inv: HullInvariant):
    report = check_hull(loop, inv)
    if not report.ok:
        return InvariantInvalid("invariant is not inductive", report)
    n = loop.n
    split = split_kept_free(loop, inv.free)
    if split is not None and all(f.coeffs[j] == 0 for j in split.kept):
        return _supported_hull_fast(loop, f, inv, split)
    trans = loop.transition_polyhedron()
    # first try the rational route: certificates against the hull rows
    premise = trans.with_rows(_lift_rows(inv.polyhedron(), n))
    verdict = _verify_on(loop, f, premise)
    if isinstance(verdict, (HasLRF, VacuouslyYes)):
        certs = getattr(verdict, "certificates", ())
        return SupportedYes(certs, note=_note(loop))
    # integer-exact fallback: all integer sources in the invariant project
    # exactly onto the vertices, so check each vertex by LP
    kept = inv.kept
    (c1, b1), (c2, b2) = _targets(f, n)
    unknown = None
    for v in sorted(inv.vertices):
        premise_v = trans.with_rows(_fix_rows(kept, v, 2 * n))
        for coeffs, bound in ((c1, b1), (c2, b2)):
            res = simplex.optimize(premise_v, coeffs, "max")
            if isinstance(res, simplex.Empty):
                break
            if isinstance(res, simplex.Bounded) and res.value <= bound:
                continue
            point = res.point if isinstance(res, simplex.Bounded) else None
            if point is not None:
                cex = _integer_counterexample(loop, f, premise_v, kept, v, point)
                if cex is not None:
                    return SupportedNo(cex, note="found by integer enumeration")
            unknown = Unknown(
                "rational violation without an integer witness at vertex "
                f"{tuple(map(str, v))}"
            )
    if unknown is not None:
        return unknown
    return SupportedYes(
        (), evidence="integer-exact vertex enumeration", note=_note(loop)
    )


def verify_supported(loop: SlcpLoop, f: AffineFunction, inv):
    """Is f an LRF for the transitions whose source lies in the invariant?

    The invariant is first validated (initiation + consecution).  Convex
    polyhedra use Farkas entailment; downward-closed sets are checked
    generator-wise; hull invariants of integer loops get an integer-exact
    vertex check when the rational entailment is too coarse.
    """
    if f.dim != loop.n:
        raise InputError("candidate dimension mismatch")
    if isinstance(inv, Polyhedron):
        if inv.dim != loop.n:
            raise InputError("invariant dimension mismatch")
        return _supported_polyhedral(loop, f, inv)
    if isinstance(inv, DownwardClosedSet):
        return _supported_downward(loop, f, inv)
    if isinstance(inv, HullInvariant):
        return _supported_hull(loop, f, inv)
    raise InputError(f"unsupported invariant class {type(inv).__name__}")


# ---------------------------------------------------------------------------
# refutation by reachable lasso
# ---------------------------------------------------------------------------


def refute_by_run(loop: SlcpLoop, s0: PartialInput, box, budget: int,
                  max_instantiations: int = 256):
    """Search for a reachable lasso, which refutes every ranking function
    of any kind.  Free variables of the partial input are instantiated
    over the integer points of their box ranges, in lexicographic order,
    and each instantiation is explored up to the step budget."""
    if not loop.is_integer:
        raise InputError("refutation by run requires an integer loop")
    n = loop.n
    if len(box) != n:
        raise InputError("box dimension mismatch")
    s0.check(n, True)
    assigned = dict(s0.assignments)
    free = [j for j in range(n) if j not in assigned]
    pools = []
    for j in free:
        lo, hi = box[j]
        pools.append(range(math.ceil(rat(lo)), math.floor(rat(hi)) + 1))
    count = 0
    for combo in product(*pools) if free else [()]:
        if count >= max_instantiations:
            break
        count += 1
        state = [_ZERO] * n
        for j, v in assigned.items():
            state[j] = v
        for k, j in enumerate(free):
            state[j] = Fraction(combo[k])
        state = tuple(state)
        if not loop.precondition.contains(state):
            continue
        report = explore(loop, state, box, budget)
        if report.status != CYCLE_FOUND:
            continue
        chain = list(report.stem) + list(report.cycle)
        genuine = all(
            is_transition(loop, chain[i], chain[i + 1])
            for i in range(len(chain) - 1)
        ) and is_transition(loop, report.cycle[-1], report.cycle[0])
        if genuine:
            return RefutedByRun(state, tuple(report.stem), tuple(report.cycle))
    return Unknown("no reachable cycle found within the box and budget")


# ---------------------------------------------------------------------------
# reachable-hull pipeline
# ---------------------------------------------------------------------------


def reachable_hull_invariant(loop: SlcpLoop, state_cap: int = 20000):
    """Exact reachable-set hull for integer loops whose precondition boxes
    all but some budget-like free coordinates.

    The free coordinates are those the precondition does not mention; the
    loop must decompose along them.  Returns a HullInvariant, or None when
    the shape or the state cap does not allow the computation.
    """
    from .invariants import _unit_row_bounds, hull_invariant_of

    if not loop.is_integer:
        return None
    n = loop.n
    touched = set()
    for row in loop.precondition.rows:
        touched.update(j for j, c in enumerate(row.coeffs) if c != 0)
    free = tuple(j for j in range(n) if j not in touched)
    split = split_kept_free(loop, free)
    if split is None:
        return None
    kept = split.kept
    kept_pre = Polyhedron(
        len(kept),
        tuple(
            Row(tuple(r.coeffs[j] for j in kept), r.bound, r.strict)
            for r in loop.precondition.rows
        ),
    )
    box = _unit_row_bounds(kept_pre.rows, len(kept))
    if box is None:
        return None
    count = 1
    for a, b in box:
        count *= max(b - a + 1, 0)
    if count > state_cap:
        return None
    from .hull import integer_points_in_box

    frontier = list(integer_points_in_box(kept_pre, box))
    seen = set(frontier)
    vmax = max((abs(x) for v in seen for x in v), default=_ZERO)
    mmax = max(
        (abs(r.bound) + sum(abs(c) for c in r.coeffs)
         for r in split.kept_loop.update.rows),
        default=_ZERO,
    )
    radius = (vmax + 1) * (mmax + 1) * (len(kept) + 1)
    while frontier:
        v = frontier.pop()
        succs = kept_successors(split, v, radius)
        for s in succs or ():
            if s not in seen:
                if len(seen) >= state_cap:
                    return None
                seen.add(s)
                frontier.append(s)
    states = []
    for v in sorted(seen):
        full = [_ZERO] * n
        for k, j in enumerate(kept):
            full[j] = v[k]
        states.append(tuple(full))
    return hull_invariant_of(states, n, free=free)
