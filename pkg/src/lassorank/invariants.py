"""Inductive invariants: convex polyhedra and downward-closed sets over
the naturals, their validity checks (initiation + consecution), and two
constructors — convex hulls of finite reachable sets and Karp-Miller
coverability sets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Optional

from . import simplex
from .hull import hull_of_states, integer_points_in_box
from .loops import SlcpLoop, successors_bounded
from .polyhedron import InputError, Polyhedron, Row
from .rationals import rat
from .vas import PetriNet, recognize_positivity_loop

_ZERO = Fraction(0)


# ---------------------------------------------------------------------------
# omega arithmetic
# ---------------------------------------------------------------------------


class _Omega:
    """The top element of N_omega; a single shared instance `OMEGA`."""

    __slots__ = ()

    def __repr__(self):
        return "w"


OMEGA = _Omega()


def is_omega(v) -> bool:
    return v is OMEGA


def om_le(a, b) -> bool:
    if b is OMEGA:
        return True
    if a is OMEGA:
        return False
    return a <= b


def om_add(a, b):
    if a is OMEGA or b is OMEGA:
        return OMEGA
    return a + b


def om_sub(a, k):
    """a - k with omega absorbing; k must be finite."""
    if k is OMEGA:
        raise InputError("omega - omega is undefined")
    if a is OMEGA:
        return OMEGA
    return a - k


def _vec_le(x, y) -> bool:
    return all(om_le(a, b) for a, b in zip(x, y))


# ---------------------------------------------------------------------------
# downward-closed sets
# ---------------------------------------------------------------------------


def _antichain(gens):
    out = []
    for g in gens:
        if any(_vec_le(g, h) and g != h for h in gens):
            continue
        if g not in out:
            out.append(g)
    out.sort(key=lambda g: tuple((1, 0) if v is OMEGA else (0, v) for v in g))
    return tuple(out)


@dataclass(frozen=True)
class DownwardClosedSet:
    """Downward closure of finitely many generators in N_omega^dim."""

    dim: int
    generators: tuple[tuple, ...]

    def __post_init__(self):
        gens = []
        for g in self.generators:
            if len(g) != self.dim:
                raise InputError("generator dimension mismatch")
            fixed = []
            for v in g:
                if v is OMEGA:
                    fixed.append(OMEGA)
                else:
                    iv = int(v)
                    if iv != v or iv < 0:
                        raise InputError("generator entries must be naturals or w")
                    fixed.append(iv)
            gens.append(tuple(fixed))
        object.__setattr__(self, "generators", _antichain(gens))

    def contains(self, x) -> bool:
        point = tuple(rat(v) for v in x)
        if len(point) != self.dim:
            raise InputError("point dimension mismatch")
        if any(v < 0 or v.denominator != 1 for v in point):
            return False
        return any(_vec_le(point, g) for g in self.generators)


def parse_dcs(text: str) -> DownwardClosedSet:
    gens = []
    dim = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        entries = []
        for tok in line.split():
            if tok == "w":
                entries.append(OMEGA)
            else:
                try:
                    entries.append(int(tok))
                except ValueError:
                    raise InputError(f"line {lineno}: bad entry {tok!r}") from None
        if dim is None:
            dim = len(entries)
        elif len(entries) != dim:
            raise InputError(f"line {lineno}: expected {dim} entries")
        gens.append(tuple(entries))
    if dim is None:
        raise InputError("empty downward-closed set file")
    return DownwardClosedSet(dim, tuple(gens))


def emit_dcs(d: DownwardClosedSet) -> str:
    lines = [
        " ".join("w" if v is OMEGA else str(v) for v in g) for g in d.generators
    ]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# validity reports
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InvariantReport:
    initiation: bool
    consecution: bool
    initiation_witness: Optional[tuple] = None
    consecution_witness: Optional[tuple] = None  # (x, x') escaping pair
    note: str = ""

    @property
    def ok(self) -> bool:
        return self.initiation and self.consecution


def _lift_unprimed(poly: Polyhedron, n: int) -> tuple[Row, ...]:
    return tuple(
        Row(r.coeffs + (_ZERO,) * n, r.bound, r.strict) for r in poly.rows
    )


def check_polyhedral(loop: SlcpLoop, inv: Polyhedron) -> InvariantReport:
    """Initiation and consecution by rational entailment (complete for
    rational loops, sound for integer loops)."""
    n = loop.n
    if inv.dim != n:
        raise InputError("invariant dimension mismatch")
    if inv.has_strict:
        raise InputError("strict rows are not supported in invariants")
    init_ok, init_wit = True, None
    pre = loop.precondition
    for row in inv.rows:
        res = simplex.entails(pre, row.coeffs, row.bound)
        if isinstance(res, simplex.EntailNo):
            init_ok, init_wit = False, res.counterexample
            break
        if isinstance(res, simplex.EmptyPremise):
            break  # no initial states at all
    cons_ok, cons_wit = True, None
    premise = loop.transition_polyhedron().with_rows(_lift_unprimed(inv, n))
    for row in inv.rows:
        primed = (_ZERO,) * n + row.coeffs
        res = simplex.entails(premise, primed, row.bound)
        if isinstance(res, simplex.EntailNo):
            p = res.counterexample
            cons_ok, cons_wit = False, (p[:n], p[n:])
            break
        if isinstance(res, simplex.EmptyPremise):
            break
    return InvariantReport(init_ok, cons_ok, init_wit, cons_wit)


def _precondition_corner(loop: SlcpLoop, coords):
    """Componentwise supremum of the initial states over `coords`
    (OMEGA where unbounded); None when there are no initial states."""
    corner = []
    for j in coords:
        obj = [_ZERO] * loop.n
        obj[j] = Fraction(1)
        res = simplex.optimize(loop.precondition, obj, "max")
        if isinstance(res, simplex.Empty):
            return None
        if isinstance(res, simplex.Unbounded):
            corner.append(OMEGA)
        else:
            corner.append(res.value)
    return tuple(corner)


def check_downward(loop: SlcpLoop, dset: DownwardClosedSet) -> InvariantReport:
    """Validity of a downward-closed invariant for a loop over the naturals.

    Two supported shapes: loops recognized as positivity-reduction output
    (the invariant then ranges over the X coordinates and the check is
    generator-wise on the reconstructed net), and loops whose variables are
    all bounded by the guard (finite enumeration fallback).
    """
    net = recognize_positivity_loop(loop)
    if net is not None:
        if dset.dim != net.dim:
            raise InputError(
                "invariant must range over the net coordinates of this loop"
            )
        corner = _precondition_corner(loop, range(net.dim))
        init_ok, init_wit = True, None
        if corner is not None and not any(
            _vec_le(corner, g) for g in dset.generators
        ):
            init_ok, init_wit = False, corner
        cons_ok, cons_wit = True, None
        for g in dset.generators:
            for k, (minus, plus) in enumerate(net.transitions):
                if not all(om_le(m, gi) for m, gi in zip(minus, g)):
                    continue
                succ = tuple(
                    om_add(om_sub(gi, m), p) for gi, m, p in zip(g, minus, plus)
                )
                if not any(_vec_le(succ, h) for h in dset.generators):
                    cons_ok, cons_wit = False, (g, succ)
                    break
            if not cons_ok:
                break
        return InvariantReport(init_ok, cons_ok, init_wit, cons_wit)
    return _check_downward_boxed(loop, dset)


def _guard_box(loop: SlcpLoop):
    box = []
    for j in range(loop.n):
        obj = [_ZERO] * loop.n
        obj[j] = Fraction(1)
        hi = simplex.optimize(loop.guard, obj, "max")
        if not isinstance(hi, simplex.Bounded):
            raise InputError(
                f"unsupported loop form: variable {loop.var_names[j]} is not "
                "bounded by the guard and the loop is not in reduced shape"
            )
        box.append((0, int(hi.value.__floor__())))
    return box


def _check_downward_boxed(loop: SlcpLoop, dset: DownwardClosedSet) -> InvariantReport:
    if dset.dim != loop.n:
        raise InputError("invariant dimension mismatch")
    if not loop.is_integer:
        raise InputError("downward-closed invariants apply to integer loops")
    box = _guard_box(loop)
    volume = 1
    for a, b in box:
        volume *= b - a + 1
    if volume > 10**5:
        raise InputError("guard box too large for exhaustive checking")
    corner = _precondition_corner(loop, range(loop.n))
    init_ok, init_wit = True, None
    if corner is not None and not any(_vec_le(corner, g) for g in dset.generators):
        init_ok, init_wit = False, corner
    # sound successor box: componentwise maxima of x' over guard+update
    trans = loop.transition_polyhedron()
    succ_box = []
    for j in range(loop.n):
        obj = [_ZERO] * (2 * loop.n)
        obj[loop.n + j] = Fraction(1)
        hi = simplex.optimize(trans, obj, "max")
        if isinstance(hi, simplex.Empty):
            succ_box = None
            break
        if isinstance(hi, simplex.Unbounded):
            raise InputError("unsupported loop form: unbounded successors")
        succ_box.append((0, max(0, int(hi.value.__floor__()))))
    cons_ok, cons_wit = True, None
    if succ_box is not None:
        guard_poly = loop.guard
        from itertools import product

        for cand in product(*(range(a, b + 1) for a, b in box)):
            point = tuple(Fraction(v) for v in cand)
            if not guard_poly.contains(point) or not dset.contains(point):
                continue
            for succ in successors_bounded(loop, point, succ_box):
                if not dset.contains(succ):
                    cons_ok, cons_wit = False, (point, succ)
                    break
            if not cons_ok:
                break
    return InvariantReport(init_ok, cons_ok, init_wit, cons_wit)


# ---------------------------------------------------------------------------
# Karp-Miller coverability sets
# ---------------------------------------------------------------------------


def karp_miller(net: PetriNet, s0, node_cap: int = 10**6) -> DownwardClosedSet:
    """Coverability set of the net from s0, as an antichain of generators
    over N_omega.  Terminates by Dickson's lemma; node_cap is a safety net.
    """
    start = tuple(int(v) for v in s0)
    if len(start) != net.dim or any(v < 0 for v in start):
        raise InputError("initial state must be a nonnegative integer vector")
    labels = {start}
    # stack of (label, ancestor chain)
    stack = [(start, (start,))]
    count = 1
    while stack:
        label, chain = stack.pop()
        for minus, plus in net.transitions:
            if not all(om_le(m, v) for m, v in zip(minus, label)):
                continue
            succ = tuple(
                om_add(om_sub(v, m), p) for v, m, p in zip(label, minus, plus)
            )
            for anc in chain:
                if _vec_le(anc, succ) and anc != succ:
                    succ = tuple(
                        OMEGA if not om_le(s, a) else s for s, a in zip(succ, anc)
                    )
            if succ in labels:
                continue
            labels.add(succ)
            count += 1
            if count > node_cap:
                raise InputError("Karp-Miller node budget exceeded")
            stack.append((succ, chain + (succ,)))
    return DownwardClosedSet(net.dim, tuple(labels))


def km_coverable(dset: DownwardClosedSet, target) -> bool:
    """Is some state >= target coverable, per the coverability set?"""
    t = tuple(int(v) for v in target)
    return any(all(om_le(ti, gi) for ti, gi in zip(t, g)) for g in dset.generators)


# ---------------------------------------------------------------------------
# hull invariants for finite-state loops with free budget coordinates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HullInvariant:
    """Convex hull of a finite set of integer states, with some coordinates
    (budget counters like Y) left free.  `vertices` are projections to the
    non-free coordinates and are closed under taking the integer points of
    their own hull, so integer membership is exactly vertex membership."""

    dim: int
    free: tuple[int, ...]
    vertices: frozenset

    @property
    def kept(self) -> tuple[int, ...]:
        free = set(self.free)
        return tuple(j for j in range(self.dim) if j not in free)

    def project(self, state) -> tuple:
        return tuple(rat(state[j]) for j in self.kept)

    def contains_state(self, state) -> bool:
        return self.project(state) in self.vertices

    def polyhedron(self) -> Polyhedron:
        """H-representation over the full dimension (free coords untouched)."""
        kept = self.kept
        lifted = []
        poly = hull_of_states(sorted(self.vertices))
        for row in poly.rows:
            coeffs = [_ZERO] * self.dim
            for k, j in enumerate(kept):
                coeffs[j] = row.coeffs[k]
            lifted.append(Row(tuple(coeffs), row.bound, row.strict))
        return Polyhedron(self.dim, tuple(lifted))


def hull_invariant_of(states, dim: int, free=()) -> HullInvariant:
    """Build a HullInvariant from full-dimension states, saturating the
    vertex set with any extra integer points of its own convex hull."""
    free = tuple(sorted(set(free)))
    freeset = set(free)
    kept = [j for j in range(dim) if j not in freeset]
    verts = {tuple(rat(s[j]) for j in kept) for s in states}
    for _ in range(dim + 2):
        if not verts:
            break
        poly = hull_of_states(sorted(verts))
        lo = [min(v[k] for v in verts) for k in range(len(kept))]
        hi = [max(v[k] for v in verts) for k in range(len(kept))]
        pts = set(integer_points_in_box(poly, list(zip(lo, hi))))
        if pts == verts:
            break
        verts = pts
    return HullInvariant(dim, free, frozenset(verts))


def _fix_rows(coords, values, width):
    rows = []
    for j, v in zip(coords, values):
        coeffs = [_ZERO] * width
        coeffs[j] = Fraction(1)
        rows.append(Row(tuple(coeffs), rat(v)))
        coeffs = [_ZERO] * width
        coeffs[j] = Fraction(-1)
        rows.append(Row(tuple(coeffs), -rat(v)))
    return rows


def check_hull(loop: SlcpLoop, inv: HullInvariant) -> InvariantReport:
    """Validity of a hull invariant for an integer loop.

    Initiation requires every integer initial state to project onto a
    vertex.  Consecution requires every integer successor of a source
    projecting onto a vertex to project onto a vertex again.  When the
    loop decomposes along the free coordinates this is checked by direct
    successor enumeration on the kept subsystem; otherwise by LP.
    """
    n = loop.n
    if inv.dim != n:
        raise InputError("invariant dimension mismatch")
    if not loop.is_integer:
        raise InputError("hull invariants apply to integer loops")
    fast = _check_hull_fast(loop, inv)
    if fast is not None:
        return fast
    return _check_hull_lp(loop, inv)


def _unit_row_bounds(rows, dim):
    """Per-coordinate inclusive integer bounds implied by single-variable
    rows; None when some coordinate is not bounded both ways."""
    lo = [None] * dim
    hi = [None] * dim
    for row in rows:
        sup = [j for j, c in enumerate(row.coeffs) if c != 0]
        if len(sup) != 1:
            continue
        j = sup[0]
        c = row.coeffs[j]
        v = row.bound / c
        if c > 0:
            hi[j] = v if hi[j] is None else min(hi[j], v)
        else:
            lo[j] = v if lo[j] is None else max(lo[j], v)
    if any(a is None or b is None for a, b in zip(lo, hi)):
        return None
    return [(math.ceil(a), math.floor(b)) for a, b in zip(lo, hi)]


def _check_hull_fast(loop: SlcpLoop, inv: HullInvariant) -> Optional[InvariantReport]:
    n = loop.n
    split = split_kept_free(loop, inv.free)
    if split is None:
        return None
    kept = inv.kept
    freeset = set(inv.free)
    kept_pre = []
    for row in loop.precondition.rows:
        sup = [j for j, c in enumerate(row.coeffs) if c != 0]
        if any(j in freeset for j in sup):
            return None  # constrained free coordinates: use the LP path
        kept_pre.append(Row(tuple(row.coeffs[j] for j in kept), row.bound, row.strict))
    box = _unit_row_bounds(kept_pre, len(kept))
    if box is None:
        return None
    count = 1
    for a, b in box:
        count *= max(b - a + 1, 0)
    if count > 10**5:
        return None
    init_ok, init_wit = True, None
    pre_poly = Polyhedron(len(kept), tuple(kept_pre))
    for pt in integer_points_in_box(pre_poly, box):
        if pt not in inv.vertices:
            init_ok, init_wit = False, pt
            break

    verts = sorted(inv.vertices)
    vmax = max((abs(x) for v in verts for x in v), default=_ZERO)
    mmax = max(
        (abs(r.bound) + sum(abs(c) for c in r.coeffs)
         for r in split.kept_loop.update.rows),
        default=_ZERO,
    )
    radius = (vmax + 1) * (mmax + 1)
    cons_ok, cons_wit = True, None
    for v in verts:
        succs = kept_successors(split, v, radius)
        if not succs:
            continue
        if len(succs) > 10**4:
            return None
        fs = split.free_system(v)
        if fs.dim and isinstance(simplex.lp_feasible(fs), simplex.UnsatCertificate):
            continue  # free subsystem infeasible: no transition at all
        for s in succs:
            if s not in inv.vertices:
                cons_ok, cons_wit = False, (v, s)
                break
        if not cons_ok:
            break
    return InvariantReport(init_ok, cons_ok, init_wit, cons_wit)


def _check_hull_lp(loop: SlcpLoop, inv: HullInvariant) -> InvariantReport:
    n = loop.n
    kept = inv.kept

    init_ok, init_wit = True, None
    lo, hi, empty = [], [], False
    for j in kept:
        obj = [_ZERO] * n
        obj[j] = Fraction(1)
        top = simplex.optimize(loop.precondition, obj, "max")
        bot = simplex.optimize(loop.precondition, obj, "min")
        if isinstance(top, simplex.Empty):
            empty = True
            break
        if isinstance(top, simplex.Unbounded) or isinstance(bot, simplex.Unbounded):
            return InvariantReport(
                False, False, note="initial projection unbounded; cannot check"
            )
        lo.append(bot.value)
        hi.append(top.value)
    if not empty and kept:
        ranges = [range(math.ceil(a), math.floor(b) + 1) for a, b in zip(lo, hi)]
        count = 1
        for rg in ranges:
            count *= max(len(rg), 1)
        if count > 10**5:
            return InvariantReport(False, False, note="initial box too large")
        for pt in product(*ranges):
            vals = tuple(Fraction(v) for v in pt)
            restricted = loop.precondition.with_rows(_fix_rows(kept, vals, n))
            if isinstance(simplex.lp_feasible(restricted), simplex.SatPoint):
                if vals not in inv.vertices:
                    init_ok, init_wit = False, vals
                    break

    trans = loop.transition_polyhedron()
    hull_rows = _lift_unprimed(inv.polyhedron(), n)
    cons_ok, cons_wit = True, None
    for v in sorted(inv.vertices):
        premise = trans.with_rows(_fix_rows(kept, v, 2 * n))
        if isinstance(simplex.lp_feasible(premise), simplex.UnsatCertificate):
            continue  # no transitions from this vertex
        succ, determined = [], True
        for j in kept:
            obj = [_ZERO] * (2 * n)
            obj[n + j] = Fraction(1)
            top = simplex.optimize(premise, obj, "max")
            bot = simplex.optimize(premise, obj, "min")
            if (
                isinstance(top, simplex.Unbounded)
                or isinstance(bot, simplex.Unbounded)
                or top.value != bot.value
            ):
                determined = False
                break
            succ.append(top.value)
        if determined:
            succ = tuple(succ)
            if all(s.denominator == 1 for s in succ):
                if succ not in inv.vertices:
                    cons_ok, cons_wit = False, (v, succ)
                    break
            # fractional forced successor: no integer transition exists
            continue
        # fall back: successor stays in the hull rationally
        for row in inv.polyhedron().rows:
            primed = (_ZERO,) * n + row.coeffs
            res = simplex.entails(premise.with_rows(hull_rows), primed, row.bound)
            if isinstance(res, simplex.EntailNo):
                p = res.counterexample
                cons_ok, cons_wit = False, (p[:n], p[n:])
                break
        if not cons_ok:
            break
    return InvariantReport(init_ok, cons_ok, init_wit, cons_wit)


# ---------------------------------------------------------------------------
# kept/free decomposition for hull invariants
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FreeSplit:
    """Decomposition of a loop into a subsystem over the kept coordinates
    and a residual system over the free ones.

    Applicable when every guard row touches only kept or only free
    coordinates and no update row couples a primed kept coordinate with a
    free one.  Then the kept projections of the integer successors of a
    source depend only on its kept projection, and constraints on the free
    coordinates can be analyzed per kept vertex after substitution."""

    kept: tuple
    free: tuple
    kept_loop: SlcpLoop
    b_rows: tuple          # update rows touching free coords (full width)
    free_guard: tuple      # guard rows over free coords only (full width)

    def free_system(self, vertex) -> Polyhedron:
        """Rows over (free, free') after substituting the kept source."""
        f = len(self.free)
        pos = {j: k for k, j in enumerate(self.free)}
        n = len(self.kept) + f
        rows = []
        for row in self.free_guard:
            coeffs = [_ZERO] * (2 * f)
            for j in self.free:
                coeffs[pos[j]] = row.coeffs[j]
            rows.append(Row(tuple(coeffs), row.bound, row.strict))
        vmap = dict(zip(self.kept, vertex))
        for row in self.b_rows:
            coeffs = [_ZERO] * (2 * f)
            bound = row.bound
            for j, c in enumerate(row.coeffs):
                if c == 0:
                    continue
                base = j if j < n else j - n
                primed = j >= n
                if base in pos:
                    coeffs[pos[base] + (f if primed else 0)] = c
                else:
                    bound -= c * rat(vmap[base])
            rows.append(Row(tuple(coeffs), bound, row.strict))
        return Polyhedron(2 * f, tuple(rows))


def split_kept_free(loop: SlcpLoop, free) -> Optional[FreeSplit]:
    """Try to decompose the loop along the given free coordinates; None
    when the guard or update couples them with the kept ones."""
    n = loop.n
    free = tuple(sorted(set(free)))
    freeset = set(free)
    kept = tuple(j for j in range(n) if j not in freeset)
    pos = {j: k for k, j in enumerate(kept)}
    k = len(kept)

    def support(row):
        return [j for j, c in enumerate(row.coeffs) if c != 0]

    kept_guard, free_guard = [], []
    for row in loop.guard.rows:
        sup = support(row)
        if all(j in freeset for j in sup):
            free_guard.append(row)
        elif all(j not in freeset for j in sup):
            kept_guard.append(
                Row(tuple(row.coeffs[j] for j in kept), row.bound, row.strict)
            )
        else:
            return None
    a_rows, b_rows = [], []
    for row in loop.update.rows:
        sup = support(row)
        has_free = any((j if j < n else j - n) in freeset for j in sup)
        has_kept_primed = any(j >= n and (j - n) not in freeset for j in sup)
        if has_free and has_kept_primed:
            return None
        if has_free:
            b_rows.append(row)
        else:
            coeffs = [_ZERO] * (2 * k)
            for j in sup:
                base = j if j < n else j - n
                coeffs[pos[base] + (k if j >= n else 0)] = row.coeffs[j]
            a_rows.append(Row(tuple(coeffs), row.bound, row.strict))
    kept_loop = SlcpLoop(
        var_names=tuple(loop.var_names[j] for j in kept),
        precondition=Polyhedron.full(k),
        guard=Polyhedron(k, tuple(kept_guard)),
        update=Polyhedron(2 * k, tuple(a_rows)),
        interpretation=loop.interpretation,
    )
    return FreeSplit(kept, free, kept_loop, tuple(b_rows), tuple(free_guard))


def kept_successors(split: FreeSplit, vertex, radius):
    """Kept projections of all possible integer successors of a source
    projecting onto `vertex` (an overapproximation: the free subsystem may
    still be infeasible, in which case there is no transition at all).
    Returns None when the kept guard already fails."""
    v = tuple(rat(x) for x in vertex)
    if not split.kept_loop.guard.contains(v):
        return None
    box = [(x - radius, x + radius) for x in v]
    return successors_bounded(split.kept_loop, v, box)
