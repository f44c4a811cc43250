"""Exact convex hulls of finite point sets as constraint polyhedra.

The construction is aimed at low-dimensional 0/1-valued state sets (plus
free coordinates that are simply left unconstrained): first the affine
hull is computed and factored out as equalities, then the facets of the
full-dimensional remainder are enumerated by the double-description
method on the homogenized dual cone.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd, lcm

from .polyhedron import InputError, Polyhedron, Row, eq_rows
from .rationals import rat

HULL_DIM_CAP = 16

_ZERO = Fraction(0)
_ONE = Fraction(1)


def _primitive(vec):
    """Scale a rational vector to a primitive integer vector (same ray)."""
    den = lcm(*(v.denominator for v in vec)) if vec else 1
    ints = [int(v * den) for v in vec]
    g = 0
    for v in ints:
        g = gcd(g, abs(v))
    if g > 1:
        ints = [v // g for v in ints]
    return tuple(Fraction(v) for v in ints)


def _dot(a, b):
    return sum((x * y for x, y in zip(a, b) if x and y), _ZERO)


def extreme_rays(ineqs):
    """Extreme rays and lineality basis of the cone {y : a.y <= 0 for each a}.

    Double description with the combinatorial adjacency test; fine for the
    small dimensions this package needs.
    """
    if not ineqs:
        raise InputError("cone needs at least one inequality")
    dim = len(ineqs[0])
    lineality = [
        tuple(_ONE if j == k else _ZERO for j in range(dim)) for k in range(dim)
    ]
    rays: list[tuple] = []
    processed: list[tuple] = []

    def active_set(ray):
        return frozenset(
            j for j, a in enumerate(processed) if _dot(a, ray) == 0
        )

    for a in ineqs:
        a = tuple(rat(v) for v in a)
        if len(a) != dim:
            raise InputError("inconsistent cone dimension")
        pivot = None
        for k, l in enumerate(lineality):
            if _dot(a, l) != 0:
                pivot = k
                break
        if pivot is not None:
            l0 = lineality.pop(pivot)
            al0 = _dot(a, l0)
            lineality = [
                _primitive(tuple(x - (_dot(a, l) / al0) * y for x, y in zip(l, l0)))
                if _dot(a, l) != 0 else l
                for l in lineality
            ]
            if al0 > 0:
                l0 = tuple(-x for x in l0)
                al0 = -al0
            new_rays = []
            for r in rays:
                ar = _dot(a, r)
                proj = _primitive(tuple(x - (ar / al0) * y for x, y in zip(r, l0)))
                new_rays.append(proj)
            new_rays.append(_primitive(l0))
            rays = _dedupe(new_rays)
            processed.append(a)
            continue
        neg = []
        zero = []
        pos = []
        for r in rays:
            ar = _dot(a, r)
            (neg if ar < 0 else zero if ar == 0 else pos).append(r)
        if not pos:
            processed.append(a)
            rays = neg + zero
            continue
        acts = {r: active_set(r) for r in rays}
        new_rays = list(neg) + list(zero)
        for rp in pos:
            for rn in neg:
                common = acts[rp] & acts[rn]
                adjacent = True
                for r3 in rays:
                    if r3 is rp or r3 is rn:
                        continue
                    if common <= acts[r3]:
                        adjacent = False
                        break
                if not adjacent:
                    continue
                arp = _dot(a, rp)
                arn = _dot(a, rn)
                combo = tuple(arp * xn - arn * xp for xp, xn in zip(rp, rn))
                new_rays.append(_primitive(combo))
        rays = _dedupe(new_rays)
        processed.append(a)
    return rays, lineality


def _dedupe(rays):
    seen = set()
    out = []
    for r in rays:
        if any(v != 0 for v in r) and r not in seen:
            seen.add(r)
            out.append(r)
    return out


def _rref(vectors, dim):
    """Row-reduce; returns (rows, pivot_columns)."""
    rows = [list(v) for v in vectors]
    pivots = []
    r = 0
    for col in range(dim):
        sel = None
        for i in range(r, len(rows)):
            if rows[i][col] != 0:
                sel = i
                break
        if sel is None:
            continue
        rows[r], rows[sel] = rows[sel], rows[r]
        inv = _ONE / rows[r][col]
        rows[r] = [x * inv for x in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][col] != 0:
                f = rows[i][col]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[r])]
        pivots.append(col)
        r += 1
        if r == len(rows):
            break
    return rows[:r], pivots


def hull_constraints(points):
    """Exact H-representation of the convex hull of finitely many rational
    points: a list of Rows over the same dimension (equalities appear as
    row pairs).  Empty input yields the single row 0 <= -1."""
    pts = sorted({tuple(rat(v) for v in p) for p in points})
    if not pts:
        return 1, [Row((_ZERO,), Fraction(-1))]
    dim = len(pts[0])
    if any(len(p) != dim for p in pts):
        raise InputError("points must share a dimension")
    base = pts[0]
    diffs = [tuple(x - b for x, b in zip(p, base)) for p in pts[1:]]
    basis, pivots = _rref(diffs, dim)
    r = len(pivots)
    if r > HULL_DIM_CAP:
        raise InputError(
            f"hull dimension {r} exceeds the supported cap {HULL_DIM_CAP}"
        )
    rows: list[Row] = []
    # affine-hull equalities: every non-pivot coordinate is an affine
    # function of the pivot coordinates
    pivot_set = set(pivots)
    for j in range(dim):
        if j in pivot_set:
            continue
        coeffs = [_ZERO] * dim
        coeffs[j] = _ONE
        bound = base[j]
        for k, col in enumerate(pivots):
            c = basis[k][j]
            if c:
                coeffs[col] = -c
                bound -= c * base[col]
        rows.extend(eq_rows(coeffs, bound))
    if r == 0:
        return dim, rows
    # facets of the full-dimensional projection onto the pivot coordinates
    proj = [tuple(p[c] for c in pivots) for p in pts]
    cone = [q + (Fraction(-1),) for q in proj]
    rays, lineality = extreme_rays(cone)
    if lineality:
        raise InputError("internal: projected hull is not full-dimensional")
    facets = []
    for ray in rays:
        a, b = ray[:r], ray[r]
        if all(v == 0 for v in a):
            continue
        coeffs = [_ZERO] * dim
        for k, col in enumerate(pivots):
            coeffs[col] = a[k]
        facets.append(Row(tuple(coeffs), b))
    facets.sort(key=lambda row: (row.coeffs, row.bound))
    rows.extend(facets)
    return dim, rows


def hull_of_states(states, free_vars=()):
    """Convex hull of a finite state set as a Polyhedron, with the listed
    coordinates left completely unconstrained."""
    states = [tuple(rat(v) for v in s) for s in states]
    free = set(free_vars)
    if not states:
        dim = (max(free) + 1) if free else 0
        return Polyhedron(dim, (Row((_ZERO,) * dim, Fraction(-1)),))
    dim = len(states[0])
    for i in free:
        if not 0 <= i < dim:
            raise InputError("free coordinate out of range")
    kept = [j for j in range(dim) if j not in free]
    projected = [tuple(s[j] for j in kept) for s in states]
    if not kept:
        return Polyhedron.full(dim)
    _, rows = hull_constraints(projected)
    lifted = []
    for row in rows:
        coeffs = [_ZERO] * dim
        for k, j in enumerate(kept):
            coeffs[j] = row.coeffs[k]
        lifted.append(Row(tuple(coeffs), row.bound, row.strict))
    return Polyhedron(dim, tuple(lifted))


def integer_points_in_box(poly: Polyhedron, box):
    """All integer points of the polyhedron inside the inclusive box.

    Depth-first coordinate assignment over integer-scaled rows, pruning a
    branch as soon as a row cannot be satisfied by any completion."""
    if len(box) != poly.dim:
        raise InputError("box dimension mismatch")
    dim = poly.dim
    lo = [int(a) for a, _ in box]
    hi = [int(b) for _, b in box]
    if any(a > b for a, b in zip(lo, hi)):
        return []
    rows = []
    for row in poly.rows:
        den = lcm(row.bound.denominator,
                  *(c.denominator for c in row.coeffs)) if row.coeffs else 1
        coeffs = [int(c * den) for c in row.coeffs]
        bound = row.bound * den
        b = bound.numerator // bound.denominator
        if row.strict and bound.denominator == 1:
            b -= 1
        # least possible contribution of coordinates j.. to this row
        rest = [0] * (dim + 1)
        for j in range(dim - 1, -1, -1):
            c = coeffs[j]
            rest[j] = rest[j + 1] + min(c * lo[j], c * hi[j])
        rows.append((coeffs, b, rest))

    out = []
    point = [0] * dim

    def descend(j, sums):
        if j == dim:
            out.append(tuple(Fraction(v) for v in point))
            return
        for v in range(lo[j], hi[j] + 1):
            nxt = []
            ok = True
            for (coeffs, b, rest), s in zip(rows, sums):
                s2 = s + coeffs[j] * v
                if s2 + rest[j + 1] > b:
                    ok = False
                    break
                nxt.append(s2)
            if ok:
                point[j] = v
                descend(j + 1, nxt)
        point[j] = 0

    descend(0, [0] * len(rows))
    return out
