"""Exact rational LP: feasibility, entailment and optimization with
Farkas certificates.

The engine is a two-phase primal simplex with Bland's rule over exact
rationals (termination guaranteed; speed is secondary to exactness).
Strict rows are handled by an infinitesimal shift of the bound (see
rationals.Eps); tableau matrix entries stay purely rational, only the
right-hand side and objective may carry an eps part.

Farkas certificates fall out of the final dual values: the phase-1 duals
witness infeasibility, and the duals of the explicit dual LP used by
`entails` are the nonnegative row multipliers.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .polyhedron import FarkasCertificate, InputError, Polyhedron
from .rationals import Eps, eps_part, rat, rat_part

_ZERO = Fraction(0)
_ONE = Fraction(1)


class LPInternalError(RuntimeError):
    """A state the solver's preconditions rule out; indicates a bug."""


# ---------------------------------------------------------------------------
# result types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SatPoint:
    point: tuple[Fraction, ...]


@dataclass(frozen=True)
class UnsatCertificate:
    certificate: FarkasCertificate


@dataclass(frozen=True)
class EntailYes:
    certificate: FarkasCertificate


@dataclass(frozen=True)
class EntailNo:
    counterexample: tuple[Fraction, ...]


@dataclass(frozen=True)
class EmptyPremise:
    """Entailment premise is empty: vacuously true, reported separately."""


@dataclass(frozen=True)
class Bounded:
    value: Fraction
    point: tuple[Fraction, ...]


@dataclass(frozen=True)
class Unbounded:
    ray: tuple[Fraction, ...]


@dataclass(frozen=True)
class Empty:
    pass


# ---------------------------------------------------------------------------
# core tableau simplex on  min c.x  s.t.  A x = b, x >= 0
# ---------------------------------------------------------------------------


def _pivot(T, rhs, basis, red, r, e):
    prow = T[r]
    p = prow[e]
    if p != 1:
        inv = _ONE / p
        T[r] = prow = [x * inv for x in prow]
        rhs[r] = rhs[r] * inv
    for i in range(len(T)):
        if i == r:
            continue
        f = T[i][e]
        if f:
            row = T[i]
            T[i] = [a - f * pb for a, pb in zip(row, prow)]
            rhs[i] = rhs[i] - f * rhs[r]
    if red is not None:
        f = red[e]
        if f:
            for j in range(len(red)):
                if prow[j]:
                    red[j] = red[j] - f * prow[j]
    basis[r] = e


def _run(T, rhs, basis, cost, enterable):
    """Bland-rule simplex loop.  Returns ('optimal', red) or
    ('unbounded', entering_col, red)."""
    width = len(cost)
    red = list(cost)
    for i, bi in enumerate(basis):
        cb = cost[bi]
        if cb:
            row = T[i]
            for j in range(width):
                if row[j]:
                    red[j] = red[j] - cb * row[j]
    m = len(T)
    while True:
        e = -1
        for j in range(width):
            if enterable[j] and red[j] < 0:
                e = j
                break
        if e < 0:
            return "optimal", red, None
        leave = -1
        best = None
        for i in range(m):
            tie = T[i][e]
            if tie > 0:
                ratio = rhs[i] / tie
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    best = ratio
                    leave = i
        if leave < 0:
            return "unbounded", red, e
        _pivot(T, rhs, basis, red, leave, e)


@dataclass
class EqFormResult:
    status: str                      # 'optimal' | 'unbounded' | 'infeasible'
    x: Optional[list] = None         # values (possibly eps-affine), len n
    y: Optional[list] = None         # duals w.r.t. the rows as given
    obj: object = None
    ray: Optional[list] = None       # improving ray for 'unbounded'


def solve_eq_form(A: Sequence[Sequence[Fraction]], b: Sequence, c: Sequence) -> EqFormResult:
    """Minimize c.x subject to A x = b, x >= 0 (x of length len(c)).

    b entries and c entries may be eps-affine; A entries must be rational.
    """
    m = len(A)
    n = len(c)
    T: list[list[Fraction]] = []
    rhs: list = []
    sigma: list[int] = []
    for i in range(m):
        bi = b[i]
        neg = bi < 0
        sigma.append(-1 if neg else 1)
        row = [rat(x) for x in A[i]]
        if neg:
            row = [-x for x in row]
        T.append(row + [_ZERO] * m)
        T[i][n + i] = _ONE
        rhs.append(-bi if neg else bi)
    basis = list(range(n, n + m))
    width = n + m

    # phase 1
    cost1 = [_ZERO] * n + [_ONE] * m
    enterable = [True] * n + [False] * m
    status, red, _ = _run(T, rhs, basis, cost1, enterable)
    if status != "optimal":
        raise LPInternalError("phase-1 objective is bounded below by zero")
    obj1 = sum((rhs[i] for i in range(m) if basis[i] >= n), _ZERO)
    if obj1 > 0:
        y = [sigma[i] * (_ONE - red[n + i]) for i in range(m)]
        return EqFormResult("infeasible", y=y)

    # drive surviving artificials out of the basis where possible
    for i in range(m):
        if basis[i] >= n:
            row = T[i]
            for j in range(n):
                if row[j]:
                    _pivot(T, rhs, basis, None, i, j)
                    break

    # phase 2
    cost2 = list(c) + [_ZERO] * m
    status, red, e = _run(T, rhs, basis, cost2, enterable)
    if status == "unbounded":
        ray = [_ZERO] * width
        ray[e] = _ONE
        for i in range(m):
            if T[i][e]:
                ray[basis[i]] = -T[i][e]
        x = [_ZERO] * width
        for i in range(m):
            x[basis[i]] = rhs[i]
        return EqFormResult("unbounded", x=x[:n], ray=ray[:n])
    x = [_ZERO] * width
    for i in range(m):
        x[basis[i]] = rhs[i]
    obj = sum((c[j] * x[j] for j in range(n) if x[j] != 0), _ZERO)
    y = [-(red[n + i]) * sigma[i] for i in range(m)]
    return EqFormResult("optimal", x=x[:n], y=y, obj=obj)


# ---------------------------------------------------------------------------
# realization of eps-affine points
# ---------------------------------------------------------------------------


def _split(v):
    return (rat_part(v), eps_part(v))


def realize_point(poly: Polyhedron, coords: Sequence, extra_margin=None) -> tuple[Fraction, ...]:
    """Substitute a concrete small eps > 0 into an eps-affine point known to
    satisfy `poly` in the eps-order, producing an exact rational point."""
    pa = []
    pb = []
    for v in coords:
        a, b2 = _split(v)
        pa.append(a)
        pb.append(b2)
    cap = Fraction(1)
    for row in poly.rows:
        alpha = sum((cf * pb[j] for j, cf in enumerate(row.coeffs) if cf), _ZERO)
        if row.strict:
            alpha += 1
        beta = row.bound - sum((cf * pa[j] for j, cf in enumerate(row.coeffs) if cf), _ZERO)
        if alpha > 0:
            if beta <= 0:
                raise LPInternalError("eps realization impossible; point not feasible")
            cap = min(cap, beta / alpha)
    if extra_margin is not None:
        alpha, beta = extra_margin
        if alpha > 0:
            if beta <= 0:
                raise LPInternalError("eps realization margin impossible")
            cap = min(cap, beta / alpha)
    eps0 = cap / 2
    return tuple(pa[j] + pb[j] * eps0 for j in range(len(pa)))


# ---------------------------------------------------------------------------
# public polyhedron-level operations
# ---------------------------------------------------------------------------


def _rhs_of(row):
    return Eps(row.bound, -1) if row.strict else row.bound


def lp_feasible(poly: Polyhedron):
    """Exact feasibility of M x <= m; SatPoint or UnsatCertificate."""
    n = poly.dim
    q = len(poly.rows)
    A = []
    b = []
    for i, row in enumerate(poly.rows):
        arow = list(row.coeffs) + [-c for c in row.coeffs] + [_ZERO] * q
        arow[2 * n + i] = _ONE
        A.append(arow)
        b.append(_rhs_of(row))
    c = [_ZERO] * (2 * n + q)
    res = solve_eq_form(A, b, c)
    if res.status == "infeasible":
        lam = tuple(-rat(v) for v in res.y)
        cert = FarkasCertificate(multipliers=lam, premise=poly, target_bound=None)
        return UnsatCertificate(cert)
    xs = [res.x[j] - res.x[n + j] for j in range(n)]
    return SatPoint(realize_point(poly, xs))


def optimize(poly: Polyhedron, objective: Sequence, direction: str = "max"):
    """Exact optimum of objective.x over the polyhedron."""
    if direction not in ("max", "min"):
        raise InputError("direction must be 'max' or 'min'")
    n = poly.dim
    if len(objective) != n:
        raise InputError("objective dimension mismatch")
    w = [rat(v) for v in objective]
    if direction == "min":
        w = [-v for v in w]
    q = len(poly.rows)
    A = []
    b = []
    for i, row in enumerate(poly.rows):
        arow = list(row.coeffs) + [-c for c in row.coeffs] + [_ZERO] * q
        arow[2 * n + i] = _ONE
        A.append(arow)
        b.append(_rhs_of(row))
    c = [-v for v in w] + list(w) + [_ZERO] * q
    res = solve_eq_form(A, b, c)
    if res.status == "infeasible":
        return Empty()
    if res.status == "unbounded":
        ray = tuple(rat(res.ray[j]) - rat(res.ray[n + j]) for j in range(n))
        return Unbounded(ray)
    xs = [res.x[j] - res.x[n + j] for j in range(n)]
    point = realize_point(poly, xs)
    objective_r = [rat(v) for v in objective]
    value = sum((objective_r[j] * point[j] for j in range(n)), _ZERO)
    return Bounded(value, point)


def entails(poly: Polyhedron, coeffs: Sequence, bound, known_point=None):
    """Does the polyhedron entail coeffs.x <= bound?

    Returns EntailYes with a Farkas certificate, EntailNo with a
    counterexample point, or EmptyPremise when the polyhedron is empty.
    """
    n = poly.dim
    if len(coeffs) != n:
        raise InputError("target dimension mismatch")
    w = [rat(v) for v in coeffs]
    beta = rat(bound)
    if known_point is None:
        feas = lp_feasible(poly)
        if isinstance(feas, UnsatCertificate):
            return EmptyPremise()
        known_point = feas.point
    q = len(poly.rows)
    # dual LP: min lambda.m  s.t.  M^T lambda = w, lambda >= 0
    A = [[poly.rows[i].coeffs[j] for i in range(q)] for j in range(n)]
    b = list(w)
    c = [_rhs_of(row) for row in poly.rows]
    res = solve_eq_form(A, b, c)
    if res.status == "infeasible":
        # sup over the polyhedron is +infinity along ray d = y
        d = [rat(v) for v in res.y]
        wd = sum((w[j] * d[j] for j in range(n)), _ZERO)
        if wd <= 0:
            raise LPInternalError("infeasibility dual is not an improving ray")
        wp = sum((w[j] * known_point[j] for j in range(n)), _ZERO)
        t = _ZERO if wp > beta else (beta - wp) / wd + 1
        point = tuple(known_point[j] + t * d[j] for j in range(n))
        return EntailNo(point)
    if res.status == "unbounded":
        raise LPInternalError("dual unbounded although the premise is nonempty")
    val = res.obj
    if val <= beta:
        lam = tuple(rat_part(v) for v in res.x)
        cert = FarkasCertificate(
            multipliers=lam, premise=poly, target_coeffs=tuple(w), target_bound=beta
        )
        return EntailYes(cert)
    # the duals of the dual LP give a maximizing point of the premise
    val_a, val_b = _split(val)
    margin = None
    if val_a == beta:
        # need w.p(eps) > beta: w.p(eps) = val_a + val_b*eps with val_b > 0
        margin = (_ZERO, _ONE)  # no extra cap needed
    else:
        # cap eps so that val_a + val_b*eps stays > beta when val_b < 0
        if val_b < 0:
            margin = (-val_b, val_a - beta)
    point = realize_point(poly, res.y, extra_margin=margin)
    wp = sum((w[j] * point[j] for j in range(n)), _ZERO)
    if wp <= beta:
        raise LPInternalError("counterexample realization failed")
    return EntailNo(point)
