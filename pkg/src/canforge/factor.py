"""Formal factorization in K[[x,y]]: shears, Weierstrass division, quadratic splits.

Only the y-degree-2 case is handled.  That is enough to tell a polynomial that
is irreducible over a field of coefficients but splits after completion (the
node ``x^2 + x^3 + y^2`` over Q(i)) from one that stays irreducible.
Anything of higher Weierstrass degree is reported as unsupported.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .arith import PLANE, Field, Poly, monomials_upto, series_inverse, series_sqrt
from .linalg import solve

DEFAULT_ORDER = 8


class UnsupportedFactorization(ValueError):
    """Raised when the Weierstrass degree is not 2."""


@dataclass(frozen=True)
class WeierstrassData:
    original: Poly
    shear: Fraction | None  # x -> x + shear*y, None when no shear was needed
    y_degree: int
    unit_part: Poly  # unit q with q * original_sheared = y^d + lower, mod m^(N+1)
    sheared: Poly
    order: int

    @property
    def shear_text(self) -> str:
        return "none" if self.shear is None else f"x -> x + {self.shear}*y"


@dataclass(frozen=True)
class FormalFactorization:
    factors: tuple[Poly, ...]
    order: int
    field: Field

    @property
    def certified_modulus(self) -> str:
        return f"m^{self.order + 1}"

    def product(self) -> Poly:
        out = Poly.const(self.factors[0].vars, 1, self.field)
        for g in self.factors:
            out = out.mul(g, self.order)
        return out


@dataclass(frozen=True)
class IrreducibleOverField:
    """No order-1 split exists over ``field``; ``obstruction`` explains why."""

    field: Field
    obstruction: Poly  # discriminant / 4 with its power of x removed
    constant: object  # its constant term (None when the x-order is odd)
    reason: str
    order: int


def _shear(f: Poly, c) -> Poly:
    if c == 0:
        return f
    x = Poly.var(f.vars, "x", f.field) + Poly.var(f.vars, "y", f.field) * c
    return f.subs({"x": x})


def _y_axis_order(f: Poly) -> float:
    ix = f.vars.index("x")
    iy = f.vars.index("y")
    return min((e[iy] for e in f.terms if e[ix] == 0), default=float("inf"))


def weierstrass_prepare(f: Poly, N: int = DEFAULT_ORDER) -> WeierstrassData:
    """Shear f to be y-regular of order ord(f) and compute its Weierstrass unit.

    The shear coefficient is the smallest c in 0, 1, 2, ... for which f(0, y)
    has order exactly ord(f); in characteristic zero one always exists.
    """
    if f.is_zero():
        raise ValueError("weierstrass_prepare needs f != 0")
    f = f.embed(PLANE) if f.vars != PLANE else f
    o = f.ord()
    if o < 1:
        raise ValueError(f"{f} is a unit")
    c = 0
    while True:
        g = _shear(f, f.field(c))
        if _y_axis_order(g) == o:
            break
        c += 1
    d = int(o)
    q, _ = _weierstrass_division(g, d, N)
    return WeierstrassData(f, None if c == 0 else Fraction(c), d, q, g, N)


def _weierstrass_division(g: Poly, d: int, N: int) -> tuple[Poly, list[Poly]]:
    """Solve q*g + sum_{k<d} r_k(x) y^k = y^d mod m^(N+1).

    Returns the unit q and the remainders r_0..r_{d-1} (polynomials in x).
    """
    K = g.field
    rows = monomials_upto(2, N)
    row_index = {e: k for k, e in enumerate(rows)}
    cols, labels = [], []
    for mono in monomials_upto(2, max(0, N - d)):
        col = {}
        for e, c in g.terms.items():
            t = (e[0] + mono[0], e[1] + mono[1])
            if sum(t) <= N:
                col[row_index[t]] = c
        cols.append(col)
        labels.append(("q", mono))
    for k in range(d):
        for j in range(N - k + 1):
            cols.append({row_index[(j, k)]: K.one()})
            labels.append(("r", (j, k)))
    sol = solve(cols, {row_index[(0, d)]: K.one()}, len(rows), K)
    if sol is None:  # cannot happen for a y-regular g
        raise ArithmeticError("Weierstrass division failed")
    q_terms, r_terms = {}, [dict() for _ in range(d)]
    for idx, val in sol.items():
        kind, e = labels[idx]
        if kind == "q":
            q_terms[e] = val
        else:
            r_terms[e[1]][(e[0], 0)] = val
    q = Poly(PLANE, q_terms, K)
    rs = [Poly(PLANE, t, K) for t in r_terms]
    return q, rs


def _x_order(p: Poly) -> float:
    return min((e[0] for e in p.terms), default=float("inf"))


def _shift_x(p: Poly, k: int) -> Poly:
    return Poly(p.vars, {(e[0] - k, e[1]): c for e, c in p.terms.items()}, p.field)


def formal_factor_quadratic(f: Poly, N: int = DEFAULT_ORDER, field: Field | None = None):
    """Split f into two order-1 factors modulo m^(N+1) when the field allows it.

    Returns a :class:`FormalFactorization` or :class:`IrreducibleOverField`.
    Raises :class:`UnsupportedFactorization` unless the Weierstrass degree is 2.
    """
    if field is not None and field != f.field:
        f = f.with_field(field)
    K = f.field
    M = N + 3  # working precision; shears and units never lower orders
    wd = weierstrass_prepare(f, M)
    if wd.y_degree != 2:
        raise UnsupportedFactorization(
            f"Weierstrass degree {wd.y_degree}: only the quadratic split is implemented")
    g = wd.sheared
    q, (r0, r1) = _weierstrass_division(g, 2, M)
    # g = q^{-1} (y^2 + b y + c) with b = -r1, c = -r0
    b, c = -r1, -r0
    disc4 = (b.mul(b, M) * Fraction(1, 4) - c).truncate(M)  # (b^2 - 4c)/4
    y = Poly.var(PLANE, "y", K)
    if disc4.is_zero():
        roots = (b * Fraction(-1, 2), b * Fraction(-1, 2))
    else:
        k = int(_x_order(disc4))
        unit = _shift_x(disc4, k)
        if k % 2:
            return IrreducibleOverField(K, unit, None,
                                        f"discriminant has odd x-order {k}", N)
        c0 = unit.constant_term()
        if K.sqrt(c0) is None:
            return IrreducibleOverField(K, unit, c0,
                                        f"constant {c0} is not a square in {K}", N)
        s = series_sqrt(unit, M)
        xk = Poly(PLANE, {(k // 2, 0): 1}, K)
        root = xk.mul(s, M)
        half_b = b * Fraction(1, 2)
        roots = ((-half_b + root).truncate(M), (-half_b - root).truncate(M))
    qinv = series_inverse(q, M)
    f1 = qinv.mul(y - roots[0], M)
    f2 = (y - roots[1]).truncate(M)
    if wd.shear is not None:
        back = Poly.var(PLANE, "x", K) - y * K(wd.shear)
        f1, f2 = f1.subs({"x": back}, M), f2.subs({"x": back}, M)
    return FormalFactorization((f1.truncate(N), f2.truncate(N)), N, K)


def verify_factorization(f: Poly, fac: FormalFactorization) -> bool:
    """Exact check: product of the factors equals f modulo m^(N+1)."""
    f = f.with_field(fac.field) if f.field != fac.field else f
    if f.vars != fac.factors[0].vars:
        f = f.embed(fac.factors[0].vars)
    return (fac.product() - f).truncate(fac.order).is_zero()


def factorization_report(f: Poly, N: int = DEFAULT_ORDER, field: Field | None = None) -> dict:
    """JSON-ready summary under the ``formal_factorization`` key."""
    K = field or f.field
    try:
        res = formal_factor_quadratic(f, N, K)
    except UnsupportedFactorization as exc:
        return {"field": str(K), "order": N, "status": "unsupported", "detail": str(exc),
                "factors": [], "verified": False}
    if isinstance(res, IrreducibleOverField):
        return {"field": str(K), "order": N, "status": "irreducible-over-field",
                "obstruction": str(res.obstruction),
                "obstruction_constant": None if res.constant is None else str(res.constant),
                "detail": res.reason, "factors": [], "verified": True}
    ok = verify_factorization(f, res)
    orders = [int(g.ord()) for g in res.factors]
    return {"field": str(K), "order": N, "status": "split",
            "factors": [str(g) for g in res.factors], "factor_orders": orders,
            "verified": ok, "certified_modulus": res.certified_modulus,
            "note": f"isomorphism type inferred from factor orders {tuple(orders)}"}
