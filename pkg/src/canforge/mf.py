"""Matrix factorizations of uv - f and of f, and the flag ideals T_I = (u, f_I).

Convention: the module attached to ``(phi, psi)`` is the cokernel of ``phi``
acting on row vectors, i.e. the rows of ``phi`` are the relations.  With
``phi = [[u, f_I], [f_J, v]]`` (J the complement of I) the generators map to
``f_I`` and ``-u``, so the module is the ideal T_I.  :meth:`presentation`
returns the transpose, for code that wants relations as columns.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .arith import AMBIENT, PLANE, Field, Poly, QQ, is_associate, parse_poly

Matrix = tuple[tuple[Poly, ...], ...]


def mat(rows: Sequence[Sequence[Poly]]) -> Matrix:
    return tuple(tuple(r) for r in rows)


def matmul(a: Matrix, b: Matrix, N: int | None = None) -> Matrix:
    n, k, m = len(a), len(b), len(b[0])
    if len(a[0]) != k:
        raise ValueError("shape mismatch")
    zero = a[0][0] * 0
    out = []
    for i in range(n):
        row = []
        for j in range(m):
            s = zero
            for l in range(k):
                if not a[i][l].is_zero() and not b[l][j].is_zero():
                    s = s + a[i][l].mul(b[l][j], N)
            row.append(s)
        out.append(tuple(row))
    return tuple(out)


def transpose(a: Matrix) -> Matrix:
    return tuple(zip(*a))


def scalar_identity(h: Poly, k: int) -> Matrix:
    z = h * 0
    return tuple(tuple(h if i == j else z for j in range(k)) for i in range(k))


def block_diag(a: Matrix, b: Matrix) -> Matrix:
    z = a[0][0] * 0
    ka, kb = len(a), len(b)
    rows = [tuple(a[i]) + (z,) * kb for i in range(ka)]
    rows += [(z,) * ka + tuple(b[i]) for i in range(kb)]
    return tuple(rows)


def matrix_text(a: Matrix) -> list[list[str]]:
    return [[str(p) for p in row] for row in a]


@dataclass(frozen=True)
class Hypersurface:
    ambient_vars: tuple[str, ...]
    h: Poly

    def __post_init__(self):
        if self.h.is_zero():
            raise ValueError("hypersurface equation must be nonzero")
        if self.h.vars != self.ambient_vars:
            object.__setattr__(self, "h", self.h.embed(self.ambient_vars))
        if self.h.ord() < 1:
            raise ValueError("hypersurface equation must lie in the maximal ideal")

    @property
    def field(self) -> Field:
        return self.h.field

    def __str__(self):
        return str(self.h)


@dataclass(frozen=True)
class MatrixFactorization:
    hyp: Hypersurface
    phi: Matrix
    psi: Matrix
    label: str = ""
    free: bool = False

    @property
    def rank(self) -> int:
        return len(self.phi)

    @property
    def reduced(self) -> bool:
        """All entries of phi and psi lie in the maximal ideal."""
        return all(p.ord() >= 1 for row in self.phi + self.psi for p in row)

    def presentation(self) -> Matrix:
        """Relations as columns: the module is coker(phi^T) on column vectors."""
        return transpose(self.phi)

    def column_pair(self) -> tuple[Matrix, Matrix]:
        """(P, Q) = (phi^T, psi^T): a factorization with P Q = Q P = h."""
        return transpose(self.phi), transpose(self.psi)

    def to_json(self) -> dict:
        return {"h": str(self.hyp.h), "phi": matrix_text(self.phi),
                "psi": matrix_text(self.psi), "label": self.label, "free": self.free}


def verify_mf(mf: MatrixFactorization) -> bool:
    """Exact check phi*psi = psi*phi = h*Id."""
    k = len(mf.phi)
    if any(len(r) != k for r in mf.phi) or len(mf.psi) != k or any(len(r) != k for r in mf.psi):
        return False
    target = scalar_identity(mf.hyp.h, k)
    return matmul(mf.phi, mf.psi) == target and matmul(mf.psi, mf.phi) == target


def free_module(hyp: Hypersurface, label: str = "R") -> MatrixFactorization:
    one = Poly.const(hyp.ambient_vars, 1, hyp.field)
    return MatrixFactorization(hyp, ((hyp.h,),), ((one,),), label, free=True)


def shift(mf: MatrixFactorization) -> MatrixFactorization:
    """Suspension: swap phi and psi."""
    label = f"{mf.label}[1]" if mf.label else ""
    if label.endswith("[1][1]"):
        label = label[:-6]
    return MatrixFactorization(mf.hyp, mf.psi, mf.phi, label, mf.free)


def direct_sum(a: MatrixFactorization, b: MatrixFactorization) -> MatrixFactorization:
    if a.hyp != b.hyp:
        raise ValueError("direct_sum needs a common hypersurface")
    label = "+".join(x for x in (a.label, b.label) if x)
    return MatrixFactorization(a.hyp, block_diag(a.phi, b.phi), block_diag(a.psi, b.psi),
                               label, a.free and b.free)


# ---------------------------------------------------------------------------
# Factor systems and flag ideals
# ---------------------------------------------------------------------------


def _certify_irreducible(f: Poly) -> str:
    """Trust level of the claim that f is irreducible in K[[x,y]]."""
    if f.ord() == 1:
        return "certified: order 1"
    if f.ord() == 2:
        from .factor import IrreducibleOverField, formal_factor_quadratic

        res = formal_factor_quadratic(f)
        if isinstance(res, IrreducibleOverField):
            return f"certified: no formal split over {f.field}"
        return f"formally reducible over {f.field}"
    return "asserted"


@dataclass(frozen=True)
class FactorSystem:
    """Ordered factors f_1..f_n in K[[x,y]] with their associate classes."""

    factors: tuple[Poly, ...]
    field: Field = QQ
    associate_classes: tuple[tuple[int, ...], ...] = ()
    trust: tuple[str, ...] = ()

    @classmethod
    def from_polys(cls, polys: Sequence[Poly], field: Field | None = None) -> "FactorSystem":
        if not polys:
            raise ValueError("factor list must be nonempty")
        field = field or polys[0].field
        fs = []
        for p in polys:
            p = p.with_field(field) if p.field != field else p
            p = p.embed(PLANE)
            if p.ord() < 1:
                raise ValueError(f"factor {p} is not in m = (x, y)")
            fs.append(p)
        classes: list[list[int]] = []
        for i, p in enumerate(fs, start=1):
            for cl in classes:
                if is_associate(p, fs[cl[0] - 1]):
                    cl.append(i)
                    break
            else:
                classes.append([i])
        trust = tuple(_certify_irreducible(p) for p in fs)
        return cls(tuple(fs), field, tuple(tuple(c) for c in classes), trust)

    @classmethod
    def parse(cls, texts: Sequence[str], field: Field = QQ) -> "FactorSystem":
        return cls.from_polys([parse_poly(t, PLANE, field) for t in texts], field)

    @property
    def n(self) -> int:
        return len(self.factors)

    def f_of(self, I) -> Poly:
        """Product of the factors indexed by I (1-based, multiset allowed)."""
        out = Poly.const(PLANE, 1, self.field)
        for i in I:
            out = out * self.factors[i - 1]
        return out

    @property
    def f(self) -> Poly:
        return self.f_of(range(1, self.n + 1))

    def class_of(self, i: int) -> int:
        for k, cl in enumerate(self.associate_classes):
            if i in cl:
                return k
        raise KeyError(i)

    @property
    def isolated(self) -> bool:
        return all(len(c) == 1 for c in self.associate_classes)

    def hypersurface(self) -> Hypersurface:
        u = Poly.var(AMBIENT, "u", self.field)
        v = Poly.var(AMBIENT, "v", self.field)
        return Hypersurface(AMBIENT, u * v - self.f.embed(AMBIENT))

    def plane_hypersurface(self) -> Hypersurface:
        return Hypersurface(PLANE, self.f)


def subset_label(I) -> str:
    return "T_{" + ",".join(str(i) for i in sorted(I)) + "}"


def flag_ideal_mf(sys: FactorSystem, I) -> MatrixFactorization:
    """The 2x2 factorization [[u, f_I], [f_J, v]] presenting T_I = (u, f_I).

    For I empty or the full index set the module is free of rank one and the
    distinguished free object is returned.
    """
    I = frozenset(I)
    full = frozenset(range(1, sys.n + 1))
    if not I <= full:
        raise ValueError(f"{sorted(I)} is not a subset of 1..{sys.n}")
    hyp = sys.hypersurface()
    if not I or I == full:
        return free_module(hyp)
    J = full - I
    fI = sys.f_of(sorted(I)).embed(AMBIENT)
    fJ = sys.f_of(sorted(J)).embed(AMBIENT)
    u = Poly.var(AMBIENT, "u", sys.field)
    v = Poly.var(AMBIENT, "v", sys.field)
    phi = ((u, fI), (fJ, v))
    psi = ((v, -fI), (-fJ, u))
    return MatrixFactorization(hyp, phi, psi, subset_label(I))


class UnsupportedReduction(ValueError):
    pass


def knorrer_reduce(mf: MatrixFactorization) -> MatrixFactorization:
    """Read the 1x1 factorization (f_I, f_J) of f off a flag-ideal factorization."""
    if mf.free:
        raise UnsupportedReduction("free summand has no reduced factorization")
    if len(mf.phi) != 2:
        raise UnsupportedReduction("only 2x2 flag-ideal factorizations are supported")
    vars = mf.hyp.ambient_vars
    u = Poly.var(vars, "u", mf.hyp.field)
    v = Poly.var(vars, "v", mf.hyp.field)
    (a, fI), (fJ, d) = mf.phi
    if a != u or d != v or fI.used_vars() - {"x", "y"} or fJ.used_vars() - {"x", "y"}:
        raise UnsupportedReduction("matrix does not have the flag-ideal shape [[u, a], [b, v]]")
    f = (u * v - mf.hyp.h).embed(PLANE)
    a2, b2 = fI.embed(PLANE), fJ.embed(PLANE)
    if a2 * b2 != f:
        raise UnsupportedReduction("corner entries do not multiply to f")
    hyp = Hypersurface(PLANE, f)
    label = f"{mf.label}~" if mf.label else ""
    return MatrixFactorization(hyp, ((a2,),), ((b2,),), label)
