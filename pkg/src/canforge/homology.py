"""Hom, Ext and endomorphism algebras by finite linear algebra over m-adic truncations.

Every space computed here is the middle cohomology ``ker D / im A`` of a
three-term complex of free modules over the ambient power-series ring S
(4 variables for uv - f, 2 for the plane curve f).  At order N we report

    H_N = (Z + m^(N+1) F) / (B + m^(N+1) F),

which equals H itself once N is large and H has finite length, and is H
modulo a high power of m in general.  The image of B is computed exactly.
The image of the true kernel Z is approximated by projecting the kernel of D
taken at a higher order L = N + margin: naive truncation at order N
would count every top-degree vector as a cycle.

Two complexes are used:

* the Hom complex of factorizations X -> Y (2-periodic), whose degree-1
  cohomology is Ext^1 and degree-0 cohomology is Ext^2 = stable Hom;
* the presentation complex  gamma -> (P_Y gamma, gamma P_X),
  (beta, alpha) -> beta P_X - P_Y alpha  computing plain Hom(coker, coker).
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Iterable, Sequence

from .arith import Field, Poly, QQ, monomials_upto
from .linalg import Echelon, eliminate_columns, kernel_basis, rank, rref
from .mf import Hypersurface, Matrix, MatrixFactorization, matmul

DEFAULT_ORDERS = (4, 5, 6)
LIFT_MARGIN = 2


class HomologyError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Truncated ring model
# ---------------------------------------------------------------------------


class TruncatedRing:
    """R / m^(N+1) for R = S/(h), with a linear normal form.

    Normal forms come from a reduced echelon basis of h*S modulo m^(N+1), with
    monomials divisible by u*v eliminated first (lowest degree, then highest
    power of uv).  When f has order >= 2 the surviving monomials are exactly
    u^a v^b x^c y^d with min(a, b) = 0 and degree <= N, i.e. the result of
    rewriting uv -> f.
    """

    def __init__(self, hyp: Hypersurface, N: int, lift_margin: int | None = None):
        if N < 0:
            raise ValueError("truncation order must be nonnegative")
        self.hyp = hyp
        self.N = N
        self.lift_margin = lift_margin
        self.vars = hyp.ambient_vars
        self.field = hyp.field
        self.monomials = monomials_upto(len(self.vars), N)
        self._build()

    def _priority(self, e) -> tuple:
        if "u" in self.vars and "v" in self.vars:
            k = min(e[self.vars.index("u")], e[self.vars.index("v")])
        else:
            k = 0
        # uv-divisible first, lower degree first, higher uv-power first
        return (0 if k else 1, sum(e), -k, e)

    def _build(self):
        order = sorted(self.monomials, key=self._priority)
        self._col = {e: i for i, e in enumerate(order)}
        self._order = order
        h = self.hyp.h
        vecs = []
        for mono in monomials_upto(len(self.vars), max(-1, self.N - int(h.ord()))):
            vec = {}
            for e, c in h.terms.items():
                t = tuple(a + b for a, b in zip(e, mono))
                if sum(t) <= self.N:
                    vec[self._col[t]] = c
            vecs.append(vec)
        self._rref = rref(vecs, self.field)
        pivots = set(self._rref)
        self.basis = [e for e in order if self._col[e] not in pivots]
        self.basis.sort(key=lambda e: (sum(e), tuple(-a for a in e)))

    @property
    def dim(self) -> int:
        return len(self.basis)

    def normal_form(self, p: Poly) -> Poly:
        p = p.embed(self.vars) if p.vars != self.vars else p
        vec = {self._col[e]: c for e, c in p.terms.items() if sum(e) <= self.N}
        for piv in sorted(set(vec) & set(self._rref)):
            a = vec.get(piv)
            if a:
                for k, c in self._rref[piv].items():
                    s = vec.get(k, 0) - a * c
                    if s:
                        vec[k] = s
                    else:
                        vec.pop(k, None)
        return Poly(self.vars, {self._order[k]: c for k, c in vec.items()}, self.field)

    def mul(self, a: Poly, b: Poly) -> Poly:
        return self.normal_form(a.embed(self.vars).mul(b.embed(self.vars), self.N))

    def module_dim(self, mf: MatrixFactorization) -> int:
        """dim_K of coker(mf) tensor R/m^(N+1)."""
        P = mf.presentation()
        k = len(P)
        monos = self.monomials
        idx = {e: i for i, e in enumerate(monos)}
        n = len(monos)
        vecs = []
        for j in range(k):
            for mono in monos:
                vec = {}
                for i in range(k):
                    for e, c in P[i][j].terms.items():
                        t = tuple(a + b for a, b in zip(e, mono))
                        if sum(t) <= self.N:
                            vec[i * n + idx[t]] = c
                vecs.append(vec)
        return k * n - rank(vecs, self.field)


# ---------------------------------------------------------------------------
# Polynomial-matrix linear operators on free modules
# ---------------------------------------------------------------------------


class PolyOp:
    """S-linear map S^n_in -> S^n_out as a sparse matrix of polynomials."""

    def __init__(self, n_out: int, n_in: int):
        self.n_out = n_out
        self.n_in = n_in
        self.cols: list[dict[int, Poly]] = [dict() for _ in range(n_in)]

    def add(self, o: int, i: int, p: Poly):
        if p.is_zero():
            return
        cur = self.cols[i].get(o)
        q = p if cur is None else cur + p
        if q.is_zero():
            self.cols[i].pop(o, None)
        else:
            self.cols[i][o] = q

    def place(self, other: "PolyOp", out_off: int, in_off: int, sign: int = 1):
        for i, col in enumerate(other.cols):
            for o, p in col.items():
                self.add(o + out_off, i + in_off, p if sign == 1 else -p)
        return self

    def max_degree(self) -> int:
        return max((p.degree() for col in self.cols for p in col.values()), default=0)

    def min_order(self) -> int:
        return min((int(p.ord()) for col in self.cols for p in col.values()), default=0)

    def truncated_columns(self, monos_in, monos_out_index, n_mono_out, deg_out):
        """Images of the basis vectors e_i * mono, truncated at deg_out."""
        # exponents packed in base deg_out + 1: no carries below the degree cap
        base = deg_out + 1

        def pack(e):
            code = 0
            for a in reversed(e):
                code = code * base + a
            return code

        slot = {pack(e): k for e, k in monos_out_index.items()}
        packed_in = [(sum(m), pack(m)) for m in monos_in]
        out = []
        for col in self.cols:
            terms = [(sum(e), pack(e), o * n_mono_out, _compact(c))
                     for o, p in col.items() for e, c in p.terms.items()]
            terms.sort(key=lambda t: t[0])
            for dm, cm in packed_in:
                room = deg_out - dm
                vec: dict = {}
                for de, ce, off, c in terms:
                    if de > room:
                        break
                    k = off + slot[ce + cm]
                    s = vec.get(k)
                    vec[k] = c if s is None else s + c
                out.append({k: c for k, c in vec.items() if c != 0})
        return out


def _compact(c):
    """Integral Fractions become ints, the fast path of the Q elimination."""
    if isinstance(c, Fraction) and c.denominator == 1:
        return c.numerator
    return c


def left_mult(A: Matrix, q: int, s: int) -> PolyOp:
    """f -> A f on Mat_{q x s}, A of shape p x q; flattening row-major."""
    p = len(A)
    op = PolyOp(p * s, q * s)
    for i in range(p):
        for l in range(q):
            a = A[i][l]
            if a.is_zero():
                continue
            for c in range(s):
                op.add(i * s + c, l * s + c, a)
    return op


def right_mult(B: Matrix, q: int, s: int) -> PolyOp:
    """f -> f B on Mat_{q x s}, B of shape s x t."""
    t = len(B[0])
    op = PolyOp(q * t, q * s)
    for r in range(q):
        for l in range(s):
            for j in range(t):
                b = B[l][j]
                if not b.is_zero():
                    op.add(r * t + j, r * s + l, b)
    return op


@dataclass
class ComplexData:
    """A -> F -> D-target with D o A = 0; F is the space whose cohomology we want."""

    A: PolyOp
    D: PolyOp
    nvars: int
    field: Field
    blocks: tuple[tuple[int, int], ...] = ()  # (rows, cols) of matrix blocks of F


def hom_complex(X: MatrixFactorization, Y: MatrixFactorization, degree: int) -> ComplexData:
    """Hom complex of factorizations, centred in the given degree (0 or 1)."""
    if X.hyp != Y.hyp:
        raise HomologyError("hypersurface mismatch")
    PX, QX = X.column_pair()
    PY, QY = Y.column_pair()
    kx, ky = len(PX), len(PY)
    m = kx * ky
    # degree 0 -> 1
    d0 = PolyOp(2 * m, 2 * m)
    d0.place(left_mult(QY, ky, kx), 0, 0)
    d0.place(right_mult(QX, ky, kx), 0, m, -1)
    d0.place(left_mult(PY, ky, kx), m, m)
    d0.place(right_mult(PX, ky, kx), m, 0, -1)
    # degree 1 -> 0
    d1 = PolyOp(2 * m, 2 * m)
    d1.place(left_mult(PY, ky, kx), 0, 0)
    d1.place(right_mult(QX, ky, kx), 0, m)
    d1.place(left_mult(QY, ky, kx), m, m)
    d1.place(right_mult(PX, ky, kx), m, 0)
    nv = len(X.hyp.ambient_vars)
    blocks = ((ky, kx), (ky, kx))
    if degree % 2 == 1:
        return ComplexData(d0, d1, nv, X.hyp.field, blocks)
    return ComplexData(d1, d0, nv, X.hyp.field, blocks)


def presentation_complex(M: MatrixFactorization, Nn: MatrixFactorization) -> ComplexData:
    """gamma -> (P_N gamma, gamma P_M) -> beta P_M - P_N alpha."""
    if M.hyp != Nn.hyp:
        raise HomologyError("hypersurface mismatch")
    PM, PN = M.presentation(), Nn.presentation()
    km, kn = len(PM), len(PN)
    m = km * kn
    A = PolyOp(2 * m, m)
    A.place(left_mult(PN, kn, km), 0, 0)
    A.place(right_mult(PM, kn, km), m, 0)
    D = PolyOp(m, 2 * m)
    D.place(right_mult(PM, kn, km), 0, 0)
    D.place(left_mult(PN, kn, km), 0, m, -1)
    return ComplexData(A, D, len(M.hyp.ambient_vars), M.hyp.field, ((kn, km), (kn, km)))


# ---------------------------------------------------------------------------
# Truncated cohomology
# ---------------------------------------------------------------------------


_MONO_CACHE: dict = {}


def _monos(nvars: int, d: int):
    key = (nvars, d)
    if key not in _MONO_CACHE:
        ms = monomials_upto(nvars, d)
        _MONO_CACHE[key] = (ms, {e: i for i, e in enumerate(ms)})
    return _MONO_CACHE[key]


def _kernel_rows(D: PolyOp, nvars: int, L: int):
    """Rows of D truncated at order L: constraints on coordinates of degree <= L."""
    monos, index = _monos(nvars, L)
    n = len(monos)
    cols = D.truncated_columns(monos, index, n, L)
    rows: dict[int, dict] = {}
    for ci, vec in enumerate(cols):
        for r, c in vec.items():
            rows.setdefault(r, {})[ci] = c
    return [rows[r] for r in sorted(rows)], n


def _image_vectors(A: PolyOp, nvars: int, N: int):
    monos, index = _monos(nvars, N)
    src = [m for m in monos if sum(m) <= N]
    return A.truncated_columns(src, index, len(monos), N)


def _projections(D: PolyOp, nvars: int, orders: Sequence[int], L: int, field: Field):
    """For each N in ``orders``: residual constraints cutting out pi_N(ker D at
    order L) in order-N coordinates, the number of order-N coordinates, and
    the rank of the residual.

    Columns are eliminated from the top degree down, so each order reuses the
    residual system of the next higher one; ranks chain the same way.
    """
    rows, nL = _kernel_rows(D, nvars, L)
    Ns = sorted(orders, reverse=True)
    residual, gained = {}, {}
    upper = nL
    for k, N in enumerate(Ns):
        nN = len(_monos(nvars, N)[0])
        high = {e * nL + j for e in range(D.n_in) for j in range(nN, upper)}
        gained[N], rows = eliminate_columns(rows, high, field, skip_high_blocks=k == 0)
        residual[N] = rows
        upper = nN
    ranks = {Ns[-1]: rank(residual[Ns[-1]], field)}
    for hi, lo in reversed(list(zip(Ns, Ns[1:]))):
        ranks[hi] = ranks[lo] + gained[lo]
    out = {}
    for N in Ns:
        nN = len(_monos(nvars, N)[0])
        remap = [{(c // nL) * nN + (c % nL): v for c, v in r.items()} for r in residual[N]]
        out[N] = (remap, D.n_in * nN, ranks[N])
    return out


def resolve_margin(cx: ComplexData, lift_margin: int | None) -> int:
    """Explicit margin, or the default max(2, 2(d - 1)) for D of top degree d.

    A fixed margin leaves spurious top-order cycles once D has entries of
    degree 3 or more; the default is the smallest rule that agrees with much
    larger margins on the catalog sweep in scripts/margin_sweep.py.
    """
    if lift_margin is not None:
        return lift_margin
    return max(LIFT_MARGIN, 2 * (cx.D.max_degree() - 1))


def cohomology_dims(cx: ComplexData, orders: Sequence[int],
                    lift_margin: int | None = None) -> dict[int, int]:
    """dim_K H_N for each order, kernels lifted to max(orders) + margin."""
    L = max(orders) + resolve_margin(cx, lift_margin)
    proj = _projections(cx.D, cx.nvars, orders, L, cx.field)
    image = _image_ranks(cx.A, cx.nvars, orders, cx.field)
    return {N: proj[N][1] - proj[N][2] - image[N] for N in orders}


def _image_ranks(A: PolyOp, nvars: int, orders: Sequence[int], field: Field) -> dict[int, int]:
    """rank B_N for each order.

    With A in m, B_N is the degree <= N projection of B_max, so one staged
    elimination (degree <= N_1 columns, then the next band, ...) gives all ranks.
    """
    if A.min_order() < 1:
        return {N: rank(_image_vectors(A, nvars, N), field) for N in orders}
    top = max(orders)
    n = len(_monos(nvars, top)[0])
    rows = _image_vectors(A, nvars, top)
    out, total, lower = {}, 0, 0
    for N in sorted(orders):
        nN = len(_monos(nvars, N)[0])
        band = {o * n + k for o in range(A.n_out) for k in range(lower, nN)}
        piv, rows = eliminate_columns(rows, band, field)
        total += piv
        out[N] = total
        lower = nN
    return out


def cohomology_dim(cx: ComplexData, N: int, lift_margin: int | None = None) -> int:
    """dim_K H_N of the complex (rank-only computation)."""
    return cohomology_dims(cx, [N], lift_margin)[N]


class QuotientSpace:
    """Z_N / B_N with a linear reduction modulo B_N and quotient coordinates."""

    def __init__(self, z_basis: list[dict], b_vectors: list[dict], field: Field):
        self.field = field
        self.B = rref(b_vectors, field)
        reduced = [self.reduce(z) for z in z_basis]
        self.Q = rref(reduced, field)
        self.pivots = sorted(self.Q)
        self.z_basis = z_basis

    def reduce(self, v: dict) -> dict:
        v = {k: self.field(c) for k, c in v.items() if c != 0}
        for p in [k for k in v if k in self.B]:
            a = v.get(p)
            if not a:
                continue
            for k, c in self.B[p].items():
                s = v.get(k, 0) - a * c
                if s != 0:
                    v[k] = s
                else:
                    v.pop(k, None)
        return v

    @property
    def dim(self) -> int:
        return len(self.Q)

    @property
    def dim_b(self) -> int:
        return len(self.B)

    def basis(self) -> list[dict]:
        """Representatives of a basis of the quotient (reduced modulo B)."""
        return [self.Q[p] for p in self.pivots]

    def coords(self, v: dict) -> list:
        """Coordinates in :meth:`basis`; raises if v is not in Z + B."""
        w = self.reduce(v)
        coeffs = [w.get(p, self.field.zero()) for p in self.pivots]
        for p, a in zip(self.pivots, coeffs):
            if a:
                for k, c in self.Q[p].items():
                    s = w.get(k, 0) - a * c
                    if s != 0:
                        w[k] = s
                    else:
                        w.pop(k, None)
        if w:
            raise HomologyError("vector is not a cycle modulo the truncation")
        return coeffs

    def coord_vec(self, v: dict) -> dict:
        return {i: c for i, c in enumerate(self.coords(v)) if c != 0}


def truncated_cohomologies(cx: ComplexData, orders: Sequence[int],
                            lift_margin: int | None = None) -> dict[int, QuotientSpace]:
    """Explicit Z_N / B_N for each order (projected lifted kernel modulo truncated image)."""
    L = max(orders) + resolve_margin(cx, lift_margin)
    proj = _projections(cx.D, cx.nvars, orders, L, cx.field)
    out = {}
    for N in orders:
        residual, n_low, _ = proj[N]
        z = kernel_basis(residual, range(n_low), cx.field)
        out[N] = QuotientSpace(z, _image_vectors(cx.A, cx.nvars, N), cx.field)
    return out


def truncated_cohomology(cx: ComplexData, N: int, lift_margin: int | None = None) -> QuotientSpace:
    return truncated_cohomologies(cx, [N], lift_margin)[N]


def multiply_by_monomial(v: dict, e, nvars: int, N: int) -> dict:
    monos, index = _monos(nvars, N)
    n = len(monos)
    out = {}
    for k, c in v.items():
        block, mi = divmod(k, n)
        t = tuple(a + b for a, b in zip(monos[mi], e))
        if sum(t) <= N:
            out[block * n + index[t]] = c
    return out


def _unit_exponents(nvars: int):
    return [tuple(1 if j == i else 0 for j in range(nvars)) for i in range(nvars)]


# ---------------------------------------------------------------------------
# Ext
# ---------------------------------------------------------------------------


@dataclass
class ExtResult:
    i: int
    dims: dict[int, int]
    verdict: str  # "Stabilized" | "Growing" | "Inconclusive"
    value: int | None  # stabilized dimension or growth slope
    field: str
    hypersurface: str
    spaces: dict[int, QuotientSpace] = dc_field(default_factory=dict, repr=False)
    nvars: int = 4

    @property
    def stabilized(self) -> bool:
        return self.verdict == "Stabilized"

    def describe(self) -> str:
        if self.verdict == "Stabilized":
            return f"Stabilized({self.value})"
        if self.verdict == "Growing":
            return f"Growing(slope {self.value})"
        return "Inconclusive(max order reached)"

    def to_json(self) -> dict:
        return {"i": self.i, "dims": {str(k): v for k, v in sorted(self.dims.items())},
                "verdict": self.describe(), "field": self.field,
                "hypersurface": self.hypersurface}


def classify_ladder(dims: Sequence[int]) -> tuple[str, int | None]:
    """Verdict from the last three entries of an order ladder."""
    if len(dims) < 3:
        return "Inconclusive", None
    a, b, c = dims[-3:]
    if a == b == c:
        return "Stabilized", a
    if a < b < c and b - a == c - b:
        return "Growing", b - a
    return "Inconclusive", None


def ext_dim(M: MatrixFactorization, Nn: MatrixFactorization, i: int,
            orders: Sequence[int] = DEFAULT_ORDERS, lift_margin: int | None = None,
            keep_spaces: bool = False) -> ExtResult:
    """Ext^i_R(coker M, coker Nn) at each truncation order, with a verdict.

    Ext^i is read from the 2-periodic Hom complex: odd i in degree 1, even i
    in degree 0.  Free summands have vanishing Ext and are short-circuited.
    Kernels at every order are lifted to max(orders) + margin, see
    :func:`resolve_margin`.
    """
    if i < 1:
        raise ValueError("Ext degree must be >= 1")
    orders = list(orders)
    if len(orders) < 3 or any(b <= a for a, b in zip(orders, orders[1:])):
        raise ValueError("orders must be an increasing list of at least three entries")
    if M.hyp != Nn.hyp:
        raise HomologyError("hypersurface mismatch")
    dims, spaces = {}, {}
    if M.free or Nn.free:
        dims = {N: 0 for N in orders}
    else:
        cx = hom_complex(M, Nn, i % 2)
        if keep_spaces:
            spaces = truncated_cohomologies(cx, orders, lift_margin)
            dims = {N: spaces[N].dim for N in orders}
        else:
            dims = cohomology_dims(cx, orders, lift_margin)
    verdict, value = classify_ladder([dims[N] for N in orders])
    return ExtResult(i, dims, verdict, value, str(M.hyp.field), str(M.hyp.h), spaces,
                     len(M.hyp.ambient_vars))


def _socle(q: QuotientSpace, nvars: int, N: int) -> list[dict]:
    """Representatives of {h in H_N : m h = 0}."""
    basis = q.basis()
    if not basis:
        return []
    rows: dict = {}
    for k, z in enumerate(basis):
        for s, e in enumerate(_unit_exponents(nvars)):
            w = q.reduce(multiply_by_monomial(z, e, nvars, N))
            for coord, c in w.items():
                rows.setdefault((s, coord), {})[k] = c
    ker = kernel_basis(list(rows.values()), range(len(basis)), q.field)
    out = []
    for vec in ker:
        acc: dict = {}
        for k, c in vec.items():
            for coord, a in basis[k].items():
                acc[coord] = acc.get(coord, 0) + c * a
        out.append({k: c for k, c in acc.items() if c != 0})
    return out


def _truncate_vec(v: dict, nvars: int, N_from: int, N_to: int) -> dict:
    monos_from, _ = _monos(nvars, N_from)
    _, index_to = _monos(nvars, N_to)
    n_from, n_to = len(monos_from), len(index_to)
    out = {}
    for k, c in v.items():
        block, mi = divmod(k, n_from)
        e = monos_from[mi]
        if sum(e) <= N_to:
            out[block * n_to + index_to[e]] = c
    return out


INCONCLUSIVE = "Experimental-Inconclusive"


def fl_torsion_dim(ext: ExtResult, N: int | None = None) -> int | str:
    """Experimental estimate of the finite-length part of an Ext module.

    Uses orders N and N+1 from ``ext.spaces`` (call ext_dim with
    ``keep_spaces=True``).  If truncation H_{N+1} -> H_N is an isomorphism
    the whole module is finite length and its dimension is returned.
    Otherwise the socle elements of H_N that are images of socle elements of
    H_{N+1} are counted; a truncation artifact such as y^N in K[[y]]/(y^(N+1))
    does not lift to the socle one order up.  Mixed cases are inconclusive.
    """
    orders = sorted(ext.spaces)
    if N is None:
        pairs = [(a, b) for a, b in zip(orders, orders[1:]) if b == a + 1]
        if not pairs:
            raise ValueError("need spaces at two consecutive orders")
        N = pairs[-1][0]
    if N not in ext.spaces or N + 1 not in ext.spaces:
        raise ValueError(f"spaces at orders {N} and {N + 1} are required")
    lo, hi = ext.spaces[N], ext.spaces[N + 1]
    nv = ext.nvars
    images = Echelon(lo.field)
    for z in hi.basis():
        images.add(lo.reduce(_truncate_vec(z, nv, N + 1, N)))
    if lo.dim == hi.dim and images.dim == lo.dim:
        return lo.dim
    soc_lo = [lo.reduce(v) for v in _socle(lo, nv, N)]
    soc_hi = [lo.reduce(_truncate_vec(v, nv, N + 1, N)) for v in _socle(hi, nv, N + 1)]
    a, b = Echelon(lo.field), Echelon(lo.field)
    da, db = a.extend(soc_lo), b.extend(soc_hi)
    both = a.copy()
    dsum = da + both.extend(soc_hi)
    stable = da + db - dsum
    if stable == 0:
        return 0
    return INCONCLUSIVE


# ---------------------------------------------------------------------------
# Hom spaces and endomorphism algebras
# ---------------------------------------------------------------------------


@dataclass
class HomSpace:
    source: MatrixFactorization
    target: MatrixFactorization
    N: int
    space: QuotientSpace
    nvars: int

    @property
    def dim(self) -> int:
        return self.space.dim

    def basis(self) -> list[dict]:
        return self.space.basis()

    def matrices(self, v: dict) -> tuple[Matrix, Matrix]:
        """(beta, alpha) of a vector in this space's coordinates."""
        kn, km = self.target.rank, self.source.rank
        monos, _ = _monos(self.nvars, self.N)
        n = len(monos)
        vars = self.source.hyp.ambient_vars
        field = self.source.hyp.field
        terms = [dict() for _ in range(2 * kn * km)]
        for k, c in v.items():
            entry, mi = divmod(k, n)
            terms[entry][monos[mi]] = c
        polys = [Poly(vars, t, field) for t in terms]
        beta = tuple(tuple(polys[r * km + c] for c in range(km)) for r in range(kn))
        off = kn * km
        alpha = tuple(tuple(polys[off + r * km + c] for c in range(km)) for r in range(kn))
        return beta, alpha

    def vector(self, beta: Matrix, alpha: Matrix) -> dict:
        kn, km = self.target.rank, self.source.rank
        _, index = _monos(self.nvars, self.N)
        n = len(index)
        out = {}
        for blk, mat_ in enumerate((beta, alpha)):
            for r in range(kn):
                for c in range(km):
                    base = (blk * kn * km + r * km + c) * n
                    for e, a in mat_[r][c].terms.items():
                        if sum(e) <= self.N:
                            out[base + index[e]] = a
        return out

    def identity(self) -> dict:
        if self.source is not self.target and self.source != self.target:
            raise HomologyError("identity needs source == target")
        k = self.source.rank
        vars = self.source.hyp.ambient_vars
        one = Poly.const(vars, 1, self.source.hyp.field)
        zero = one * 0
        eye = tuple(tuple(one if i == j else zero for j in range(k)) for i in range(k))
        return self.vector(eye, eye)


def hom_space(M: MatrixFactorization, Nn: MatrixFactorization, T: TruncatedRing | int,
              lift_margin: int | None = None) -> HomSpace:
    """Hom_R(coker M, coker Nn) tensor R/m^(N+1), with an explicit basis of
    matrix pairs (beta, alpha) satisfying beta P_M = P_N alpha."""
    if isinstance(T, TruncatedRing):
        N = T.N
        margin = T.lift_margin if lift_margin is None else lift_margin
        if T.hyp != M.hyp:
            raise HomologyError("truncated ring and modules have different hypersurfaces")
    else:
        N, margin = T, lift_margin
    cx = presentation_complex(M, Nn)
    q = truncated_cohomology(cx, N, margin)
    return HomSpace(M, Nn, N, q, cx.nvars)


def stable_hom_dim(M: MatrixFactorization, Nn: MatrixFactorization, N: int,
                   lift_margin: int | None = None) -> int:
    """Hom modulo maps factoring through free modules (Ext^2 = Ext^0 stably)."""
    if M.free or Nn.free:
        return 0
    return cohomology_dim(hom_complex(M, Nn, 0), N, lift_margin)


def compose(g: HomSpace, gv: dict, f: HomSpace, fv: dict, target: HomSpace) -> dict:
    """Vector of g o f in ``target`` coordinates (f: A -> B, g: B -> C)."""
    bg, ag = g.matrices(gv)
    bf, af = f.matrices(fv)
    N = target.N
    return target.vector(matmul(bg, bf, N), matmul(ag, af, N))


class EndAlgebra:
    """End_R(M_1 + ... + M_k) tensor R/m^(N+1) as blocks Hom(M_i, M_j).

    Elements are dicts ``{(i, j): coordinate dict}`` for the block of maps
    M_i -> M_j; multiplication ``a * b`` means "first b, then a".
    """

    def __init__(self, summands: Sequence[MatrixFactorization], T: TruncatedRing | int,
                 lift_margin: int | None = None, jobs: int = 1):
        hyps = {s.hyp for s in summands}
        if len(hyps) != 1:
            raise HomologyError("summands must share a hypersurface")
        self.summands = list(summands)
        self.N = T.N if isinstance(T, TruncatedRing) else T
        margin = lift_margin
        if isinstance(T, TruncatedRing) and lift_margin is None:
            margin = T.lift_margin
        k = len(summands)
        pairs = [(i, j) for i in range(k) for j in range(k)]
        results = _parallel_map(_hom_job, [(summands[i], summands[j], self.N, margin)
                                           for i, j in pairs], jobs)
        self.blocks: dict[tuple[int, int], HomSpace] = dict(zip(pairs, results))

    @property
    def dim(self) -> int:
        return sum(b.dim for b in self.blocks.values())

    def block_dims(self) -> list[list[int]]:
        k = len(self.summands)
        return [[self.blocks[(i, j)].dim for j in range(k)] for i in range(k)]

    def basis(self) -> list[tuple[tuple[int, int], int]]:
        return [(key, t) for key in sorted(self.blocks) for t in range(self.blocks[key].dim)]

    def element(self, key, t) -> dict:
        return {key: {t: QQ.one() if self.blocks[key].space.field.is_rational
                      else self.blocks[key].space.field.one()}}

    def identity(self) -> dict:
        out = {}
        for i in range(len(self.summands)):
            hs = self.blocks[(i, i)]
            out[(i, i)] = hs.space.coord_vec(hs.identity())
        return out

    def _rep(self, key, coords: dict) -> dict:
        hs = self.blocks[key]
        basis = hs.basis()
        acc: dict = {}
        for t, c in coords.items():
            for k, a in basis[t].items():
                acc[k] = acc.get(k, 0) + c * a
        return {k: c for k, c in acc.items() if c != 0}

    def multiply(self, a: dict, b: dict) -> dict:
        out: dict = {}
        for (i, j), cb in b.items():
            for (j2, l), ca in a.items():
                if j2 != j:
                    continue
                g, f = self.blocks[(j, l)], self.blocks[(i, j)]
                tgt = self.blocks[(i, l)]
                v = compose(g, self._rep((j, l), ca), f, self._rep((i, j), cb), tgt)
                cv = tgt.space.coord_vec(v)
                cur = out.setdefault((i, l), {})
                for t, c in cv.items():
                    s = cur.get(t, 0) + c
                    if s != 0:
                        cur[t] = s
                    else:
                        cur.pop(t, None)
        return {k: v for k, v in out.items() if v}


def end_algebra(summands: Sequence[MatrixFactorization], T: TruncatedRing | int,
                lift_margin: int | None = None, jobs: int = 1) -> EndAlgebra:
    return EndAlgebra(summands, T, lift_margin, jobs)


def _hom_job(args):
    M, Nn, N, margin = args
    return hom_space(M, Nn, N, margin)


def _parallel_map(fn, items: list, jobs: int) -> list:
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# Gabriel quiver from rad / rad^2
# ---------------------------------------------------------------------------


class NonSplitError(HomologyError):
    """A vertex whose local endomorphism ring does not have residue field K."""


@dataclass
class QuiverData:
    labels: list[str]
    arrows: list[list[int]]  # arrows[i][j]: irreducible maps M_i -> M_j (loops on diagonal)
    order: int
    block_dims: list[list[int]]
    generators: list[list[int]]  # minimal R-module generators of Hom(M_i, M_j)


def _span_dim(vectors: Iterable[dict], field: Field) -> Echelon:
    e = Echelon(field)
    e.extend(vectors)
    return e


def radical_quiver(alg: EndAlgebra, labels: Sequence[str] | None = None) -> QuiverData:
    """Arrow counts dim e_j (rad/rad^2) e_i for End of a basic sum of rank-one
    modules.  The diagonal of the result counts loops."""
    k = len(alg.summands)
    labels = list(labels) if labels else [s.label or f"M{i}" for i, s in enumerate(alg.summands)]
    nv = len(alg.summands[0].hyp.ambient_vars)
    N = alg.N
    units = _unit_exponents(nv)
    field = alg.summands[0].hyp.field
    mspan: dict = {}
    gens: dict = {}
    for key, hs in alg.blocks.items():
        basis = hs.basis()
        m_vecs = [hs.space.coord_vec(multiply_by_monomial(z, e, nv, N))
                  for z in basis for e in units]
        ech = _span_dim(m_vecs, field)
        chosen = []
        probe = ech.copy()
        for t in range(len(basis)):
            if probe.add({t: field.one()}):
                chosen.append(basis[t])
        mspan[key] = (ech, m_vecs)
        gens[key] = chosen
    for i in range(k):
        hs = alg.blocks[(i, i)]
        ech, _ = mspan[(i, i)]
        ident = hs.space.coord_vec(hs.identity())
        if hs.dim - ech.dim != 1 or ech.contains(ident):
            raise NonSplitError(
                f"End({labels[i]}) modulo m is not the base field; quiver not defined")
    arrows = [[0] * k for _ in range(k)]
    for i in range(k):
        for j in range(k):
            tgt = alg.blocks[(i, j)]
            comps = []
            for l in range(k):
                if l in (i, j):
                    continue
                f_hs, g_hs = alg.blocks[(i, l)], alg.blocks[(l, j)]
                for g in gens[(l, j)]:
                    for f in gens[(i, l)]:
                        comps.append(tgt.space.coord_vec(compose(g_hs, g, f_hs, f, tgt)))
            if i != j:
                ech = mspan[(i, j)][0].copy()
                ech.extend(comps)
                arrows[i][j] = tgt.dim - ech.dim
            else:
                rad_dim = mspan[(i, i)][0].dim
                basis = tgt.basis()
                m2 = [tgt.space.coord_vec(multiply_by_monomial(
                    multiply_by_monomial(z, e1, nv, N), e2, nv, N))
                    for z in basis for a, e1 in enumerate(units) for e2 in units[a:]]
                ech = _span_dim(m2, field)
                ech.extend(comps)
                arrows[i][i] = rad_dim - ech.dim
    block_dims = alg.block_dims()
    generators = [[len(gens[(i, j)]) for j in range(k)] for i in range(k)]
    return QuiverData(labels, arrows, N, block_dims, generators)
