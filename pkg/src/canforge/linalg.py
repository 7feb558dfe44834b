"""Sparse exact linear algebra over Q and small number fields.

Vectors and matrix rows are ``dict[int, value]`` with no stored zeros.  Over
Q every row is kept as a primitive integer vector and combined fraction-free
(``p*r - a*s`` followed by division by the content), which keeps entries
small for the integer-coefficient systems built by the homology layer.
Over an extension field rows hold field elements and pivots are divided out.

Rank computations pick pivots Markowitz-style (shortest row, then the pivot
column of smallest count); ties break on the lowest (row, column) index so
results never depend on dict iteration order.
"""

from __future__ import annotations

import heapq
import math
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from .arith import QQ, Field

Vector = dict


class _IntOps:
    """Fraction-free integer row arithmetic (field Q)."""

    @staticmethod
    def prepare(vec: dict) -> dict:
        if not vec:
            return {}
        if all(type(c) is int for c in vec.values()):
            return _IntOps.primitive({k: c for k, c in vec.items() if c})
        den = 1
        for c in vec.values():
            if isinstance(c, Fraction) and c.denominator != 1:
                den = math.lcm(den, c.denominator)
        if den == 1:
            out = {k: int(c) for k, c in vec.items() if c}
        else:
            out = {k: int(c * den) for k, c in vec.items() if c}
        return _IntOps.primitive(out)

    @staticmethod
    def primitive(vec: dict) -> dict:
        if not vec:
            return vec
        g = math.gcd(*vec.values())
        if g > 1:
            return {k: c // g for k, c in vec.items()}
        return vec

    @staticmethod
    def combine(vec: dict, row: dict, col: int) -> dict:
        """Eliminate ``col`` from ``vec`` using ``row``; returns a new vector."""
        a = vec[col]
        p = row[col]
        g = math.gcd(a, p)
        a //= g
        p //= g
        out = {k: p * c for k, c in vec.items()} if p != 1 else dict(vec)
        for k, c in row.items():
            s = out.get(k, 0) - a * c
            if s:
                out[k] = s
            else:
                out.pop(k, None)
        return _IntOps.primitive(out)

    @staticmethod
    def to_field(vec: dict, pivot: int) -> dict:
        p = vec[pivot]
        return {k: Fraction(c, p) for k, c in vec.items()}


class _FieldOps:
    """Division-based row arithmetic for extension fields."""

    def __init__(self, field: Field):
        self.field = field

    def prepare(self, vec: dict) -> dict:
        return {k: self.field(c) for k, c in vec.items() if c != 0}

    def primitive(self, vec: dict) -> dict:
        return vec

    def combine(self, vec: dict, row: dict, col: int) -> dict:
        f = vec[col] / row[col]
        out = dict(vec)
        for k, c in row.items():
            s = out.get(k, 0) - f * c
            if s != 0:
                out[k] = s
            else:
                out.pop(k, None)
        return out

    def to_field(self, vec: dict, pivot: int) -> dict:
        p = vec[pivot]
        return {k: c / p for k, c in vec.items()}


def _ops(field: Field):
    return _IntOps if field.is_rational else _FieldOps(field)


# ---------------------------------------------------------------------------
# Markowitz elimination
# ---------------------------------------------------------------------------


def _eliminate(rows: list[dict], ops, eligible: Callable[[int], bool] | None):
    """Gaussian elimination restricted to eligible pivot columns.

    Returns ``(pivots, residual)`` where ``pivots`` counts pivots taken and
    ``residual`` lists the rows left with no eligible column.
    """
    rows = [r for r in rows if r]
    col_rows: dict[int, set[int]] = {}
    for i, r in enumerate(rows):
        for c in r:
            col_rows.setdefault(c, set()).add(i)
    heap = [(len(r), i) for i, r in enumerate(rows)]
    heapq.heapify(heap)
    alive = set(range(len(rows)))
    residual: list[int] = []
    pivots = 0
    while heap:
        length, i = heapq.heappop(heap)
        if i not in alive or len(rows[i]) != length:
            continue
        row = rows[i]
        if not row:
            alive.discard(i)
            continue
        cands = [c for c in row if eligible is None or eligible(c)]
        if not cands:
            alive.discard(i)
            residual.append(i)
            for c in row:
                col_rows[c].discard(i)
            continue
        c = min(cands, key=lambda k: (len(col_rows[k]), k))
        alive.discard(i)
        for k in row:
            col_rows[k].discard(i)
        pivots += 1
        for j in sorted(col_rows[c]):
            old = rows[j]
            new = ops.combine(old, row, c)
            for k in old:
                if k not in new:
                    col_rows[k].discard(j)
            for k in new:
                if k not in old:
                    col_rows.setdefault(k, set()).add(j)
            rows[j] = new
            heapq.heappush(heap, (len(new), j))
    return pivots, [rows[i] for i in sorted(residual)]


def rank(rows: Iterable[dict], field: Field = QQ) -> int:
    """Rank of the matrix whose rows are the given sparse vectors."""
    ops = _ops(field)
    prepared = [ops.prepare(r) for r in rows]
    return _eliminate(prepared, ops, None)[0]


def eliminate_columns(rows: Iterable[dict], high: set[int], field: Field = QQ,
                      skip_high_blocks: bool = False) -> tuple[int, list[dict]]:
    """Eliminate the ``high`` columns; return (pivots taken, residual rows).

    The residual rows involve only columns outside ``high`` and cut out the
    projection of the kernel onto those columns: ``(z_h, z_l)`` is in the
    kernel for some ``z_h`` iff every residual row annihilates ``z_l``, and
    rank = pivots + rank(residual).  With ``skip_high_blocks`` connected blocks
    touching no low column are dropped first (they only constrain z_h); the
    residual is unchanged but the pivot count then omits those blocks.
    """
    ops = _ops(field)
    prepared = [r for r in (ops.prepare(r) for r in rows) if r]
    if skip_high_blocks:
        keep = []
        for comp in components(prepared):
            if any(c not in high for i in comp for c in prepared[i]):
                keep.extend(comp)
        prepared = [prepared[i] for i in sorted(keep)]
    return _eliminate(prepared, ops, high.__contains__)


def components(rows: Sequence[dict]) -> list[list[int]]:
    """Connected components of the row/column incidence graph (row indices)."""
    parent = list(range(len(rows)))
    owner: dict = {}

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i, r in enumerate(rows):
        for c in r:
            j = owner.setdefault(c, i)
            if j != i:
                a, b = find(i), find(j)
                if a != b:
                    parent[max(a, b)] = min(a, b)
    groups: dict[int, list[int]] = {}
    for i in range(len(rows)):
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


# ---------------------------------------------------------------------------
# Ordered echelon forms
# ---------------------------------------------------------------------------


class Echelon:
    """Incrementally built semi-echelon basis of a subspace.

    Each stored row's pivot is its smallest column index.  ``add`` returns
    True when the vector enlarged the span.
    """

    def __init__(self, field: Field = QQ):
        self.field = field
        self.ops = _ops(field)
        self.rows: dict[int, dict] = {}

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def dim(self) -> int:
        return len(self.rows)

    def copy(self) -> "Echelon":
        e = Echelon(self.field)
        e.rows = dict(self.rows)
        return e

    def reduce(self, vec: dict) -> dict:
        v = self.ops.prepare(vec)
        if not v:
            return v
        heap = list(v)
        heapq.heapify(heap)
        seen = set(heap)
        while heap:
            c = heapq.heappop(heap)
            if c not in v:
                continue
            row = self.rows.get(c)
            if row is None:
                continue
            v = self.ops.combine(v, row, c)
            for k in row:
                if k not in seen and k in v:
                    seen.add(k)
                    heapq.heappush(heap, k)
            for k in v:
                if k not in seen:
                    seen.add(k)
                    heapq.heappush(heap, k)
        return v

    def add(self, vec: dict) -> bool:
        v = self.reduce(vec)
        if not v:
            return False
        self.rows[min(v)] = v
        return True

    def contains(self, vec: dict) -> bool:
        return not self.reduce(vec)

    def extend(self, vecs: Iterable[dict]) -> int:
        """Add vectors; return how many enlarged the span."""
        return sum(1 for v in vecs if self.add(v))

    def basis(self) -> list[dict]:
        return [self.rows[c] for c in sorted(self.rows)]


def rref(rows: Iterable[dict], field: Field = QQ) -> dict[int, dict]:
    """Reduced row echelon form: pivot column -> row with pivot entry 1."""
    ech = Echelon(field)
    ech.extend(rows)
    ops = ech.ops
    pivots = sorted(ech.rows)
    reduced: dict[int, dict] = {}
    for p in reversed(pivots):
        r = ech.rows[p]
        for q in [k for k in r if k != p and k in reduced]:
            r = ops.combine(r, reduced[q], q)
        reduced[p] = r
    return {p: ops.to_field(reduced[p], p) for p in pivots}


def kernel_basis(rows: Iterable[dict], columns: Iterable[int], field: Field = QQ) -> list[dict]:
    """Basis of {z supported on ``columns`` : row . z = 0 for every row}."""
    R = rref(rows, field)
    cols = sorted(set(columns))
    pivset = set(R)
    basis = []
    one = field.one()
    for f in cols:
        if f in pivset:
            continue
        z = {f: one}
        for p, r in R.items():
            c = r.get(f)
            if c:
                z[p] = -c
        basis.append(z)
    return basis


def solve(columns: Sequence[dict], rhs: dict, nrows: int, field: Field = QQ) -> dict | None:
    """One solution x of A x = b (A given by sparse columns), or None."""
    # rows of the augmented system [A | b]; column index len(columns) is b
    aug = len(columns)
    rows: dict[int, dict] = {}
    for j, col in enumerate(columns):
        for i, c in col.items():
            rows.setdefault(i, {})[j] = c
    for i, c in rhs.items():
        rows.setdefault(i, {})[aug] = c
    R = rref(rows.values(), field)
    if aug in R:
        return None
    return {p: r.get(aug, field.zero()) for p, r in R.items() if r.get(aug, 0) != 0}
