"""Exact coefficient fields, sparse multivariate polynomials and m-adic series.

Fields are either the rationals or a simple extension Q[t]/(p) with p monic,
irreducible and of degree at most 4.  Rational elements are ``Fraction``;
extension elements are :class:`AlgebraicNumber`.  Both support the ordinary
arithmetic operators, so polynomial code is written once for either kind.

A :class:`Poly` is an immutable map from exponent tuples to nonzero
coefficients over an ordered variable list.  Truncation is always by total
degree: "order N" means "modulo m^(N+1)".
"""

from __future__ import annotations

import ast
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

AMBIENT = ("u", "v", "x", "y")
PLANE = ("x", "y")

INFINITY = math.inf


class ParseError(ValueError):
    """Raised for malformed polynomial text; carries the 0-based offset."""

    def __init__(self, message: str, position: int | None = None):
        self.position = position
        where = f" at position {position}" if position is not None else ""
        super().__init__(f"{message}{where}")


# ---------------------------------------------------------------------------
# Fields
# ---------------------------------------------------------------------------


def _as_fraction(a) -> Fraction:
    if isinstance(a, Fraction):
        return a
    if isinstance(a, int):
        return Fraction(a)
    raise TypeError(f"cannot coerce {a!r} to a rational")


def _rational_sqrt(q: Fraction) -> Fraction | None:
    if q < 0:
        return None
    n, d = q.numerator, q.denominator
    rn, rd = math.isqrt(n), math.isqrt(d)
    if rn * rn == n and rd * rd == d:
        return Fraction(rn, rd)
    return None


@dataclass(frozen=True)
class Field:
    """Q, or Q[t]/(p) with ``minpoly`` = coefficients of p, low degree first.

    ``symbol`` is the name the generator takes in polynomial text.
    """

    minpoly: tuple[Fraction, ...] | None = None
    symbol: str = "t"

    def __post_init__(self):
        if self.minpoly is None:
            return
        p = tuple(_as_fraction(c) for c in self.minpoly)
        object.__setattr__(self, "minpoly", p)
        if len(p) < 2 or p[-1] != 1:
            raise ValueError("minimal polynomial must be monic and nonconstant")
        if len(p) - 1 > 4:
            raise ValueError("extension degree is limited to 4")
        if not _is_irreducible_over_q(p):
            raise ValueError(f"{_fmt_univariate(p, 't')} is reducible over Q")

    @property
    def degree(self) -> int:
        return 1 if self.minpoly is None else len(self.minpoly) - 1

    @property
    def is_rational(self) -> bool:
        return self.minpoly is None

    def __str__(self) -> str:
        if self.minpoly is None:
            return "Q"
        return f"Q({self.symbol}): {_fmt_univariate(self.minpoly, 't')}"

    # -- elements ----------------------------------------------------------
    def zero(self):
        return self(0)

    def one(self):
        return self(1)

    def __call__(self, a):
        """Coerce an int, Fraction or AlgebraicNumber into this field."""
        if self.minpoly is None:
            if isinstance(a, AlgebraicNumber):
                if a.is_rational():
                    return a.coeffs[0]
                raise ValueError(f"{a} is not rational")
            return _as_fraction(a)
        if isinstance(a, AlgebraicNumber):
            if a.field != self:
                raise ValueError("elements from different extensions")
            return a
        return AlgebraicNumber.from_rational(self, _as_fraction(a))

    def gen(self):
        if self.minpoly is None:
            raise ValueError("Q has no extension generator")
        c = [Fraction(0)] * self.degree
        c[1 % self.degree] = Fraction(1)
        return AlgebraicNumber(self, tuple(c))

    def is_zero(self, a) -> bool:
        return a == 0

    def sqrt(self, a):
        """Return a square root of ``a`` in this field, or None if none exists.

        Over an extension this is decided for rational ``a`` in general and for
        arbitrary elements of extensions Q[t]/(t^2 + c).
        """
        a = self(a)
        if self.minpoly is None:
            return _rational_sqrt(a)
        if a.is_rational():
            r = a.coeffs[0]
            s = _rational_sqrt(r)
            if s is not None:
                return self(s)
            if self.degree == 2 and self.minpoly[1] == 0:
                c = self.minpoly[0]  # t^2 = -c
                s = _rational_sqrt(r / (-c))
                if s is not None:
                    return self(s) * self.gen()
            if self.degree == 2:
                return None
        if self.degree == 2 and self.minpoly[1] == 0:
            return _sqrt_quadratic_ext(self, a)
        # TODO(fields): general square roots in degree 3/4 extensions need
        # factoring z^2 - a over the extension; unsupported elements report None.
        return None


def _sqrt_quadratic_ext(K: Field, a: "AlgebraicNumber"):
    # (p + q t)^2 = p^2 - c q^2 + 2 p q t with t^2 = -c
    c = K.minpoly[0]
    A, B = a.coeffs
    if B == 0:
        s = _rational_sqrt(A)
        if s is not None:
            return K(s)
        s = _rational_sqrt(A / (-c))
        return None if s is None else K(s) * K.gen()
    # c q^4 + A q^2 - B^2/4 = 0, solve for Q = q^2
    disc = A * A + c * B * B
    r = _rational_sqrt(disc)
    if r is None:
        return None
    for Qv in ((-A + r) / (2 * c), (-A - r) / (2 * c)):
        q = _rational_sqrt(Qv)
        if q:
            p = B / (2 * q)
            return AlgebraicNumber(K, (p, q))
    return None


def _fmt_univariate(coeffs: Sequence[Fraction], var: str) -> str:
    terms = []
    for k in range(len(coeffs) - 1, -1, -1):
        c = coeffs[k]
        if c == 0:
            continue
        mono = "" if k == 0 else (var if k == 1 else f"{var}^{k}")
        terms.append(_fmt_term(c, mono))
    return _join_terms(terms)


def _is_irreducible_over_q(p: tuple[Fraction, ...]) -> bool:
    deg = len(p) - 1
    if deg == 1:
        return True
    # clear denominators for the rational root test
    den = math.lcm(*(c.denominator for c in p))
    ints = [int(c * den) for c in p]
    a0, an = ints[0], ints[-1]
    if a0 == 0:
        return False
    cands = set()
    for num in _divisors(abs(a0)):
        for d in _divisors(abs(an)):
            cands.add(Fraction(num, d))
            cands.add(Fraction(-num, d))
    for r in cands:
        if sum(c * r**k for k, c in enumerate(p)) == 0:
            return False
    if deg <= 3:
        return True
    # a quartic without rational roots may still split into two quadratics
    import sympy

    t = sympy.Symbol("t")
    expr = sum(sympy.Rational(c.numerator, c.denominator) * t**k for k, c in enumerate(p))
    return bool(sympy.Poly(expr, t, domain="QQ").is_irreducible)


def _divisors(n: int) -> list[int]:
    return [d for d in range(1, n + 1) if n % d == 0]


QQ = Field()


def gaussian_field(symbol: str = "i") -> Field:
    """Q(i) with i^2 + 1 = 0."""
    return Field((Fraction(1), Fraction(0), Fraction(1)), symbol)


_FIELD_RE = re.compile(r"^\s*Q\s*(?:\(\s*([A-Za-z_]\w*)\s*\)\s*(?::\s*(.+))?)?\s*$")


def parse_field(text: str) -> Field:
    """Parse a field descriptor: ``"Q"`` or ``"Q(i): t^2+1"``.

    The minimal polynomial may be written in ``t`` or in the symbol itself.
    ``"Q(i)"`` without a polynomial is accepted as shorthand for t^2 + 1.
    """
    m = _FIELD_RE.match(text)
    if not m:
        raise ValueError(f"unrecognised field descriptor {text!r}")
    sym, poly_text = m.group(1), m.group(2)
    if sym is None:
        return QQ
    if poly_text is None:
        if sym == "i":
            return gaussian_field("i")
        raise ValueError(f"field {text!r} needs a minimal polynomial")
    var = "t" if re.search(r"\bt\b", poly_text) else sym
    p = parse_poly(poly_text, (var,), QQ)
    coeffs = [Fraction(0)] * (p.degree() + 1)
    for (k,), c in p.terms.items():
        coeffs[k] = c
    return Field(tuple(coeffs), sym)


@dataclass(frozen=True, eq=False)
class AlgebraicNumber:
    """Element of Q[t]/(p), stored as a reduced coefficient tuple."""

    field: Field
    coeffs: tuple[Fraction, ...]

    @classmethod
    def from_rational(cls, K: Field, r: Fraction) -> "AlgebraicNumber":
        return cls(K, (r,) + (Fraction(0),) * (K.degree - 1))

    def is_rational(self) -> bool:
        return all(c == 0 for c in self.coeffs[1:])

    def _coerce(self, other):
        if isinstance(other, AlgebraicNumber):
            if other.field != self.field:
                raise ValueError("elements from different extensions")
            return other
        if isinstance(other, (int, Fraction)):
            return AlgebraicNumber.from_rational(self.field, Fraction(other))
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return AlgebraicNumber(self.field, tuple(a + b for a, b in zip(self.coeffs, o.coeffs)))

    __radd__ = __add__

    def __neg__(self):
        return AlgebraicNumber(self.field, tuple(-a for a in self.coeffs))

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self + (-o)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        d = self.field.degree
        prod = [Fraction(0)] * (2 * d - 1)
        for i, a in enumerate(self.coeffs):
            if a:
                for j, b in enumerate(o.coeffs):
                    if b:
                        prod[i + j] += a * b
        p = self.field.minpoly
        for k in range(len(prod) - 1, d - 1, -1):
            c = prod[k]
            if c:
                for j in range(d):
                    prod[k - d + j] -= c * p[j]
        return AlgebraicNumber(self.field, tuple(prod[:d]))

    __rmul__ = __mul__

    def inverse(self) -> "AlgebraicNumber":
        if self == 0:
            raise ZeroDivisionError("inverse of zero")
        # extended Euclid on univariate rational polynomials
        p = list(self.field.minpoly)
        a = _trim(list(self.coeffs))
        r0, r1 = p, a
        s0, s1 = [Fraction(0)], [Fraction(1)]
        while len(r1) > 1 or r1[0] != 0:
            q, r = _pdivmod(r0, r1)
            r0, r1 = r1, r
            s0, s1 = s1, _psub(s0, _pmul(q, s1))
            if len(r1) == 1 and r1[0] == 0:
                break
        # r0 is a nonzero constant (p irreducible)
        c = r0[0]
        inv = [x / c for x in s0]
        inv += [Fraction(0)] * (self.field.degree - len(inv))
        return AlgebraicNumber(self.field, tuple(inv[: self.field.degree]))

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self * o.inverse()

    def __rtruediv__(self, other):
        return self.inverse() * other

    def __pow__(self, k: int):
        result = AlgebraicNumber.from_rational(self.field, Fraction(1))
        base = self
        if k < 0:
            base, k = base.inverse(), -k
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __eq__(self, other):
        if isinstance(other, AlgebraicNumber):
            return self.field == other.field and self.coeffs == other.coeffs
        if isinstance(other, (int, Fraction)):
            return self.is_rational() and self.coeffs[0] == other
        return NotImplemented

    def __hash__(self):
        if self.is_rational():
            return hash(self.coeffs[0])
        return hash((self.field, self.coeffs))

    def __bool__(self):
        return any(self.coeffs)

    def __str__(self):
        return _fmt_univariate(self.coeffs, self.field.symbol)

    __repr__ = __str__


def _trim(a: list[Fraction]) -> list[Fraction]:
    while len(a) > 1 and a[-1] == 0:
        a.pop()
    return a


def _pmul(a, b):
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] += x * y
    return _trim(out)


def _psub(a, b):
    n = max(len(a), len(b))
    a = a + [Fraction(0)] * (n - len(a))
    b = b + [Fraction(0)] * (n - len(b))
    return _trim([x - y for x, y in zip(a, b)])


def _pdivmod(a, b):
    a = list(a)
    q = [Fraction(0)] * max(1, len(a) - len(b) + 1)
    while len(a) >= len(b) and not (len(a) == 1 and a[0] == 0):
        c = a[-1] / b[-1]
        k = len(a) - len(b)
        q[k] = c
        for j, bj in enumerate(b):
            a[k + j] -= c * bj
        a.pop()
        if not a:
            a = [Fraction(0)]
        _trim(a)
    return _trim(q), a


# ---------------------------------------------------------------------------
# Polynomials
# ---------------------------------------------------------------------------

Exponent = tuple[int, ...]


def _fmt_coeff(c) -> str:
    if isinstance(c, AlgebraicNumber):
        s = str(c)
        return s if _is_atomic(c) else f"({s})"
    return str(c)


def _is_atomic(c: "AlgebraicNumber") -> bool:
    return sum(1 for a in c.coeffs if a) == 1


def _fmt_term(c, mono: str) -> str:
    if not mono:
        return _fmt_coeff(c)
    if c == 1:
        return mono
    if c == -1:
        return f"-{mono}"
    return f"{_fmt_coeff(c)}*{mono}"


def _join_terms(terms: list[str]) -> str:
    if not terms:
        return "0"
    out = terms[0]
    for t in terms[1:]:
        out += f" - {t[1:]}" if t.startswith("-") else f" + {t}"
    return out


def monomials_upto(nvars: int, maxdeg: int) -> list[Exponent]:
    """All exponent tuples of total degree <= maxdeg, graded, lex within degree."""
    out: list[Exponent] = []
    for d in range(maxdeg + 1):
        out.extend(_monomials_of_degree(nvars, d))
    return out


def _monomials_of_degree(nvars: int, d: int) -> list[Exponent]:
    if nvars == 0:
        return [()] if d == 0 else []
    if nvars == 1:
        return [(d,)]
    res = []
    for a in range(d, -1, -1):
        for rest in _monomials_of_degree(nvars - 1, d - a):
            res.append((a,) + rest)
    return res


class Poly:
    """Immutable sparse polynomial over a :class:`Field`."""

    __slots__ = ("vars", "terms", "field", "_hash")

    def __init__(self, vars: Sequence[str], terms: Mapping[Exponent, object] | None = None,
                 field: Field = QQ):
        self.vars = tuple(vars)
        self.field = field
        clean = {}
        n = len(self.vars)
        for e, c in (terms or {}).items():
            if len(e) != n:
                raise ValueError(f"exponent {e} does not match variables {self.vars}")
            c = field(c)
            if c != 0:
                clean[tuple(e)] = c
        self.terms = clean
        self._hash = None

    # -- constructors --------------------------------------------------------
    @classmethod
    def _raw(cls, vars, terms, field) -> "Poly":
        p = cls.__new__(cls)
        p.vars = vars
        p.terms = terms
        p.field = field
        p._hash = None
        return p

    @classmethod
    def const(cls, vars: Sequence[str], c, field: Field = QQ) -> "Poly":
        return cls(vars, {(0,) * len(vars): c}, field)

    @classmethod
    def var(cls, vars: Sequence[str], name: str, field: Field = QQ) -> "Poly":
        vars = tuple(vars)
        e = [0] * len(vars)
        e[vars.index(name)] = 1
        return cls(vars, {tuple(e): 1}, field)

    @classmethod
    def zero(cls, vars: Sequence[str], field: Field = QQ) -> "Poly":
        return cls._raw(tuple(vars), {}, field)

    # -- basic queries -------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        return max((sum(e) for e in self.terms), default=-1)

    def constant_term(self):
        return self.terms.get((0,) * len(self.vars), self.field.zero())

    def ord(self) -> float:
        return min((sum(e) for e in self.terms), default=INFINITY)

    def lowest_form(self) -> "Poly":
        o = self.ord()
        return Poly._raw(self.vars, {e: c for e, c in self.terms.items() if sum(e) == o},
                         self.field)

    def used_vars(self) -> set[str]:
        return {v for k, v in enumerate(self.vars) if any(e[k] for e in self.terms)}

    # -- structural ----------------------------------------------------------
    def _check(self, other: "Poly"):
        if self.vars != other.vars:
            raise ValueError(f"variable mismatch {self.vars} vs {other.vars}")
        if self.field != other.field:
            raise ValueError("field mismatch")

    def _lift(self, other) -> "Poly":
        if isinstance(other, Poly):
            self._check(other)
            return other
        return Poly.const(self.vars, other, self.field)

    def embed(self, vars: Sequence[str]) -> "Poly":
        """Re-express in a larger (or reordered) variable list."""
        vars = tuple(vars)
        idx = []
        for k, v in enumerate(self.vars):
            if v not in vars:
                if any(e[k] for e in self.terms):
                    raise ValueError(f"variable {v} not in {vars}")
                idx.append(None)
            else:
                idx.append(vars.index(v))
        terms = {}
        for e, c in self.terms.items():
            ne = [0] * len(vars)
            for k, a in enumerate(e):
                if idx[k] is not None:
                    ne[idx[k]] = a
            terms[tuple(ne)] = c
        return Poly._raw(vars, terms, self.field)

    def with_field(self, field: Field) -> "Poly":
        return Poly(self.vars, {e: field(c) for e, c in self.terms.items()}, field)

    def truncate(self, N: int) -> "Poly":
        """Drop all terms of total degree > N (reduction modulo m^(N+1))."""
        return Poly._raw(self.vars, {e: c for e, c in self.terms.items() if sum(e) <= N},
                         self.field)

    def subs(self, mapping: Mapping[str, "Poly"], N: int | None = None) -> "Poly":
        """Substitute polynomials for variables, optionally truncating at order N."""
        target_vars = None
        for p in mapping.values():
            target_vars = p.vars
            break
        if target_vars is None:
            return self
        images = []
        for v in self.vars:
            if v in mapping:
                images.append(mapping[v])
            else:
                images.append(Poly.var(target_vars, v, self.field))
        result = Poly.zero(target_vars, self.field)
        for e, c in self.terms.items():
            t = Poly.const(target_vars, c, self.field)
            for img, a in zip(images, e):
                if a:
                    t = t.mul(img.pow(a, N), N)
            result = result + t
        return result if N is None else result.truncate(N)

    # -- arithmetic ------------------------------------------------------------
    def __add__(self, other):
        other = self._lift(other)
        terms = dict(self.terms)
        for e, c in other.terms.items():
            s = terms.get(e)
            s = c if s is None else s + c
            if s == 0:
                terms.pop(e, None)
            else:
                terms[e] = s
        return Poly._raw(self.vars, terms, self.field)

    __radd__ = __add__

    def __neg__(self):
        return Poly._raw(self.vars, {e: -c for e, c in self.terms.items()}, self.field)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return (-self) + other

    def mul(self, other: "Poly", N: int | None = None) -> "Poly":
        """Product, truncated at total degree N when N is given."""
        other = self._lift(other)
        terms: dict = {}
        for e1, c1 in self.terms.items():
            d1 = sum(e1)
            for e2, c2 in other.terms.items():
                if N is not None and d1 + sum(e2) > N:
                    continue
                e = tuple(a + b for a, b in zip(e1, e2))
                s = terms.get(e)
                terms[e] = c1 * c2 if s is None else s + c1 * c2
        return Poly._raw(self.vars, {e: c for e, c in terms.items() if c != 0}, self.field)

    def __mul__(self, other):
        if isinstance(other, Poly):
            return self.mul(other)
        c = self.field(other)
        if c == 0:
            return Poly.zero(self.vars, self.field)
        return Poly._raw(self.vars, {e: v * c for e, v in self.terms.items()}, self.field)

    __rmul__ = __mul__

    def pow(self, k: int, N: int | None = None) -> "Poly":
        if k < 0:
            raise ValueError("negative power")
        result = Poly.const(self.vars, 1, self.field)
        base = self if N is None else self.truncate(N)
        while k:
            if k & 1:
                result = result.mul(base, N)
            k >>= 1
            if k:
                base = base.mul(base, N)
        return result

    def __pow__(self, k: int):
        return self.pow(k)

    def scale(self, c) -> "Poly":
        return self * c

    # -- comparison / hashing ----------------------------------------------------
    def __eq__(self, other):
        if isinstance(other, Poly):
            return self.vars == other.vars and self.terms == other.terms
        if isinstance(other, (int, Fraction, AlgebraicNumber)):
            return self == Poly.const(self.vars, other, self.field)
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.vars, frozenset(self.terms.items())))
        return self._hash

    def __repr__(self):
        return f"Poly({str(self)!r}, vars={self.vars})"

    def sorted_terms(self) -> list[tuple[Exponent, object]]:
        """Terms in printing order: higher degree first, y > x > v > u within."""
        rank = {v: i for i, v in enumerate(("u", "v", "x", "y"))}
        order = sorted(range(len(self.vars)), key=lambda k: rank.get(self.vars[k], 10 + k),
                       reverse=True)
        return sorted(self.terms.items(),
                      key=lambda ec: (sum(ec[0]), tuple(ec[0][k] for k in order)),
                      reverse=True)

    def __str__(self):
        parts = []
        for e, c in self.sorted_terms():
            factors = []
            for v, a in zip(self.vars, e):
                if a == 1:
                    factors.append(v)
                elif a > 1:
                    factors.append(f"{v}^{a}")
            parts.append(_fmt_term(c, "*".join(factors)))
        return _join_terms(parts)


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


def parse_poly(text: str, vars: Sequence[str] = AMBIENT, field: Field = QQ) -> Poly:
    """Parse ``+ - * ^ / ( )`` expressions with integer/rational literals.

    Juxtaposition of a number and a factor (``2x``) is read as a product.  The
    extension generator symbol is allowed only when ``field`` is an extension.
    """
    vars = tuple(vars)
    if not text.strip():
        raise ParseError("empty expression", 0)
    bad = re.search(r"[^\w\s+\-*/^().]", text)
    if bad:
        raise ParseError(f"unexpected character {bad.group()!r}", bad.start())
    if "**" in text:
        raise ParseError("use ^ for powers", text.index("**"))
    # Python syntax: ^ -> ** (shifts later columns by one each), 2x -> 2*x
    src, offsets = [], []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "^":
            src.append("**")
            offsets.extend([i, i])
        else:
            src.append(ch)
            offsets.append(i)
            if ch.isdigit() and i + 1 < len(text) and (text[i + 1].isalpha() or text[i + 1] in "_("):
                # implicit multiplication only right after a complete number
                j = i
                while j >= 0 and (text[j].isdigit() or text[j] == "."):
                    j -= 1
                if j < 0 or not (text[j].isalnum() or text[j] == "_"):
                    src.append("*")
                    offsets.append(i)
        i += 1
    py = "".join(src)
    lead = len(py) - len(py.lstrip())
    py = py.strip()
    offsets = offsets[lead:]

    def orig(col: int | None) -> int | None:
        if col is None:
            return None
        col = max(0, min(col, len(offsets) - 1))
        return offsets[col] if offsets else 0

    try:
        tree = ast.parse(py, mode="eval")
    except SyntaxError as exc:
        col = (exc.offset or 1) - 1
        raise ParseError(f"syntax error: {exc.msg}", orig(col)) from None

    sym = None if field.is_rational else field.symbol

    def ev(node) -> Poly:
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant):
            if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
                raise ParseError("bad literal", orig(node.col_offset))
            if isinstance(node.value, float):
                seg = text[orig(node.col_offset):]
                m = re.match(r"\d*\.\d*", seg)
                return Poly.const(vars, Fraction(m.group()) if m else Fraction(node.value), field)
            return Poly.const(vars, node.value, field)
        if isinstance(node, ast.Name):
            if node.id in vars:
                return Poly.var(vars, node.id, field)
            if node.id == sym:
                return Poly.const(vars, field.gen(), field)
            if not field.is_rational or node.id not in ("i", "t"):
                raise ParseError(f"unknown variable {node.id!r}", orig(node.col_offset))
            raise ParseError(f"extension symbol {node.id!r} used over Q", orig(node.col_offset))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            val = ev(node.operand)
            return -val if isinstance(node.op, ast.USub) else val
        if isinstance(node, ast.BinOp):
            if isinstance(node.op, ast.Pow):
                base = ev(node.left)
                expo = node.right
                if isinstance(expo, ast.Constant) and isinstance(expo.value, int) and expo.value >= 0:
                    return base.pow(expo.value)
                raise ParseError("exponent must be a nonnegative integer", orig(expo.col_offset))
            a, b = ev(node.left), ev(node.right)
            if isinstance(node.op, ast.Add):
                return a + b
            if isinstance(node.op, ast.Sub):
                return a - b
            if isinstance(node.op, ast.Mult):
                return a * b
            if isinstance(node.op, ast.Div):
                if b.degree() > 0 or b.is_zero():
                    raise ParseError("division only by nonzero constants", orig(node.right.col_offset))
                return a * (field.one() / b.constant_term())
        raise ParseError("unsupported syntax", orig(getattr(node, "col_offset", None)))

    return ev(tree)


# ---------------------------------------------------------------------------
# m-adic operations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MIdeal:
    """The maximal ideal generated by a subset of the ambient variables."""

    generators: tuple[str, ...] = PLANE

    def __post_init__(self):
        if not self.generators:
            raise ValueError("maximal ideal needs at least one variable")


M_PLANE = MIdeal(PLANE)
M_AMBIENT = MIdeal(AMBIENT)


def ord(f: Poly, m: MIdeal = M_PLANE) -> float:
    """Lowest total degree of a term of f in the variables of m; inf for f = 0."""
    missing = set(m.generators) - set(f.vars)
    if missing:
        raise ValueError(f"ideal variables {missing} not in {f.vars}")
    idx = [f.vars.index(v) for v in m.generators]
    return min((sum(e[k] for k in idx) for e in f.terms), default=INFINITY)


def in_m_squared(f: Poly, m: MIdeal = M_PLANE) -> bool:
    """True iff f lies in m^2; f must be a non-unit."""
    o = ord(f, m)
    if o == 0:
        raise ValueError(f"{f} is a unit, not an element of m")
    return o >= 2


def series_inverse(f: Poly, N: int) -> Poly:
    """g with f*g = 1 mod m^(N+1), truncated at total degree N."""
    c0 = f.constant_term()
    if c0 == 0:
        raise ValueError(f"{f} is not a unit")
    inv0 = f.field.one() / c0
    # g = inv0 * sum_k (-h)^k with h = f/c0 - 1 in m
    h = f * inv0 - 1
    g = Poly.const(f.vars, 1, f.field)
    term = Poly.const(f.vars, 1, f.field)
    for _ in range(N):
        term = (term.mul(-h, N))
        if term.is_zero():
            break
        g = g + term
    return (g * inv0).truncate(N)


def series_sqrt(f: Poly, N: int) -> Poly:
    """g with g^2 = f mod m^(N+1); requires a square constant term in the field."""
    c0 = f.constant_term()
    r = f.field.sqrt(c0) if c0 != 0 else None
    if r is None:
        raise ValueError(f"constant term {c0} of {f} is not a nonzero square in {f.field}")
    h = f * (f.field.one() / c0) - 1
    # sqrt(1 + h) = sum_k binom(1/2, k) h^k
    g = Poly.const(f.vars, 1, f.field)
    term = Poly.const(f.vars, 1, f.field)
    binom = Fraction(1)
    for k in range(1, N + 1):
        binom = binom * (Fraction(1, 2) - (k - 1)) / k
        term = term.mul(h, N)
        if term.is_zero():
            break
        g = g + term * binom
    return (g * r).truncate(N)


def truncated_quotient(f: Poly, g: Poly, N: int) -> Poly | None:
    """Some w with w*g = f mod m^(N+1), or None when no such w exists."""
    from .linalg import solve

    og = g.ord()
    if og == INFINITY:
        return None
    deg_w = max(0, N - int(og))
    monos = monomials_upto(len(f.vars), deg_w)
    row_index = {e: k for k, e in enumerate(monomials_upto(len(f.vars), N))}
    cols = []
    for mono in monos:
        col = {}
        for e, c in g.terms.items():
            t = tuple(a + b for a, b in zip(e, mono))
            if sum(t) <= N:
                col[row_index[t]] = c
        cols.append(col)
    rhs = {row_index[e]: c for e, c in f.terms.items() if sum(e) <= N}
    sol = solve(cols, rhs, len(row_index), f.field)
    if sol is None:
        return None
    return Poly(f.vars, {monos[k]: c for k, c in sol.items()}, f.field)


def is_associate(f: Poly, g: Poly, N: int | None = None) -> bool:
    """Decide f = unit * g in K[[x,y]] up to order N (default deg f + deg g + 2)."""
    if f.is_zero() or g.is_zero():
        raise ValueError("is_associate needs nonzero inputs")
    f, g = _common(f, g)
    if f.ord() != g.ord():
        return False
    lf, lg = f.lowest_form(), g.lowest_form()
    e0 = next(iter(lg.terms))
    ratio = lf.terms.get(e0, f.field.zero()) / lg.terms[e0]
    if ratio == 0 or lf != lg * ratio:
        return False
    if N is None:
        N = f.degree() + g.degree() + 2
    w = truncated_quotient(f, g, N)
    return w is not None and w.constant_term() != 0


def _common(f: Poly, g: Poly) -> tuple[Poly, Poly]:
    if f.vars == g.vars:
        return f, g
    vars = tuple(dict.fromkeys(f.vars + g.vars))
    return f.embed(vars), g.embed(vars)
