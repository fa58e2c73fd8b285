"""Exact arithmetic in K = Q(zeta_n)(theta).

Elements are stored by their rational coordinates in the power basis
zeta^i theta^j.  Rational elements are always demoted to plain
``Fraction`` so that the common case pays nothing; genuinely irrational
values are ``Scalar`` instances bound to a ``NumberField``.
"""

from __future__ import annotations

import contextlib
import contextvars
import math
from fractions import Fraction
from functools import lru_cache

import sympy as sp

from .errors import FieldTooSmall

DEFAULT_DEGREE_CAP = 16

# Fields are interned, so a per-run cap cannot live on the instances.
_RUN_CAP = contextvars.ContextVar("degree_cap", default=None)


@contextlib.contextmanager
def degree_limit(cap):
    """Cap [K:Q] for every field built or grown inside the block (None: no override)."""
    token = _RUN_CAP.set(cap)
    try:
        yield
    finally:
        _RUN_CAP.reset(token)


def effective_cap(fld) -> int:
    run = _RUN_CAP.get()
    return fld.degree_cap if run is None else run

_X = sp.Symbol("x")


def Q(x) -> Fraction:
    """Coerce ints, strings and Fractions to Fraction."""
    if isinstance(x, Fraction):
        return x
    return Fraction(x)


@lru_cache(maxsize=None)
def cyclotomic_coeffs(n: int) -> tuple:
    """Coefficients (low to high) of the n-th cyclotomic polynomial."""
    poly = sp.Poly(sp.cyclotomic_poly(n, _X), _X)
    return tuple(Fraction(int(c)) for c in reversed(poly.all_coeffs()))


def _poly_from_low(coeffs):
    return sp.Poly([sp.Rational(c.numerator, c.denominator) for c in reversed(coeffs)], _X, domain=sp.QQ)


def _mpq(c) -> Fraction:
    return Fraction(int(c.numerator), int(c.denominator))


class NumberField:
    """The field Q(zeta_n)(theta) with a rational minimal polynomial for theta.

    ``minpoly`` is a tuple of rational coefficients, low degree first,
    monic.  Instances are interned, so identity equals equality.
    """

    _cache: dict = {}

    def __new__(cls, cyclotomic_order: int = 1, minpoly=None, degree_cap: int = DEFAULT_DEGREE_CAP):
        n = int(cyclotomic_order)
        if n < 1:
            raise ValueError("cyclotomic order must be positive")
        if n % 4 == 2:
            # Q(zeta_n) = Q(zeta_{n/2}) for n = 2 mod 4; keep the smaller index.
            n //= 2
        mp = None
        if minpoly is not None:
            mp = tuple(Q(c) for c in minpoly)
            if mp[-1] != 1:
                raise ValueError("extension minpoly must be monic")
            if len(mp) <= 2:
                mp = None
        key = (n, mp)
        inst = cls._cache.get(key)
        if inst is None:
            inst = super().__new__(cls)
            inst._setup(n, mp, degree_cap)
            cls._cache[key] = inst
        inst.degree_cap = max(getattr(inst, "degree_cap", 0), int(degree_cap))
        cap = effective_cap(inst)
        if inst.degree > cap:
            raise FieldTooSmall(f"[K:Q] = {inst.degree} exceeds degree cap {cap}")
        return inst

    def _setup(self, n, mp, cap):
        self.n = n
        self.minpoly = mp
        self.cyc = cyclotomic_coeffs(n)
        self.phi = len(self.cyc) - 1
        self.e = 1 if mp is None else len(mp) - 1
        self.degree = self.phi * self.e
        self.degree_cap = cap
        self._sympy = None
        if mp is not None and self.e > 1:
            if self.phi == 1:
                irreducible = _poly_from_low(mp).is_irreducible
            else:
                dom = sp.QQ.algebraic_field(sp.exp(2 * sp.pi * sp.I / n))
                facs = sp.Poly(_poly_from_low(mp).as_expr(), _X, domain=dom).factor_list()[1]
                irreducible = len(facs) == 1 and facs[0][1] == 1
            if not irreducible:
                raise ValueError("extension minpoly is reducible over Q(zeta_n)")
        # Order of the full group of roots of unity in K.
        self.root_order = n if n % 2 == 0 else 2 * n

    # -- construction -------------------------------------------------
    def __repr__(self):
        parts = [f"n={self.n}"]
        if self.minpoly:
            parts.append("minpoly=" + str([str(c) for c in self.minpoly]))
        return "NumberField(" + ", ".join(parts) + ")"

    def __reduce__(self):
        return (NumberField, (self.n, self.minpoly, self.degree_cap))

    @property
    def is_rational(self) -> bool:
        return self.degree == 1

    def element(self, coords):
        """Build an element from power-basis coordinates (index i*e + j)."""
        coords = tuple(Q(c) for c in coords)
        if len(coords) != self.degree:
            raise ValueError("wrong number of coordinates")
        if not any(coords[1:]):
            return coords[0]
        return Scalar(self, coords)

    def coords(self, x) -> tuple:
        if isinstance(x, Scalar):
            if x.field is not self:
                return self.coords(self.embed(x))
            return x.c
        return (Q(x),) + (Fraction(0),) * (self.degree - 1)

    def zeta(self):
        """The generator zeta_n."""
        if self.phi == 1:
            return Fraction(1) if self.n == 1 else Fraction(-1)
        c = [Fraction(0)] * self.degree
        c[self.e] = Fraction(1)
        return Scalar(self, tuple(c))

    def theta(self):
        if self.e == 1:
            raise ValueError("field has no theta generator")
        c = [Fraction(0)] * self.degree
        c[1] = Fraction(1)
        return Scalar(self, tuple(c))

    # -- arithmetic kernel --------------------------------------------
    def _mul(self, a, b):
        phi, e = self.phi, self.e
        prod = [[Fraction(0)] * (2 * e - 1) for _ in range(2 * phi - 1)]
        for idx, x in enumerate(a):
            if not x:
                continue
            i1, j1 = divmod(idx, e)
            for jdx, y in enumerate(b):
                if y:
                    i2, j2 = divmod(jdx, e)
                    prod[i1 + i2][j1 + j2] += x * y
        if e > 1:
            mp = self.minpoly
            for row in prod:
                for jj in range(2 * e - 2, e - 1, -1):
                    c = row[jj]
                    if c:
                        row[jj] = Fraction(0)
                        for k in range(e):
                            row[jj - e + k] -= c * mp[k]
        cyc = self.cyc
        for ii in range(2 * phi - 2, phi - 1, -1):
            row = prod[ii]
            if any(row[:e]):
                for k in range(phi):
                    if cyc[k]:
                        tgt = prod[ii - phi + k]
                        for j in range(e):
                            if row[j]:
                                tgt[j] -= row[j] * cyc[k]
        out = []
        for i in range(phi):
            out.extend(prod[i][:e])
        return tuple(out)

    def mult_matrix(self, a):
        """Matrix of multiplication by ``a`` in the power basis (columns = images)."""
        cols = []
        for k in range(self.degree):
            basis = [Fraction(0)] * self.degree
            basis[k] = Fraction(1)
            cols.append(self._mul(a, basis))
        return [[cols[k][r] for k in range(self.degree)] for r in range(self.degree)]

    def _inv(self, a):
        from .matrices import solve_rational
        m = self.mult_matrix(a)
        rhs = [Fraction(1)] + [Fraction(0)] * (self.degree - 1)
        return tuple(solve_rational(m, rhs))

    # -- subfields and embeddings -------------------------------------
    def contains(self, other: "NumberField") -> bool:
        if other is self:
            return True
        if other.minpoly is not None and other.minpoly != self.minpoly:
            return False
        return self.root_order % other.root_order == 0 and self.n % other.n == 0

    def embed(self, x):
        """Map an element of a subfield into this field."""
        if not isinstance(x, Scalar) or x.field is self:
            return x
        src = x.field
        if not self.contains(src):
            raise ValueError(f"{src} is not a subfield of {self}")
        z = self.zeta_power(self.n // src.n) if src.phi > 1 else Fraction(1)
        total = Fraction(0)
        # Coordinates of src are over zeta_src^i theta^j.
        theta = self.theta() if src.e > 1 else None
        for idx, c in enumerate(x.c):
            if not c:
                continue
            i, j = divmod(idx, src.e)
            term = c * power(z, i)
            if j:
                term = term * power(theta, j)
            total = total + term
        return total

    def zeta_power(self, k: int):
        """zeta_n ** k reduced to coordinates."""
        k %= self.n
        if self.phi == 1:
            return Fraction(1) if (self.n == 1 or k == 0) else Fraction(-1)
        return power(self.zeta(), k)

    # -- roots of unity ------------------------------------------------
    def root_of_unity(self, b: int):
        """Primitive b-th root exp(2 pi i / b) inside this field, or None."""
        b = int(b)
        if b < 1:
            raise ValueError("order must be positive")
        if self.root_order % b:
            return None
        if self.n % b == 0:
            return self.zeta_power(self.n // b)
        # n odd, b | 2n:  zeta_{2n} = -zeta_n^{(n+1)/2}.
        z2n = -self.zeta_power((self.n + 1) // 2) if self.n > 1 else Fraction(-1)
        return power(z2n, (2 * self.n) // b)

    def with_roots_of_unity(self, b: int) -> "NumberField":
        """Smallest enlargement by cyclotomic compositum containing mu_b."""
        if self.root_order % b == 0:
            return self
        m = math.lcm(self.n, b)
        cap = effective_cap(self)
        new_phi = int(sp.totient(m if m % 4 != 2 else m // 2))
        if new_phi * self.e > cap:
            raise FieldTooSmall(f"adjoining mu_{b} needs degree {new_phi * self.e} > cap {cap}")
        try:
            return NumberField(m, self.minpoly, cap)
        except ValueError as exc:
            raise FieldTooSmall(f"theta's minpoly splits over Q(zeta_{m}): {exc}") from None

    # -- sympy bridge for factoring ------------------------------------
    def _bridge(self):
        if self._sympy is None:
            gens = []
            if self.phi > 1:
                gens.append(sp.exp(2 * sp.pi * sp.I / self.n))
            if self.e > 1:
                gens.append(sp.CRootOf(_poly_from_low(self.minpoly).as_expr(), 0))
            dom = sp.QQ.algebraic_field(*gens)
            zan = dom.from_sympy(gens[0]) if self.phi > 1 else dom.one
            tan = dom.from_sympy(gens[-1]) if self.e > 1 else dom.one
            basis = []
            for i in range(self.phi):
                for j in range(self.e):
                    basis.append(zan ** i * tan ** j)
            d = self.degree
            mat = []
            for el in basis:
                lst = [_mpq(c) for c in el.to_list()]
                lst = [Fraction(0)] * (d - len(lst)) + lst
                mat.append(list(reversed(lst)))
            # columns: basis element coordinates in the primitive power basis
            colmat = [[mat[k][r] for k in range(d)] for r in range(d)]
            from .matrices import inverse_rational
            self._sympy = (dom, basis, inverse_rational(colmat))
        return self._sympy

    def to_domain(self, x):
        dom, basis, _ = self._bridge()
        out = dom.zero
        for c, el in zip(self.coords(x), basis):
            if c:
                out += dom.convert(sp.Rational(c.numerator, c.denominator)) * el
        return out

    def from_domain(self, a):
        _, _, inv = self._bridge()
        d = self.degree
        lst = [_mpq(c) for c in a.to_list()]
        lst = [Fraction(0)] * (d - len(lst)) + lst
        prim = list(reversed(lst))
        coords = [sum((inv[r][k] * prim[k] for k in range(d)), Fraction(0)) for r in range(d)]
        return self.element(coords)

    def factor(self, coeffs):
        """Factor a polynomial (low-to-high coefficients in K) over K.

        Returns a list of (monic factor coefficients low-to-high, multiplicity).
        """
        coeffs = list(coeffs)
        while coeffs and is_zero(coeffs[-1]):
            coeffs.pop()
        if len(coeffs) <= 1:
            return []
        if self.is_rational or all(not isinstance(c, Scalar) for c in coeffs):
            poly = _poly_from_low([Q(c) for c in coeffs])
            if not self.is_rational:
                dom = self._bridge()[0]
                poly = sp.Poly(poly.as_expr(), _X, domain=dom)
                return self._collect(poly.factor_list()[1])
            out = []
            for fac, mult in poly.factor_list()[1]:
                lc = fac.LC()
                low = [Fraction(int(c.p), int(c.q)) / Fraction(int(lc.p), int(lc.q)) for c in reversed(fac.all_coeffs())]
                out.append((low, mult))
            return out
        dom = self._bridge()[0]
        poly = sp.Poly.from_list([self.to_domain(c) for c in reversed(coeffs)], _X, domain=dom)
        return self._collect(poly.factor_list()[1])

    def _collect(self, facs):
        out = []
        for fac, mult in facs:
            cl = fac.rep.to_list()
            lc = cl[0]
            low = [self.from_domain(c / lc) for c in reversed(cl)]
            out.append((low, mult))
        return out


class Scalar:
    """Irrational element of a NumberField, immutable."""

    __slots__ = ("field", "c")

    def __init__(self, field: NumberField, coords: tuple):
        self.field = field
        self.c = coords

    def _lift(self, other):
        if isinstance(other, (int, Fraction)):
            return self.field, self.c, self.field.coords(other)
        if not isinstance(other, Scalar):
            return None
        if other.field is self.field:
            return self.field, self.c, other.c
        if self.field.contains(other.field):
            f = self.field
        elif other.field.contains(self.field):
            f = other.field
        else:
            raise ValueError("scalars from unrelated fields")
        return f, f.coords(self), f.coords(other)

    def __add__(self, other):
        got = self._lift(other)
        if got is None:
            return NotImplemented
        f, a, b = got
        return f.element(tuple(x + y for x, y in zip(a, b)))

    __radd__ = __add__

    def __neg__(self):
        return Scalar(self.field, tuple(-x for x in self.c))

    def __sub__(self, other):
        got = self._lift(other)
        if got is None:
            return NotImplemented
        f, a, b = got
        return f.element(tuple(x - y for x, y in zip(a, b)))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            if not other:
                return Fraction(0)
            return Scalar(self.field, tuple(x * other for x in self.c))
        got = self._lift(other)
        if got is None:
            return NotImplemented
        f, a, b = got
        return f.element(f._mul(a, b))

    __rmul__ = __mul__

    def inverse(self):
        return self.field.element(self.field._inv(self.c))

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return Scalar(self.field, tuple(x / other for x in self.c))
        if isinstance(other, Scalar):
            return self * other.inverse()
        return NotImplemented

    def __rtruediv__(self, other):
        return self.inverse() * other

    def __pow__(self, k: int):
        return power(self, k)

    def __eq__(self, other):
        if isinstance(other, Scalar):
            if other.field is self.field:
                return self.c == other.c
            try:
                f, a, b = self._lift(other)
            except ValueError:
                return False
            return a == b
        return False

    def __ne__(self, other):
        return not self.__eq__(other)

    def __hash__(self):
        return hash((self.field.n, self.field.minpoly, self.c))

    def __bool__(self):
        return True

    def __repr__(self):
        return f"Scalar({format_scalar(self)})"


def format_scalar(x) -> str:
    if not isinstance(x, Scalar):
        return str(x)
    f = x.field
    terms = []
    for idx, c in enumerate(x.c):
        if not c:
            continue
        i, j = divmod(idx, f.e)
        mono = "*".join(s for s in ((f"z{f.n}^{i}" if i > 1 else (f"z{f.n}" if i else "")),
                                    (f"th^{j}" if j > 1 else ("th" if j else ""))) if s)
        terms.append(f"{c}*{mono}" if mono else str(c))
    return " + ".join(terms)


def is_zero(x) -> bool:
    return not isinstance(x, Scalar) and x == 0


def power(x, k: int):
    if k < 0:
        x = 1 / Q(x) if not isinstance(x, Scalar) else x.inverse()
        k = -k
    result = Fraction(1)
    base = x
    while k:
        if k & 1:
            result = result * base
        k >>= 1
        if k:
            base = base * base
    return result


def rational_projection(s) -> Fraction:
    """Coordinate of 1 in the power basis; a Q-linear retraction onto Q."""
    if isinstance(s, Scalar):
        return s.c[0]
    return Q(s)


def is_rational(s) -> bool:
    return not isinstance(s, Scalar)


def order_key(s) -> tuple:
    """Fixed total order on K: lexicographic on power-basis coordinates."""
    if isinstance(s, Scalar):
        return (s.field.degree,) + s.c
    return (1, Q(s))


def field_of(values, default: NumberField | None = None) -> NumberField:
    """Smallest interned field among ``values`` that contains all of them."""
    f = default or NumberField(1)
    for v in values:
        if isinstance(v, Scalar) and v.field is not f:
            if v.field.contains(f):
                f = v.field
            elif not f.contains(v.field):
                raise ValueError("values from unrelated fields")
    return f


def rational_roots(coeffs) -> list:
    """All rational roots (with multiplicity) of a polynomial over K.

    ``coeffs`` are low-to-high.  A rational root must annihilate every
    coordinate polynomial, so we factor the gcd of those over Q.
    """
    coeffs = list(coeffs)
    while coeffs and is_zero(coeffs[-1]):
        coeffs.pop()
    if not coeffs:
        raise ValueError("zero polynomial")
    fld = field_of(coeffs)
    lead = coeffs[-1]
    if isinstance(lead, Scalar):
        inv = lead.inverse()
        coeffs = [c * inv for c in coeffs]
    else:
        coeffs = [c / lead for c in coeffs]
    d = fld.degree
    rows = [[fld.coords(c)[k] for c in coeffs] for k in range(d)]
    g = None
    for row in rows:
        if any(row):
            p = _poly_from_low(row)
            g = p if g is None else sp.gcd(g, p)
    roots = []
    if g is None or g.degree() < 1:
        return roots
    row_polys = [_poly_from_low(row) for row in rows if any(row)]
    for fac, _ in g.factor_list()[1]:
        if fac.degree() != 1:
            continue
        a1, a0 = fac.all_coeffs()
        r = -sp.Rational(a0) / sp.Rational(a1)
        lin = sp.Poly(_X - r, _X, domain=sp.QQ)
        mult = None
        for p in row_polys:
            k = 0
            while True:
                qq, rem = p.div(lin)
                if not rem.is_zero:
                    break
                k += 1
                p = qq
            mult = k if mult is None else min(mult, k)
        roots.extend([Fraction(int(r.p), int(r.q))] * mult)
    return sorted(roots)


def roots_in_field(coeffs, fld: NumberField):
    """Roots in K with multiplicity; raise FieldTooSmall (with a suggestion) otherwise."""
    facs = fld.factor(coeffs)
    roots = []
    for low, mult in facs:
        if len(low) == 2:
            roots.extend([-low[0]] * mult)
        else:
            raise FieldTooSmall(
                f"eigenvalues outside {fld}: irreducible factor of degree {len(low) - 1}",
                suggestion=splitting_step(fld, low),
            )
    return roots


def splitting_step(fld: NumberField, factor_low):
    """Field obtained by adjoining a root of ``factor_low``, when representable."""
    if fld.e > 1:
        return None
    if any(isinstance(c, Scalar) for c in factor_low):
        return None
    deg = len(factor_low) - 1
    cap = effective_cap(fld)
    if fld.phi * deg > cap:
        return None
    try:
        return NumberField(fld.n, tuple(Q(c) for c in factor_low), cap)
    except (ValueError, FieldTooSmall):
        return None
