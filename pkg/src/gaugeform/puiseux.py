"""Truncated matrix-valued Puiseux series.

A ``MatSeries`` with ram ``b`` stores integer exponents ``j`` meaning
``t^(j/b)``.  ``prec`` (same units, possibly ``math.inf``) is the first
exponent whose coefficient is unknown.
"""

from __future__ import annotations

import math
from fractions import Fraction

from . import matrices as mx
from .errors import DimensionMismatch, InsufficientPrecision
from .scalars import is_zero

INF = math.inf


def _scaled_prec(prec, c):
    return prec if prec == INF else prec * c


class MatSeries:
    __slots__ = ("ram", "dim", "coeffs", "prec")

    def __init__(self, coeffs, dim: int, ram: int = 1, prec=INF):
        if ram < 1:
            raise ValueError("ram must be positive")
        if prec != INF:
            prec = int(prec)
        self.ram = int(ram)
        self.dim = int(dim)
        self.prec = prec
        clean = {}
        for j, m in coeffs.items():
            j = int(j)
            if j >= prec or mx.is_zero_matrix(m):
                continue
            if len(m) != dim:
                raise DimensionMismatch(f"coefficient of size {len(m)} in a {dim}x{dim} series")
            clean[j] = m
        self.coeffs = clean

    # -- constructors ----------------------------------------------------
    @classmethod
    def zero(cls, dim, ram=1, prec=INF):
        return cls({}, dim, ram, prec)

    @classmethod
    def monomial(cls, matrix, exponent, ram=1, prec=INF):
        """matrix * t^exponent with a rational exponent in (1/ram)Z."""
        e = Fraction(exponent) * ram
        if e.denominator != 1:
            raise ValueError(f"exponent {exponent} not in (1/{ram})Z")
        matrix = mx.to_matrix(matrix)
        return cls({int(e): matrix}, len(matrix), ram, prec)

    @classmethod
    def from_terms(cls, terms, dim, ram=1, prec=INF):
        """Build from (rational exponent, matrix) pairs; prec is a rational t-exponent."""
        out = {}
        for e, m in terms:
            k = Fraction(e) * ram
            if k.denominator != 1:
                raise ValueError(f"exponent {e} not in (1/{ram})Z")
            k = int(k)
            m = mx.to_matrix(m)
            out[k] = mx.add(out[k], m) if k in out else m
        if prec != INF:
            p = Fraction(prec) * ram
            prec = math.ceil(p)
        return cls(out, dim, ram, prec)

    # -- basic accessors --------------------------------------------------
    @property
    def valuation(self):
        return min(self.coeffs) if self.coeffs else self.prec

    @property
    def order(self):
        """Valuation as a rational t-exponent (inf for an exact zero)."""
        v = self.valuation
        return v if v == INF else Fraction(v, self.ram)

    @property
    def t_prec(self):
        return self.prec if self.prec == INF else Fraction(self.prec, self.ram)

    def is_exact(self) -> bool:
        return self.prec == INF

    def is_zero(self) -> bool:
        return not self.coeffs

    def exponents(self):
        return sorted(self.coeffs)

    def coefficient(self, j: int):
        if j >= self.prec:
            raise InsufficientPrecision(f"coefficient t^({j}/{self.ram}) is beyond precision", needed=j + 1, have=self.prec)
        return self.coeffs.get(j, mx.zeros(self.dim))

    def coeff_at(self, exponent):
        """Coefficient at a rational t-exponent."""
        k = Fraction(exponent) * self.ram
        if k.denominator != 1:
            return mx.zeros(self.dim)
        return self.coefficient(int(k))

    def terms(self):
        """(rational exponent, matrix) pairs in increasing order."""
        return [(Fraction(j, self.ram), self.coeffs[j]) for j in self.exponents()]

    def __repr__(self):
        body = ", ".join(f"t^{e}: {m}" for e, m in self.terms())
        return f"MatSeries(ram={self.ram}, prec={self.t_prec}, {{{body}}})"

    # -- ramification -------------------------------------------------------
    def ramify(self, c: int) -> "MatSeries":
        c = int(c)
        if c == 1:
            return self
        return MatSeries({j * c: m for j, m in self.coeffs.items()}, self.dim, self.ram * c, _scaled_prec(self.prec, c))

    def to_ram(self, b: int) -> "MatSeries":
        if b % self.ram:
            raise ValueError(f"ram {b} is not a multiple of {self.ram}")
        return self.ramify(b // self.ram)

    def reduce_ram(self) -> "MatSeries":
        """Smallest ram representing the same series and window."""
        g = self.ram
        for j in self.coeffs:
            g = math.gcd(g, j)
        if self.prec != INF:
            # keep the window honest: only shrink to a ram where prec stays exact
            g = math.gcd(g, self.prec)
        if g <= 1:
            return self
        return MatSeries({j // g: m for j, m in self.coeffs.items()}, self.dim, self.ram // g,
                         _scaled_prec(self.prec, Fraction(1, g)) if self.prec == INF else self.prec // g)

    def truncate(self, prec) -> "MatSeries":
        """Forget coefficients at exponents >= prec (in ram units)."""
        prec = min(prec, self.prec)
        return MatSeries(self.coeffs, self.dim, self.ram, prec)

    def truncate_t(self, tprec) -> "MatSeries":
        return self.truncate(INF if tprec == INF else math.ceil(Fraction(tprec) * self.ram))

    # -- ring operations --------------------------------------------------
    def _check(self, other):
        if self.dim != other.dim:
            raise DimensionMismatch(f"{self.dim} vs {other.dim}")

    def __add__(self, other):
        a, b = unify(self, other)
        out = dict(a.coeffs)
        for j, m in b.coeffs.items():
            out[j] = mx.add(out[j], m) if j in out else m
        return MatSeries(out, a.dim, a.ram, min(a.prec, b.prec))

    def __neg__(self):
        return MatSeries({j: mx.neg(m) for j, m in self.coeffs.items()}, self.dim, self.ram, self.prec)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "MatSeries":
        if is_zero(c):
            return MatSeries({}, self.dim, self.ram, self.prec)
        return MatSeries({j: mx.scale(c, m) for j, m in self.coeffs.items()}, self.dim, self.ram, self.prec)

    def left(self, p) -> "MatSeries":
        return MatSeries({j: mx.mul(p, m) for j, m in self.coeffs.items()}, self.dim, self.ram, self.prec)

    def right(self, p) -> "MatSeries":
        return MatSeries({j: mx.mul(m, p) for j, m in self.coeffs.items()}, self.dim, self.ram, self.prec)

    def conjugate(self, p, pinv) -> "MatSeries":
        return MatSeries({j: mx.conj(p, m, pinv) for j, m in self.coeffs.items()}, self.dim, self.ram, self.prec)

    def map(self, fn) -> "MatSeries":
        return MatSeries({j: fn(m) for j, m in self.coeffs.items()}, self.dim, self.ram, self.prec)

    def shift(self, k: int) -> "MatSeries":
        """Multiply by t^(k/ram)."""
        return MatSeries({j + k: m for j, m in self.coeffs.items()}, self.dim, self.ram,
                         self.prec if self.prec == INF else self.prec + k)

    def __mul__(self, other):
        a, b = unify(self, other)
        prec = min(a.valuation + b.prec, b.valuation + a.prec)
        out = {}
        for i, ma in a.coeffs.items():
            for j, mb in b.coeffs.items():
                k = i + j
                if k >= prec:
                    continue
                p = mx.mul(ma, mb)
                out[k] = mx.add(out[k], p) if k in out else p
        return MatSeries(out, a.dim, a.ram, prec)

    def derivative(self) -> "MatSeries":
        b = self.ram
        out = {j - b: mx.scale(Fraction(j, b), m) for j, m in self.coeffs.items() if j}
        return MatSeries(out, self.dim, b, self.prec if self.prec == INF else self.prec - b)

    def antiderivative(self) -> "MatSeries":
        """Primitive with zero constant term; the residue coefficient must vanish."""
        b = self.ram
        if -b in self.coeffs:
            raise ValueError("series has a nonzero residue; no Laurent antiderivative")
        out = {j + b: mx.scale(Fraction(b, j + b), m) for j, m in self.coeffs.items()}
        return MatSeries(out, self.dim, b, self.prec if self.prec == INF else self.prec + b)

    def b_lift(self, b: int) -> "MatSeries":
        """Transport from F_b to F: t^(j/b) -> b t^(j+b-1)."""
        if self.ram != b:
            raise ValueError(f"b_lift expects ram {b}, series has ram {self.ram}")
        out = {j + b - 1: mx.scale(b, m) for j, m in self.coeffs.items()}
        return MatSeries(out, self.dim, 1, self.prec if self.prec == INF else self.prec + b - 1)

    def equal_below(self, other, prec=None):
        """First exponent (rational) where the two differ below a common window, or None."""
        a, b = unify(self, other)
        window = min(a.prec, b.prec) if prec is None else prec
        keys = sorted(set(a.coeffs) | set(b.coeffs))
        for j in keys:
            if j >= window:
                break
            if a.coeffs.get(j, mx.zeros(a.dim)) != b.coeffs.get(j, mx.zeros(a.dim)):
                return Fraction(j, a.ram)
        return None

    def same_as(self, other) -> bool:
        a, b = unify(self, other)
        return a.prec == b.prec and a.coeffs == b.coeffs

    def __eq__(self, other):
        return isinstance(other, MatSeries) and self.same_as(other)

    __hash__ = None


def unify(a: MatSeries, b: MatSeries):
    if a.dim != b.dim:
        raise DimensionMismatch(f"{a.dim} vs {b.dim}")
    if a.ram == b.ram:
        return a, b
    m = math.lcm(a.ram, b.ram)
    return a.to_ram(m), b.to_ram(m)


def add(a, b):
    return a + b


def mul(a, b):
    return a * b


def ad_action(a: MatSeries, b: MatSeries) -> MatSeries:
    """The bracket [a, b] = ab - ba."""
    return a * b - b * a


def b_lift(a: MatSeries, b: int) -> MatSeries:
    return a.b_lift(b)


def ramify(a: MatSeries, c: int) -> MatSeries:
    return a.ramify(c)


def derivative(a: MatSeries) -> MatSeries:
    return a.derivative()
