"""Gauge atoms, certified words, and the action g.A = Ad(g)A + (dg)g^{-1}."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from . import matrices as mx
from .errors import DivergentExponential, InsufficientPrecision
from .liealg import GroupContext
from .puiseux import INF, MatSeries
from .scalars import is_zero

ZERO = Fraction(0)

# Guard for Ad(exp X) on exact inputs whose bracket series never terminates.
_MAX_AD_TERMS = 400


@dataclass(frozen=True)
class Exp:
    """exp(sum_q X_q t^q) for pairwise commuting X_q.

    Exponents q <= 0 are allowed only when every X_q is nilpotent.
    """

    terms: tuple  # ((Fraction q, matrix), ...)

    @property
    def ram(self):
        return math.lcm(*[Fraction(q).denominator for q, _ in self.terms]) if self.terms else 1

    def series(self, n) -> MatSeries:
        return MatSeries.from_terms(self.terms, n, self.ram)

    def inverse(self):
        return Exp(tuple((q, mx.neg(x)) for q, x in self.terms))


@dataclass(frozen=True)
class Shear:
    """t^(lam/d) for an integral cocharacter lam."""

    lam: tuple
    d: int = 1

    @property
    def ram(self):
        g = self.d
        for x in self.lam:
            g = math.gcd(g, x)
        return self.d // g if g else 1

    def shifts(self):
        return [Fraction(x, self.d) for x in self.lam]

    def inverse(self):
        return Shear(tuple(-x for x in self.lam), self.d)

    @classmethod
    def from_rational(cls, values):
        values = [Fraction(v) for v in values]
        d = math.lcm(*[v.denominator for v in values]) if values else 1
        return cls(tuple(int(v * d) for v in values), d)


@dataclass(frozen=True)
class Const:
    """Constant conjugation A -> P A P^{-1}."""

    P: tuple
    Pinv: tuple = None

    def __post_init__(self):
        if self.Pinv is None:
            object.__setattr__(self, "Pinv", mx.inverse(self.P))

    ram = 1

    def inverse(self):
        return Const(self.Pinv, self.P)


@dataclass(frozen=True)
class Ramify:
    """Change of representation F_b -> F_bc; mathematically the identity."""

    c: int

    ram = 1

    def inverse(self):
        return Ramify(self.c)


@dataclass
class GaugeTransform:
    """Word of atoms, applied first-to-last: g = atoms[-1] ... atoms[0]."""

    atoms: list = field(default_factory=list)
    base_ram: int = 1

    def __len__(self):
        return len(self.atoms)

    def then(self, atom):
        self.atoms.append(atom)
        return self

    @property
    def ram(self):
        r = self.base_ram
        for a in self.atoms:
            r = math.lcm(r, a.ram)
            if isinstance(a, Ramify):
                r = math.lcm(r, self.base_ram * a.c)
        return r


def exp_atom(x, q) -> Exp:
    x = mx.to_matrix(x)
    q = Fraction(q)
    if q <= 0 and not mx.is_nilpotent(x):
        raise DivergentExponential(f"exp(X t^{q}) needs q > 0 or X nilpotent")
    return Exp(((q, x),))


def exp_series_atom(terms) -> Exp:
    """Exp of a commuting polynomial sum_q X_q t^q (zero terms dropped)."""
    clean = tuple((Fraction(q), mx.to_matrix(x)) for q, x in terms if not mx.is_zero_matrix(x))
    return _validated(Exp(clean))


def _validated(atom: Exp) -> Exp:
    xs = [x for _, x in atom.terms]
    for i, a in enumerate(xs):
        for b in xs[i + 1:]:
            if not mx.is_zero_matrix(mx.bracket(a, b)):
                raise ValueError("Exp terms must commute")
    if any(q <= 0 for q, _ in atom.terms) and not all(mx.is_nilpotent(x) for x in xs):
        raise DivergentExponential("nonpositive exponents need nilpotent coefficients")
    return atom


def identity() -> GaugeTransform:
    return GaugeTransform([])


def compose(g1: GaugeTransform, g2: GaugeTransform) -> GaugeTransform:
    """g1 o g2: apply g2 first."""
    return GaugeTransform(list(g2.atoms) + list(g1.atoms), g2.base_ram)


def invert(g: GaugeTransform) -> GaugeTransform:
    return GaugeTransform([a.inverse() for a in reversed(g.atoms)], g.base_ram)


# -- the action ----------------------------------------------------------------

def _scalar_exp(f: MatSeries, prec) -> MatSeries:
    """exp of a 1x1 series of positive valuation, known below ``prec`` (ram units)."""
    one = MatSeries({0: ((Fraction(1),),)}, 1, f.ram, prec)
    if f.is_zero():
        return one
    v = f.valuation
    if v <= 0:
        if prec == INF and all(is_zero(m[0][0]) for m in f.coeffs.values()):
            return one
        raise DivergentExponential("scalar exponential of nonpositive valuation")
    total, term, k = one, one, 0
    while True:
        k += 1
        term = (term * f).scale(Fraction(1, k)).truncate(prec)
        if term.is_zero():
            break
        total = total + term
    return total.truncate(prec)


def _ad_exp_diagonal(x: MatSeries, a: MatSeries) -> MatSeries:
    """Ad(exp X) A for diagonal X: entry (i,j) picks up exp(x_i - x_j)."""
    n = a.dim
    x, a = _common(x, a)
    out = {}
    prec = a.prec
    entries = {}
    for j, m in a.coeffs.items():
        for r in range(n):
            for c in range(n):
                if not is_zero(m[r][c]):
                    entries.setdefault((r, c), {})[j] = ((m[r][c],),)
    result_prec = prec
    pieces = {}
    for (r, c), cs in entries.items():
        diff = {j: ((m[r][r] - m[c][c],),) for j, m in x.coeffs.items()}
        f = MatSeries(diff, 1, a.ram)
        entry = MatSeries(cs, 1, a.ram, prec)
        if f.is_zero():
            pieces[(r, c)] = entry
            continue
        if prec == INF:
            raise InsufficientPrecision("exact input under a non-terminating exponential; give a finite window")
        e = _scalar_exp(f, prec - entry.valuation)
        pieces[(r, c)] = (entry * e).truncate(prec)
    for (r, c), s in pieces.items():
        for j, m in s.coeffs.items():
            row = out.setdefault(j, [[ZERO] * n for _ in range(n)])
            row[r][c] = row[r][c] + m[0][0]
    return MatSeries({j: tuple(tuple(row) for row in m) for j, m in out.items()}, n, a.ram, result_prec)


def _common(x, a):
    r = math.lcm(x.ram, a.ram)
    return x.to_ram(r), a.to_ram(r)


def _apply_exp(atom: Exp, a: MatSeries) -> MatSeries:
    n = a.dim
    if not atom.terms:
        return a
    x = atom.series(n)
    x, a = _common(x, a)
    if all(mx.is_diagonal(m) for m in x.coeffs.values()):
        ad_part = _ad_exp_diagonal(x, a)
    else:
        # ad(x) is linear on an n^2-dimensional space over the series field, so on
        # an exact input ad(x)^k A either vanishes by k = n^2 or never does.
        limit = n * n if a.prec == INF else _MAX_AD_TERMS
        total, term, k = a, a, 0
        while True:
            k += 1
            term = (x * term - term * x).scale(Fraction(1, k)).truncate(a.prec)
            if term.is_zero():
                break
            total = total + term
            if k >= limit:
                raise InsufficientPrecision("exponential action does not terminate on an exact input")
        ad_part = total
    return ad_part + x.derivative()


def _apply_shear(atom: Shear, a: MatSeries, ctx: GroupContext | None) -> MatSeries:
    n = a.dim
    if len(atom.lam) != n:
        raise ValueError("cocharacter length does not match the matrix size")
    r = math.lcm(a.ram, atom.ram)
    a = a.to_ram(r)
    sh = [Fraction(x, atom.d) * r for x in atom.lam]
    shifts = [[int(sh[i] - sh[j]) for j in range(n)] for i in range(n)]
    out = {}
    for j, m in a.coeffs.items():
        for p in range(n):
            for q in range(n):
                v = m[p][q]
                if not is_zero(v):
                    k = j + shifts[p][q]
                    row = out.setdefault(k, [[ZERO] * n for _ in range(n)])
                    row[p][q] = v
    prec = a.prec
    if prec != INF:
        if ctx is None:
            positions = [(p, q) for p in range(n) for q in range(n)]
        else:
            positions = [(p, p) for p in range(n)] + [(p, q) for p in range(n) for q in range(n)
                                                       if p != q and ctx.allowed(p, q)]
        prec = prec + min(shifts[p][q] for p, q in positions)
    res = MatSeries({k: tuple(tuple(row) for row in m) for k, m in out.items()}, n, r, prec)
    log_term = MatSeries({-r: mx.diag([Fraction(x, atom.d) for x in atom.lam])}, n, r)
    return res + log_term


def apply_atom(atom, a: MatSeries, ctx: GroupContext | None = None) -> MatSeries:
    if isinstance(atom, Exp):
        return _apply_exp(atom, a)
    if isinstance(atom, Shear):
        return _apply_shear(atom, a, ctx)
    if isinstance(atom, Const):
        return a.conjugate(atom.P, atom.Pinv)
    if isinstance(atom, Ramify):
        return a.ramify(atom.c)
    raise TypeError(f"unknown atom {atom!r}")


def apply_gauge(g: GaugeTransform, a: MatSeries, ctx: GroupContext | None = None, check: bool = True) -> MatSeries:
    """g . A atom by atom; with ``check`` the output is tested for membership in Lie(ctx)."""
    for atom in g.atoms:
        a = apply_atom(atom, a, ctx)
    if check and ctx is not None:
        for j, m in a.coeffs.items():
            if not ctx.contains(m):
                raise ValueError(f"gauge output leaves Lie({ctx.kind}) at t^({j}/{a.ram})")
    return a


def shear_apply(lam, d, a: MatSeries, ctx: GroupContext | None = None) -> MatSeries:
    return _apply_shear(Shear(tuple(int(x) for x in lam), int(d)), a, ctx)


@dataclass
class EquivalenceReport:
    ok: bool
    window: object
    first_discrepancy: object = None
    difference: object = None

    def __bool__(self):
        return self.ok


def verify_equivalence(g: GaugeTransform, a: MatSeries, b: MatSeries, ctx: GroupContext | None = None,
                       require_residue: bool = True) -> EquivalenceReport:
    """Check g.A = B coefficient by coefficient below the common window."""
    c = apply_gauge(g, a, ctx, check=False)
    cc, bb = _common(c, b)
    window = min(cc.prec, bb.prec)
    if require_residue and window != INF and window <= -cc.ram:
        raise InsufficientPrecision(
            f"common window t^{Fraction(window, cc.ram)} does not reach the residue", needed=0, have=Fraction(window, cc.ram))
    first = cc.equal_below(bb, window)
    if first is None:
        return EquivalenceReport(True, window if window == INF else Fraction(window, cc.ram))
    diff = mx.sub(cc.coefficient(first), bb.coefficient(first))
    return EquivalenceReport(False, window if window == INF else Fraction(window, cc.ram), Fraction(first, cc.ram), diff)
