"""Galois descent from F_b to F, monodromy invariants, and equivalence decisions.

mu_b acts on F_b through gamma . t^{1/b} = gamma^{-1} t^{1/b}.  For a
certificate x with x.A = B and A defined over F, the constant
phi = (omega . x) x^{-1} satisfies Ad(phi) B = omega . B; conversely a
finite-order phi with that property descends B to a connection over F.
Roots of unity come from ``NumberField.root_of_unity`` (exp(2 pi i / b)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from . import matrices as mx
from .errors import FieldTooSmall, InsufficientPrecision, NotACocycle, NotRegular, Undecidable
from .gauge import Const, Exp, GaugeTransform, Ramify, Shear, apply_gauge, compose, invert
from .liealg import (GroupContext, _jordan_chains, _restrict, diagonalizing_conjugation, joint_eigenspaces,
                     jordan_decompose, lattice_invariants)
from .puiseux import INF, MatSeries
from .reduce import CanonicalForm, ReductionResult, reduce_connection
from .scalars import field_of, format_scalar, is_zero, order_key, power, rational_projection

ZERO = Fraction(0)
ONE = Fraction(1)
_MAX_ORDER = 720


@dataclass(frozen=True)
class TwistedCocycle:
    """phi = phi_{omega_b}; it determines the whole cocycle on the cyclic group mu_b."""

    b: int
    phi: tuple


@dataclass(frozen=True)
class MonodromyInvariant:
    """v: residue-eigenvalue classes mod Z (sorted); orbit: (class, partition) per class."""

    v: tuple
    orbit: tuple

    def to_json(self):
        return {"v": list(self.v), "orbit": [{"class": c, "partition": list(p)} for c, p in self.orbit]}


def _omega(b: int, values=()):
    fld = field_of(values).with_roots_of_unity(b)
    w = fld.root_of_unity(b)
    if w is None:  # pragma: no cover - with_roots_of_unity either succeeds or raises
        raise FieldTooSmall(f"no primitive {b}-th root of unity available")
    return w


def _entries(*mats):
    return [x for m in mats for row in m for x in row]


# -- the Galois action ---------------------------------------------------------

def galois_act(k: int, b: CanonicalForm) -> CanonicalForm:
    """omega_b^k . B: D_j picks up omega_b^{-b r_j k}; the residue is fixed."""
    n = b.ram
    k %= n
    w = _omega(n, _entries(*b.irr_coeffs))
    ds = []
    for r, d in zip(b.levels, b.irr_coeffs):
        e = int(-r * n * k) % n
        ds.append(mx.scale(power(w, e), d))
    return CanonicalForm(b.ram, b.dim, b.levels, tuple(ds), b.residue, b.normalized)


def galois_series(k: int, a: MatSeries) -> MatSeries:
    """omega_c^k acting on a series with ram c: the coefficient at j/c gains omega_c^{-jk}."""
    c = a.ram
    w = _omega(c, [x for m in a.coeffs.values() for row in m for x in row])
    return MatSeries({j: mx.scale(power(w, (-j * k) % c), m) for j, m in a.coeffs.items()}, a.dim, c, a.prec)


def matrix_order(phi) -> int:
    """Order of phi in GL(n), or 0 when it is not of finite order (checked up to a cap)."""
    n = len(phi)
    eye = mx.identity(n)
    p = phi
    for k in range(1, _MAX_ORDER + 1):
        if p == eye:
            return k
        p = mx.mul(p, phi)
    return 0


def ad_order(phi) -> int:
    """Order of Ad(phi): least k with phi^k scalar, or 0."""
    n = len(phi)
    p = phi
    for k in range(1, _MAX_ORDER + 1):
        if mx.is_diagonal(p) and len({order_key(p[i][i]) for i in range(n)}) == 1:
            return k
        p = mx.mul(p, phi)
    return 0


def is_twisted_cocycle(phi, b: CanonicalForm, ctx: GroupContext | None = None, order: int | None = None) -> bool:
    """Ad(phi) C = C, Ad(phi) D_j = omega^{-b r_j} D_j, Ad(phi)^b = 1, and phi in G."""
    phi = mx.to_matrix(phi)
    c = order or b.ram
    try:
        pinv = mx.inverse(phi)
    except ValueError:
        return False
    if ctx is not None and ctx.trace_groups and mx.det(phi) != 1:
        return False
    if ctx is not None:
        for i in range(ctx.n):
            for j in range(ctx.n):
                if i != j and not is_zero(phi[i][j]) and not ctx.allowed(i, j):
                    return False
    if mx.conj(phi, b.residue, pinv) != b.residue:
        return False
    w = _omega(c, _entries(phi, *b.irr_coeffs))
    for r, d in zip(b.levels, b.irr_coeffs):
        e = int(-r * c) % c
        if mx.conj(phi, d, pinv) != mx.scale(power(w, e), d):
            return False
    k = ad_order(phi)
    return k != 0 and c % k == 0


# -- dense expansion of certificate words -------------------------------------------

def _atom_matrix(atom, n, prec):
    """The atom as a matrix series over F_c, truncated at ``prec`` (t-exponent)."""
    if isinstance(atom, Const):
        return MatSeries({0: atom.P}, n)
    if isinstance(atom, Ramify):
        return MatSeries({0: mx.identity(n)}, n)
    if isinstance(atom, Shear):
        c = atom.ram
        coeffs = {}
        for i, x in enumerate(atom.lam):
            k = int(Fraction(x, atom.d) * c)
            m = coeffs.setdefault(k, [[ZERO] * n for _ in range(n)])
            m[i][i] = ONE
        return MatSeries({k: tuple(tuple(r) for r in m) for k, m in coeffs.items()}, n, c)
    if isinstance(atom, Exp):
        x = atom.series(n)
        c = x.ram
        p = math.ceil(Fraction(prec) * c)
        one = MatSeries({0: mx.identity(n)}, n, c, p)
        total, term = one, one
        for k in range(1, 4 * (p + n) + 8):
            term = (term * x).scale(Fraction(1, k)).truncate(p)
            if term.is_zero():
                break
            total = total + term
        return total
    raise TypeError(f"unknown atom {atom!r}")


def word_matrix(g: GaugeTransform, n: int, prec) -> MatSeries:
    """g = atoms[-1] ... atoms[0] as one matrix series, with tracked precision."""
    out = MatSeries({0: mx.identity(n)}, n)
    for atom in g.atoms:
        out = _atom_matrix(atom, n, prec) * out
    return out


def _constant_of(s: MatSeries):
    if s.prec != INF and s.prec <= 0:
        raise InsufficientPrecision("constant term is not determined")
    for j in s.coeffs:
        if j != 0:
            raise NotACocycle(f"expected a constant, found a t^({j}/{s.ram}) term")
    return s.coeffs.get(0, mx.zeros(s.dim))


def extract_cocycle(a: MatSeries, result: ReductionResult) -> TwistedCocycle:
    """phi = (omega_c . x) x^{-1} for the certificate x; c is the cover the certificate uses."""
    if a.reduce_ram().ram != 1:
        raise ValueError("extract_cocycle needs an input over F (integer exponents)")
    g = result.certificate
    n = a.dim
    c = math.lcm(g.ram, result.canonical.ram)
    prec = 8
    for _ in range(6):
        x = word_matrix(g, n, prec).to_ram(c)
        xinv = word_matrix(invert(g), n, prec).to_ram(c)
        phi_s = galois_series(1, x) * xinv
        try:
            phi = _constant_of(phi_s)
            break
        except InsufficientPrecision:
            prec *= 2
    else:
        raise InsufficientPrecision("certificate expansion did not determine the cocycle")
    return TwistedCocycle(c, phi)


# -- descent -------------------------------------------------------------------

def _root_exponent(lam, w, c):
    x = ONE
    for k in range(c):
        if x == lam:
            return k
        x = x * w
    raise NotACocycle(f"eigenvalue {format_scalar(lam)} is not a {c}-th root of unity")


def descend(b: CanonicalForm, phi, ctx: GroupContext):
    """A over F with y.B = A.  Returns (A, y) where omega . y = y phi^{-1}.

    y = t^{k/c} P^{-1} with phi = P diag(omega_c^{k_i}) P^{-1} and
    c = lcm(b, order of phi).
    """
    phi = mx.to_matrix(phi)
    if ctx.unipotent:
        raise Undecidable("descent is implemented for reductive contexts only")
    order = matrix_order(phi)
    if order == 0:
        raise NotACocycle("phi does not have finite order")
    c = math.lcm(b.ram, order)
    if not is_twisted_cocycle(phi, b, ctx, order=c):
        raise NotACocycle("phi does not satisfy the twisted cocycle conditions")
    w = _omega(c, _entries(phi, b.residue, *b.irr_coeffs))
    fld = field_of([w] + _entries(phi))
    q, qinv, _ = diagonalizing_conjugation([phi], GroupContext.LeviProduct(
        [("sl" if tuple(r) in ctx.trace_groups else "gl", s) for r, s in zip(ctx.block_ranges(), ctx.blocks)]), fld)
    lam = mx.diagonal(mx.conj(q, phi, qinv))
    ks = [_root_exponent(x, w, c) for x in lam]
    ks = [k - c if 2 * k > c else k for k in ks]
    for grp in ctx.trace_groups:
        total = sum(ks[i] for i in grp)
        if total % c:
            raise NotACocycle("phi is not in the special linear group")
        ks[grp[-1]] -= total
    y = GaugeTransform([Const(q, qinv), Shear.from_rational([Fraction(k, c) for k in ks])], b.ram)
    a = apply_gauge(y, b.to_series(), ctx).reduce_ram()
    if a.ram != 1:
        raise NotACocycle("descended connection has fractional exponents")
    return a, y


# -- class data ----------------------------------------------------------------

def _partition(nil):
    k = len(nil)
    if k == 0:
        return ()
    return tuple(sorted((len(ch) for ch in _jordan_chains(nil, list(range(k)))), reverse=True))


def _pair_class(psi, c):
    """GL-conjugacy data of a commuting pair (psi semisimple, C)."""
    cs = jordan_decompose(c).semisimple
    cn = mx.sub(c, cs)
    mats = [cs, psi]
    pieces = joint_eigenspaces(mats, list(range(len(c))), field_of(_entries(*mats)))
    out = []
    for vals, basis in pieces:
        out.append((tuple(order_key(v) for v in vals), tuple(format_scalar(v) for v in vals),
                    _partition(_restrict(cn, basis))))
    out.sort()
    return tuple((v, p) for _, v, p in out)


def cocycle_class(phi, b: CanonicalForm):
    """Conjugacy data of phi under the centralizer of (D_1, ..., D_l, C).

    phi permutes the joint eigenspaces of the D_j cyclically; each orbit is
    recorded by its eigenvalue tuples, its length l, and the class of the
    return map phi^l together with C on the orbit's first eigenspace.
    """
    phi = mx.to_matrix(phi)
    n = b.dim
    keys = [tuple(d[i][i] for d in b.irr_coeffs) for i in range(n)]
    spaces = {}
    for i, k in enumerate(keys):
        spaces.setdefault(k, []).append(i)
    image = {}
    for k, idx in spaces.items():
        col = idx[0]
        rows = [r for r in range(n) if not is_zero(phi[r][col])]
        image[k] = keys[rows[0]]
    seen, orbits = set(), []
    for k in sorted(spaces, key=lambda k: tuple(order_key(x) for x in k)):
        if k in seen:
            continue
        orbit = [k]
        seen.add(k)
        while image[orbit[-1]] != k:
            orbit.append(image[orbit[-1]])
            seen.add(orbit[-1])
        idx = spaces[k]
        ret = mx.mat_pow(phi, len(orbit))
        psi = tuple(tuple(ret[i][j] for j in idx) for i in idx)
        cres = tuple(tuple(b.residue[i][j] for j in idx) for i in idx)
        labels = sorted((tuple(order_key(x) for x in o), tuple(format_scalar(x) for x in o)) for o in orbit)
        orbits.append((tuple(l for _, l in labels), len(orbit), _pair_class(psi, cres)))
    orbits.sort()
    return tuple(orbits)


def _class_mod_z(x):
    """Representative of x + Z with rational part in [0, 1)."""
    return x - math.floor(rational_projection(x))


def regular_invariants(a: MatSeries, ctx: GroupContext, result: ReductionResult | None = None) -> MonodromyInvariant:
    """(v, O) for a regular connection over F: classes of R_s mod Z and partitions of R_n.

    R is the residue of the first-kind form over F obtained by descending the
    canonical form with its cocycle.
    """
    if ctx.unipotent and ctx.levi:
        raise Undecidable("monodromy invariants are implemented for reductive and unipotent contexts")
    result = result or reduce_connection(a, ctx)
    b = result.canonical
    if b.levels:
        raise NotRegular(f"connection has irregular levels {list(map(str, b.levels))}")
    if not ctx.levi:
        return MonodromyInvariant(tuple("0" for _ in range(ctx.n)), (("0", _partition(b.residue)),))
    coc = extract_cocycle(a, result)
    first_kind, _ = descend(b, coc.phi, ctx) if coc.phi != mx.identity(ctx.n) else (b.to_series(), None)
    r = first_kind.coeff_at(-1)
    if first_kind.order < -1:  # pragma: no cover - descend of t^{-1}C is first kind
        raise NotRegular("descended form is not of the first kind")
    jd = jordan_decompose(r)
    fld = field_of(_entries(r))
    q, qinv, _ = diagonalizing_conjugation([jd.semisimple], GroupContext.GL(ctx.n), fld)
    s = mx.diagonal(mx.conj(q, jd.semisimple, qinv))
    nil = mx.conj(q, jd.nilpotent, qinv)
    classes = {}
    for i, x in enumerate(s):
        classes.setdefault(_class_mod_z(x), []).append(i)
    v = sorted((_class_mod_z(x) for x in s), key=order_key)
    orbit = []
    for cls in sorted(classes, key=order_key):
        idx = classes[cls]
        sub = tuple(tuple(nil[i][j] for j in idx) for i in idx)
        orbit.append((format_scalar(cls), _partition(sub)))
    return MonodromyInvariant(tuple(format_scalar(x) for x in v), tuple(orbit))


# -- equivalence ---------------------------------------------------------------

@dataclass
class Decision:
    equivalent: bool
    over: str
    witness: GaugeTransform | None = None
    distinguisher: object = None

    def __bool__(self):
        return self.equivalent


def _unramified(g: GaugeTransform) -> bool:
    return g.ram == g.base_ram


def _torus_record(b: CanonicalForm, over_f: bool):
    ds = [(str(r), tuple(format_scalar(x) for x in mx.diagonal(d))) for r, d in zip(b.levels, b.irr_coeffs)]
    c = mx.diagonal(b.residue)
    res = tuple(format_scalar(_class_mod_z(x) if over_f else x - rational_projection(x)) for x in c)
    return {"levels": ds, "residue": res}


def equivalent(a1: MatSeries, a2: MatSeries, ctx: GroupContext, over: str = "Fbar") -> Decision:
    """Decide gauge equivalence over F or over its algebraic closure ("F" / "Fbar")."""
    over = "F" if over in ("F", "f") else "Fbar"
    r1 = reduce_connection(a1, ctx)
    r2 = reduce_connection(a2, ctx)
    b1, b2 = r1.canonical, r2.canonical
    if ctx.is_torus():
        t1, t2 = _torus_record(b1, over == "F"), _torus_record(b2, over == "F")
        if t1 != t2:
            return Decision(False, over, distinguisher={"first": t1, "second": t2})
        return Decision(True, over, witness=_witness(r1, r2, over))
    if b1.ram == b2.ram and b1.to_series() == b2.to_series():
        w = _witness(r1, r2, over)
        if w is not None or over == "Fbar":
            return Decision(True, over, witness=w)
    if ctx.unipotent:
        raise Undecidable("equivalence of distinct canonical forms is decided only for reductive contexts")
    i1, i2 = b1.invariants(), b2.invariants()
    if i1 != i2:
        return Decision(False, over, distinguisher={"first": i1, "second": i2})
    if over == "Fbar":
        return Decision(True, over)
    if not b1.levels:
        m1, m2 = regular_invariants(a1, ctx, r1), regular_invariants(a2, ctx, r2)
        if m1 != m2:
            return Decision(False, over, distinguisher={"first": m1.to_json(), "second": m2.to_json()})
        return Decision(True, over)
    c1 = cocycle_class(extract_cocycle(a1, r1).phi, b1)
    c2 = cocycle_class(extract_cocycle(a2, r2).phi, b2)
    if c1 != c2:
        return Decision(False, over, distinguisher={"first": c1, "second": c2})
    return Decision(True, over)


def _witness(r1: ReductionResult, r2: ReductionResult, over: str):
    """x2^{-1} x1 when both reductions land on the same series (over F only if unramified)."""
    if r1.canonical.ram != r2.canonical.ram or r1.canonical.to_series() != r2.canonical.to_series():
        return None
    if over == "F" and not (_unramified(r1.certificate) and _unramified(r2.certificate)):
        return None
    return compose(invert(r2.certificate), r1.certificate)


# -- Coxeter check -------------------------------------------------------------

@dataclass
class CoxeterReport:
    ok: bool
    b: int
    degrees: tuple
    coxeter_number: int
    divides_degree: bool
    central_required: bool
    central_ok: bool


def coxeter_check(result: ReductionResult, ctx: GroupContext) -> CoxeterReport:
    """Level denominator b divides a fundamental degree; b = h forces C_s central in each block."""
    b = 1
    for r in result.canonical.levels:
        b = math.lcm(b, Fraction(r).denominator)
    inv = lattice_invariants(ctx)
    degrees = tuple(inv.degrees)
    divides = b == 1 or any(d % b == 0 for d in degrees)
    h = inv.coxeter_number
    central_required = b > 1 and b == h
    central_ok = True
    if central_required:
        cs = result.canonical.residue_semisimple()
        for rng in ctx.block_ranges():
            vals = {order_key(cs[i][j]) if i == j else None for i in rng for j in rng if i == j or not is_zero(cs[i][j])}
            if None in vals or len(vals) > 1:
                central_ok = False
    return CoxeterReport(divides and central_ok, b, degrees, h, divides, central_required, central_ok)
