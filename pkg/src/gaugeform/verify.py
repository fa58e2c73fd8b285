"""Independent oracles and randomized property drivers.

The oracles avoid the reducer and the gauge engine entirely: gauge words are
expanded into dense matrix series and applied as x A x^{-1} + x' x^{-1},
unit certificates come from the scalar recurrence, and slopes come from the
Newton polygon of a scalar equation obtained with a cyclic vector (sympy).
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction

import sympy as sp

from . import matrices as mx
from .errors import FieldTooSmall, InsufficientPrecision, OracleOutOfRange
from .gauge import Const, Exp, GaugeTransform, Ramify, Shear, apply_gauge
from .liealg import GroupContext
from .puiseux import INF, MatSeries
from .scalars import Scalar, is_zero

ZERO = Fraction(0)
ONE = Fraction(1)


# -- dense series: {Fraction exponent: matrix}, truncated at a t-exponent --------------

def _dmul(a, b, n, cut):
    out = {}
    for ea, ma in a.items():
        for eb, mb in b.items():
            e = ea + eb
            if e >= cut:
                continue
            prod = mx.mul(ma, mb)
            out[e] = mx.add(out[e], prod) if e in out else prod
    return {e: m for e, m in out.items() if not mx.is_zero_matrix(m)}


def _dadd(a, b):
    out = dict(a)
    for e, m in b.items():
        out[e] = mx.add(out[e], m) if e in out else m
    return {e: m for e, m in out.items() if not mx.is_zero_matrix(m)}


def _dense_atom(atom, n, cut):
    if isinstance(atom, (Ramify,)):
        return {ZERO: mx.identity(n)}
    if isinstance(atom, Const):
        return {ZERO: atom.P}
    if isinstance(atom, Shear):
        out = {}
        for i, x in enumerate(atom.lam):
            e = Fraction(x, atom.d)
            m = [list(r) for r in out.get(e, mx.zeros(n))]
            m[i][i] = ONE
            out[e] = tuple(tuple(r) for r in m)
        return out
    if isinstance(atom, Exp):
        x = {}
        for q, m in atom.terms:
            x = _dadd(x, {Fraction(q): mx.to_matrix(m)})
        total = {ZERO: mx.identity(n)}
        term = {ZERO: mx.identity(n)}
        for k in range(1, 400):
            term = {e: mx.scale(Fraction(1, k), m) for e, m in _dmul(term, x, n, cut).items()}
            if not term:
                break
            total = _dadd(total, term)
        else:
            raise OracleOutOfRange("exponential expansion did not terminate")
        return total
    raise TypeError(f"unknown atom {atom!r}")


def _atom_inverse(atom):
    if isinstance(atom, Exp):
        return Exp(tuple((q, mx.neg(m)) for q, m in atom.terms))
    if isinstance(atom, Shear):
        return Shear(tuple(-x for x in atom.lam), atom.d)
    if isinstance(atom, Const):
        return Const(atom.Pinv, atom.P)
    return atom


def _low(atom, n):
    """Lower bound for the valuation of the dense atom."""
    if isinstance(atom, Shear):
        return min(Fraction(x, atom.d) for x in atom.lam)
    if isinstance(atom, Exp):
        neg = min([Fraction(q) for q, _ in atom.terms if q <= 0], default=ZERO)
        return (n - 1) * neg
    return ZERO


def dense_word(g: GaugeTransform, n: int, cut):
    """g and g^{-1} as dense series below the t-exponent ``cut``."""
    slack = sum(-_low(a, n) for a in g.atoms) + sum(-_low(_atom_inverse(a), n) for a in g.atoms)
    big = cut + slack + 1
    x = {ZERO: mx.identity(n)}
    xi = {ZERO: mx.identity(n)}
    for atom in g.atoms:
        x = _dmul(_dense_atom(atom, n, big), x, n, big)
        xi = _dmul(xi, _dense_atom(_atom_inverse(atom), n, big), n, big)
    return x, xi, slack


def oracle_apply(g: GaugeTransform, a: MatSeries, cut) -> dict:
    """g.A = x A x^{-1} + x' x^{-1} by dense expansion, exact below t^cut.

    The caller chooses ``cut`` inside the range that the input's precision
    supports; no shears or closed forms are used.
    """
    n = a.dim
    vals = [e for e, _ in a.terms()]
    va = min(vals) if vals else ZERO
    x, xi, slack = dense_word(g, n, cut + max(ZERO, -va))
    big = cut + slack + max(ZERO, -va) + 1
    dense_a = {e: m for e, m in a.terms()}
    left = _dmul(_dmul(x, dense_a, n, big), xi, n, big)
    dx = {e - 1: mx.scale(e, m) for e, m in x.items() if e != 0}
    right = _dmul(dx, xi, n, big)
    total = _dadd(left, right)
    return {e: m for e, m in total.items() if e < cut}


def oracle_agrees(g: GaugeTransform, a: MatSeries, b: MatSeries, cut) -> bool:
    got = oracle_apply(g, a, cut)
    want = {e: m for e, m in b.terms() if e < cut}
    return got == want


def oracle_torus_unit(coeffs, nterms: int):
    """Unit u = sum B_j t^j with B_0 = 1 and (j+1) B_{j+1} = -sum_{l<=j} A_l B_{j-l}.

    ``coeffs`` are the scalars A_0, A_1, ... of the regular part (gl(1)).
    """
    b = [ONE]
    for j in range(nterms - 1):
        s = sum((Fraction(coeffs[l]) * b[j - l] for l in range(j + 1) if l < len(coeffs)), ZERO)
        b.append(-s / (j + 1))
    return b


# -- Newton polygon of a cyclic-vector scalar equation ---------------------------------

_T = sp.Symbol("t")


def _sym(x):
    if isinstance(x, Scalar):
        raise OracleOutOfRange("slope oracle works over Q only")
    x = Fraction(x)
    return sp.Rational(x.numerator, x.denominator)


def _valuation(expr):
    expr = sp.cancel(sp.together(expr))
    if expr == 0:
        return None
    num, den = sp.fraction(expr)
    low = lambda p: min(m[0] for m in sp.Poly(p, _T).monoms())  # noqa: E731
    return low(num) - low(den)


def oracle_newton_slopes(a: MatSeries, ctx: GroupContext | None = None):
    """Slopes (with multiplicity, n in total) of Y' = A Y; slope s pairs with level -1 - s."""
    n = a.dim
    if n > 3:
        raise OracleOutOfRange("slope oracle is limited to n <= 3")
    if a.ram != 1:
        a = a.reduce_ram()
        if a.ram != 1:
            raise OracleOutOfRange("slope oracle needs integer exponents")
    if a.terms() and a.order < -7:
        raise OracleOutOfRange("slope oracle is limited to pole order <= 6")
    m = sp.zeros(n, n)
    for e, c in a.terms():
        for i in range(n):
            for j in range(n):
                if not is_zero(c[i][j]):
                    m[i, j] += _sym(c[i][j]) * _T ** int(e)
    candidates = [[1 if k == i else 0 for k in range(n)] for i in range(n)]
    candidates.append([1] * n)
    candidates.append([_T ** k for k in range(n)])
    candidates.append([1 + k * _T for k in range(n)])
    rnd = random.Random(0)
    candidates += [[rnd.randint(-3, 3) + rnd.randint(-2, 2) * _T for _ in range(n)] for _ in range(6)]
    for v in candidates:
        rows = [sp.Matrix([v])]
        for _ in range(n):
            rows.append((rows[-1].diff(_T) + rows[-1] * m).applyfunc(sp.cancel))
        w = sp.Matrix.vstack(*rows[:n])
        det = sp.cancel(w.det())
        if det == 0:
            continue
        c = (rows[n] * w.inv()).applyfunc(sp.cancel)
        coeffs = {n: sp.Integer(1)}
        for k in range(n):
            coeffs[k] = -c[0, k]
        return _polygon_slopes(coeffs, n)
    raise OracleOutOfRange("no cyclic vector among the candidates")


def _polygon_slopes(coeffs, n):
    pts = []
    for k in range(n + 1):
        v = _valuation(coeffs[k])
        if v is not None:
            pts.append((k, Fraction(v - k)))
    hull = []
    for p in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            if (y2 - y1) * (p[0] - x1) >= (p[1] - y1) * (x2 - x1):
                hull.pop()
            else:
                break
        hull.append(p)
    slopes = []
    for (x1, y1), (x2, y2) in zip(hull, hull[1:]):
        s = (y2 - y1) / (x2 - x1)
        slopes += [max(s, ZERO)] * (x2 - x1)
    slopes += [ZERO] * (n - len(slopes))
    return sorted(slopes)


def slopes_from_canonical(canonical):
    """Per index i: -1 - (most negative level with D_j[i][i] != 0), or 0."""
    out = []
    for i in range(canonical.dim):
        lv = [r for r, d in zip(canonical.levels, canonical.irr_coeffs) if not is_zero(d[i][i])]
        out.append(-1 - min(lv) if lv else ZERO)
    return sorted(out)


# -- random instances ------------------------------------------------------------

def random_element(rng: random.Random, ctx: GroupContext, spread=2):
    lie = ctx.lie
    return lie.element([Fraction(rng.randint(-spread, spread)) for _ in range(lie.dim)])


def random_triangular_lead(rng, ctx: GroupContext, nilpotent=False, lower=True):
    """Leading coefficient with rational eigenvalues: triangular inside Levi blocks."""
    n = ctx.n
    m = [[ZERO] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            if not ctx.allowed(i, j) and i != j:
                continue
            if i == j:
                if not nilpotent and ctx.levi:
                    m[i][i] = Fraction(rng.randint(-2, 2))
            elif (i > j) == lower or ctx.unipotent:
                m[i][j] = Fraction(rng.choice([0, 1, 1, 2, -1]))
    for grp in ctx.trace_groups:
        s = sum((m[i][i] for i in grp), ZERO)
        m[grp[-1]][grp[-1]] -= s
    return tuple(tuple(r) for r in m)


def random_connection(rng: random.Random, ctx: GroupContext, pole: int, length: int,
                      nilpotent=False, prec=INF) -> MatSeries:
    """Leading term at t^{-pole} with rational eigenvalues, then ``length`` random terms."""
    lead = random_triangular_lead(rng, ctx, nilpotent=nilpotent, lower=rng.random() < 0.7)
    if mx.is_zero_matrix(lead):
        lead = random_element(rng, ctx)
    terms = [(-pole, lead)]
    for e in range(-pole + 1, -pole + 1 + length):
        if rng.random() < 0.7:
            terms.append((e, random_element(rng, ctx, 1)))
    return MatSeries.from_terms(terms, ctx.n, 1, prec)


def random_nilpotent(rng: random.Random, ctx: GroupContext, spread=2):
    """Random strictly triangular element of Lie(ctx) (upper or lower, chosen at random)."""
    n = ctx.n
    upper = ctx.unipotent or rng.random() < 0.5
    m = [[ZERO] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            if i != j and (i < j) == upper and ctx.allowed(i, j):
                m[i][j] = Fraction(rng.randint(-spread, spread))
    return tuple(tuple(r) for r in m)


def random_gauge(rng: random.Random, ctx: GroupContext, ramified=False, exact_safe=True) -> GaugeTransform:
    """Certified element of G(O), optionally followed by a ramified shear.

    With ``exact_safe`` every exponential has a nilpotent exponent, so exact
    inputs stay exact; otherwise Exp(X t^q) with q >= 1 and arbitrary X.
    """
    n = ctx.n
    atoms = []
    for _ in range(rng.randint(1, 3)):
        kind = rng.random()
        if kind < 0.5:
            x = random_nilpotent(rng, ctx) if exact_safe else random_element(rng, ctx, 1)
            if not mx.is_zero_matrix(x):
                q = rng.randint(-1, 2) if exact_safe else rng.randint(1, 2)
                atoms.append(Exp(((Fraction(q), x),)))
        elif n > 1:
            i, j = rng.sample(range(n), 2)
            if ctx.allowed(i, j):
                p = mx.add(mx.identity(n), mx.unit(n, i, j, Fraction(rng.choice([-2, -1, 1, 2]))))
                atoms.append(Const(p, mx.sub(mx.scale(2, mx.identity(n)), p)))
    if ramified and ctx.levi:
        d = rng.choice([2, 3])
        lam = [rng.randint(-2, 2) for _ in range(n)]
        for grp in ctx.trace_groups:
            lam[grp[-1]] -= sum(lam[i] for i in grp)
        atoms.append(Ramify(d))
        atoms.append(Shear(tuple(lam), d))
    return GaugeTransform(atoms)


# -- property drivers ------------------------------------------------------------

@dataclass
class PropertyRun:
    seed: int
    prop: str
    trials: int = 0
    passed: int = 0
    skipped: int = 0
    failures: list = field(default_factory=list)

    @property
    def outcome(self) -> bool:
        return not self.failures and self.passed == self.trials


def _irregular_record(cf):
    keys = sorted(tuple(str(d[i][i]) for d in cf.irr_coeffs) for i in range(cf.dim))
    return ([str(r) for r in cf.levels], keys)


def _shrink(a: MatSeries, still_fails):
    terms = a.terms()
    changed = True
    while changed and len(terms) > 1:
        changed = False
        for k in range(1, len(terms)):
            trial = MatSeries.from_terms(terms[:k] + terms[k + 1:], a.dim, a.ram, a.t_prec)
            try:
                bad = still_fails(trial)
            except Exception:
                bad = False
            if bad:
                terms = trial.terms()
                changed = True
                break
    return MatSeries.from_terms(terms, a.dim, a.ram, a.t_prec)


_REDUCTIVE = [("GL", 2), ("SL", 2), ("GL", 3), ("SL", 3)]


def _ctx(spec):
    kind, n = spec
    return getattr(GroupContext, kind)(n)


def _trial_uniqueness(rng, ramified=True):
    from .reduce import reduce_connection
    ctx = _ctx(rng.choice(_REDUCTIVE[:3] + [("UpperTriangular", 2), ("UpperTriangular", 3)]))
    a = random_connection(rng, ctx, rng.randint(1, 3 if ctx.n == 2 else 2), 4, nilpotent=rng.random() < 0.4)
    g = random_gauge(rng, ctx, ramified=ramified and rng.random() < 0.5)
    inv1 = reduce_connection(a, ctx).canonical.invariants()
    a2 = apply_gauge(g, a, ctx)
    inv2 = reduce_connection(a2, ctx).canonical.invariants()
    check = lambda x: reduce_connection(x, ctx).canonical.invariants() != \
        reduce_connection(apply_gauge(g, x, ctx), ctx).canonical.invariants()  # noqa: E731
    return inv1 == inv2, (ctx, a, check)


def _trial_principal_level(rng):
    from .reduce import principal_level
    ctx = _ctx(rng.choice(_REDUCTIVE))
    pole = rng.randint(2, 4)
    a = random_connection(rng, ctx, pole, 3)
    lead = ctx.levi_part(a.coeff_at(-pole))
    if mx.is_nilpotent(lead):
        return None, None
    lvl = principal_level(a, ctx)
    return lvl == -pole, (ctx, a, lambda x: principal_level(x, ctx) != x.order)


def _trial_determinacy_irregular(rng):
    from .reduce import determinacy_window, reduce_connection
    ctx = _ctx(rng.choice(_REDUCTIVE[:3]))
    pole = rng.randint(2, 3)
    a = random_connection(rng, ctx, pole, 6, nilpotent=rng.random() < 0.5)
    w = determinacy_window(ctx, a.order, "irregular")
    e = Fraction(math.ceil(w.bound)) + rng.randint(0, 2)
    b = a + MatSeries.from_terms([(e, random_element(rng, ctx))], ctx.n)
    r1 = _irregular_record(reduce_connection(a, ctx).canonical)
    r2 = _irregular_record(reduce_connection(b, ctx).canonical)
    return r1 == r2, (ctx, a, None)


def _trial_determinacy_unipotent(rng):
    from .reduce import determinacy_window, reduce_connection
    ctx = GroupContext.StrictUpper(rng.choice([2, 3, 4]))
    pole = rng.randint(1, 4)
    a = random_connection(rng, ctx, pole, 5, nilpotent=True)
    w = determinacy_window(ctx, a.order, "unipotent")
    e = max(Fraction(w.bound), a.order) + rng.randint(0, 2)
    b = a + MatSeries.from_terms([(e, random_element(rng, ctx))], ctx.n)
    c1 = reduce_connection(a, ctx).canonical
    c2 = reduce_connection(b, ctx).canonical
    return c1.invariants() == c2.invariants(), (ctx, a, None)


def _trial_determinacy_solvable(rng):
    from .reduce import determinacy_window, reduce_connection
    n = rng.choice([2, 3])
    ctx = GroupContext.UpperTriangular(n)
    q = rng.choice([1, 1, 2])
    diag_terms = [(-1, mx.diag([Fraction(rng.randint(-3, 3), rng.choice([1, 2])) for _ in range(n)]))]
    if q == 2:
        diag_terms.append((-2, mx.diag([Fraction(rng.randint(-2, 2)) for _ in range(n)])))
    m = -rng.randint(1, 3)
    up = []
    for e in range(m, m + 5):
        mat = [[ZERO] * n for _ in range(n)]
        for i in range(n):
            for j in range(i + 1, n):
                mat[i][j] = Fraction(rng.randint(-1, 1))
        if e == m:
            mat[0][n - 1] = ONE
        up.append((e, tuple(tuple(r) for r in mat)))
    a = MatSeries.from_terms(diag_terms + up + [(0, mx.diag([Fraction(rng.randint(-1, 1)) for _ in range(n)]))], n)
    torus_order = min(e for e, _ in diag_terms)
    w = determinacy_window(ctx, Fraction(m), "solvable", residue=mx.diagonal(diag_terms[0][1]),
                           torus_order=torus_order)
    if rng.random() < 0.5:
        e = Fraction(math.ceil(w.torus_bound)) + rng.randint(0, 1)
        pert = mx.diag([Fraction(rng.randint(-2, 2)) for _ in range(n)])
    else:
        e = Fraction(math.ceil(w.unipotent_bound)) + rng.randint(0, 1)
        pert = mx.unit(n, 0, n - 1, Fraction(rng.choice([-1, 1])))
    b = a + MatSeries.from_terms([(e, pert)], n)
    c1 = reduce_connection(a, ctx).canonical
    c2 = reduce_connection(b, ctx).canonical
    return c1.invariants() == c2.invariants(), (ctx, a, None)


def _trial_bounds(rng):
    from .galois import coxeter_check
    from .reduce import ramification_bound, reduce_connection
    ctx = _ctx(rng.choice(_REDUCTIVE[:3]))
    a = random_connection(rng, ctx, rng.randint(1, 3), 4, nilpotent=rng.random() < 0.6)
    res = reduce_connection(a, ctx)
    ok = res.used_ram <= ramification_bound(ctx) and coxeter_check(res, ctx).ok
    return ok, (ctx, a, None)


def orbit_accounting(trace, ctx: GroupContext) -> bool:
    """Slope-shear steps (op iv) within one nilpotent run strictly increase the orbit dimension,
    and there are at most floor(dim(G_der)/2) of them in total.

    A splitting step (op i) ends a run: later orbits live in a smaller Levi.
    """
    steps = [s for s in trace if s["op"] == "iv"]
    if len(steps) > ctx.derived_dim() // 2:
        return False
    prev = None
    for s in trace:
        if s["op"] == "i":
            prev = None
        elif s["op"] == "iv":
            if prev is not None and s["orbit_dim"] <= prev:
                return False
            prev = s["orbit_dim"]
    return True


def _trial_orbit_growth(rng):
    from .reduce import reduce_connection
    ctx = _ctx(rng.choice(_REDUCTIVE[:3]))
    a = random_connection(rng, ctx, rng.randint(2, 4), 4, nilpotent=True)
    res = reduce_connection(a, ctx)
    return orbit_accounting(res.trace, ctx), (ctx, a, None)


def _trial_slopes(rng):
    from .reduce import reduce_connection
    ctx = _ctx(rng.choice([("GL", 2), ("GL", 3)]))
    a = random_connection(rng, ctx, rng.randint(1, 3 if ctx.n == 2 else 2), 4, nilpotent=rng.random() < 0.5)
    res = reduce_connection(a, ctx)
    return slopes_from_canonical(res.canonical) == oracle_newton_slopes(a), (ctx, a, None)


PROPERTIES = {
    "uniqueness": _trial_uniqueness,
    "principal-level": _trial_principal_level,
    "determinacy-irregular": _trial_determinacy_irregular,
    "determinacy-unipotent": _trial_determinacy_unipotent,
    "determinacy-solvable": _trial_determinacy_solvable,
    "bounds": _trial_bounds,
    "orbit-growth": _trial_orbit_growth,
    "slopes": _trial_slopes,
}


def drive_property(prop: str, trials: int, seed: int = 0, max_attempts: int | None = None) -> PropertyRun:
    """Run ``trials`` completed instances of a registered property.

    Instances whose scalars leave the single-generator field (or that are
    not applicable, e.g. a nilpotent leading term for the principal-level
    property) are skipped and replaced.
    """
    if prop not in PROPERTIES:
        raise KeyError(f"unknown property {prop}")
    rng = random.Random(seed)
    run = PropertyRun(seed, prop)
    attempts = 0
    limit = max_attempts or 5 * trials
    while run.trials < trials and attempts < limit:
        attempts += 1
        try:
            ok, info = PROPERTIES[prop](rng)
        except (FieldTooSmall, InsufficientPrecision):
            run.skipped += 1
            continue
        if ok is None:
            run.skipped += 1
            continue
        run.trials += 1
        if ok:
            run.passed += 1
        else:
            ctx, a, check = info
            small = _shrink(a, check) if check else a
            run.failures.append({"ctx": ctx.to_json(), "input": repr(a), "shrunk": repr(small)})
    return run
