"""Reduction of formal connections to canonical form, with certificates.

Everything runs natively over F_b = k((t^{1/b})) with d/dt; the working
ramification grows only when a shear needs it.  A reduction proceeds in
stages that each push certified atoms onto a single word:

* the reductive loop on the Levi part (splitting by a semisimple leading
  term, Jacobson-Morozov shears for a nilpotent one, then the regular step),
* normalization of the residue (rational-part shear and a Weyl sort),
* elimination of the unipotent radical one superdiagonal at a time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction

from . import matrices as mx
from .errors import FieldTooSmall, InsufficientPrecision
from .gauge import Const, Exp, GaugeTransform, Ramify, Shear, apply_atom, compose, verify_equivalence
from .liealg import (GroupContext, _jordan_chains, _unimodular, diagonalizing_conjugation, height,
                     integer_eigenspace_data, jm_triple, jordan_decompose, lattice_invariants, orbit_dim)
from .puiseux import INF, MatSeries
from .scalars import NumberField, field_of, format_scalar, is_zero, order_key, rational_projection

ZERO = Fraction(0)
ONE = Fraction(1)


# -- results ------------------------------------------------------------------

@dataclass
class CanonicalForm:
    """B = sum_j D_j t^{r_j} + t^{-1} C."""

    ram: int
    dim: int
    levels: tuple
    irr_coeffs: tuple
    residue: tuple
    normalized: bool = False

    def to_series(self) -> MatSeries:
        terms = list(zip(self.levels, self.irr_coeffs)) + [(Fraction(-1), self.residue)]
        return MatSeries.from_terms(terms, self.dim, self.ram)

    @property
    def principal_level(self):
        return self.levels[0] if self.levels else None

    def residue_semisimple(self):
        return jordan_decompose(self.residue).semisimple

    def invariants(self):
        """Gauge invariants over the algebraic closure as a comparable record.

        Levels, then for each joint eigenspace of (D_1, ..., D_l, C_s) its
        eigenvalue tuple (C_s entries with pi removed) and the Jordan
        partition of C_n there.
        """
        cs = self.residue_semisimple()
        if not mx.is_diagonal(cs):
            raise ValueError("invariants need a diagonal C_s")
        cn = mx.sub(self.residue, cs)
        groups = {}
        for i in range(self.dim):
            key = tuple(d[i][i] for d in self.irr_coeffs) + (cs[i][i] - rational_projection(cs[i][i]),)
            groups.setdefault(key, []).append(i)
        items = []
        for key, idx in groups.items():
            part = sorted((len(c) for c in _jordan_chains(cn, idx)), reverse=True)
            items.append((tuple(order_key(x) for x in key), tuple(format_scalar(x) for x in key), tuple(part)))
        items.sort()
        return {"levels": [str(r) for r in self.levels],
                "eigenspaces": [{"eigenvalues": list(k), "partition": list(p)} for _, k, p in items]}

    def violations(self):
        """Conditions of the canonical-form definition that fail (empty when valid)."""
        bad = []
        for r in self.levels:
            if r >= -1:
                bad.append(f"level {r} is not < -1")
        if list(self.levels) != sorted(set(self.levels)):
            bad.append("levels not strictly increasing")
        ds = list(self.irr_coeffs)
        for k, d in enumerate(ds):
            if mx.is_zero_matrix(d):
                bad.append(f"D_{k + 1} is zero")
            if not mx.is_diagonal(d):
                bad.append(f"D_{k + 1} is not diagonal")
            if not mx.is_zero_matrix(mx.bracket(d, self.residue)):
                bad.append(f"[D_{k + 1}, C] != 0")
            for d2 in ds[k + 1:]:
                if not mx.is_zero_matrix(mx.bracket(d, d2)):
                    bad.append("D's do not commute")
        if self.normalized:
            cs = self.residue_semisimple()
            if not mx.is_diagonal(cs):
                bad.append("C_s is not diagonal")
            elif any(rational_projection(x) != 0 for x in mx.diagonal(cs)):
                bad.append("pi(C_s) != 0")
            if not mx.is_zero_matrix(mx.bracket(cs, self.residue)):
                bad.append("[C_s, C] != 0")
        return bad


@dataclass
class ReductionResult:
    canonical: CanonicalForm
    certificate: GaugeTransform
    trace: list
    source: MatSeries
    ctx: GroupContext
    field: NumberField
    used_ram: int
    output: MatSeries = None

    def verify(self):
        return verify_equivalence(self.certificate, self.source, self.canonical.to_series(), self.ctx)

    @property
    def shear_steps(self):
        return [s for s in self.trace if s["op"] == "iv"]


# -- the working state ----------------------------------------------------------

class _Work:
    def __init__(self, a: MatSeries, ctx: GroupContext, fld: NumberField):
        self.a = a
        self.ctx = ctx
        self.field = fld
        self.g = GaugeTransform([], a.ram)
        self.trace = []
        # An exact walk past this point is left to the truncated retry at the same window.
        self.exact_limit = _working_window(a, ctx) if a.prec == INF else INF

    def push(self, atom):
        if isinstance(atom, Exp) and not atom.terms:
            return
        if isinstance(atom, Shear) and not any(atom.lam):
            return
        if isinstance(atom, Const) and atom.P == mx.identity(len(atom.P)):
            return
        if isinstance(atom, Shear):
            need = math.lcm(self.a.ram, atom.ram)
            if need != self.a.ram:
                self.g.atoms.append(Ramify(need // self.a.ram))
                self.a = self.a.ramify(need // self.a.ram)
        self.a = apply_atom(atom, self.a, self.ctx)
        self.g.atoms.append(atom)

    def coeff(self, e, levi=None):
        m = self.a.coeff_at(e)
        return levi.levi_part(m) if levi is not None else m

    def require(self, bound, why):
        """Coefficients below ``bound`` (t-exponent) must be known."""
        if self.a.t_prec < bound:
            raise InsufficientPrecision(
                f"{why}: need coefficients below t^{bound}, series known below t^{self.a.t_prec}",
                needed=bound, have=self.a.t_prec)


def _derived_series(a: MatSeries, levi: GroupContext) -> MatSeries:
    return a.map(levi.derived_part)


def _center_series(a: MatSeries, levi: GroupContext) -> MatSeries:
    return a.map(levi.center_part)


# -- operation (i): semisimple leading term ---------------------------------------

def _off_block_positions(old: GroupContext, new: GroupContext):
    n = old.n
    return [(p, q) for p in range(n) for q in range(n)
            if old.block_of[p] == old.block_of[q] and new.block_of[p] != new.block_of[q]]


def _split_step(work: _Work, levi: GroupContext, r, lead) -> GroupContext:
    """Diagonalize (A_r)_s and clear the off-centralizer part order by order."""
    v = jordan_decompose(lead).semisimple
    q, qinv, sizes = diagonalizing_conjugation([v], levi, work.field)
    work.push(Const(q, qinv))
    new = levi.refine(sizes)
    positions = _off_block_positions(levi, new)
    n = levi.n
    ar = work.coeff(r, levi)
    # matrix of Z -> [A_r, Z] on the off-block coordinates
    cols = []
    for p, qq in positions:
        img = mx.bracket(ar, mx.unit(n, p, qq))
        cols.append([img[i][j] for i, j in positions])
    op = [[cols[c][k] for c in range(len(positions))] for k in range(len(positions))]
    steps = 0
    for e in _grid_below(work, r, work.a.t_prec):
        m = work.coeff(e, levi)
        rhs = [m[i][j] for i, j in positions]
        if all(is_zero(x) for x in rhs):
            continue
        sol = mx.solve(op, rhs)
        if sol is None:  # pragma: no cover - ad(A_r) is invertible off the centralizer
            raise ArithmeticError("off-centralizer equation is singular")
        z = [[ZERO] * n for _ in range(n)]
        for (i, j), x in zip(positions, sol):
            z[i][j] = x
        work.push(Exp(((e - r, tuple(tuple(row) for row in z)),)))
        steps += 1
    work.trace.append({"op": "i", "order": r, "blocks": list(new.blocks), "exponentials": steps})
    return new


def _grid_below(work: _Work, start, stop):
    """Grid exponents above ``start`` while coefficients are known.

    The bound follows the working precision as atoms are pushed; on an exact
    series the walk ends after the last nonzero term, or gives up past the
    working window.
    """
    b = work.a.ram
    k = math.floor(Fraction(start) * b) + 1
    while True:
        e = Fraction(k, b)
        if work.a.prec == INF:
            if work.a.is_zero() or e > Fraction(max(work.a.coeffs), b):
                return
            if e > work.exact_limit:
                raise InsufficientPrecision("exact input does not terminate; give a finite window")
        elif e >= work.a.t_prec:
            return
        yield e
        k += 1


# -- operations (ii)-(iv): nilpotent leading term ------------------------------------

def _nilpotent_step(work: _Work, levi: GroupContext, r, y, shear_count):
    trip = jm_triple(y, levi)
    p = _unimodular(trip.chain_basis, levi)
    pinv = mx.inverse(p)
    work.push(Const(pinv, p))
    w = list(trip.weights)
    y = mx.conj(pinv, y, p)
    x = mx.conj(pinv, trip.X, p)
    lam = max((Fraction(w[i] - w[j], 2) + 1 for i, j in levi.roots()), default=ONE)
    window = lam * (abs(r) - 1)
    work.require(r + window, f"Jacobson-Morozov window at order {r}")
    lie = levi.lie
    ker_x = [lie.element(vec) for vec in mx.nullspace(lie.ad(x), lie.dim)]
    img_y = [mx.bracket(y, b) for b in lie.basis]
    # solve coeff = [Y, Z] + W with W in ker ad X: unknowns are (Z coords, W coords)
    system_cols = [lie.coords(m) for m in img_y] + [lie.coords(m) for m in ker_x]
    system = [[system_cols[c][k] for c in range(len(system_cols))] for k in range(lie.dim)]
    nz = len(img_y)
    for e in [r + Fraction(k, work.a.ram) for k in range(1, math.ceil(window * work.a.ram))]:
        if e - r >= window:
            break
        m = work.coeff(e, levi)
        sol = mx.solve(system, lie.coords(m))
        if sol is None:  # pragma: no cover - g = im ad Y + ker ad X
            raise ArithmeticError("sl2 decomposition failed")
        z = lie.element(sol[:nz])
        if not mx.is_zero_matrix(z):
            work.push(Exp(((e - r, z),)))
    # weighted slope delta over the derived parts inside the window
    delta, attained = None, []
    b = work.a.ram
    for k in range(1, math.ceil(window * b)):
        mm = Fraction(k, b)
        if mm >= window:
            break
        comp = levi.derived_part(work.coeff(r + mm, levi))
        weights = set()
        for i in range(levi.n):
            for j in range(levi.n):
                if not is_zero(comp[i][j]):
                    weights.add(w[i] - w[j] if i != j else 0)
        for lam_w in weights:
            cand = mm / (Fraction(lam_w, 2) + 1)
            if delta is None or cand < delta:
                delta, attained = cand, [(mm, lam_w)]
            elif cand == delta:
                attained.append((mm, lam_w))
    before = orbit_dim(y, levi)
    if delta is None or delta >= abs(r) - 1:
        s = Fraction(r + 1, 2)
        work.push(Shear.from_rational([s * wi for wi in w]))
        work.trace.append({"op": "iii", "order": r, "Lambda": lam, "delta": delta, "orbit_dim": before})
        return
    work.push(Shear.from_rational([-delta / 2 * wi for wi in w]))
    new_order = r + delta
    lead = levi.derived_part(work.coeff(new_order, levi))
    after = orbit_dim(lead, levi)
    work.trace.append({"op": "iv", "order": r, "new_order": new_order, "Lambda": lam, "delta": delta,
                       "orbit_dim": before, "orbit_dim_after": after, "index": shear_count})


# -- operations (v)-(vi): first kind ------------------------------------------------

def _central_integration(work: _Work, levi: GroupContext):
    """Kill the central components of order > -1 with one diagonal exponential."""
    a = work.a
    cen = _center_series(a, levi)
    terms = []
    for e, m in cen.terms():
        if e > -1 and not mx.is_zero_matrix(m):
            terms.append((e + 1, mx.scale(-1 / (e + 1), m)))
    if terms:
        work.push(Exp(tuple(terms)))
        work.trace.append({"op": "v", "terms": len(terms)})


def _regular_step(work: _Work, levi: GroupContext, full_normalize_tau=False):
    work.require(Fraction(-1) + Fraction(1, work.a.ram), "residue")
    _central_integration(work, levi)
    res = work.coeff(Fraction(-1), levi)
    data = integer_eigenspace_data(res, levi)
    b = work.a.ram
    positive = [q for q in data.rational_eigenvalues if q > 0 and (q * b).denominator == 1]
    k_top = max(positive, default=ZERO)
    work.require(k_top, "alignment window")
    lie = levi.lie
    ad = lie.ad(res)
    count = 0
    for e in _grid_below(work, Fraction(-1), work.a.t_prec):
        q = e + 1
        comp = levi.derived_part(work.coeff(e, levi))
        if mx.is_zero_matrix(comp):
            continue
        vec = lie.coords(comp)
        if q in data.projections:
            proj = data.projections[q]
            keep = [sum((proj[i][j] * vec[j] for j in range(lie.dim) if not is_zero(vec[j])), ZERO)
                    for i in range(lie.dim)]
            vec = [x - y for x, y in zip(vec, keep)]
            if all(is_zero(x) for x in vec):
                continue
        shifted = [[ad[i][j] - (q if i == j else ZERO) for j in range(lie.dim)] for i in range(lie.dim)]
        sol = mx.solve(shifted, vec)
        if sol is None:  # pragma: no cover - invertible off the q-eigenspace
            raise ArithmeticError("alignment equation is singular")
        work.push(Exp(((q, lie.element(sol)),)))
        count += 1
    work.trace.append({"op": "align", "k": k_top, "exponentials": count})
    # diagonalize the semisimple part of the residue inside the Levi
    res = work.coeff(Fraction(-1), levi)
    s = jordan_decompose(res).semisimple
    if not mx.is_diagonal(s):
        q_, qinv, _ = diagonalizing_conjugation([s], levi, work.field)
        work.push(Const(q_, qinv))
        s = jordan_decompose(work.coeff(Fraction(-1), levi)).semisimple
    tau = _tau(mx.diagonal(s), levi, work.a.ram)
    work.push(Shear.from_rational([-x for x in tau]))
    work.trace.append({"op": "vi", "tau": tau})


def _tau(eigs, levi: GroupContext, b: int):
    """Cocharacter with tau(beta) = beta(S) whenever beta(S) lies in (1/b)Z.

    Coordinatewise floor on the 1/b grid commutes with grid shifts, so
    differences that are on the grid are reproduced exactly.  Each Levi
    block is anchored at its last entry; trace groups are then centred.
    """
    n = len(eigs)
    fl = [Fraction(math.floor(rational_projection(x) * b), b) for x in eigs]
    tau = [ZERO] * n
    for rng in levi.block_ranges():
        anchor = fl[rng[-1]]
        for i in rng:
            tau[i] = fl[i] - anchor
    for grp in levi.trace_groups:
        mean = sum((tau[i] for i in grp), ZERO) / len(grp)
        for i in grp:
            tau[i] -= mean
    return tau


# -- the reductive loop --------------------------------------------------------------

def _reductive_loop(work: _Work, levi: GroupContext):
    shears = 0
    while True:
        der = _derived_series(work.a, levi)
        if der.is_zero():
            break
        r = der.order
        if r >= -1:
            break
        lead = der.coeff_at(r)
        if mx.is_nilpotent(lead):
            _nilpotent_step(work, levi, r, lead, shears)
            if work.trace[-1]["op"] == "iv":
                shears += 1
        else:
            levi = _split_step(work, levi, r, lead)
    _regular_step(work, levi)
    return levi


# -- normalization -----------------------------------------------------------------

def _irregular_terms(work: _Work, levi: GroupContext):
    out = []
    for e, m in work.a.terms():
        if e < -1:
            lm = levi.levi_part(m)
            if not mx.is_zero_matrix(lm):
                out.append((e, lm))
    return out


def _normalize(work: _Work, levi: GroupContext, group: GroupContext):
    """Shear away pi(C_s) and sort joint eigenvalue tuples within Levi blocks of ``group``."""
    res = work.coeff(Fraction(-1), levi)
    s = jordan_decompose(res).semisimple
    if not mx.is_diagonal(s):
        # C commutes with every D_j, so a block-diagonal eigenbasis of C_s keeps them diagonal
        q_, qinv, _ = diagonalizing_conjugation([s], levi, work.field)
        work.push(Const(q_, qinv))
        res = work.coeff(Fraction(-1), levi)
        s = jordan_decompose(res).semisimple
    mu = [rational_projection(x) for x in mx.diagonal(s)]
    if any(mu):
        work.push(Shear.from_rational([-x for x in mu]))
    # Weyl sort
    res = work.coeff(Fraction(-1), levi)
    s = jordan_decompose(res).semisimple
    irr = _irregular_terms(work, levi)
    keys = [tuple(order_key(d[i][i]) for _, d in irr) + (order_key(s[i][i]),) for i in range(group.n)]
    perm = list(range(group.n))
    if group.levi:
        for rng in group.block_ranges():
            idx = sorted(rng, key=lambda i: (keys[i], i))
            for pos, i in zip(rng, idx):
                perm[pos] = i
    if perm != list(range(group.n)):
        work.push(_permutation(perm, group))
    work.trace.append({"op": "normalize", "shift": mu, "permutation": perm})


def _permutation(perm, ctx: GroupContext) -> Const:
    """Const atom moving index perm[k] to position k; signed if det must be 1."""
    n = len(perm)
    p = [[ZERO] * n for _ in range(n)]
    for k, i in enumerate(perm):
        p[k][i] = ONE
    p = tuple(tuple(r) for r in p)
    if ctx.trace_groups and mx.det(p) != 1:
        p = tuple(tuple(-x if k == 0 else x for x in row) for k, row in enumerate(p))
    return Const(p, mx.inverse(p))


# -- unipotent radical -----------------------------------------------------------------

def _upper_jordan(work: _Work, levi: GroupContext):
    """Put the residue's nilpotent part in upper Jordan form inside joint eigenspaces."""
    res = work.coeff(Fraction(-1), levi)
    nil = jordan_decompose(res).nilpotent
    if mx.is_zero_matrix(nil) or mx.is_upper(nil, strict=True):
        return
    irr = _irregular_terms(work, levi)
    s = jordan_decompose(res).semisimple
    n = levi.n
    keys = [tuple(d[i][i] for _, d in irr) + (s[i][i],) for i in range(n)]
    cols = [None] * n
    for rng in levi.block_ranges():
        groups = {}
        for i in rng:
            groups.setdefault(keys[i], []).append(i)
        for idx in groups.values():
            chains = _jordan_chains(nil, idx)
            basis = []
            for chain in chains:
                basis.extend(reversed(chain))
            for pos, vec in zip(idx, basis):
                cols[pos] = vec
    p = tuple(tuple(cols[c][r] for c in range(n)) for r in range(n))
    p = _unimodular(p, levi)
    work.push(Const(mx.inverse(p), p))


def _eliminate_radical(work: _Work, group: GroupContext):
    """Clear the strictly upper part level by level, keeping only resonant residues."""
    n = group.n
    a = work.a
    diag_terms = []
    for e, m in a.terms():
        if e <= -1:
            d = mx.diag(mx.diagonal(m))
            if not mx.is_zero_matrix(d):
                diag_terms.append((e, d))
    kept = 0
    for level in range(1, n):
        for i in range(n - level):
            j = i + level
            if i == j or not (group.allowed(i, j)):
                continue
            a = work.a
            f = {e: m[i][j] for e, m in a.terms() if not is_zero(m[i][j])}
            if not f:
                continue
            chi_irr = [(e, d[i][i] - d[j][j]) for e, d in diag_terms if e < -1 and not is_zero(d[i][i] - d[j][j])]
            gamma = ZERO
            for e, d in diag_terms:
                if e == -1:
                    gamma = d[i][i] - d[j][j]
            u = _solve_scalar_gauge(f, chi_irr, gamma, a.ram, a.t_prec)
            if u:
                terms = tuple((e, mx.unit(n, i, j, c)) for e, c in sorted(u.items()))
                work.push(Exp(terms))
            if Fraction(-1) in f and not chi_irr and gamma == 0:
                kept += 1
    work.trace.append({"op": "radical", "residues_kept": kept})


def _solve_scalar_gauge(f, chi_irr, gamma, b, prec):
    """u with u' - (sum chi_k t^{r_k} + gamma t^{-1}) u = -f below ``prec``.

    Returns {exponent: coefficient}.  With an irregular character the
    equation is solved from its most singular term; otherwise term by term,
    leaving the resonant residue when gamma = 0.
    """
    u = {}
    step = Fraction(1, b)
    exps = sorted(f)
    if not exps:
        return u
    if chi_irr:
        if prec == INF:
            raise InsufficientPrecision("irregular radical equation has no finite solution on an exact input")
        r0, d0 = min(chi_irr)
        others = [(r, d) for r, d in chi_irr if r != r0]
        e = exps[0]
        while e < prec:
            acc = f.get(e, ZERO)
            nxt = e + 1
            if nxt in u:
                acc = acc + (nxt - gamma) * u[nxt]
            for r, d in others:
                if e - r in u:
                    acc = acc - d * u[e - r]
            if not is_zero(acc):
                u[e - r0] = acc / d0
            e += step
        return u
    for e in exps:
        if e >= prec:
            continue
        k = e + 1
        denom = k - gamma
        if is_zero(denom):
            if e != -1:
                raise ArithmeticError("resonant term off the residue; residue was not normalized")
            continue
        u[k] = -f[e] / denom
    return u


# -- extraction ------------------------------------------------------------------

def _extract(work: _Work, group: GroupContext, normalized: bool) -> CanonicalForm:
    a = work.a
    if a.t_prec <= -1:
        raise InsufficientPrecision("residue is not determined", needed=Fraction(-1), have=a.t_prec)
    levels, ds = [], []
    res = mx.zeros(group.n)
    for e, m in a.terms():
        if e < -1:
            if not mx.is_diagonal(m):
                raise ArithmeticError(f"non-diagonal irregular coefficient at t^{e}")
            levels.append(e)
            ds.append(m)
        elif e == -1:
            res = m
        else:
            raise ArithmeticError(f"leftover coefficient at t^{e}")
    return CanonicalForm(a.ram, group.n, tuple(levels), tuple(ds), res, normalized)


# -- public drivers --------------------------------------------------------------

def _prepare(a: MatSeries, ctx: GroupContext, fld):
    for j, m in a.coeffs.items():
        if not ctx.contains(m):
            raise ValueError(f"coefficient at t^({j}/{a.ram}) is not in Lie({ctx.kind})")
    if fld is None:
        fld = field_of([x for m in a.coeffs.values() for row in m for x in row])
    return fld


def _run(a: MatSeries, ctx: GroupContext, fld, normalize):
    work = _Work(a, ctx, fld)
    if ctx.levi:
        levi = _reductive_loop(work, ctx.levi_context() if ctx.unipotent else ctx)
    else:
        levi = ctx.levi_context()
    used = work.a.ram // a.ram
    if normalize and ctx.levi:
        _normalize(work, levi, ctx.levi_context() if ctx.unipotent else ctx)
    if ctx.unipotent:
        if ctx.levi:
            _upper_jordan(work, levi)
        _eliminate_radical(work, ctx)
    canonical = _extract(work, ctx, normalize and ctx.levi)
    return ReductionResult(canonical, work.g, work.trace, a, ctx, fld, used, work.a)


def _working_window(a: MatSeries, ctx: GroupContext):
    """Truncation used when an exact input needs infinite gauge series."""
    v = a.map(ctx.levi_part).order if ctx.levi else a.order
    v = Fraction(-1) if v == INF or v >= -1 else v
    h = height(ctx) if ctx.levi else max(1, ctx.n - 1)
    return v + max(4, (h + 2) * (abs(v) + 1))


def reduce_connection(a: MatSeries, ctx: GroupContext, fld: NumberField | None = None,
                      normalize: bool | None = None) -> ReductionResult:
    """Reduce ``a`` to canonical form in ``ctx``.

    K is enlarged when eigenvalues leave it.  An exact input whose gauge
    series do not terminate is truncated (the window doubles on failure) and
    the certificate then holds below that window.  ``normalize`` defaults to
    True except for tori, whose canonical form is the polar part itself.
    """
    fld = _prepare(a, ctx, fld)
    if normalize is None:
        normalize = not ctx.is_torus() and not (ctx.levi and not ctx.unipotent and ctx.n == 1)
    attempts = [a]
    if a.prec == INF:
        w = _working_window(a, ctx)
        attempts += [a.truncate_t(w + k * (w + 2)) for k in (0, 1, 2, 4, 8)]
    last = None
    for src in attempts:
        while True:
            try:
                return _shorten(a, _run(src, ctx, fld, normalize), normalize)
            except FieldTooSmall as exc:
                if exc.suggestion is None or exc.suggestion is fld or not exc.suggestion.contains(fld):
                    raise
                fld = exc.suggestion
            except InsufficientPrecision as exc:
                last = exc
                break
    raise last


def _shorten(a: MatSeries, result: ReductionResult, normalize: bool) -> ReductionResult:
    """Swap in exp(-integral of A) when all coefficients are commuting nilpotents.

    The algorithmic certificate is kept unless the short one reaches the same
    canonical series and verifies.
    """
    mats = [m for _, m in a.terms()]
    if not mats or not all(mx.is_nilpotent(m) for m in mats):
        return result
    if any(not mx.is_zero_matrix(mx.bracket(x, y)) for i, x in enumerate(mats) for y in mats[i + 1:]):
        return result
    terms = tuple((e + 1, mx.scale(-1 / (e + 1), m)) for e, m in a.terms() if e != -1)
    if not terms:
        return result
    g = GaugeTransform([Exp(terms)], a.ram)
    res = a.coeff_at(-1)
    if not mx.is_zero_matrix(res):
        rest = _run(MatSeries.from_terms([(-1, res)], a.dim, a.ram), result.ctx, result.field, normalize)
        g = compose(rest.certificate, g)
    if len(g) >= len(result.certificate):
        return result
    try:
        ok = verify_equivalence(g, a, result.canonical.to_series(), result.ctx).ok
    except InsufficientPrecision:
        ok = False
    if not ok:
        return result
    trace = result.trace + [{"op": "shorten", "atoms_before": len(result.certificate), "atoms_after": len(g)}]
    return replace(result, certificate=g, trace=trace)


def reduce_torus(a: MatSeries, ctx: GroupContext, fld=None) -> ReductionResult:
    """Diagonal connections: keep the polar part, integrate the rest with one exponential."""
    if not ctx.is_torus():
        raise ValueError("reduce_torus needs a diagonal torus context")
    fld = _prepare(a, ctx, fld)
    work = _Work(a, ctx, fld)
    work.require(Fraction(-1) + Fraction(1, a.ram), "residue")
    _central_integration(work, ctx)
    canonical = _extract(work, ctx, False)
    return ReductionResult(canonical, work.g, work.trace, a, ctx, fld, 1, work.a)


def reduce_regular_semisimple(a: MatSeries, ctx: GroupContext, fld=None) -> ReductionResult:
    if a.order < -1:
        raise ValueError("connection is not of the first kind")
    return reduce_connection(a, ctx, fld, normalize=True)


def reduce_reductive(a: MatSeries, ctx: GroupContext, fld=None, normalize=None) -> ReductionResult:
    if ctx.unipotent:
        raise ValueError("reduce_reductive needs a reductive context")
    return reduce_connection(a, ctx, fld, normalize)


def reduce_unipotent(a: MatSeries, ctx: GroupContext, fld=None) -> ReductionResult:
    if ctx.levi:
        raise ValueError("reduce_unipotent needs a unipotent context")
    return reduce_connection(a, ctx, fld, normalize=False)


def reduce_solvable(a: MatSeries, ctx: GroupContext, fld=None) -> ReductionResult:
    if not (ctx.unipotent and ctx.levi and all(b == 1 for b in ctx.blocks)):
        raise ValueError("reduce_solvable needs an upper triangular context")
    return reduce_connection(a, ctx, fld, normalize=True)


def reduce_general(a: MatSeries, ctx: GroupContext, fld=None) -> ReductionResult:
    return reduce_connection(a, ctx, fld)


def align_first_kind(a: MatSeries, ctx: GroupContext, fld=None):
    """Aligned form of a first-kind connection: (aligned series, certificate)."""
    if ctx.unipotent:
        raise ValueError("alignment is implemented for reductive contexts")
    fld = _prepare(a, ctx, fld)
    work = _Work(a, ctx, fld)
    if _derived_series(a, ctx).order < -1 or a.order < -1:
        raise ValueError("connection is not of the first kind")
    work.require(Fraction(-1) + Fraction(1, a.ram), "residue")
    res = work.coeff(Fraction(-1), ctx)
    data = integer_eigenspace_data(res, ctx)
    work.require(max([q for q in data.rational_eigenvalues if q > 0 and (q * a.ram).denominator == 1], default=ZERO),
                 "alignment window")
    lie = ctx.lie
    ad = lie.ad(res)
    for e in _grid_below(work, Fraction(-1), work.a.t_prec):
        q = e + 1
        comp = work.coeff(e, ctx)
        if mx.is_zero_matrix(comp):
            continue
        vec = lie.coords(comp)
        if q in data.projections:
            proj = data.projections[q]
            keep = [sum((proj[i][j] * vec[j] for j in range(lie.dim) if not is_zero(vec[j])), ZERO)
                    for i in range(lie.dim)]
            vec = [x - y for x, y in zip(vec, keep)]
            if all(is_zero(x) for x in vec):
                continue
        shifted = [[ad[i][j] - (q if i == j else ZERO) for j in range(lie.dim)] for i in range(lie.dim)]
        sol = mx.solve(shifted, vec)
        work.push(Exp(((q, lie.element(sol)),)))
    return work.a, work.g


def principal_level(a: MatSeries, ctx: GroupContext, fld=None):
    """Smallest level of the canonical form, or the string "regular"."""
    if ctx.levi and not ctx.unipotent:
        der = _derived_series(a, ctx)
        cen = _center_series(a, ctx)
        r = min(der.order, cen.order)
        if r < -1:
            lead = a.coeff_at(r)
            if not mx.is_nilpotent(ctx.levi_part(lead)):
                return r
    res = reduce_connection(a, ctx, fld)
    lvl = res.canonical.principal_level
    return "regular" if lvl is None else lvl


# -- bounds and windows -------------------------------------------------------------

def ramification_bound(ctx: GroupContext) -> int:
    """2 hgt^{2R-1} J(G_der) prod_{j=0}^{floor(dim/3)} (4 hgt + 2)^{floor((dim - 3j)/2)}."""
    h = height(ctx)
    if h == 0:
        return 1
    rank = ctx.derived_rank()
    dim = ctx.derived_dim()
    J = lattice_invariants(ctx).J
    out = 2 * h ** (2 * rank - 1) * J
    for j in range(dim // 3 + 1):
        out *= (4 * h + 2) ** ((dim - 3 * j) // 2)
    return out


def regular_ramification_bound(ctx: GroupContext) -> int:
    """hgt(g) * I(G), at least 1."""
    return max(1, height(ctx) * lattice_invariants(ctx).I)


def nilpotency_class(ctx: GroupContext) -> int:
    """Length of the upper central series minus one (abelian groups have class 0)."""
    if not ctx.unipotent:
        return 0
    nb = len(ctx.blocks)
    return max(0, nb - 2)


@dataclass(frozen=True)
class Window:
    """``count``: coefficients needed from the leading order; ``bound``: exclusive exponent.

    Solvable kinds also carry separate torus and unipotent bounds.
    """

    count: object
    bound: object
    torus_bound: object = None
    unipotent_bound: object = None


def solvable_L(residue_diag, ctx: GroupContext):
    """max({<pi(A^T_{-1}), chi>} over weights chi of the radical, and 0)."""
    best = ZERO
    for i in range(ctx.n):
        for j in range(ctx.n):
            if i != j and ctx.block_of[i] != ctx.block_of[j] and ctx.allowed(i, j):
                best = max(best, rational_projection(residue_diag[i]) - rational_projection(residue_diag[j]))
    return best


def determinacy_window(ctx: GroupContext, r, kind: str = "irregular", residue=None, k=None,
                       torus_order=None) -> Window:
    """Coefficient windows from the determinacy statements.

    kind "irregular": reductive, leading order r; the irregular part depends
    on A_{r+m} for 0 <= m < (hgt+1)(|r|-1).
    kind "unipotent": valuation r; the class depends on A_j for j < n(|r|-1).
    kind "solvable": unipotent valuation r, torus residue ``residue`` and
    torus valuation ``torus_order``; torus and unipotent parts get separate
    bounds (the torus bound is one larger when the torus part is regular).
    kind "regular": aligned form depends on A_j for -1 <= j <= k(A_{-1}).
    """
    r = Fraction(r)
    if kind == "irregular":
        if r >= -1:
            return Window(0, r)
        cnt = (height(ctx) + 1) * (abs(r) - 1)
        return Window(cnt, r + cnt)
    if kind == "unipotent":
        n = nilpotency_class(ctx)
        if r > -1:
            return Window(0, r)
        bound = n * (abs(r) - 1)
        return Window(max(ZERO, bound - r), bound)
    if kind == "solvable":
        n = nilpotency_class(ctx)
        L = solvable_L(residue or [ZERO] * ctx.n, ctx)
        irregular = torus_order is not None and torus_order < -1
        if r > L - 1:
            return Window(0, r, torus_bound=ZERO, unipotent_bound=r)
        ub = Fraction(math.ceil(n * (abs(r) - 1) + L))
        tb = ub + abs(r) - (1 if irregular else 0)
        return Window(max(ZERO, ub - r), ub, torus_bound=tb, unipotent_bound=ub)
    if kind == "regular":
        kk = 0 if k is None else k
        return Window(kk + 2, Fraction(kk + 1))
    raise ValueError(f"unknown window kind {kind}")
