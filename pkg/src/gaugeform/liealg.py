"""Matrix groups inside upper block-triangular matrices and their Lie theory.

A ``GroupContext`` describes ``L x U`` where ``L`` is a product of GL blocks
on the diagonal (optionally cut down by trace conditions on unions of blocks)
and ``U`` is either trivial or the full strictly block-upper part.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import cached_property

import sympy as sp

from . import matrices as mx
from . import polys
from .errors import NotNilpotent, ZeroInput
from .scalars import NumberField, field_of, is_zero, order_key, rational_roots, roots_in_field

ZERO = Fraction(0)
ONE = Fraction(1)


@dataclass(frozen=True)
class GroupContext:
    """``blocks``: Levi block sizes; ``trace_groups``: index sets whose diagonal sum vanishes.

    ``levi`` is False for the unipotent group (no diagonal part at all).
    ``adjoint`` only changes the cocharacter lattice used by lattice_invariants.
    """

    n: int
    blocks: tuple
    unipotent: bool = False
    levi: bool = True
    trace_groups: tuple = ()
    kind: str = "GL"
    adjoint: bool = False

    # -- named constructors ---------------------------------------------
    @classmethod
    def GL(cls, n):
        return cls(n, (n,), kind="GL")

    @classmethod
    def SL(cls, n):
        return cls(n, (n,), trace_groups=(tuple(range(n)),), kind="SL")

    @classmethod
    def PGL(cls, n):
        """sl_n with the full coweight lattice as cocharacters."""
        return cls(n, (n,), trace_groups=(tuple(range(n)),), kind="PGL", adjoint=True)

    @classmethod
    def DiagTorus(cls, n):
        return cls(n, (1,) * n, kind="DiagTorus")

    @classmethod
    def UpperTriangular(cls, n):
        return cls(n, (1,) * n, unipotent=True, kind="UpperTriangular")

    @classmethod
    def StrictUpper(cls, n):
        return cls(n, (1,) * n, unipotent=True, levi=False, kind="StrictUpper")

    @classmethod
    def LeviProduct(cls, factors, unipotent=False):
        """``factors``: list of ("gl"|"sl", size).  ``unipotent`` adds the block-upper radical."""
        blocks, groups, off = [], [], 0
        for typ, size in factors:
            blocks.append(size)
            if typ.lower() == "sl":
                groups.append(tuple(range(off, off + size)))
            elif typ.lower() != "gl":
                raise ValueError(f"unknown factor type {typ}")
            off += size
        return cls(off, tuple(blocks), unipotent=unipotent, trace_groups=tuple(groups), kind="LeviProduct")

    # -- structure --------------------------------------------------------
    @cached_property
    def offsets(self):
        out, off = [], 0
        for b in self.blocks:
            out.append(off)
            off += b
        return tuple(out)

    @cached_property
    def block_of(self):
        out = []
        for k, b in enumerate(self.blocks):
            out.extend([k] * b)
        return tuple(out)

    def block_ranges(self):
        return [range(o, o + b) for o, b in zip(self.offsets, self.blocks)]

    @property
    def is_reductive(self):
        return not self.unipotent or self.n == 0

    def levi_context(self) -> "GroupContext":
        if not self.levi:
            return GroupContext(self.n, (1,) * self.n, levi=False, kind="Trivial")
        kind = self.kind if not self.unipotent else ("DiagTorus" if all(b == 1 for b in self.blocks) else "LeviProduct")
        return replace(self, unipotent=False, kind=kind)

    def allowed(self, i, j) -> bool:
        """Is E_ij (i != j) in the Lie algebra?"""
        bi, bj = self.block_of[i], self.block_of[j]
        if bi == bj:
            return self.levi
        return self.unipotent and bi < bj

    def is_torus(self) -> bool:
        return self.levi and not self.unipotent and all(b == 1 for b in self.blocks)

    @cached_property
    def lie(self) -> "LieBasis":
        return LieBasis(self)

    def dim(self) -> int:
        return len(self.lie.basis)

    def contains(self, m) -> bool:
        n = self.n
        for i in range(n):
            for j in range(n):
                if i != j and not is_zero(m[i][j]) and not self.allowed(i, j):
                    return False
        if not self.levi:
            return all(is_zero(m[i][i]) for i in range(n))
        for grp in self.trace_groups:
            s = ZERO
            for i in grp:
                s = s + m[i][i]
            if not is_zero(s):
                return False
        return True

    # -- Levi center / derived split ----------------------------------------
    def center_part(self, m):
        """Projection of the Levi-diagonal part of m onto the center of the Levi."""
        vals = [ZERO] * self.n
        if self.levi:
            for rng in self.block_ranges():
                t = ZERO
                for i in rng:
                    t = t + m[i][i]
                c = t / len(rng)
                for i in rng:
                    vals[i] = c
        return mx.diag(vals)

    def levi_part(self, m):
        n = self.n
        return tuple(tuple(m[i][j] if self.block_of[i] == self.block_of[j] else ZERO for j in range(n)) for i in range(n))

    def derived_part(self, m):
        """Levi component minus its central projection."""
        return mx.sub(self.levi_part(m), self.center_part(m))

    def roots(self):
        """Roots e_i - e_j of the Levi as index pairs."""
        if not self.levi:
            return []
        return [(i, j) for rng in self.block_ranges() for i in rng for j in rng if i != j]

    def simple_roots(self):
        if not self.levi:
            return []
        return [(i, i + 1) for rng in self.block_ranges() for i in list(rng)[:-1]]

    def derived_dim(self) -> int:
        return sum(b * b - 1 for b in self.blocks) if self.levi else 0

    def derived_rank(self) -> int:
        return sum(b - 1 for b in self.blocks) if self.levi else 0

    def refine(self, sizes_per_block) -> "GroupContext":
        """Split each Levi block into consecutive sub-blocks of the given sizes."""
        new_blocks = []
        for sizes, b in zip(sizes_per_block, self.blocks):
            if sum(sizes) != b:
                raise ValueError("sub-block sizes do not add up")
            new_blocks.extend(sizes)
        kind = "DiagTorus" if all(x == 1 for x in new_blocks) and not self.trace_groups and not self.unipotent else (
            self.kind if tuple(new_blocks) == self.blocks else "LeviProduct")
        return replace(self, blocks=tuple(new_blocks), kind=kind)

    def to_json(self):
        if self.kind in ("GL", "SL", "PGL", "DiagTorus", "UpperTriangular", "StrictUpper"):
            return {"group": self.kind, "n": self.n}
        factors = []
        for rng, b in zip(self.block_ranges(), self.blocks):
            typ = "sl" if tuple(rng) in self.trace_groups else "gl"
            factors.append([typ, b])
        out = {"group": "LeviProduct", "factors": factors, "unipotent": self.unipotent}
        extra = [list(g) for g in self.trace_groups if g not in [tuple(r) for r in self.block_ranges()]]
        if extra:
            out["trace_groups"] = extra
        return out

    @classmethod
    def from_json(cls, obj):
        g = obj["group"]
        aliases = {"gl": "GL", "sl": "SL", "pgl": "PGL", "torus": "DiagTorus", "diagtorus": "DiagTorus",
                   "borel": "UpperTriangular", "uppertriangular": "UpperTriangular", "solvable": "UpperTriangular",
                   "unipotent": "StrictUpper", "strictupper": "StrictUpper", "leviproduct": "LeviProduct"}
        g = aliases.get(g.lower(), g)
        if g == "LeviProduct":
            ctx = cls.LeviProduct([tuple(f) for f in obj["factors"]], unipotent=bool(obj.get("unipotent", False)))
            if obj.get("trace_groups"):
                ctx = replace(ctx, trace_groups=ctx.trace_groups + tuple(tuple(g) for g in obj["trace_groups"]))
            return ctx
        return getattr(cls, g)(int(obj["n"]))


class LieBasis:
    """A fixed basis of Lie(ctx) with exact coordinate extraction."""

    def __init__(self, ctx: GroupContext):
        n = ctx.n
        basis = []
        for i in range(n):
            for j in range(n):
                if i != j and ctx.allowed(i, j):
                    basis.append(mx.unit(n, i, j))
        if ctx.levi:
            rows = []
            for grp in ctx.trace_groups:
                rows.append([ONE if i in grp else ZERO for i in range(n)])
            diag_space = mx.nullspace(rows, n) if rows else [[ONE if i == j else ZERO for i in range(n)] for j in range(n)]
            for v in diag_space:
                basis.append(mx.diag(v))
        self.n = n
        self.basis = basis
        self.dim = len(basis)
        self._positions, self._inv = self._coordinate_map([mx.flatten(b) for b in basis])

    @staticmethod
    def _coordinate_map(flat):
        if not flat:
            return [], []
        # pivot columns of the row-reduced basis are positions where it is independent
        _, positions = mx.rref([list(v) for v in flat])
        sub = [[flat[k][p] for k in range(len(flat))] for p in positions]
        return positions, mx.inverse(sub)

    def coords(self, m):
        vec = mx.flatten(m)
        rhs = [vec[p] for p in self._positions]
        return [sum((self._inv[k][r] * rhs[r] for r in range(len(rhs)) if not is_zero(rhs[r])), ZERO)
                for k in range(self.dim)]

    def element(self, coords):
        out = mx.zeros(self.n)
        for c, b in zip(coords, self.basis):
            if not is_zero(c):
                out = mx.add(out, mx.scale(c, b))
        return out

    def operator(self, fn):
        """Matrix (in this basis) of a linear map Lie -> Lie; columns are images."""
        cols = [self.coords(fn(b)) for b in self.basis]
        return [[cols[k][r] for k in range(self.dim)] for r in range(self.dim)]

    def ad(self, m):
        return self.operator(lambda x: mx.bracket(m, x))


# -- Jordan decomposition -----------------------------------------------------

@dataclass(frozen=True)
class JordanPair:
    semisimple: tuple
    nilpotent: tuple


def jordan_decompose(m) -> JordanPair:
    """Additive Jordan decomposition by Newton iteration on the squarefree charpoly."""
    m = mx.to_matrix(m)
    n = len(m)
    q = polys.squarefree_part(mx.charpoly(m))
    dq = polys.derivative(q)
    s = m
    for _ in range(2 * n + 2):
        qs = mx.poly_eval_matrix(q, s)
        if mx.is_zero_matrix(qs):
            break
        s = mx.sub(s, mx.mul(qs, mx.inverse(mx.poly_eval_matrix(dq, s))))
    else:  # pragma: no cover - Newton converges quadratically
        raise RuntimeError("Jordan decomposition did not converge")
    return JordanPair(s, mx.sub(m, s))


# -- eigenvectors over K ----------------------------------------------------

def _restrict(m, basis):
    """Matrix of m on the invariant span of ``basis`` (list of column vectors)."""
    k = len(basis)
    rows = [[basis[c][r] for c in range(k)] for r in range(len(basis[0]))]
    out_cols = []
    for v in basis:
        mv = [sum((m[r][c] * v[c] for c in range(len(v)) if not is_zero(v[c])), ZERO) for r in range(len(m))]
        sol = mx.solve(rows, mv)
        if sol is None:
            raise ValueError("subspace is not invariant")
        out_cols.append(sol)
    return [[out_cols[c][r] for c in range(k)] for r in range(k)]


def eigenvalues(m, fld: NumberField | None = None):
    """Eigenvalues in K with multiplicity (FieldTooSmall, with suggestion, otherwise)."""
    fld = fld or field_of([x for row in m for x in row])
    return roots_in_field(mx.charpoly(m), fld)


def joint_eigenspaces(mats, indices, fld=None):
    """Split span{e_i : i in indices} by joint eigenvalues of commuting semisimple matrices.

    Returns a list of (eigenvalue tuple, list of column vectors) sorted by
    eigenvalue tuple under the fixed order on K.
    """
    n = len(mats[0]) if mats else 0
    start = [[ONE if r == i else ZERO for r in range(n)] for i in indices]
    pieces = [((), start)]
    for m in mats:
        new = []
        for vals, basis in pieces:
            sub = _restrict(m, basis)
            if all(is_zero(sub[i][j]) for i in range(len(sub)) for j in range(len(sub)) if i != j) and \
                    len({order_key(sub[i][i]) for i in range(len(sub))}) == 1:
                new.append((vals + (sub[0][0],), basis))
                continue
            evs = sorted(set(eigenvalues(sub, fld)), key=order_key)
            for ev in evs:
                shifted = [[sub[i][j] - (ev if i == j else ZERO) for j in range(len(sub))] for i in range(len(sub))]
                ker = mx.nullspace(shifted, len(sub))
                vecs = []
                for kv in ker:
                    vecs.append([sum((basis[c][r] * kv[c] for c in range(len(kv)) if not is_zero(kv[c])), ZERO)
                                 for r in range(n)])
                new.append((vals + (ev,), vecs))
        pieces = new
    pieces.sort(key=lambda p: tuple(order_key(v) for v in p[0]))
    return pieces


def diagonalizing_conjugation(mats, ctx: GroupContext, fld=None):
    """Block-diagonal Q with Q M Q^{-1} diagonal for each commuting semisimple M.

    Eigenvalues are grouped contiguously per Levi block in the fixed order.
    Returns (Q, Q^{-1}, sizes_per_block) where sizes_per_block lists the
    joint-eigenspace dimensions inside every block.  For trace-constrained
    contexts det Q = 1.
    """
    n = ctx.n
    cols = []
    sizes = []
    for rng in ctx.block_ranges():
        pieces = joint_eigenspaces(mats, list(rng), fld) if mats else [((), [[ONE if r == i else ZERO for r in range(n)] for i in rng])]
        sizes.append([len(b) for _, b in pieces])
        for _, basis in pieces:
            cols.extend(basis)
    p = tuple(tuple(cols[c][r] for c in range(n)) for r in range(n))
    p = _unimodular(p, ctx)
    q = mx.inverse(p)
    return q, p, sizes


def _unimodular(p, ctx):
    """Rescale the last column so det p = 1 when the context needs it."""
    if not ctx.trace_groups:
        return p
    d = mx.det(p)
    if d == 1:
        return p
    n = len(p)
    inv = ONE / d
    return tuple(tuple(p[r][c] * inv if c == n - 1 else p[r][c] for c in range(n)) for r in range(n))


# -- Jacobson-Morozov ---------------------------------------------------------

@dataclass(frozen=True)
class SL2Triple:
    H: tuple
    X: tuple
    Y: tuple
    chain_basis: tuple = field(default=(), compare=False)
    weights: tuple = field(default=(), compare=False)

    def check(self) -> bool:
        h, x, y = self.H, self.X, self.Y
        return (mx.bracket(h, x) == mx.scale(2, x) and mx.bracket(h, y) == mx.scale(-2, y)
                and mx.bracket(x, y) == h)


def _jordan_chains(y, indices):
    """Jordan chains of a nilpotent y on span{e_i : i in indices}: list of (head, length)."""
    n = len(y)
    sub = [[y[i][j] for j in indices] for i in indices]
    k = len(indices)
    powers = [mx.identity(k)]
    while not mx.is_zero_matrix(powers[-1]):
        powers.append(mx.mul(powers[-1], sub))
        if len(powers) > k + 1:
            raise NotNilpotent("matrix is not nilpotent")
    top = len(powers) - 1
    kernels = [mx.nullspace([list(r) for r in p], k) if k else [] for p in powers]

    def apply(m, v):
        return [sum((m[r][c] * v[c] for c in range(k) if not is_zero(v[c])), ZERO) for r in range(k)]

    chains = []
    for s in range(top, 0, -1):
        span = list(kernels[s - 1])
        for head, length in chains:
            v = head
            for _ in range(length - s):
                v = apply(sub, v)
            span.append(v)
        current_rank = mx.rank(span) if span else 0
        for cand in kernels[s]:
            trial = span + [cand]
            r = mx.rank(trial)
            if r > current_rank:
                chains.append((cand, s))
                span = trial
                current_rank = r
    full = []
    for head, length in chains:
        vecs = [head]
        for _ in range(length - 1):
            vecs.append(apply(sub, vecs[-1]))
        embedded = []
        for v in vecs:
            big = [ZERO] * n
            for pos, idx in enumerate(indices):
                big[idx] = v[pos]
            embedded.append(big)
        full.append(embedded)
    return full


def jm_triple(y, ctx: GroupContext | None = None) -> SL2Triple:
    """sl2-triple (H, X, Y) through Jordan chains, with H integral in the chain basis.

    On a chain v, Yv, ..., Y^{k-1}v the element H acts by k-1-2i and X
    sends Y^i v to i(k-i) Y^{i-1} v.
    """
    y = mx.to_matrix(y)
    n = len(y)
    if mx.is_zero_matrix(y):
        raise ZeroInput("Jacobson-Morozov needs a nonzero nilpotent")
    if not mx.is_nilpotent(y):
        raise NotNilpotent("matrix is not nilpotent")
    ctx = ctx or GroupContext.GL(n)
    cols, weights, x_images = [], [], []
    for rng in ctx.block_ranges():
        for chain in _jordan_chains(y, list(rng)):
            k = len(chain)
            base = len(cols)
            for i, v in enumerate(chain):
                cols.append(v)
                weights.append(k - 1 - 2 * i)
                x_images.append((base + i - 1, i * (k - i)) if i else None)
    p = tuple(tuple(cols[c][r] for c in range(n)) for r in range(n))
    pinv = mx.inverse(p)
    h_diag = mx.diag([Fraction(w) for w in weights])
    x_chain = [[ZERO] * n for _ in range(n)]
    for c, img in enumerate(x_images):
        if img is not None:
            x_chain[img[0]][c] = Fraction(img[1])
    h = mx.conj(p, h_diag, pinv)
    x = mx.conj(p, tuple(tuple(r) for r in x_chain), pinv)
    return SL2Triple(h, x, y, chain_basis=p, weights=tuple(weights))


def height(ctx: GroupContext) -> int:
    """Largest height of a positive root: max block size minus one."""
    if not ctx.levi:
        return 0
    return max((b - 1 for b in ctx.blocks), default=0)


def lambda_of(y, ctx: GroupContext | None = None) -> Fraction:
    """sup over roots of alpha(H)/2 + 1 for the JM element H of y."""
    ctx = ctx or GroupContext.GL(len(y))
    trip = jm_triple(y, ctx)
    w = diagonal_weights(trip, ctx)
    best = None
    for i, j in ctx.roots():
        val = Fraction(w[i] - w[j], 2) + 1
        best = val if best is None or val > best else best
    return best if best is not None else Fraction(1)


def diagonal_weights(trip: SL2Triple, ctx: GroupContext):
    """Eigenvalues of H arranged per block (the chain basis is block-diagonal)."""
    return list(trip.weights)


def orbit_dim(y, ctx: GroupContext) -> int:
    lie = ctx.lie
    if mx.is_zero_matrix(y):
        return 0
    return lie.dim - len(mx.nullspace(lie.ad(y), lie.dim))


# -- centralizers ---------------------------------------------------------------

def centralizer_basis(elements, ctx: GroupContext):
    """Basis of {Z in Lie(ctx) : [E, Z] = 0 for all E in elements}."""
    lie = ctx.lie
    rows = []
    for e in elements:
        rows.extend(lie.ad(e))
    if not rows:
        return list(lie.basis)
    return [lie.element(v) for v in mx.nullspace(rows, lie.dim)]


def centralizer_context(elements, ctx: GroupContext, fld=None):
    """Context of the centralizer of commuting semisimple elements, after diagonalizing.

    Returns (new_ctx, Q, Q^{-1}) with Q E Q^{-1} diagonal for every element.
    """
    for a in elements:
        for b in elements:
            if not mx.is_zero_matrix(mx.bracket(a, b)):
                raise ValueError("elements do not commute")
    for a in elements:
        if not mx.is_zero_matrix(jordan_decompose(a).nilpotent):
            raise ValueError("elements must be semisimple")
    if not elements or all(mx.is_zero_matrix(a) for a in elements):
        n = ctx.n
        return ctx, mx.identity(n), mx.identity(n)
    q, qinv, sizes = diagonalizing_conjugation(list(elements), ctx, fld)
    return ctx.refine(sizes), q, qinv


# -- ad eigen-data --------------------------------------------------------------

@dataclass
class EigenspaceData:
    projections: dict
    k_max: object
    rational_eigenvalues: list


def integer_eigenspace_data(m, ctx: GroupContext) -> EigenspaceData:
    """Projections onto generalized eigenspaces of ad m for its rational eigenvalues.

    ``k_max`` is the largest integer eigenvalue (-inf when none).
    """
    lie = ctx.lie
    ad = lie.ad(mx.to_matrix(m))
    d = lie.dim
    if d == 0:
        return EigenspaceData({}, -math.inf, [])
    roots = rational_roots(mx.charpoly(ad))
    mult = {}
    for r in roots:
        mult[r] = mult.get(r, 0) + 1
    projections = {}
    for lam, k in mult.items():
        projections[lam] = generalized_projection(ad, lam, k)
    ints = [r for r in mult if r.denominator == 1]
    return EigenspaceData(projections, max(ints) if ints else -math.inf, sorted(mult))


def generalized_projection(op, lam, mult):
    """Projection onto ker (op - lam)^mult along im (op - lam)^mult."""
    d = len(op)
    shifted = tuple(tuple(op[i][j] - (lam if i == j else ZERO) for j in range(d)) for i in range(d))
    power = mx.mat_pow(shifted, mult)
    ker = mx.nullspace([list(r) for r in power], d)
    image = mx.column_space_basis([list(c) for c in zip(*power)])
    cols = ker + image
    basis = tuple(tuple(cols[c][r] for c in range(d)) for r in range(d))
    sel = mx.diag([ONE] * len(ker) + [ZERO] * len(image))
    return mx.conj(basis, sel, mx.inverse(basis))


# -- lattice invariants -----------------------------------------------------------

@dataclass(frozen=True)
class LatticeInvariants:
    I: int
    J: int
    degrees: tuple
    coxeter_number: int


def _exponent(int_matrix) -> int:
    """Exponent of Z^k / (column lattice) via Smith normal form."""
    if not int_matrix:
        return 1
    from sympy.matrices.normalforms import smith_normal_form
    snf = smith_normal_form(sp.Matrix(int_matrix), domain=sp.ZZ)
    e = 1
    for i in range(min(snf.shape)):
        v = abs(int(snf[i, i]))
        if v == 0:
            raise ValueError("lattice is not of full rank")
        e = math.lcm(e, v)
    return e


def lattice_invariants(ctx: GroupContext) -> LatticeInvariants:
    """(I, J, degrees, Coxeter number) of the derived group of the Levi.

    Coordinates are taken against the fundamental coweights, so the
    coroot lattice is given by the Cartan matrix.  For GL-type blocks the
    center absorbs the coweight quotient and I is 1.
    """
    blocks = [b for b in ctx.blocks if b > 1] if ctx.levi else []
    if not blocks:
        return LatticeInvariants(1, 1, (), 1)
    J = 1
    I = 1
    degrees = set()
    h = 1
    blocks_with_sl = set()
    for g in ctx.trace_groups:
        blocks_with_sl.update(ctx.block_of[i] for i in g)
    for k, b in enumerate(ctx.blocks):
        if b < 2 or not ctx.levi:
            continue
        cartan = [[2 if i == j else (-1 if abs(i - j) == 1 else 0) for j in range(b - 1)] for i in range(b - 1)]
        J = math.lcm(J, _exponent(cartan))
        if ctx.adjoint:
            cochar = [[1 if i == j else 0 for j in range(b - 1)] for i in range(b - 1)]
        elif k in blocks_with_sl:
            cochar = cartan
        else:
            cochar = None
        if cochar is not None:
            I = math.lcm(I, _exponent(cochar))
        degrees.update(range(2, b + 1))
        h = math.lcm(h, b)
    return LatticeInvariants(I, J, tuple(sorted(degrees)), h)
