"""Dense exact linear algebra over K: matrices are tuples of row tuples."""

from __future__ import annotations

from fractions import Fraction

from .scalars import is_zero

ZERO = Fraction(0)
ONE = Fraction(1)


def zeros(n: int, m: int | None = None):
    m = n if m is None else m
    return tuple((ZERO,) * m for _ in range(n))


def identity(n: int):
    return tuple(tuple(ONE if i == j else ZERO for j in range(n)) for i in range(n))


def diag(values):
    values = list(values)
    n = len(values)
    return tuple(tuple(values[i] if i == j else ZERO for j in range(n)) for i in range(n))


def unit(n: int, i: int, j: int, value=ONE):
    """value * E_ij (0-based)."""
    return tuple(tuple(value if (r, c) == (i, j) else ZERO for c in range(n)) for r in range(n))


def to_matrix(rows):
    return tuple(tuple(Fraction(x) if isinstance(x, (int, str)) else x for x in row) for row in rows)


def shape(a):
    return len(a), (len(a[0]) if a else 0)


def add(a, b):
    return tuple(tuple(x + y for x, y in zip(ra, rb)) for ra, rb in zip(a, b))


def sub(a, b):
    return tuple(tuple(x - y for x, y in zip(ra, rb)) for ra, rb in zip(a, b))


def neg(a):
    return tuple(tuple(-x for x in row) for row in a)


def scale(c, a):
    if is_zero(c):
        return zeros(*shape(a))
    return tuple(tuple(c * x if not is_zero(x) else ZERO for x in row) for row in a)


def mul(a, b):
    n = len(a)
    if not n:
        return ()
    m = len(b[0])
    inner = len(b)
    out = []
    for i in range(n):
        ra = a[i]
        row = [ZERO] * m
        for k in range(inner):
            x = ra[k]
            if is_zero(x):
                continue
            rb = b[k]
            for j in range(m):
                y = rb[j]
                if not is_zero(y):
                    row[j] = row[j] + x * y
        out.append(tuple(row))
    return tuple(out)


def bracket(a, b):
    return sub(mul(a, b), mul(b, a))


def is_zero_matrix(a) -> bool:
    return all(is_zero(x) for row in a for x in row)


def transpose(a):
    return tuple(zip(*a)) if a else ()


def trace(a):
    t = ZERO
    for i in range(len(a)):
        t = t + a[i][i]
    return t


def diagonal(a):
    return tuple(a[i][i] for i in range(len(a)))


def is_diagonal(a) -> bool:
    return all(is_zero(a[i][j]) for i in range(len(a)) for j in range(len(a)) if i != j)


def is_upper(a, strict=False) -> bool:
    n = len(a)
    return all(is_zero(a[i][j]) for i in range(n) for j in range(n) if (j < i or (strict and i == j)))


def mat_pow(a, k: int):
    result = identity(len(a))
    base = a
    while k:
        if k & 1:
            result = mul(result, base)
        k >>= 1
        if k:
            base = mul(base, base)
    return result


def is_nilpotent(a) -> bool:
    return is_zero_matrix(mat_pow(a, len(a)))


def conj(p, a, pinv):
    """p a p^{-1}."""
    return mul(mul(p, a), pinv)


def flatten(a):
    return [x for row in a for x in row]


def unflatten(vec, n):
    return tuple(tuple(vec[i * n:(i + 1) * n]) for i in range(n))


# -- elimination -----------------------------------------------------------

def rref(rows):
    """Reduced row echelon form; returns (matrix as lists, pivot columns)."""
    m = [list(r) for r in rows]
    if not m:
        return m, []
    nrows, ncols = len(m), len(m[0])
    pivots = []
    r = 0
    for c in range(ncols):
        if r >= nrows:
            break
        piv = None
        for i in range(r, nrows):
            if not is_zero(m[i][c]):
                piv = i
                break
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        pv = m[r][c]
        inv = ONE / pv
        m[r] = [x * inv if not is_zero(x) else ZERO for x in m[r]]
        for i in range(nrows):
            if i != r and not is_zero(m[i][c]):
                f = m[i][c]
                ri = m[i]
                rr = m[r]
                m[i] = [ri[k] - f * rr[k] if not is_zero(rr[k]) else ri[k] for k in range(ncols)]
        pivots.append(c)
        r += 1
    return m, pivots


def rank(rows) -> int:
    return len(rref(rows)[1])


def nullspace(rows, ncols: int | None = None):
    """Basis (list of vectors) of {x : rows x = 0}."""
    if not rows:
        return [[ONE if i == j else ZERO for i in range(ncols)] for j in range(ncols)]
    ncols = len(rows[0])
    m, pivots = rref(rows)
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        v = [ZERO] * ncols
        v[f] = ONE
        for i, p in enumerate(pivots):
            v[p] = -m[i][f]
        basis.append(v)
    return basis


def solve(rows, rhs):
    """One solution x of rows x = rhs (free variables zero), or None."""
    if not rows:
        return []
    ncols = len(rows[0])
    aug = [list(r) + [b] for r, b in zip(rows, rhs)]
    m, pivots = rref(aug)
    if ncols in pivots:
        return None
    x = [ZERO] * ncols
    for i, p in enumerate(pivots):
        x[p] = m[i][ncols]
    return x


def solve_rational(rows, rhs):
    x = solve(rows, rhs)
    if x is None:
        raise ZeroDivisionError("singular system")
    return x


def inverse(a):
    n = len(a)
    aug = [list(a[i]) + [ONE if i == j else ZERO for j in range(n)] for i in range(n)]
    m, pivots = rref(aug)
    if pivots[:n] != list(range(n)) or len(pivots) < n:
        from .errors import NotInvertible
        raise NotInvertible("matrix is singular")
    return tuple(tuple(m[i][n:]) for i in range(n))


inverse_rational = inverse


def det(a):
    n = len(a)
    m = [list(r) for r in a]
    d = ONE
    for c in range(n):
        piv = None
        for i in range(c, n):
            if not is_zero(m[i][c]):
                piv = i
                break
        if piv is None:
            return ZERO
        if piv != c:
            m[c], m[piv] = m[piv], m[c]
            d = -d
        pv = m[c][c]
        d = d * pv
        for i in range(c + 1, n):
            if not is_zero(m[i][c]):
                f = m[i][c] / pv
                m[i] = [m[i][k] - f * m[c][k] for k in range(n)]
    return d


def charpoly(a):
    """Characteristic polynomial det(x - a), low-to-high coefficients (Faddeev-LeVerrier)."""
    n = len(a)
    coeffs = [ZERO] * (n + 1)
    coeffs[n] = ONE
    m = zeros(n)
    ident = identity(n)
    prev = ONE
    for k in range(1, n + 1):
        m = add(mul(a, m), scale(prev, ident))
        am = mul(a, m)
        prev = -trace(am) / k
        coeffs[n - k] = prev
    return coeffs


def poly_eval_matrix(coeffs, a):
    """p(a) by Horner, coefficients low-to-high."""
    n = len(a)
    result = zeros(n)
    for c in reversed(coeffs):
        result = add(mul(result, a), scale(c, identity(n)))
    return result


def column_space_basis(vectors):
    """Independent subset spanning the same space (as rows)."""
    if not vectors:
        return []
    m, pivots = rref([list(v) for v in vectors])
    return [m[i] for i in range(len(pivots))]
