"""Univariate polynomials over K as low-to-high coefficient lists."""

from __future__ import annotations

from fractions import Fraction

from .scalars import is_zero

ZERO = Fraction(0)


def trim(p):
    p = list(p)
    while p and is_zero(p[-1]):
        p.pop()
    return p


def sub(p, q):
    n = max(len(p), len(q))
    p = list(p) + [ZERO] * (n - len(p))
    q = list(q) + [ZERO] * (n - len(q))
    return trim([a - b for a, b in zip(p, q)])


def mul(p, q):
    if not p or not q:
        return []
    out = [ZERO] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        if is_zero(a):
            continue
        for j, b in enumerate(q):
            if not is_zero(b):
                out[i + j] = out[i + j] + a * b
    return trim(out)


def divmod_poly(p, q):
    p, q = trim(p), trim(q)
    if not q:
        raise ZeroDivisionError("polynomial division by zero")
    quot = [ZERO] * max(len(p) - len(q) + 1, 1)
    lead = q[-1]
    rem = list(p)
    while len(rem) >= len(q) and rem:
        c = rem[-1] / lead
        shift = len(rem) - len(q)
        quot[shift] = c
        for i, b in enumerate(q):
            rem[shift + i] = rem[shift + i] - c * b
        rem.pop()
        rem = trim(rem)
    return trim(quot), rem


def monic(p):
    p = trim(p)
    if not p:
        return p
    lead = p[-1]
    return [c / lead for c in p]


def gcd(p, q):
    p, q = trim(p), trim(q)
    while q:
        _, r = divmod_poly(p, q)
        p, q = q, r
    return monic(p)


def derivative(p):
    return trim([c * k for k, c in enumerate(p)][1:])


def squarefree_part(p):
    g = gcd(p, derivative(p))
    quot, _ = divmod_poly(p, g)
    return monic(quot)


def evaluate(p, x):
    acc = ZERO
    for c in reversed(p):
        acc = acc * x + c
    return acc
