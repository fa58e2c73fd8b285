import itertools
import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from gaugeform import matrices as mx
from gaugeform.liealg import (GroupContext, centralizer_basis, centralizer_context, height,
                              integer_eigenspace_data, jm_triple, jordan_decompose, lambda_of,
                              lattice_invariants, orbit_dim)
from gaugeform.scalars import NumberField

from corpus import D, E, add

SL2, SL3, GL3 = GroupContext.SL(2), GroupContext.SL(3), GroupContext.GL(3)


@pytest.mark.parametrize("m, s, n", [
    (D(1, 2), D(1, 2), mx.zeros(2)),
    (E(2, 1, 2), mx.zeros(2), E(2, 1, 2)),
    (((1, 1), (0, 1)), mx.identity(2), E(2, 1, 2)),
])
def test_jordan_examples(m, s, n):
    jd = jordan_decompose(mx.to_matrix(m))
    assert jd.semisimple == mx.to_matrix(s) and jd.nilpotent == mx.to_matrix(n)


def test_jm_sl2():
    trip = jm_triple(E(2, 2, 1), SL2)
    assert trip.H == D(1, -1) and trip.X == E(2, 1, 2) and trip.check()


def test_jm_regular_sl3():
    trip = jm_triple(add(E(3, 2, 1), E(3, 3, 2)), SL3)
    assert trip.H == D(2, 0, -2)
    assert trip.X == add(E(3, 1, 2, 2), E(3, 2, 3, 2))


def test_jm_minimal_gl3():
    trip = jm_triple(E(3, 2, 1), GL3)
    assert trip.H == D(1, -1, 0) and trip.X == E(3, 1, 2)


@pytest.mark.parametrize("ctx, h", [(SL2, 1), (SL3, 2), (GroupContext.GL(4), 3)])
def test_height(ctx, h):
    assert height(ctx) == h


def test_lambda_values():
    assert lambda_of(E(2, 2, 1), SL2) == 2
    assert lambda_of(E(3, 2, 1), SL3) == 2
    assert lambda_of(add(E(3, 2, 1), E(3, 3, 2)), SL3) == 3


def test_orbit_dims():
    assert orbit_dim(mx.zeros(2), SL2) == 0
    assert orbit_dim(E(2, 2, 1), SL2) == 2
    assert orbit_dim(add(E(3, 2, 1), E(3, 3, 2)), SL3) == 6


def test_lattice_invariants():
    inv = lattice_invariants(SL2)
    assert (inv.I, inv.J, inv.degrees, inv.coxeter_number) == (2, 2, (2,), 2)
    pgl = lattice_invariants(GroupContext.PGL(2))
    assert (pgl.I, pgl.J) == (1, 2)
    gl3 = lattice_invariants(GL3)
    assert gl3.degrees == (2, 3) and gl3.coxeter_number == 3


def test_centralizers():
    gl2 = GroupContext.GL(2)
    basis = centralizer_basis([D(1, -1)], gl2)
    assert len(basis) == 2 and all(mx.is_diagonal(b) for b in basis)
    assert len(centralizer_basis([mx.zeros(2)], gl2)) == 4
    sub, q, qinv = centralizer_context([D(1, 1, 2)], GL3)
    assert sorted(sub.blocks) == [1, 2]


def test_integer_eigenspaces():
    data = integer_eigenspace_data(D(F(1, 2), F(-1, 2)), SL2)
    assert data.k_max == 1 and sorted(data.projections) == [-1, 0, 1]
    assert integer_eigenspace_data(mx.zeros(2), SL2).k_max == 0
    k = NumberField(1, [-2, 0, 1])
    th = k.theta()
    data = integer_eigenspace_data(mx.diag([th, -th]), SL2)
    assert data.k_max == 0 and sorted(data.projections) == [0]


def _random_conjugator(rng, n):
    while True:
        p = tuple(tuple(F(rng.randint(-2, 2)) for _ in range(n)) for _ in range(n))
        if mx.det(p) != 0:
            return p


nilpotents = st.sampled_from([E(3, 2, 1), add(E(3, 2, 1), E(3, 3, 2)), E(3, 3, 1), add(E(3, 1, 2), E(3, 1, 3))])


@settings(max_examples=25, deadline=None)
@given(nilpotents, st.integers(0, 10 ** 6))
def test_invariance_under_conjugation(y, seed):
    p = _random_conjugator(random.Random(seed), 3)
    z = mx.conj(p, y, mx.inverse(p))
    assert orbit_dim(z, GL3) == orbit_dim(y, GL3)
    assert lambda_of(z, GL3) == lambda_of(y, GL3)
    trip = jm_triple(z, GL3)
    assert trip.check() and trip.Y == z


@settings(max_examples=25, deadline=None)
@given(st.lists(st.integers(-2, 2), min_size=9, max_size=9))
def test_jordan_parts_commute_with_commutant(vals):
    m = tuple(tuple(F(vals[3 * i + j]) for j in range(3)) for i in range(3))
    jd = jordan_decompose(m)
    assert mx.is_nilpotent(jd.nilpotent)
    assert mx.bracket(jd.semisimple, jd.nilpotent) == mx.zeros(3)
    poly = mx.add(mx.mul(m, m), mx.scale(3, m))
    for part in (jd.semisimple, jd.nilpotent):
        assert mx.bracket(part, poly) == mx.zeros(3)


def test_dimension_increase():
    # Every nilpotent U in Y + ker(ad X), U != Y, has a strictly larger orbit.
    for y in (E(3, 2, 1), E(3, 3, 1)):
        trip = jm_triple(y, GL3)
        ker = centralizer_basis([trip.X], SL3)
        seen = 0
        for coeffs in itertools.product((-1, 0, 1), repeat=len(ker)):
            u = y
            for c, b in zip(coeffs, ker):
                u = mx.add(u, mx.scale(F(c), b))
            if u == y or not mx.is_nilpotent(u):
                continue
            seen += 1
            assert orbit_dim(u, GL3) > orbit_dim(y, GL3)
        assert seen > 0
