import math
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from gaugeform import matrices as mx
from gaugeform.errors import DivergentExponential
from gaugeform.gauge import (Const, Exp, GaugeTransform, Shear, apply_gauge, compose, exp_atom, identity, invert,
                             shear_apply, verify_equivalence)
from gaugeform.liealg import GroupContext
from gaugeform.verify import dense_word, oracle_apply

from corpus import D, E, S

SL2, GL2 = GroupContext.SL(2), GroupContext.GL(2)
X, Y, H = E(2, 1, 2), E(2, 2, 1), D(1, -1)


def test_exp_atom_nilpotent_terminates():
    x, _, _ = dense_word(GaugeTransform([exp_atom(X, 1)]), 2, F(20))
    assert x == {F(0): mx.identity(2), F(1): X}


def test_exp_atom_scalar_factorials():
    x, _, _ = dense_word(GaugeTransform([exp_atom(D(1), 1)]), 1, F(8))
    assert [x[F(j)][0][0] for j in range(8)] == [F(1, math.factorial(j)) for j in range(8)]


def test_exp_atom_negative_exponent():
    x, _, _ = dense_word(GaugeTransform([exp_atom(Y, -1)]), 2, F(5))
    assert x == {F(0): mx.identity(2), F(-1): Y}
    with pytest.raises(DivergentExponential):
        exp_atom(D(1, 0), 0)


def test_shear_examples():
    assert shear_apply((0, 0), 1, S(2, (-2, Y)), SL2) == S(2, (-2, Y))
    assert shear_apply((1, -1), 1, S(2), SL2) == S(2, (-1, H))
    lifted = S(2, (-3, mx.scale(2, Y)))
    assert shear_apply((-1, 1), 1, lifted, SL2) == S(2, (-1, mx.sub(mx.scale(2, Y), H)))


def test_compose_and_invert_basics():
    g = GaugeTransform([exp_atom(X, 1), Shear((1, -1))])
    assert compose(g, identity()).atoms == g.atoms
    assert invert(GaugeTransform([Shear((1, -1))])).atoms == [Shear((-1, 1))]


def test_trivializer_of_nilpotent_pole():
    # d/dt exp(Y/t) exp(-Y/t) = -Y t^-2, so exp(+Y/t) kills Y t^-2.
    a = S(2, (-2, Y))
    assert verify_equivalence(GaugeTransform([exp_atom(Y, -1)]), a, S(2), SL2).ok
    assert not verify_equivalence(GaugeTransform([exp_atom(Y, -1)]).then(exp_atom(Y, -1)), a, S(2), SL2).ok


def test_verify_identity_and_negative_control():
    a = S(2, (-1, X), (0, H))
    assert verify_equivalence(identity(), a, a, SL2).ok
    rep = verify_equivalence(GaugeTransform([Shear((1, -1))]), S(2), S(2), SL2)
    assert not rep.ok
    assert rep.first_discrepancy == -1 and rep.difference == H


coef = st.integers(-2, 2)


@st.composite
def sl2_series(draw):
    terms = []
    for e in range(-3, 2):
        a, b, c = draw(coef), draw(coef), draw(coef)
        terms.append((e, ((F(a), F(b)), (F(c), F(-a)))))
    return S(2, *terms, prec=12)


@st.composite
def atoms(draw):
    kind = draw(st.sampled_from(["exp", "shear", "const"]))
    if kind == "exp":
        q = draw(st.integers(-1, 2))
        x = mx.scale(F(draw(coef)), draw(st.sampled_from([X, Y])))
        return Exp(((F(q), x),))
    if kind == "shear":
        k = draw(st.integers(-1, 1))
        return Shear((k, -k))
    c = F(draw(st.integers(-2, 2)))
    return Const(mx.add(mx.identity(2), mx.scale(c, Y)))


@settings(max_examples=30, deadline=None)
@given(sl2_series(), atoms(), atoms())
def test_action_property(a, g1, g2):
    w1, w2 = GaugeTransform([g1]), GaugeTransform([g2])
    both = apply_gauge(compose(w1, w2), a, SL2)
    step = apply_gauge(w1, apply_gauge(w2, a, SL2), SL2)
    assert both == step


@settings(max_examples=30, deadline=None)
@given(sl2_series(), atoms(), atoms())
def test_inverse_roundtrip(a, g1, g2):
    g = GaugeTransform([g1, g2])
    back = apply_gauge(invert(g), apply_gauge(g, a, SL2), SL2)
    cut = back.t_prec
    assert back.truncate_t(cut) == a.truncate_t(cut)


@settings(max_examples=30, deadline=None)
@given(sl2_series(), atoms(), atoms())
def test_engine_matches_dense_oracle(a, g1, g2):
    g = GaugeTransform([g1, g2])
    b = apply_gauge(g, a, SL2)
    cut = min(b.t_prec, F(3))
    got = oracle_apply(g, a, cut)
    assert got == {e: m for e, m in b.terms() if e < cut}
