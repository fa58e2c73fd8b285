from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from gaugeform import matrices as mx
from gaugeform.errors import InsufficientPrecision
from gaugeform.gauge import GaugeTransform, Ramify, Shear, apply_gauge, verify_equivalence
from gaugeform.liealg import GroupContext
from gaugeform.puiseux import INF, MatSeries, ad_action, b_lift

from corpus import D, E, S

X, Y, HH = E(2, 1, 2), E(2, 2, 1), D(1, -1)


def test_b_lift_trivial():
    a = S(2, (-2, Y), (0, X))
    assert b_lift(a, 1) == a


def test_b_lift_doubles_residue():
    c = mx.add(X, HH)
    a = S(2, (-1, c)).to_ram(2)
    assert b_lift(a, 2) == S(2, (-1, mx.scale(2, c)))


def test_b_lift_quarter_cover():
    a = S(2, (-2, Y), (-1, X)).to_ram(4)
    assert sorted(a.coeffs) == [-8, -4]
    assert b_lift(a, 4) == S(2, (-5, mx.scale(4, Y)), (-1, mx.scale(4, X)))


def test_ramify_keeps_the_series():
    a = S(2, (-1, X))
    r = a.ramify(2)
    assert r.ram == 2 and sorted(r.coeffs) == [-2]
    assert a.ramify(1) == a


def test_ramify_then_lift_matches_substitution():
    # t = u^c on F_b: lifting at bc equals lifting at b followed by t -> t^c with the Jacobian.
    a = S(2, (-2, Y), (F(-1, 2), X), (0, HH), ram=2)
    c = 3
    direct = b_lift(a.ramify(c), 2 * c)
    step = b_lift(a, 2)
    subst = MatSeries({c * j + c - 1: mx.scale(c, m) for j, m in step.coeffs.items()}, 2, 1)
    assert direct == subst


def test_derivative():
    assert S(1, (0, D(5))).derivative().is_zero()
    assert S(1, (-1, D(3))).derivative() == S(1, (-2, D(-3)))
    half = S(1, (F(1, 2), D(1)), ram=2)
    assert half.derivative() == S(1, (F(-1, 2), D(F(1, 2))), ram=2)


def test_ring_operations():
    a = S(2, (-1, X), (2, HH))
    assert a * S(2, (0, mx.identity(2))) == a
    assert ad_action(S(2, (0, HH)), S(2, (0, X))) == S(2, (0, mx.scale(2, X)))


def test_geometric_series():
    prec = 12
    one_plus_t = S(1, (0, D(1)), (1, D(1)))
    inv = S(1, *[(j, D((-1) ** j)) for j in range(prec)], prec=prec)
    prod = one_plus_t * inv
    assert prod.t_prec == prec
    assert prod == S(1, (0, D(1)), prec=prec)


def test_precision_guard():
    a = S(1, (0, D(1)), prec=3)
    with pytest.raises(InsufficientPrecision):
        a.coeff_at(3)


def test_lift_agrees_with_gauge_on_cover():
    # t^{mu/2} on the 2-cover becomes u^{mu} after t = u^2.
    gl2 = GroupContext.GL(2)
    a = S(2, (-1, D(F(1, 2), 0)), (0, X))
    on_cover = GaugeTransform([Ramify(2), Shear((-1, 0), 2)])
    b = apply_gauge(on_cover, a, gl2)
    lifted = apply_gauge(GaugeTransform([Shear((-1, 0))]), b_lift(a.to_ram(2), 2), gl2)
    assert b_lift(b, 2) == lifted
    assert verify_equivalence(on_cover, a, b, gl2).ok


coef = st.integers(-3, 3)


@st.composite
def series2(draw):
    terms = []
    for e in range(-3, 3):
        if draw(st.booleans()):
            terms.append((e, tuple(tuple(F(draw(coef)) for _ in range(2)) for _ in range(2))))
    return S(2, *terms, prec=6)


@settings(max_examples=40, deadline=None)
@given(series2(), series2(), st.sampled_from([1, 2, 3]))
def test_b_lift_is_additive(a, b, k):
    assert b_lift(a.to_ram(k) + b.to_ram(k), k) == b_lift(a.to_ram(k), k) + b_lift(b.to_ram(k), k)


@settings(max_examples=40, deadline=None)
@given(series2(), series2(), st.sampled_from([1, 2]))
def test_lift_commutes_with_bracket_up_to_jacobian(a, b, k):
    # The Ad part scales by the Jacobian once: [lift A, lift B] = k t^{k-1} lift([A, B]).
    la, lb = b_lift(a.to_ram(k), k), b_lift(b.to_ram(k), k)
    jac = S(2, (k - 1, mx.scale(k, mx.identity(2))))
    lhs = ad_action(la, lb)
    rhs = jac * b_lift(ad_action(a, b).to_ram(k), k)
    cut = min(lhs.t_prec, rhs.t_prec)
    assert lhs.truncate_t(cut) == rhs.truncate_t(cut)


@settings(max_examples=40, deadline=None)
@given(series2(), series2(), series2())
def test_multiplication_associative(a, b, c):
    left, right = (a * b) * c, a * (b * c)
    cut = min(left.t_prec, right.t_prec)
    assert left.truncate_t(cut) == right.truncate_t(cut)


def test_exact_zero_prec():
    assert S(2).prec == INF
