from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from gaugeform.errors import FieldTooSmall
from gaugeform.scalars import (NumberField, Scalar, degree_limit, order_key, rational_projection, rational_roots,
                               roots_in_field)

SQRT2 = NumberField(1, [-2, 0, 1])
th = SQRT2.theta()


def test_projection_fixes_rationals():
    assert rational_projection(F(3, 2)) == F(3, 2)


def test_projection_kills_theta():
    assert rational_projection(th) == 0
    assert rational_projection(5 + 2 * th) == 5


def test_theta_squares_to_two():
    assert th * th == 2
    assert isinstance(th * th, F)


def test_roots_of_unity():
    q = NumberField(1)
    assert q.root_of_unity(1) == 1
    assert q.root_of_unity(2) == -1
    i = NumberField(4).root_of_unity(4)
    assert i * i == -1
    assert q.root_of_unity(4) is None


def test_roots_of_unity_compatible():
    k = NumberField(12)
    w12, w4 = k.root_of_unity(12), k.root_of_unity(4)
    assert w12 ** 3 == w4


@pytest.mark.parametrize("coeffs, roots", [
    ([-1, 0, 1], [-1, 1]),
    ([-2, 0, 1], []),
    ([0, 0, -1, 1], [0, 0, 1]),
])
def test_rational_roots(coeffs, roots):
    assert rational_roots([F(c) for c in coeffs]) == roots


def test_irrational_roots_suggest_extension():
    with pytest.raises(FieldTooSmall) as exc:
        roots_in_field([F(-2), F(0), F(1)], NumberField(1))
    assert exc.value.suggestion is SQRT2
    assert sorted(roots_in_field([F(-2), F(0), F(1)], SQRT2), key=order_key) == [-th, th]


def test_degree_cap():
    with pytest.raises(FieldTooSmall):
        NumberField(11, degree_cap=4)


def test_run_degree_limit():
    with degree_limit(1):
        with pytest.raises(FieldTooSmall):
            NumberField(1, [-2, 0, 1])
        with pytest.raises(FieldTooSmall):
            NumberField(1).with_roots_of_unity(4)
    assert NumberField(1).with_roots_of_unity(4).degree == 2


def test_inverse_and_division():
    x = 3 + th
    assert x * x.inverse() == 1
    assert (x / x) == 1


def test_zeta_and_theta_mix():
    k = NumberField(3, [-2, 0, 1])
    z = k.zeta()
    assert z * z * z == 1
    assert isinstance(z * k.theta(), Scalar)


def test_order_key_total():
    vals = [th, F(1), -th, F(-2), 1 + th]
    assert sorted(vals, key=order_key) == sorted(sorted(vals, key=order_key), key=order_key)


small = st.fractions(min_value=-20, max_value=20, max_denominator=12)


@given(small, small, small, small, small)
def test_projection_is_linear(a0, a1, b0, b1, q):
    x = a0 + a1 * th
    y = b0 + b1 * th
    assert rational_projection(x + y) == rational_projection(x) + rational_projection(y)
    assert rational_projection(q * x) == q * rational_projection(x)


@given(small, small, small, small)
def test_field_axioms(a0, a1, b0, b1):
    x = a0 + a1 * th
    y = b0 + b1 * th
    assert x * y == y * x
    assert (x + y) - y == x
    if x != 0:
        assert (x * y) / x == y
