from fractions import Fraction as F

import pytest

from gaugeform import matrices as mx
from gaugeform.errors import NotACocycle, NotRegular, Undecidable
from gaugeform.galois import (coxeter_check, descend, equivalent, extract_cocycle, galois_act,
                              is_twisted_cocycle, regular_invariants)
from gaugeform.reduce import CanonicalForm, reduce_connection

from corpus import GL1, GL3, N3, SL2, D, E, S

H = D(1, -1)
ANTI = ((F(0), F(1)), (F(-1), F(0)))


def form(ram, levels, ds, residue, dim=2):
    return CanonicalForm(ram, dim, tuple(F(r) for r in levels), tuple(ds), residue, True)


def test_galois_act():
    plain = form(1, [], [], mx.zeros(2))
    assert galois_act(1, plain) == plain
    half = form(2, [F(-3, 2)], [H], mx.zeros(2))
    assert galois_act(1, half).irr_coeffs == (mx.neg(H),)
    assert galois_act(2, half) == half
    whole = form(2, [-2], [H], mx.zeros(2))
    assert galois_act(1, whole) == whole


def test_cocycle_conditions():
    half = form(2, [F(-3, 2)], [H], mx.zeros(2))
    assert is_twisted_cocycle(ANTI, half, SL2)
    assert not is_twisted_cocycle(mx.identity(2), half, SL2)
    assert is_twisted_cocycle(mx.identity(2), form(1, [-2], [H], mx.zeros(2)), SL2)


def test_descend_rank_one():
    a, y = descend(form(2, [], [], D(0), dim=1), D(-1), GL1)
    assert a == S(1, (-1, D(F(1, 2))))


def test_descend_trivial_cocycle():
    b = form(1, [-2], [H], D(F(1, 3), F(-1, 3)))
    a, _ = descend(b, mx.identity(2), SL2)
    assert a == b.to_series()


def test_descend_rejects_bad_cocycle():
    with pytest.raises(NotACocycle):
        descend(form(2, [F(-3, 2)], [H], mx.zeros(2)), mx.identity(2), SL2)


def test_descend_roundtrip_sl2():
    b = form(2, [F(-3, 2)], [H], mx.zeros(2))
    a, _ = descend(b, ANTI, SL2)
    assert a.ram == 1
    back = reduce_connection(a, SL2).canonical
    assert back.levels == b.levels
    assert sorted(mx.diagonal(back.irr_coeffs[0])) == [-1, 1]


def test_extract_cocycle():
    a = S(1, (-1, D(F(1, 2))))
    shifted = reduce_connection(a, GL1, normalize=True)
    assert shifted.canonical.to_series().is_zero()
    assert extract_cocycle(a, shifted).phi == D(-1)
    assert extract_cocycle(a, reduce_connection(a, GL1)).phi == D(1)
    b = S(2, (-1, H), (0, E(2, 1, 2)))
    assert extract_cocycle(b, reduce_connection(b, SL2)).phi == mx.identity(2)


def test_extract_cocycle_fractional_level():
    a = S(2, (-2, E(2, 2, 1)), (-1, E(2, 1, 2)))
    res = reduce_connection(a, SL2)
    phi = extract_cocycle(a, res).phi
    assert is_twisted_cocycle(phi, res.canonical, SL2)
    assert phi != mx.identity(2) and all(x == 0 for x in mx.diagonal(phi))


def test_regular_invariants():
    inv = regular_invariants(S(1, (-1, D(F(5, 2)))), GL1)
    assert inv.v == ("1/2",) and inv.orbit == (("1/2", (1,)),)
    nil = regular_invariants(S(3, (-1, E(3, 2, 1))), GL3)
    assert nil.v == ("0", "0", "0") and nil.orbit == (("0", (2, 1)),)
    assert regular_invariants(S(1, (-1, D(F(1, 2)))), GL1) == regular_invariants(S(1, (-1, D(F(3, 2)))), GL1)
    with pytest.raises(NotRegular):
        regular_invariants(S(2, (-3, H)), SL2)


def test_equivalence_decisions():
    half, three_halves, third = (S(1, (-1, D(F(c)))) for c in ("1/2", "3/2", "1/3"))
    assert equivalent(half, three_halves, GL1, "F")
    assert equivalent(half, three_halves, GL1, "Fbar")
    no = equivalent(half, third, GL1, "F")
    assert not no and no.distinguisher is not None


def test_equivalence_witness_verifies():
    a = S(2, (-3, H), (-1, E(2, 1, 2)))
    b = S(2, (-3, H))
    dec = equivalent(a, b, SL2, "F")
    assert dec and dec.witness is not None


def test_undecidable_shape():
    with pytest.raises(Undecidable):
        equivalent(S(3, (-1, E(3, 1, 2))), S(3, (-1, E(3, 2, 3))), N3)


def test_coxeter():
    res = reduce_connection(S(2, (-2, E(2, 2, 1)), (-1, E(2, 1, 2))), SL2)
    rep = coxeter_check(res, SL2)
    assert rep.ok and rep.b == 2 and rep.central_required and rep.central_ok
    three = reduce_connection(S(3, (-2, E(3, 3, 1)), (-1, E(3, 1, 2)), (-1, E(3, 2, 3))), GL3)
    rep3 = coxeter_check(three, GL3)
    assert rep3.b == 3 and rep3.divides_degree and rep3.ok
    assert coxeter_check(reduce_connection(S(2, (-3, H)), SL2), SL2).b == 1
