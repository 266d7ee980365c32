import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qident.qfunctions import qpoch
from qident.series import (QSeries, SeriesError, SubstrateError, TruncationError, NotInvertibleError,
                           add, coeff_at, format_series, from_terms, invert, monomial, mul, one, to_csv_rows, zero)

import properties


def coeffs_through(s, top):
    return [s.coeff_at(e) for e in range(0, top + 1)]


def test_monomial_identity_element():
    s = monomial(1, 0, 1, 10)
    assert s.order == 10 and coeffs_through(s, 10) == [1] + [0] * 10


def test_monomial_scaled_exponent():
    s = monomial(1, 12, 4, 40)
    assert s.denom == 4 and s.coeff_q(3) == 1
    assert list(s.terms()) == [(12, 1)]


def test_monomial_negative_exponent():
    s = monomial(1, -3, 4, 40)
    assert s.offset == -3 and s.coeff_at(-3) == 1
    assert str(s.q_exponent(-3)) == "-3/4"


def test_monomial_above_order_rejected():
    with pytest.raises(TruncationError):
        monomial(1, 5, 1, 4)


def test_add_examples():
    s = add(one(1, 5), monomial(1, 1, 1, 5))
    assert coeffs_through(s, 5) == [1, 1, 0, 0, 0, 0]
    t = QSeries([3, -1, 4], 0, 7)
    z = add(t, -t)
    assert z.is_zero() and z.order == 7


def test_mul_telescoping():
    geo = QSeries([1] * 21, 0, 20)
    s = mul(QSeries([1, -1], 0, 20), geo)
    assert coeffs_through(s, 20) == [1] + [0] * 20


def test_mul_pochhammer_two():
    s = QSeries([1, -1], 0, 10) * QSeries([1, 0, -1], 0, 10)
    assert coeffs_through(s, 4) == [1, -1, -1, 1, 0]


def test_mul_order_rule():
    a = QSeries([1, 2, 3], -2, 5)
    b = QSeries([1, 1], 1, 4)
    p = a * b
    assert p.order == min(5 + 1, 4 - 2)


def test_invert_geometric():
    s = invert(QSeries([1, -1], 0, 15))
    assert coeffs_through(s, 15) == [1] * 16


def test_invert_partitions():
    assert coeff_at(invert(qpoch(None, 1, 30)), 10) == 42


def test_invert_laurent():
    a = QSeries([0, 1, 1], 0, 12)
    inv = invert(a)
    assert inv.offset == -1
    assert [inv.coeff_at(e) for e in range(-1, 3)] == [1, -1, 1, -1]
    prod = a * inv
    assert all(prod.coeff_at(e) == (1 if e == 0 else 0) for e in range(prod.offset, prod.order + 1))


def test_invert_rejects_non_unit():
    with pytest.raises(NotInvertibleError):
        QSeries([2, 1], 0, 5).invert()
    with pytest.raises(NotInvertibleError):
        zero(1, 5).invert()


def test_coeff_at_bounds():
    s = QSeries([1, 1], 0, 1)
    assert coeff_at(s, 1) == 1
    with pytest.raises(TruncationError):
        s.coeff_at(2)
    assert s.coeff_at(-5) == 0


@settings(max_examples=200, deadline=None)
@given(properties.series_tuple(count=1), st.integers(1, 20))
def test_coeff_beyond_order_always_raises(single, k):
    s = single[0]
    with pytest.raises(TruncationError):
        s.coeff_at(s.order + k)


def test_denominator_mismatch():
    with pytest.raises(SubstrateError):
        one(1, 5) + one(2, 5)


def test_invariants_on_construction():
    with pytest.raises(SeriesError):
        QSeries([1], 3, 1)
    s = QSeries([1, 2], 0, 5)
    assert len(s.coeffs) == s.order - s.offset + 1


def test_big_coefficients_exact():
    big = 10**40
    s = QSeries([big, 1], 0, 3) * QSeries([big, -1], 0, 3)
    assert s.coeff_at(0) == big * big and s.coeff_at(1) == 0 and s.coeff_at(2) == -1


def test_large_power_stays_exact():
    # partition-like growth beyond 64 bits
    inv = qpoch(None, 1, 500).invert()
    assert inv.coeff_at(500) == 2300165032574323995027
    assert isinstance(inv.coeff_at(500), int)


def test_refine_and_substitute():
    s = QSeries([1, 2, 3], 0, 2)
    r = s.refine(2)
    assert r.denom == 2 and r.coeff_q(1) == 2 and r.coeff_at(1) == 0 and r.order == 5
    u = s.substitute(2)
    assert u.denom == 1 and u.coeff_at(2) == 2 and u.coeff_at(3) == 0
    assert r.substitute(2) == u


def test_shift_and_truncate():
    s = QSeries([1, 1, 1], 0, 2).shift(-2)
    assert s.offset == -2 and s.order == 0
    assert s.truncate(-1).coeffs == (1, 1)
    with pytest.raises(TruncationError):
        s.truncate(3)


def test_first_difference():
    a = QSeries([1, 2, 3], 0, 2)
    b = QSeries([1, 2, 4], 0, 5)
    assert a.first_difference(b) == (2, 3, 4)
    assert a.first_difference(a) is None


def test_from_terms_and_csv():
    s = from_terms([(0, 1), (3, -2)], 2, 3)
    assert to_csv_rows(s) == [(0, "0", 1), (1, "1/2", 0), (2, "1", 0), (3, "3/2", -2)]
    assert format_series(s) == "1 - 2*q^(3/2) + O(q^(2))"


def test_hash_consistent_with_eq():
    a = QSeries(np.array([1, 2], dtype=np.int64), 0, 1)
    b = QSeries(np.array([1, 2], dtype=object), 0, 1)
    assert a == b and hash(a) == hash(b)


def test_ring_axioms():
    properties.check_ring_axioms()


def test_inverse_property():
    properties.check_inverse()
