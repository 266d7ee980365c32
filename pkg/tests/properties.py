"""Hypothesis strategies and property checks shared by the unit and acceptance tests."""
from __future__ import annotations

from fractions import Fraction

from hypothesis import given, settings
from hypothesis import strategies as st

from qident import prodexpr
from qident.fermionic import build_form, eval_form
from qident.series import QSeries, SubstrateError

CASES = 1000

# mostly small coefficients, occasionally beyond int64 to exercise the object path
_coeff = st.one_of(st.integers(-50, 50), st.integers(-10**6, 10**6), st.integers(-10**30, 10**30))


@st.composite
def series_tuple(draw, count=3):
    denom = draw(st.sampled_from([1, 2, 4]))
    out = []
    for _ in range(count):
        offset = draw(st.integers(-4, 4))
        coeffs = draw(st.lists(_coeff, min_size=1, max_size=10))
        out.append(QSeries(coeffs, offset, offset + len(coeffs) - 1, denom))
    return out


@st.composite
def unit_series(draw):
    denom = draw(st.sampled_from([1, 2, 4]))
    offset = draw(st.integers(-4, 4))
    lead = draw(st.sampled_from([1, -1]))
    rest = draw(st.lists(_coeff, min_size=0, max_size=12))
    return QSeries([lead] + rest, offset, offset + len(rest), denom)


def _same(a: QSeries, b: QSeries) -> None:
    assert a.denom == b.denom
    assert a.order == b.order
    assert a.first_difference(b) is None


@settings(max_examples=CASES, deadline=None)
@given(series_tuple())
def check_ring_axioms(abc):
    a, b, c = abc
    _same(a + b, b + a)
    _same(a * b, b * a)
    _same((a + b) + c, a + (b + c))
    _same((a * b) * c, a * (b * c))
    _same(a * (b + c), a * b + a * c)
    _same(a - b, a + (-b))
    assert (a - a).is_zero() and (a - a).order == a.order


@settings(max_examples=CASES, deadline=None)
@given(unit_series())
def check_inverse(a):
    prod = a * a.invert()
    assert prod.order >= 0
    for e in range(prod.offset, prod.order + 1):
        assert prod.coeff_at(e) == (1 if e == 0 else 0)


_exp = st.sampled_from([Fraction(k, d) for d in (1, 2, 4) for k in range(0, 9)])
_base = st.sampled_from([Fraction(k, d) for d in (1, 2, 4) for k in range(1, 9)])


def _mono(sign, e):
    s = "-" if sign < 0 else ""
    return f"{s}q^({e.numerator}/{e.denominator})"


@st.composite
def product_text(draw):
    def factor(invertible):
        args = []
        for _ in range(draw(st.integers(1, 3))):
            sign = draw(st.sampled_from([1, -1]))
            e = draw(_exp)
            if e == 0 and (sign == 1 or invertible):
                e = Fraction(1)
            args.append(_mono(sign, e))
        length = draw(st.one_of(st.just("inf"), st.integers(0, 6).map(str)))
        return f"({','.join(args)};{_mono(1, draw(_base))})_{length}"
    num = [factor(False) for _ in range(draw(st.integers(0, 2)))]
    den = [factor(True) for _ in range(draw(st.integers(0, 2)))]
    text = " ".join(num) or "1"
    if den:
        text += " / " + " ".join(den)
    return text


@settings(max_examples=CASES, deadline=None)
@given(product_text(), st.integers(0, 30), st.integers(1, 30))
def check_truncation_products(text, o1, extra):
    expr = prodexpr.parse(text)
    D = expr.min_denom()
    lo = prodexpr.evaluate(expr, D, o1)
    hi = prodexpr.evaluate(expr, D, o1 + extra)
    assert lo.order == o1 and hi.order >= o1
    assert hi.truncate(o1).first_difference(lo) is None


_FORMS = [("ag", dict(k=3, i=2)), ("thm_2_1", dict(g=2, s=2)), ("thm_2_2", dict(h=1)),
          ("thm_2_3", dict(g=2, s=1)), ("thm_2_5", dict(g=2, s=1)), ("thm_2_6", dict(g=2)),
          ("m37_explicit", dict(k=1)), ("asw", dict(k=3)), ("lemma_3_5a", dict(g=2, s=1)),
          ("lemma_3_6b", dict(g=2)), ("collapse_3_7", dict(g=2, s=2))]


@settings(max_examples=CASES, deadline=None)
@given(st.sampled_from(_FORMS), st.sampled_from([1, 2, 4]), st.integers(0, 24), st.integers(1, 16))
def check_truncation_forms(form, D, o1, extra):
    family, params = form
    spec = build_form(family, **params)
    # a coarse substrate fails once the first off-substrate term falls within the order
    try:
        lo = eval_form(spec, D, o1)
        hi = eval_form(spec, D, o1 + extra)
    except SubstrateError:
        return
    assert hi.truncate(o1).first_difference(lo) is None
