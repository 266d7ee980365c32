from dataclasses import replace
from fractions import Fraction
from itertools import product

import pytest

from qident import prodexpr
from qident.characters import combo_shift
from qident.fermionic import (FAMILIES, DomainError, PruningError, bmatrix, bmatrix_check, build_form, eval_form,
                              quad_mutation)
from qident.qfunctions import gaussian_coeffs

F = Fraction


# -- brute-force oracle: box enumeration with dictionary series ------------------------


def _mul(a, b, top):
    out = {}
    for e1, c1 in a.items():
        for e2, c2 in b.items():
            e = e1 + e2
            if e <= top:
                out[e] = out.get(e, 0) + c1 * c2
    return out


def _poch(sign, a_exp, base, n, top, invert):
    """``(sign q^a; q^base)_n`` or its inverse as a dict, exponents capped at ``top``."""
    out = {F(0): 1}
    for i in range(n):
        e = a_exp + i * base
        if invert:
            geo, k = {}, 0
            while k * e <= top:
                geo[k * e] = sign ** k
                k += 1
                if e == 0:
                    raise ValueError("non-invertible factor")
            out = _mul(out, geo, top)
        else:
            out = _mul(out, {F(0): 1, e: -sign}, top)
    return out


def brute_force(spec, top, box):
    total = {}
    n = spec.nvars
    c = spec.chain_len
    for x in product(range(box + 1), repeat=n):
        if any(x[j] < x[j + 1] for j in range(c - 1)):
            continue
        if any((v.parity == "even" and x[c + k] % 2) or (v.parity == "odd" and x[c + k] % 2 == 0)
               for k, v in enumerate(spec.extra_vars)):
            continue
        e = spec.exponent(x)
        if e > top:
            continue
        term = {e: 1}
        for t in spec.denom_factors:
            length = t.length(x)
            if length < 0:
                term = {}
                break
            term = _mul(term, _poch(t.a_sign, t.a_exp, t.base_exp, int(length), top - e, True), top)
        for t in spec.numer_factors:
            term = _mul(term, _poch(t.a_sign, t.a_exp, t.base_exp, int(t.length(x)), top, False), top)
        g = spec.gaussian_factor
        if g is not None and term:
            P, N = int(g.top(x)), int(g.bottom(x))
            term = _mul(term, {F(i): v for i, v in enumerate(gaussian_coeffs(P, N))}, top)
        for k, v in term.items():
            total[k] = total.get(k, 0) + v
    return total


def as_dict(s):
    return {F(e, s.denom): c for e, c in s.terms() if c}


ORACLE_CASES = [
    ("ag", dict(k=3, i=1), 1, 12, 12),
    ("thm_2_1", dict(g=2, s=1), 4, 8, 8),
    ("thm_2_2", dict(h=1), 1, 8, 8),
    ("thm_2_3", dict(g=2, s=3), 4, 8, 8),
    ("thm_2_5", dict(g=1, s=1), 2, 10, 10),
    ("thm_2_6", dict(g=2), 2, 6, 6),
    ("m37_explicit", dict(k=1), 1, 8, 8),
    ("lemma_3_5a", dict(g=2, s=1), 2, 6, 8),
    ("lemma_3_6b", dict(g=2), 4, 6, 8),
    ("collapse_3_5", dict(g=2, s=1), 2, 8, 10),
]


@pytest.mark.parametrize("family, params, D, top, box", ORACLE_CASES)
def test_eval_matches_box_enumeration(family, params, D, top, box):
    spec = build_form(family, **params)
    got = eval_form(spec, D, top * D, certify=True)
    want = {e: v for e, v in brute_force(spec, top, box).items() if v}
    assert as_dict(got) == want
    # a larger box adds nothing: the oracle itself is complete
    assert {e: v for e, v in brute_force(spec, top, box + 3).items() if v} == want


# -- structure of individual forms --------------------------------------------------


def test_rogers_ramanujan_form():
    spec = build_form("ag", k=2, i=2)
    assert spec.names == ["N1"] and spec.quad == ((1,),) and list(spec.effective_lin()) == [0]
    assert [t.render(spec.names) for t in spec.denom_factors] == ["(q;q)_{N1}"]
    s = eval_form(spec, 1, 6)
    assert [s.coeff_at(e) for e in range(7)] == [1, 1, 1, 1, 2, 2, 3]


def test_single_variable_quarter_form():
    spec = build_form("thm_2_3", g=1, s=2)
    assert spec.names == ["M"] and spec.quad == ((F(1, 4),),) and list(spec.effective_lin()) == [0]
    assert [t.render(spec.names) for t in spec.denom_factors] == ["(q;q)_{M}"]


def test_even_parity_form():
    spec = build_form("lemma_3_1a", g=1, s=1)
    assert spec.extra_vars[0].parity == "even" and spec.quad == ((F(1, 2),),)
    s = eval_form(spec, 2, 12)
    # only even m contribute: q^(m^2/2)/(q)_m has no term at q^(1/2)
    assert s.coeff_at(1) == 0 and s.coeff_at(4) == 1


def test_small_values():
    s = eval_form(build_form("thm_2_2", h=1), 1, 2)
    assert [s.coeff_at(e) for e in range(3)] == [1, 1, 2]
    s = eval_form(build_form("m37_explicit", k=1), 1, 5)
    assert [s.coeff_at(e) for e in range(6)] == [1, 0, 1, 2, 3, 3]


def test_printed_exponent_variant_fails_at_cubic_order():
    rhs = prodexpr.evaluate("(q^5;q^5)_inf / (q;q)_inf", 1, 10)
    printed = eval_form(build_form("thm_2_2_printed", h=1), 1, 10)
    assert printed.first_difference(rhs) == (3, 2, 3)
    assert eval_form(build_form("thm_2_2", h=1), 1, 10).first_difference(rhs) is None


def test_constant_term():
    # 1 + sign*q^shift*(...) starts with 2 exactly when the shift vanishes (p' = 2s)
    for g in range(1, 6):
        for s in range(1, g + 2):
            want = 2 if combo_shift(3, 3 * g + 1, s) == 0 else 1
            assert eval_form(build_form("thm_2_1", g=g, s=s), 4, 8).coeff_at(0) == want
            assert eval_form(build_form("thm_2_3", g=g, s=s), 4, 8).coeff_at(0) == 1
        for s in range(1, g + 1):
            assert eval_form(build_form("thm_2_5", g=g, s=s), 2, 8).coeff_at(0) == 1
            assert eval_form(build_form("thm_2_7", g=g, s=s), 2, 8).coeff_at(0) == 1
    for h in range(1, 5):
        assert eval_form(build_form("thm_2_2", h=h), 1, 4).coeff_at(0) == 1
        assert eval_form(build_form("thm_2_4", h=h), 1, 4).coeff_at(0) == 1


def test_bmatrix():
    assert bmatrix(1) == [[1]]
    assert bmatrix(3) == [[1, 1, 1], [1, 2, 2], [1, 2, 3]]
    assert bmatrix_check(2)
    assert bmatrix_check(5)
    bad = bmatrix(3)
    bad[0][1] = bad[1][0] = 2
    assert not bmatrix_check(4, B=bad)


def test_certified_equals_plain():
    for family, params, D in [("thm_2_2", dict(h=2), 1), ("lemma_3_6a", dict(g=3), 4), ("asw", dict(k=4), 1)]:
        spec = build_form(family, **params)
        assert eval_form(spec, D, 30 * D, certify=True) == eval_form(spec, D, 30 * D)


def test_unbounded_form_raises():
    spec = build_form("ag", k=2, i=2)
    with pytest.raises(PruningError):
        eval_form(replace(spec, quad=((F(-1),),)), 1, 10)
    with pytest.raises(PruningError):
        eval_form(replace(spec, quad=((F(0),),), tail_start=None), 1, 10)


def test_domain_errors():
    with pytest.raises(DomainError):
        build_form("thm_2_1", g=1, s=3)
    with pytest.raises(DomainError):
        build_form("thm_2_1", g=1)
    with pytest.raises(DomainError):
        build_form("no_such_family")


def test_json_keys():
    keys = {"chain_len", "extra_vars", "quad", "lin", "const", "tail_start", "denom_factors", "gaussian_factor"}
    for family, (names, _) in FAMILIES.items():
        params = {"k": 2, "i": 1} if family == "ag" else {n: 2 for n in names}
        if family in ("thm_2_1", "thm_2_3", "thm_2_5", "thm_2_7") or family.startswith(("lemma_3_1", "lemma_3_3",
                                                                                          "lemma_3_5", "lemma_3_7")):
            params["s"] = 1
        data = build_form(family, **params).to_json()
        assert keys <= set(data)
        assert len(data["quad"]) == len(data["variables"])


def test_mutation_is_scoped():
    base = build_form("thm_2_1", g=3, s=1)
    with quad_mutation("thm_2_1", 0, 1):
        mutated = build_form("thm_2_1", g=3, s=1)
        other = build_form("thm_2_3", g=3, s=1)
    assert mutated.quad[0][1] == base.quad[0][1] + F(1, 2)
    assert other == build_form("thm_2_3", g=3, s=1)
    assert build_form("thm_2_1", g=3, s=1) == base
