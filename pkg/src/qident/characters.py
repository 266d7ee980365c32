"""Virasoro minimal-model character data.

All characters here are normalised to constant term 1; conformal-dimension
shifts are applied explicitly by callers.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd

from .qfunctions import QMonomial, VanishingProductError, poch_inf, qpoch
from .series import QSeries, SubstrateError, from_terms, one, zero


class LabelError(ValueError):
    """Model or field labels outside their admissible range."""


@dataclass(frozen=True)
class ModelLabel:
    p: int
    pp: int
    rank: int = 2

    def __post_init__(self):
        if not (1 < self.p < self.pp):
            raise LabelError(f"need 1 < p < p', got p={self.p}, p'={self.pp}")
        if gcd(self.p, self.pp) != 1:
            raise LabelError(f"p={self.p} and p'={self.pp} are not coprime")
        if self.rank < 2:
            raise LabelError("algebra rank must be at least 2")


@dataclass(frozen=True)
class FieldLabel:
    r: int
    s: int

    def check(self, m: ModelLabel) -> None:
        if not (1 <= self.r < m.p and 1 <= self.s < m.pp):
            raise LabelError(f"(r,s)=({self.r},{self.s}) outside 1<=r<{m.p}, 1<=s<{m.pp}")


def _labels(p, pp, r, s):
    m = ModelLabel(p, pp)
    f = FieldLabel(r, s)
    f.check(m)
    return m, f


def conformal_dim(p: int, pp: int, r: int, s: int) -> Fraction:
    """Conformal dimension of the (r, s) field of M(p, p')."""
    _labels(p, pp, r, s)
    return Fraction((pp * r - p * s) ** 2 - (pp - p) ** 2, 4 * p * pp)


def central_charge(n: int, p: int, pp: int) -> Fraction:
    """Central charge of the W_n minimal model M(p, p')_n."""
    ModelLabel(p, pp, n)
    return (n - 1) * (1 - Fraction(n * (n + 1) * (pp - p) ** 2, p * pp))


def _on_substrate(s: QSeries, denom: int, order: int) -> QSeries:
    return s.refine(denom // s.denom).truncate(order)


def bosonic(p: int, pp: int, r: int, s: int, order: int, denom: int = 1) -> QSeries:
    """Normalised character from the alternating lattice sum over ``(q)_inf``.

    ``order`` is in units of ``q^(1/denom)``.
    """
    _labels(p, pp, r, s)
    oq = order // denom
    terms = []
    lam = 0
    while True:
        found = False
        for l in ((lam, -lam) if lam else (0,)):
            if l * l * p * pp - abs(l) * (pp * r + p * s) <= oq:
                found = True
                terms.append((l * l * p * pp + l * (pp * r - p * s), 1))
                terms.append(((l * p + r) * (l * pp + s), -1))
        if not found and lam > 0:
            break
        lam += 1
    numer = from_terms(terms, 1, oq)
    result = numer * qpoch(None, 1, oq).invert()
    return _on_substrate(result, denom, order)


# -- pure product forms -------------------------------------------------------------

PRODUCT_CASES = ("p=2r", "p'=2s", "p=3r", "p'=3s")


def product_case_holds(case: str, p: int, pp: int, r: int, s: int) -> bool:
    return {
        "p=2r": p == 2 * r,
        "p'=2s": pp == 2 * s,
        "p=3r": p == 3 * r,
        "p'=3s": pp == 3 * s,
    }[case]


def excluded_residues(case: str, p: int, pp: int, r: int, s: int) -> tuple[int, set[int]]:
    """Modulus and excluded residue classes of the product ``prod 1/(1-q^n)``."""
    if case == "p=2r":
        mod = r * pp
        return mod, {0, (r * s) % mod, (-r * s) % mod}
    if case == "p'=2s":
        mod = s * p
        return mod, {0, (r * s) % mod, (-r * s) % mod}
    if case == "p=3r":
        inner, mod, extra = 2 * r * pp, 4 * r * pp, 2 * r * (pp - s)
    elif case == "p'=3s":
        inner, mod, extra = 2 * s * p, 4 * s * p, 2 * s * (p - r)
    else:
        raise ValueError(f"unknown product case {case!r}")
    base = {0, (r * s) % inner, (-r * s) % inner}
    out = {n for n in range(mod) if n % inner in base}
    out |= {extra % mod, (-extra) % mod}
    return mod, out


def product_char(case: str, p: int, pp: int, r: int, s: int, order: int, denom: int = 1) -> QSeries:
    """Character as a product over the non-excluded residue classes."""
    _labels(p, pp, r, s)
    if case not in PRODUCT_CASES:
        raise ValueError(f"unknown product case {case!r}")
    if not product_case_holds(case, p, pp, r, s):
        raise LabelError(f"case {case} does not hold for (p,p',r,s)=({p},{pp},{r},{s})")
    oq = order // denom
    mod, excl = excluded_residues(case, p, pp, r, s)
    den = one(1, oq)
    for res in range(1, mod + 1):
        if res % mod in excl:
            continue
        den = den * poch_inf(QMonomial(1, Fraction(res)), mod, 1, oq)
    return _on_substrate(den.invert(), denom, order)


# -- character combinations for p = 3, 4 --------------------------------------------


def combo_shift(p: int, pp: int, s: int) -> Fraction:
    """Exponent multiplying the r=p-1 character in the combination."""
    if p == 3:
        return Fraction(pp, 4) - Fraction(s, 2)
    if p == 4:
        return Fraction(pp, 2) - s
    raise LabelError("character combinations are defined for p in {3, 4}")


def combo_denom(p: int, pp: int, s: int) -> int:
    """Coarsest substrate that holds both sides of the combination."""
    if p == 4:
        return 2
    if pp % 2:
        return 4
    return 2 if (pp // 2 - s) % 2 else 1


def _check_combo(p, pp, s):
    if p == 3 and pp % 3 == 0:
        raise LabelError(f"p=3 combination needs p' not divisible by 3, got {pp}")
    if p == 4 and pp % 2 == 0:
        raise LabelError(f"p=4 combination needs odd p', got {pp}")
    if p not in (3, 4):
        raise LabelError("character combinations are defined for p in {3, 4}")
    ModelLabel(p, pp)
    if not 1 <= s < pp:
        raise LabelError(f"s={s} outside 1..{pp - 1}")


def _poch_list(args, base, denom, order):
    out = one(denom, order)
    for a in args:
        out = out * poch_inf(a, base, denom, order)
    return out


def combo_product(p: int, pp: int, s: int, sign: int = 1, form: str = "primary",
                  denom: int | None = None, order: int = 0) -> QSeries:
    """Product form of ``chi_{1,s} + sign * q^shift * chi_{p-1,s}``.

    ``order`` is in units of ``q^(1/denom)``.  A vanishing numerator factor
    (the difference at p' = 2s) gives the zero series.
    """
    _check_combo(p, pp, s)
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    need = combo_denom(p, pp, s)
    if denom is None:
        denom = need
    elif denom % need:
        raise SubstrateError(f"combination needs q^(1/{need}); q^(1/{denom}) is too coarse")
    F = Fraction
    M = QMonomial
    # factors with negative exponents are stored with negative offsets, which
    # lowers the known order of every product they enter; work above order
    target, order = order, order + denom * pp
    try:
        if p == 3 and form == "primary":
            num = _poch_list([M(-sign, F(pp, 4) - F(s, 2)), M(-sign, F(pp, 4) + F(s, 2)), M(1, F(pp, 2))],
                             M(1, F(pp, 2)), denom, order)
            num = num * _poch_list([M(1, F(s)), M(1, F(pp - s))], M(1, F(pp)), denom, order)
            den = qpoch(None, denom, order)
        elif p == 3 and form == "alternative":
            if pp == 2 * s:
                raise LabelError("alternative p=3 form requires p' != 2s")
            num = _poch_list([M(1, F(s)), M(1, F(pp, 2) - s), M(1, F(pp, 2))], M(1, F(pp, 2)), denom, order)
            den = qpoch(None, denom, order) * _poch_list(
                [M(sign, F(pp, 4) - F(s, 2)), M(sign, F(pp, 4) + F(s, 2))], M(1, F(pp, 2)), denom, order)
        elif p == 4 and form == "primary":
            num = _poch_list([M(1, F(s)), M(-sign, F(pp, 2) - s), M(-sign, F(pp, 2))],
                             M(-sign, F(pp, 2)), denom, order)
            den = qpoch(None, denom, order)
        elif p == 4 and form == "alternative":
            num = _poch_list([M(-sign, F(pp, 2) - s), M(-sign, F(pp, 2)), M(-sign, F(pp, 2) + s),
                              M(1, F(s)), M(1, F(pp - s)), M(1, F(pp))], M(1, F(pp)), denom, order)
            den = qpoch(None, denom, order)
        else:
            raise ValueError(f"unknown form {form!r}")
    except VanishingProductError:
        return zero(denom, target)
    result = num * den.invert()
    if result.order < target:
        raise RuntimeError(f"combination product known only through t^{result.order}, need t^{target}")
    return result.truncate(target)


def combo_bosonic(p: int, pp: int, s: int, sign: int = 1, denom: int | None = None, order: int = 0) -> QSeries:
    """The same combination assembled from two bosonic characters."""
    _check_combo(p, pp, s)
    if denom is None:
        denom = combo_denom(p, pp, s)
    shift = combo_shift(p, pp, s) * denom
    if shift.denominator != 1:
        raise SubstrateError(f"shift {combo_shift(p, pp, s)} not on q^(1/{denom})")
    shift = int(shift)
    a = bosonic(p, pp, 1, s, order, denom)
    if order - shift < 0:
        return a
    b = bosonic(p, pp, p - 1, s, order - shift, denom).shift(shift)
    return a + b * sign
