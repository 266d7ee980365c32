"""Identity catalog and the coefficient-comparison engine."""
from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Callable, Iterable

from . import characters as ch
from . import prodexpr
from .fermionic import DomainError, bmatrix_check, build_form, eval_form
from .qfunctions import partition_count, qbinomial_sum, qpoch
from .series import QSeries, from_terms

F = Fraction

DEFAULT_CAPS = {"g": 5, "h": 4, "k": 5, "P": 30, "pprime": 20, "pp": 100}


class PrefactorError(AssertionError):
    """An exact-rational exponent cancellation does not hold."""


@dataclass(frozen=True)
class IdentityRecord:
    id: str
    family: str
    params: tuple[str, ...]
    domain_text: str
    check: Callable[[dict], None]
    substrate: Callable[[dict], int]
    lhs: Callable[[dict, int, int], object]
    rhs: Callable[[dict, int, int], object]
    instances: Callable[[dict], Iterable[dict]]
    provenance: str
    conjectural: bool = False
    uses: tuple[str, ...] = ()
    precheck: Callable[[dict], None] | None = None
    form: tuple[str, dict] | None = None  # fermionic family (and fixed parameters) behind the left side

    def form_spec(self, params: dict):
        if self.form is None:
            raise DomainError(f"{self.id} has no fermionic left side")
        family, fixed = self.form
        return build_form(family, **params, **fixed)


@dataclass
class VerificationReport:
    id: str
    params: dict
    D: int
    order_q: int
    equal_through_t: int
    status: str
    conjectural: bool
    first_discrepancy: dict | None
    wall_time_ms: float
    message: str = ""

    def to_json(self) -> dict:
        out = {
            "id": self.id,
            "params": dict(sorted(self.params.items())),
            "D": self.D,
            "order_q": self.order_q,
            "equal_through_t": self.equal_through_t,
            "status": self.status,
            "conjectural": self.conjectural,
            "first_discrepancy": self.first_discrepancy,
            "wall_time_ms": round(self.wall_time_ms, 3),
        }
        if self.message:
            out["message"] = self.message
        return out

    @property
    def ok(self) -> bool:
        return self.status == "verified"


# -- helpers ---------------------------------------------------------------------------


def _mono(e, sign=1) -> str:
    e = F(e)
    s = "-" if sign < 0 else ""
    if e.denominator == 1:
        return f"{s}q^{e.numerator}"
    return f"{s}q^({e.numerator}/{e.denominator})"


def _poch_text(args, base) -> str:
    return "(" + ",".join(_mono(e, sg) for sg, e in args) + ";" + _mono(base) + ")_inf"


def _residue_product(mod: int, residues: Iterable[int]) -> str:
    """``prod 1/(1 - q^n)`` over ``n`` congruent to one of ``residues``."""
    return "1 / " + _poch_text([(1, r) for r in residues], mod)


def _product(text: str):
    return lambda p, D, O: prodexpr.evaluate(text.format(**p) if "{" in text else text, D, O)


def _form(family, **fixed):
    def run(p, D, O):
        return eval_form(build_form(family, **p, **fixed), D, O, certify=_CERTIFY[0])
    return run


_CERTIFY = [True]


def _need(cond, msg):
    if not cond:
        raise DomainError(msg)


def _check_gs(p):
    _need(p["g"] >= 1 and 1 <= p["s"] <= p["g"] + 1, f"need g >= 1 and 1 <= s <= g+1, got {p}")


def _check_g(p):
    _need(p["g"] >= 1, f"need g >= 1, got {p}")


def _check_h(p):
    _need(p["h"] >= 1, f"need h >= 1, got {p}")


def _none(p):
    return None


def _gs_instances(caps, lo=1):
    for g in range(lo, caps["g"] + 1):
        for s in range(1, g + 2):
            yield {"g": g, "s": s}


def _g_instances(caps, lo=1):
    for g in range(lo, caps["g"] + 1):
        yield {"g": g}


def _h_instances(caps):
    for h in range(1, caps["h"] + 1):
        yield {"h": h}


def _single(caps):
    yield {}


# -- product sides for the theorems ---------------------------------------------------


def _thm_rhs(family: str, p: dict) -> str:
    g, s, h = p.get("g"), p.get("s"), p.get("h")
    if family == "thm_2_1":
        n = 3 * g + 1
        return (_poch_text([(-1, F(n, 4) - F(s, 2)), (-1, F(n, 4) + F(s, 2)), (1, F(n, 2))], F(n, 2))
                + " " + _poch_text([(1, s), (1, n - s)], n) + " / (q;q)_inf")
    if family == "thm_2_3":
        n = 3 * g + 2
        return (_poch_text([(-1, F(3 * g, 4) - F(s - 1, 2)), (-1, F(3 * g, 4) + F(s + 1, 2)),
                            (1, F(3 * g, 2) + 1)], F(3 * g, 2) + 1)
                + " " + _poch_text([(1, s), (1, n - s)], n) + " / (q;q)_inf")
    if family == "thm_2_2":
        return f"(q^{3 * h + 2};q^{3 * h + 2})_inf / (q;q)_inf"
    if family == "thm_2_4":
        return f"(q^{3 * h + 1};q^{3 * h + 1})_inf / (q;q)_inf"
    half = F(1, 2)
    if family == "thm_2_5":
        n = 4 * g + 1
        args = [(-1, 2 * g - s + half), (-1, 2 * g + half), (-1, 2 * g + s + half), (1, s), (1, n - s), (1, n)]
    elif family == "thm_2_6":
        n = 4 * g + 1
        args = [(-1, half), (-1, 2 * g + half), (-1, 4 * g + half), (1, 2 * g), (1, 2 * g + 1), (1, n)]
    elif family == "thm_2_7":
        n = 4 * g + 3
        args = [(-1, 2 * g - s + 3 * half), (-1, 2 * g + 3 * half), (-1, 2 * g + s + 3 * half),
                (1, s), (1, n - s), (1, n)]
    elif family == "thm_2_8":
        n = 4 * g + 3
        args = [(-1, half), (-1, 2 * g + 3 * half), (-1, 4 * g + 5 * half), (1, 2 * g + 1), (1, 2 * g + 2), (1, n)]
    else:
        raise KeyError(family)
    return _poch_text(args, n) + " / (q;q)_inf"


# model data per theorem family: (p, p'(params), s(params))
_THM_MODEL = {
    "thm_2_1": (3, lambda p: 3 * p["g"] + 1, lambda p: p["s"]),
    "thm_2_2": (3, lambda p: 6 * p["h"] + 4, lambda p: 3 * p["h"] + 2),
    "thm_2_3": (3, lambda p: 3 * p["g"] + 2, lambda p: p["s"]),
    "thm_2_4": (3, lambda p: 6 * p["h"] + 2, lambda p: 3 * p["h"] + 1),
    "thm_2_5": (4, lambda p: 4 * p["g"] + 1, lambda p: p["s"]),
    "thm_2_6": (4, lambda p: 4 * p["g"] + 1, lambda p: 2 * p["g"]),
    "thm_2_7": (4, lambda p: 4 * p["g"] + 3, lambda p: p["s"]),
    "thm_2_8": (4, lambda p: 4 * p["g"] + 3, lambda p: 2 * p["g"] + 1),
}

_THM_PARAMS = {
    "thm_2_1": ("g", "s"), "thm_2_2": ("h",), "thm_2_3": ("g", "s"), "thm_2_4": ("h",),
    "thm_2_5": ("g", "s"), "thm_2_6": ("g",), "thm_2_7": ("g", "s"), "thm_2_8": ("g",),
}

_THM_TEXT = {
    "thm_2_1": "M(3,3g+1) combination, g >= 1, 1 <= s <= g+1",
    "thm_2_2": "M(3,6h+4) character, h >= 1",
    "thm_2_3": "M(3,3g+2) combination, g >= 1, 1 <= s <= g+1",
    "thm_2_4": "M(3,6h+2) character, h >= 1",
    "thm_2_5": "M(4,4g+1) combination, g >= 1, 1 <= s <= g+1",
    "thm_2_6": "M(4,4g+1) combination at s=2g, g >= 1",
    "thm_2_7": "M(4,4g+3) combination, g >= 1, 1 <= s <= g+1",
    "thm_2_8": "M(4,4g+3) combination at s=2g+1, g >= 1",
}


def _thm_denom(family, p):
    P, ppf, sf = _THM_MODEL[family]
    if family in ("thm_2_2", "thm_2_4"):
        return 1
    return ch.combo_denom(P, ppf(p), sf(p))


def _thm_bosonic(family):
    P, ppf, sf = _THM_MODEL[family]

    def run(p, D, O):
        if family in ("thm_2_2", "thm_2_4"):
            return ch.bosonic(P, ppf(p), 1, sf(p), O, D)
        return ch.combo_bosonic(P, ppf(p), sf(p), 1, D, O)
    return run


def _thm_instances(family):
    names = _THM_PARAMS[family]
    if names == ("g", "s"):
        return _gs_instances
    if names == ("g",):
        return _g_instances
    return _h_instances


def _thm_check(family):
    names = _THM_PARAMS[family]
    return {("g", "s"): _check_gs, ("g",): _check_g, ("h",): _check_h}[names]


# -- lemma records ---------------------------------------------------------------------

# (p, p'(g|h), s(params), r, theorem family)
_LEMMA_FORMS = {
    "lemma_3_1a": (3, lambda p: 3 * p["g"] + 1, lambda p: p["s"], 1),
    "lemma_3_1b": (3, lambda p: 3 * p["g"] + 1, lambda p: p["s"], 2),
    "lemma_3_2": (3, lambda p: 6 * p["h"] + 4, lambda p: 3 * p["h"] + 2, 1),
    "lemma_3_3a": (3, lambda p: 3 * p["g"] + 2, lambda p: p["s"], 1),
    "lemma_3_3b": (3, lambda p: 3 * p["g"] + 2, lambda p: p["s"], 2),
    "lemma_3_4": (3, lambda p: 6 * p["h"] + 2, lambda p: 3 * p["h"] + 1, 1),
    "lemma_3_5a": (4, lambda p: 4 * p["g"] + 1, lambda p: p["s"], 1),
    "lemma_3_5b": (4, lambda p: 4 * p["g"] + 1, lambda p: p["s"], 3),
    "lemma_3_6a": (4, lambda p: 4 * p["g"] + 1, lambda p: 2 * p["g"] + 1, 1),
    "lemma_3_6b": (4, lambda p: 4 * p["g"] + 1, lambda p: 2 * p["g"] + 1, 3),
    "lemma_3_7a": (4, lambda p: 4 * p["g"] + 3, lambda p: p["s"], 1),
    "lemma_3_7b": (4, lambda p: 4 * p["g"] + 3, lambda p: p["s"], 3),
    "lemma_3_8a": (4, lambda p: 4 * p["g"] + 3, lambda p: 2 * p["g"] + 1, 1),
    "lemma_3_8b": (4, lambda p: 4 * p["g"] + 3, lambda p: 2 * p["g"] + 1, 3),
}


def _lemma_params(name):
    return ("h",) if name in ("lemma_3_2", "lemma_3_4") else ("g",) if name[-2] in "68" else ("g", "s")


def _lemma_denom(name, p):
    P, ppf, sf, _ = _LEMMA_FORMS[name]
    if P == 4:
        return 2
    return ch.combo_denom(P, ppf(p), sf(p))


# split: theorem = first + q^shift * second; (first, second, theorem, shift(params))
_SPLITS = {
    "3_1": ("lemma_3_1a", "lemma_3_1b", "thm_2_1", lambda p: ch.combo_shift(3, 3 * p["g"] + 1, p["s"])),
    "3_3": ("lemma_3_3a", "lemma_3_3b", "thm_2_3", lambda p: ch.combo_shift(3, 3 * p["g"] + 2, p["s"])),
    "3_5": ("lemma_3_5a", "lemma_3_5b", "thm_2_5", lambda p: ch.combo_shift(4, 4 * p["g"] + 1, p["s"])),
    # chi_{1,2g} = chi_{3,2g+1} and chi_{3,2g} = chi_{1,2g+1} on M(4,4g+1)
    "3_6": ("lemma_3_6b", "lemma_3_6a", "thm_2_6", lambda p: F(1, 2)),
    "3_7": ("lemma_3_7a", "lemma_3_7b", "thm_2_7", lambda p: ch.combo_shift(4, 4 * p["g"] + 3, p["s"])),
    "3_8": ("lemma_3_8a", "lemma_3_8b", "thm_2_8", lambda p: F(1, 2)),
}


def prefactor_residual(key: str, params: dict) -> Fraction:
    """``pref(first) - pref(second) - shift``; zero when the prefactors cancel exactly."""
    first, second, _, shift = _SPLITS[key]
    a = build_form(first, **params).const
    b = build_form(second, **params).const
    return a - b - shift(params)


def _split_precheck(key):
    def run(p):
        r = prefactor_residual(key, p)
        if r != 0:
            raise PrefactorError(f"prefactor cancellation for lemma {key} fails by {r} at {p}")
    return run


def _split_lhs(key):
    first, second, _, shift = _SPLITS[key]

    def run(p, D, O):
        sh = shift(p) * D
        if sh.denominator != 1:
            raise DomainError(f"shift {shift(p)} not on q^(1/{D})")
        sh = int(sh)
        a = eval_form(build_form(first, **p), D, O, certify=_CERTIFY[0])
        b = eval_form(build_form(second, **p), D, O - sh, certify=_CERTIFY[0]).shift(sh)
        return a + b
    return run


_COLLAPSE = {"3_5": "thm_2_5", "3_6": "thm_2_6", "3_7": "thm_2_7", "3_8": "thm_2_8"}


# -- special single sums ---------------------------------------------------------------

_SPECIALS = {
    "rogers_1": ("(-q^3,-q^7,q^10;q^10)_inf (q^4,q^16;q^20)_inf / (q^4;q^4)_inf", "thm_2_3", {"g": 1, "s": 1}, 4),
    "rogers_2": ("(-q,-q^9,q^10;q^10)_inf (q^8,q^12;q^20)_inf / (q^4;q^4)_inf", "thm_2_3", {"g": 1, "s": 2}, 4),
    "rogers_3": ("(-q^3,-q^5,-q^7;q^10)_inf / (q^4,q^6;q^10)_inf", "thm_2_5", {"g": 1, "s": 1}, 2),
    "rogers_4a": ("(-q,-q^5,-q^9;q^10)_inf / (q^2,q^8;q^10)_inf", "thm_2_6", {"g": 1}, 2),
    "rogers_4b": ("(-q,-q^5,-q^9;q^10)_inf / (q^2,q^8;q^10)_inf", "thm_2_5", {"g": 1, "s": 2}, 2),
    "selberg_1": ("(-q^5,-q^7,-q^9;q^14)_inf / (q^4,q^6,q^8,q^10;q^14)_inf", "thm_2_7", {"g": 1, "s": 1}, 2),
    "selberg_2": ("(-q^3,-q^7,-q^11;q^14)_inf / (q^2,q^6,q^8,q^12;q^14)_inf", "thm_2_7", {"g": 1, "s": 2}, 2),
    "selberg_3": ("(-q,-q^7,-q^13;q^14)_inf / (q^2,q^4,q^10,q^12;q^14)_inf", "thm_2_8", {"g": 1}, 2),
}

_M37_RESIDUES = {1: (2, 3, 3, 4, 4, 5), 2: (1, 2, 2, 5, 5, 6), 3: (1, 1, 3, 4, 6, 6), 4: (1, 2, 3, 4, 5, 6)}
# which theorem instance and which M(3,14) combination carry each M(3,7)_3 character
_M37_THEOREM = {1: ("thm_2_3", {"g": 4, "s": 1}), 2: ("thm_2_3", {"g": 4, "s": 3}),
                3: ("thm_2_3", {"g": 4, "s": 5}), 4: ("thm_2_4", {"h": 2})}


def _m37_bosonic(k):
    def run(p, D, O):
        if k == 4:
            return ch.bosonic(3, 14, 1, 7, O, D)
        return ch.combo_bosonic(3, 14, 2 * k - 1, 1, D, O)
    return run


# -- character-only records ------------------------------------------------------------


def _models(cap_pp):
    for p in range(2, cap_pp):
        for pp in range(p + 1, cap_pp // p + 1):
            if gcd(p, pp) == 1:
                yield p, pp


def _bosonic_product_instances(caps):
    for p, pp in _models(caps["pp"]):
        for r in range(1, p):
            for s in range(1, pp):
                for c, case in enumerate(ch.PRODUCT_CASES, 1):
                    if ch.product_case_holds(case, p, pp, r, s):
                        yield {"p": p, "pp": pp, "r": r, "s": s, "case": c}


def _check_bosonic_product(p):
    ch.FieldLabel(p["r"], p["s"]).check(ch.ModelLabel(p["p"], p["pp"]))
    _need(1 <= p["case"] <= len(ch.PRODUCT_CASES), f"case must be 1..{len(ch.PRODUCT_CASES)}")
    case = ch.PRODUCT_CASES[p["case"] - 1]
    _need(ch.product_case_holds(case, p["p"], p["pp"], p["r"], p["s"]), f"case {case} does not hold for {p}")


def _symmetry_instances(caps):
    for p, pp in _models(caps["pp"]):
        for r in range(1, p):
            for s in range(1, pp):
                if (r, s) < (p - r, pp - s):
                    yield {"p": p, "pp": pp, "r": r, "s": s}


def _check_field(p):
    ch.FieldLabel(p["r"], p["s"]).check(ch.ModelLabel(p["p"], p["pp"]))


def _combo_instances(P, need_alt):
    def gen(caps):
        for pp in range(P + 1, caps["pprime"] + 1):
            if gcd(P, pp) != 1:
                continue
            for s in range(1, pp):
                if need_alt and P == 3 and pp == 2 * s:
                    continue
                for sign in (1, -1):
                    yield {"pp": pp, "s": s, "sign": sign}
    return gen


def _combo_check(P, need_alt):
    def run(p):
        _need(p["sign"] in (1, -1), "sign must be 1 or -1")
        ch._check_combo(P, p["pp"], p["s"])
        if need_alt and P == 3:
            _need(p["pp"] != 2 * p["s"], "the alternative p=3 form needs p' != 2s")
    return run


def _partition_series(p, D, O):
    return from_terms(((n, partition_count(n)) for n in range(O + 1)), 1, O)


# -- the catalog -------------------------------------------------------------------------


def _build_catalog() -> list[IdentityRecord]:
    recs: list[IdentityRecord] = []
    add = recs.append

    def agcheck(p):
        _need(p["k"] >= 2 and 1 <= p["i"] <= p["k"], f"need k >= 2 and 1 <= i <= k, got {p}")

    def ag_instances(caps):
        for k in range(2, caps["k"] + 1):
            for i in range(1, k + 1):
                yield {"k": k, "i": i}

    def ag_rhs(p, D, O):
        k, i = p["k"], p["i"]
        n = 2 * k + 1
        return prodexpr.evaluate(_residue_product(n, [r for r in range(1, n) if r not in (i, n - i)]), D, O)

    add(IdentityRecord("ag", "ag", ("k", "i"), "k >= 2, 1 <= i <= k", agcheck, lambda p: 1,
                       _form("ag"), ag_rhs, ag_instances, "Andrews-Gordon identities", uses=("ag",),
                       form=("ag", {})))
    add(IdentityRecord("ag_bosonic", "ag", ("k", "i"), "k >= 2, 1 <= i <= k", agcheck, lambda p: 1,
                       _form("ag"), lambda p, D, O: ch.bosonic(2, 2 * p["k"] + 1, 1, p["i"], O, D),
                       ag_instances, "Andrews-Gordon sums as M(2,2k+1) characters", uses=("ag",),
                       form=("ag", {})))

    for fam in _THM_MODEL:
        add(IdentityRecord(fam, fam, _THM_PARAMS[fam], _THM_TEXT[fam], _thm_check(fam),
                           (lambda f: lambda p: _thm_denom(f, p))(fam), _form(fam),
                           (lambda f: lambda p, D, O: prodexpr.evaluate(_thm_rhs(f, p), D, O))(fam),
                           _thm_instances(fam), f"fermionic theorem {fam[4:].replace('_', '.')}", uses=(fam,),
                           form=(fam, {})))
        add(IdentityRecord(fam + "_bosonic", fam, _THM_PARAMS[fam], _THM_TEXT[fam], _thm_check(fam),
                           (lambda f: lambda p: _thm_denom(f, p))(fam), _form(fam), _thm_bosonic(fam),
                           _thm_instances(fam), "theorem left side against the bosonic character route",
                           uses=(fam,), form=(fam, {})))

    for k in range(1, 5):
        prod = _residue_product(7, _M37_RESIDUES[k])
        conj = k == 2
        add(IdentityRecord(f"m37_{k}", "m37_explicit", (), "none", _none, lambda p: 1,
                           _form("m37_explicit", k=k), _product(prod), _single,
                           "M(3,7)_3 four-fold sums", uses=("m37_explicit",), form=("m37_explicit", {"k": k})))
        add(IdentityRecord(f"asw_{k}", "asw", (), "none", _none, lambda p: 1, _form("asw", k=k), _product(prod),
                           _single, "M(3,7)_3 sums with a Gaussian factor", conjectural=conj, uses=("asw",),
                           form=("asw", {"k": k})))
        add(IdentityRecord(f"m37_{k}_asw", "m37_explicit", (), "none", _none, lambda p: 1,
                           _form("m37_explicit", k=k), _form("asw", k=k), _single,
                           "agreement of the two M(3,7)_3 left sides", conjectural=conj,
                           uses=("m37_explicit", "asw"), form=("m37_explicit", {"k": k})))
        tfam, tpar = _M37_THEOREM[k]
        add(IdentityRecord(f"m37_{k}_theorem", "m37_explicit", (), "none", _none, lambda p: 1,
                           _form("m37_explicit", k=k), _form(tfam, **tpar), _single,
                           "M(3,7)_3 sums against the M(3,14) theorem instance",
                           uses=("m37_explicit", tfam), form=("m37_explicit", {"k": k})))
        add(IdentityRecord(f"m37_{k}_bosonic", "m37_explicit", (), "none", _none, lambda p: 1,
                           _form("m37_explicit", k=k), _m37_bosonic(k), _single,
                           "M(3,7)_3 sums against M(3,14) bosonic characters", uses=("m37_explicit",),
                           form=("m37_explicit", {"k": k})))
    prod4 = _residue_product(7, _M37_RESIDUES[4])
    add(IdentityRecord("asw_4b", "asw_4b", (), "none", _none, lambda p: 1, _form("asw_4b"), _product(prod4),
                       _single, "second Gaussian-factor sum for the fourth M(3,7)_3 character", uses=("asw_4b",),
                       form=("asw_4b", {})))
    add(IdentityRecord("m37_4_asw_4b", "m37_explicit", (), "none", _none, lambda p: 1,
                       _form("m37_explicit", k=4), _form("asw_4b"), _single,
                       "agreement of the two M(3,7)_3 left sides", uses=("m37_explicit", "asw_4b"),
                       form=("m37_explicit", {"k": 4})))

    for s, rhs in ((1, "(-q^(1/2);q)_inf"), (2, "(-q^0;q)_inf")):
        add(IdentityRecord(f"euler_{s}", "thm_2_1", (), "none", _none, lambda p: 2,
                           _form("thm_2_1", g=1, s=s), _product(rhs), _single,
                           "Euler's formula at two specialisations", uses=("thm_2_1",),
                           form=("thm_2_1", {"g": 1, "s": s})))
    for name, (prod, tfam, tpar, k) in _SPECIALS.items():
        add(IdentityRecord(name, name, (), "none", _none, lambda p: 1, _form(name), _product(prod), _single,
                           "single-sum identity in integer powers of q", uses=(name,), form=(name, {})))
        add(IdentityRecord(f"{name}_subst", name, (), "none", _none, lambda p: 1,
                           (lambda t, tp, kk: lambda p, D, O: eval_form(build_form(t, **tp), kk, O,
                                                                         certify=_CERTIFY[0]).substitute(kk))(
                               tfam, tpar, k),
                           _form(name), _single, f"g=1 theorem instance under q -> q^{k}", uses=(name, tfam),
                           form=(name, {})))

    add(IdentityRecord("bosonic_product", "bosonic", ("p", "pp", "r", "s", "case"),
                       "coprime 1 < p < p', one of p=2r, p'=2s, p=3r, p'=3s (case 1..4)",
                       _check_bosonic_product, lambda p: 1,
                       lambda p, D, O: ch.bosonic(p["p"], p["pp"], p["r"], p["s"], O, D),
                       lambda p, D, O: ch.product_char(ch.PRODUCT_CASES[p["case"] - 1], p["p"], p["pp"], p["r"],
                                                       p["s"], O, D),
                       _bosonic_product_instances, "bosonic sum against pure products"))
    add(IdentityRecord("character_symmetry", "bosonic", ("p", "pp", "r", "s"),
                       "coprime 1 < p < p', 1 <= r < p, 1 <= s < p'", _check_field, lambda p: 1,
                       lambda p, D, O: ch.bosonic(p["p"], p["pp"], p["r"], p["s"], O, D),
                       lambda p, D, O: ch.bosonic(p["p"], p["pp"], p["p"] - p["r"], p["pp"] - p["s"], O, D),
                       _symmetry_instances, "character symmetry under (r,s) -> (p-r,p'-s)"))
    for P in (3, 4):
        add(IdentityRecord(f"combo_p{P}_forms", "combo", ("pp", "s", "sign"),
                           f"p={P}, admissible p', 1 <= s < p', sign = +-1", _combo_check(P, True),
                           (lambda P_: lambda p: ch.combo_denom(P_, p["pp"], p["s"]))(P),
                           (lambda P_: lambda p, D, O: ch.combo_product(P_, p["pp"], p["s"], p["sign"], "primary",
                                                                         D, O))(P),
                           (lambda P_: lambda p, D, O: ch.combo_product(P_, p["pp"], p["s"], p["sign"],
                                                                         "alternative", D, O))(P),
                           _combo_instances(P, True), "two product forms of a character combination"))
        add(IdentityRecord(f"combo_p{P}_bosonic", "combo", ("pp", "s", "sign"),
                           f"p={P}, admissible p', 1 <= s < p', sign = +-1", _combo_check(P, False),
                           (lambda P_: lambda p: ch.combo_denom(P_, p["pp"], p["s"]))(P),
                           (lambda P_: lambda p, D, O: ch.combo_product(P_, p["pp"], p["s"], p["sign"], "primary",
                                                                         D, O))(P),
                           (lambda P_: lambda p, D, O: ch.combo_bosonic(P_, p["pp"], p["s"], p["sign"], D, O))(P),
                           _combo_instances(P, False), "combination product against two bosonic characters"))

    for name, (P, ppf, sf, r) in _LEMMA_FORMS.items():
        names = _lemma_params(name)
        check = {("g", "s"): _check_gs, ("g",): _check_g, ("h",): _check_h}[names]
        inst = {("g", "s"): _gs_instances, ("g",): _g_instances, ("h",): _h_instances}[names]
        add(IdentityRecord(name, name, names, "as the matching theorem", check,
                           (lambda n: lambda p: _lemma_denom(n, p))(name), _form(name),
                           (lambda P_, ppf_, sf_, r_: lambda p, D, O: ch.bosonic(P_, ppf_(p), r_, sf_(p), O, D))(
                               P, ppf, sf, r),
                           inst, "single character as a parity-restricted fermionic sum", uses=(name,),
                           form=(name, {})))
    for key, (first, second, thm, shift) in _SPLITS.items():
        names = _THM_PARAMS[thm]
        add(IdentityRecord(f"lemma_{key}_split", thm, names, _THM_TEXT[thm], _thm_check(thm),
                           (lambda t: lambda p: _thm_denom(t, p))(thm), _split_lhs(key), _form(thm),
                           _thm_instances(thm), "parity split of a theorem sum", uses=(first, second, thm),
                           precheck=_split_precheck(key), form=(thm, {})))
    for key, fam, thm in (("3_2", "lemma_3_2", "thm_2_2"), ("3_4", "lemma_3_4", "thm_2_4")):
        add(IdentityRecord(f"lemma_{key}_coords", thm, ("h",), _THM_TEXT[thm], _check_h, lambda p: 1,
                           _form(fam), _form(thm), _h_instances, "chain and increment coordinates agree",
                           uses=(fam, thm), form=(fam, {})))
    for key, thm in _COLLAPSE.items():
        names = _THM_PARAMS[thm]
        add(IdentityRecord(f"lemma_{key}_collapse", thm, names, _THM_TEXT[thm], _thm_check(thm), lambda p: 2,
                           _form(f"collapse_{key}"), _form(thm), _thm_instances(thm),
                           "Gaussian variable summed by the q-binomial theorem", uses=(f"collapse_{key}", thm),
                           form=(f"collapse_{key}", {})))

    def qb(variant, side):
        def run(p, D, O):
            return qbinomial_sum(p["P"], variant, D, O)[side]
        return run

    def p_check(p):
        _need(p["P"] >= 0, "need P >= 0")

    def p_instances(caps):
        for P in range(caps["P"] + 1):
            yield {"P": P}

    for variant in ("plain", "shifted"):
        add(IdentityRecord(f"qbinom_{variant}", "qbinomial", ("P",), "P >= 0", p_check, lambda p: 2,
                           qb(variant, 0), qb(variant, 1), p_instances, "q-binomial theorem consequence"))

    add(IdentityRecord("central_charge_m37", "central_charge", (), "none", _none, lambda p: 1,
                       lambda p, D, O: ch.central_charge(3, 3, 7), lambda p, D, O: ch.central_charge(2, 3, 14),
                       _single, "equal central charges of M(3,7)_3 and M(3,14)_2"))

    def bm_check(p):
        _need(p["g"] >= 2, "need g >= 2")

    add(IdentityRecord("bmatrix", "bmatrix", ("g",), "g >= 2", bm_check, lambda p: 1,
                       lambda p, D, O: F(1), lambda p, D, O: F(int(bmatrix_check(p["g"]))),
                       lambda caps: _g_instances(caps, 2), "chain to increment coordinates"))
    add(IdentityRecord("partitions", "partitions", (), "none", _none, lambda p: 1,
                       lambda p, D, O: qpoch(None, 1, O).invert(), _partition_series, _single,
                       "reciprocal Euler product against direct partition counts"))
    return recs


_CATALOG: list[IdentityRecord] | None = None


def catalog() -> list[IdentityRecord]:
    global _CATALOG
    if _CATALOG is None:
        _CATALOG = _build_catalog()
        ids = [r.id for r in _CATALOG]
        assert len(ids) == len(set(ids)), "duplicate record ids"
    return list(_CATALOG)


def get_record(id: str) -> IdentityRecord:
    for r in catalog():
        if r.id == id:
            return r
    raise DomainError(f"unknown identity id {id!r}")


# -- verification --------------------------------------------------------------------------


def _normalise_params(rec: IdentityRecord, params: dict) -> dict:
    params = dict(params or {})
    missing = [k for k in rec.params if k not in params]
    extra = [k for k in params if k not in rec.params]
    if missing or extra:
        raise DomainError(f"{rec.id} takes parameters {list(rec.params)}; missing {missing}, unexpected {extra}")
    for k, v in params.items():
        if not isinstance(v, int):
            raise DomainError(f"parameter {k} must be an integer, got {v!r}")
    return params


def verify(id: str, params: dict | None = None, order_q: int = 40, *, certify: bool = True) -> VerificationReport:
    """Evaluate both sides of a catalog identity through ``q^order_q`` and compare.

    Domain errors raise :class:`DomainError`; a failed exact-rational
    precheck raises :class:`PrefactorError`.
    """
    if not isinstance(order_q, int) or order_q < 1:
        raise DomainError(f"order must be a positive integer, got {order_q!r}")
    rec = get_record(id)
    params = _normalise_params(rec, params)
    try:
        rec.check(params)
    except ch.LabelError as exc:
        raise DomainError(str(exc)) from exc
    D = rec.substrate(params)
    O = order_q * D
    start = time.perf_counter()
    if rec.precheck is not None:
        rec.precheck(params)
    prev = _CERTIFY[0]
    _CERTIFY[0] = certify
    try:
        lhs = rec.lhs(params, D, O)
        rhs = rec.rhs(params, D, O)
    finally:
        _CERTIFY[0] = prev
    first = None
    if isinstance(lhs, QSeries):
        if lhs.denom != D or rhs.denom != D:
            raise RuntimeError(f"{id}: sides evaluated on q^(1/{lhs.denom}), q^(1/{rhs.denom}), expected {D}")
        if min(lhs.order, rhs.order) < O:
            raise RuntimeError(f"{id}: sides known only through t^{min(lhs.order, rhs.order)}, need t^{O}")
        diff = lhs.truncate(O).first_difference(rhs.truncate(O))
        if diff is not None:
            first = {"t_exp": diff[0], "lhs": diff[1], "rhs": diff[2]}
            through = diff[0] - 1
        else:
            through = O
    else:
        if lhs != rhs:
            first = {"t_exp": 0, "lhs": str(lhs), "rhs": str(rhs)}
            through = -1
        else:
            through = O
    elapsed = (time.perf_counter() - start) * 1000
    return VerificationReport(rec.id, params, D, order_q, through, "verified" if first is None else "discrepancy",
                              rec.conjectural, first, elapsed)


def instances(rec: IdentityRecord, caps: dict | None = None) -> list[dict]:
    merged = {**DEFAULT_CAPS, **(caps or {})}
    return list(rec.instances(merged))


def _run_one(job):
    id, params, order_q, certify = job
    rec = get_record(id)
    try:
        return verify(id, params, order_q, certify=certify)
    except Exception as exc:  # reported, not raised, so one failure does not hide the rest
        return VerificationReport(id, params, 0, order_q, -1, "error", rec.conjectural, None, 0.0,
                                  f"{type(exc).__name__}: {exc}")


def suite_jobs(order_q: int, caps: dict | None = None, ids: Iterable[str] | None = None, certify: bool = True):
    wanted = None if ids is None else set(ids)
    jobs = []
    for rec in catalog():
        if wanted is not None and rec.id not in wanted:
            continue
        for p in instances(rec, caps):
            jobs.append((rec.id, p, order_q, certify))
    return jobs


def run_suite(order_q: int = 40, caps: dict | None = None, *, workers: int = 1,
              ids: Iterable[str] | None = None, certify: bool = True) -> list[VerificationReport]:
    """Verify every catalog record over its capped domain; reports come back in catalog order."""
    if not isinstance(order_q, int) or order_q < 1:
        raise DomainError(f"order must be a positive integer, got {order_q!r}")
    for k, v in (caps or {}).items():
        if k not in DEFAULT_CAPS:
            raise DomainError(f"unknown cap {k!r}; known caps: {sorted(DEFAULT_CAPS)}")
        if not isinstance(v, int) or v < 0:
            raise DomainError(f"cap {k} must be a nonnegative integer")
    jobs = suite_jobs(order_q, caps, ids, certify)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_run_one, jobs, chunksize=4))
    return [_run_one(j) for j in jobs]


def records_using(family: str) -> list[IdentityRecord]:
    return [r for r in catalog() if family in r.uses]
