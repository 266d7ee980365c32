"""Fermionic multisums: declarative specs, builders, and a pruned evaluator.

A form is a sum over nonnegative integer points ``x`` of

    q^(x.Q.x + lin.x + tail(x) + const) * prod numer(x) / prod denom(x) * [top(x) bottom(x)]

where the first ``chain_len`` variables satisfy ``N_1 >= N_2 >= ... >= 0`` and
the remaining variables may carry a parity restriction.  ``tail(x)`` is
``N_s + ... + N_last`` with ``s = tail_start`` (empty, hence 0, once ``s``
passes the end of the chain).
"""
from __future__ import annotations

import contextlib
import contextvars
from dataclasses import dataclass, replace
from fractions import Fraction
from math import lcm
import random

from .qfunctions import QMonomial, gaussian_coeffs, poch_finite
from .series import QSeries, SubstrateError, from_terms, one, zero

F = Fraction


class DomainError(ValueError):
    """Parameters outside a family's stated domain."""


class PruningError(RuntimeError):
    """The enumeration cannot certify that no contributing term was skipped."""


@dataclass(frozen=True)
class Var:
    name: str
    parity: str = "any"  # any | even | odd
    role: str = ""


@dataclass(frozen=True)
class Affine:
    """``coeffs . x + const`` over the form's variables."""

    coeffs: tuple[Fraction, ...]
    const: Fraction = F(0)

    def __call__(self, x) -> Fraction:
        return sum((c * v for c, v in zip(self.coeffs, x) if c), self.const)

    def support(self) -> list[int]:
        return [i for i, c in enumerate(self.coeffs) if c]

    def render(self, names) -> str:
        out = []
        for c, n in zip(self.coeffs, names):
            if not c:
                continue
            mag = "" if abs(c) == 1 else f"{abs(c)}*"
            out.append(("-" if c < 0 else "+") + mag + n)
        if self.const or not out:
            out.append(("-" if self.const < 0 else "+") + str(abs(self.const)))
        text = "".join(out)
        return text[1:] if text.startswith("+") else text


@dataclass(frozen=True)
class PochTerm:
    """``(a; q^base)_length`` with ``a = a_sign * q^a_exp``."""

    a_sign: int
    a_exp: Fraction
    base_exp: Fraction
    length: Affine

    def label(self) -> tuple:
        return (self.a_sign, self.a_exp, self.base_exp)

    def render(self, names) -> str:
        def mono(sign, e):
            s = "-" if sign < 0 else ""
            return f"{s}q" if e == 1 else f"{s}q^{e}" if e.denominator == 1 else f"{s}q^({e})"
        return f"({mono(self.a_sign, self.a_exp)};{mono(1, self.base_exp)})_{{{self.length.render(names)}}}"


@dataclass(frozen=True)
class GaussianFactor:
    top: Affine
    bottom: Affine


@dataclass(frozen=True)
class FermionicFormSpec:
    family: str
    params: tuple[tuple[str, int], ...]
    chain_len: int
    extra_vars: tuple[Var, ...]
    quad: tuple[tuple[Fraction, ...], ...]
    lin: tuple[Fraction, ...]
    const: Fraction
    tail_start: int | None
    denom_factors: tuple[PochTerm, ...]
    numer_factors: tuple[PochTerm, ...] = ()
    gaussian_factor: GaussianFactor | None = None

    @property
    def names(self) -> list[str]:
        return [f"N{j + 1}" for j in range(self.chain_len)] + [v.name for v in self.extra_vars]

    @property
    def nvars(self) -> int:
        return self.chain_len + len(self.extra_vars)

    def effective_lin(self) -> list[Fraction]:
        lin = list(self.lin)
        if self.tail_start is not None:
            for j in range(max(self.tail_start, 1) - 1, self.chain_len):
                lin[j] += 1
        return lin

    def exponent(self, x) -> Fraction:
        """Exact q-exponent of the summand at the point ``x`` (prefactor included)."""
        n = self.nvars
        e = self.const
        lin = self.effective_lin()
        for i in range(n):
            if x[i]:
                e += lin[i] * x[i]
                for j in range(n):
                    if self.quad[i][j] and x[j]:
                        e += self.quad[i][j] * x[i] * x[j]
        return e

    def to_json(self) -> dict:
        names = self.names
        fmt = lambda v: str(F(v))
        g = self.gaussian_factor
        return {
            "family": self.family,
            "params": dict(self.params),
            "variables": names,
            "chain_len": self.chain_len,
            "extra_vars": [{"name": v.name, "parity": v.parity, "role": v.role} for v in self.extra_vars],
            "quad": [[fmt(v) for v in row] for row in self.quad],
            "lin": [fmt(v) for v in self.lin],
            "const": fmt(self.const),
            "tail_start": self.tail_start,
            "denom_factors": [t.render(names) for t in self.denom_factors],
            "numer_factors": [t.render(names) for t in self.numer_factors],
            "gaussian_factor": None if g is None else {"top": g.top.render(names), "bottom": g.bottom.render(names)},
        }


# -- building blocks ---------------------------------------------------------------


class _Builder:
    """Accumulates an exponent polynomial over named variables."""

    def __init__(self, chain_len: int, extras: list[Var]):
        self.chain_len = chain_len
        self.extras = extras
        self.n = chain_len + len(extras)
        self.Q = [[F(0)] * self.n for _ in range(self.n)]
        self.lin = [F(0)] * self.n
        self.const = F(0)
        self.index = {f"N{j + 1}": j for j in range(chain_len)}
        self.index.update({v.name: chain_len + k for k, v in enumerate(extras)})

    def idx(self, name):
        return self.index[name] if isinstance(name, str) else name

    def quad(self, a, b, c):
        """Add ``c * a * b`` to the exponent."""
        i, j = self.idx(a), self.idx(b)
        c = F(c)
        if i == j:
            self.Q[i][i] += c
        else:
            self.Q[i][j] += c / 2
            self.Q[j][i] += c / 2

    def linear(self, a, c):
        self.lin[self.idx(a)] += F(c)

    def affine(self, terms: dict, const=0) -> Affine:
        coeffs = [F(0)] * self.n
        for name, c in terms.items():
            coeffs[self.idx(name)] += F(c)
        return Affine(tuple(coeffs), F(const))

    def qn(self, terms: dict, const=0, a_exp=1, base=1, sign=1) -> PochTerm:
        return PochTerm(sign, F(a_exp), F(base), self.affine(terms, const))

    def chain_denoms(self) -> list[PochTerm]:
        out = []
        for j in range(self.chain_len):
            if j + 1 < self.chain_len:
                out.append(self.qn({j: 1, j + 1: -1}))
            else:
                out.append(self.qn({j: 1}))
        return out

    def finish(self, family, params, denoms, tail_start=None, numers=(), gaussian=None) -> FermionicFormSpec:
        return FermionicFormSpec(
            family=family,
            params=tuple(sorted(params.items())),
            chain_len=self.chain_len,
            extra_vars=tuple(self.extras),
            quad=tuple(tuple(r) for r in self.Q),
            lin=tuple(self.lin),
            const=self.const,
            tail_start=tail_start,
            denom_factors=tuple(denoms),
            numer_factors=tuple(numers),
            gaussian_factor=gaussian,
        )


def _require(cond: bool, msg: str):
    if not cond:
        raise DomainError(msg)


def _gs(g, s):
    _require(g >= 1, f"need g >= 1, got g={g}")
    _require(1 <= s <= g + 1, f"need 1 <= s <= g+1, got g={g}, s={s}")


def _chain_with_M(chain_len, m_coeff, lin_m, quad_m, tail_start, family, params, *, m_shift_in_chain=0,
                  half_denoms=False, m_plus_one=False):
    """Chain forms sum_j N_j(N_j + m_coeff*M + m_shift_in_chain) + quad_m M^2 + lin_m M + tail."""
    b = _Builder(chain_len, [Var("M", "any", "summation variable")])
    for j in range(chain_len):
        b.quad(j, j, 1)
        if m_coeff:
            b.quad(j, "M", m_coeff)
        if m_shift_in_chain:
            b.linear(j, m_shift_in_chain)
    b.quad("M", "M", quad_m)
    b.linear("M", lin_m)
    denoms = b.chain_denoms()
    if half_denoms:
        denoms.append(b.qn({"M": 1}, 1 if m_plus_one else 0, a_exp=F(1, 2), base=1))
        denoms.append(b.qn({"M": 1}, 0, a_exp=2, base=2))
    else:
        denoms.append(b.qn({"M": 1}))
    return b.finish(family, params, denoms, tail_start)


def _ag(k, i):
    _require(k >= 2 and 1 <= i <= k, f"need k >= 2 and 1 <= i <= k, got k={k}, i={i}")
    b = _Builder(k - 1, [])
    for j in range(k - 1):
        b.quad(j, j, 1)
    return b.finish("ag", {"k": k, "i": i}, b.chain_denoms(), tail_start=i)


def _thm_2_1(g, s):
    _gs(g, s)
    return _chain_with_M(g - 1, 1, F(g - s, 2), F(g + 1, 4), s, "thm_2_1", {"g": g, "s": s})


def _thm_2_2(h, printed=False):
    _require(h >= 1, f"need h >= 1, got h={h}")
    if printed:
        # (h+1)/2 M(M+1) - M + (N_h + ... + N_2h); fails from q^3 on
        return _chain_with_M(2 * h, 1, F(h + 1, 2) - 1, F(h + 1, 2), h, "thm_2_2_printed", {"h": h})
    # (h+1)/2 M(M+1) + (N_{h+1} + ... + N_2h)
    return _chain_with_M(2 * h, 1, F(h + 1, 2), F(h + 1, 2), h + 1, "thm_2_2", {"h": h})


def _thm_2_3(g, s):
    _gs(g, s)
    return _chain_with_M(g - 1, 1, F(g - s + 1, 2), F(g, 4), s, "thm_2_3", {"g": g, "s": s})


def _thm_2_4(h):
    _require(h >= 1, f"need h >= 1, got h={h}")
    return _chain_with_M(2 * h - 1, 1, F(h, 2), F(h, 2), h, "thm_2_4", {"h": h})


def _thm_2_5(g, s):
    _gs(g, s)
    return _chain_with_M(g - 1, 2, g - s, g + F(1, 2), s, "thm_2_5", {"g": g, "s": s}, half_denoms=True)


def _thm_2_6(g):
    _require(g >= 1, f"need g >= 1, got g={g}")
    return _chain_with_M(g - 1, 2, g, g + F(1, 2), None, "thm_2_6", {"g": g},
                         m_shift_in_chain=1, half_denoms=True, m_plus_one=True)


def _thm_2_7(g, s):
    _gs(g, s)
    # M(Mg + g + 1 - s)
    return _chain_with_M(g - 1, 2, g + 1 - s, g, s, "thm_2_7", {"g": g, "s": s}, half_denoms=True)


def _thm_2_8(g):
    _require(g >= 1, f"need g >= 1, got g={g}")
    return _chain_with_M(g - 1, 2, g, g, None, "thm_2_8", {"g": g},
                         m_shift_in_chain=1, half_denoms=True, m_plus_one=True)


_M37_LINEAR = {
    1: {"n1": 1, "n2": 2, "n3": 3, "n4": 2},
    2: {"n3": 1, "n4": 1},
    3: {},
    4: {"n2": 1, "n3": 2, "n4": 1},
}


def _m37(k):
    _require(k in _M37_LINEAR, f"k must be 1..4, got {k}")
    names = ["n1", "n2", "n3", "n4"]
    b = _Builder(0, [Var(n, "any", f"denominator (q)_{n}") for n in names])
    # (n1+n2+n3)^2 + (n2+n3)^2 + n3^2 + n4^2 + (n1+2n2+3n3) n4
    for group in (("n1", "n2", "n3"), ("n2", "n3"), ("n3",), ("n4",)):
        for x in group:
            for y in group:
                b.quad(x, y, 1)
    for x, c in (("n1", 1), ("n2", 2), ("n3", 3)):
        b.quad(x, "n4", c)
    for x, c in _M37_LINEAR[k].items():
        b.linear(x, c)
    return b.finish("m37_explicit", {"k": k}, [b.qn({n: 1}) for n in names])


def _asw(k, alt=False):
    _require(k in (1, 2, 3, 4), f"k must be 1..4, got {k}")
    b = _Builder(0, [Var("n1", "any", "denominator (q)_n1"), Var("n2", "any", "Gaussian bottom")])
    b.quad("n1", "n1", 1)
    b.quad("n1", "n2", -1)
    b.quad("n2", "n2", 1)
    if alt:
        _require(k == 4, "the second left side exists only for k=4")
        b.linear("n2", 1)
        top = b.affine({"n1": 2})
        family = "asw_4b"
    else:
        b.linear("n1", {1: 1, 2: 0, 3: 0, 4: 1}[k])
        b.linear("n2", {1: 1, 2: 1, 3: 0, 4: 0}[k])
        top = b.affine({"n1": 2}, 1 if k in (2, 4) else 0)
        family = "asw"
    gauss = GaussianFactor(top, b.affine({"n2": 1}))
    return b.finish(family, {"k": k}, [b.qn({"n1": 1})], gaussian=gauss)


# -- lemma forms in n-coordinates ----------------------------------------------------


def _n_coords(c, extras):
    """Builder with free n_1..n_c followed by ``extras``; N_j = n_j + ... + n_c."""
    b = _Builder(0, [Var(f"n{j + 1}", "any", f"denominator (q)_n{j + 1}") for j in range(c)] + extras)
    # sum_j N_j^2 = sum_{k,l} min(k,l) n_k n_l
    for k in range(c):
        for l in range(c):
            b.quad(k, l, min(k, l) + 1)
    return b


def _add_chain_times(b, c, var, coeff):
    # coeff * var * sum_j N_j = coeff * var * sum_k k n_k
    for k in range(c):
        b.quad(k, var, coeff * (k + 1))


def _add_tail(b, c, start):
    # N_start + ... + N_c = sum_k max(0, k - start + 1) n_k   (1-based)
    for k in range(c):
        w = (k + 1) - start + 1
        if w > 0:
            b.linear(k, w)


def bmatrix(c: int) -> list[list[int]]:
    """``B_{jl} = min(j, l)`` for the chain-to-increment coordinate change."""
    return [[min(j, l) for l in range(1, c + 1)] for j in range(1, c + 1)]


def bmatrix_check(g: int, trials: int = 50, seed: int = 0, B=None) -> bool:
    """Check sum_j N_j^2 == n.B.n for random n, with N_j = n_j + ... + n_{g-1}."""
    if g < 2:
        raise DomainError("need g >= 2")
    c = g - 1
    B = bmatrix(c) if B is None else B
    rng = random.Random(seed)
    for _ in range(trials):
        n = [rng.randint(0, 9) for _ in range(c)]
        N = [sum(n[j:]) for j in range(c)]
        lhs = sum(v * v for v in N)
        rhs = sum(B[j][l] * n[j] * n[l] for j in range(c) for l in range(c))
        if lhs != rhs:
            return False
    return True


def _lemma_p3(g, s, m_parity, quad_m, lin_m, const):
    c = g - 1
    b = _n_coords(c, [Var("m", m_parity, "denominator (q)_m")])
    _add_chain_times(b, c, "m", 1)
    b.quad("m", "m", quad_m)
    b.linear("m", lin_m)
    _add_tail(b, c, s)
    b.const = F(const)
    return b


def _lemma_3_1(g, s, odd):
    _gs(g, s)
    b = _lemma_p3(g, s, "odd" if odd else "even", F(g + 1, 4), F(g - s, 2),
                  F(-3 * g, 4) + F(s, 2) - F(1, 4) if odd else 0)
    return _finish_lemma(b, g - 1, f"lemma_3_1{'b' if odd else 'a'}", {"g": g, "s": s}, ["m"])


def _lemma_3_3(g, s, odd):
    _gs(g, s)
    b = _lemma_p3(g, s, "odd" if odd else "even", F(g, 4), F(g - s + 1, 2),
                  F(-3 * g, 4) + F(s, 2) - F(1, 2) if odd else 0)
    return _finish_lemma(b, g - 1, f"lemma_3_3{'b' if odd else 'a'}", {"g": g, "s": s}, ["m"])


def _lemma_3_2(h, printed=False):
    _require(h >= 1, f"need h >= 1, got h={h}")
    c = 2 * h
    b = _n_coords(c, [Var("m", "any", "denominator (q)_m")])
    _add_chain_times(b, c, "m", 1)
    b.quad("m", "m", F(h + 1, 2))
    b.linear("m", F(h + 1, 2) - (1 if printed else 0))
    _add_tail(b, c, h if printed else h + 1)
    return _finish_lemma(b, c, "lemma_3_2_printed" if printed else "lemma_3_2", {"h": h}, ["m"])


def _lemma_3_4(h):
    _require(h >= 1, f"need h >= 1, got h={h}")
    c = 2 * h - 1
    b = _n_coords(c, [Var("m", "any", "denominator (q)_m")])
    _add_chain_times(b, c, "m", 1)
    b.quad("m", "m", F(h, 2))
    b.linear("m", F(h, 2))
    _add_tail(b, c, h)
    return _finish_lemma(b, c, "lemma_3_4", {"h": h}, ["m"])


def _finish_lemma(b, c, family, params, denom_vars, gaussian=None, numers=()):
    denoms = [b.qn({j: 1}) for j in range(c)] + [b.qn({v: 1}) for v in denom_vars]
    return b.finish(family, params, denoms, numers=numers, gaussian=gaussian)


def _lemma_p4(family, params, c, m1_par, m2_par, quad_m1, lin_m1, cross, lin_m2, tail, const, top_const):
    b = _n_coords(c, [Var("m1", m1_par, "denominator (q)_m1"), Var("m2", m2_par, "Gaussian bottom")])
    _add_chain_times(b, c, "m1", 1)
    b.quad("m1", "m1", quad_m1)
    b.quad("m2", "m2", F(1, 2))
    b.quad("m1", "m2", cross)
    b.linear("m1", lin_m1)
    b.linear("m2", lin_m2)
    if tail is not None:
        _add_tail(b, c, tail)
    b.const = F(const)
    gauss = GaussianFactor(b.affine({"m1": F(1, 2)}, F(top_const, 2)), b.affine({"m2": 1}))
    return _finish_lemma(b, c, family, params, ["m1"], gaussian=gauss)


def _lemma_3_5(g, s, odd):
    _gs(g, s)
    return _lemma_p4(f"lemma_3_5{'b' if odd else 'a'}", {"g": g, "s": s}, g - 1, "even", "odd" if odd else "even",
                     F(g + 1, 4), F(g - s, 2), F(-1, 2), 0, s, (s - 2 * g - F(1, 2)) if odd else 0, 0)


def _lemma_3_6(g, odd):
    _require(g >= 1, f"need g >= 1, got g={g}")
    const = -F(g - 1, 4) if odd else -F(g + 1, 4)
    return _lemma_p4(f"lemma_3_6{'b' if odd else 'a'}", {"g": g}, g - 1, "odd", "odd" if odd else "even",
                     F(g + 1, 4), 0, F(-1, 2), F(-1, 2), None, const, 1)


def _lemma_3_7(g, s, odd):
    _gs(g, s)
    return _lemma_p4(f"lemma_3_7{'b' if odd else 'a'}", {"g": g, "s": s}, g - 1, "even", "odd" if odd else "even",
                     F(g, 4), F(g + 1 - s, 2), 0, 0, s, (s - 2 * g - F(3, 2)) if odd else 0, 0)


def _lemma_3_8(g, odd):
    _require(g >= 1, f"need g >= 1, got g={g}")
    const = -F(g + 2, 4) if odd else -F(g, 4)
    return _lemma_p4(f"lemma_3_8{'b' if odd else 'a'}", {"g": g}, g - 1, "odd", "odd" if odd else "even",
                     F(g, 4), 0, 0, 0, None, const, 1)


def _collapsed(family, params, g, quad_m1, lin_m1, const, tail, m1_odd):
    """Lemma sums after the Gaussian variable has been summed out."""
    c = g - 1
    b = _n_coords(c, [Var("m1", "odd" if m1_odd else "even", "denominator (q)_m1")])
    _add_chain_times(b, c, "m1", 1)
    b.quad("m1", "m1", quad_m1)
    b.linear("m1", lin_m1)
    if tail is not None:
        _add_tail(b, c, tail)
    b.const = F(const)
    numer = PochTerm(-1, F(1, 2), F(1), b.affine({"m1": F(1, 2)}, F(1, 2) if m1_odd else 0))
    return _finish_lemma(b, c, family, params, ["m1"], numers=(numer,))


def _collapse_3_5(g, s):
    _gs(g, s)
    return _collapsed("collapse_3_5", {"g": g, "s": s}, g, F(2 * g + 1, 8), F(g - s, 2), 0, s, False)


def _collapse_3_6(g):
    _require(g >= 1, f"need g >= 1, got g={g}")
    return _collapsed("collapse_3_6", {"g": g}, g, F(2 * g + 1, 8), F(-1, 4), -F(2 * g - 1, 8), None, True)


def _collapse_3_7(g, s):
    _gs(g, s)
    return _collapsed("collapse_3_7", {"g": g, "s": s}, g, F(g, 4), F(g + 1 - s, 2), 0, s, False)


def _collapse_3_8(g):
    _require(g >= 1, f"need g >= 1, got g={g}")
    return _collapsed("collapse_3_8", {"g": g}, g, F(g, 4), 0, -F(g, 4), None, True)


# -- single-sum special cases in integer powers of q ----------------------------------

_SPECIAL = {
    # name: (quad, lin, odd-base denominator (q;q^2)_{M+shift} or None)
    "rogers_1": (1, 2, None),
    "rogers_2": (1, 0, None),
    "rogers_3": (3, 0, 0),
    "rogers_4a": (3, 2, 1),
    "rogers_4b": (3, -2, 0),
    "selberg_1": (2, 2, 0),
    "selberg_2": (2, 0, 0),
    "selberg_3": (2, 2, 1),
}


def _special(name):
    quad, lin, odd = _SPECIAL[name]
    b = _Builder(0, [Var("m", "any", "summation variable")])
    b.quad("m", "m", quad)
    b.linear("m", lin)
    denoms = []
    if odd is not None:
        denoms.append(b.qn({"m": 1}, odd, a_exp=1, base=2))
    denoms.append(b.qn({"m": 1}, 0, a_exp=4, base=4))
    return b.finish(name, {}, denoms)


FAMILIES = {
    "ag": (("k", "i"), _ag),
    "thm_2_1": (("g", "s"), _thm_2_1),
    "thm_2_2": (("h",), _thm_2_2),
    "thm_2_2_printed": (("h",), lambda h: _thm_2_2(h, printed=True)),
    "thm_2_3": (("g", "s"), _thm_2_3),
    "thm_2_4": (("h",), _thm_2_4),
    "thm_2_5": (("g", "s"), _thm_2_5),
    "thm_2_6": (("g",), _thm_2_6),
    "thm_2_7": (("g", "s"), _thm_2_7),
    "thm_2_8": (("g",), _thm_2_8),
    "m37_explicit": (("k",), _m37),
    "asw": (("k",), _asw),
    "asw_4b": ((), lambda: _asw(4, alt=True)),
    "lemma_3_1a": (("g", "s"), lambda g, s: _lemma_3_1(g, s, False)),
    "lemma_3_1b": (("g", "s"), lambda g, s: _lemma_3_1(g, s, True)),
    "lemma_3_2": (("h",), _lemma_3_2),
    "lemma_3_2_printed": (("h",), lambda h: _lemma_3_2(h, printed=True)),
    "lemma_3_3a": (("g", "s"), lambda g, s: _lemma_3_3(g, s, False)),
    "lemma_3_3b": (("g", "s"), lambda g, s: _lemma_3_3(g, s, True)),
    "lemma_3_4": (("h",), _lemma_3_4),
    "lemma_3_5a": (("g", "s"), lambda g, s: _lemma_3_5(g, s, False)),
    "lemma_3_5b": (("g", "s"), lambda g, s: _lemma_3_5(g, s, True)),
    "lemma_3_6a": (("g",), lambda g: _lemma_3_6(g, False)),
    "lemma_3_6b": (("g",), lambda g: _lemma_3_6(g, True)),
    "lemma_3_7a": (("g", "s"), lambda g, s: _lemma_3_7(g, s, False)),
    "lemma_3_7b": (("g", "s"), lambda g, s: _lemma_3_7(g, s, True)),
    "lemma_3_8a": (("g",), lambda g: _lemma_3_8(g, False)),
    "lemma_3_8b": (("g",), lambda g: _lemma_3_8(g, True)),
    "collapse_3_5": (("g", "s"), _collapse_3_5),
    "collapse_3_6": (("g",), _collapse_3_6),
    "collapse_3_7": (("g", "s"), _collapse_3_7),
    "collapse_3_8": (("g",), _collapse_3_8),
    **{name: ((), (lambda n=name: _special(n))) for name in _SPECIAL},
}

# active quadratic-coefficient mutation, for negative-control runs
_MUTATION: contextvars.ContextVar = contextvars.ContextVar("qident_quad_mutation", default=None)


@contextlib.contextmanager
def quad_mutation(family: str, i: int, j: int, delta=1):
    """Within the block, ``build_form(family, ...)`` adds ``delta * x_i * x_j`` to its exponent."""
    token = _MUTATION.set((family, i, j, F(delta)))
    try:
        yield
    finally:
        _MUTATION.reset(token)


def _mutate(spec: FermionicFormSpec, i, j, delta) -> FermionicFormSpec:
    if max(i, j) >= spec.nvars:
        return spec
    Q = [list(r) for r in spec.quad]
    if i == j:
        Q[i][i] += delta
    else:
        Q[i][j] += delta / 2
        Q[j][i] += delta / 2
    return replace(spec, quad=tuple(tuple(r) for r in Q))


def build_form(family: str, **params) -> FermionicFormSpec:
    """Spec for one of the named fermionic families."""
    if family not in FAMILIES:
        raise DomainError(f"unknown fermionic family {family!r}")
    names, fn = FAMILIES[family]
    if set(params) != set(names):
        raise DomainError(f"family {family} takes parameters {list(names)}, got {sorted(params)}")
    spec = fn(**params)
    mut = _MUTATION.get()
    if mut is not None and mut[0] == family:
        spec = _mutate(spec, mut[1], mut[2], mut[3])
    return spec


# -- evaluation ----------------------------------------------------------------------


def _scaled(spec: FermionicFormSpec, denom: int):
    """Integer data for ``L * denom * exponent`` with the smallest such L."""
    n = spec.nvars
    lin = spec.effective_lin()
    vals = [spec.const] + lin + [spec.quad[i][j] for i in range(n) for j in range(n)]
    L = 1
    for v in vals:
        L = lcm(L, (F(v) * denom).denominator)
    # cross terms appear as 2*Q[i][j]; L*denom*Q[i][j] need only be a half-integer
    # but requiring integrality keeps the arithmetic simple
    Qi = [[int(spec.quad[i][j] * denom * L) for j in range(n)] for i in range(n)]
    li = [int(lin[i] * denom * L) for i in range(n)]
    ci = int(spec.const * denom * L)
    return L, Qi, li, ci


def _hard_upper(spec: FermionicFormSpec):
    """Per-variable upper bound functions from the Gaussian support, if any."""
    g = spec.gaussian_factor
    if g is None:
        return {}
    sup = g.bottom.support()
    if len(sup) == 1 and g.bottom.coeffs[sup[0]] == 1 and g.bottom.const == 0:
        return {sup[0]: g.top}
    return {}


def enumerate_points(spec: FermionicFormSpec, denom: int, order: int):
    """All admissible points whose summand exponent is at most ``t^order``.

    Returns ``[(point, t_exponent)]``.  Branches are cut with a lower bound
    obtained by absorbing negative cross terms into the diagonal; a variable
    whose bound does not grow raises :class:`PruningError`.
    """
    n = spec.nvars
    L, Q, lin, const = _scaled(spec, denom)
    budget = order * L
    c = spec.chain_len
    perm = list(range(c, n)) + list(range(c))  # extras outermost, then the chain
    parity = ["any"] * c + [v.parity for v in spec.extra_vars]
    upper_fns = _hard_upper(spec)
    # diagonal after absorbing negative couplings among the still-free variables
    dmat = []
    for k in range(n):
        free = perm[k:]
        dmat.append({i: Q[i][i] - sum(-Q[i][j] for j in free if j != i and Q[i][j] < 0) for i in free})

    def rest_bound(i, d, b):
        if d > 0:
            return 0 if b >= 0 else -((b * b + 4 * d - 1) // (4 * d))
        if d == 0 and b >= 0:
            return 0
        return None  # unbounded below

    out = []
    x = [0] * n

    def dfs(k, base, bl):
        if k == n:
            if base % L:
                raise SubstrateError(
                    f"{spec.family}{dict(spec.params)}: exponent {F(base, L * denom)} at {tuple(x)} "
                    f"is not a multiple of 1/{denom}")
            out.append((tuple(x), base // L))
            return
        var = perm[k]
        d = dmat[k]
        others = 0
        unbounded_rest = False
        for i in perm[k + 1:]:
            r = rest_bound(i, d[i], bl[i])
            if r is None:
                unbounded_rest = True
                break
            others += r
        hard = None
        if var < c and var > 0:
            hard = x[var - 1]
        if var in upper_fns:
            top = upper_fns[var](x)
            if top.denominator != 1:
                raise SubstrateError(f"{spec.family}: Gaussian top {top} is not an integer at {tuple(x)}")
            hard = int(top) if hard is None else min(hard, int(top))
        dk, bk = d[var], bl[var]
        if hard is None and (unbounded_rest or dk < 0 or (dk == 0 and bk <= 0)):
            raise PruningError(f"{spec.family}{dict(spec.params)}: cannot bound variable "
                               f"{spec.names[var]} (form not bounded below on its cone)")
        start = {"any": 0, "even": 0, "odd": 1}[parity[var]]
        step = 1 if parity[var] == "any" else 2
        v = start
        while hard is None or v <= hard:
            if not unbounded_rest:
                lb = base + dk * v * v + bk * v + others
                if lb > budget:
                    # the bound is convex in v; past the vertex it only grows
                    if dk >= 0 and 2 * dk * v + bk >= 0:
                        break
                    v += step
                    continue
            x[var] = v
            nb = list(bl)
            for i in perm[k + 1:]:
                if Q[i][var]:
                    nb[i] = bl[i] + 2 * Q[i][var] * v
            dfs(k + 1, base + Q[var][var] * v * v + bl[var] * v, nb)
            x[var] = 0
            v += step
        return

    dfs(0, const, list(lin))
    return [(p, e) for p, e in out if e <= order]


def _poch_series(term: PochTerm, length: int, denom: int, order: int, cache: dict, invert: bool) -> QSeries:
    key = (term.label(), length, invert)
    s = cache.get(key)
    if s is None:
        s = poch_finite(QMonomial(term.a_sign, term.a_exp), term.base_exp, length, denom, order)
        if invert:
            s = s.invert()
        cache[key] = s
    return s


def _gaussian_series(P: int, N: int, denom: int, order: int, cache: dict) -> QSeries:
    key = ("gauss", P, N)
    s = cache.get(key)
    if s is None:
        coeffs = gaussian_coeffs(P, N)
        s = from_terms(((i * denom, v) for i, v in enumerate(coeffs)), denom, order)
        cache[key] = s
    return s


def eval_form(spec: FermionicFormSpec, denom: int, order: int, *, certify: bool = False) -> QSeries:
    """Exact value of the multisum through ``t^order`` on ``q^(1/denom)``.

    With ``certify`` the enumeration is repeated with the exponent budget
    doubled and must find exactly the same contributing points.
    """
    points = enumerate_points(spec, denom, order)
    if certify:
        wide = enumerate_points(spec, denom, 2 * order + 1 if order >= 0 else 1)
        wide = sorted(p for p in wide if p[1] <= order)
        if wide != sorted(points):
            raise PruningError(f"{spec.family}{dict(spec.params)}: pruning certificate failed")
    if not points:
        return zero(denom, order)
    low = min(0, min(e for _, e in points))
    groups: dict[tuple, dict[int, int]] = {}
    g = spec.gaussian_factor
    for x, e in points:
        key = []
        for t in spec.denom_factors:
            ln = t.length(x)
            if ln < 0 or ln.denominator != 1:
                raise DomainError(f"{spec.family}: denominator length {ln} at {x}")
            if ln:
                key.append(("d", t.label(), int(ln)))
        for t in spec.numer_factors:
            ln = t.length(x)
            if ln < 0 or ln.denominator != 1:
                raise DomainError(f"{spec.family}: numerator length {ln} at {x}")
            if ln:
                key.append(("n", t.label(), int(ln)))
        key.sort()
        if g is not None:
            P, N = g.top(x), g.bottom(x)
            if P.denominator != 1 or N.denominator != 1:
                raise SubstrateError(f"{spec.family}: non-integral Gaussian [{P} {N}] at {x}")
            if not (0 <= N <= P):
                continue
            if 0 < N < P:
                key.append(("g", int(P), int(N)))
        bucket = groups.setdefault(tuple(key), {})
        bucket[e] = bucket.get(e, 0) + 1

    terms = {t.label(): t for t in spec.denom_factors + spec.numer_factors}
    cache: dict = {}
    prefix: dict = {(): one(denom, order)}

    def product(key):
        got = prefix.get(key)
        if got is not None:
            return got
        head = product(key[:-1])
        kind, a, b = key[-1]
        if kind == "g":
            fac = _gaussian_series(a, b, denom, order, cache)
        else:
            fac = _poch_series(terms[a], b, denom, order, cache, invert=(kind == "d"))
        got = head * fac
        prefix[key] = got
        return got

    total = zero(denom, order)
    if low < 0:
        total = from_terms([], denom, order, offset=low)
    for key, bucket in groups.items():
        lo = min(bucket)
        mono = from_terms(bucket.items(), denom, order, offset=lo)
        prod = product(key)
        if lo > 0:
            prod = prod.truncate(order - lo)
        total = total + mono * prod
    return total


def point_count(spec: FermionicFormSpec, denom: int, order: int) -> int:
    return len(enumerate_points(spec, denom, order))
