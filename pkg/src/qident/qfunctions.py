"""q-Pochhammer symbols, Gaussian polynomials and a naive partition oracle."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .series import QSeries, SeriesError, SubstrateError, zero


class VanishingProductError(SeriesError):
    """A Pochhammer product contains the factor ``1 - 1``."""


@dataclass(frozen=True)
class QMonomial:
    """``sign * q^exp`` with a rational exponent."""

    sign: int = 1
    exp: Fraction = Fraction(0)

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError(f"sign must be +1 or -1, got {self.sign}")
        object.__setattr__(self, "exp", Fraction(self.exp))

    def t_exp(self, denom: int) -> int:
        e = self.exp * denom
        if e.denominator != 1:
            raise SubstrateError(f"exponent {self.exp} is not a multiple of 1/{denom}")
        return int(e)

    def __neg__(self) -> "QMonomial":
        return QMonomial(-self.sign, self.exp)


def q(exp=1, sign: int = 1) -> QMonomial:
    return QMonomial(sign, Fraction(exp))


def _base(z) -> QMonomial:
    return z if isinstance(z, QMonomial) else QMonomial(1, Fraction(z))


def required_denom(exponents: Iterable) -> int:
    """Smallest D such that every exponent is a multiple of 1/D."""
    d = 1
    for e in exponents:
        d = np.lcm(d, Fraction(e).denominator)
    return int(d)


def binomial_product(factors: Sequence[tuple[int, int]], denom: int, order: int) -> QSeries:
    """Product of ``(1 + c*t^e)`` over ``factors`` through ``t^order``.

    ``c`` must be +1 or -1.  Factors with ``e < 0`` are rewritten as
    ``c t^e (1 + c t^-e)``; factors with ``e == 0`` contribute the scalar ``1 + c``.
    """
    shift = 0
    scalar = 1
    clean: list[tuple[int, int]] = []
    for c, e in factors:
        if e < 0:
            scalar *= c
            shift += e
            clean.append((c, -e))
        elif e == 0:
            scalar *= 1 + c
            if scalar == 0:
                raise VanishingProductError("product contains the factor (1 - 1)")
        else:
            clean.append((c, e))
    work = order - shift
    if work < 0:
        return zero(denom, order)
    arr = np.zeros(work + 1, dtype=np.int64)
    arr[0] = 1
    for c, e in clean:
        if e <= work:
            arr = _kernels.mul_binomial(arr, c, e)
    arr = _kernels.scale(arr, scalar)
    return QSeries(arr, 0, work, denom).shift(shift)


def _poch_factors(a: QMonomial, z: QMonomial, n: int | None, denom: int, order: int):
    at = a.t_exp(denom)
    zt = z.t_exp(denom)
    if zt <= 0:
        raise ValueError("Pochhammer base exponent must be positive")
    factors = []
    i = 0
    # negative exponents move the working order up by their sum
    neg = 0
    while at + i * zt < 0 and (n is None or i < n):
        neg += at + i * zt
        i += 1
    limit = order - neg
    i = 0
    while n is None or i < n:
        e = at + i * zt
        if e > limit:
            break
        sign = a.sign * (z.sign ** i)
        factors.append((-sign, e))
        i += 1
    return factors


def poch_finite(a: QMonomial, z, n: int, denom: int, order: int) -> QSeries:
    """``(a; z)_n = prod_{i<n} (1 - a z^i)`` through ``t^order``."""
    if n < 0:
        raise ValueError("finite Pochhammer length must be nonnegative")
    return binomial_product(_poch_factors(a, _base(z), n, denom, order), denom, order)


def poch_inf(a: QMonomial, z, denom: int, order: int) -> QSeries:
    """``(a; z)_inf`` through ``t^order``; factors above the order are dropped."""
    z = _base(z)
    if a.exp == 0 and a.sign == 1:
        raise VanishingProductError("(1; z)_inf vanishes")
    return binomial_product(_poch_factors(a, z, None, denom, order), denom, order)


def qpoch(n: int, denom: int, order: int) -> QSeries:
    """``(q)_n``; ``n=None`` for ``(q)_inf``."""
    if n is None:
        return poch_inf(QMonomial(1, Fraction(1)), 1, denom, order)
    return poch_finite(QMonomial(1, Fraction(1)), 1, n, denom, order)


# -- Gaussian polynomials ---------------------------------------------------------


@lru_cache(maxsize=None)
def _gaussian_row(P: int) -> tuple[tuple[int, ...], ...]:
    if P == 0:
        return ((1,),)
    prev = _gaussian_row(P - 1)
    row = []
    for N in range(P + 1):
        deg = N * (P - N)
        c = [0] * (deg + 1)
        if N >= 1:
            for i, v in enumerate(prev[N - 1]):
                c[i] += v
        if N <= P - 1:
            for i, v in enumerate(prev[N]):
                c[i + N] += v
        row.append(tuple(c))
    return tuple(row)


def gaussian_coeffs(P: int, N: int) -> tuple[int, ...]:
    """Coefficients of ``[P N]`` in ``q`` (empty tuple for the zero polynomial)."""
    if P < 0 or N < 0 or N > P:
        return ()
    return _gaussian_row(P)[N]


def gaussian(P: int, N: int, denom: int = 1, order: int | None = None) -> QSeries:
    """The Gaussian polynomial ``[P N]`` by the Pascal-type recurrence."""
    c = gaussian_coeffs(P, N)
    deg = max(len(c) - 1, 0)
    if order is None:
        order = deg * denom
    arr = np.zeros(order + 1, dtype=object)
    for i, v in enumerate(c):
        if i * denom <= order:
            arr[i * denom] = v
    return QSeries(arr, 0, order, denom)


# -- partition oracle -------------------------------------------------------------


def _count(n: int, largest: int) -> int:
    if n == 0:
        return 1
    total = 0
    for part in range(min(n, largest), 0, -1):
        total += _count(n - part, part)
    return total


def partition_count(n: int) -> int:
    """Number of partitions of ``n`` by plain recursive enumeration.

    No memoisation and no generating functions, so it is independent of the
    series code it is used to check.  Exponential; fine up to n around 60.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    return _count(n, n)


# -- q-binomial consequences --------------------------------------------------------


def qbinomial_sum(P: int, variant: str = "plain", denom: int = 2, order: int | None = None):
    """Both sides of the two q-binomial sums over ``[P k]``.

    ``plain``:   sum_k q^(k^2/2) [P k]          and (-q^(1/2); q)_P
    ``shifted``: sum_k q^(k^2/2 - P k) [P k]    and q^(-P^2/2) (-q^(1/2); q)_P
    """
    if denom % 2:
        raise SubstrateError("q-binomial sums need a substrate with even denominator")
    if variant not in ("plain", "shifted"):
        raise ValueError(f"unknown variant {variant!r}")
    h = denom // 2  # t-units per half power of q
    top = P * P * h if variant == "plain" else 0
    if order is None:
        order = top
    low = 0 if variant == "plain" else -P * P * h
    arr = np.zeros(order - low + 1, dtype=object)
    for k in range(P + 1):
        base = k * k * h - (2 * P * k * h if variant == "shifted" else 0)
        for i, v in enumerate(gaussian_coeffs(P, k)):
            e = base + i * denom
            if e <= order:
                arr[e - low] += v
    lhs = QSeries(arr, low, order, denom)
    rhs = poch_finite(QMonomial(-1, Fraction(1, 2)), 1, P, denom, order - low)
    if variant == "shifted":
        rhs = rhs.shift(low)
    return lhs, rhs
