"""Truncated power series in ``t = q^(1/D)`` with exact integer coefficients.

A :class:`QSeries` records the coefficients of ``t^offset ... t^order``.
Coefficients above ``order`` are *unknown*, never zero, and every operation
propagates that knowledge conservatively.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Iterator

import numpy as np

from . import _kernels


class SeriesError(ValueError):
    """Base class for series contract violations."""


class SubstrateError(SeriesError):
    """Series over different fractional substrates were combined."""


class TruncationError(SeriesError):
    """A coefficient beyond the tracked order was requested."""


class NotInvertibleError(SeriesError):
    """The lowest nonzero coefficient is not a unit."""


def _as_array(coeffs) -> np.ndarray:
    if isinstance(coeffs, np.ndarray) and coeffs.dtype in (np.int64, object):
        arr = coeffs.copy()
    else:
        arr = np.array([int(c) for c in coeffs], dtype=object)
    if arr.dtype == object:
        arr = _kernels.as_int64_if_small(arr)
    return arr


class QSeries:
    """Immutable truncated series ``sum coeffs[i] * t^(offset + i)``."""

    __slots__ = ("denom", "offset", "order", "_c")

    def __init__(self, coeffs, offset: int = 0, order: int | None = None, denom: int = 1):
        arr = _as_array(coeffs)
        if denom < 1:
            raise SubstrateError(f"denominator must be positive, got {denom}")
        if order is None:
            order = offset + arr.size - 1
        if order < offset:
            raise SeriesError(f"order {order} below offset {offset}")
        n = order - offset + 1
        if arr.size < n:
            arr = np.concatenate([arr, np.zeros(n - arr.size, dtype=arr.dtype)])
        elif arr.size > n:
            arr = arr[:n].copy()
        arr.flags.writeable = False
        self.denom = int(denom)
        self.offset = int(offset)
        self.order = int(order)
        self._c = arr

    # -- construction helpers -------------------------------------------------

    @classmethod
    def _raw(cls, arr: np.ndarray, offset: int, order: int, denom: int) -> "QSeries":
        obj = cls.__new__(cls)
        arr.flags.writeable = False
        obj.denom, obj.offset, obj.order, obj._c = denom, offset, order, arr
        return obj

    # -- views ----------------------------------------------------------------

    @property
    def coeffs(self) -> tuple[int, ...]:
        return tuple(int(c) for c in self._c)

    @property
    def array(self) -> np.ndarray:
        """Read-only coefficient array (int64 or object dtype)."""
        return self._c

    def __len__(self) -> int:
        return self._c.size

    def coeff_at(self, e: int) -> int:
        """Exact coefficient of ``t^e``; raises beyond the tracked order."""
        if e > self.order:
            raise TruncationError(f"coefficient of t^{e} unknown (series known through t^{self.order})")
        if e < self.offset:
            return 0
        return int(self._c[e - self.offset])

    def coeff_q(self, exponent) -> int:
        """Coefficient of ``q^exponent`` for a rational exponent."""
        e = Fraction(exponent) * self.denom
        if e > self.order:
            raise TruncationError(f"coefficient of q^{exponent} unknown (series known through t^{self.order})")
        return self.coeff_at(int(e)) if e.denominator == 1 else 0

    def terms(self) -> Iterator[tuple[int, int]]:
        """Nonzero ``(t_exponent, coefficient)`` pairs in increasing order."""
        for i in np.flatnonzero(self._c):
            yield self.offset + int(i), int(self._c[i])

    def valuation(self) -> int | None:
        nz = np.flatnonzero(self._c)
        return None if nz.size == 0 else self.offset + int(nz[0])

    def is_zero(self) -> bool:
        return not np.any(self._c)

    @property
    def order_q(self) -> Fraction:
        return Fraction(self.order, self.denom)

    # -- arithmetic -----------------------------------------------------------

    def _check(self, other: "QSeries") -> None:
        if self.denom != other.denom:
            raise SubstrateError(f"cannot combine q^(1/{self.denom}) and q^(1/{other.denom}) series")

    def _window(self, lo: int, hi: int) -> np.ndarray:
        """Coefficients for exponents lo..hi (zeros below offset)."""
        n = hi - lo + 1
        out = np.zeros(n, dtype=self._c.dtype)
        start = max(lo, self.offset)
        stop = min(hi, self.order)
        if stop >= start:
            out[start - lo : stop - lo + 1] = self._c[start - self.offset : stop - self.offset + 1]
        return out

    def __add__(self, other):
        if isinstance(other, int):
            other = monomial(other, 0, self.denom, max(self.order, 0))
        if not isinstance(other, QSeries):
            return NotImplemented
        self._check(other)
        lo = min(self.offset, other.offset)
        hi = min(self.order, other.order)
        a = self._window(lo, hi)
        b = other._window(lo, hi)
        if a.dtype == np.int64 and b.dtype == np.int64:
            fa = float(np.abs(a).max(initial=0)) + float(np.abs(b).max(initial=0))
            if fa < _kernels.SAFE_MAGNITUDE:
                return QSeries._raw(a + b, lo, hi, self.denom)
        out = _kernels.to_object(a) + _kernels.to_object(b)
        return QSeries._raw(_kernels.as_int64_if_small(out), lo, hi, self.denom)

    __radd__ = __add__

    def __neg__(self) -> "QSeries":
        return QSeries._raw(_kernels.scale(self._c, -1), self.offset, self.order, self.denom)

    def __sub__(self, other):
        if isinstance(other, int):
            return self + (-other)
        if not isinstance(other, QSeries):
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, np.integer)):
            return QSeries._raw(_kernels.scale(self._c, int(other)), self.offset, self.order, self.denom)
        if not isinstance(other, QSeries):
            return NotImplemented
        self._check(other)
        offset = self.offset + other.offset
        order = min(self.order + other.offset, other.order + self.offset)
        n = order - offset + 1
        arr = _kernels.convolve(self._c, other._c, n)
        return QSeries._raw(arr, offset, order, self.denom)

    __rmul__ = __mul__

    def invert(self) -> "QSeries":
        """Multiplicative inverse through the order the input determines."""
        v = self.valuation()
        if v is None:
            raise NotInvertibleError("series is zero through its tracked order")
        unit = self._c[v - self.offset :]
        if int(unit[0]) not in (1, -1):
            raise NotInvertibleError(f"lowest coefficient {int(unit[0])} at t^{v} is not a unit")
        n = unit.size
        arr = _kernels.inverse(unit, n)
        return QSeries._raw(arr, -v, -v + n - 1, self.denom)

    def __truediv__(self, other):
        if isinstance(other, QSeries):
            return self * other.invert()
        return NotImplemented

    def __pow__(self, k: int) -> "QSeries":
        if k < 0:
            return self.invert() ** (-k)
        if k == 0:
            return one(self.denom, max(self.order - self.offset, 0))
        result = self
        for _ in range(k - 1):
            result = result * self
        return result

    def shift(self, e: int) -> "QSeries":
        """Multiply by ``t^e`` (exact: the order moves with the offset)."""
        return QSeries._raw(self._c.copy(), self.offset + e, self.order + e, self.denom)

    def truncate(self, order: int) -> "QSeries":
        if order > self.order:
            raise TruncationError(f"cannot extend a series known through t^{self.order} to t^{order}")
        if order < self.offset:
            return QSeries._raw(np.zeros(1, dtype=np.int64), order, order, self.denom)
        return QSeries._raw(self._c[: order - self.offset + 1].copy(), self.offset, order, self.denom)

    def refine(self, k: int) -> "QSeries":
        """Same series viewed on the finer substrate ``q^(1/(k*D))``."""
        if k == 1:
            return self
        n = self._c.size
        arr = np.zeros((n - 1) * k + 1, dtype=self._c.dtype)
        arr[::k] = self._c
        offset = self.offset * k
        order = self.order * k + (k - 1)
        arr = np.concatenate([arr, np.zeros(k - 1, dtype=arr.dtype)])
        return QSeries._raw(arr, offset, order, self.denom * k)

    def substitute(self, k: int) -> "QSeries":
        """Apply ``q -> q^k``."""
        if k < 1:
            raise SeriesError("substitution power must be positive")
        if self.denom % k == 0:
            return QSeries._raw(self._c.copy(), self.offset, self.order, self.denom // k)
        g = np.gcd(self.denom, k)
        step = k // g
        n = self._c.size
        arr = np.zeros((n - 1) * step + step, dtype=self._c.dtype)
        arr[::step] = self._c
        return QSeries._raw(arr, self.offset * step, self.order * step + step - 1, self.denom // g)

    # -- comparison and display --------------------------------------------------

    def first_difference(self, other: "QSeries") -> tuple[int, int, int] | None:
        """First ``(t_exp, self_coeff, other_coeff)`` that differ through the common order."""
        self._check(other)
        lo = min(self.offset, other.offset)
        hi = min(self.order, other.order)
        a = self._window(lo, hi)
        b = other._window(lo, hi)
        if a.dtype != b.dtype:
            a, b = _kernels.to_object(a), _kernels.to_object(b)
        nz = np.flatnonzero(a != b)
        if nz.size == 0:
            return None
        i = int(nz[0])
        return lo + i, int(a[i]), int(b[i])

    def __eq__(self, other) -> bool:
        if not isinstance(other, QSeries):
            return NotImplemented
        return (
            self.denom == other.denom
            and self.order == other.order
            and self.first_difference(other) is None
        )

    def __hash__(self):
        return hash((self.denom, self.order, tuple(self.terms())))

    def q_exponent(self, e: int) -> Fraction:
        return Fraction(e, self.denom)

    def __repr__(self) -> str:
        return f"QSeries({format_series(self)})"

    def __str__(self) -> str:
        return format_series(self)


def _fmt_exp(e: Fraction) -> str:
    return str(e.numerator) if e.denominator == 1 else f"{e.numerator}/{e.denominator}"


def format_series(s: QSeries, max_terms: int | None = None) -> str:
    parts: list[str] = []
    for k, (e, c) in enumerate(s.terms()):
        if max_terms is not None and k >= max_terms:
            parts.append("...")
            break
        qe = Fraction(e, s.denom)
        if qe == 0:
            mono = ""
        elif qe == 1:
            mono = "q"
        elif qe.denominator == 1 and qe > 0:
            mono = f"q^{qe}"
        else:
            mono = f"q^({_fmt_exp(qe)})"
        if mono and abs(c) == 1:
            body = mono
        elif mono:
            body = f"{abs(c)}*{mono}"
        else:
            body = str(abs(c))
        sign = "-" if c < 0 else "+"
        parts.append(f"{sign} {body}")
    text = " ".join(parts) if parts else "0"
    if text.startswith("+ "):
        text = text[2:]
    elif text.startswith("- "):
        text = "-" + text[2:]
    return f"{text} + O(q^({_fmt_exp(Fraction(s.order + 1, s.denom))}))"


# -- functional surface -------------------------------------------------------


def monomial(c: int, e: int, denom: int, order: int) -> QSeries:
    """``c * t^e`` tracked through ``t^order``."""
    if order < e:
        raise TruncationError(f"monomial t^{e} lies above the requested order t^{order}")
    offset = min(e, 0)
    arr = np.zeros(order - offset + 1, dtype=object)
    arr[e - offset] = int(c)
    return QSeries(arr, offset, order, denom)


def zero(denom: int, order: int) -> QSeries:
    return QSeries(np.zeros(max(order, 0) + 1, dtype=np.int64), min(order, 0), order, denom)


def one(denom: int, order: int) -> QSeries:
    return monomial(1, 0, denom, order)


def from_terms(terms: Iterable[tuple[int, int]], denom: int, order: int, offset: int = 0) -> QSeries:
    """Series from sparse ``(t_exponent, coefficient)`` pairs; terms above order are dropped."""
    arr = np.zeros(order - offset + 1, dtype=object)
    for e, c in terms:
        if e < offset:
            raise SeriesError(f"term t^{e} below offset {offset}")
        if e <= order:
            arr[e - offset] += int(c)
    return QSeries(arr, offset, order, denom)


def add(a: QSeries, b: QSeries) -> QSeries:
    return a + b


def mul(a: QSeries, b: QSeries) -> QSeries:
    return a * b


def invert(a: QSeries) -> QSeries:
    return a.invert()


def coeff_at(a: QSeries, e: int) -> int:
    return a.coeff_at(e)


def to_csv_rows(s: QSeries) -> list[tuple[int, str, int]]:
    """Rows ``(t_exponent, q_exponent, coefficient)`` for every tracked exponent."""
    rows = []
    for i in range(s._c.size):
        e = s.offset + i
        rows.append((e, _fmt_exp(Fraction(e, s.denom)), int(s._c[i])))
    return rows
