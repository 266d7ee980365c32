"""Coefficient kernels for truncated integer power series.

Every routine works on 1-d numpy arrays of integer coefficients and returns
exact results.  Arrays come in two flavours: ``int64`` when all magnitudes are
known to stay small, and ``object`` (Python ints) otherwise.  The int64 routes
are only taken after a float-magnitude bound proves that no intermediate sum
can overflow.

The int64 routes are compiled with numba when it is importable.  Setting
``QIDENT_DISABLE_NUMBA=1`` forces the pure-numpy implementations instead; both
paths give identical results.
"""
from __future__ import annotations

import os

import numpy as np

# magnitudes below this are exactly representable with headroom for the
# float rounding in the bound estimates
SAFE_MAGNITUDE = float(2**60)

_DISABLED = os.environ.get("QIDENT_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    if _DISABLED:
        raise ImportError
    from numba import njit
except ImportError:  # pragma: no cover - exercised via the env flag
    njit = None

NUMBA_ENABLED = njit is not None


def _jit(func):
    if njit is None:
        return func
    return njit(cache=True, nogil=True)(func)


# --------------------------------------------------------------------------
# int64 kernels (numba when available)

def _convolve_int64_py(a, b, n):
    out = np.zeros(n, dtype=np.int64)
    la = min(a.shape[0], n)
    lb = min(b.shape[0], n)
    for i in range(la):
        ai = a[i]
        if ai == 0:
            continue
        top = min(lb, n - i)
        for j in range(top):
            out[i + j] += ai * b[j]
    return out


def _inverse_int64_py(a, n):
    # a[0] is +1 or -1
    out = np.zeros(n, dtype=np.int64)
    lead = a[0]
    out[0] = lead
    la = a.shape[0]
    for k in range(1, n):
        acc = 0
        top = min(k, la - 1)
        for j in range(1, top + 1):
            acc += a[j] * out[k - j]
        out[k] = -acc * lead
    return out


def _inverse_bound_py(absa, n):
    # B_k = sum_j |a_j| B_{k-j}; dominates |coefficients| of 1/a and every partial sum
    out = np.zeros(n, dtype=np.float64)
    out[0] = 1.0
    la = absa.shape[0]
    for k in range(1, n):
        acc = 0.0
        top = min(k, la - 1)
        for j in range(1, top + 1):
            acc += absa[j] * out[k - j]
        out[k] = acc
    return out


_convolve_int64_jit = _jit(_convolve_int64_py)
_inverse_int64_jit = _jit(_inverse_int64_py)
_inverse_bound_jit = _jit(_inverse_bound_py)


# --------------------------------------------------------------------------
# numpy reference paths

def _convolve_numpy(a, b, n):
    a = a[:n]
    b = b[:n]
    if a.size == 0 or b.size == 0:
        return np.zeros(n, dtype=np.result_type(a, b))
    out = np.convolve(a, b)[:n]
    if out.size < n:
        out = np.concatenate([out, np.zeros(n - out.size, dtype=out.dtype)])
    return out


def _inverse_numpy(a, n):
    dtype = a.dtype
    out = np.zeros(n, dtype=dtype)
    lead = int(a[0])
    out[0] = lead
    la = a.shape[0]
    for k in range(1, n):
        top = min(k, la - 1)
        if top == 0:
            continue
        acc = np.dot(a[1 : top + 1], out[k - 1 : k - top - 1 : -1] if k - top - 1 >= 0 else out[k - 1 :: -1])
        out[k] = -acc * lead
    return out


def _inverse_bound_numpy(absa, n):
    out = np.zeros(n, dtype=np.float64)
    out[0] = 1.0
    la = absa.shape[0]
    for k in range(1, n):
        top = min(k, la - 1)
        if top == 0:
            continue
        seg = out[k - 1 : k - top - 1 : -1] if k - top - 1 >= 0 else out[k - 1 :: -1]
        out[k] = float(np.dot(absa[1 : top + 1], seg))
    return out


# --------------------------------------------------------------------------
# dispatch

def as_int64_if_small(arr: np.ndarray) -> np.ndarray:
    """Return an int64 copy of ``arr`` when every entry is safely small."""
    if arr.dtype == np.int64:
        return arr
    if arr.size == 0:
        return np.zeros(0, dtype=np.int64)
    if max(abs(int(x)) for x in arr) < SAFE_MAGNITUDE:
        return arr.astype(np.int64)
    return arr


def to_object(arr: np.ndarray) -> np.ndarray:
    if arr.dtype == object:
        return arr
    return np.array([int(x) for x in arr], dtype=object)


def _abs_float(arr: np.ndarray) -> np.ndarray:
    if arr.dtype == np.int64:
        return np.abs(arr).astype(np.float64)
    return np.array([abs(float(x)) for x in arr], dtype=np.float64)


def convolve(a: np.ndarray, b: np.ndarray, n: int, *, use_numba: bool | None = None) -> np.ndarray:
    """First ``n`` coefficients of the product of ``a`` and ``b``."""
    if n <= 0:
        return np.zeros(0, dtype=np.int64)
    if use_numba is None:
        use_numba = NUMBA_ENABLED
    a = a[:n]
    b = b[:n]
    if a.size == 0 or b.size == 0:
        return np.zeros(n, dtype=np.int64)
    if a.dtype == np.int64 and b.dtype == np.int64:
        fa = np.abs(a).astype(np.float64)
        fb = np.abs(b).astype(np.float64)
        if fa.max() * fb.sum() < SAFE_MAGNITUDE and fb.max() * fa.sum() < SAFE_MAGNITUDE:
            if use_numba:
                return _convolve_int64_jit(a, b, n)
            return _convolve_numpy(a, b, n)
    out = _convolve_numpy(to_object(a), to_object(b), n)
    return as_int64_if_small(out)


def inverse(a: np.ndarray, n: int, *, use_numba: bool | None = None) -> np.ndarray:
    """First ``n`` coefficients of ``1/a`` for ``a[0]`` in {+1, -1}."""
    if n <= 0:
        return np.zeros(0, dtype=np.int64)
    if int(a[0]) not in (1, -1):
        raise ValueError("leading coefficient must be a unit")
    if use_numba is None:
        use_numba = NUMBA_ENABLED
    a = a[:n]
    if a.dtype == np.int64:
        absa = np.abs(a).astype(np.float64)
        bound = _inverse_bound_jit(absa, n) if use_numba else _inverse_bound_numpy(absa, n)
        amax = absa.max()
        # each partial sum is at most B_k; each product at most amax * B_{k-j}
        if bound.max() * max(amax, 1.0) < SAFE_MAGNITUDE:
            if use_numba:
                return _inverse_int64_jit(a, n)
            return _inverse_numpy(a, n)
    return as_int64_if_small(_inverse_numpy(to_object(a), n))


def mul_binomial(arr: np.ndarray, c: int, e: int) -> np.ndarray:
    """Multiply coefficients (offset 0) by ``1 + c t^e``, keeping the length."""
    n = arr.shape[0]
    out = arr.copy()
    if e >= n or c == 0:
        return out
    if e == 0:
        return scale(arr, 1 + c)
    if arr.dtype == np.int64:
        if float(np.abs(arr).max(initial=0)) * (1 + abs(c)) >= SAFE_MAGNITUDE:
            out = to_object(arr)
            out[e:] = out[e:] + c * to_object(arr[: n - e])
            return out
        out[e:] += c * arr[: n - e]
        return out
    out[e:] = out[e:] + c * arr[: n - e]
    return as_int64_if_small(out)


def scale(arr: np.ndarray, c: int) -> np.ndarray:
    """Multiply every coefficient by the integer ``c``."""
    if arr.dtype == np.int64 and float(np.abs(arr).max(initial=0)) * abs(c) < SAFE_MAGNITUDE:
        return arr * np.int64(c)
    return as_int64_if_small(to_object(arr) * c)
