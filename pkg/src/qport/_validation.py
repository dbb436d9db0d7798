"""Input validation helpers shared by the estimators and free functions."""

from __future__ import annotations

import numbers

import numpy as np


def check_count(value, name, *, minimum=0):
    """Return ``value`` as a Python int, rejecting bools, floats and values below ``minimum``."""
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise TypeError(f"{name} must be an integer, got {type(value).__name__}")
    value = int(value)
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return value


def check_cardinality(k, n, *, allow_full=False, allow_empty=False):
    k = check_count(k, "k")
    lo = 0 if allow_empty else 1
    hi = n if allow_full else n - 1
    if not lo <= k <= hi:
        raise ValueError(f"k={k} outside the admissible range [{lo}, {hi}] for n={n}")
    return k


def check_portfolio(x, n=None):
    """Coerce ``x`` to a 1-d int8 0/1 vector, optionally checking its length."""
    arr = np.asarray(x)
    if arr.ndim != 1:
        raise ValueError(f"portfolio must be one-dimensional, got shape {arr.shape}")
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise ValueError("portfolio entries must be 0 or 1")
    if n is not None and arr.shape[0] != n:
        raise ValueError(f"portfolio has length {arr.shape[0]}, expected {n}")
    return arr.astype(np.int8)


def check_portfolios(X, n):
    """2-d batch version of :func:`check_portfolio`; a single vector is promoted to one row."""
    arr = np.asarray(X)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != n:
        raise ValueError(f"expected portfolios of shape (m, {n}), got {np.shape(X)}")
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise ValueError("portfolio entries must be 0 or 1")
    return arr.astype(np.int8)


def check_square_matrix(m, n, name, *, symmetric=True, zero_diagonal=True, lo=None, hi=None):
    arr = np.asarray(m, dtype=float)
    if arr.shape != (n, n):
        raise ValueError(f"{name} has shape {arr.shape}, expected ({n}, {n})")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains non-finite values")
    if symmetric and not np.array_equal(arr, arr.T):
        i, j = np.argwhere(arr != arr.T)[0]
        raise ValueError(f"{name} is not symmetric: [{i}][{j}]={arr[i, j]} but [{j}][{i}]={arr[j, i]}")
    if zero_diagonal and np.any(np.diag(arr) != 0):
        raise ValueError(f"{name} must have a zero diagonal")
    if lo is not None and np.any(arr < lo):
        raise ValueError(f"{name} has entries below {lo}")
    if hi is not None and np.any(arr > hi):
        raise ValueError(f"{name} has entries above {hi}")
    return arr


def check_probability(p, name, *, closed_upper=False):
    p = float(p)
    upper_ok = p <= 1.0 if closed_upper else p < 1.0
    if not (0.0 <= p and upper_ok):
        bracket = "]" if closed_upper else ")"
        raise ValueError(f"{name} must lie in [0, 1{bracket}, got {p}")
    return p


def readonly(arr):
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr
