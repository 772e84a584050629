"""Exact/float arithmetic helpers.

Values are either exact (``int`` or ``Fraction``) or floats. Comparisons between
two exact values are exact; anything involving a float uses a relative
tolerance.
"""

from __future__ import annotations

import math
import os
from fractions import Fraction
from functools import reduce
from numbers import Rational, Real

import numpy as np

DEFAULT_TOL = 1e-9
DEFAULT_BUDGET = 10**7
DEFAULT_LP_BUDGET = 10**6


def env_budget(default: int = DEFAULT_BUDGET) -> int:
    """Enumeration budget, overridable through ``MIX_BUDGET``."""
    raw = os.environ.get("MIX_BUDGET")
    if raw is None:
        return default
    try:
        value = int(raw)
    except ValueError:
        return default
    return value if value > 0 else default


def is_exact(x) -> bool:
    return isinstance(x, Rational) and not isinstance(x, bool)


def all_exact(values) -> bool:
    return all(is_exact(v) for v in values)


def exact(x):
    """Normalize an exact scalar to ``Fraction`` (ints become Fractions too)."""
    return Fraction(x)


def to_float(x) -> float:
    return float(x)


def is_finite(x) -> bool:
    if is_exact(x):
        return True
    return math.isfinite(float(x))


def _scale(x, y) -> float:
    return max(1.0, abs(float(x)), abs(float(y)))


def _plain_compare(x, y) -> bool:
    """Exact pairs and infinities compare without tolerance."""
    return (is_exact(x) and is_exact(y)) or math.isinf(float(x)) or math.isinf(float(y))


def leq(x, y, tol: float = DEFAULT_TOL) -> bool:
    """``x <= y``; exact for exact inputs, relative tolerance otherwise."""
    if _plain_compare(x, y):
        return x <= y
    return float(x) <= float(y) + tol * _scale(x, y)


def lt(x, y, tol: float = DEFAULT_TOL) -> bool:
    """Strict ``x < y`` that needs a margin larger than the tolerance for floats."""
    if _plain_compare(x, y):
        return x < y
    return float(x) < float(y) - tol * _scale(x, y)


def eq(x, y, tol: float = DEFAULT_TOL) -> bool:
    if _plain_compare(x, y):
        return x == y
    return abs(float(x) - float(y)) <= tol * _scale(x, y)


def xsum(values):
    """Sum that stays exact for exact inputs and uses fsum otherwise."""
    values = list(values)
    if all_exact(values):
        return sum((Fraction(v) for v in values), Fraction(0))
    return math.fsum(float(v) for v in values)


def common_denominator(values) -> int:
    return reduce(math.lcm, (Fraction(v).denominator for v in values), 1)


def to_numeric_array(values):
    """Convert a nested list/array of scalars to a numpy array for fast kernels.

    Exact input is scaled to integers by the least common denominator; returns
    ``(array, scale)`` with ``scale`` ``None`` in float mode. Integer arrays fall
    back to object dtype when int64 could overflow.
    """
    arr = np.asarray(values, dtype=object)
    flat = list(arr.ravel())
    if flat and all_exact(flat):
        scale = common_denominator(flat)
        ints = [int(Fraction(v) * scale) for v in flat]
        bound = max((abs(v) for v in ints), default=0)
        rows = arr.shape[0] if arr.ndim else 1
        cols = arr.shape[1] if arr.ndim > 1 else 1
        # variance objective squares row sums of width `cols`
        if (bound * cols + 1) ** 2 * max(rows, 1) < 2**62:
            out = np.array(ints, dtype=np.int64).reshape(arr.shape)
        else:
            out = np.empty(len(ints), dtype=object)
            out[:] = ints
            out = out.reshape(arr.shape)
        return out, scale
    return np.asarray([float(v) for v in flat], dtype=float).reshape(arr.shape), None


def from_numeric(value, scale):
    """Inverse of :func:`to_numeric_array` for one scalar."""
    if scale is None:
        return float(value)
    return Fraction(int(value), scale)


def jsonable(x):
    """Serialize a scalar; exact rationals become ``{"num", "den"}``."""
    if isinstance(x, bool):
        return x
    if isinstance(x, Fraction):
        if x.denominator == 1:
            return int(x.numerator)
        return {"num": x.numerator, "den": x.denominator}
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(x, Real):
        return float(x)
    return x
