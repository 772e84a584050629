"""Marginal laws: discrete tables, parametric families and quantile tables.

Every spec is an immutable dataclass. Exact rationals are kept end to end when
all inputs are exact (``int``/``Fraction``); any float switches that value to
float mode.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Literal, Optional, Sequence, Tuple, Union

from scipy.special import ndtri

from ._numeric import all_exact, is_exact, is_finite, xsum
from .exceptions import SpecError

Direction = Literal["increasing", "decreasing"]

#: generator tags whose 1-elliptical law has no finite mean
INFINITE_MEAN_GENERATORS = frozenset({"cauchy"})
GAUSSIAN_GENERATORS = frozenset({"gaussian", "normal"})

FLOAT_SUM_TOL = 1e-12


@dataclass(frozen=True)
class DiscreteDistribution:
    """Finite discrete law: strictly increasing ``points`` with positive ``weights``."""

    points: Tuple
    weights: Tuple

    def __post_init__(self):
        if len(self.points) == 0:
            raise SpecError("discrete distribution needs at least one point")
        if len(self.points) != len(self.weights):
            raise SpecError("points and weights must have the same length")
        if any(w <= 0 for w in self.weights):
            raise SpecError("weights must be positive")
        if any(b <= a for a, b in zip(self.points, self.points[1:])):
            raise SpecError("points must be strictly increasing")
        total = xsum(self.weights)
        if self.exact:
            if total != 1:
                raise SpecError(f"weights must sum to 1, got {total}")
        elif abs(float(total) - 1.0) > FLOAT_SUM_TOL:
            raise SpecError(f"weights must sum to 1, got {total}")

    @property
    def exact(self) -> bool:
        return all_exact(self.points) and all_exact(self.weights)

    @property
    def size(self) -> int:
        return len(self.points)

    @property
    def mean(self):
        return xsum(x * w for x, w in zip(self.points, self.weights))

    def cumulative(self) -> list:
        """Running totals of the weights; the last entry is pinned to 1."""
        out, acc = [], (Fraction(0) if self.exact else 0.0)
        for w in self.weights:
            acc = acc + w
            out.append(acc)
        out[-1] = Fraction(1) if self.exact else 1.0
        return out

    def pmf(self) -> dict:
        return dict(zip(self.points, self.weights))

    def equal_weights(self) -> bool:
        return all(w == self.weights[0] for w in self.weights)


@dataclass(frozen=True)
class Uniform:
    a: object
    b: object

    def __post_init__(self):
        _check_interval(self.a, self.b)


@dataclass(frozen=True)
class QuantileTable:
    """Piecewise linear quantile function through ``(q, x)`` knots.

    ``q`` runs strictly from 0 to 1 and ``x`` is nondecreasing, so ``x[0]`` and
    ``x[-1]`` are the essential infimum and supremum.
    """

    q: Tuple
    x: Tuple

    def __post_init__(self):
        if len(self.q) != len(self.x) or len(self.q) < 2:
            raise SpecError("quantile table needs matching q and x lists of length >= 2")
        if not all(is_finite(v) for v in (*self.q, *self.x)):
            raise SpecError("quantile table entries must be finite")
        if self.q[0] != 0 or self.q[-1] != 1:
            raise SpecError("quantile table q grid must start at 0 and end at 1")
        if any(b <= a for a, b in zip(self.q, self.q[1:])):
            raise SpecError("quantile table q grid must be strictly increasing")
        if any(b < a for a, b in zip(self.x, self.x[1:])):
            raise SpecError("quantile table must be nondecreasing in q")


@dataclass(frozen=True)
class MonotoneDensity:
    """Law with a monotone density on ``[a, b]``, known only through ``(a, b, mean)``.

    The quantile function is available only when ``table`` is supplied.
    """

    a: object
    b: object
    mean: object
    direction: Direction = "decreasing"
    table: Optional[QuantileTable] = None

    def __post_init__(self):
        _check_interval(self.a, self.b, strict=True)
        if self.direction not in ("increasing", "decreasing"):
            raise SpecError(f"direction must be 'increasing' or 'decreasing', got {self.direction!r}")
        if not (self.a < self.mean < self.b):
            raise SpecError("monotone density mean must lie strictly inside (a, b)")
        _check_table_support(self.table, self.a, self.b)


@dataclass(frozen=True)
class ConcaveDensity:
    a: object
    b: object
    symmetric_unimodal: bool = False
    table: Optional[QuantileTable] = None

    def __post_init__(self):
        _check_interval(self.a, self.b, strict=True)
        _check_table_support(self.table, self.a, self.b)


@dataclass(frozen=True)
class BoundedBelowDensity:
    """Density on ``[a, b]`` bounded below by ``density_floor``."""

    a: object
    b: object
    density_floor: object
    symmetric_unimodal: bool = False
    table: Optional[QuantileTable] = None

    def __post_init__(self):
        _check_interval(self.a, self.b, strict=True)
        if self.density_floor < 0:
            raise SpecError("density floor must be nonnegative")
        if self.density_floor * (self.b - self.a) > 1 + (0 if is_exact(self.density_floor) else 1e-12):
            raise SpecError("density floor times interval length cannot exceed 1")
        _check_table_support(self.table, self.a, self.b)


@dataclass(frozen=True)
class Normal:
    mu: object
    sigma: object

    def __post_init__(self):
        _check_location_scale(self.mu, self.sigma)

    @property
    def generator(self) -> str:
        return "gaussian"


@dataclass(frozen=True)
class Elliptical:
    """1-elliptical law; the characteristic generator is an opaque tag."""

    mu: object
    sigma: object
    generator: str

    def __post_init__(self):
        _check_location_scale(self.mu, self.sigma)
        if not isinstance(self.generator, str) or not self.generator:
            raise SpecError("elliptical generator tag must be a non-empty string")


DistributionSpec = Union[
    DiscreteDistribution,
    Uniform,
    MonotoneDensity,
    ConcaveDensity,
    BoundedBelowDensity,
    Elliptical,
    Normal,
    QuantileTable,
]


@dataclass(frozen=True)
class SupportInterval:
    a: object
    b: object
    bounded: bool

    @property
    def width(self):
        return self.b - self.a


def _check_interval(a, b, strict=False):
    if not (is_finite(a) and is_finite(b)):
        raise SpecError("interval endpoints must be finite")
    if b < a or (strict and b == a):
        raise SpecError(f"need a < b, got a={a}, b={b}")


def _check_location_scale(mu, sigma):
    if not (is_finite(mu) and is_finite(sigma)):
        raise SpecError("mu and sigma must be finite")
    if sigma < 0:
        raise SpecError("sigma must be nonnegative")


def _check_table_support(table, a, b):
    if table is None:
        return
    if not isinstance(table, QuantileTable):
        raise SpecError("table must be a QuantileTable")
    if not (math.isclose(float(table.x[0]), float(a), abs_tol=1e-12)
            and math.isclose(float(table.x[-1]), float(b), abs_tol=1e-12)):
        raise SpecError("quantile table endpoints must match the support [a, b]")


# ---------------------------------------------------------------------------
# construction


def make_discrete(points: Sequence, weights: Sequence) -> DiscreteDistribution:
    """Build a normalized discrete law: sorted, duplicates merged, weights rescaled.

    Zero weights are dropped. Exact inputs stay exact.
    """
    points, weights = list(points), list(weights)
    if not points:
        raise SpecError("empty input")
    if len(points) != len(weights):
        raise SpecError("points and weights must have the same length")
    for x in points:
        if isinstance(x, bool) or not is_finite(x):
            raise SpecError(f"point {x!r} is not a finite number")
    for w in weights:
        if isinstance(w, bool) or not is_finite(w):
            raise SpecError(f"weight {w!r} is not a finite number")
        if w < 0:
            raise SpecError(f"negative weight {w}")
    exact = all_exact(points) and all_exact(weights)
    conv = Fraction if exact else float
    merged: dict = {}
    for x, w in zip(points, weights):
        if w == 0:
            continue
        x = conv(x)
        merged[x] = merged.get(x, conv(0)) + conv(w)
    if not merged:
        raise SpecError("all weights are zero")
    xs = sorted(merged)
    total = xsum(merged.values())
    ws = [merged[x] / total for x in xs]
    if not exact:
        # renormalize once more so the float sum lands within 1e-12
        s = math.fsum(ws)
        ws = [w / s for w in ws]
    return DiscreteDistribution(tuple(xs), tuple(ws))


def point_mass(c) -> DiscreteDistribution:
    return make_discrete([c], [1])


def uniform_on(points: Sequence) -> DiscreteDistribution:
    """Equal-weight law on a list of points (repeats add weight)."""
    points = list(points)
    w = Fraction(1, len(points)) if all_exact(points) else 1.0 / len(points)
    return make_discrete(points, [w] * len(points))


def as_float(spec: DistributionSpec) -> DistributionSpec:
    """Float-mode copy of a discrete law; other specs are returned unchanged."""
    if isinstance(spec, DiscreteDistribution) and spec.exact:
        return make_discrete([float(x) for x in spec.points], [float(w) for w in spec.weights])
    return spec


# ---------------------------------------------------------------------------
# quantiles and moments


def _check_level(q):
    if isinstance(q, bool) or not is_finite(q) or not (0 < q <= 1):
        raise ValueError(f"probability level must lie in (0, 1], got {q}")


def _gaussian_like(spec) -> bool:
    if isinstance(spec, Normal):
        return True
    return isinstance(spec, Elliptical) and spec.generator.lower() in GAUSSIAN_GENERATORS


def _table_of(spec):
    if isinstance(spec, QuantileTable):
        return spec
    if isinstance(spec, (MonotoneDensity, ConcaveDensity, BoundedBelowDensity)):
        if spec.table is None:
            raise ValueError(
                f"{type(spec).__name__} has no computable quantile; attach a quantile table"
            )
        return spec.table
    return None


def _table_quantile(table: QuantileTable, q):
    k = bisect.bisect_left(table.q, q)
    if k == 0:
        return table.x[0]
    q0, q1 = table.q[k - 1], table.q[k]
    x0, x1 = table.x[k - 1], table.x[k]
    return x0 + (x1 - x0) * (q - q0) / (q1 - q0)


def quantile(spec: DistributionSpec, q):
    """Left-continuous inverse ``inf{x : F(x) >= q}`` for ``q`` in (0, 1]."""
    _check_level(q)
    if isinstance(spec, DiscreteDistribution):
        cum = spec.cumulative()
        if spec.exact and is_exact(q):
            k = bisect.bisect_left(cum, q)
        else:
            k = bisect.bisect_left(cum, float(q) - FLOAT_SUM_TOL)
        return spec.points[min(k, spec.size - 1)]
    if isinstance(spec, Uniform):
        return spec.a + q * (spec.b - spec.a)
    if _gaussian_like(spec):
        if spec.sigma == 0:
            return spec.mu
        if q == 1:
            return math.inf
        return float(spec.mu) + float(spec.sigma) * float(ndtri(float(q)))
    if isinstance(spec, Elliptical):
        raise ValueError(f"no quantile available for elliptical generator {spec.generator!r}")
    table = _table_of(spec)
    if table is None:
        raise TypeError(f"unsupported spec {spec!r}")
    return _table_quantile(table, q)


def mean(spec: DistributionSpec):
    """Mean of the law; raises ``ValueError`` when it is unavailable or infinite."""
    if isinstance(spec, DiscreteDistribution):
        return spec.mean
    if isinstance(spec, Uniform):
        return xsum([spec.a, spec.b]) / 2
    if isinstance(spec, MonotoneDensity):
        return spec.mean
    if isinstance(spec, Normal):
        return spec.mu
    if isinstance(spec, Elliptical):
        if spec.generator.lower() in INFINITE_MEAN_GENERATORS and spec.sigma > 0:
            raise ValueError(f"generator {spec.generator!r} has no finite mean")
        return spec.mu
    table = _table_of(spec)
    if table is None:
        raise TypeError(f"unsupported spec {spec!r}")
    return _table_integral(table, 0, 1)


def _table_integral(table: QuantileTable, lo, hi):
    """Integral of the piecewise linear quantile over ``[lo, hi]`` (trapezoid, exact)."""
    total = []
    for q0, q1, x0, x1 in zip(table.q, table.q[1:], table.x, table.x[1:]):
        a, b = max(q0, lo), min(q1, hi)
        if b <= a:
            continue
        ya = x0 + (x1 - x0) * (a - q0) / (q1 - q0)
        yb = x0 + (x1 - x0) * (b - q0) / (q1 - q0)
        total.append((ya + yb) * (b - a) / 2)
    return xsum(total) if total else 0


def essential_support(spec: DistributionSpec) -> SupportInterval:
    if isinstance(spec, DiscreteDistribution):
        return SupportInterval(spec.points[0], spec.points[-1], True)
    if isinstance(spec, (Uniform, MonotoneDensity, ConcaveDensity, BoundedBelowDensity)):
        return SupportInterval(spec.a, spec.b, True)
    if isinstance(spec, (Normal, Elliptical)):
        if spec.sigma == 0:
            return SupportInterval(spec.mu, spec.mu, True)
        return SupportInterval(-math.inf, math.inf, False)
    if isinstance(spec, QuantileTable):
        return SupportInterval(spec.x[0], spec.x[-1], True)
    raise TypeError(f"unsupported spec {spec!r}")


def midpoint_levels(N: int, window=(0, 1)) -> list:
    """Levels ``lo + (hi - lo)(k - 1/2)/N`` for ``k = 1..N``."""
    if N < 1:
        raise ValueError("N must be at least 1")
    lo, hi = window
    if not (0 <= lo < hi <= 1):
        raise ValueError(f"window must satisfy 0 <= lo < hi <= 1, got {window}")
    if is_exact(lo) and is_exact(hi):
        lo, hi = Fraction(lo), Fraction(hi)
        return [lo + (hi - lo) * Fraction(2 * k - 1, 2 * N) for k in range(1, N + 1)]
    lo, hi = float(lo), float(hi)
    return [lo + (hi - lo) * (k - 0.5) / N for k in range(1, N + 1)]


def quantile_grid(spec: DistributionSpec, N: int, window=(0, 1)) -> list:
    """The ``N`` midpoint quantiles of ``spec`` on ``window``, unmerged and sorted."""
    out = [quantile(spec, q) for q in midpoint_levels(N, window)]
    if not all(is_finite(x) for x in out):
        raise ValueError("unbounded quantile on the discretization grid")
    return out


def discretize(spec: DistributionSpec, N: int, window=(0, 1)) -> DiscreteDistribution:
    """Equal-weight ``N``-point law on the midpoint quantile grid of ``window``."""
    return uniform_on(quantile_grid(spec, N, window))


def conditional_on_levels(spec: DiscreteDistribution, lo, hi) -> DiscreteDistribution:
    """Exact law of ``F^{-1}(W)`` with ``W ~ U[lo, hi]`` for a discrete ``F``."""
    if not (0 <= lo < hi <= 1):
        raise ValueError("need 0 <= lo < hi <= 1")
    cum = spec.cumulative()
    prev = Fraction(0) if spec.exact else 0.0
    pts, ws = [], []
    for x, c in zip(spec.points, cum):
        overlap = min(c, hi) - max(prev, lo)
        if overlap > 0:
            pts.append(x)
            ws.append(overlap)
        prev = c
    return make_discrete(pts, ws)


def affine(spec: DistributionSpec, c, d) -> DistributionSpec:
    """Law of ``c X + d`` for ``c > 0``."""
    if not c > 0:
        raise ValueError("scale must be positive")
    if isinstance(spec, DiscreteDistribution):
        return make_discrete([c * x + d for x in spec.points], list(spec.weights))
    tab = None
    if isinstance(spec, QuantileTable):
        return QuantileTable(spec.q, tuple(c * x + d for x in spec.x))
    if getattr(spec, "table", None) is not None:
        tab = affine(spec.table, c, d)
    if isinstance(spec, Uniform):
        return Uniform(c * spec.a + d, c * spec.b + d)
    if isinstance(spec, MonotoneDensity):
        return MonotoneDensity(c * spec.a + d, c * spec.b + d, c * spec.mean + d, spec.direction, tab)
    if isinstance(spec, ConcaveDensity):
        return ConcaveDensity(c * spec.a + d, c * spec.b + d, spec.symmetric_unimodal, tab)
    if isinstance(spec, BoundedBelowDensity):
        return BoundedBelowDensity(c * spec.a + d, c * spec.b + d, spec.density_floor / c,
                                   spec.symmetric_unimodal, tab)
    if isinstance(spec, Normal):
        return Normal(c * spec.mu + d, c * spec.sigma)
    if isinstance(spec, Elliptical):
        return Elliptical(c * spec.mu + d, c * spec.sigma, spec.generator)
    raise TypeError(f"unsupported spec {spec!r}")


def is_exact_spec(spec: DistributionSpec) -> bool:
    """True when every numeric field of ``spec`` is an exact rational."""
    if isinstance(spec, DiscreteDistribution):
        return spec.exact
    if isinstance(spec, QuantileTable):
        return all_exact(spec.q) and all_exact(spec.x)
    if isinstance(spec, (Normal, Elliptical)):
        return False
    fields = [v for k, v in vars(spec).items()
              if k not in ("direction", "symmetric_unimodal", "table", "generator")]
    tab = getattr(spec, "table", None)
    return all_exact(fields) and (tab is None or is_exact_spec(tab))
