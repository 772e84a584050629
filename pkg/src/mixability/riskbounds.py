"""Value-at-Risk of a sum with known marginals and unknown dependence.

``WVaR_p`` (worst) and ``BVaR_p`` (best) are the largest and smallest
left-continuous ``p``-quantiles of ``X_1 + ... + X_n`` over all couplings.
Both are estimated by arranging midpoint quantile grids of the tails; the
tail averages ``phi_upper_bound`` and ``phi_lower_bound`` bracket them and are
attained when the tail-conditional marginals are jointly mixable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from scipy.stats import norm

from . import _numeric as num
from .distributions import (
    DiscreteDistribution,
    DistributionSpec,
    Elliptical,
    MonotoneDensity,
    QuantileTable,
    Uniform,
    _gaussian_like,
    _table_integral,
    _table_of,
    conditional_on_levels,
    essential_support,
    quantile,
    quantile_grid,
    uniform_on,
)
from .rearrange import MatrixInstance, local_search


def _check_p(p):
    if isinstance(p, bool) or not num.is_finite(p) or not (0 < p < 1):
        raise ValueError(f"p must lie in (0, 1), got {p}")


def _tail_mean(spec: DistributionSpec, lo, hi):
    """Average of ``VaR_q`` over ``q`` in ``[lo, hi]``."""
    width = hi - lo
    if isinstance(spec, DiscreteDistribution):
        return conditional_on_levels(spec, lo, hi).mean
    if isinstance(spec, Uniform):
        return spec.a + (spec.b - spec.a) * (lo + hi) / 2
    if _gaussian_like(spec):
        if spec.sigma == 0:
            return spec.mu
        # integral of the standard normal quantile over [lo, hi] is pdf(z_lo) - pdf(z_hi)
        lo_f, hi_f = float(lo), float(hi)
        z = [norm.ppf(q) for q in (lo_f, hi_f)]
        dens = [0.0 if math.isinf(v) else norm.pdf(v) for v in z]
        return float(spec.mu) + float(spec.sigma) * (dens[0] - dens[1]) / (hi_f - lo_f)
    if isinstance(spec, Elliptical):
        raise ValueError(f"no quantile available for elliptical generator {spec.generator!r}")
    table = _table_of(spec)
    if table is None:
        raise TypeError(f"unsupported spec {spec!r}")
    return _table_integral(table, lo, hi) / width


def phi_upper_bound(specs: Sequence[DistributionSpec], p):
    """``sum_i (1/(1-p)) int_p^1 VaR_q(X_i) dq``, an upper bound on ``WVaR_p``.

    Exact for uniform, discrete and piecewise linear quantile tables with
    rational inputs; closed form for normal laws.
    """
    _check_p(p)
    one = Fraction(1) if num.is_exact(p) else 1.0
    return num.xsum(_tail_mean(s, p, one) for s in specs)


def phi_lower_bound(specs: Sequence[DistributionSpec], p):
    """``sum_i (1/p) int_0^p VaR_q(X_i) dq``, a lower bound on ``BVaR_p``."""
    _check_p(p)
    zero = Fraction(0) if num.is_exact(p) else 0.0
    return num.xsum(_tail_mean(s, zero, p) for s in specs)


# ---------------------------------------------------------------------------
# tail-conditional laws and sharpness


def tail_conditional(spec: DistributionSpec, lo, hi) -> Optional[DistributionSpec]:
    """Law of ``F^{-1}(W)`` with ``W ~ U[lo, hi]``, or ``None`` when it has no spec form."""
    if isinstance(spec, DiscreteDistribution):
        return conditional_on_levels(spec, lo, hi)
    if isinstance(spec, Uniform):
        w = spec.b - spec.a
        return Uniform(spec.a + lo * w, spec.a + hi * w)
    if isinstance(spec, QuantileTable):
        return _restrict_table(spec, lo, hi)
    if isinstance(spec, MonotoneDensity) and spec.table is not None:
        tab = _restrict_table(spec.table, lo, hi)
        a, b = tab.x[0], tab.x[-1]
        mu = _table_integral(tab, 0, 1)
        if not (a < mu < b):
            return None
        return MonotoneDensity(a, b, mu, spec.direction, tab)
    return None


def _restrict_table(table: QuantileTable, lo, hi) -> QuantileTable:
    width = hi - lo
    qs = [lo] + [q for q in table.q if lo < q < hi] + [hi]
    xs = [quantile(table, q) if q > 0 else table.x[0] for q in qs]
    return QuantileTable(tuple((q - lo) / width for q in qs), tuple(xs))


def _sharpness(specs, lo, hi, budget):
    """Whether an implemented JM test certifies the tail-conditional marginals."""
    from .criteria import decide

    if len(specs) == 1:
        return True, "single_marginal"
    for s in specs:
        sup = essential_support(s)
        if not sup.bounded:
            # conditional on one tail, the support is half bounded: no constant sum exists
            return False, "tail_conditional_support_unbounded"
    tails = [tail_conditional(s, lo, hi) for s in specs]
    if any(t is None for t in tails):
        return False, "tail_conditional_law_unavailable"
    verdict = decide(tails, lp_budget=budget, budget=budget, use_heuristic=False)
    return verdict.mixable, f"tail_conditional_{verdict.status.value}:{verdict.reason}"


# ---------------------------------------------------------------------------
# rearrangement estimates


@dataclass(frozen=True)
class RiskBoundReport:
    """Bounds and arrangement estimates for one side of the VaR problem.

    ``side`` is ``"worst"`` (``phi`` is the upper tail average and ``estimate``
    the best max-min row sum found) or ``"best"`` (lower tail average and the
    best min-max row sum). ``epsilon`` is half the summed grid meshes.
    """

    side: str
    p: object
    phi: object
    estimate: object
    sharp: bool
    N: int
    epsilon: object
    diagnostics: dict = field(default_factory=dict, compare=False)

    @property
    def wvar_estimate(self):
        return self.estimate if self.side == "worst" else None

    @property
    def bvar_estimate(self):
        return self.estimate if self.side == "best" else None


def _grids(specs, N, window):
    return [quantile_grid(s, N, window) for s in specs]


def _mesh(grid):
    if len(grid) < 2:
        return 0
    return max(b - a for a, b in zip(grid, grid[1:]))


def _estimate(specs, p, N, restarts, seed, side, budget):
    _check_p(p)
    specs = list(specs)
    if not specs:
        raise ValueError("need at least one distribution")
    if N < 2:
        raise ValueError("N must be at least 2")
    exact_p = num.is_exact(p)
    one = Fraction(1) if exact_p else 1.0
    zero = Fraction(0) if exact_p else 0.0
    lo, hi = (p, one) if side == "worst" else (zero, p)
    phi = phi_upper_bound(specs, p) if side == "worst" else phi_lower_bound(specs, p)
    grids = _grids(specs, N, (lo, hi))
    eps = num.xsum(_mesh(g) for g in grids) / 2
    sharp, why = _sharpness(specs, lo, hi, budget)
    if len(specs) == 1:
        est = quantile(specs[0], p)
        return RiskBoundReport(side, p, phi, est, True, N, eps, dict(sharp_reason=why))
    cols = [list(g) for g in grids]
    if side == "worst":
        inst = MatrixInstance.from_columns([[-x for x in c] for c in cols])
        res = local_search(inst, "minimax", restarts, seed)
        est = -res.T
    else:
        inst = MatrixInstance.from_columns(cols)
        res = local_search(inst, "minimax", restarts, seed)
        est = res.T
    diag = dict(sharp_reason=why, exact_mix=res.exact_mix, restarts=restarts, seed=seed,
                grid_average=num.xsum(num.xsum(c) / N for c in cols))
    return RiskBoundReport(side, p, phi, est, sharp, N, eps, diag)


def wvar_estimate(specs: Sequence[DistributionSpec], p, N: int = 1000, restarts: int = 20,
                  seed: int = 0, budget: Optional[int] = None) -> RiskBoundReport:
    """Largest minimum row sum found over arrangements of the upper-tail grids on ``(p, 1]``."""
    return _estimate(specs, p, N, restarts, seed, "worst", budget)


def bvar_estimate(specs: Sequence[DistributionSpec], p, N: int = 1000, restarts: int = 20,
                  seed: int = 0, budget: Optional[int] = None) -> RiskBoundReport:
    """Smallest maximum row sum found over arrangements of the lower-tail grids on ``(0, p]``."""
    return _estimate(specs, p, N, restarts, seed, "best", budget)


# ---------------------------------------------------------------------------
# aggregate laws and convex order


def comonotone_sum(specs: Sequence[DistributionSpec], N: int) -> DiscreteDistribution:
    """Law of ``F_1^{-1}(U) + ... + F_n^{-1}(U)`` on the common ``N``-point midpoint grid."""
    grids = _grids(specs, N, (0, 1))
    return uniform_on([num.xsum(vals) for vals in zip(*grids)])


@dataclass(frozen=True)
class StopLossCurve:
    """``(t, E[(S - t)_+])`` pairs."""

    points: tuple

    def value(self, t):
        for x, v in self.points:
            if x == t:
                return v
        raise KeyError(t)


def stop_loss_value(dist: DiscreteDistribution, t):
    return num.xsum(w * max(x - t, 0) for x, w in zip(dist.points, dist.weights))


def stop_loss(dist: DiscreteDistribution, t_grid=None) -> StopLossCurve:
    ts = dist.points if t_grid is None else sorted(t_grid)
    return StopLossCurve(tuple((t, stop_loss_value(dist, t)) for t in ts))


def convex_order_leq(s1: DiscreteDistribution, s2: DiscreteDistribution,
                     tol: float = num.DEFAULT_TOL) -> bool:
    """``s1`` precedes ``s2`` in convex order.

    Equal means plus ``E(s1 - t)_+ <= E(s2 - t)_+`` at every support point of
    either law; both stop-loss functions are piecewise linear with kinks only
    there, so this is exact.
    """
    if not num.eq(s1.mean, s2.mean, tol):
        return False
    ts = sorted(set(s1.points) | set(s2.points))
    return all(num.leq(stop_loss_value(s1, t), stop_loss_value(s2, t), tol) for t in ts)


def arrangement_sum_law(result) -> DiscreteDistribution:
    """Law of the row sum under a uniformly chosen row of an arrangement."""
    return uniform_on(list(result.row_sums))
