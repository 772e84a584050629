"""Analytic mixability conditions and the verdict dispatcher.

Each check returns a :class:`~mixability.verdict.Verdict`. Conditions that are
"if and only if" may return either decisive status; sufficient conditions only
return ``MIXABLE`` or ``UNKNOWN``; necessary screens only return
``NOT_MIXABLE`` or ``UNKNOWN``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from . import _numeric as num
from .distributions import (
    BoundedBelowDensity,
    ConcaveDensity,
    DiscreteDistribution,
    DistributionSpec,
    Elliptical,
    GAUSSIAN_GENERATORS,
    INFINITE_MEAN_GENERATORS,
    MonotoneDensity,
    Normal,
    SupportInterval,
    Uniform,
    essential_support,
    mean,
)
from .exceptions import BudgetExceeded, SpecError
from .verdict import Verdict, mixable, not_mixable, unknown

DEFAULT_P_GRID = (1, Fraction(3, 2), 2, 3, math.inf)


def _require(spec, kinds, name):
    if not isinstance(spec, kinds):
        raise TypeError(f"{name} needs {' or '.join(k.__name__ for k in kinds)}, "
                        f"got {type(spec).__name__}")


def _check_n(n):
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")


# ---------------------------------------------------------------------------
# single-condition checks


def mean_condition(support: SupportInterval, mu, n: int, tol: float = num.DEFAULT_TOL) -> bool:
    """``a + (b - a)/n <= mu <= b - (b - a)/n``; necessary for ``n``-CM on ``[a, b]``."""
    _check_n(n)
    if not support.bounded:
        raise ValueError("mean condition needs bounded support; use norm_check instead")
    a, b = support.a, support.b
    span = Fraction(b - a) if num.all_exact([a, b]) else float(b - a)
    return num.leq(a + span / n, mu, tol) and num.leq(mu, b - span / n, tol)


def cm_monotone_density(spec: MonotoneDensity, n: int, tol: float = num.DEFAULT_TOL) -> Verdict:
    """A monotone density on ``[a, b]`` is ``n``-CM exactly under the mean condition."""
    _require(spec, (MonotoneDensity,), "cm_monotone_density")
    _check_n(n)
    ok = mean_condition(essential_support(spec), spec.mean, n, tol)
    diag = dict(n=n, a=spec.a, b=spec.b, mu=spec.mean)
    if ok:
        return mixable("monotone_density_mean_condition", None, K=n * spec.mean, **diag)
    return not_mixable("monotone_density_mean_condition_violated", None, **diag)


def cm_concave_density(spec: ConcaveDensity, n: int) -> Verdict:
    """Concave densities on a bounded interval are ``n``-CM for every ``n >= 3``."""
    _require(spec, (ConcaveDensity,), "cm_concave_density")
    _check_n(n)
    if n >= 3:
        return mixable("concave_density", None, n=n)
    return unknown("concave_density_needs_n_at_least_3", n=n)


def cm_density_floor(spec: BoundedBelowDensity, n: int, tol: float = num.DEFAULT_TOL) -> Verdict:
    """Sufficient: the density is at least ``3 / (n (b - a))`` on ``[a, b]``."""
    _require(spec, (BoundedBelowDensity,), "cm_density_floor")
    _check_n(n)
    threshold = Fraction(3, n) / (spec.b - spec.a) if num.all_exact([spec.a, spec.b]) \
        else 3.0 / (n * float(spec.b - spec.a))
    diag = dict(n=n, density_floor=spec.density_floor, threshold=threshold)
    if num.leq(threshold, spec.density_floor, tol):
        return mixable("density_floor", None, **diag)
    return unknown("density_floor_below_threshold", **diag)


def jm_monotone_densities(specs: Sequence[DistributionSpec], tol: float = num.DEFAULT_TOL) -> Verdict:
    """Monotone densities sharing one direction are JM exactly when

    ``sum a_i + max(b_i - a_i) <= sum mu_i <= sum b_i - max(b_i - a_i)``.

    Uniform laws count as monotone in either direction. Mixed directions fall
    outside this condition and give ``UNKNOWN``.
    """
    specs = list(specs)
    if not specs:
        raise ValueError("need at least one distribution")
    for s in specs:
        _require(s, (MonotoneDensity, Uniform), "jm_monotone_densities")
    directions = {s.direction for s in specs if isinstance(s, MonotoneDensity)}
    if len(directions) > 1:
        return unknown("mixed_monotone_directions")
    lo = num.xsum(s.a for s in specs)
    hi = num.xsum(s.b for s in specs)
    span = max(s.b - s.a for s in specs)
    total = num.xsum(mean(s) for s in specs)
    diag = dict(sum_a=lo, sum_b=hi, max_span=span, K=total)
    if num.leq(lo + span, total, tol) and num.leq(total, hi - span, tol):
        return mixable("monotone_densities_joint_condition", None, **diag)
    return not_mixable("monotone_densities_joint_condition_violated", None, **diag)


def generator_tag(spec) -> str:
    if isinstance(spec, Normal):
        return "gaussian"
    tag = spec.generator.lower()
    return "gaussian" if tag in GAUSSIAN_GENERATORS else tag


def jm_elliptical(specs: Sequence[DistributionSpec], tol: float = num.DEFAULT_TOL) -> Verdict:
    """Elliptical laws with a common generator are JM exactly when ``sum sigma >= 2 max sigma``."""
    specs = list(specs)
    if not specs:
        raise ValueError("need at least one distribution")
    for s in specs:
        _require(s, (Elliptical, Normal), "jm_elliptical")
    tags = {generator_tag(s) for s in specs}
    if len(tags) > 1:
        raise SpecError(f"elliptical laws must share one generator, got {sorted(tags)}")
    sigmas = [s.sigma for s in specs]
    if tags & INFINITE_MEAN_GENERATORS and any(v > 0 for v in sigmas):
        raise SpecError("generator has no finite mean, so the joint center is undefined")
    total = num.xsum(sigmas)
    top = max(sigmas)
    diag = dict(sigma_sum=total, sigma_max=top, K=num.xsum(s.mu for s in specs))
    if num.leq(2 * top, total, tol):
        return mixable("elliptical_sigma_condition", None, **diag)
    return not_mixable("elliptical_sigma_condition_violated", None, **diag)


def jm_support_screen(specs: Sequence[DistributionSpec], tol: float = num.DEFAULT_TOL) -> Verdict:
    """Necessary: no marginal can stray from its mean further than the others can compensate.

    ``b_i - mu_i <= sum_{j != i} (mu_j - a_j)`` and the mirrored bound, which is
    the sup-norm case of the norm inequalities with means as the split.
    """
    specs = list(specs)
    try:
        mus = [mean(s) for s in specs]
    except (ValueError, TypeError):
        return unknown("support_screen_needs_means")
    sups = [essential_support(s) for s in specs]
    up = [s.b - m for s, m in zip(sups, mus)]
    down = [m - s.a for s, m in zip(sups, mus)]
    if any(math.isinf(float(v)) for v in up + down):
        up = [float(v) for v in up]
        down = [float(v) for v in down]
    for i in range(len(specs)):
        rest_down = num.xsum(down[:i] + down[i + 1:])
        rest_up = num.xsum(up[:i] + up[i + 1:])
        if not num.leq(up[i], rest_down, tol):
            return not_mixable("support_screen_violated", None, index=i, side="upper",
                               lhs=up[i], rhs=rest_down)
        if not num.leq(down[i], rest_up, tol):
            return not_mixable("support_screen_violated", None, index=i, side="lower",
                               lhs=down[i], rhs=rest_up)
    return unknown("support_screen_passed")


# ---------------------------------------------------------------------------
# L^p norm inequalities


@dataclass(frozen=True)
class NormViolation:
    """One failed norm inequality.

    ``kind`` is ``"joint"`` (per marginal ``index`` with center ``split``) or
    ``"complete"`` (homogeneous case at level ``t``, with ``s`` its partner).
    ``side`` tells which of the two inequalities failed.
    """

    kind: str
    index: Optional[int]
    p: object
    side: str
    lhs: object
    rhs: object
    split: Optional[tuple] = None
    t: object = None
    s: object = None


@dataclass(frozen=True)
class NormCheckReport:
    violations: tuple
    p_grid: tuple
    splits: tuple
    t_grid: tuple
    K: object
    homogeneous: bool

    @property
    def ok(self) -> bool:
        return not self.violations


def _parse_p(p):
    if isinstance(p, str):
        if p.strip().lower() in ("inf", "infinity", "oo"):
            return math.inf
        p = Fraction(p)
    if isinstance(p, bool) or not (p >= 1):
        raise ValueError(f"norm order must be >= 1, got {p!r}")
    return p


def lp_norm(values, weights, p):
    """``||Y||_p`` of a discrete nonnegative variable; exact for ``p`` in {1, inf}."""
    pairs = [(v, w) for v, w in zip(values, weights) if v != 0]
    if not pairs:
        return Fraction(0) if num.all_exact(values) else 0.0
    if p == math.inf:
        return max(abs(v) for v, _ in pairs)
    if p == 1:
        return num.xsum(abs(v) * w for v, w in pairs)
    pf = float(p)
    return math.fsum(abs(float(v)) ** pf * float(w) for v, w in pairs) ** (1.0 / pf)


def _pos(d: DiscreteDistribution, c, p):
    return lp_norm([max(x - c, 0) for x in d.points], d.weights, p)


def _neg(d: DiscreteDistribution, c, p):
    return lp_norm([max(c - x, 0) for x in d.points], d.weights, p)


def _violates(lhs, rhs, tol):
    return not num.leq(lhs, rhs, tol)


def norm_check(discretes: Sequence[DiscreteDistribution], K=None, p_grid=None, splits=None,
               t_grid=None, tol: float = num.DEFAULT_TOL) -> NormCheckReport:
    """Evaluate the L^p necessary conditions for joint (and complete) mixability.

    For every split ``(c_1..c_n)`` summing to ``K`` and every ``p``:
    ``||(X_i - c_i)_+|| <= sum_{j != i} ||(X_j - c_j)_-||`` and the mirror.
    When all marginals coincide (``n >= 2``), also checks for each ``t``
    ``||(X - t)_+|| <= (n-1) ||(X - s)_-||`` and the mirror with
    ``s = (K - t)/(n - 1)``.
    """
    discretes = list(discretes)
    if not discretes:
        raise ValueError("need at least one distribution")
    n = len(discretes)
    means = [d.mean for d in discretes]
    K = num.xsum(means) if K is None else K
    p_grid = tuple(_parse_p(p) for p in (DEFAULT_P_GRID if p_grid is None else p_grid))
    if splits is None:
        splits = [tuple(means)]
    splits = [tuple(s) for s in splits]
    for s in splits:
        if len(s) != n:
            raise ValueError(f"split {s} has {len(s)} entries, expected {n}")
        if not num.eq(num.xsum(s), K, tol):
            raise ValueError(f"split {s} does not sum to K={K}")

    violations = []
    for split in splits:
        for p in p_grid:
            pos = [_pos(d, c, p) for d, c in zip(discretes, split)]
            neg = [_neg(d, c, p) for d, c in zip(discretes, split)]
            for i in range(n):
                rest_neg = num.xsum(neg[:i] + neg[i + 1:])
                rest_pos = num.xsum(pos[:i] + pos[i + 1:])
                if _violates(pos[i], rest_neg, tol):
                    violations.append(NormViolation("joint", i, p, "+", pos[i], rest_neg, split))
                if _violates(neg[i], rest_pos, tol):
                    violations.append(NormViolation("joint", i, p, "-", neg[i], rest_pos, split))

    homogeneous = n >= 2 and all(d == discretes[0] for d in discretes)
    ts: tuple = ()
    if homogeneous:
        d = discretes[0]
        mu = K / n
        if t_grid is None:
            ts = tuple(sorted(set(d.points) | {mu}))
        else:
            ts = tuple(t_grid)
        for t in ts:
            s = (K - t) / (n - 1)
            for p in p_grid:
                lhs_up, rhs_up = _pos(d, t, p), (n - 1) * _neg(d, s, p)
                lhs_dn, rhs_dn = _neg(d, t, p), (n - 1) * _pos(d, s, p)
                if _violates(lhs_up, rhs_up, tol):
                    violations.append(NormViolation("complete", None, p, "+", lhs_up, rhs_up, t=t, s=s))
                if _violates(lhs_dn, rhs_dn, tol):
                    violations.append(NormViolation("complete", None, p, "-", lhs_dn, rhs_dn, t=t, s=s))
    return NormCheckReport(tuple(violations), p_grid, tuple(splits), ts, K, homogeneous)


# ---------------------------------------------------------------------------
# dispatcher


def _expand(specs, n):
    specs = list(specs)
    if not specs:
        raise ValueError("need at least one distribution")
    if n is None:
        return specs
    _check_n(n)
    if len(specs) == 1:
        return specs * n
    if len(specs) != n:
        raise ValueError(f"got {len(specs)} specs but n={n}")
    return specs


def _symmetric_unimodal(spec) -> bool:
    if isinstance(spec, (Uniform, Normal)):
        return True
    if isinstance(spec, Elliptical):
        return generator_tag(spec) == "gaussian"
    return bool(getattr(spec, "symmetric_unimodal", False))


def _degenerate(spec) -> Optional[bool]:
    sup = essential_support(spec)
    if not sup.bounded:
        return False
    return sup.a == sup.b


def decide(specs: Sequence[DistributionSpec], n: Optional[int] = None, *,
           budget: Optional[int] = None, lp_budget: Optional[int] = None,
           tol: float = num.DEFAULT_TOL, restarts: int = 50, seed: int = 0,
           use_heuristic: bool = True) -> Verdict:
    """Three-valued verdict for ``specs`` (joint) or one spec with ``n`` copies (complete).

    First decisive answer wins, in this order: exact discrete path, iff
    conditions, sufficient conditions, necessary screens, heuristic search.
    """
    from . import lpcert, rearrange

    marginals = _expand(specs, n)
    count = len(marginals)
    homogeneous = all(s == marginals[0] for s in marginals)
    skipped = {}

    # exact discrete path
    discrete = all(isinstance(s, DiscreteDistribution) for s in marginals)
    if discrete and all(s.exact for s in marginals):
        try:
            return lpcert.jm_lp_decide(marginals, budget=lp_budget)
        except BudgetExceeded as exc:
            skipped["lp"] = str(exc)
    if discrete:
        bf_budget = num.env_budget() if budget is None else budget
        try:
            cols = rearrange.expand_to_columns(marginals)
            size = rearrange.MatrixInstance.from_columns(cols).enumeration_size()
        except (BudgetExceeded, SpecError) as exc:
            skipped["matrix"] = str(exc)
            size = None
        if size is not None and size <= bf_budget:
            return rearrange.jm_from_matrix(marginals, budget=bf_budget)

    # iff conditions
    if count == 1:
        if _degenerate(marginals[0]):
            return mixable("point_mass", None, K=essential_support(marginals[0]).a)
        return not_mixable("single_nondegenerate_marginal")
    if homogeneous and isinstance(marginals[0], MonotoneDensity):
        return cm_monotone_density(marginals[0], count, tol)
    if all(isinstance(s, (MonotoneDensity, Uniform)) for s in marginals):
        v = jm_monotone_densities(marginals, tol)
        if v.decisive:
            return v
    if all(isinstance(s, (Normal, Elliptical)) for s in marginals):
        tags = {generator_tag(s) for s in marginals}
        if len(tags) == 1 and not (tags & INFINITE_MEAN_GENERATORS):
            return jm_elliptical(marginals, tol)

    # sufficient conditions
    if homogeneous:
        spec = marginals[0]
        if _symmetric_unimodal(spec):
            return mixable("symmetric_unimodal", None, n=count)
        if isinstance(spec, ConcaveDensity):
            v = cm_concave_density(spec, count)
            if v.decisive:
                return v
        if isinstance(spec, BoundedBelowDensity):
            v = cm_density_floor(spec, count, tol)
            if v.decisive:
                return v

    # necessary screens
    if homogeneous:
        sup = essential_support(marginals[0])
        if sup.bounded:
            try:
                mu = mean(marginals[0])
            except (ValueError, TypeError):
                mu = None
            if mu is not None and not mean_condition(sup, mu, count, tol):
                return not_mixable("mean_condition_violated", None, n=count, a=sup.a, b=sup.b, mu=mu)
    v = jm_support_screen(marginals, tol)
    if v.decisive:
        return v
    if discrete:
        report = norm_check(marginals, tol=tol)
        if not report.ok:
            return not_mixable("norm_inequality_violated", report)

    # heuristic search
    if discrete and use_heuristic and "matrix" not in skipped:
        v = rearrange.jm_from_matrix(marginals, budget=0, restarts=restarts, seed=seed)
        if v.decisive:
            return v
    return unknown("no_condition_applies", **skipped)
