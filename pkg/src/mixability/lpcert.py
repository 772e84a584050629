"""Exact joint mixability of finite discrete marginals by linear programming.

A joint mix with center ``K`` is a probability table on the grid points
``(x_1, ..., x_n)`` of ``supp(F_1) x ... x supp(F_n)`` with ``sum x_i = K``
whose margins are the ``F_i``. Feasibility of that transportation system is
decided by a phase-1 simplex in exact rational arithmetic. A feasible basis
gives the table; an infeasible one gives simplex multipliers ``y`` with
``sum_i y_i(x_i) <= 0`` on the grid and ``sum_i E y_i(X_i) > 0``, which are
rescaled into functions ``f_i`` with

    sum_i f_i(x_i) >= 1 on the grid   and   sum_i E f_i(X_i) < 1.

No table can satisfy both, so such ``f_i`` certify that the marginals are not
jointly mixable with center ``K``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Tuple

from . import _numeric as num
from .distributions import DiscreteDistribution
from .exceptions import BudgetExceeded, InexactInputError, MixabilityError
from .verdict import Verdict, mixable, not_mixable


@dataclass(frozen=True)
class JointPmf:
    """Joint law on the hyperplane ``sum x_i = K``."""

    K: Fraction
    grid: Tuple[Tuple, ...]
    masses: Tuple

    @property
    def n(self) -> int:
        return len(self.grid[0]) if self.grid else 0


@dataclass(frozen=True)
class DualCertificate:
    """Functions ``f_i`` tabulated on ``supp(F_i)`` separating the margins from ``K``."""

    K: Fraction
    functions: Tuple[dict, ...]

    def integral(self, discretes: Sequence[DiscreteDistribution]):
        return num.xsum(
            w * f[x] for f, d in zip(self.functions, discretes) for x, w in zip(d.points, d.weights)
        )


@dataclass(frozen=True)
class VerificationResult:
    ok: bool
    reason: str = "ok"

    def __bool__(self):
        return self.ok


# ---------------------------------------------------------------------------
# hyperplane grid


def default_center(discretes: Sequence[DiscreteDistribution]) -> Fraction:
    return num.xsum(d.mean for d in discretes)


def grid_size(discretes: Sequence[DiscreteDistribution], K) -> int:
    """Number of support tuples on the hyperplane ``sum x_i = K``."""
    partial = {Fraction(0) if num.is_exact(K) else 0.0: 1}
    for d in discretes[:-1]:
        nxt: dict = {}
        for s, c in partial.items():
            for x in d.points:
                nxt[s + x] = nxt.get(s + x, 0) + c
        partial = nxt
    last = set(discretes[-1].points)
    return sum(c for s, c in partial.items() if K - s in last)


def hyperplane_grid(discretes: Sequence[DiscreteDistribution], K) -> list:
    """Support index tuples ``(k_1, ..., k_n)`` with ``sum_i points_i[k_i] = K``, in lex order."""
    n = len(discretes)
    pts = [d.points for d in discretes]
    lo = [min(p) for p in pts]
    hi = [max(p) for p in pts]
    # bounds on what coordinates i.. can still contribute
    rest_lo = [num.xsum(lo[i:]) for i in range(n)] + [0]
    rest_hi = [num.xsum(hi[i:]) for i in range(n)] + [0]
    last_index = {x: k for k, x in enumerate(pts[-1])}
    out = []

    def walk(i, acc, prefix):
        if i == n - 1:
            k = last_index.get(K - acc)
            if k is not None:
                out.append(prefix + (k,))
            return
        for k, x in enumerate(pts[i]):
            s = acc + x
            if s + rest_lo[i + 1] <= K <= s + rest_hi[i + 1]:
                walk(i + 1, s, prefix + (k,))

    walk(0, Fraction(0), ())
    return out


# ---------------------------------------------------------------------------
# phase-1 revised simplex


class _PhaseOne:
    """Phase-1 simplex for ``A h = b, h >= 0`` with 0/1 columns, Bland's rule.

    Column ``g`` of ``A`` has a one in row ``offset[i] + k_i`` for every
    marginal ``i``; artificial variables ``G..G+R-1`` start in the basis.
    """

    def __init__(self, b, offsets, grid):
        self.R = len(b)
        self.G = len(grid)
        self.rows = [tuple(off + k for off, k in zip(offsets, g)) for g in grid]
        self.basis = [self.G + r for r in range(self.R)]
        self.binv = [[Fraction(int(r == c)) for c in range(self.R)] for r in range(self.R)]
        self.x = [Fraction(v) for v in b]
        self.pivots = 0

    def duals(self):
        y = [Fraction(0)] * self.R
        for r, var in enumerate(self.basis):
            if var >= self.G:
                row = self.binv[r]
                for c in range(self.R):
                    if row[c]:
                        y[c] += row[c]
        return y

    def entering(self, y):
        for g, rows in enumerate(self.rows):
            if sum(y[r] for r in rows) > 0:  # reduced cost -sum(y) < 0
                return g
        in_basis = set(self.basis)
        for r in range(self.R):
            var = self.G + r
            if var not in in_basis and y[r] > 1:
                return var
        return None

    def column(self, var):
        if var < self.G:
            rows = self.rows[var]
            return [sum(self.binv[r][c] for c in rows) for r in range(self.R)]
        c = var - self.G
        return [self.binv[r][c] for r in range(self.R)]

    def pivot(self, r, var, u):
        piv = u[r]
        prow = [v / piv for v in self.binv[r]]
        self.binv[r] = prow
        xr = self.x[r] / piv
        self.x[r] = xr
        for s in range(self.R):
            if s != r and u[s]:
                f = u[s]
                row = self.binv[s]
                self.binv[s] = [a - f * p for a, p in zip(row, prow)]
                self.x[s] -= f * xr
        self.basis[r] = var
        self.pivots += 1

    def solve(self):
        while True:
            y = self.duals()
            var = self.entering(y)
            if var is None:
                return y
            u = self.column(var)
            best = None
            for r in range(self.R):
                if u[r] > 0:
                    key = (self.x[r] / u[r], self.basis[r])
                    if best is None or key < best[0]:
                        best = (key, r)
            if best is None:  # phase-1 objective is bounded below by 0
                raise MixabilityError("phase-1 simplex reported unboundedness")
            self.pivot(best[1], var, u)

    def infeasibility(self):
        return sum((self.x[r] for r, var in enumerate(self.basis) if var >= self.G), Fraction(0))


def _require_exact(discretes, K):
    if not all(d.exact for d in discretes):
        raise InexactInputError("exact LP needs rational points and weights")
    if K is not None and not num.is_exact(K):
        raise InexactInputError("exact LP needs a rational center K")


def jm_lp_decide(discretes: Sequence[DiscreteDistribution], K=None,
                 budget: Optional[int] = None) -> Verdict:
    """Decide joint mixability with center ``K`` (default: sum of means).

    Returns ``MIXABLE`` with a :class:`JointPmf` or ``NOT_MIXABLE`` with a
    :class:`DualCertificate`; both are re-validated before returning.
    """
    discretes = list(discretes)
    if not discretes:
        raise ValueError("need at least one distribution")
    _require_exact(discretes, K)
    budget = num.DEFAULT_LP_BUDGET if budget is None else budget
    K = default_center(discretes) if K is None else Fraction(K)
    n = len(discretes)
    size = grid_size(discretes, K)
    if size > budget:
        raise BudgetExceeded(f"hyperplane grid has {size} points, budget is {budget}",
                             required=size, budget=budget)
    if size == 0:
        cert = DualCertificate(K, tuple({x: Fraction(0) for x in d.points} for d in discretes))
        _validated(verify_dual(discretes, cert, K))
        return not_mixable("empty_hyperplane_grid", cert, K=K, grid_size=0, pivots=0)

    grid = hyperplane_grid(discretes, K)
    offsets, b = [], []
    for d in discretes:
        offsets.append(len(b))
        b.extend(d.weights)
    lp = _PhaseOne(b, offsets, grid)
    y = lp.solve()
    beta = lp.infeasibility()
    if beta == 0:
        mass = {}
        for r, var in enumerate(lp.basis):
            if var < lp.G and lp.x[r] > 0:
                mass[var] = mass.get(var, Fraction(0)) + lp.x[r]
        cols = sorted(mass)
        pts = [d.points for d in discretes]
        pmf = JointPmf(K, tuple(tuple(pts[i][k] for i, k in enumerate(grid[g])) for g in cols),
                       tuple(mass[g] for g in cols))
        _validated(verify_primal(discretes, pmf))
        return mixable("lp_feasible", pmf, K=K, grid_size=size, pivots=lp.pivots)

    inv_n = Fraction(1, n)
    funcs = tuple(
        {x: inv_n - y[off + k] / beta for k, x in enumerate(d.points)}
        for off, d in zip(offsets, discretes)
    )
    cert = DualCertificate(K, funcs)
    _validated(verify_dual(discretes, cert, K))
    return not_mixable("lp_infeasible", cert, K=K, grid_size=size, pivots=lp.pivots,
                       infeasibility=beta)


def _validated(check: VerificationResult):
    if not check:
        raise MixabilityError(f"certificate failed self-check: {check.reason}")


# ---------------------------------------------------------------------------
# verification


def verify_primal(discretes: Sequence[DiscreteDistribution], pmf: JointPmf) -> VerificationResult:
    """Exact check of the hyperplane support, nonnegativity, total mass and margins."""
    if len(pmf.grid) != len(pmf.masses):
        return VerificationResult(False, "grid_mass_length_mismatch")
    if any(len(g) != len(discretes) for g in pmf.grid):
        return VerificationResult(False, "dimension_mismatch")
    if any(m < 0 for m in pmf.masses):
        return VerificationResult(False, "negative_mass")
    for g in pmf.grid:
        if num.xsum(g) != pmf.K:
            return VerificationResult(False, "off_hyperplane")
    if num.xsum(pmf.masses) != 1:
        return VerificationResult(False, "total_mass")
    for i, d in enumerate(discretes):
        margin: dict = {}
        for g, m in zip(pmf.grid, pmf.masses):
            margin[g[i]] = margin.get(g[i], 0) + m
        target = d.pmf()
        keys = set(margin) | set(target)
        for x in keys:
            if margin.get(x, 0) != target.get(x, 0):
                return VerificationResult(False, f"margin_mismatch[{i}]")
    return VerificationResult(True)


def verify_dual(discretes: Sequence[DiscreteDistribution], cert: DualCertificate,
                K=None) -> VerificationResult:
    """Exhaustive check of ``sum f_i(x_i) >= 1`` on the grid and ``sum E f_i < 1``."""
    K = cert.K if K is None else K
    if len(cert.functions) != len(discretes):
        return VerificationResult(False, "dimension_mismatch")
    for f, d in zip(cert.functions, discretes):
        if any(x not in f for x in d.points):
            return VerificationResult(False, "function_not_defined_on_support")
    if not cert.integral(discretes) < 1:
        return VerificationResult(False, "integral_not_below_one")
    pts = [d.points for d in discretes]
    for g in hyperplane_grid(discretes, K):
        if num.xsum(f[pts[i][k]] for i, (f, k) in enumerate(zip(cert.functions, g))) < 1:
            return VerificationResult(False, "pointwise_below_one")
    return VerificationResult(True)
