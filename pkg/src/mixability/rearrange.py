"""Min-max arrangement of matrix columns.

Row ``i`` of an arrangement collects ``a[perms[j][i], j]`` from every column
``j``; the row sums ``t_i`` are what we try to flatten. Two solvers are offered:
exhaustive enumeration (the oracle) and a counter-monotone column sweep with
random restarts.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Tuple

import numpy as np

from . import _numeric as num
from .distributions import DiscreteDistribution
from .exceptions import BudgetExceeded, SpecError
from .verdict import Verdict, mixable, not_mixable, unknown

OBJECTIVES = ("minimax", "range", "variance")

# rows of the vectorized inner block in brute_force
_INNER_BLOCK = 200_000
DEFAULT_EXPANSION_BUDGET = 10_000


@dataclass(frozen=True)
class MatrixInstance:
    """``m x n`` matrix: ``m`` rows (workers per step), ``n`` columns (steps)."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=object)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise SpecError("matrix instance must be a non-empty 2-d array")
        flat = list(v.ravel())
        if not all(num.is_finite(x) for x in flat):
            raise SpecError("matrix entries must be finite")
        if num.all_exact(flat):
            v = np.array([Fraction(x) for x in flat], dtype=object).reshape(v.shape)
        else:
            v = np.array([float(x) for x in flat], dtype=float).reshape(v.shape)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_columns(cls, columns: Sequence[Sequence]) -> "MatrixInstance":
        lengths = {len(c) for c in columns}
        if len(lengths) != 1:
            raise SpecError("all columns must have the same length")
        rows = list(zip(*columns))
        return cls(np.array(rows, dtype=object))

    @property
    def m(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]

    @property
    def exact(self) -> bool:
        return self.values.dtype == object

    @property
    def total(self):
        return num.xsum(self.values.ravel())

    @property
    def lower_bound(self):
        """``(1/m) sum_ij a_ij``; no arrangement has a smaller maximum row sum."""
        return self.total / self.m

    def enumeration_size(self) -> int:
        return math.factorial(self.m) ** (self.n - 1)


@dataclass(frozen=True)
class Arrangement:
    """Column permutations; ``perms[j][i]`` is the entry of column ``j`` used by row ``i``."""

    perms: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        perms = tuple(tuple(int(x) for x in p) for p in self.perms)
        if not perms:
            raise SpecError("arrangement needs at least one permutation")
        m = len(perms[0])
        for p in perms:
            if sorted(p) != list(range(m)):
                raise SpecError(f"{p} is not a permutation of 0..{m - 1}")
        object.__setattr__(self, "perms", perms)

    @classmethod
    def identity(cls, m: int, n: int) -> "Arrangement":
        return cls(tuple(tuple(range(m)) for _ in range(n)))

    @property
    def m(self) -> int:
        return len(self.perms[0])

    @property
    def n(self) -> int:
        return len(self.perms)

    def canonical(self) -> "Arrangement":
        """Relabel rows so the first permutation is the identity."""
        inv = np.argsort(self.perms[0])
        return Arrangement(tuple(tuple(int(p[k]) for k in inv) for p in self.perms))

    def is_canonical(self) -> bool:
        return self.perms[0] == tuple(range(self.m))


@dataclass(frozen=True)
class SolveResult:
    """Arrangement plus its row sums.

    ``T`` is always the largest row sum; ``score`` is the value of the chosen
    objective (equal to ``T`` for ``minimax``).
    """

    objective: str
    T: object
    score: object
    arrangement: Arrangement
    row_sums: Tuple
    lower_bound: object
    exact_mix: bool
    instance: MatrixInstance
    method: str = "evaluate"
    diagnostics: dict = field(default_factory=dict, compare=False)

    @property
    def K(self):
        """Common row sum of an exact mix (the joint center)."""
        return self.lower_bound

    def rows(self) -> list:
        """Realized rows ``(a[perms[0][i], 0], ..., a[perms[n-1][i], n-1])``."""
        vals = self.instance.values
        perms = self.arrangement.perms
        return [tuple(vals[p[i], j] for j, p in enumerate(perms)) for i in range(self.arrangement.m)]


def _check_objective(objective):
    if objective not in OBJECTIVES:
        raise ValueError(f"objective must be one of {OBJECTIVES}, got {objective!r}")


def _score_rows(rows: np.ndarray, objective: str, exact: bool):
    """Vectorized comparison key per row of ``rows`` (shape ``(L, m)``)."""
    if objective == "minimax":
        return rows.max(axis=1)
    if objective == "range":
        return rows.max(axis=1) - rows.min(axis=1)
    if exact:
        # total is arrangement invariant, so sum of squares orders variance
        return (rows * rows).sum(axis=1)
    return rows.var(axis=1)


def _objective_value(row_sums, objective):
    if objective == "minimax":
        return max(row_sums)
    if objective == "range":
        return max(row_sums) - min(row_sums)
    m = len(row_sums)
    mu = num.xsum(row_sums) / m
    return num.xsum((t - mu) * (t - mu) for t in row_sums) / m


def evaluate(instance: MatrixInstance, arrangement: Arrangement,
             objective: str = "minimax", tol: float = num.DEFAULT_TOL) -> SolveResult:
    """Row sums ``t_i = sum_j a[sigma_j(i), j]`` and the derived objective values."""
    _check_objective(objective)
    if arrangement.m != instance.m or arrangement.n != instance.n:
        raise ValueError(
            f"arrangement is {arrangement.m}x{arrangement.n}, instance is {instance.m}x{instance.n}"
        )
    vals = instance.values
    row_sums = tuple(
        num.xsum(vals[p[i], j] for j, p in enumerate(arrangement.perms)) for i in range(instance.m)
    )
    lb = instance.lower_bound
    if instance.exact:
        exact_mix = all(t == row_sums[0] for t in row_sums)
    else:
        spread = max(row_sums) - min(row_sums)
        exact_mix = spread <= tol * max(1.0, max(abs(t) for t in row_sums))
    return SolveResult(
        objective=objective,
        T=max(row_sums),
        score=_objective_value(row_sums, objective),
        arrangement=arrangement,
        row_sums=row_sums,
        lower_bound=lb,
        exact_mix=exact_mix,
        instance=instance,
    )


def brute_force(instance: MatrixInstance, objective: str = "minimax",
                budget: Optional[int] = None) -> SolveResult:
    """Global optimum by enumerating every canonical arrangement.

    The first permutation is fixed to the identity, leaving ``(m!)^(n-1)``
    leaves. Ties go to the lexicographically smallest arrangement.
    """
    _check_objective(objective)
    budget = num.env_budget() if budget is None else budget
    m, n = instance.m, instance.n
    size = instance.enumeration_size()
    if size > budget:
        raise BudgetExceeded(
            f"brute force needs {size} leaf evaluations, budget is {budget}; use local_search",
            required=size, budget=budget,
        )
    A, _ = num.to_numeric_array(instance.values)
    exact = instance.exact
    perms = np.array(list(itertools.permutations(range(m))), dtype=np.intp)
    F = len(perms)
    free = n - 1
    if free == 0:
        best = Arrangement.identity(m, 1)
        res = evaluate(instance, best, objective)
        return _with(res, method="brute_force", leaves=1)

    k = 1
    while k < free and F ** (k + 1) <= _INNER_BLOCK:
        k += 1
    inner_cols = list(range(n - k, n))
    outer_cols = list(range(1, n - k))
    L = F ** k
    inner_idx = np.unravel_index(np.arange(L), (F,) * k) if k > 1 else (np.arange(L),)
    S = None
    for c, idx in zip(inner_cols, inner_idx):
        block = A[perms[idx], c]
        S = block if S is None else S + block

    best_key, best_choice = None, None
    for outer in itertools.product(range(F), repeat=len(outer_cols)):
        base = A[:, 0].copy()
        for c, o in zip(outer_cols, outer):
            base = base + A[perms[o], c]
        keys = _score_rows(S + base[None, :], objective, exact)
        i = int(np.argmin(keys))
        if best_key is None or keys[i] < best_key:
            best_key = keys[i]
            best_choice = tuple(outer) + tuple(int(ix[i]) for ix in inner_idx)

    arrangement = Arrangement((tuple(range(m)),) + tuple(tuple(perms[c]) for c in best_choice))
    res = evaluate(instance, arrangement, objective)
    return _with(res, method="brute_force", leaves=size)


def _with(res: SolveResult, method: str, **diag) -> SolveResult:
    d = dict(res.diagnostics)
    d.update(diag)
    return SolveResult(res.objective, res.T, res.score, res.arrangement, res.row_sums,
                       res.lower_bound, res.exact_mix, res.instance, method, d)


def _potential(sums, objective, exact):
    """Lexicographic (objective key, sum of squares); a sweep never increases it."""
    key = _score_rows(sums[None, :], objective, exact)[0]
    return key, (sums * sums).sum()


def _improves(new, old, exact, tol):
    if exact:
        return new < old
    for a, b in zip(new, old):
        slack = tol * max(1.0, abs(float(b)))
        if a < b - slack:
            return True
        if a > b + slack:
            return False
    return False


def _descend(cur, sums, A, desc, objective, exact, max_sweeps, tol, history):
    """Counter-monotone sweeps until a full sweep brings no improvement."""
    pot = _potential(sums, objective, exact)
    sweeps = 0
    while sweeps < max_sweeps:
        sweeps += 1
        for j in range(cur.shape[1]):
            partial = sums - cur[1][:, j]
            rows_up = np.argsort(partial, kind="stable")
            cur[0][rows_up, j] = desc[j]
            cur[1][rows_up, j] = A[desc[j], j]
            sums = partial + cur[1][:, j]
        new = _potential(sums, objective, exact)
        history.append(new[0])
        if not _improves(new, pot, exact, tol):
            return sums, new, sweeps, True
        pot = new
    return sums, pot, sweeps, False


class _State:
    """Index matrix and value matrix of one restart, indexable as ``state[0]``/``state[1]``."""

    __slots__ = ("idx", "val", "shape")

    def __init__(self, idx, val):
        self.idx, self.val, self.shape = idx, val, idx.shape

    def __getitem__(self, k):
        return self.idx if k == 0 else self.val

    def copy(self):
        return _State(self.idx.copy(), self.val.copy())


def _objective_floor(A, objective, exact):
    """A value no arrangement can beat, or ``None``."""
    m = A.shape[0]
    total = A.sum()
    if objective == "minimax":
        # the row holding a column maximum carries at least the other column minima
        mins = A.min(axis=0)
        single = max(A[:, j].max() + mins.sum() - mins[j] for j in range(A.shape[1]))
        mean = -(-total // m) if exact else total / m
        return max(mean, single)
    if objective == "range" and exact:
        return 0 if total % m == 0 else 1
    return None


def _at_floor(value, floor, exact, tol):
    if floor is None:
        return False
    if exact:
        return value <= floor
    return value <= floor + tol * max(1.0, abs(float(floor)))


def _restart(A, desc, rng, objective, exact, max_sweeps, kicks, tol):
    """Random shuffle, sweep descent, then seeded kicks that keep the best state."""
    m, n = A.shape
    idx = np.empty((m, n), dtype=np.intp)
    for j in range(n):
        idx[:, j] = rng.permutation(m)
    state = _State(idx, np.stack([A[idx[:, j], j] for j in range(n)], axis=1))
    history = [_potential(state.val.sum(axis=1), objective, exact)[0]]
    sums, pot, sweeps, converged = _descend(state, state.val.sum(axis=1), A, desc, objective,
                                            exact, max_sweeps, tol, history)
    floor = _objective_floor(A, objective, exact)
    used = 0
    while used < kicks and sums.max() != sums.min():
        if _at_floor(pot[0], floor, exact, tol):
            break
        used += 1
        trial = state.copy()
        j = int(rng.integers(n))
        top = int(np.argmax(sums))
        other = int(rng.integers(m))
        trial.idx[[top, other], j] = trial.idx[[other, top], j]
        trial.val[[top, other], j] = trial.val[[other, top], j]
        t_hist = []
        t_sums, t_pot, t_sweeps, t_conv = _descend(trial, trial.val.sum(axis=1), A, desc,
                                                   objective, exact, max_sweeps, tol, t_hist)
        sweeps += t_sweeps
        if not _improves(pot, t_pot, exact, tol):
            if _improves(t_pot, pot, exact, tol):
                history.append(t_pot[0])
            state, sums, pot, converged = trial, t_sums, t_pot, t_conv
    return state.idx, history, sweeps, converged, used


def local_search(instance: MatrixInstance, objective: str = "minimax", restarts: int = 10,
                 seed: int = 0, kicks: int = 100, max_sweeps: int = 10_000,
                 tol: float = 1e-12) -> SolveResult:
    """Counter-monotone column sweeps from random starts; best restart wins.

    Each sweep visits columns in order and re-sorts column ``j`` against the
    row sums of the other columns: the largest entry goes to the row with the
    smallest partial sum, ties by row index. Sweeps repeat until one brings
    no improvement of ``(objective, sum of squared row sums)``.

    A sweep fixed point is often not an exact mix, so each restart then tries
    up to ``kicks`` perturbations: swap the entry of the largest row with a
    random row in a random column, sweep again, and keep the result when it is
    no worse. Kicks stop early once the objective meets a simple lower bound.
    ``kicks=0`` gives the plain sweep.

    Restart ``r`` draws from ``SeedSequence(seed).spawn(restarts)[r]``, so the
    result does not depend on execution order.
    """
    _check_objective(objective)
    if restarts < 1:
        raise ValueError("restarts must be at least 1")
    m, n = instance.m, instance.n
    if m == 1 or n == 1:
        res = evaluate(instance, Arrangement.identity(m, n), objective)
        return _with(res, method="local_search", restarts=0, sweeps=[0], kicks=[0],
                     converged=True, histories=[[_plain(res.score)]])

    A, scale = num.to_numeric_array(instance.values)
    exact = scale is not None
    # largest first, ties by row index
    desc = []
    for j in range(n):
        col = A[:, j]
        desc.append(np.array(sorted(range(m), key=lambda r: (-col[r], r)), dtype=np.intp))

    best = None
    sweeps_all, kicks_all, histories, converged_all = [], [], [], []
    for child in np.random.SeedSequence(seed).spawn(restarts):
        rng = np.random.default_rng(child)
        idx, history, sweeps, converged, used = _restart(A, desc, rng, objective, exact,
                                                         max_sweeps, kicks, tol)
        arr = Arrangement(tuple(tuple(idx[:, j]) for j in range(n))).canonical()
        res = evaluate(instance, arr, objective)
        sweeps_all.append(sweeps)
        kicks_all.append(used)
        converged_all.append(converged)
        # comparison keys in internal units (integers when exact)
        histories.append([_plain(h) for h in history])
        if best is None or (res.score, res.arrangement.perms) < (best.score, best.arrangement.perms):
            best = res
    return _with(best, method="local_search", restarts=restarts, sweeps=sweeps_all,
                 kicks=kicks_all, converged=all(converged_all), histories=histories)


def _plain(x):
    return x.item() if hasattr(x, "item") else x


def solve(instance: MatrixInstance, objective="minimax", restarts=10, seed=0,
          exact: bool = False, budget: Optional[int] = None) -> SolveResult:
    """Brute force when ``exact`` and affordable, local search otherwise."""
    budget = num.env_budget() if budget is None else budget
    if exact and instance.enumeration_size() <= budget:
        return brute_force(instance, objective, budget)
    return local_search(instance, objective, restarts, seed)


# ---------------------------------------------------------------------------
# discrete uniform marginals as a matrix


def expand_to_columns(discretes: Sequence[DiscreteDistribution],
                      max_rows: int = DEFAULT_EXPANSION_BUDGET) -> list:
    """Equal-weight columns reproducing each law, all with the same length ``m``.

    Exact weights are expanded to their common denominator by replicating
    points. Float laws must already be equally weighted.
    """
    if not discretes:
        raise ValueError("need at least one distribution")
    if all(d.exact for d in discretes):
        m = num.common_denominator(w for d in discretes for w in d.weights)
        if m > max_rows:
            raise BudgetExceeded(f"expansion needs {m} rows, budget is {max_rows}",
                                 required=m, budget=max_rows)
        return [[x for x, w in zip(d.points, d.weights) for _ in range(int(w * m))]
                for d in discretes]
    for d in discretes:
        w0 = float(d.weights[0])
        if any(abs(float(w) - w0) > 1e-12 for w in d.weights):
            raise SpecError("float-mode distributions must have equal weights to form a matrix")
    m = math.lcm(*(d.size for d in discretes))
    if m > max_rows:
        raise BudgetExceeded(f"expansion needs {m} rows, budget is {max_rows}",
                             required=m, budget=max_rows)
    return [[float(x) for x in d.points for _ in range(m // d.size)] for d in discretes]


def jm_from_matrix(discretes: Sequence[DiscreteDistribution], budget: Optional[int] = None,
                   restarts: int = 50, seed: int = 0,
                   max_rows: int = DEFAULT_EXPANSION_BUDGET) -> Verdict:
    """Joint mixability of equal-weight discrete laws through the arrangement problem.

    The laws are JM exactly when some arrangement of their columns has all
    row sums equal to the lower bound. Brute force settles both directions;
    local search can only confirm mixability.
    """
    budget = num.env_budget() if budget is None else budget
    cols = expand_to_columns(discretes, max_rows)
    instance = MatrixInstance.from_columns(cols)
    if instance.enumeration_size() <= budget:
        res = brute_force(instance, "minimax", budget)
        if res.exact_mix and num.eq(res.T, res.lower_bound):
            return mixable("exact_arrangement", res, K=res.lower_bound, method="brute_force")
        return not_mixable("brute_force_optimum_above_lower_bound", None, T=res.T,
                           lower_bound=res.lower_bound, method="brute_force")
    res = local_search(instance, "minimax", restarts, seed)
    if res.exact_mix and num.eq(res.T, res.lower_bound):
        return mixable("exact_arrangement", res, K=res.lower_bound, method="local_search")
    return unknown("heuristic_found_no_exact_mix", T=res.T, lower_bound=res.lower_bound,
                   method="local_search")
