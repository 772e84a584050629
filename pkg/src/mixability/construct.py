"""Constructions of complete and joint mixes, and sampling from certificates."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Tuple

import numpy as np

from . import _numeric as num
from .distributions import DiscreteDistribution, make_discrete
from .exceptions import BudgetExceeded, SpecError
from .lpcert import JointPmf, jm_lp_decide
from .rearrange import DEFAULT_EXPANSION_BUDGET, Arrangement, SolveResult, jm_from_matrix
from .verdict import Verdict, mixable, not_mixable, unknown

# ---------------------------------------------------------------------------
# discrete complete mixes as mixtures of uniform blocks


@dataclass(frozen=True)
class UniformBlockMixture:
    """Mixture of discrete uniform laws on ``n``-point blocks that all average to ``center``.

    ``blocks`` holds ``(vector, weight)`` pairs. Drawing a block by weight and
    then a uniformly random ordering of it gives a complete mix whose
    coordinates all follow :meth:`marginal`.
    """

    blocks: Tuple[Tuple[tuple, object], ...]
    center: object

    @property
    def n(self) -> int:
        return len(self.blocks[0][0])

    def marginal(self) -> DiscreteDistribution:
        pts, ws = [], []
        for vec, w in self.blocks:
            for x in vec:
                pts.append(x)
                ws.append(w / len(vec))
        return make_discrete(pts, ws)

    def check(self, target: Optional[DiscreteDistribution] = None) -> Optional[str]:
        """Reason string for the first broken invariant, or ``None`` when valid."""
        if not self.blocks:
            return "no_blocks"
        n = self.n
        for vec, w in self.blocks:
            if len(vec) != n:
                return "block_length_mismatch"
            if w < 0:
                return "negative_weight"
            if not num.eq(num.xsum(vec) / n, self.center):
                return "block_mean_differs_from_center"
        if not num.eq(num.xsum(w for _, w in self.blocks), 1):
            return "weights_do_not_sum_to_one"
        if target is not None:
            got = self.marginal()
            if target.exact and got.exact:
                if got != target:
                    return "marginal_mismatch"
            elif got.size != target.size or not all(
                num.eq(a, b) for a, b in zip(got.points + got.weights, target.points + target.weights)
            ):
                return "marginal_mismatch"
        return None


def _blocks_from_vectors(vectors_with_mass, center) -> UniformBlockMixture:
    merged: dict = {}
    for vec, w in vectors_with_mass:
        key = tuple(sorted(vec))
        merged[key] = merged.get(key, 0) + w
    return UniformBlockMixture(tuple(sorted(merged.items())), center)


def discrete_cm_decompose(discrete: DiscreteDistribution, n: int, *, budget: Optional[int] = None,
                          restarts: int = 50, seed: int = 0,
                          max_rows: int = DEFAULT_EXPANSION_BUDGET) -> Verdict:
    """Write an ``n``-CM discrete law as a mixture of uniform blocks with mean ``mu``.

    The law is expanded to ``m`` equally likely points and arranged into ``n``
    identical columns; each row of an exact mix is one block with weight
    ``1/m``. If the arrangement search is over budget and the heuristic fails,
    the exact LP settles the question for rational input.
    """
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    columns = [discrete] * n
    v = jm_from_matrix(columns, budget=budget, restarts=restarts, seed=seed, max_rows=max_rows)
    if v.mixable:
        res: SolveResult = v.certificate
        weight = Fraction(1, res.instance.m) if res.instance.exact else 1.0 / res.instance.m
        mix = _blocks_from_vectors(((row, weight) for row in res.rows()), res.K / n)
        return mixable("uniform_block_decomposition", mix, method=v.diagnostics.get("method"),
                       rows=res.instance.m)
    if v.not_mixable:
        return not_mixable("no_exact_arrangement", None, **v.diagnostics)
    if discrete.exact:
        try:
            lp = jm_lp_decide(columns)
        except BudgetExceeded as exc:
            return unknown("heuristic_found_no_exact_mix", lp=str(exc), **v.diagnostics)
        if lp.mixable:
            pmf: JointPmf = lp.certificate
            mix = _blocks_from_vectors(zip(pmf.grid, pmf.masses), pmf.K / n)
            return mixable("uniform_block_decomposition", mix, method="lp")
        return not_mixable("lp_infeasible", lp.certificate, method="lp")
    return unknown("heuristic_found_no_exact_mix", **v.diagnostics)


# ---------------------------------------------------------------------------
# integer joint mixes as sums of binary multinomial layers


@dataclass(frozen=True)
class BinaryLayerList:
    """``layers[k, r]`` is the one-hot vector of layer ``k`` for realization ``r``."""

    layers: np.ndarray
    n: int

    def __post_init__(self):
        arr = np.asarray(self.layers, dtype=np.int64)
        if arr.ndim != 3:
            raise SpecError("layers must have shape (N, rows, n)")
        if arr.shape[2] != self.n:
            raise SpecError(f"layer width {arr.shape[2]} differs from n={self.n}")
        if arr.size and (np.any((arr != 0) & (arr != 1)) or np.any(arr.sum(axis=2) != 1)):
            raise SpecError("every layer vector must have exactly one coordinate equal to 1")
        arr.setflags(write=False)
        object.__setattr__(self, "layers", arr)

    @property
    def N(self) -> int:
        return self.layers.shape[0]

    @property
    def rows(self) -> int:
        return self.layers.shape[1]


def _integer_table(joint) -> np.ndarray:
    arr = np.asarray(joint, dtype=object)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] == 0:
        raise SpecError("joint values must be a 2-d table with at least one column")
    flat = arr.ravel()
    for x in flat:
        if isinstance(x, bool) or not num.is_exact(x) or Fraction(x).denominator != 1:
            raise SpecError(f"entry {x!r} is not an integer")
    out = np.array([int(x) for x in flat], dtype=np.int64).reshape(arr.shape)
    if np.any(out < 0):
        raise SpecError("entries must be nonnegative")
    return out


def binary_decompose(joint) -> BinaryLayerList:
    """Split each integer row with sum ``N`` into ``N`` one-hot layers.

    Layer ``k`` puts its 1 at the first coordinate where the running sum
    reaches ``k``, i.e. ``Y[k, i] = [S_i >= k] - [S_{i-1} >= k]``.
    """
    table = _integer_table(joint)
    sums = table.sum(axis=1)
    if np.any(sums != sums[0]):
        raise SpecError("all realizations must have the same coordinate sum")
    N = int(sums[0])
    running = np.cumsum(table, axis=1)
    before = np.concatenate([np.zeros((table.shape[0], 1), dtype=np.int64), running[:, :-1]], axis=1)
    k = np.arange(1, N + 1, dtype=np.int64)[:, None, None]
    layers = (running[None] >= k).astype(np.int64) - (before[None] >= k).astype(np.int64)
    return BinaryLayerList(layers, table.shape[1])


def binary_compose(layers: BinaryLayerList) -> np.ndarray:
    """Coordinate-wise sum of the layers, one row per realization."""
    return layers.layers.sum(axis=0, dtype=np.int64).reshape(layers.rows, layers.n)


def layer_sum_law(n: int, N: Optional[int] = None) -> dict:
    """Exact law of the sum of ``N`` independent uniform one-hot vectors in ``{0,1}^n``.

    Computed by enumerating the composition states layer by layer; keys are
    count vectors, values are exact probabilities. ``N`` defaults to ``n``.
    """
    if n < 1:
        raise ValueError("n must be positive")
    N = n if N is None else N
    step = Fraction(1, n)
    law = {(0,) * n: Fraction(1)}
    for _ in range(N):
        nxt: dict = {}
        for state, p in law.items():
            for i in range(n):
                s = state[:i] + (state[i] + 1,) + state[i + 1:]
                nxt[s] = nxt.get(s, 0) + p * step
        law = nxt
    return law


def sample_binary_layers(n: int, N: int, count: int, seed: int = 0) -> BinaryLayerList:
    """``N`` independent uniform one-hot layers for each of ``count`` realizations."""
    rng = np.random.default_rng(seed)
    hot = rng.integers(0, n, size=(N, count))
    return BinaryLayerList(np.eye(n, dtype=np.int64)[hot], n)


# ---------------------------------------------------------------------------
# Gaussian joint mixes


@dataclass(frozen=True)
class GaussianMixCertificate:
    """Correlation matrix under which ``sum_i (mu_i + sigma_i Z_i)`` is constant."""

    mus: Tuple[float, ...]
    sigmas: Tuple[float, ...]
    corr: np.ndarray
    diagnostics: dict = field(default_factory=dict, compare=False)

    @property
    def K(self) -> float:
        return math.fsum(self.mus)

    def check(self, tol: float = 1e-10) -> Optional[str]:
        R = self.corr
        s = np.asarray(self.sigmas, dtype=float)
        if R.shape != (len(s), len(s)):
            return "shape_mismatch"
        if not np.allclose(R, R.T, atol=0, rtol=0):
            return "not_symmetric"
        if not np.all(np.diag(R) == 1.0):
            return "diagonal_not_one"
        if np.linalg.eigvalsh(R).min() < -tol:
            return "not_positive_semidefinite"
        if float(s @ R @ s) > tol * float(s.sum()) ** 2:
            return "sum_variance_not_zero"
        return None


def _symmetric(R):
    return (R + R.T) / 2


def _project_psd_orthogonal(R, P):
    """Nearest PSD matrix whose range is orthogonal to the null direction of ``P``."""
    w, V = np.linalg.eigh(_symmetric(P @ R @ P))
    return _symmetric(P @ ((V * np.clip(w, 0, None)) @ V.T) @ P)


def _alternating_projections(sigmas, max_iter, tol):
    n = len(sigmas)
    u = sigmas / np.linalg.norm(sigmas)
    P = np.eye(n) - np.outer(u, u)
    Y = P.copy()
    psd = Y
    for it in range(1, max_iter + 1):
        psd = _project_psd_orthogonal(Y, P)
        gap = np.abs(np.diag(psd) - 1).max()
        if gap <= tol:
            return psd, it, gap
        Y = psd.copy()
        np.fill_diagonal(Y, 1.0)
    return psd, max_iter, np.abs(np.diag(psd) - 1).max()


def _polygon_correlation(sigmas):
    """Rank-2 correlation from unit vectors ``v_i`` with ``sum sigma_i v_i = 0``.

    Sides are split into three runs around the half-perimeter point, each
    summing to at most half the total, and laid out as a triangle.
    """
    total = float(sigmas.sum())
    half = total / 2
    group = np.empty(len(sigmas), dtype=int)
    acc = 0.0
    for i, s in enumerate(sigmas):
        lo, hi = acc, acc + s
        group[i] = 0 if hi <= half else (2 if lo >= half else 1)
        acc = hi
    sides = [float(sigmas[group == g].sum()) for g in range(3)]
    a, b, c = sides
    if a > 0 and b > 0:
        cos_t = np.clip((c * c - a * a - b * b) / (2 * a * b), -1.0, 1.0)
    else:
        cos_t = -1.0
    sin_t = math.sqrt(max(0.0, 1 - cos_t * cos_t))
    e = [np.array([a, 0.0]), np.array([b * cos_t, b * sin_t])]
    e.append(-(e[0] + e[1]))
    dirs = []
    for g in range(3):
        norm = np.linalg.norm(e[g])
        dirs.append(e[g] / norm if norm > 0 else np.array([1.0, 0.0]))
    V = np.array([dirs[g] for g in group])
    R = V @ V.T
    np.fill_diagonal(R, 1.0)
    return _symmetric(R)


def gaussian_joint_mix(mus: Sequence, sigmas: Sequence, *, max_iter: int = 10_000,
                       tol: float = 1e-10) -> Verdict:
    """Correlation matrix making ``N(mu_i, sigma_i^2)`` margins sum to a constant.

    Such a matrix exists exactly when ``sum sigma >= 2 max sigma``. It is
    searched for by alternating projections between the unit-diagonal
    matrices and the PSD matrices annihilating ``sigma``; a closed-polygon
    construction takes over when the projections stall.
    """
    mus = tuple(mus)
    sig = tuple(sigmas)
    if len(mus) != len(sig) or not sig:
        raise ValueError("mus and sigmas must be non-empty and of equal length")
    if any(s < 0 for s in sig):
        raise ValueError("sigmas must be nonnegative")
    if all(s == 0 for s in sig):
        raise ValueError("at least one sigma must be positive")
    if not num.leq(2 * max(sig), num.xsum(sig)):
        return not_mixable("elliptical_sigma_condition_violated", None,
                           sigma_sum=num.xsum(sig), sigma_max=max(sig))
    s = np.asarray([float(x) for x in sig])
    mus_f = tuple(float(m) for m in mus)

    R, iters, gap = _alternating_projections(s, max_iter, tol)
    np.fill_diagonal(R, 1.0)
    cert = GaussianMixCertificate(mus_f, tuple(s), R, dict(method="alternating_projections",
                                                           iterations=iters, diagonal_gap=float(gap)))
    if cert.check(tol) is None:
        return mixable("gaussian_correlation", cert, K=cert.K, **cert.diagnostics)
    fallback = GaussianMixCertificate(mus_f, tuple(s), _polygon_correlation(s),
                                      dict(method="polygon", iterations=iters,
                                           diagonal_gap=float(gap)))
    problem = fallback.check(tol)
    if problem is None:
        return mixable("gaussian_correlation", fallback, K=fallback.K, **fallback.diagnostics)
    return unknown("gaussian_construction_failed", reason_detail=problem, iterations=iters)


# ---------------------------------------------------------------------------
# sampling


def _pick(rng, weights, count):
    p = np.array([float(w) for w in weights])
    return rng.choice(len(p), size=count, p=p / p.sum())


def sample_joint_mix(certificate, count: int, seed: int = 0) -> np.ndarray:
    """``count`` independent rows drawn from a certificate's joint law.

    Accepts a :class:`SolveResult` (uniform over rows), a
    :class:`UniformBlockMixture` (block by weight, then shuffled), a
    :class:`JointPmf` or a :class:`GaussianMixCertificate`. Exact
    certificates give an object array of exact values.
    """
    if count < 0:
        raise ValueError("count must be nonnegative")
    rng = np.random.default_rng(seed)
    if isinstance(certificate, SolveResult):
        rows = certificate.rows()
        idx = rng.integers(0, len(rows), size=count)
        return _table([rows[i] for i in idx], len(rows[0]))
    if isinstance(certificate, UniformBlockMixture):
        idx = _pick(rng, [w for _, w in certificate.blocks], count)
        out = []
        for k in idx:
            vec = certificate.blocks[k][0]
            out.append(tuple(vec[j] for j in rng.permutation(len(vec))))
        return _table(out, certificate.n)
    if isinstance(certificate, JointPmf):
        idx = _pick(rng, certificate.masses, count)
        return _table([certificate.grid[k] for k in idx], certificate.n)
    if isinstance(certificate, GaussianMixCertificate):
        s = np.asarray(certificate.sigmas)
        w, V = np.linalg.eigh(certificate.corr)
        L = V * np.sqrt(np.clip(w, 0, None))
        u = s / np.linalg.norm(s)
        # sigma^T L is zero in exact arithmetic; remove the rounding residue
        L = L - np.outer(u, u @ L)
        Z = rng.standard_normal((count, len(s))) @ L.T
        return np.asarray(certificate.mus) + Z * s
    if isinstance(certificate, Arrangement):
        raise TypeError("an Arrangement needs its matrix; pass the SolveResult instead")
    raise TypeError(f"cannot sample from {type(certificate).__name__}")


def _table(rows, n):
    arr = np.empty((len(rows), n), dtype=object)
    for i, r in enumerate(rows):
        arr[i, :] = r
    if arr.size and not num.all_exact(arr.ravel()):
        return arr.astype(float)
    return arr
