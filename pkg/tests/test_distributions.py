import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mixability import (
    ConcaveDensity,
    DiscreteDistribution,
    MonotoneDensity,
    Normal,
    QuantileTable,
    SpecError,
    Uniform,
    discretize,
    essential_support,
    make_discrete,
    mean,
    point_mass,
    quantile,
)
from mixability.distributions import affine, conditional_on_levels, midpoint_levels

from strategies import discretes

F = Fraction

# high-precision inverse error function (mpmath, 30 digits)
NORMAL_975 = 1.95996398454005423552


def test_make_discrete_sorts():
    d = make_discrete([1, 0], [F(1, 2), F(1, 2)])
    assert d.points == (0, 1) and d.weights == (F(1, 2), F(1, 2))


def test_make_discrete_merges_duplicates():
    d = make_discrete([0, 0, 1], [F(1, 4), F(1, 4), F(1, 2)])
    assert d.points == (0, 1) and d.weights == (F(1, 2), F(1, 2))


def test_make_discrete_renormalizes():
    d = make_discrete([0], [F(2, 5)])
    assert d.points == (0,) and d.weights == (1,)


def test_make_discrete_float_input_stays_float():
    d = make_discrete([1.0, 0.0], [0.5, 0.5])
    assert not d.exact
    assert d.points == (0.0, 1.0)


@pytest.mark.parametrize("points, weights", [
    ([], []),
    ([0, 1], [1]),
    ([0], [-1]),
    ([0, 1], [0, 0]),
    ([math.inf], [1]),
    ([math.nan], [1]),
])
def test_make_discrete_rejects(points, weights):
    with pytest.raises(SpecError):
        make_discrete(points, weights)


def test_discrete_constructor_requires_normalized_weights():
    with pytest.raises(SpecError, match="weights must sum to 1"):
        DiscreteDistribution((0, 1), (F(1, 2), F(1, 4)))


def test_quantiles_of_simple_laws():
    assert quantile(Uniform(0, 1), F(1, 4)) == F(1, 4)
    # left-continuous at the jump
    assert quantile(make_discrete([0, 1], [F(1, 2), F(1, 2)]), F(1, 2)) == 0
    assert quantile(Normal(0, 1), 0.975) == pytest.approx(NORMAL_975, abs=1e-5)


def test_quantile_level_bounds():
    u = Uniform(2, 5)
    assert quantile(u, 1) == 5
    for q in (0, F(3, 2), -1):
        with pytest.raises(ValueError):
            quantile(u, q)


def test_quantile_of_monotone_density_needs_table():
    with pytest.raises(ValueError):
        quantile(MonotoneDensity(0, 1, F(1, 4)), F(1, 2))


def test_means():
    assert mean(Uniform(0, 1)) == F(1, 2)
    assert mean(make_discrete([0, 1, 2], [F(1, 4), F(1, 2), F(1, 4)])) == 1
    q = [F(k, 100) for k in range(101)]
    assert abs(mean(QuantileTable(tuple(q), tuple(q))) - F(1, 2)) <= 1e-3
    assert mean(MonotoneDensity(0, 2, F(3, 4))) == F(3, 4)


def test_essential_support():
    s = essential_support(Uniform(2, 5))
    assert (s.a, s.b, s.bounded) == (2, 5, True)
    s = essential_support(Normal(0, 1))
    assert (s.a, s.b, s.bounded) == (-math.inf, math.inf, False)
    s = essential_support(make_discrete([0, 3], [F(1, 2), F(1, 2)]))
    assert (s.a, s.b, s.bounded) == (0, 3, True)


def test_discretize_midpoints():
    d = discretize(Uniform(0, 1), 4)
    assert d.points == (F(1, 8), F(3, 8), F(5, 8), F(7, 8))
    assert set(d.weights) == {F(1, 4)}


def test_discretize_point_mass_merges():
    d = discretize(point_mass(F(7, 3)), 3, (F(1, 5), F(4, 5)))
    assert d.points == (F(7, 3),) and d.weights == (1,)


def test_discretize_upper_window():
    d = discretize(Uniform(0, 1), 1000, (F(9, 10), 1))
    assert d.size == 1000
    assert abs(d.mean - F(19, 20)) <= 1e-6


def test_midpoint_levels_window_validation():
    with pytest.raises(ValueError):
        midpoint_levels(0)
    with pytest.raises(ValueError):
        midpoint_levels(3, (F(1, 2), F(1, 2)))


def test_conditional_on_levels_splits_atoms():
    d = make_discrete([0, 1], [F(1, 3), F(2, 3)])
    c = conditional_on_levels(d, F(1, 6), 1)
    assert c.points == (0, 1) and c.weights == (F(1, 5), F(4, 5))


def test_affine_maps_fields():
    m = affine(MonotoneDensity(0, 1, F(1, 4), "decreasing"), 2, 3)
    assert (m.a, m.b, m.mean) == (3, 5, F(7, 2))
    n = affine(Normal(1, 2), 3, -1)
    assert (n.mu, n.sigma) == (2, 6)


@pytest.mark.parametrize("spec", [
    Uniform(-1, 3),
    make_discrete([0, 1, 5], [F(1, 5), F(1, 2), F(3, 10)]),
    QuantileTable((0, F(1, 2), 1), (0, 1, 4)),
    ConcaveDensity(0, 1, table=QuantileTable((0, F(1, 2), 1), (0, F(1, 2), 1))),
    Normal(0, 1),
])
def test_quantile_nondecreasing_on_fine_grid(spec):
    qs = [F(k, 1000) for k in range(1, 1000)]
    vals = [quantile(spec, q) for q in qs]
    assert all(a <= b for a, b in zip(vals, vals[1:]))


def test_discrete_quantile_left_continuous_at_jumps():
    d = make_discrete([0, 1, 5], [F(1, 5), F(1, 2), F(3, 10)])
    tiny = F(1, 10**12)
    for level, x in zip(d.cumulative(), d.points):
        assert quantile(d, level) == x
        assert quantile(d, level - tiny) == x
    assert quantile(d, F(1, 5) + tiny) == 1


def test_table_quantile_continuous():
    t = QuantileTable((0, F(1, 2), 1), (0, 1, 4))
    tiny = F(1, 10**12)
    for k in range(1, 100):
        q = F(k, 100)
        assert 0 <= quantile(t, q) - quantile(t, q - tiny) <= 6 * tiny


@given(discretes())
def test_make_discrete_idempotent(d):
    assert make_discrete(d.points, d.weights) == d


@given(discretes(), st.integers(1, 40))
def test_discretized_mean_within_midpoint_bound(d, N):
    sup = essential_support(d)
    g = discretize(d, N)
    assert abs(g.mean - d.mean) <= sup.width / (2 * N)


@given(st.fractions(-3, 3, max_denominator=6), st.fractions(F(1, 6), 3, max_denominator=6),
       st.integers(1, 60))
def test_discretized_uniform_mean_within_midpoint_bound(a, w, N):
    u = Uniform(a, a + w)
    assert abs(discretize(u, N).mean - mean(u)) <= w / (2 * N)


@given(discretes(), st.integers(1, 30))
def test_discretize_support_contained(d, N):
    inner, outer = essential_support(discretize(d, N)), essential_support(d)
    assert outer.a <= inner.a and inner.b <= outer.b


@given(discretes(), st.fractions(F(1, 4), 4, max_denominator=4), st.fractions(-3, 3, max_denominator=4))
def test_affine_commutes_with_quantile(d, c, shift):
    t = affine(d, c, shift)
    for k in range(1, 20):
        q = F(k, 20)
        assert quantile(t, q) == c * quantile(d, q) + shift
