from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rrtoolkit.ratcalc import Poly, RatMap, symbols
from rrtoolkit.varieties import (
    RationalPointSampler,
    Region,
    SamplerExhausted,
    SamplingError,
    VarietyPresentation,
    ball,
    contains,
    identity_check,
    interval,
    product_presentation,
    sample_points,
    sphere_parametrization,
    sphere_presentation,
)

S1 = sphere_presentation(1)


def test_contains_examples():
    assert 9 + 16 == 25
    assert contains(S1, (Fraction(3, 5), Fraction(4, 5)))
    assert not contains(S1, (1, 1))
    x1, _ = symbols(S1.coords)
    punctured = S1.restrict([1 + x1])
    assert not contains(punctured, (-1, 0))
    assert contains(punctured, (1, 0))


def test_sphere_parametrization_values():
    par = sphere_parametrization(1)
    # t = 1: ((1-1)/2, 2/2); t = 2: ((1-4)/5, 4/5)
    assert par((1,)) == (0, 1)
    assert par((2,)) == (Fraction(-3, 5), Fraction(4, 5))


@pytest.mark.parametrize("n", [1, 2, 3, 5])
def test_sphere_samples_are_exact(n):
    S = sphere_presentation(n)
    pts = sample_points(S, 100, seed=11)
    assert len(pts) == 100
    for p in pts:
        assert sum(c * c for c in p) == 1


def test_sampler_determinism():
    a = sample_points(S1, 50, seed=4)
    b = sample_points(S1, 50, seed=4)
    c = sample_points(S1, 50, seed=5)
    assert a == b
    assert a != c


def test_product_sampler_on_each_factor():
    T = product_presentation(S1, S1)
    for p in sample_points(T, 60, seed=2):
        assert p[0] ** 2 + p[1] ** 2 == 1
        assert p[2] ** 2 + p[3] ** 2 == 1


def test_graph_sampler():
    x = Poly.var("x")
    base = RationalPointSampler("parametrized", RatMap(("t",), [Poly.var("t")]), seed=1)
    graph = RationalPointSampler("graph", RatMap(("x",), [x * x]), base=base)
    xs, yy = symbols(("x", "y"))
    V = VarietyPresentation(2, (yy - xs * xs,), (), graph, ("x", "y"))
    for p in sample_points(V, 30, seed=0):
        assert p[1] == p[0] ** 2


def test_enumerated_sampler_exhausts():
    pts = ((Fraction(0),), (Fraction(1),))
    t = Poly.var("t")
    V = VarietyPresentation(1, (t * (t - 1),), (), RationalPointSampler("enumerated", points=pts), ("t",))
    assert sample_points(V, 2) == [(0,), (1,)]
    with pytest.raises(SamplerExhausted):
        sample_points(V, 3)


def test_identity_check_examples():
    x1, x2 = symbols(S1.coords)
    res = identity_check(x1 * x1 + x2 * x2, Poly.const(1, S1.coords), S1, 200)
    assert res.passed and res.trials == 200
    res = identity_check(x1, x2, S1, 5)
    assert not res.passed and res.witness is not None
    assert res.lhs_value != res.rhs_value


def test_identity_check_inconclusive():
    # the map is undefined everywhere on S^1 minus nothing: 1/(x1^2 + x2^2 - 1)
    x1, x2 = symbols(S1.coords)
    bad = RatMap(S1.coords, [x1], [x1 * x1 + x2 * x2 - 1])
    with pytest.raises(SamplingError):
        identity_check(bad, bad, S1, 10)


def test_identity_check_monotone():
    x1, x2 = symbols(S1.coords)
    lhs = (x1 + x2) ** 2
    rhs = 1 + 2 * x1 * x2
    big = identity_check(lhs, rhs, S1, 100, seed=7)
    small = identity_check(lhs, rhs, S1, 10, seed=7)
    assert big.passed and small.passed


def test_region_interval_and_ball():
    I = interval(-1, 1)
    assert I.contains((1,)) and not I.contains((Fraction(3, 2),))
    J = interval(-1, 1, open_=True)
    assert not J.contains((1,)) and J.contains((0,))
    B = ball(2, 1)
    assert B.contains((Fraction(3, 5), Fraction(4, 5)))
    assert not B.contains((1, Fraction(1, 100)))


def test_region_grid_counts():
    I = interval(-1, 1)
    pts = I.grid(1001)
    assert len(pts) == 1001 and pts[0] == (-1,) and pts[-1] == (1,)
    assert pts[500] == (0,)
    # 114 points per axis puts exactly 10^4 grid points in the closed unit disc
    grid = ball(2, 1).grid(114)
    assert len(grid) == sum(
        1
        for i in range(114)
        for j in range(114)
        if (Fraction(-1) + Fraction(2 * i, 113)) ** 2 + (Fraction(-1) + Fraction(2 * j, 113)) ** 2 <= 1
    )
    assert len(grid) == 10**4


def test_region_unbounded_window():
    x1, x2 = symbols(("x1", "x2"))
    strip = Region(2, ((x1 * x1 - 1, "<="),), ((-1, 1), (-1, 1)), coords=("x1", "x2"), bounded=False)
    assert strip.contains((0, 100))
    assert not strip.contains((2, 0))
    assert strip.scaled_box(2) == ((-2, 2), (-2, 2))


def test_region_rejects_bad_relation():
    t = Poly.var("t")
    with pytest.raises(ValueError):
        Region(1, ((t, ">"),), ((0, 1),))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 4))
def test_samples_satisfy_generators(seed, n):
    S = sphere_presentation(n)
    for p in sample_points(S, 5, seed=seed):
        assert contains(S, p)
