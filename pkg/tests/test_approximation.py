from __future__ import annotations

import math
from dataclasses import replace
from fractions import Fraction

import pytest

from rrtoolkit.approximation import (
    ChartCoverageError,
    ExtensionError,
    NotCloseEnough,
    approximate_c0,
    approximate_c_infty,
    base_regular_approx,
    bump,
    circle_demo_problem,
    disc_problem,
    dyadic,
    extend_regular,
    extend_smooth,
    measure_error,
    oracle_from_doc,
    piecewise_angle,
    point_set,
    polynomial_oracle,
    trig_circle,
)
from rrtoolkit.gallery import sphere_spray
from rrtoolkit.ratcalc import Poly, PreconditionError, RatMap, symbols
from rrtoolkit.sprays import rescale_to_unit_ball
from rrtoolkit.varieties import Region, interval

S1 = rescale_to_unit_ball(sphere_spray(1), 1)


def small(p, grid=201):
    return replace(p, fit_grid=grid, sup_grid=grid)


def test_dyadic_rounding():
    d = dyadic(0.1)
    assert d.denominator <= 2**48
    assert abs(float(d) - 0.1) <= 2.0**-49
    assert dyadic(0.5) == Fraction(1, 2)


def test_constant_map_degree_zero():
    coords = ("t",)
    p = circle_demo_problem()
    f = polynomial_oracle(["0", "1"], coords)
    f_on_Z = RatMap(coords, [Poly.const(0, coords), Poly.const(1, coords)])
    p = small(replace(p, f=f, f_on_Z=f_on_Z))
    h = base_regular_approx(p, 0)
    # i((0, 1)) = 1 is fitted exactly, and r(1) = (0, 1)
    for t in (Fraction(-1), Fraction(1, 3), Fraction(1)):
        assert tuple(h((t,))) == (0, 1)


def test_base_approximation_degree_five():
    p = small(circle_demo_problem())
    h = base_regular_approx(p, 5)
    # the chart value of (cos t, sin t) is tan(t / 2); compare independently
    worst = 0.0
    for k in range(201):
        t = -1 + k / 100
        a, b = (float(c) for c in h((Fraction(t),)))
        worst = max(worst, math.hypot(a - math.cos(t), b - math.sin(t)))
    assert worst <= 1e-3
    assert measure_error(p.f, h, p.C, 0, 201) == pytest.approx(worst, rel=1e-6, abs=1e-12)


def test_chart_coverage_error():
    p = small(replace(circle_demo_problem(), C=interval(-4, 4)))
    with pytest.raises(ChartCoverageError) as exc:
        base_regular_approx(p, 5)
    # the first bad grid point is close to the pole at t = pi
    assert exc.value.witness is not None


def test_measure_error_examples():
    coords = ("t",)
    (t,) = symbols(coords)
    I = interval(0, 1)
    sq = polynomial_oracle([t * t], coords)
    assert measure_error(sq, RatMap(coords, [t * t]), I, 0, 101) <= 1e-15
    assert measure_error(sq, RatMap(coords, [Poly.const(0, coords)]), I, 0, 101) == 1.0
    # derivative 2t vs 0 peaks at t = 1 (the grid reaches t = 1 exactly)
    assert measure_error(sq, RatMap(coords, [Poly.const(0, coords)]), I, 1, 101) == pytest.approx(2.0, abs=1e-6)


def test_extend_regular_no_damping_needed():
    p = disc_problem(grid=41)
    x1, x2 = symbols(p.coords)
    res = extend_regular(p, RatMap(p.coords, [x1]), x2)
    assert res.exponents == (0, 0, 0)
    assert res.bound_report["sup_C"] <= 2


def test_extend_regular_damps_a_steep_extension():
    p = disc_problem(grid=41)
    x1, x2 = symbols(p.coords)
    G = RatMap(p.coords, [x1 + 10 * x2])
    res = extend_regular(p, G, x2)
    N0, N1, N2 = res.exponents
    assert (N0, N1) == (0, 0) and N2 >= 1
    pts = p.C.grid(41)

    def sup(N):
        return max(abs(float(a + 10 * b)) / (1 + float(b) ** 2) ** N for a, b in pts)

    # the independent grid sup obeys the bound for N2 but not for N2 - 1
    assert sup(N2) <= 2 + 1e-9 < sup(N2 - 1)
    for x in p.zc_points():
        assert tuple(res.F(x)) == (x[0],)


def test_extend_regular_rejects_bad_phi():
    p = disc_problem(grid=21)
    x1, x2 = symbols(p.coords)
    with pytest.raises(PreconditionError):
        extend_regular(p, RatMap(p.coords, [x1]), x1)
    with pytest.raises(PreconditionError):
        extend_regular(p, RatMap(p.coords, [x1 + 1]), x2)


def test_extend_regular_cap():
    p = disc_problem(grid=21)
    x1, x2 = symbols(p.coords)
    with pytest.raises(ExtensionError):
        extend_regular(p, RatMap(p.coords, [x1 + 10 * x2]), x2, cap=2)


def test_extend_regular_zero_data():
    p = disc_problem(grid=21)
    x1, x2 = symbols(p.coords)
    zero = RatMap(p.coords, [Poly.const(0, p.coords)])
    p = replace(p, f=polynomial_oracle(["0"], p.coords), f_on_Z=zero)
    res = extend_regular(p, RatMap(p.coords, [10 * x2]), x2)
    assert res.exponents == (0, 0, 0)
    assert tuple(res.F((Fraction(1, 2), Fraction(1, 2)))) == (0,)


def test_extend_regular_unbounded_strip():
    coords = ("x1", "x2")
    x1, x2 = symbols(coords)
    strip = Region(2, ((x1 * x1 - 1, "<="),), ((-1, 1), (-1, 1)), coords=coords, bounded=False)
    pts = [(Fraction(k, 10) - 1, Fraction(0)) for k in range(21)]
    Z = point_set(pts, coords, [x2])
    p = replace(disc_problem(), Z=Z, C=strip, sup_grid=21)
    res = extend_regular(p, RatMap(coords, [x1 + x2]), x2)
    N0, N1, N2 = res.exponents
    assert N0 == 0 and N1 >= 1
    # F = G / (1 + x2^2)^(N1 + N2), which decays far out along the strip
    far = (Fraction(1, 2), Fraction(1000))
    assert res.F(far)[0] == (far[0] + far[1]) / (1 + far[1] ** 2) ** (N1 + N2)
    assert abs(float(res.F(far)[0])) < abs(float(res.F((far[0], Fraction(10)))[0]))


def test_c0_interpolates_and_stays_on_circle():
    p = small(circle_demo_problem())
    res = approximate_c0(p, 5, S1)
    # the odd fit gives h(0) = (1, 0), so the correction vanishes
    assert res.epsilon == 0.0
    assert res.extension.exponents == (0, 0, 0)
    assert tuple(res.f_tilde((Fraction(0),))) == (1, 0)
    for t in (Fraction(-1), Fraction(-1, 3), Fraction(7, 10)):
        a, b = res.f_tilde((t,))
        assert a * a + b * b == 1
        assert (a, b) == tuple(res.h((t,)))
    assert res.sup_error <= 1e-3


def test_c0_asymmetric_interval_has_correction():
    p = small(circle_demo_problem(lo=-1, hi=Fraction(3, 2)))
    res = approximate_c0(p, 6, S1)
    assert 0 < res.epsilon < 0.5
    assert res.exponents is not None
    assert tuple(res.f_tilde((Fraction(0),))) == (1, 0)
    # the base approximation alone does not interpolate
    assert tuple(res.h((Fraction(0),))) != (1, 0)
    assert res.sup_error <= 1e-3


def test_c0_degree_zero_is_rejected():
    p = small(circle_demo_problem(1.5, 0, 2))
    with pytest.raises(NotCloseEnough) as exc:
        approximate_c0(p, 0, S1)
    assert exc.value.epsilon >= 0.5


def test_c0_needs_ball_validated_spray():
    with pytest.raises(PreconditionError):
        approximate_c0(small(circle_demo_problem()), 3, sphere_spray(1))


def test_bump_values():
    inner, outer = ((0, 1),), ((-1, 2),)
    assert bump((Fraction(1, 2),), inner, outer) == 1.0
    assert bump((Fraction(-1),), inner, outer) == 0.0
    assert bump((Fraction(3),), inner, outer) == 0.0
    # the smooth step is symmetric about its midpoint
    assert bump((Fraction(-1, 2),), inner, outer) == pytest.approx(0.5)


def test_extend_smooth_vanishes_on_Z():
    coords = ("t",)
    (t,) = symbols(coords)
    Z = point_set([(0,)], coords, [t])
    f = polynomial_oracle([t * (1 - t)], coords)
    D0 = interval(Fraction(-1, 4), Fraction(5, 4), open_=True)
    D1 = interval(Fraction(-1, 5), Fraction(6, 5), open_=True)
    D2 = interval(Fraction(-1, 10), Fraction(11, 10), open_=True)
    sm = extend_smooth(f, D0, D1, D2, Z, interval(-2, 3), 8, grid=201)
    assert tuple(sm.psi((Fraction(0),))) == (0,)
    assert sm.report["sup_X"] <= sm.report["bound"] + 1e-9


def test_extend_smooth_zero_map():
    coords = ("t",)
    (t,) = symbols(coords)
    Z = point_set([(0,)], coords, [t])
    f = polynomial_oracle(["0"], coords)
    D = interval(-1, 1, open_=True)
    sm = extend_smooth(f, D, D, D, Z, interval(-2, 2), 4, grid=51)
    assert all(c.num.is_zero() for c in sm.psi.components)


def test_extend_smooth_preconditions():
    coords = ("t",)
    (t,) = symbols(coords)
    Z = point_set([(0,)], coords, [t])
    D0 = interval(-1, 1, open_=True)
    D1 = interval(-2, 2, open_=True)
    with pytest.raises(PreconditionError):
        extend_smooth(polynomial_oracle([t], coords), D0, D1, D0, Z, interval(-3, 3), 3, grid=21)
    with pytest.raises(PreconditionError):
        extend_smooth(polynomial_oracle([1 + t], coords), D0, D0, D0, Z, interval(-3, 3), 3, grid=21)


def test_c_infty_small_grid():
    p = small(circle_demo_problem())
    res = approximate_c_infty(p, 10, S1)
    assert tuple(res.f_tilde((Fraction(0),))) == (1, 0)
    assert res.sup_error <= 1e-2
    assert res.c1_error is not None and res.c1_error <= 1e-1


def test_oracle_docs_round_trip():
    coords = ("x1", "x2")
    x1, x2 = symbols(coords)
    oracles = [trig_circle(2, 0.5), polynomial_oracle([x1 * x2, x1 + 1], coords), piecewise_angle([[0, 0], [1, 2]])]
    for o in oracles:
        back = oracle_from_doc(o.to_doc())
        x = (0.25,) * o.dim_in
        assert back(x) == o(x)
    assert trig_circle(2)((0.5,)) == (math.cos(1.0), math.sin(1.0))
    with pytest.raises(ValueError):
        oracle_from_doc({"name": "nope"})
