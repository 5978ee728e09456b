from __future__ import annotations

from dataclasses import replace
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rrtoolkit.gallery import circle_chart, circle_group_spray, sphere_spray
from rrtoolkit.ratcalc import RatMap, symbols
from rrtoolkit.sprays import (
    SprayError,
    product_spray,
    rescale_to_unit_ball,
    retract_from_spray,
    spray_from_retract,
    spray_vars,
    to_global_spray,
    verify_retract,
    verify_spray,
)
from rrtoolkit.varieties import contains, sample_points


def sphere_sigma_oracle(y, v):
    """Second intersection of the unit sphere with the line through -y and y + v."""
    # points -y + s(v + 2y); s = 0 gives -y, the other root is s = 2<y,w>/|w|^2
    w = [vi + 2 * yi for vi, yi in zip(v, y)]
    s = 2 * sum(a * b for a, b in zip(y, w)) / sum(a * a for a in w)
    return tuple(-yi + s * wi for yi, wi in zip(y, w))


def statuses(rep):
    return {c.name: c.passed for c in rep.checks}


@pytest.mark.parametrize("n", [1, 2, 3])
def test_sphere_spray_passes(n):
    rep = verify_spray(sphere_spray(n), 100, seed=n)
    assert rep.passed, statuses(rep)


def test_sphere_sigma_matches_oracle():
    s = sphere_spray(2)
    ys = sample_points(s.Y, 40, seed=1)
    vs = sample_points(s.Y, 40, seed=2)
    for y, v in zip(ys, vs):
        if s.in_M(y, v):
            assert s.sigma_at(y, v) == sphere_sigma_oracle(y, v)


def test_mutant_tau_fails_axiom2():
    s = sphere_spray(1)
    ys_, _, zs_ = s.vars
    yz = symbols(ys_ + zs_)
    mutant = replace(s, tau=RatMap(ys_ + zs_, [yz[2] - 2 * yz[0], yz[3] - 2 * yz[1]]))
    rep = verify_spray(mutant, 20)
    assert not rep.axiom2.passed
    y = rep.axiom2.witness
    assert mutant.tau_at(y, y) == tuple(-c for c in y)


def test_circle_group_hand_values():
    s = circle_group_spray()
    # a1 b2 - a2 b1 = 0*0 - 1*(-1) = 1 over 1 + a.b = 1
    assert s.tau_at((0, 1), (-1, 0)) == (1,)
    assert s.tau_at((1, 0), (0, 1)) == (1,)
    # (0,1) times the chart point (0,1) is i*i = -1
    assert s.sigma_at((0, 1), (1,)) == (-1, 0)
    assert verify_spray(s, 100).passed


def test_spray_from_chart_hand_values():
    s = spray_from_retract(circle_chart(-1))
    assert s.sigma_at((0, 1), (0,)) == (0, 1)
    # i((0,1)) = 1, so sigma = r(2) = ((1-4)/5, 4/5)
    assert s.sigma_at((0, 1), (1,)) == (Fraction(-3, 5), Fraction(4, 5))
    y = (Fraction(3, 5), Fraction(4, 5))
    assert s.tau_at(y, y) == (0,)
    assert verify_spray(s, 100).passed


def test_rescale_by_one_keeps_formulas():
    s = sphere_spray(1)
    r = rescale_to_unit_ball(s, 1)
    assert r.ball_validated
    for y in sample_points(s.Y, 20, seed=3):
        v = (Fraction(1, 3), Fraction(-1, 7))
        assert r.sigma_at(y, v) == s.sigma_at(y, v)


def test_rescale_by_half():
    s = sphere_spray(1)
    r = rescale_to_unit_ball(s, Fraction(1, 2))
    assert r.sigma_at((1, 0), (-2, 2)) == s.sigma_at((1, 0), (-1, 1)) == (0, 1)
    y, z = (1, 0), (Fraction(3, 5), Fraction(4, 5))
    assert r.tau_at(y, z) == tuple(2 * c for c in s.tau_at(y, z))
    assert verify_spray(r, 100).passed


def test_rescale_rejects_negative():
    with pytest.raises(SprayError):
        rescale_to_unit_ball(sphere_spray(1), -1)


def test_rescale_rejects_ball_outside_M():
    # with f = 3 the vector v = -2y/3 lies in the unit ball and hits v' = -2y
    with pytest.raises(SprayError):
        rescale_to_unit_ball(sphere_spray(1), 3)


def test_retract_from_sphere_spray():
    s = sphere_spray(1)
    p = retract_from_spray(s, (1, 0))
    assert tuple(p.i((1, 0))) == (0, 0)
    assert tuple(p.r((0, 0))) == (1, 0)
    res = verify_retract(p, 200)
    assert res.passed and res.trials == 200
    assert not p.Y.contains((-1, 0))


def test_retract_from_spray_needs_point_on_Y():
    with pytest.raises(Exception):
        retract_from_spray(sphere_spray(1), (1, 1))


def test_spray_retract_round_trip_at_sampled_basepoints():
    s = spray_from_retract(circle_chart(1))
    for b in sample_points(s.Y, 3, seed=5):
        p = retract_from_spray(s, b)
        assert verify_retract(p, 50).passed


def test_global_spray_hand_value():
    s = rescale_to_unit_ball(sphere_spray(1), 1)
    g = to_global_spray(s)
    v = (-1, 1)
    k = 1 + sum(c * c for c in v)
    expected = sphere_sigma_oracle((1, 0), tuple(Fraction(c, k) for c in v))
    assert expected == (Fraction(12, 13), Fraction(5, 13))
    assert 144 + 25 == 169
    assert tuple(g((1, 0) + v)) == expected
    assert tuple(g((1, 0, 0, 0))) == (1, 0)


def test_global_spray_needs_validation():
    with pytest.raises(Exception):
        to_global_spray(sphere_spray(1))


@settings(max_examples=50, deadline=None)
@given(st.integers(-(10**7), 10**7), st.integers(-(10**7), 10**7), st.integers(1, 10**3), st.integers(0, 10**4))
def test_global_spray_total_on_large_inputs(a, b, q, seed):
    s = rescale_to_unit_ball(sphere_spray(1), 1)
    g = to_global_spray(s)
    (y,) = sample_points(s.Y, 1, seed=seed)
    out = g(tuple(y) + (Fraction(a, q), Fraction(b, q)))
    assert contains(s.Y, out)


def test_product_spray_torus():
    t = product_spray(circle_group_spray(), circle_group_spray())
    assert t.n == 2 and t.m == 4
    rep = verify_spray(t, 100)
    assert rep.passed, statuses(rep)
    y = (Fraction(3, 5), Fraction(4, 5), Fraction(-5, 13), Fraction(12, 13))
    assert t.tau_at(y, y) == (0, 0)
    # the first block of sigma only sees the first block of (y, v)
    a = t.sigma_at(y, (1, 0))
    b = t.sigma_at(y[:2] + (1, 0), (1, 5))
    assert a[:2] == b[:2] == circle_group_spray().sigma_at(y[:2], (1,))


def test_spray_vars_blocks():
    ys, vs, zs = spray_vars(2, 1)
    assert ys == ("y1", "y2") and vs == ("v1",) and zs == ("z1", "z2")
