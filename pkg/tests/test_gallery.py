from __future__ import annotations

from fractions import Fraction

import pytest

from rrtoolkit.gallery import (
    GALLERY,
    CubicSurface,
    PairNotInU,
    circle_chart,
    circle_group_spray,
    circle_two_chart_cover,
    cubic_third_point,
    disconnected_cubic_fixture,
    fixture_point_pool,
    gallery_get,
    line_restriction,
    secant_pairs,
    sphere_spray,
)
from rrtoolkit.ratcalc import Poly, parse_poly, symbols
from rrtoolkit.sprays import Spray, verify_retract, verify_spray
from rrtoolkit.varieties import sample_points

FIXTURE_TEXT = "1/1 * x^2 * w^1 + 1/1 * y^2 * w^1 + -1/1 * z^3 + 3/1 * z^2 * w^1 + -2/1 * z^1 * w^2"


def affine_cubic(p):
    """x^2 + y^2 - z(z-1)(z-2), the w = 1 chart done by hand."""
    x, y, z = p
    return x * x + y * y - z * (z - 1) * (z - 2)


def test_sphere_spray_structure():
    s = sphere_spray(1)
    assert s.n == 2 and s.m == 2
    assert s.sigma_at((1, 0), (-1, 1)) == (0, 1)
    for y in sample_points(s.Y, 20):
        assert s.sigma_at(y, (0, 0)) == tuple(y)
        assert s.tau_at(y, y) == (0, 0)
    with pytest.raises(ValueError):
        sphere_spray(0)


def test_circle_group_spray_roundtrip():
    s = circle_group_spray()
    assert verify_spray(s, 200, seed=9).axiom1.passed


def test_two_chart_cover_hand_values():
    cov = circle_two_chart_cover()
    assert tuple(cov.p1.i((0, 1))) == (1,)
    assert tuple(cov.p1.r((1,))) == (0, 1)
    assert tuple(cov.p2.i((0, 1))) == (1,)
    # the second chart divides by 1 - x1
    assert cov.p2.i.components[0].den == parse_poly("1 - x1", ("x1", "x2"))
    assert not cov.Y1.contains((-1, 0)) and cov.Y2.contains((-1, 0))
    assert not cov.Y2.contains((1, 0)) and cov.Y1.contains((1, 0))
    for p in sample_points(cov.Y, 200):
        assert cov.Y1.contains(p) or cov.Y2.contains(p)


@pytest.mark.parametrize("pole", [-1, 1])
def test_circle_charts_round_trip(pole):
    res = verify_retract(circle_chart(pole), 200)
    assert res.passed
    with pytest.raises(ValueError):
        circle_chart(0)


def test_cubic_fixture_polynomial():
    S = disconnected_cubic_fixture()
    assert S.P.to_text() == FIXTURE_TEXT
    x, y, z, w = symbols(("x", "y", "z", "w"))
    assert S.P == w * (x * x + y * y) - z * (z - w) * (z - 2 * w)
    assert S.contains((0, 0, 0, 1))
    pt = (Fraction(3, 4), Fraction(3, 8), Fraction(9, 4))
    assert pt[0] ** 2 + pt[1] ** 2 == Fraction(45, 64) == pt[2] * (pt[2] - 1) * (pt[2] - 2)
    assert S.contains(pt) and S.contains(pt + (1,))
    assert S.contains((Fraction(3, 2), Fraction(3, 4), Fraction(9, 2), 2))


def test_cubic_rejects_non_homogeneous():
    with pytest.raises(ValueError):
        CubicSurface(Poly.var("x", ("x", "y", "z", "w")) ** 2)


def test_point_pool_on_surface():
    pool = fixture_point_pool(200, seed=1)
    assert len(pool) == 200
    assert all(affine_cubic(p) == 0 for p in pool)


def test_third_point_brute_force_oracle():
    S = disconnected_cubic_fixture()
    for y, z in secant_pairs(S, 20, seed=2):
        x = cubic_third_point(S, y, z)
        assert affine_cubic(x) == 0
        # x is on the line through y and z
        d1 = [b - a for a, b in zip(y, z)]
        d2 = [b - a for a, b in zip(y, x)]
        k = next(i for i in range(3) if d1[i] != 0)
        lam = d2[k] / d1[k]
        assert all(d2[i] == lam * d1[i] for i in range(3))
        # the cubic along the line factors as c3 t (t - 1)(t - lam)
        c0, c1, c2, c3 = line_restriction(S, y, z)
        assert (c0, c1, c2) == (0, c3 * lam, -c3 * (1 + lam))


def test_third_point_symmetry_and_involution():
    S = disconnected_cubic_fixture()
    for y, z in secant_pairs(S, 30, seed=4):
        x = cubic_third_point(S, y, z)
        assert cubic_third_point(S, z, y) == x
        assert cubic_third_point(S, y, x) == tuple(z)


def test_third_point_rejections():
    S = disconnected_cubic_fixture()
    o = (0, 0, 0)
    with pytest.raises(PairNotInU):
        cubic_third_point(S, o, o)
    # the line z = 0 through the origin and (0, 0, 0) direction x: x^2 = 0 is tangent
    with pytest.raises(Exception):
        cubic_third_point(S, o, (1, 0, 0))


def test_secant_pairs_count():
    S = disconnected_cubic_fixture()
    pairs = secant_pairs(S, 100)
    assert len(pairs) == 100
    assert len(set(pairs)) == 100


def test_gallery_registry():
    assert {"sphere-1", "sphere-2", "sphere-3", "circle-group", "circle-two-chart", "disconnected-cubic"} <= set(GALLERY)
    for name, entry in GALLERY.items():
        obj = gallery_get(name)
        if entry.kind == "spray":
            assert isinstance(obj, Spray)
    with pytest.raises(KeyError):
        gallery_get("nope")
