"""Worked fixtures: sphere and circle group sprays, the two-chart circle cover
and the third-intersection map on a cubic surface."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterator, Sequence

from .ratcalc import Poly, PreconditionError, RatFun, RatMap, substitute, symbols
from .sprays import RetractPresentation, Spray, spray_vars
from .varieties import RationalPointSampler, VarietyPresentation, rational_stream, sphere_presentation


def sphere_spray(n: int, seed: int = 0) -> Spray:
    """Spray on S^n: sigma(y, v) is the second intersection of S^n with the
    line through -y and y + v; tau(y, z) = z - y."""
    if n < 1:
        raise ValueError("sphere_spray needs n >= 1")
    m = n + 1
    ys_, vs_, zs_ = spray_vars(m, m)
    sv = ys_ + vs_
    yv = symbols(sv)
    y, v = yv[:m], yv[m:]
    w = [vi + 2 * yi for vi, yi in zip(v, y)]
    ww = sum((wi * wi for wi in w), Poly.const(0, sv))
    yw = sum((yi * wi for yi, wi in zip(y, w)), Poly.const(0, sv))
    sigma = RatMap(sv, [RatFun(-yi * ww + 2 * yw * wi, ww) for yi, wi in zip(y, w)], [ww], name="sigma")
    yz = ys_ + zs_
    yzv = symbols(yz)
    tau = RatMap(yz, [yzv[m + i] - yzv[i] for i in range(m)], name="tau")
    nz = sum(((yzv[m + i] + yzv[i]) ** 2 for i in range(m)), Poly.const(0, yz))
    return Spray(m, sphere_presentation(n, seed), (ww,), (nz,), sigma, tau, name=f"sphere-{n}")


def _circle_inverse_chart(t: Poly, sign: int = 1) -> list[RatFun]:
    """t -> (sign(1 - t^2)/(1 + t^2), 2t/(1 + t^2))."""
    den = 1 + t * t
    return [RatFun(sign * (1 - t * t), den), RatFun(2 * t, den)]


def circle_group_spray(seed: int = 0) -> Spray:
    """S^1 as the unit complex numbers with the half-angle chart at 1."""
    ys_, vs_, zs_ = spray_vars(2, 1)
    sv = ys_ + vs_
    a1, a2, v = symbols(sv)
    c1, c2 = _circle_inverse_chart(v)
    sigma = RatMap(sv, [c1 * a1 - c2 * a2, c2 * a1 + c1 * a2], name="sigma")
    yz = ys_ + zs_
    a1, a2, b1, b2 = symbols(yz)
    den = 1 + a1 * b1 + a2 * b2
    tau = RatMap(yz, [RatFun(a1 * b2 - a2 * b1, den)], [den], name="tau")
    return Spray(1, sphere_presentation(1, seed), (), (den,), sigma, tau, name="circle-group")


@dataclass(frozen=True)
class CircleCover:
    Y: VarietyPresentation
    Y1: VarietyPresentation
    Y2: VarietyPresentation
    p1: RetractPresentation
    p2: RetractPresentation


def circle_chart(pole: int, seed: int = 0) -> RetractPresentation:
    """Stereographic chart of S^1 from (pole, 0), pole = -1 or 1."""
    if pole not in (-1, 1):
        raise ValueError("pole must be -1 or 1")
    Y = circle_presentation(seed)
    x1, x2 = symbols(Y.coords)
    den = 1 - pole * x1
    Yk = Y.restrict([den], name=f"S1-({pole},0)")
    i = RatMap(Y.coords, [RatFun(x2, den)], [den], name="i")
    t = Poly.var("t")
    r = RatMap(("t",), _circle_inverse_chart(t, sign=-pole), name="r")
    return RetractPresentation(Yk, 1, (), i, r, name=f"chart({pole},0)")


def circle_presentation(seed: int = 0) -> VarietyPresentation:
    """S^1 with both poles (-1,0) and (1,0) emitted first by the sampler."""
    base = sphere_presentation(1, seed)
    anchors = ((Fraction(-1), Fraction(0)), (Fraction(1), Fraction(0)))
    s = base.sampler
    sampler = RationalPointSampler(s.kind, s.parametrization, anchors=anchors, seed=seed, bound=s.bound)
    return VarietyPresentation(2, base.generators, (), sampler, base.coords, name="S1")


def circle_two_chart_cover(seed: int = 0) -> CircleCover:
    p1 = circle_chart(-1, seed)
    p2 = circle_chart(1, seed)
    return CircleCover(circle_presentation(seed), p1.Y, p2.Y, p1, p2)


# -- cubic surfaces ---------------------------------------------------------------

PROJECTIVE = ("x", "y", "z", "w")


class PairNotInU(ValueError):
    """The secant pair is not admissible for the third-intersection map."""


@dataclass(frozen=True)
class CubicSurface:
    P: Poly
    affine_chart: int = 3

    def __post_init__(self):
        if any(sum(e) != 3 for e in self.P.terms):
            raise ValueError("cubic surface polynomial must be homogeneous of degree 3")
        if len(self.P.vars) != 4:
            raise ValueError("cubic surface needs four projective variables")

    @property
    def affine_vars(self) -> tuple[str, ...]:
        return tuple(v for i, v in enumerate(self.P.vars) if i != self.affine_chart)

    def affine_poly(self) -> Poly:
        return self.P.specialize({self.P.vars[self.affine_chart]: 1})

    def to_affine(self, p: Sequence) -> tuple[Fraction, ...]:
        p = tuple(Fraction(x) for x in p)
        if len(p) == 3:
            return p
        if len(p) != 4:
            raise ValueError("points need three affine or four projective coordinates")
        h = p[self.affine_chart]
        if h == 0:
            raise PreconditionError("point lies at infinity of the affine chart")
        return tuple(x / h for i, x in enumerate(p) if i != self.affine_chart)

    def contains(self, p: Sequence) -> bool:
        return self.affine_poly().evaluate(self.to_affine(p)) == 0


def disconnected_cubic_fixture() -> CubicSurface:
    """w(x^2 + y^2) - z(z - w)(z - 2w).

    In the chart w = 1 this reads x^2 + y^2 = z(z-1)(z-2); the right side is
    nonnegative exactly for z in [0,1] or z >= 2, so the real locus has two
    components.  Kept as a negative example for retract rationality.
    """
    x, y, z, w = symbols(PROJECTIVE)
    return CubicSurface(w * (x * x + y * y) - z * (z - w) * (z - 2 * w), affine_chart=3)


def line_restriction(S: CubicSurface, y: Sequence, z: Sequence) -> list[Fraction]:
    """Coefficients c0..c3 of t -> P(y + t(z - y)) in the affine chart."""
    y, z = S.to_affine(y), S.to_affine(z)
    t = Poly.var("t")
    values = [a + t * (b - a) for a, b in zip(y, z)]
    (restricted,), _ = substitute([S.affine_poly()], values)
    terms = restricted.terms
    return [terms.get((k,), Fraction(0)) for k in range(4)]


def cubic_third_point(S: CubicSurface, y: Sequence, z: Sequence) -> tuple[Fraction, ...]:
    """Third intersection of the line through y and z with S (affine chart)."""
    ya, za = S.to_affine(y), S.to_affine(z)
    if ya == za:
        raise PairNotInU("endpoints coincide")
    c0, c1, c2, c3 = line_restriction(S, ya, za)
    if c0 != 0:
        raise PreconditionError("first point is not on the surface")
    if c0 + c1 + c2 + c3 != 0:
        raise PreconditionError("second point is not on the surface")
    if c3 == 0:
        raise PairNotInU("line meets the surface improperly (cubic coefficient vanishes)")
    # roots 0, 1 and t* sum to -c2/c3
    ts = -c2 / c3 - 1
    if ts in (0, 1):
        raise PairNotInU("line is tangent at an endpoint")
    return tuple(a + ts * (b - a) for a, b in zip(ya, za))


# -- rational points on the fixture -------------------------------------------------


def _two_squares(n: int, limit: int = 10**5) -> tuple[int, int] | None:
    """Some (a, b) with a^2 + b^2 = n, searching a up to sqrt(n)."""
    if n < 0:
        return None
    a = 0
    while a * a <= n and a <= limit:
        b2 = n - a * a
        b = math.isqrt(b2)
        if b * b == b2:
            return a, b
        a += 1
    return None


def fixture_slices(max_height: int = 12) -> list[tuple[Fraction, Fraction, Fraction]]:
    """Slices z = c of the w = 1 chart whose circle x^2 + y^2 = g(c) has a
    rational point, returned as (c, a, b) with a^2 + b^2 = g(c) and g(c) > 0."""
    out = []
    seen = set()
    for q in range(1, max_height + 1):
        for p in range(-2 * max_height, 4 * max_height + 1):
            c = Fraction(p, q)
            if c in seen:
                continue
            seen.add(c)
            g = c * (c - 1) * (c - 2)
            if g <= 0:
                continue
            # g = N / q^3 is a sum of rational squares iff N q is one of integers
            num, den = g.numerator, g.denominator
            rep = _two_squares(num * den)
            if rep is None:
                continue
            a, b = rep
            out.append((c, Fraction(a, den), Fraction(b, den)))
    return out


def slice_points(c: Fraction, a: Fraction, b: Fraction, params: Iterator[Fraction], count: int):
    """Rational points of x^2 + y^2 = a^2 + b^2 at height c, by lines through (a, b)."""
    out = []
    for _ in range(count):
        s = next(params)
        # line (a, b) + u(1, s) meets the circle again at u = -2(a + b s)/(1 + s^2)
        u = -2 * (a + b * s) / (1 + s * s)
        out.append((a + u, b + u * s, c))
    return out


def fixture_point_pool(size: int, seed=0) -> list[tuple[Fraction, Fraction, Fraction]]:
    """Seeded rational points on the disconnected cubic (affine chart w = 1)."""
    slices = fixture_slices()
    if not slices:
        raise RuntimeError("no rational slices found")
    params = rational_stream(f"{seed}:cubic", 50)
    per = max(1, -(-size // len(slices)))
    pool = []
    for c, a, b in slices:
        pool.extend(slice_points(c, a, b, params, per))
    # interleave slices so consecutive points differ in height
    order = sorted(range(len(pool)), key=lambda k: (k % per, k // per))
    return [pool[k] for k in order][:size]


def secant_pairs(S: CubicSurface, count: int, seed=0) -> list[tuple[tuple, tuple]]:
    """Admissible pairs of rational points of S for the third-intersection map."""
    pool = fixture_point_pool(max(4 * count, 40), seed)
    pairs = []
    n = len(pool)
    for k in range(n):
        for step in (1, 7, 13):
            y, z = pool[k], pool[(k + step) % n]
            try:
                cubic_third_point(S, y, z)
            except PairNotInU:
                continue
            pairs.append((y, z))
            break
        if len(pairs) == count:
            return pairs
    raise RuntimeError(f"only {len(pairs)} admissible pairs found")


# -- registry -------------------------------------------------------------------------


@dataclass(frozen=True)
class GalleryEntry:
    name: str
    kind: str
    description: str
    build: Callable


def _torus(seed: int = 0) -> Spray:
    from .sprays import product_spray

    return product_spray(circle_group_spray(seed), circle_group_spray(seed))


GALLERY: dict[str, GalleryEntry] = {
    e.name: e
    for e in [
        GalleryEntry("sphere-1", "spray", "explicit spray on the circle S^1", lambda seed=0: sphere_spray(1, seed)),
        GalleryEntry("sphere-2", "spray", "explicit spray on the sphere S^2", lambda seed=0: sphere_spray(2, seed)),
        GalleryEntry("sphere-3", "spray", "explicit spray on the sphere S^3", lambda seed=0: sphere_spray(3, seed)),
        GalleryEntry("circle-group", "spray", "group spray on S^1 with the half-angle chart", circle_group_spray),
        GalleryEntry("torus", "spray", "product of two circle group sprays", _torus),
        GalleryEntry("circle-chart-minus", "retract", "stereographic chart of S^1 from (-1,0)", lambda seed=0: circle_chart(-1, seed)),
        GalleryEntry("circle-chart-plus", "retract", "stereographic chart of S^1 from (1,0)", lambda seed=0: circle_chart(1, seed)),
        GalleryEntry("circle-two-chart", "cover", "S^1 covered by the two stereographic charts", circle_two_chart_cover),
        GalleryEntry("disconnected-cubic", "cubic", "w(x^2+y^2) - z(z-w)(z-2w) = 0", lambda seed=0: disconnected_cubic_fixture()),
    ]
}


def gallery_get(name: str, seed: int = 0):
    try:
        entry = GALLERY[name]
    except KeyError:
        raise KeyError(f"unknown gallery entry {name!r}; try one of {sorted(GALLERY)}") from None
    return entry.build(seed)
