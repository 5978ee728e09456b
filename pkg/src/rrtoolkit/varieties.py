"""Variety presentations, exact rational-point samplers and identity checks."""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterator, Sequence

from .ratcalc import DomainError, Poly, RatFun, RatMap, RegularMap, symbols

Point = tuple[Fraction, ...]

DEFAULT_BOUND = 10**4


class SamplingError(RuntimeError):
    """Not enough in-domain samples were found within the retry budget."""


class SamplerExhausted(SamplingError):
    """An enumerated sampler ran out of points."""


def rational_stream(seed, bound: int = DEFAULT_BOUND) -> Iterator[Fraction]:
    """Seeded stream of rationals p/q with |p| <= bound and 1 <= q <= bound."""
    rng = random.Random(str(seed))
    while True:
        p = rng.randint(-bound, bound)
        q = rng.randint(1, bound)
        yield Fraction(p, q)


@dataclass(frozen=True)
class RationalPointSampler:
    """Source of exact rational points.

    ``parametrized``: images of random parameter vectors under ``parametrization``.
    ``product``: concatenation of points from ``factors`` with derived seeds.
    ``graph``: points x of ``base`` followed by ``parametrization(x)``.
    ``enumerated``: the listed ``points`` in order.
    ``anchors`` are emitted before any generated point.
    """

    kind: str
    parametrization: RatMap | None = None
    factors: tuple["RationalPointSampler", ...] = ()
    base: "RationalPointSampler | None" = None
    points: tuple[Point, ...] = ()
    anchors: tuple[Point, ...] = ()
    seed: int = 0
    bound: int = DEFAULT_BOUND

    def __post_init__(self):
        if self.kind not in ("parametrized", "product", "graph", "enumerated"):
            raise ValueError(f"unknown sampler kind {self.kind!r}")
        if self.kind in ("parametrized", "graph") and self.parametrization is None:
            raise ValueError(f"{self.kind} sampler needs a parametrization")
        if self.kind == "graph" and self.base is None:
            raise ValueError("graph sampler needs a base sampler")
        if self.kind == "product" and not self.factors:
            raise ValueError("product sampler needs factors")

    def stream(self, seed=None, with_anchors: bool = True) -> Iterator[Point]:
        seed = self.seed if seed is None else seed
        if with_anchors:
            for a in self.anchors:
                yield tuple(Fraction(x) for x in a)
        if self.kind == "enumerated":
            for p in self.points:
                yield tuple(Fraction(x) for x in p)
            return
        if self.kind == "parametrized":
            k = self.parametrization.n_in
            params = rational_stream(f"{seed}:param", self.bound)
            while True:
                t = tuple(next(params) for _ in range(k))
                try:
                    yield self.parametrization(t)
                except DomainError:
                    continue
        if self.kind == "product":
            if with_anchors:
                pools = [[tuple(Fraction(x) for x in a) for a in f.anchors] for f in self.factors]
                if all(pools):
                    for combo in itertools.product(*pools):
                        yield tuple(itertools.chain.from_iterable(combo))
            streams = [f.stream(f"{seed}:{i}", with_anchors=False) for i, f in enumerate(self.factors)]
            while True:
                try:
                    parts = [next(s) for s in streams]
                except StopIteration:
                    return
                yield tuple(itertools.chain.from_iterable(parts))
        if self.kind == "graph":
            for x in self.base.stream(f"{seed}:base"):
                try:
                    yield tuple(x) + tuple(self.parametrization(x))
                except DomainError:
                    continue


@dataclass(frozen=True)
class VarietyPresentation:
    """Locally closed subset of R^ambient_dim given by generators and inequations."""

    ambient_dim: int
    generators: tuple[Poly, ...]
    inequations: tuple[Poly, ...] = ()
    sampler: RationalPointSampler | None = None
    coords: tuple[str, ...] = ()
    name: str = ""

    def __post_init__(self):
        coords = self.coords or tuple(f"x{i + 1}" for i in range(self.ambient_dim))
        if len(coords) != self.ambient_dim:
            raise ValueError("coordinate names must match ambient_dim")
        object.__setattr__(self, "coords", tuple(coords))
        object.__setattr__(self, "generators", tuple(g.embed(coords) for g in self.generators))
        object.__setattr__(self, "inequations", tuple(q.embed(coords) for q in self.inequations))

    def contains(self, p: Sequence) -> bool:
        return contains(self, p)

    def sample(self, count: int, seed=None) -> list[Point]:
        return sample_points(self, count, self.sampler.seed if seed is None else seed)

    def restrict(self, inequations: Sequence[Poly], name: str = "") -> "VarietyPresentation":
        """The open subpresentation where the extra inequations are nonzero as well."""
        return replace(self, inequations=self.inequations + tuple(inequations), name=name or self.name)

    def relabel(self, coords: Sequence[str]) -> "VarietyPresentation":
        coords = tuple(coords)
        return replace(
            self,
            coords=coords,
            generators=tuple(g.relabel(coords) for g in self.generators),
            inequations=tuple(q.relabel(coords) for q in self.inequations),
        )


def contains(v: VarietyPresentation, p: Sequence) -> bool:
    if len(p) != v.ambient_dim:
        raise ValueError(f"point has {len(p)} coordinates, ambient dimension is {v.ambient_dim}")
    p = tuple(Fraction(x) for x in p)
    return all(g.evaluate(p) == 0 for g in v.generators) and all(q.evaluate(p) != 0 for q in v.inequations)


def iter_points(v: VarietyPresentation, seed, with_anchors: bool = True) -> Iterator[Point]:
    """Unbounded stream of points of ``v`` (stream points not in ``v`` are skipped)."""
    if v.sampler is None:
        raise SamplingError(f"{v.name or 'variety'} has no sampler")
    for p in v.sampler.stream(seed, with_anchors=with_anchors):
        if contains(v, p):
            yield p


def sample_points(v: VarietyPresentation, count: int, seed=0, budget_factor: int = 20) -> list[Point]:
    """Exactly ``count`` points of ``v``; deterministic in ``seed``."""
    if v.sampler is None:
        raise SamplingError(f"{v.name or 'variety'} has no sampler")
    out = []
    tried = 0
    budget = budget_factor * count + 100
    for p in v.sampler.stream(seed):
        tried += 1
        if contains(v, p):
            out.append(p)
            if len(out) == count:
                return out
        if tried >= budget:
            raise SamplingError(f"only {len(out)} of {count} points found in {tried} draws")
    if v.sampler.kind == "enumerated":
        raise SamplerExhausted(f"enumerated sampler gave {len(out)} of {count} points")
    raise SamplingError(f"sampler stopped after {len(out)} of {count} points")


def product_presentation(a: VarietyPresentation, b: VarietyPresentation, prefixes=("y", "z")) -> VarietyPresentation:
    """A x B with coordinates renamed y1.. and z1.. (or the given prefixes)."""
    ca = tuple(f"{prefixes[0]}{i + 1}" for i in range(a.ambient_dim))
    cb = tuple(f"{prefixes[1]}{i + 1}" for i in range(b.ambient_dim))
    a2, b2 = a.relabel(ca), b.relabel(cb)
    sampler = RationalPointSampler("product", factors=(a.sampler, b.sampler), seed=a.sampler.seed)
    return VarietyPresentation(
        a.ambient_dim + b.ambient_dim,
        a2.generators + b2.generators,
        a2.inequations + b2.inequations,
        sampler,
        ca + cb,
        name=f"{a.name}x{b.name}",
    )


# -- standard samplers -------------------------------------------------------------


def sphere_parametrization(n: int, params: Sequence[str] | None = None) -> RatMap:
    """Inverse stereographic projection R^n -> S^n from the pole (-1, 0, ..., 0)."""
    params = tuple(params or (f"t{i + 1}" for i in range(n)))
    ts = symbols(params)
    s = sum((t * t for t in ts), Poly.const(0, params))
    den = 1 + s
    comps = [RatFun(1 - s, den)] + [RatFun(2 * t, den) for t in ts]
    return RatMap(params, comps, name=f"stereo{n}")


def sphere_presentation(n: int, seed: int = 0, coords: Sequence[str] | None = None) -> VarietyPresentation:
    coords = tuple(coords or (f"x{i + 1}" for i in range(n + 1)))
    xs = symbols(coords)
    gen = sum((x * x for x in xs), Poly.const(0, coords)) - 1
    pole = (Fraction(-1),) + (Fraction(0),) * n
    sampler = RationalPointSampler("parametrized", sphere_parametrization(n), anchors=(pole,), seed=seed)
    return VarietyPresentation(n + 1, (gen,), (), sampler, coords, name=f"S{n}")


def affine_space(n: int, seed: int = 0, coords: Sequence[str] | None = None, bound: int = DEFAULT_BOUND):
    coords = tuple(coords or (f"x{i + 1}" for i in range(n)))
    params = tuple(f"t{i + 1}" for i in range(n))
    sampler = RationalPointSampler("parametrized", RatMap(params, symbols(params)), seed=seed, bound=bound)
    return VarietyPresentation(n, (), (), sampler, coords, name=f"R{n}")


# -- identity checking ------------------------------------------------------------


@dataclass
class IdentityResult:
    passed: bool
    trials: int
    witness: Point | None = None
    lhs_value: tuple | None = None
    rhs_value: tuple | None = None

    def __bool__(self):
        return self.passed


def _as_map(f, n_in: int) -> RegularMap:
    if isinstance(f, RegularMap):
        return f
    if isinstance(f, (Poly, RatFun)):
        inputs = f.vars
        return RatMap(inputs, [f])
    raise TypeError(f"cannot treat {type(f).__name__} as a map")


def identity_check(lhs, rhs, v: VarietyPresentation, trials: int, seed=0, budget_factor: int = 20) -> IdentityResult:
    """Compare two maps by exact evaluation at ``trials`` in-domain samples of ``v``."""
    lhs, rhs = _as_map(lhs, v.ambient_dim), _as_map(rhs, v.ambient_dim)
    done = 0
    drawn = 0
    budget = budget_factor * trials + 100
    for p in iter_points(v, seed):
        drawn += 1
        if drawn > budget:
            break
        try:
            a = tuple(lhs(p))
            b = tuple(rhs(p))
        except DomainError:
            continue
        done += 1
        if a != b:
            return IdentityResult(False, done, p, a, b)
        if done == trials:
            return IdentityResult(True, done)
    raise SamplingError(f"identity check inconclusive: {done} of {trials} in-domain samples")


# -- regions -------------------------------------------------------------------------

_RELATIONS = ("<=", "<", "=")


@dataclass(frozen=True)
class Region:
    """Semialgebraic set {p : c(p) rel 0 for every constraint} inside a box.

    With ``bounded=False`` the box is only a working window of an unbounded
    set; membership then ignores the box.
    """

    ambient_dim: int
    constraints: tuple[tuple[Poly, str], ...]
    bounding_box: tuple[tuple[Fraction, Fraction], ...]
    name: str = ""
    coords: tuple[str, ...] = ()
    bounded: bool = True

    def __post_init__(self):
        if len(self.bounding_box) != self.ambient_dim:
            raise ValueError("bounding box needs one interval per coordinate")
        box = tuple((Fraction(lo), Fraction(hi)) for lo, hi in self.bounding_box)
        for lo, hi in box:
            if lo > hi:
                raise ValueError(f"empty interval [{lo}, {hi}]")
        object.__setattr__(self, "bounding_box", box)
        coords = tuple(self.coords) or _default_coords(self.ambient_dim)
        if len(coords) != self.ambient_dim:
            raise ValueError("coordinate names must match ambient_dim")
        object.__setattr__(self, "coords", coords)
        cons = []
        for c, rel in self.constraints:
            if rel not in _RELATIONS:
                raise ValueError(f"unknown relation {rel!r}")
            cons.append((c.embed(coords), rel))
        object.__setattr__(self, "constraints", tuple(cons))

    def with_box(self, box, bounded: bool | None = None) -> "Region":
        return replace(self, bounding_box=tuple(box), bounded=self.bounded if bounded is None else bounded)

    def scaled_box(self, factor) -> tuple[tuple[Fraction, Fraction], ...]:
        """Bounding box scaled about its center."""
        factor = Fraction(factor)
        out = []
        for lo, hi in self.bounding_box:
            mid, half = (lo + hi) / 2, (hi - lo) / 2
            out.append((mid - factor * half, mid + factor * half))
        return tuple(out)

    def contains(self, p: Sequence) -> bool:
        p = tuple(Fraction(x) for x in p)
        if self.bounded:
            for x, (lo, hi) in zip(p, self.bounding_box):
                if x < lo or x > hi:
                    return False
        for c, rel in self.constraints:
            val = c.evaluate(p)
            if rel == "<=" and val > 0:
                return False
            if rel == "<" and val >= 0:
                return False
            if rel == "=" and val != 0:
                return False
        return True

    def grid(self, per_axis: int | Sequence[int]) -> list[Point]:
        """Exact rational tensor grid over the bounding box, filtered by membership."""
        if isinstance(per_axis, int):
            per_axis = [per_axis] * self.ambient_dim
        axes = []
        for (lo, hi), k in zip(self.bounding_box, per_axis):
            if k == 1 or lo == hi:
                axes.append([(lo + hi) / 2])
            else:
                axes.append([lo + (hi - lo) * Fraction(j, k - 1) for j in range(k)])
        return [p for p in itertools.product(*axes) if self.contains(p)]

    def is_bounded(self) -> bool:
        return self.bounded


def _default_coords(n: int) -> tuple[str, ...]:
    return ("t",) if n == 1 else tuple(f"x{i + 1}" for i in range(n))


def interval(lo, hi, open_: bool = False, var: str = "t") -> Region:
    """[lo, hi] (or the open interval) as a one-dimensional region."""
    t = Poly.var(var)
    lo, hi = Fraction(lo), Fraction(hi)
    rel = "<" if open_ else "<="
    # (t - lo)(t - hi) rel 0 describes the interval
    return Region(1, (((t - lo) * (t - hi), rel),), ((lo, hi),), name=f"[{lo},{hi}]", coords=(var,))


def ball(n: int, radius=1, coords: Sequence[str] | None = None) -> Region:
    coords = tuple(coords or (f"x{i + 1}" for i in range(n)))
    r = Fraction(radius)
    xs = symbols(coords)
    c = sum((x * x for x in xs), Poly.const(0, coords)) - r * r
    return Region(n, ((c, "<="),), tuple((-r, r) for _ in range(n)), name=f"B{n}({r})", coords=coords)
