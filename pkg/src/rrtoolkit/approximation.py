"""Regular approximation with exact interpolation on Z.

The pipelines build a base regular approximation h = r(q(x)) through a chart,
measure the spray correction phi = tau(h, f) on Z, extend it to a small
regular map psi vanishing where it should, and return f~ = sigma(h, psi).
Every map that the pipelines output is an exact rational formula; numeric
work (least squares, sup estimates) only selects coefficients and exponents.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .ratcalc import (
    DomainError,
    FunctionMap,
    Poly,
    PreconditionError,
    RatFun,
    RatMap,
    RegularMap,
    parse_poly,
    ratmap_compose,
    symbols,
)
from .sprays import RetractPresentation, Spray
from .varieties import RationalPointSampler, Region, VarietyPresentation, interval

DYADIC_BITS = 48
DEFAULT_CHART_LIMIT = 100.0
EXPONENT_CAP = 64
SLACK = 1e-9
FD_STEP = Fraction(1, 10**4)


class ApproximationError(RuntimeError):
    """Base class of pipeline failures."""


class ChartCoverageError(ApproximationError):
    """f(C) leaves the region where the chart is a usable coordinate."""

    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


class NotCloseEnough(ApproximationError):
    """The base approximation is too far from f; raise the degree."""

    def __init__(self, message: str, epsilon: float | None = None, witness=None):
        super().__init__(message)
        self.epsilon = epsilon
        self.witness = witness


class ExtensionError(ApproximationError):
    """No exponent up to the cap satisfies the sampled bound."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


# -- oracles ---------------------------------------------------------------------


@dataclass(frozen=True)
class Oracle:
    """Numeric evaluator of a continuous map R^dim_in -> R^dim_out."""

    name: str
    dim_in: int
    dim_out: int
    fn: Callable = field(compare=False)
    params: dict = field(default_factory=dict, compare=False)

    def __call__(self, x) -> tuple[float, ...]:
        return tuple(float(c) for c in self.fn(tuple(float(t) for t in x)))

    def to_doc(self) -> dict:
        return {"name": self.name, **self.params}


def trig_circle(frequency=1.0, phase=0.0) -> Oracle:
    w, ph = float(frequency), float(phase)
    return Oracle(
        "trig-circle",
        1,
        2,
        lambda x: (math.cos(w * x[0] + ph), math.sin(w * x[0] + ph)),
        {"frequency": frequency, "phase": phase},
    )


def polynomial_oracle(components: Sequence, coords: Sequence[str]) -> Oracle:
    """Oracle of an explicit polynomial map; components are Poly or text."""
    coords = tuple(coords)
    polys = [c if isinstance(c, Poly) else parse_poly(c, coords) for c in components]
    polys = [p.embed(coords) for p in polys]
    return Oracle(
        "polynomial",
        len(coords),
        len(polys),
        lambda x: tuple(p.evaluate_float(x) for p in polys),
        {"components": [p.to_text() for p in polys], "coords": list(coords)},
    )


def piecewise_angle(knots: Sequence[Sequence[float]]) -> Oracle:
    """Circle-valued map whose angle is piecewise linear through the knots."""
    pts = sorted((float(t), float(a)) for t, a in knots)
    if len(pts) < 2:
        raise ValueError("piecewise oracle needs at least two knots")
    ts = [t for t, _ in pts]
    angs = [a for _, a in pts]

    def fn(x):
        a = float(np.interp(x[0], ts, angs))
        return (math.cos(a), math.sin(a))

    return Oracle("piecewise", 1, 2, fn, {"knots": [list(k) for k in pts]})


ORACLES = {"trig-circle", "polynomial", "piecewise"}


def oracle_from_doc(doc: dict) -> Oracle:
    name = doc.get("name")
    if name == "trig-circle":
        return trig_circle(doc.get("frequency", 1.0), doc.get("phase", 0.0))
    if name == "polynomial":
        return polynomial_oracle(doc["components"], doc["coords"])
    if name == "piecewise":
        return piecewise_angle(doc["knots"])
    raise ValueError(f"unknown oracle {name!r}; known: {sorted(ORACLES)}")


# -- problem and result types -----------------------------------------------------------


@dataclass(frozen=True)
class ApproxProblem:
    """Data (X, Z, C, f) of an approximation-with-interpolation problem.

    ``retraction_to_Z`` is an optional regular map X -> X with image in Z that
    fixes Z; when present the correction on Z is extended by composing with it.
    """

    X_dim: int
    Z: VarietyPresentation
    C: Region
    f: Oracle
    f_on_Z: RegularMap
    chart: RetractPresentation | None = None
    D: Region | None = None
    retraction_to_Z: RegularMap | None = None
    fit_grid: int = 1001
    sup_grid: int = 1001
    zc_count: int = 101
    chart_limit: float = DEFAULT_CHART_LIMIT
    name: str = ""

    @property
    def coords(self) -> tuple[str, ...]:
        return self.C.coords

    def zc_points(self) -> list[tuple[Fraction, ...]]:
        """Deterministic rational samples of Z inside C."""
        out = []
        if self.Z.sampler is None:
            raise PreconditionError("Z needs a rational-point sampler")
        budget = 50 * self.zc_count
        for k, p in enumerate(self.Z.sampler.stream()):
            if k >= budget or len(out) >= self.zc_count:
                break
            if self.Z.contains(p) and self.C.contains(p) and p not in out:
                out.append(p)
        return out

    def validate(self, tol: float = 1e-12) -> None:
        if self.Z.ambient_dim != self.X_dim or self.C.ambient_dim != self.X_dim:
            raise PreconditionError("Z and C must live in R^X_dim")
        for p in self.zc_points():
            for x, (lo, hi) in zip(p, self.C.bounding_box):
                if x < lo or x > hi:
                    raise PreconditionError(f"Z∩C sample {p} lies outside the bounding box")
            exact = [float(c) for c in self.f_on_Z(p)]
            num = self.f(p)
            if max(abs(a - b) for a, b in zip(exact, num)) > tol:
                raise PreconditionError(f"f_on_Z disagrees with the oracle at {p}")


@dataclass
class ExtensionResult:
    F: RegularMap
    exponents: tuple[int, int, int]
    bound_report: dict


@dataclass
class ApproxResult:
    f_tilde: RegularMap
    h: RegularMap
    epsilon: float
    sup_error: float
    c1_error: float | None = None
    degree: int = 0
    extension: ExtensionResult | None = None
    smooth_report: dict | None = None

    @property
    def exponents(self) -> tuple[int, int, int] | None:
        return self.extension.exponents if self.extension else None


# -- numeric helpers -----------------------------------------------------------------------


def _norm2(values) -> Fraction:
    return sum((Fraction(v) ** 2 for v in values), Fraction(0))


def _fnorm(values) -> float:
    return math.sqrt(sum(float(v) ** 2 for v in values))


def map_float(m: RegularMap, point: Sequence[float]) -> tuple[float, ...]:
    """Float value of a map; explicit maps are evaluated in floating point."""
    if isinstance(m, RatMap):
        out = []
        for c in m.components:
            d = c.den.evaluate_float(point)
            if d == 0.0:
                raise DomainError("denominator vanishes", c.den, tuple(point))
            out.append(c.num.evaluate_float(point) / d)
        return tuple(out)
    return tuple(float(v) for v in m(tuple(Fraction(x) for x in point)))


def _scaling(box) -> list[tuple[Fraction, Fraction]]:
    """Affine maps x -> a x + b sending each box interval onto [-1, 1]."""
    out = []
    for lo, hi in box:
        if hi == lo:
            out.append((Fraction(0), Fraction(0)))
        else:
            a = Fraction(2) / (hi - lo)
            out.append((a, -(lo + hi) / (hi - lo)))
    return out


def _multi_indices(dim: int, degree: int) -> list[tuple[int, ...]]:
    idx = [a for a in itertools.product(range(degree + 1), repeat=dim) if sum(a) <= degree]
    return sorted(idx, key=lambda a: (sum(a), a))


def _cheb_design(points: np.ndarray, box, degree: int) -> tuple[np.ndarray, list[tuple[int, ...]]]:
    dim = points.shape[1]
    scal = _scaling(box)
    cols = []
    for j in range(dim):
        a, b = float(scal[j][0]), float(scal[j][1])
        cols.append(np.polynomial.chebyshev.chebvander(a * points[:, j] + b, degree))
    idx = _multi_indices(dim, degree)
    V = np.empty((points.shape[0], len(idx)))
    for k, alpha in enumerate(idx):
        col = np.ones(points.shape[0])
        for j, e in enumerate(alpha):
            col = col * cols[j][:, e]
        V[:, k] = col
    return V, idx


def dyadic(c: float, bits: int = DYADIC_BITS) -> Fraction:
    """Exact dyadic rational nearest to c at precision 2^-bits."""
    return Fraction(round(c * 2**bits), 2**bits)


def _cheb_polys(coords: Sequence[str], box, degree: int) -> list[list[Poly]]:
    """T_k(a x_j + b) for every coordinate j and k <= degree, as exact Polys."""
    coords = tuple(coords)
    out = []
    for (a, b), x in zip(_scaling(box), symbols(coords)):
        s = a * x + b
        T = [Poly.const(1, coords), s]
        while len(T) <= degree:
            T.append(2 * s * T[-1] - T[-2])
        out.append(T[: degree + 1])
    return out


def cheb_fit(
    points: Sequence[Sequence[float]],
    values: np.ndarray,
    box,
    degree: int,
    coords: Sequence[str],
    weight: np.ndarray | None = None,
) -> list[Poly]:
    """Least-squares Chebyshev fit with dyadic-rounded coefficients.

    With ``weight`` w the fit is of the form w(x) * p(x); the returned Polys are
    the fitted p only.
    """
    pts = np.asarray(points, dtype=float)
    vals = np.asarray(values, dtype=float)
    if vals.ndim == 1:
        vals = vals[:, None]
    V, idx = _cheb_design(pts, box, degree)
    if weight is not None:
        V = V * np.asarray(weight, dtype=float)[:, None]
    coef, *_ = np.linalg.lstsq(V, vals, rcond=None)
    T = _cheb_polys(coords, box, degree)
    zero = Poly.const(0, coords)
    basis = []
    for alpha in idx:
        b = Poly.const(1, coords)
        for j, e in enumerate(alpha):
            b = b * T[j][e]
        basis.append(b)
    out = []
    for col in range(vals.shape[1]):
        p = zero
        for k, bk in enumerate(basis):
            c = dyadic(float(coef[k, col]))
            if c:
                p = p + c * bk
        out.append(p)
    return out


def _as_floats(points) -> list[tuple[float, ...]]:
    return [tuple(float(x) for x in p) for p in points]


# -- base approximation ---------------------------------------------------------------------


def chart_values(p: ApproxProblem, points: Sequence) -> np.ndarray:
    """i(f(x)) on the given points, with chart coverage checks."""
    if p.chart is None:
        raise PreconditionError("the problem has no chart")
    i = p.chart.i
    out = []
    for x in points:
        y = p.f(x)
        if isinstance(i, RatMap):
            for q in i.domain_inequations:
                if abs(q.evaluate_float(y)) < 1e-12:
                    raise ChartCoverageError(f"f({_fmt(x)}) leaves the chart domain", x)
        try:
            w = map_float(i, y)
        except DomainError as exc:
            raise ChartCoverageError(f"f({_fmt(x)}) leaves the chart domain", x) from exc
        if max(abs(c) for c in w) > p.chart_limit or any(not math.isfinite(c) for c in w):
            raise ChartCoverageError(
                f"chart coordinate of f({_fmt(x)}) exceeds {p.chart_limit:g}; the image leaves the chart", x
            )
        for q in p.chart.W_inequations:
            if abs(q.evaluate_float(w)) < 1e-12:
                raise ChartCoverageError(f"chart image of f({_fmt(x)}) leaves W", x)
        out.append(w)
    return np.asarray(out, dtype=float)


def _fmt(x) -> str:
    return "(" + ", ".join(f"{float(c):.6g}" for c in x) + ")"


def base_regular_approx(p: ApproxProblem, degree: int) -> RatMap:
    """h = r(q(x)) with q the dyadic least-squares Chebyshev fit of i(f(x))."""
    if degree < 0:
        raise ValueError("degree must be >= 0")
    pts = _as_floats(p.C.grid(p.fit_grid))
    if not pts:
        raise PreconditionError("the fit grid over C is empty")
    w = chart_values(p, pts)
    q = cheb_fit(pts, w, p.C.bounding_box, degree, p.coords)
    inner = RatMap(p.coords, q, name="q")
    r = p.chart.r
    if not isinstance(r, RatMap):
        raise PreconditionError("the chart retraction r must be explicit")
    return ratmap_compose(r, inner, name=f"h[{degree}]")


# -- error measurement -----------------------------------------------------------------------


def _safe_eval(g: RegularMap, x) -> tuple:
    try:
        return tuple(g(tuple(x)))
    except DomainError as exc:
        raise DomainError(f"{getattr(g, 'name', '') or 'map'} undefined at grid point {_fmt(x)}", exc.poly, x) from exc


def measure_error(f_oracle, g: RegularMap, region: Region, order: int = 0, grid: int = 1001) -> float:
    """Max grid distance between f and g (order 0) or between their central
    difference Jacobians with step 1e-4 (order 1, Frobenius norm)."""
    if order not in (0, 1):
        raise ValueError("order must be 0 or 1")
    pts = region.grid(grid)
    worst = 0.0
    for x in pts:
        if order == 0:
            gv = _safe_eval(g, x)
            fv = f_oracle(x)
            worst = max(worst, _fnorm([float(a) - b for a, b in zip(gv, fv)]))
            continue
        total = 0.0
        for j in range(len(x)):
            xp = list(x)
            xm = list(x)
            xp[j] += FD_STEP
            xm[j] -= FD_STEP
            gp, gm = _safe_eval(g, xp), _safe_eval(g, xm)
            fp, fm = f_oracle(xp), f_oracle(xm)
            for a, b, c, d in zip(gp, gm, fp, fm):
                dg = float((Fraction(a) - Fraction(b)) / (2 * FD_STEP))
                df = (c - d) / (2 * float(FD_STEP))
                total += (dg - df) ** 2
        worst = max(worst, math.sqrt(total))
    return worst


# -- bounded regular extension ---------------------------------------------------------------


def _check_extension_inputs(p: ApproxProblem, G: RegularMap, phi: Poly, zc) -> None:
    for x in zc:
        if tuple(G(x)) != tuple(p.f_on_Z(x)):
            raise PreconditionError(f"G does not extend f_on_Z at {x}")
    phi = phi.embed(p.coords)
    zpts = list(zc)
    if p.Z.sampler is not None:
        for k, x in enumerate(p.Z.sampler.stream()):
            if k >= 200:
                break
            zpts.append(x)
    for x in zpts:
        if phi.evaluate(x) != 0:
            raise PreconditionError(f"phi does not vanish on Z at {x}")


def _damped(G: RegularMap, psi: Poly, N: int, coords) -> RegularMap:
    if N == 0:
        return G
    damp = (1 + psi) ** N
    if isinstance(G, RatMap):
        comps = [RatFun(c.num, c.den * damp) for c in G.components]
        return RatMap(coords, comps, G.domain_inequations, name=f"F[N={N}]")

    def fn(x):
        d = damp.evaluate(x)
        return tuple(Fraction(v) / d for v in G(x))

    return FunctionMap(G.n_in, G.n_out, fn, name=f"F[N={N}]")


def _smallest_exponent(norms: list[float], psis: list[float], target: float, cap: int, start: int = 0):
    """Smallest N >= start with max norms/(1+psi)^N <= target (float search)."""
    live = [(math.log(g), math.log1p(s)) for g, s in zip(norms, psis) if g > 0.0]
    if not live:
        return start
    if target <= 0.0:
        return None
    lt = math.log(target)
    for N in range(start, cap + 1):
        if all(lg - N * lp <= lt for lg, lp in live):
            return N
    return None


def _shell(region: Region, k: int, per_axis: int) -> list:
    """Grid points of region in the k-th doubled window minus the previous one."""
    outer = region.with_box(region.scaled_box(2**k), bounded=True)
    inner_box = region.scaled_box(2 ** (k - 1))
    pts = []
    for x in outer.grid(per_axis):
        if any(c < lo or c > hi for c, (lo, hi) in zip(x, inner_box)):
            pts.append(x)
    return pts


def extend_regular(
    p: ApproxProblem,
    G: RegularMap,
    phi: Poly,
    bound: float | None = None,
    grid: int | None = None,
    cap: int = EXPONENT_CAP,
    doublings: int = 3,
) -> ExtensionResult:
    """Damp a regular extension G of f_on_Z so that it obeys the sup bound on C.

    ``bound`` defaults to 2 sup over Z∩C of |f_on_Z|.
    """
    coords = p.coords
    phi = phi.embed(coords)
    zc = p.zc_points()
    if not zc:
        raise PreconditionError("no samples of Z∩C")
    _check_extension_inputs(p, G, phi, zc)
    sup_zc = max(_fnorm(p.f_on_Z(x)) for x in zc)
    target = 2 * sup_zc if bound is None else float(bound)
    per_axis = grid or p.sup_grid
    report = {"sup_ZC": sup_zc, "target": target, "grid_per_axis": per_axis}

    if sup_zc == 0.0 and bound is None:
        zero = RatMap(coords, [Poly.const(0, coords)] * G.n_out, name="F=0")
        report.update(sup_C=0.0, grid_points=0, note="f vanishes on Z∩C")
        return ExtensionResult(zero, (0, 0, 0), report)

    N0 = N1 = 0
    if not p.C.is_bounded():
        N0, N1, esc = _escape_exponents(p, G, phi, target, per_axis, cap, doublings)
        report["escape"] = esc
    base = (1 + sum((x * x for x in symbols(coords)), Poly.const(0, coords))) ** N0
    psi = base * phi * phi
    pts = p.C.grid(per_axis)
    if not pts:
        raise PreconditionError("the sup grid over C is empty")
    norms, psis = [], []
    for x in pts:
        norms.append(_fnorm(G(x)))
        psis.append(float(psi.evaluate(x)))
    # on unbounded C the escape exponent N1 is kept inside F as well
    N2 = _smallest_exponent([g / (1 + s) ** N1 for g, s in zip(norms, psis)], psis, target + SLACK, cap)
    if N2 is None:
        worst = max(range(len(pts)), key=lambda k: norms[k] / (1 + psis[k]) ** cap)
        raise ExtensionError(
            f"no exponent N2 <= {cap} meets the bound {target:.6g}",
            {**report, "worst_point": [str(c) for c in pts[worst]], "worst_value": norms[worst] / (1 + psis[worst]) ** cap},
        )
    while True:
        F = _damped(G, psi, N1 + N2, coords)
        sup_c = max(_fnorm(F(x)) for x in pts)
        if sup_c <= target + SLACK:
            break
        # the float search can be off by one near the threshold
        if N2 >= cap:
            raise ExtensionError(f"final bound check failed: {sup_c:.6g} > {target:.6g}", report)
        N2 += 1
    for x in zc:
        if tuple(F(x)) != tuple(p.f_on_Z(x)):
            raise ExtensionError(f"F does not interpolate f_on_Z at {x}", report)
    report.update(sup_C=sup_c, grid_points=len(pts))
    return ExtensionResult(F, (N0, N1, N2), report)


def _escape_exponents(p, G, phi, target, per_axis, cap, doublings):
    """Smallest N0 making psi grow and N1 making the damped G shrink on
    ``doublings`` successive doubled windows."""
    coords = p.coords
    shells = [_shell(p.C, k, per_axis) for k in range(1, doublings + 1)]
    shells = [[x for x in s if p.C.contains(x)] for s in shells]
    if any(not s for s in shells):
        raise ExtensionError("the doubled windows contain no points of C")
    sq = 1 + sum((x * x for x in symbols(coords)), Poly.const(0, coords))
    found = None
    for N0 in range(cap + 1):
        psi = sq**N0 * phi * phi
        mins = [min(float(psi.evaluate(x)) for x in s) for s in shells]
        if all(b > a for a, b in zip(mins, mins[1:])) and mins[0] > 0:
            found = (N0, psi, mins)
            break
    if found is None:
        raise ExtensionError(f"psi does not escape to infinity for any N0 <= {cap}")
    N0, psi, mins = found
    for N1 in range(cap + 1):
        sups = [max(_fnorm(G(x)) / (1 + float(psi.evaluate(x))) ** N1 for x in s) for s in shells]
        if all(b < a for a, b in zip(sups, sups[1:])) and sups[-1] <= target:
            return N0, N1, {"psi_min": mins, "H_sup": sups}
    raise ExtensionError(f"no N1 <= {cap} makes the damped map decay on the doubled windows")


# -- C0 pipeline ---------------------------------------------------------------------


def _zgen(Z: VarietyPresentation, coords) -> Poly:
    out = Poly.const(1, coords)
    for g in Z.generators:
        out = out * g.embed(coords)
    return out


def correction_on_Z(p: ApproxProblem, h: RegularMap, s: Spray) -> tuple[list, Fraction]:
    """phi = tau(h, f_on_Z) at the Z∩C samples, and the exact max |phi|^2."""
    zc = p.zc_points()
    if not zc:
        raise PreconditionError("no samples of Z∩C")
    eps2 = Fraction(0)
    phis = []
    for x in zc:
        hv, fv = tuple(h(x)), tuple(p.f_on_Z(x))
        if not s.in_N(hv, fv):
            raise NotCloseEnough(f"(h, f) leaves N at {x}", witness=x)
        ph = s.tau_at(hv, fv)
        phis.append(ph)
        eps2 = max(eps2, _norm2(ph))
    return phis, eps2


def _tau_extension(p: ApproxProblem, h: RegularMap, s: Spray) -> RegularMap:
    """G(x) = tau(h(pi(x)), f_on_Z(pi(x))), or without pi the formula on X."""
    pi = p.retraction_to_Z

    def fn(x):
        y = tuple(pi(x)) if pi is not None else tuple(x)
        return s.tau_at(h(y), p.f_on_Z(y))

    if pi is not None and isinstance(pi, RatMap) and all(c.is_polynomial() and c.num.is_constant() for c in pi.components):
        # constant retraction: G is the constant correction vector
        y0 = tuple(c.num.constant_value() for c in pi.components)
        val = fn(y0)
        return RatMap(p.coords, [Poly.const(v, p.coords) for v in val], name="G")
    return FunctionMap(p.X_dim, s.n, fn, name="G")


def _sigma_of(h: RegularMap, psi: RegularMap, s: Spray, name: str) -> FunctionMap:
    def fn(x):
        hv = tuple(h(x))
        pv = tuple(psi(x))
        if not s.in_M(hv, pv):
            raise DomainError("(h, psi) leaves M", None, x)
        return s.sigma_at(hv, pv)

    return FunctionMap(h.n_in, s.m, fn, name=name)


def _require_ball(s: Spray) -> None:
    if not s.ball_validated:
        raise PreconditionError("the spray must be rescaled so that the unit ball lies in M")


def approximate_c0(p: ApproxProblem, degree: int, s: Spray) -> ApproxResult:
    _require_ball(s)
    p.validate()
    h = base_regular_approx(p, degree)
    _, eps2 = correction_on_Z(p, h, s)
    eps = math.sqrt(float(eps2))
    if eps2 >= Fraction(1, 4):
        raise NotCloseEnough(f"epsilon = {eps:.6g} >= 1/2", epsilon=eps)
    G = _tau_extension(p, h, s)
    p_phi = replace(p, f_on_Z=G)
    zgen = _zgen(p.Z, p.coords)
    ext = extend_regular(p_phi, G, zgen, bound=2 * eps if eps2 else None)
    f_tilde = _sigma_of(h, ext.F, s, name=f"f~[{degree}]")
    for x in p.zc_points():
        if tuple(f_tilde(x)) != tuple(p.f_on_Z(x)):
            raise ApproximationError(f"interpolation failed at {x}")
    sup = measure_error(p.f, f_tilde, p.C, 0, p.sup_grid)
    return ApproxResult(f_tilde, h, eps, sup, None, degree, ext)


# -- smooth extension and C-infinity pipeline ---------------------------------------------


def _smooth_step(u: float) -> float:
    """C-infinity step: 0 for u <= 0, 1 for u >= 1."""
    if u <= 0.0:
        return 0.0
    if u >= 1.0:
        return 1.0
    a, b = math.exp(-1.0 / u), math.exp(-1.0 / (1.0 - u))
    return a / (a + b)


def bump(x, inner_box, outer_box) -> float:
    """Product bump equal to 1 on inner_box and 0 outside outer_box."""
    val = 1.0
    for c, (ilo, ihi), (olo, ohi) in zip(x, inner_box, outer_box):
        ilo, ihi, olo, ohi = float(ilo), float(ihi), float(olo), float(ohi)
        c = float(c)
        if c < ilo:
            val *= _smooth_step((c - olo) / (ilo - olo)) if ilo > olo else float(c >= ilo)
        elif c > ihi:
            val *= _smooth_step((ohi - c) / (ohi - ihi)) if ohi > ihi else float(c <= ihi)
    return val


def _box_inside(inner, outer) -> bool:
    return all(olo <= ilo and ihi <= ohi for (ilo, ihi), (olo, ohi) in zip(inner, outer))


@dataclass
class SmoothExtension:
    psi: RatMap
    report: dict


def extend_smooth(
    f_oracle,
    D0: Region,
    D1: Region,
    D2: Region,
    Z: VarietyPresentation,
    X_box: Region,
    degree: int,
    grid: int = 1001,
    tol: float = 1e-12,
) -> SmoothExtension:
    """Polynomial map vanishing on Z, close to f on D2 and bounded on X_box."""
    if not (_box_inside(D2.bounding_box, D1.bounding_box) and _box_inside(D1.bounding_box, D0.bounding_box)):
        raise PreconditionError("regions must be nested: D2 inside D1 inside D0")
    coords = X_box.coords
    zc = [x for k, x in zip(range(500), Z.sampler.stream()) if D0.contains(x)] if Z.sampler else []
    for x in zc:
        if max(abs(v) for v in f_oracle(x)) > tol:
            raise PreconditionError(f"f does not vanish on Z∩D0 at {x}")
    zgen = _zgen(Z, coords)
    pts1 = D1.grid(grid)
    f1 = np.asarray([f_oracle(x) for x in pts1], dtype=float)
    dim_out = f1.shape[1]
    w1 = np.asarray([zgen.evaluate_float(x) for x in pts1])
    fitted = cheb_fit(_as_floats(pts1), f1, D1.bounding_box, degree, coords, weight=w1)
    hfit = [zgen * q for q in fitted]
    ptsX = X_box.grid(grid)
    gvals = np.asarray([bump(x, D2.bounding_box, D1.bounding_box) for x in ptsX])
    (gfit,) = cheb_fit(_as_floats(ptsX), gvals, X_box.bounding_box, degree, coords)
    pts0 = D0.grid(grid)
    sup_f = max((_fnorm(f_oracle(x)) for x in pts0), default=0.0)
    bound = 2 * sup_f
    amplitude = Fraction(1)
    comps = [hk * gfit for hk in hfit]
    supX = max((_fnorm([c.evaluate_float(x) for c in comps]) for x in ptsX), default=0.0)
    report = {"bound": bound, "sup_X": supX, "amplitude": 1.0, "degree": degree}
    if supX > bound + SLACK:
        amplitude = dyadic(0.99 * bound / supX) if bound > 0 else Fraction(0)
        comps = [amplitude * c for c in comps]
        supX = max((_fnorm([c.evaluate_float(x) for c in comps]) for x in ptsX), default=0.0)
        report.update(sup_X=supX, amplitude=float(amplitude))
        if supX > bound + SLACK:
            raise ExtensionError(f"smooth extension exceeds the bound {bound:.6g} after rescaling", report)
    psi = RatMap(coords, comps, name="psi")
    pts2 = D2.grid(grid)
    if pts2:
        report["c0_error_D2"] = max(
            _fnorm([c.evaluate_float(x) - v for c, v in zip(comps, f_oracle(x))]) for x in pts2
        )
    return SmoothExtension(psi, report)


def shrink(region: Region, factor) -> Region:
    return region.with_box(region.scaled_box(factor))


SMOOTH_SHRINK = (Fraction(9, 10), Fraction(8, 10), Fraction(7, 10))


def approximate_c_infty(p: ApproxProblem, degree: int, s: Spray) -> ApproxResult:
    if p.D is None:
        raise PreconditionError("the C-infinity pipeline needs the open region D")
    _require_ball(s)
    c0 = approximate_c0(p, degree, s)
    h = c0.f_tilde
    D0, D1, D2 = (shrink(p.D, k) for k in SMOOTH_SHRINK)
    tau = s.tau

    def phi_num(x):
        hv = tuple(float(v) for v in h(tuple(Fraction(c) for c in x)))
        return map_float(tau, hv + p.f(x))

    pts0 = D0.grid(p.sup_grid)
    eps = 0.0
    for x in pts0:
        hv = [float(v) for v in h(x)]
        yz = hv + list(p.f(x))
        if any(abs(q.evaluate_float(yz)) < 1e-12 for q in s.N_inequations):
            raise NotCloseEnough(f"(h, f) leaves N at {x}", witness=x)
        eps = max(eps, _fnorm(map_float(tau, yz)))
    if eps >= 0.5:
        raise NotCloseEnough(f"epsilon = {eps:.6g} >= 1/2", epsilon=eps)
    sm = extend_smooth(phi_num, D0, D1, D2, p.Z, p.C, degree, grid=p.sup_grid)
    f_tilde = _sigma_of(h, sm.psi, s, name=f"f~inf[{degree}]")
    for x in p.zc_points():
        if tuple(f_tilde(x)) != tuple(p.f_on_Z(x)):
            raise ApproximationError(f"interpolation failed at {x}")
    sup = measure_error(p.f, f_tilde, p.C, 0, p.sup_grid)
    c1 = measure_error(p.f, f_tilde, D2, 1, p.sup_grid)
    return ApproxResult(f_tilde, h, eps, sup, c1, degree, c0.extension, sm.report)


# -- sweeps ----------------------------------------------------------------------------


@dataclass
class SweepRow:
    degree: int
    result: ApproxResult | None
    failure: str | None = None


def degree_sweep(p: ApproxProblem, degrees: Sequence[int], s: Spray, smooth: bool = False):
    """Run a pipeline at each degree; returns (rows, anomaly flag).

    The flag is set when the smallest sup error is not attained at the
    largest successful degree.
    """
    rows = []
    run = approximate_c_infty if smooth else approximate_c0
    for d in degrees:
        try:
            rows.append(SweepRow(d, run(p, d, s)))
        except NotCloseEnough as exc:
            rows.append(SweepRow(d, None, str(exc)))
    ok = [r for r in rows if r.result is not None]
    anomaly = False
    if ok:
        best = min(ok, key=lambda r: r.result.sup_error)
        anomaly = best.degree != max(r.degree for r in ok) and best.result.sup_error < ok[-1].result.sup_error
    return rows, anomaly


# -- demo problems ----------------------------------------------------------------------


def point_set(points: Sequence[Sequence], coords: Sequence[str], generators: Sequence[Poly], name: str = "Z"):
    sampler = RationalPointSampler("enumerated", points=tuple(tuple(Fraction(c) for c in q) for q in points))
    return VarietyPresentation(len(coords), tuple(generators), (), sampler, tuple(coords), name=name)


def circle_demo_problem(frequency=1, lo=-1, hi=1, name: str = "circle-demo") -> ApproxProblem:
    """f(t) = (cos wt, sin wt) on [lo, hi] with Z = {0} and the chart from (-1, 0)."""
    from .gallery import circle_chart

    coords = ("t",)
    (t,) = symbols(coords)
    Z = point_set([(0,)], coords, [t], name="{0}")
    C = interval(lo, hi)
    f = trig_circle(frequency)
    f_on_Z = RatMap(coords, [Poly.const(1, coords), Poly.const(0, coords)], name="f|Z")
    pi = RatMap(coords, [Poly.const(0, coords)], name="pi")
    return ApproxProblem(
        1, Z, C, f, f_on_Z, chart=circle_chart(-1), D=interval(lo, hi, open_=True), retraction_to_Z=pi, name=name
    )


def disc_problem(grid: int = 114) -> ApproxProblem:
    """Unit disc, Z = {x2 = 0} sampled at 101 points, f(x1, x2) = x1."""
    from .varieties import ball

    coords = ("x1", "x2")
    x1, x2 = symbols(coords)
    pts = [(Fraction(k, 50) - 1, Fraction(0)) for k in range(101)]
    Z = point_set(pts, coords, [x2], name="x2=0")
    C = ball(2, 1, coords)
    f = polynomial_oracle([x1], coords)
    return ApproxProblem(2, Z, C, f, RatMap(coords, [x1], name="f|Z"), sup_grid=grid, name="disc")
