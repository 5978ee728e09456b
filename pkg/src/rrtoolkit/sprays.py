"""Strong dominating sprays: data model, exact axiom checks and conversions.

A spray over Y is ``(n, M, N, sigma, tau)`` with

* ``sigma(y, tau(y, z)) == z`` whenever ``(y, z)`` lies in N (axiom 1),
* ``tau(y, y) == 0`` (axiom 2).

Variables follow a fixed naming scheme: ``y1..ym`` for the base point,
``v1..vn`` for the fiber and ``z1..zm`` for the target point.  M and N are
given by inequations on top of the implicit conditions ``y in Y`` (and
``z in Y`` for N).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Sequence

from .ratcalc import (
    DomainError,
    FunctionMap,
    Poly,
    PreconditionError,
    RatFun,
    RatMap,
    RegularMap,
    as_poly,
    is_exact_number,
    ratmap_compose,
    substitute,
    symbols,
)
from .varieties import (
    RationalPointSampler,
    SamplingError,
    VarietyPresentation,
    contains,
    iter_points,
    rational_stream,
    sample_points,
)


class SprayError(ValueError):
    """A spray construction was rejected; ``witness`` is the offending point."""

    def __init__(self, message: str, witness=None, check: str | None = None):
        super().__init__(message)
        self.witness = witness
        self.check = check


def spray_vars(m: int, n: int) -> tuple[tuple[str, ...], tuple[str, ...], tuple[str, ...]]:
    ys = tuple(f"y{i + 1}" for i in range(m))
    vs = tuple(f"v{i + 1}" for i in range(n))
    zs = tuple(f"z{i + 1}" for i in range(m))
    return ys, vs, zs


@dataclass(frozen=True)
class Spray:
    n: int
    Y: VarietyPresentation
    M_inequations: tuple[Poly, ...]
    N_inequations: tuple[Poly, ...]
    sigma: RegularMap
    tau: RegularMap
    name: str = ""
    ball_validated: bool = False
    # extra membership tests for lazily composed sprays
    M_test: Callable | None = field(default=None, compare=False)
    N_test: Callable | None = field(default=None, compare=False)
    # how to rebuild a spray whose maps are lazy compositions
    recipe: dict | None = field(default=None, compare=False)

    @property
    def m(self) -> int:
        return self.Y.ambient_dim

    @property
    def vars(self):
        return spray_vars(self.m, self.n)

    def in_M(self, y, v) -> bool:
        p = tuple(y) + tuple(v)
        if not all(q.evaluate(p) != 0 for q in self.M_inequations):
            return False
        return self.M_test is None or self.M_test(tuple(y), tuple(v))

    def in_N(self, y, z) -> bool:
        p = tuple(y) + tuple(z)
        if not all(q.evaluate(p) != 0 for q in self.N_inequations):
            return False
        return self.N_test is None or self.N_test(tuple(y), tuple(z))

    def sigma_at(self, y, v) -> tuple:
        return tuple(self.sigma(tuple(y) + tuple(v)))

    def tau_at(self, y, z) -> tuple:
        return tuple(self.tau(tuple(y) + tuple(z)))

    def is_explicit(self) -> bool:
        return isinstance(self.sigma, RatMap) and isinstance(self.tau, RatMap)


@dataclass(frozen=True)
class RetractPresentation:
    """(W, i, r) with ``r(i(y)) == y`` on Y and ``i(Y)`` inside W."""

    Y: VarietyPresentation
    n: int
    W_inequations: tuple[Poly, ...]
    i: RegularMap
    r: RegularMap
    name: str = ""

    def in_W(self, w) -> bool:
        return all(q.evaluate(tuple(w)) != 0 for q in self.W_inequations)


@dataclass
class CheckResult:
    name: str
    passed: bool
    trials: int
    witness: tuple | None = None
    detail: str = ""

    def __bool__(self):
        return self.passed

    @property
    def status(self) -> str:
        return "pass" if self.passed else "fail"


@dataclass
class SprayReport:
    axiom1: CheckResult
    axiom2: CheckResult
    sigma_at_zero: CheckResult
    image_in_Y: CheckResult

    @property
    def checks(self) -> list[CheckResult]:
        return [self.axiom1, self.axiom2, self.sigma_at_zero, self.image_in_Y]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __bool__(self):
        return self.passed


def _fmt(p) -> str:
    return "(" + ", ".join(str(x) for x in p) + ")"


def random_fibre_vectors(n: int, seed, bound: int = 50) -> "iter":
    """Seeded rational vectors of moderate size for probing sigma."""
    src = rational_stream(f"{seed}:fibre", bound)
    while True:
        yield tuple(next(src) for _ in range(n))


def verify_spray(
    s: Spray,
    trials: int,
    seed=0,
    extra_points: Sequence = (),
    extra_pairs: Sequence = (),
    budget_factor: int = 20,
) -> SprayReport:
    """Check the spray axioms by exact evaluation.

    Each check uses ``trials`` seeded samples; ``extra_points`` (points of Y)
    and ``extra_pairs`` (pairs in N) are checked in addition.
    """
    budget = budget_factor * trials + 100
    ys = sample_points(s.Y, trials, f"{seed}:y")
    ys = list(ys) + [tuple(Fraction(c) for c in p) for p in extra_points]
    zero = (Fraction(0),) * s.n

    # axiom 2 and sigma(y, 0) = y
    ax2 = CheckResult("axiom2", True, 0)
    s0 = CheckResult("sigma_at_zero", True, 0)
    for y in ys:
        if ax2.passed:
            ax2.trials += 1
            try:
                if not s.in_N(y, y):
                    raise DomainError("diagonal point outside N")
                t = s.tau_at(y, y)
                if t != zero:
                    ax2.passed, ax2.witness = False, y
                    ax2.detail = f"tau(y,y) = {_fmt(t)}"
            except DomainError as exc:
                ax2.passed, ax2.witness, ax2.detail = False, y, f"tau undefined at (y,y): {exc}"
        if s0.passed:
            s0.trials += 1
            try:
                if not s.in_M(y, zero):
                    raise DomainError("(y,0) outside M")
                out = s.sigma_at(y, zero)
                if out != tuple(y):
                    s0.passed, s0.witness = False, y
                    s0.detail = f"sigma(y,0) = {_fmt(out)}"
            except DomainError as exc:
                s0.passed, s0.witness, s0.detail = False, y, f"sigma undefined at (y,0): {exc}"

    # axiom 1 on sampled pairs of N
    ax1 = CheckResult("axiom1", True, 0)
    pairs = _pairs_in_N(s, trials, seed, budget)
    pairs += [(tuple(map(Fraction, y)), tuple(map(Fraction, z))) for y, z in extra_pairs]
    for y, z in pairs:
        ax1.trials += 1
        try:
            t = s.tau_at(y, z)
            if not s.in_M(y, t):
                ax1.passed, ax1.witness = False, y + z
                ax1.detail = "(y, tau(y,z)) outside M"
                break
            out = s.sigma_at(y, t)
        except DomainError as exc:
            ax1.passed, ax1.witness, ax1.detail = False, y + z, f"undefined: {exc}"
            break
        if out != z:
            ax1.passed, ax1.witness = False, y + z
            ax1.detail = f"sigma(y,tau(y,z)) = {_fmt(out)}"
            break

    # sigma maps into Y
    img = CheckResult("image_in_Y", True, 0)
    vecs = random_fibre_vectors(s.n, seed)
    drawn = 0
    k = 0
    while img.trials < len(ys) and img.passed:
        drawn += 1
        if drawn > budget + len(ys):
            raise SamplingError(f"image check inconclusive: {img.trials} of {len(ys)} samples in M")
        y = ys[k % len(ys)]
        v = next(vecs)
        if not s.in_M(y, v):
            continue
        k += 1
        try:
            out = s.sigma_at(y, v)
        except DomainError:
            continue
        img.trials += 1
        if not contains(s.Y, out):
            img.passed, img.witness = False, y + v
            img.detail = f"sigma(y,v) = {_fmt(out)} not in Y"
    return SprayReport(ax1, ax2, s0, img)


def _pairs_in_N(s: Spray, count: int, seed, budget: int) -> list[tuple]:
    a = iter_points(s.Y, f"{seed}:pair-y")
    b = iter_points(s.Y, f"{seed}:pair-z")
    out = []
    drawn = 0
    while len(out) < count:
        drawn += 1
        if drawn > budget:
            raise SamplingError(f"only {len(out)} of {count} pairs in N found")
        y, z = next(a), next(b)
        if s.in_N(y, z):
            out.append((y, z))
    return out


# -- transformations ------------------------------------------------------------------


def _subst_map(m: RatMap, values: Sequence, inputs: Sequence[str], name: str = "") -> RatMap:
    """``m`` with its inputs replaced by ``values`` (expressions in ``inputs``)."""
    inner = RatMap(inputs, values)
    out = ratmap_compose(m, inner, name=name or m.name)
    return out


def rescale_to_unit_ball(s: Spray, f, trials: int = 200, seed=0) -> Spray:
    """``sigma'(y,v) = sigma(y, f(y) v)``, ``tau' = tau / f``.

    ``f`` is a positive rational function of the base point.  Sampled ball
    vectors must land in the new M, otherwise the rescale is rejected.
    """
    ys_, vs_, zs_ = s.vars
    f = _base_function(f, s)
    fy = f.embed(ys_ + vs_)
    fz = f.embed(ys_ + zs_)
    for y in sample_points(s.Y, trials, f"{seed}:f"):
        try:
            val = f.evaluate(y)
        except DomainError as exc:
            raise SprayError("rescale factor undefined on Y", y, "positivity") from exc
        if val <= 0:
            raise SprayError(f"rescale factor {val} is not positive", y, "positivity")

    sv_inputs = ys_ + vs_
    scaled = list(symbols(sv_inputs)[: s.m]) + [fy * Poly.var(v, sv_inputs) for v in vs_]
    if isinstance(s.sigma, RatMap) and isinstance(s.tau, RatMap):
        sigma = _subst_map(s.sigma, scaled, sv_inputs, name=f"{s.sigma.name}'")
        tau = RatMap(
            s.tau.inputs,
            [c / fz for c in s.tau.components],
            list(s.tau.domain_inequations) + [fz.num, fz.den],
            name=f"{s.tau.name}'",
        )
    else:
        sig, ta, m = s.sigma, s.tau, s.m

        def sigma_fn(p):
            y, v = p[:m], p[m:]
            fv = f.evaluate(y)
            return sig(tuple(y) + tuple(fv * x for x in v))

        def tau_fn(p):
            fv = f.evaluate(p[:m])
            return tuple(x / fv for x in ta(p))

        sigma = FunctionMap(len(sv_inputs), m, sigma_fn, name="sigma'")
        tau = FunctionMap(2 * m, s.n, tau_fn, name="tau'")
    M_new = []
    if s.M_inequations:
        subbed, _ = substitute(list(s.M_inequations), scaled)
        M_new = [q.embed(sv_inputs) for q in subbed]
    M_new += [fy.num.embed(sv_inputs), fy.den.embed(sv_inputs)]
    M_new = [q for q in M_new if not (q.is_constant() and not q.is_zero())]
    M_test = None
    if s.M_test is not None:
        base_test = s.M_test

        def M_test(y, v):
            fv = f.evaluate(y)
            return base_test(y, tuple(fv * x for x in v))

    out = replace(
        s,
        M_test=M_test,
        M_inequations=tuple(M_new),
        sigma=sigma,
        tau=tau,
        name=f"{s.name}/rescaled",
        ball_validated=False,
        recipe=None if s.recipe is None else {"kind": "rescale", "base": s.recipe, "f": f.to_text()},
    )
    _validate_ball(out, trials, seed)
    return replace(out, ball_validated=True)


def _base_function(f, s: Spray) -> RatFun:
    """Coerce a number, polynomial or rational function on Y to y-variables."""
    ys_ = s.vars[0]
    if not isinstance(f, RatFun):
        f = RatFun(as_poly(f, ys_))
    names = set(f.vars)
    if names <= set(ys_):
        return f.embed(ys_)
    if names <= set(s.Y.coords):
        return f.embed(s.Y.coords).relabel(ys_)
    raise PreconditionError(f"rescale factor uses unknown variables {sorted(names)}")


def ball_vectors(n: int, seed, bound: int = 10**4):
    """Seeded rational vectors with squared norm below 1, including near-boundary ones."""
    src = rational_stream(f"{seed}:ball", bound)
    k = 0
    while True:
        v = tuple(next(src) % 2 - 1 for _ in range(n))
        nrm = sum(x * x for x in v)
        if nrm >= 1:
            continue
        k += 1
        if k % 4 == 0 and nrm:
            # push toward the boundary keeping the norm below one
            scale = Fraction(999, 1000)
            while sum((x * scale) ** 2 for x in v) >= 1:
                scale *= Fraction(999, 1000)
            v = tuple(x * scale for x in v)
        yield v


def _validate_ball(s: Spray, trials: int, seed, searched: int = 10) -> None:
    ys = sample_points(s.Y, trials, f"{seed}:ball-y")
    vecs = ball_vectors(s.n, seed)
    for y in ys:
        v = next(vecs)
        if not s.in_M(y, v):
            raise SprayError("sampled ball vector lies outside M'", tuple(y) + v, "ball")
    # random vectors miss thin excluded sets, so also search for zeros of each
    # inequation over the ball at a few base points
    ys_, vs_, _ = s.vars
    for y in ys[:searched]:
        for q in s.M_inequations:
            qy = q.specialize(dict(zip(ys_, y))).embed(vs_)
            v, val = _ball_minimum(qy, s.n)
            if abs(val) <= 1e-9 * (1 + abs(qy.evaluate_float([0.0] * s.n))):
                raise SprayError(
                    f"an M' inequation vanishes inside the unit ball near v = {tuple(round(c, 9) for c in v)}",
                    tuple(y) + tuple(Fraction(c).limit_denominator(10**9) for c in v),
                    "ball",
                )


def _project_ball(v: list[float]) -> list[float]:
    r = sum(c * c for c in v) ** 0.5
    return v if r <= 1.0 else [c / r for c in v]


def _ball_minimum(q: Poly, n: int, iters: int = 200) -> tuple[list[float], float]:
    """Projected gradient descent of q^2 over the closed unit ball."""
    if q.is_constant():
        return [0.0] * n, float(q.constant_value())
    f = lambda v: q.evaluate_float(v) ** 2  # noqa: E731
    starts = [[0.0] * n]
    for i in range(n):
        for sgn in (1.0, -1.0):
            e = [0.0] * n
            e[i] = 0.5 * sgn
            starts.append(e)
    best_v, best = starts[0], f(starts[0])
    h = 1e-7
    for v in starts:
        fv = f(v)
        step = 0.1
        for _ in range(iters):
            g = []
            for i in range(n):
                vp, vm = list(v), list(v)
                vp[i] += h
                vm[i] -= h
                g.append((f(vp) - f(vm)) / (2 * h))
            gn = sum(c * c for c in g) ** 0.5
            if gn == 0.0:
                break
            while step > 1e-12:
                cand = _project_ball([a - step * b / gn for a, b in zip(v, g)])
                fc = f(cand)
                if fc < fv:
                    v, fv = cand, fc
                    step *= 1.5
                    break
                step *= 0.5
            else:
                break
        if fv < best:
            best_v, best = v, fv
    return best_v, q.evaluate_float(best_v)


def spray_from_retract(p: RetractPresentation, trials: int = 100, seed=0) -> Spray:
    """``sigma(y,v) = r(i(y)+v)``, ``tau(y,z) = i(z) - i(y)``, N = Y x Y."""
    check = verify_retract(p, trials, seed)
    if not check.passed:
        raise SprayError(f"retract presentation fails: {check.detail}", check.witness, "retract")
    if not (isinstance(p.i, RatMap) and isinstance(p.r, RatMap)):
        raise PreconditionError("spray_from_retract needs explicit chart maps")
    m, n = p.Y.ambient_dim, p.n
    ys_, vs_, zs_ = spray_vars(m, n)
    iy = p.i.relabel(ys_)
    iz = p.i.relabel(zs_)
    sv_inputs = ys_ + vs_
    w_expr = [c.embed(sv_inputs) + Poly.var(v, sv_inputs) for c, v in zip(iy.components, vs_)]
    inner = RatMap(sv_inputs, w_expr, [q.embed(sv_inputs) for q in iy.domain_inequations])
    sigma = ratmap_compose(p.r, inner, name="sigma")
    yz = ys_ + zs_
    tau = RatMap(
        yz,
        [a.embed(yz) - b.embed(yz) for a, b in zip(iz.components, iy.components)],
        [q.embed(yz) for q in iy.domain_inequations + iz.domain_inequations],
        name="tau",
    )
    M = []
    if p.W_inequations:
        subbed, _ = substitute(list(p.W_inequations), w_expr)
        M = [q.embed(sv_inputs) for q in subbed]
    M += [c.den.embed(sv_inputs) for c in iy.components]
    N = [c.den.embed(yz) for c in iy.components + iz.components]
    M = _dedupe(M)
    N = _dedupe(N)
    return Spray(n, p.Y, tuple(M), tuple(N), sigma, tau, name=f"spray({p.name})")


def _dedupe(polys):
    out = []
    for q in polys:
        if q.is_constant() and not q.is_zero():
            continue
        if q not in out:
            out.append(q)
    return out


def verify_retract(p: RetractPresentation, trials: int, seed=0, extra_points: Sequence = ()) -> CheckResult:
    """``r(i(y)) == y`` and ``i(y)`` in W at sampled points of Y."""
    res = CheckResult("round_trip", True, 0)
    pts = sample_points(p.Y, trials, f"{seed}:retract") + [tuple(map(Fraction, q)) for q in extra_points]
    for y in pts:
        res.trials += 1
        try:
            w = tuple(p.i(y))
            if not p.in_W(w):
                res.passed, res.witness, res.detail = False, y, "i(y) outside W"
                break
            back = tuple(p.r(w))
        except DomainError as exc:
            res.passed, res.witness, res.detail = False, y, f"undefined: {exc}"
            break
        if back != tuple(y):
            res.passed, res.witness, res.detail = False, y, f"r(i(y)) = {_fmt(back)}"
            break
    return res


def _fix_first(mp: RegularMap, head: Sequence[Fraction], names: Sequence[str], rest_names: Sequence[str]):
    """Partially apply ``mp`` to a fixed leading block of inputs."""
    head = tuple(Fraction(x) for x in head)
    if isinstance(mp, RatMap):
        sub = mp.specialize(dict(zip(names, head)))
        return sub.relabel(rest_names) if tuple(rest_names) != sub.inputs else sub
    return FunctionMap(mp.n_in - len(head), mp.n_out, lambda p: mp(head + tuple(p)), name=f"{mp.name}|y0")


def retract_from_spray(s: Spray, basepoint: Sequence) -> RetractPresentation:
    """``i(z) = tau(y0, z)``, ``r(v) = sigma(y0, v)`` over V = {z : (y0,z) in N}."""
    y0 = tuple(Fraction(x) for x in basepoint)
    if not contains(s.Y, y0):
        raise PreconditionError(f"basepoint {_fmt(y0)} is not on Y")
    ys_, vs_, zs_ = s.vars
    assign = dict(zip(ys_, y0))
    V_ineqs = []
    for q in s.N_inequations:
        sub = q.specialize(assign).embed(zs_)
        if sub.is_zero():
            raise PreconditionError("basepoint leaves no admissible targets")
        V_ineqs.append(sub.relabel(s.Y.coords))
    W_ineqs = []
    for q in s.M_inequations:
        sub = q.specialize(assign).embed(vs_)
        W_ineqs.append(sub)
    V = s.Y.restrict(_dedupe(V_ineqs), name=f"{s.Y.name}@{_fmt(y0)}")
    i = _fix_first(s.tau, y0, ys_, zs_)
    r = _fix_first(s.sigma, y0, ys_, vs_)
    return RetractPresentation(V, s.n, tuple(_dedupe(W_ineqs)), i, r, name=f"retract({s.name})")


def to_global_spray(s: Spray) -> RegularMap:
    """``s(y, v) = sigma(y, v / (1 + |v|^2))``, defined on all of Y x R^n."""
    if not s.ball_validated:
        raise PreconditionError("to_global_spray needs a spray validated by rescale_to_unit_ball")
    ys_, vs_, _ = s.vars
    inputs = ys_ + vs_
    vv = symbols(inputs)
    norm = sum((vv[s.m + i] * vv[s.m + i] for i in range(s.n)), Poly.const(0, inputs))
    den = 1 + norm
    if isinstance(s.sigma, RatMap):
        vals = vv[: s.m] + [RatFun(vv[s.m + i], den) for i in range(s.n)]
        (comps), _ = _compose_components(s.sigma, vals, inputs)
        return RatMap(inputs, comps, name="global-spray")
    sig, m = s.sigma, s.m

    def fn(p):
        y, v = p[:m], p[m:]
        d = 1 + sum(x * x for x in v)
        return sig(tuple(y) + tuple(x / d for x in v))

    return FunctionMap(len(inputs), m, fn, name="global-spray")


def _compose_components(m: RatMap, values, inputs):
    polys = []
    for c in m.components:
        polys += [c.num, c.den]
    nums, L = substitute(polys, values)
    comps = []
    for k in range(len(m.components)):
        comps.append(RatFun(nums[2 * k].embed(inputs), nums[2 * k + 1].embed(inputs)))
    return comps, L


def product_spray(s1: Spray, s2: Spray) -> Spray:
    """Componentwise spray over Y1 x Y2 with fiber dimension n1 + n2."""
    m1, m2, n1, n2 = s1.m, s2.m, s1.n, s2.n
    ys_, vs_, zs_ = spray_vars(m1 + m2, n1 + n2)
    coords = tuple(f"x{i + 1}" for i in range(m1 + m2))
    Y1 = s1.Y.relabel(coords[:m1])
    Y2 = s2.Y.relabel(coords[m1:])
    Y = VarietyPresentation(
        m1 + m2,
        Y1.generators + Y2.generators,
        Y1.inequations + Y2.inequations,
        RationalPointSampler("product", factors=(s1.Y.sampler, s2.Y.sampler), seed=s1.Y.sampler.seed),
        coords,
        name=f"{s1.Y.name}x{s2.Y.name}",
    )
    sv = ys_ + vs_
    yz = ys_ + zs_
    blk1_sv = ys_[:m1] + vs_[:n1]
    blk2_sv = ys_[m1:] + vs_[n1:]
    blk1_yz = ys_[:m1] + zs_[:m1]
    blk2_yz = ys_[m1:] + zs_[m1:]

    M = [q.relabel(blk1_sv).embed(sv) for q in s1.M_inequations]
    M += [q.relabel(blk2_sv).embed(sv) for q in s2.M_inequations]
    N = [q.relabel(blk1_yz).embed(yz) for q in s1.N_inequations]
    N += [q.relabel(blk2_yz).embed(yz) for q in s2.N_inequations]

    if s1.is_explicit() and s2.is_explicit():
        a = s1.sigma.relabel(blk1_sv).embed(sv)
        b = s2.sigma.relabel(blk2_sv).embed(sv)
        sigma = RatMap(sv, a.components + b.components, a.domain_inequations + b.domain_inequations, "sigma")
        a = s1.tau.relabel(blk1_yz).embed(yz)
        b = s2.tau.relabel(blk2_yz).embed(yz)
        tau = RatMap(yz, a.components + b.components, a.domain_inequations + b.domain_inequations, "tau")
    else:

        def sigma_fn(p):
            y, v = p[: m1 + m2], p[m1 + m2 :]
            return tuple(s1.sigma(y[:m1] + v[:n1])) + tuple(s2.sigma(y[m1:] + v[n1:]))

        def tau_fn(p):
            y, z = p[: m1 + m2], p[m1 + m2 :]
            return tuple(s1.tau(y[:m1] + z[:m1])) + tuple(s2.tau(y[m1:] + z[m1:]))

        sigma = FunctionMap(len(sv), m1 + m2, sigma_fn, "sigma")
        tau = FunctionMap(len(yz), n1 + n2, tau_fn, "tau")
    return Spray(n1 + n2, Y, tuple(M), tuple(N), sigma, tau, name=f"{s1.name}x{s2.name}")
