"""Gluing strong dominating sprays over a two-set Zariski cover.

Given sprays over open sets Y1, Y2 with Y = Y1 u Y2 the construction

- recenters both sprays, ``sigma'(y,v) = sigma(y, Q(y,0) v)`` and
   ``tau' = tau / Q(y,0)``, rewriting sigma' so that it is regular along Y x {0};
- composes ``sigma(y, v, w) = sigma2'(sigma1'(y, v), w)``;
- builds the partition function ``theta = Q1^2 / (Q1^2 + Q2(z,z)^2)`` and
   ``beta = theta * tau1'``;
- assembles ``tau = (beta, second)`` where ``second`` is given on Y x Y2 by
   ``tau2'(sigma1'(y, beta), z)`` and on N1 by a rewritten form that stays
   regular up to the diagonal of Y1.

Fully expanding the composed maps produces polynomials of degree in the
hundreds, so sigma and the second block of tau are evaluated lazily: every
evaluation is still an exact rational computation.  The rewrite of the second block
is carried out per evaluation point, in the fiber variables only.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .ratcalc import (
    DomainError,
    FunctionMap,
    PatchedMap,
    Poly,
    PreconditionError,
    RatFun,
    RatMap,
    as_poly,
    ratfun_equal,
    substitute,
    symbols,
    v_decompose,
)
from .sprays import Spray, SprayError, spray_vars, verify_spray
from .varieties import VarietyPresentation, iter_points, product_presentation, sample_points


class GluingError(ValueError):
    """The gluing construction was rejected; ``witness`` is the offending point."""

    def __init__(self, message: str, witness=None, check: str | None = None):
        super().__init__(message)
        self.witness = witness
        self.check = check


def common_denominator(m: RatMap) -> Poly:
    """Product of the component denominators (no gcd reduction)."""
    out = Poly.const(1, m.inputs)
    for c in m.components:
        out = out * c.den
    return out


def cleared_numerators(m: RatMap) -> list[Poly]:
    """``P_k`` with ``P_k = common_denominator(m) * m_k`` as polynomials."""
    dens = [c.den for c in m.components]
    out = []
    for k, c in enumerate(m.components):
        p = c.num
        for j, d in enumerate(dens):
            if j != k:
                p = p * d
        out.append(p)
    return out


def _specialize_zero(p: Poly, names: Sequence[str]) -> Poly:
    return p.specialize({v: 0 for v in names if v in p.vars}).embed(tuple(x for x in p.vars if x not in names))


def regular_extension_rewrite(
    f: RatFun,
    Q: Poly,
    v_vars: Sequence[str],
    P: Poly | None = None,
    F=None,
    on: VarietyPresentation | None = None,
    trials: int = 50,
    seed=0,
) -> RatFun:
    """Rewrite ``f(y, Q(y,0) v)`` in a form whose denominator is 1 at v = 0.

    ``f = P/Q`` with polynomial ``P``; ``F`` is a polynomial in the base
    variables extending ``f`` from v = 0.  When ``on`` is given, the part of
    ``P - Q F`` surviving at v = 0 only has to vanish on ``on`` (checked at
    samples, coordinates matched by position with the base variables).
    """
    if P is None:
        if f.den == Q:
            P = f.num
        elif f.den.is_constant():
            P = Q * f.num
        else:
            raise PreconditionError("cannot derive P with Q f = P; pass P explicitly")
    elif not (P * f.den - Q * f.num).is_zero():
        raise PreconditionError("precondition Q f = P fails as an identity")
    return rewrite_parts(P, Q, v_vars, F=F, on=on, trials=trials, seed=seed, names=tuple(f.vars))


def rewrite_parts(
    P: Poly,
    Q: Poly,
    v_vars: Sequence[str],
    F=None,
    on: VarietyPresentation | None = None,
    trials: int = 50,
    seed=0,
    names: tuple[str, ...] = (),
) -> RatFun:
    """The rewrite of ``P/Q`` from its numerator and denominator.

    ``Q`` may vanish identically once the base variables are fixed; the
    rewritten form then has denominator 1.
    """
    v_vars = tuple(v_vars)
    for p in (Q, P):
        for x in p.vars:
            if x not in names:
                names += (x,)
    for x in v_vars:
        if x not in names:
            names += (x,)
    P, Q = P.embed(names), Q.embed(names)
    base = tuple(x for x in names if x not in v_vars)
    Fp = Poly.const(0, names) if F is None else as_poly(F.num if isinstance(F, RatFun) else F, names).embed(names)
    if isinstance(F, RatFun) and not F.is_polynomial():
        raise PreconditionError("the extension F must be a polynomial")
    if any(Fp.degree(x) for x in v_vars):
        raise PreconditionError("the extension F must not depend on v")
    Pp = P - Q * Fp
    R = _specialize_zero(Pp, v_vars)
    if not R.is_zero():
        if on is None:
            if F is None:
                raise PreconditionError("f does not vanish at v = 0 and no extension F was supplied")
            raise PreconditionError("P - Q F does not vanish at v = 0")
        Rb = R.embed(base[: on.ambient_dim]) if set(R.vars) <= set(base[: on.ambient_dim]) else None
        if Rb is None:
            raise PreconditionError("residual at v = 0 depends on more than the base point")
        for y in sample_points(on, trials, f"{seed}:residual"):
            if Rb.evaluate(y) != 0:
                raise PreconditionError(f"residual at v = 0 does not vanish on the base at {y}")
        Pp = Pp - R.embed(names)
    Q0 = _specialize_zero(Q, v_vars).embed(names)
    if Q0.is_zero() and base:
        raise PreconditionError("Q(y, 0) vanishes identically")
    Ps = v_decompose(Pp, v_vars)
    Qs = v_decompose(Q - Q0, v_vars)
    scaled = [Poly.var(x, names) if x not in v_vars else Q0 * Poly.var(x, names) for x in names]
    subbed, _ = substitute(Ps + Qs, scaled)
    nv = len(v_vars)
    vv = [Poly.var(x, names) for x in v_vars]
    num = sum((vv[i] * subbed[i] for i in range(nv)), Poly.const(0, names))
    den = 1 + sum((vv[i] * subbed[nv + i] for i in range(nv)), Poly.const(0, names))
    return RatFun(Fp * den + num, den)


def recenter(s: Spray, trials: int = 50, seed=0) -> Spray:
    """Recentered spray: ``sigma'(y,v) = sigma(y, Q(y,0) v)`` regular along Y x {0}."""
    if not s.is_explicit():
        raise GluingError("recentering needs explicit sigma and tau; a glued spray has lazy maps")
    ys_, vs_, zs_ = s.vars
    sv = ys_ + vs_
    Q = common_denominator(s.sigma).embed(sv)
    Ps = cleared_numerators(s.sigma)
    base = s.Y.relabel(ys_)
    comps = []
    for k, Pk in enumerate(Ps):
        comps.append(
            regular_extension_rewrite(
                RatFun(Pk, Q), Q, vs_, P=Pk.embed(sv), F=Poly.var(ys_[k], sv), on=base, trials=trials, seed=seed
            ).embed(sv)
        )
    dens = []
    for c in comps:
        if not c.den.is_constant() and c.den not in dens:
            dens.append(c.den)
    sigma = RatMap(sv, comps, dens, name=f"{s.sigma.name}'")
    yz = ys_ + zs_
    Q0 = _specialize_zero(Q, vs_).embed(ys_).embed(yz)
    tau = RatMap(
        yz,
        [RatFun(c.num, c.den * Q0) for c in s.tau.components],
        list(s.tau.domain_inequations) + [Q0],
        name=f"{s.tau.name}'",
    )
    return Spray(s.n, s.Y, tuple(dens), s.N_inequations, sigma, tau, name=f"{s.name}'")


def _diag(p: Poly, ys_: Sequence[str], zs_: Sequence[str]) -> Poly:
    """``p(z, z)`` for a polynomial in (y, z)."""
    yz = tuple(ys_) + tuple(zs_)
    values = [Poly.var(z, yz) for z in zs_] * 2
    (out,), _ = substitute([p.embed(yz)], values)
    return out.embed(yz)


def _union_inequation(a: Poly, b: Poly) -> Poly | None:
    """One inequation for {a != 0} u {b != 0} over the reals; None if everything."""
    if (a.is_constant() and not a.is_zero()) or (b.is_constant() and not b.is_zero()):
        return None
    return a * a + b * b


def _product(polys, names) -> Poly:
    out = Poly.const(1, names)
    for q in polys:
        out = out * q.embed(names)
    return out


def find_partition_function(
    Q1: Poly,
    Q2diag: Poly,
    Ntilde: Sequence[Poly],
    v: VarietyPresentation,
    trials: int = 200,
    seed=0,
) -> RatFun:
    """``theta = Q1^2 / (Q1^2 + Q2diag^2)``; rejects a sampled common zero in Ntilde.

    ``v`` presents the ambient pairs (y, z); points are matched by position.
    """
    names = Q1.vars
    for x in Q2diag.vars:
        if x not in names:
            names += (x,)
    Q1, Q2diag = Q1.embed(names), Q2diag.embed(names)
    S = Q1 * Q1 + Q2diag * Q2diag
    ntilde = [q.embed(names) for q in Ntilde]
    checked = 0
    drawn = 0
    for p in iter_points(v, f"{seed}:theta"):
        drawn += 1
        if drawn > 20 * trials + 100:
            break
        p = tuple(p)
        if not all(q.evaluate(p) != 0 for q in ntilde):
            continue
        checked += 1
        if Q1.evaluate(p) == 0 and Q2diag.evaluate(p) == 0:
            raise GluingError("Q1 and Q2(z,z) share a zero inside Ntilde", p, "partition")
        if checked >= trials:
            break
    return RatFun(Q1 * Q1, S)


@dataclass
class GluingCertificate:
    Q1: Poly
    Q2: Poly
    Q2diag: Poly
    theta: RatFun
    beta: RatMap
    Ntilde_inequations: tuple[Poly, ...]
    cofactor1: RatFun = field(repr=False, default=None)
    cofactor2: RatFun = field(repr=False, default=None)

    def identities(self) -> dict[str, bool]:
        """Exact polynomial identities behind the divisibility conditions."""
        S = self.Q1 * self.Q1 + self.Q2diag * self.Q2diag
        return {
            "theta_times_denominator": (self.theta.num * S - self.Q1 * self.Q1 * self.theta.den).is_zero(),
            "Q1_divides_theta": ratfun_equal(self.theta, RatFun(self.Q1) * self.cofactor1),
            "Q2diag_divides_theta_minus_1": ratfun_equal(self.theta - 1, RatFun(self.Q2diag) * self.cofactor2),
            "cofactor_denominators": self.cofactor1.den == S and self.cofactor2.den == S,
        }

    def to_doc(self) -> dict:
        return {
            "Q1": self.Q1.to_text(),
            "Q2": self.Q2.to_text(),
            "Q2diag": self.Q2diag.to_text(),
            "theta": self.theta.to_text(),
            "beta": self.beta.to_text(),
            "Ntilde_inequations": [q.to_text() for q in self.Ntilde_inequations],
        }


@dataclass
class GluedSpray:
    """A glued spray together with the data of its construction."""

    spray: Spray
    certificate: GluingCertificate
    first: Spray
    second: Spray
    tau_chart_form: FunctionMap
    tau_direct_form: FunctionMap

    def trace(self) -> dict:
        return {
            "n1": self.first.n,
            "n2": self.second.n,
            "certificate": self.certificate.to_doc(),
            "sigma1_recentered": self.first.sigma.to_text(),
            "sigma2_recentered": self.second.sigma.to_text(),
        }


def check_cover(Y: VarietyPresentation, Y1: VarietyPresentation, Y2: VarietyPresentation, trials: int = 200, seed=0):
    for p in sample_points(Y, trials, f"{seed}:cover"):
        if not (Y1.contains(p) or Y2.contains(p)):
            raise GluingError(f"cover check fails at {p}", p, "cover")


def glue_sprays(
    Y: VarietyPresentation,
    Y1: VarietyPresentation,
    Y2: VarietyPresentation,
    s1: Spray,
    s2: Spray,
    trials: int = 50,
    seed=0,
    verify: bool = True,
) -> GluedSpray:
    """Glue sprays over Y1 and Y2 into a spray over Y = Y1 u Y2 (fiber n1 + n2)."""
    m = Y.ambient_dim
    if Y1.ambient_dim != m or Y2.ambient_dim != m:
        raise GluingError("cover pieces live in different ambient spaces")
    check_cover(Y, Y1, Y2, trials, seed)
    for k, s in enumerate((s1, s2), 1):
        rep = verify_spray(s, trials, f"{seed}:input{k}")
        if not rep.passed:
            bad = next(c for c in rep.checks if not c.passed)
            raise GluingError(f"input spray {k} fails {bad.name}: {bad.detail}", bad.witness, bad.name)

    r1, r2 = recenter(s1, trials, seed), recenter(s2, trials, seed)
    n1, n2 = r1.n, r2.n
    ys_, _, zs_ = spray_vars(m, 1)
    yz = ys_ + zs_

    Q1 = common_denominator(r1.tau).embed(yz)
    P1 = [p.embed(yz) for p in cleared_numerators(r1.tau)]
    Q2 = common_denominator(r2.tau).embed(yz)
    P2 = [p.embed(yz) for p in cleared_numerators(r2.tau)]
    Q2d = _diag(Q2, ys_, zs_)

    # N1 including the implicit conditions y, z in Y1
    n1_ineqs = list(r1.N_inequations)
    n1_ineqs += [q.relabel(ys_).embed(yz) for q in Y1.inequations]
    n1_ineqs += [q.relabel(zs_).embed(yz) for q in Y1.inequations]
    n2_ineqs = list(r2.N_inequations)
    n2_ineqs += [q.relabel(ys_).embed(yz) for q in Y2.inequations]
    n2_ineqs += [q.relabel(zs_).embed(yz) for q in Y2.inequations]
    extra2 = [q for q in Y2.inequations if q not in Y.inequations]
    union = _union_inequation(_product(n1_ineqs, yz), _product([q.relabel(zs_) for q in extra2], yz))
    S = Q1 * Q1 + Q2d * Q2d
    ntilde = ([union] if union is not None else []) + [S]

    YY = product_presentation(Y, Y)
    theta = find_partition_function(Q1, Q2d, ntilde, YY, trials, seed)
    beta = RatMap(yz, [RatFun(Q1 * p, S) for p in P1], [S], name="beta")
    cert = GluingCertificate(
        Q1, Q2, Q2d, theta, beta, tuple(ntilde), cofactor1=RatFun(Q1, S), cofactor2=RatFun(-Q2d, S)
    )
    ids = cert.identities()
    if not all(ids.values()):
        raise GluingError(f"partition identities fail: {ids}", None, "partition")

    sig1, sig2 = r1.sigma, r2.sigma
    tau1, tau2 = r1.tau, r2.tau

    def in_all(ineqs, p):
        return all(q.evaluate(p) != 0 for q in ineqs)

    # composed sigma
    def sigma_fn(p):
        y, v, w = p[:m], p[m : m + n1], p[m + n1 :]
        a = sig1(tuple(y) + tuple(v))
        return sig2(tuple(a) + tuple(w))

    def M_test(y, vw):
        v, w = vw[:n1], vw[n1:]
        if not in_all(r1.M_inequations, tuple(y) + tuple(v)):
            return False
        try:
            a = sig1(tuple(y) + tuple(v))
        except DomainError:
            return False
        return in_all(r2.M_inequations, tuple(a) + tuple(w))

    sigma = FunctionMap(m + n1 + n2, m, sigma_fn, name="sigma")

    wv = tuple(f"w{i + 1}" for i in range(n1))
    ws = symbols(wv)

    # second block on N1, through the rewritten auxiliary map
    def chart_second(p):
        if not in_all(n1_ineqs, p):
            raise DomainError("outside N1", None, p)
        y, z = p[:m], p[m:]
        t = tau1(p)
        a = sig1(tuple(y) + tuple(ws[i] + t[i] for i in range(n1)))
        nums, L = substitute(P2 + [Q2], list(a) + list(z))
        zero = (Fraction(0),) * n1
        u = L.evaluate(zero) if L.vars else L.constant_value()
        if u == 0:
            raise DomainError("auxiliary denominator vanishes", L, p)
        Qh = nums[-1].embed(wv)
        c = Q2d.evaluate(p)
        if Qh.evaluate(zero) != c * u:
            raise GluingError("auxiliary denominator does not reduce to Q2(z,z) at v = 0", p, "second-block")
        # normalize so that the denominator equals Q2(z,z) at v = 0
        Qhat = Qh * (1 / u)
        vstar = tuple(-c * ti / S.evaluate(p) for ti in t)
        out = []
        for k in range(n2):
            Pk = nums[k].embed(wv) * (1 / u)
            if Pk.evaluate(zero) != 0:
                raise GluingError("auxiliary map does not vanish at v = 0", p, "second-block")
            g = rewrite_parts(Pk, Qhat, wv)
            out.append(g.evaluate(vstar))
        return tuple(out)

    # second block on Y x Y2, direct formula
    def direct_second(p):
        y, z = p[:m], p[m:]
        b = beta(p)
        a = sig1(tuple(y) + tuple(b))
        q = tuple(a) + tuple(z)
        if not in_all(n2_ineqs, q):
            raise DomainError("(sigma1'(y, beta), z) outside N2", None, p)
        return tau2(q)

    def assemble(second):
        def fn(p):
            if not in_all(ntilde, p):
                raise DomainError("outside Ntilde", None, p)
            return tuple(beta(p)) + tuple(second(p))

        return fn

    chart_form = FunctionMap(2 * m, n1 + n2, assemble(chart_second), name="tau[N1]")
    direct_form = FunctionMap(2 * m, n1 + n2, assemble(direct_second), name="tau[YxY2]")
    patched = PatchedMap([chart_form, direct_form], name="tau")

    @functools.lru_cache(maxsize=4096)
    def tau_cached(p):
        try:
            return ("ok", patched(p))
        except DomainError as exc:
            return ("err", exc)

    def tau_fn(p):
        kind, val = tau_cached(tuple(Fraction(x) for x in p))
        if kind == "err":
            raise val
        return val

    tau = FunctionMap(2 * m, n1 + n2, tau_fn, name="tau")

    def N_test(y, z):
        return tau_cached(tuple(y) + tuple(z))[0] == "ok"

    # inputs are kept so the file format can rebuild the lazy maps
    recipe = {"kind": "glued", "Y": Y, "Y1": Y1, "Y2": Y2, "s1": s1, "s2": s2, "trials": trials, "seed": seed}
    glued = Spray(
        n1 + n2,
        Y,
        (),
        tuple(ntilde),
        sigma,
        tau,
        name=f"glue({s1.name},{s2.name})",
        M_test=M_test,
        N_test=N_test,
        recipe=recipe,
    )
    out = GluedSpray(glued, cert, r1, r2, chart_form, direct_form)
    if verify:
        rep = verify_spray(glued, trials, f"{seed}:glued")
        if not rep.passed:
            bad = next(c for c in rep.checks if not c.passed)
            raise GluingError(f"glued spray fails {bad.name}: {bad.detail}", bad.witness, bad.name)
    return out


def tau_forms_agree(g: GluedSpray, trials: int, seed=0) -> tuple[int, tuple | None]:
    """Compare the two presentations of tau where both are defined.

    Returns (number of overlap points compared, first disagreeing point).
    """
    YY = product_presentation(g.spray.Y, g.spray.Y)
    done = 0
    drawn = 0
    for p in iter_points(YY, f"{seed}:overlap"):
        drawn += 1
        if drawn > 50 * trials + 100:
            break
        try:
            a = g.tau_chart_form(p)
            b = g.tau_direct_form(p)
        except DomainError:
            continue
        done += 1
        if a != b:
            return done, tuple(p)
        if done >= trials:
            break
    return done, None


def glue_cover(Y: VarietyPresentation, charts: Sequence[tuple[VarietyPresentation, Spray]], trials: int = 50, seed=0):
    """Left fold of :func:`glue_sprays` over an ordered chart list.

    Each step needs explicit formulas for the accumulated spray, which a glued
    spray does not have, so only one gluing step can be performed.
    """
    if not charts:
        raise GluingError("empty chart list")
    if len(charts) == 1:
        Y1, s1 = charts[0]
        check_cover(Y, Y1, Y1, trials, seed)
        return s1
    if len(charts) > 2:
        raise GluingError(
            "folding over more than two charts needs explicit denominators of a glued spray; "
            "merge charts pairwise into explicit sprays first"
        )
    (Y1, s1), (Y2, s2) = charts
    return glue_sprays(Y, Y1, Y2, s1, s2, trials, seed).spray
