"""Exact sparse multivariate polynomials, rational functions and rational maps.

A :class:`Poly` stores integer coefficients over a common positive denominator,
so that every arithmetic step runs on Python integers and a single gcd pass
keeps the representation canonical::

    Poly(vars=("x", "y"))  ~  (1/den) * sum(c_e * x^e0 * y^e1)

Fractions are *not* reduced by a multivariate gcd.  Two rational functions are
equal when their cross products agree, which is all exact verification needs.

Maps can be evaluated at exact rational points or at symbolic points whose
coordinates are themselves polynomials or rational functions; the latter is
how several constructions perform partial evaluation.
"""

from __future__ import annotations

import math
import re
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence, Union

Exponent = tuple[int, ...]
Number = Union[int, Fraction]


class DomainError(ArithmeticError):
    """A denominator or domain inequation vanished at the evaluation point."""

    def __init__(self, message: str, poly: "Poly | None" = None, point=None):
        super().__init__(message)
        self.poly = poly
        self.point = point


class PreconditionError(ValueError):
    """An operation's input did not satisfy its stated precondition."""


def _grlex_key(exp: Exponent):
    return (-sum(exp), tuple(-e for e in exp))


def _union_vars(a: Sequence[str], b: Sequence[str]) -> tuple[str, ...]:
    if tuple(a) == tuple(b):
        return tuple(a)
    out = list(a)
    seen = set(a)
    for name in b:
        if name not in seen:
            out.append(name)
            seen.add(name)
    return tuple(out)


class Poly:
    """Immutable sparse polynomial with exact rational coefficients."""

    __slots__ = ("vars", "_c", "_d", "_hash", "_maxdeg")

    def __init__(self, vars: Sequence[str] = (), terms: Mapping[Exponent, Number] | None = None):
        vars = tuple(vars)
        if len(set(vars)) != len(vars):
            raise ValueError(f"duplicate variable names in {vars}")
        coeffs: dict[Exponent, Fraction] = {}
        for exp, c in (terms or {}).items():
            exp = tuple(int(e) for e in exp)
            if len(exp) != len(vars):
                raise ValueError(f"exponent {exp} does not match variables {vars}")
            if any(e < 0 for e in exp):
                raise ValueError(f"negative exponent {exp}")
            c = Fraction(c)
            if c:
                coeffs[exp] = coeffs.get(exp, Fraction(0)) + c
        den = 1
        for c in coeffs.values():
            den = den * c.denominator // math.gcd(den, c.denominator)
        ints = {e: int(c * den) for e, c in coeffs.items() if c}
        self._init(vars, ints, den)

    def _init(self, vars, ints, den):
        self.vars = vars
        if ints:
            g = math.gcd(den, *ints.values())
            if g != 1:
                ints = {e: c // g for e, c in ints.items()}
                den //= g
        else:
            den = 1
        self._c = ints
        self._d = den
        self._hash = None
        self._maxdeg = None

    @classmethod
    def _raw(cls, vars, ints, den=1):
        obj = cls.__new__(cls)
        obj._init(vars, {e: c for e, c in ints.items() if c}, den)
        return obj

    # -- constructors -------------------------------------------------------
    @classmethod
    def const(cls, value: Number, vars: Sequence[str] = ()) -> "Poly":
        value = Fraction(value)
        vars = tuple(vars)
        return cls._raw(vars, {(0,) * len(vars): value.numerator}, value.denominator)

    @classmethod
    def var(cls, name: str, vars: Sequence[str] | None = None) -> "Poly":
        vars = (name,) if vars is None else tuple(vars)
        exp = tuple(1 if v == name else 0 for v in vars)
        if sum(exp) != 1:
            raise ValueError(f"{name!r} not in {vars}")
        return cls._raw(vars, {exp: 1})

    # -- structure ----------------------------------------------------------
    @property
    def terms(self) -> dict[Exponent, Fraction]:
        return {e: Fraction(c, self._d) for e, c in self._c.items()}

    def is_zero(self) -> bool:
        return not self._c

    def is_constant(self) -> bool:
        return all(not any(e) for e in self._c)

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise ValueError("polynomial is not constant")
        return Fraction(self._c.get((0,) * len(self.vars), 0), self._d)

    def total_degree(self) -> int:
        return max((sum(e) for e in self._c), default=0)

    def degrees(self) -> tuple[int, ...]:
        if self._maxdeg is None:
            md = [0] * len(self.vars)
            for e in self._c:
                for i, k in enumerate(e):
                    if k > md[i]:
                        md[i] = k
            self._maxdeg = tuple(md)
        return self._maxdeg

    def degree(self, name: str) -> int:
        if name not in self.vars:
            return 0
        return self.degrees()[self.vars.index(name)]

    def __len__(self):
        return len(self._c)

    def embed(self, vars: Sequence[str]) -> "Poly":
        """Re-express over ``vars``, which must contain every variable in use."""
        vars = tuple(vars)
        if vars == self.vars:
            return self
        pos = []
        for i, name in enumerate(self.vars):
            if name in vars:
                pos.append(vars.index(name))
            else:
                if any(e[i] for e in self._c):
                    raise ValueError(f"variable {name!r} is used but missing from {vars}")
                pos.append(None)
        if len(set(vars)) != len(vars):
            raise ValueError(f"duplicate variable names in {vars}")
        n = len(vars)
        out = {}
        for e, c in self._c.items():
            new = [0] * n
            for i, k in enumerate(e):
                if k:
                    new[pos[i]] = k
            out[tuple(new)] = c
        return Poly._raw(vars, out, self._d)

    def relabel(self, names: Sequence[str]) -> "Poly":
        """Rename variables positionally."""
        names = tuple(names)
        if len(names) != len(self.vars):
            raise ValueError("relabel needs one name per variable")
        return Poly._raw(names, self._c, self._d)

    # -- arithmetic ---------------------------------------------------------
    def _coerce(self, other) -> "Poly":
        if isinstance(other, Poly):
            return other
        if isinstance(other, (int, Fraction)):
            return Poly.const(other, self.vars)
        return NotImplemented

    def _aligned(self, other: "Poly"):
        if self.vars == other.vars:
            return self.vars, self, other
        vars = _union_vars(self.vars, other.vars)
        return vars, self.embed(vars), other.embed(vars)

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        vars, a, b = self._aligned(other)
        if not b._c:
            return a
        if not a._c:
            return b
        l = a._d * b._d // math.gcd(a._d, b._d)
        fa, fb = l // a._d, l // b._d
        out = {e: c * fa for e, c in a._c.items()} if fa != 1 else dict(a._c)
        for e, c in b._c.items():
            out[e] = out.get(e, 0) + c * fb
        return Poly._raw(vars, out, l)

    __radd__ = __add__

    def __neg__(self):
        return Poly._raw(self.vars, {e: -c for e, c in self._c.items()}, self._d)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Fraction(other)
            if not other:
                return Poly._raw(self.vars, {})
            return Poly._raw(
                self.vars, {e: c * other.numerator for e, c in self._c.items()}, self._d * other.denominator
            )
        if not isinstance(other, Poly):
            return NotImplemented
        vars, a, b = self._aligned(other)
        if not a._c or not b._c:
            return Poly._raw(vars, {})
        if len(b._c) == 1:
            a, b = b, a
        out: dict[Exponent, int] = {}
        get = out.get
        items_b = list(b._c.items())
        for ea, ca in a._c.items():
            for eb, cb in items_b:
                e = tuple(x + y for x, y in zip(ea, eb))
                out[e] = get(e, 0) + ca * cb
        return Poly._raw(vars, out, a._d * b._d)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("exponent must be a nonnegative integer")
        result = Poly.const(1, self.vars)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return self * (1 / Fraction(other))
        if isinstance(other, (Poly, RatFun)):
            return RatFun(self) / other
        return NotImplemented

    def __rtruediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return RatFun(Poly.const(other, self.vars), self)
        return NotImplemented

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Poly.const(other, self.vars)
        if not isinstance(other, Poly):
            return NotImplemented
        if self.vars != other.vars:
            vars, a, b = self._aligned(other)
            return a._c == b._c and a._d == b._d
        return self._c == other._c and self._d == other._d

    def __hash__(self):
        if self._hash is None:
            # hash over used variables only, so embeddings hash alike
            used = [i for i, k in enumerate(self.degrees()) if k]
            key = frozenset(
                (tuple((self.vars[i], e[i]) for i in used if e[i]), c) for e, c in self._c.items()
            )
            self._hash = hash((key, self._d))
        return self._hash

    # -- evaluation ---------------------------------------------------------
    def __call__(self, *point):
        if len(point) == 1 and isinstance(point[0], (list, tuple)):
            point = point[0]
        return self.evaluate(point)

    def evaluate(self, point: Sequence) -> Fraction:
        """Exact value at a rational point (one coordinate per variable)."""
        if len(point) != len(self.vars):
            raise ValueError(f"point has {len(point)} coordinates, expected {len(self.vars)}")
        if not self._c:
            return Fraction(0)
        fr = [x if isinstance(x, Fraction) else Fraction(x) for x in point]
        md = self.degrees()
        nums = [x.numerator for x in fr]
        dens = [x.denominator for x in fr]
        npow = [_powers(nums[i], md[i]) for i in range(len(fr))]
        dpow = [_powers(dens[i], md[i]) for i in range(len(fr))]
        total = 0
        for e, c in self._c.items():
            t = c
            for i, k in enumerate(e):
                m = md[i]
                if m:
                    t *= npow[i][k] * dpow[i][m - k]
            total += t
        scale = self._d
        for i, m in enumerate(md):
            if m:
                scale *= dpow[i][m]
        return Fraction(total, scale)

    def evaluate_float(self, point: Sequence[float]) -> float:
        total = 0.0
        for e, c in self._c.items():
            t = float(c)
            for x, k in zip(point, e):
                if k:
                    t *= x**k
            total += t
        return total / self._d

    def specialize(self, assignment: Mapping[str, Number]) -> "Poly":
        """Substitute numbers for some variables; the rest stay symbolic."""
        idx = [i for i, v in enumerate(self.vars) if v in assignment]
        if not idx:
            return self
        keep = [i for i in range(len(self.vars)) if i not in idx]
        vals = {i: Fraction(assignment[self.vars[i]]) for i in idx}
        md = self.degrees()
        npow = {i: _powers(vals[i].numerator, md[i]) for i in idx}
        dpow = {i: _powers(vals[i].denominator, md[i]) for i in idx}
        out: dict[Exponent, int] = {}
        for e, c in self._c.items():
            t = c
            for i in idx:
                t *= npow[i][e[i]] * dpow[i][md[i] - e[i]]
            key = tuple(e[i] for i in keep)
            out[key] = out.get(key, 0) + t
        scale = self._d
        for i in idx:
            scale *= dpow[i][md[i]]
        return Poly._raw(tuple(self.vars[i] for i in keep), out, scale)

    # -- text ---------------------------------------------------------------
    def to_text(self) -> str:
        if not self._c:
            return "0/1"
        parts = []
        for e in sorted(self._c, key=_grlex_key):
            coeff = Fraction(self._c[e], self._d)
            factors = [f"{v}^{k}" for v, k in zip(self.vars, e) if k]
            head = f"{coeff.numerator}/{coeff.denominator}"
            parts.append(" * ".join([head] + factors))
        return " + ".join(parts)

    def __str__(self):
        return self.to_text()

    def __repr__(self):
        return f"Poly({self.to_text()!r}, vars={self.vars!r})"


def _powers(base: int, k: int) -> list[int]:
    out = [1]
    for _ in range(k):
        out.append(out[-1] * base)
    return out


def as_poly(value, vars: Sequence[str] = ()) -> Poly:
    if isinstance(value, Poly):
        return value
    return Poly.const(value, vars)


class RatFun:
    """Quotient ``num/den`` of polynomials, never reduced by a gcd.

    Equality is decided by cross multiplication, so instances are unhashable.
    """

    __slots__ = ("num", "den")

    def __init__(self, num, den=None):
        if isinstance(num, RatFun):
            if den is not None:
                raise TypeError("cannot supply den with a RatFun numerator")
            self.num, self.den = num.num, num.den
            return
        num = as_poly(num, den.vars if isinstance(den, Poly) else ())
        den = as_poly(1 if den is None else den, num.vars)
        if den.is_zero():
            raise ZeroDivisionError("denominator is the zero polynomial")
        if num.vars != den.vars:
            vars = _union_vars(num.vars, den.vars)
            num, den = num.embed(vars), den.embed(vars)
        if den.is_constant():
            c = den.constant_value()
            if c != 1:
                num, den = num * (1 / c), Poly.const(1, num.vars)
        elif num.is_zero():
            den = Poly.const(1, num.vars)
        self.num, self.den = num, den

    @property
    def vars(self):
        return self.num.vars

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_polynomial(self) -> bool:
        return self.den.is_constant()

    def embed(self, vars) -> "RatFun":
        return RatFun(self.num.embed(vars), self.den.embed(vars))

    def relabel(self, names) -> "RatFun":
        return RatFun(self.num.relabel(names), self.den.relabel(names))

    def _coerce(self, other):
        if isinstance(other, RatFun):
            return other
        if isinstance(other, (Poly, int, Fraction)):
            return RatFun(as_poly(other, self.vars))
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if self.den == other.den:
            return RatFun(self.num + other.num, self.den)
        return RatFun(self.num * other.den + other.num * self.den, self.den * other.den)

    __radd__ = __add__

    def __neg__(self):
        return RatFun(-self.num, self.den)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return RatFun(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if other.is_zero():
            raise ZeroDivisionError("division by the zero rational function")
        return RatFun(self.num * other.den, self.den * other.num)

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other / self

    def __pow__(self, k: int):
        if k < 0:
            return RatFun(self.den**-k, self.num**-k)
        return RatFun(self.num**k, self.den**k)

    def __eq__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return ratfun_equal(self, other)

    __hash__ = None

    def evaluate(self, point: Sequence) -> Fraction:
        d = self.den.evaluate(point)
        if d == 0:
            raise DomainError("denominator vanishes", self.den, tuple(point))
        return self.num.evaluate(point) / d

    def __call__(self, *point):
        if len(point) == 1 and isinstance(point[0], (list, tuple)):
            point = point[0]
        return self.evaluate(point)

    def specialize(self, assignment) -> "RatFun":
        return RatFun(self.num.specialize(assignment), self.den.specialize(assignment))

    def to_text(self) -> dict[str, str]:
        return {"num": self.num.to_text(), "den": self.den.to_text()}

    def __repr__(self):
        return f"RatFun(({self.num.to_text()}) / ({self.den.to_text()}))"


Scalar = Union[Fraction, Poly, RatFun]


def is_exact_number(x) -> bool:
    return isinstance(x, (int, Fraction))


def is_zero(x) -> bool:
    if isinstance(x, (Poly, RatFun)):
        return x.is_zero()
    return x == 0


# -- operations ----------------------------------------------------------------


def poly_arith(lhs: Poly, rhs: Poly, op: str) -> Poly:
    if op == "add":
        return lhs + rhs
    if op == "sub":
        return lhs - rhs
    if op == "mul":
        return lhs * rhs
    raise ValueError(f"unknown operation {op!r}")


def ratfun_equal(lhs: RatFun, rhs: RatFun) -> bool:
    return (lhs.num * rhs.den - rhs.num * lhs.den).is_zero()


def v_decompose(p: Poly, v_vars: Sequence[str]) -> list[Poly]:
    """Write ``p`` as ``sum(v_i * P_i)``.

    Each monomial goes to the lowest-index v-variable it contains.  Raises
    :class:`PreconditionError` when ``p`` does not vanish at ``v = 0``.
    """
    idx = []
    for name in v_vars:
        if name not in p.vars:
            p = p.embed(p.vars + (name,))
        idx.append(p.vars.index(name))
    buckets: list[dict[Exponent, int]] = [{} for _ in idx]
    for e, c in p._c.items():
        for slot, i in enumerate(idx):
            if e[i]:
                lowered = list(e)
                lowered[i] -= 1
                buckets[slot][tuple(lowered)] = c
                break
        else:
            raise PreconditionError(f"polynomial does not vanish at v=0 (monomial {e})")
    return [Poly._raw(p.vars, b, p._d) for b in buckets]


def _as_ratfun(value, vars=()) -> RatFun:
    if isinstance(value, RatFun):
        return value
    return RatFun(as_poly(value, vars))


def substitute(polys: Sequence[Poly], values: Sequence) -> tuple[list[Poly], Poly]:
    """Substitute ``values`` (numbers, polynomials or rational functions) for
    the variables of ``polys``.

    Returns numerators ``N_k`` and one common factor ``L`` with
    ``polys[k](values) == N_k / L``.  Inputs sharing a denominator are
    homogenized together; ``L`` does not depend on the polynomial.
    """
    if not polys:
        return [], Poly.const(1)
    vars = polys[0].vars
    polys = [p.embed(vars) if p.vars != vars else p for p in polys]
    if len(values) != len(vars):
        raise ValueError(f"need {len(vars)} values, got {len(values)}")
    numeric = {}
    symbolic = []
    for name, val in zip(vars, values):
        if is_exact_number(val):
            numeric[name] = val
        else:
            symbolic.append((name, val))
    if numeric:
        polys = [p.specialize(numeric) for p in polys]
    if not symbolic:
        return [Poly.const(p.constant_value()) if p.vars == () else p for p in polys], Poly.const(1)
    out_vars: tuple[str, ...] = ()
    rf = []
    for _, val in symbolic:
        r = _as_ratfun(val)
        out_vars = _union_vars(out_vars, r.vars)
        rf.append(r)
    rf = [r.embed(out_vars) for r in rf]
    # group inputs by structurally identical denominators
    groups: list[tuple[Poly, list[int]]] = []
    for j, r in enumerate(rf):
        if r.den.is_constant():
            continue
        for den, members in groups:
            if den == r.den:
                members.append(j)
                break
        else:
            groups.append((r.den, [j]))
    group_of = {j: gi for gi, (_, members) in enumerate(groups) for j in members}
    E = [0] * len(groups)
    for p in polys:
        for e in p._c:
            acc = [0] * len(groups)
            for j, k in enumerate(e):
                if k and j in group_of:
                    acc[group_of[j]] += k
            for gi, a in enumerate(acc):
                if a > E[gi]:
                    E[gi] = a
    maxdeg = [0] * len(rf)
    for p in polys:
        for j, k in enumerate(p.degrees()):
            if k > maxdeg[j]:
                maxdeg[j] = k
    one = Poly.const(1, out_vars)
    num_pows = []
    for j, r in enumerate(rf):
        pw = [one]
        for _ in range(maxdeg[j]):
            pw.append(pw[-1] * r.num)
        num_pows.append(pw)
    den_pows = []
    for gi, (den, _) in enumerate(groups):
        pw = [one]
        for _ in range(E[gi]):
            pw.append(pw[-1] * den)
        den_pows.append(pw)
    results = []
    for p in polys:
        acc: dict[tuple, Poly] = {}
        for e, c in p._c.items():
            gdeg = [0] * len(groups)
            for j, k in enumerate(e):
                if k and j in group_of:
                    gdeg[group_of[j]] += k
            key = tuple(e)
            term = Poly._raw(out_vars, {(0,) * len(out_vars): c}, p._d)
            for j, k in enumerate(key):
                if k:
                    term = term * num_pows[j][k]
            for gi, gd in enumerate(gdeg):
                if E[gi] - gd:
                    term = term * den_pows[gi][E[gi] - gd]
            acc[key] = term
        total = Poly._raw(out_vars, {})
        for term in acc.values():
            total = total + term
        results.append(total)
    L = one
    for gi in range(len(groups)):
        L = L * den_pows[gi][E[gi]]
    return results, L


# -- maps ------------------------------------------------------------------------


class RegularMap:
    """Interface shared by explicit and lazily composed maps.

    Calling a map with a point returns a tuple of values or raises
    :class:`DomainError`.
    """

    n_in: int
    n_out: int
    name: str = ""

    def __call__(self, point):
        raise NotImplementedError

    def defined_at(self, point) -> bool:
        try:
            self(point)
        except DomainError:
            return False
        return True


class RatMap(RegularMap):
    """Componentwise rational map, defined where the listed inequations and
    every component denominator are nonzero."""

    def __init__(
        self,
        inputs: Sequence[str],
        components: Iterable,
        domain_inequations: Iterable[Poly] = (),
        name: str = "",
    ):
        self.inputs = tuple(inputs)
        comps = []
        for c in components:
            r = _as_ratfun(c, self.inputs)
            comps.append(r.embed(self.inputs))
        self.components = tuple(comps)
        ineqs = []
        for q in domain_inequations:
            q = as_poly(q, self.inputs).embed(self.inputs)
            if q.is_constant() and not q.is_zero():
                continue
            if q not in ineqs:
                ineqs.append(q)
        self.domain_inequations = tuple(ineqs)
        self.name = name
        self.n_in = len(self.inputs)
        self.n_out = len(self.components)

    def __call__(self, point):
        point = tuple(point)
        if len(point) != self.n_in:
            raise ValueError(f"{self.name or 'map'} expects {self.n_in} coordinates, got {len(point)}")
        if all(is_exact_number(x) for x in point):
            for q in self.domain_inequations:
                if q.evaluate(point) == 0:
                    raise DomainError("domain inequation vanishes", q, point)
            return tuple(c.evaluate(point) for c in self.components)
        return self._call_symbolic(point)

    def _call_symbolic(self, point):
        polys = list(self.domain_inequations)
        for c in self.components:
            polys.extend((c.num, c.den))
        nums, _ = substitute(polys, point)
        k = len(self.domain_inequations)
        for q, val in zip(self.domain_inequations, nums[:k]):
            if val.is_zero():
                raise DomainError("domain inequation vanishes identically", q, point)
        out = []
        for i in range(self.n_out):
            n, d = nums[k + 2 * i], nums[k + 2 * i + 1]
            if d.is_zero():
                raise DomainError("denominator vanishes identically", self.components[i].den, point)
            out.append(RatFun(n, d))
        return tuple(out)

    def denominators(self) -> list[Poly]:
        return [c.den for c in self.components]

    def specialize(self, assignment: Mapping[str, Number]) -> "RatMap":
        keep = [v for v in self.inputs if v not in assignment]
        comps = [c.specialize(assignment).embed(keep) for c in self.components]
        ineqs = [q.specialize(assignment).embed(keep) for q in self.domain_inequations]
        for q, orig in zip(ineqs, self.domain_inequations):
            if q.is_zero():
                raise DomainError("domain inequation vanishes at the specialization", orig, assignment)
        for c in comps:
            if c.den.is_zero():
                raise DomainError("denominator vanishes at the specialization", None, assignment)
        return RatMap(keep, comps, ineqs, name=self.name)

    def relabel(self, names: Sequence[str]) -> "RatMap":
        return RatMap(
            names,
            [c.relabel(names) for c in self.components],
            [q.relabel(names) for q in self.domain_inequations],
            name=self.name,
        )

    def embed(self, inputs: Sequence[str]) -> "RatMap":
        """View as a map on a larger input tuple (extra inputs are ignored)."""
        return RatMap(
            inputs,
            [c.embed(inputs) for c in self.components],
            [q.embed(inputs) for q in self.domain_inequations],
            name=self.name,
        )

    def to_text(self) -> dict:
        return {
            "inputs": list(self.inputs),
            "components": [c.to_text() for c in self.components],
            "domain_inequations": [q.to_text() for q in self.domain_inequations],
        }

    def __repr__(self):
        return f"RatMap({self.name or ''}{list(self.inputs)} -> {self.n_out})"


def ratmap_compose(outer: RatMap, inner: RatMap, name: str = "") -> RatMap:
    """Explicit composition ``outer(inner(x))`` without any cancellation."""
    if outer.n_in != inner.n_out:
        raise ValueError(f"arity mismatch: outer takes {outer.n_in}, inner gives {inner.n_out}")
    values = inner.components
    comps = []
    for c in outer.components:
        (n, d), _ = substitute([c.num, c.den], values)
        comps.append(RatFun(n.embed(inner.inputs), d.embed(inner.inputs)))
    ineqs = list(inner.domain_inequations)
    ineqs.extend(c.den for c in inner.components)
    if outer.domain_inequations:
        subbed, _ = substitute(list(outer.domain_inequations), values)
        ineqs.extend(q.embed(inner.inputs) for q in subbed)
    return RatMap(inner.inputs, comps, ineqs, name=name or outer.name)


def eval_exact(f, point: Sequence):
    """Exact value of a polynomial, rational function or map at ``point``."""
    point = tuple(Fraction(x) for x in point)
    if isinstance(f, RegularMap):
        return f(point)
    if isinstance(f, (Poly, RatFun)):
        return f.evaluate(point)
    raise TypeError(f"cannot evaluate {type(f).__name__}")


class FunctionMap(RegularMap):
    """A regular map given by a Python function of the coordinates.

    Used for compositions that are too large to expand into explicit
    polynomials: the function calls explicit maps in sequence, so the result
    is still an exact rational formula.
    """

    def __init__(self, n_in: int, n_out: int, fn: Callable, name: str = ""):
        self.n_in = n_in
        self.n_out = n_out
        self.fn = fn
        self.name = name

    def __call__(self, point):
        point = tuple(point)
        if len(point) != self.n_in:
            raise ValueError(f"{self.name or 'map'} expects {self.n_in} coordinates, got {len(point)}")
        try:
            out = tuple(self.fn(point))
        except ZeroDivisionError as exc:
            raise DomainError(f"{self.name or 'map'}: division by zero", None, point) from exc
        return out

    def __repr__(self):
        return f"FunctionMap({self.name}: {self.n_in} -> {self.n_out})"


class PatchedMap(RegularMap):
    """A regular map given by several presentations that agree on overlaps.

    Evaluation uses the first presentation defined at the point.
    """

    def __init__(self, pieces: Sequence[RegularMap], name: str = ""):
        if not pieces:
            raise ValueError("need at least one presentation")
        self.pieces = tuple(pieces)
        self.n_in = pieces[0].n_in
        self.n_out = pieces[0].n_out
        self.name = name

    def __call__(self, point):
        last = None
        for piece in self.pieces:
            try:
                return piece(point)
            except DomainError as exc:
                last = exc
        raise DomainError(f"{self.name or 'map'}: no presentation is defined here", last.poly, point)

    def which(self, point) -> int | None:
        for i, piece in enumerate(self.pieces):
            if piece.defined_at(point):
                return i
        return None


def chain(outer: RegularMap, *inners: RegularMap, name: str = "") -> FunctionMap:
    """Lazy composition ``x -> outer(inner_1(x) + inner_2(x) + ...)``."""
    n_in = inners[0].n_in

    def fn(point):
        args = []
        for inner in inners:
            args.extend(inner(point))
        return outer(args)

    return FunctionMap(n_in, outer.n_out, fn, name=name or outer.name)


def identity_map(inputs: Sequence[str]) -> RatMap:
    inputs = tuple(inputs)
    return RatMap(inputs, [Poly.var(v, inputs) for v in inputs], name="id")


def projection(inputs: Sequence[str], keep: Sequence[str]) -> RatMap:
    inputs = tuple(inputs)
    return RatMap(inputs, [Poly.var(v, inputs) for v in keep], name="proj")


def symbols(names: Sequence[str]) -> list[Poly]:
    names = tuple(names)
    return [Poly.var(n, names) for n in names]


# -- text format ---------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z0-9_]*)|(\*\*|[-+*/^()]))")


def parse_poly(text: str, vars: Sequence[str] | None = None) -> Poly:
    """Parse a polynomial; accepts the canonical ``num/den * x^e`` format and
    ordinary infix expressions with ``+ - * ^ **``, parentheses, and division
    by numeric constants."""
    tokens = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ValueError(f"cannot parse polynomial near {text[pos:pos + 10]!r}")
        num, name, op = m.groups()
        tokens.append(("num", int(num)) if num else ("var", name) if name else ("op", op))
        pos = m.end()
    names = [t[1] for t in tokens if t[0] == "var"]
    if vars is None:
        vars = tuple(dict.fromkeys(names))
    else:
        vars = tuple(vars)
        missing = set(names) - set(vars)
        if missing:
            raise ValueError(f"unknown variables {sorted(missing)}")
    parser = _Parser(tokens, vars)
    result = parser.expr()
    if parser.i != len(tokens):
        raise ValueError(f"trailing input in {text!r}")
    return result


class _Parser:
    def __init__(self, tokens, vars):
        self.t = tokens
        self.i = 0
        self.vars = vars

    def peek(self):
        return self.t[self.i] if self.i < len(self.t) else (None, None)

    def take(self, op=None):
        tok = self.peek()
        if op is not None and tok != ("op", op):
            raise ValueError(f"expected {op!r}, got {tok[1]!r}")
        self.i += 1
        return tok

    def expr(self):
        sign = 1
        while self.peek() in (("op", "+"), ("op", "-")):
            if self.take()[1] == "-":
                sign = -sign
        acc = self.term() * sign
        while self.peek() in (("op", "+"), ("op", "-")):
            op = self.take()[1]
            sign = 1 if op == "+" else -1
            while self.peek() in (("op", "+"), ("op", "-")):
                if self.take()[1] == "-":
                    sign = -sign
            acc = acc + self.term() * sign
        return acc

    def term(self):
        acc = self.power()
        while True:
            tok = self.peek()
            if tok == ("op", "*"):
                self.take()
                acc = acc * self.power()
            elif tok == ("op", "/"):
                self.take()
                d = self.power()
                if not d.is_constant() or d.is_zero():
                    raise ValueError("division is only allowed by nonzero constants")
                acc = acc * (1 / d.constant_value())
            elif tok[0] in ("num", "var") or tok == ("op", "("):
                acc = acc * self.power()
            else:
                return acc

    def power(self):
        base = self.atom()
        if self.peek() in (("op", "^"), ("op", "**")):
            self.take()
            kind, val = self.take()
            if kind != "num":
                raise ValueError("exponent must be a nonnegative integer")
            base = base**val
        return base

    def atom(self):
        kind, val = self.take()
        if kind == "num":
            return Poly.const(val, self.vars)
        if kind == "var":
            return Poly.var(val, self.vars)
        if (kind, val) == ("op", "("):
            inner = self.expr()
            self.take(")")
            return inner
        if (kind, val) == ("op", "-"):
            return -self.power()
        raise ValueError(f"unexpected token {val!r}")


def parse_ratfun(doc, vars: Sequence[str] | None = None) -> RatFun:
    if isinstance(doc, str):
        return RatFun(parse_poly(doc, vars))
    num = parse_poly(doc["num"], vars)
    den = parse_poly(doc.get("den", "1"), vars if vars is not None else num.vars)
    return RatFun(num, den)


def ratmap_from_text(doc: Mapping) -> RatMap:
    inputs = doc["inputs"]
    return RatMap(
        inputs,
        [parse_ratfun(c, inputs) for c in doc["components"]],
        [parse_poly(q, inputs) for q in doc.get("domain_inequations", [])],
        name=doc.get("name", ""),
    )
