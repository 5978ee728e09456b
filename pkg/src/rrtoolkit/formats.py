"""JSON-compatible documents for varieties, regions, retracts, sprays and problems.

Polynomials use the canonical text format of :mod:`rrtoolkit.ratcalc`;
rationals are written as strings "p/q".  Lazily composed sprays are stored by
their recipe and rebuilt on load.
"""

from __future__ import annotations

import json
import os
import tempfile
from fractions import Fraction
from pathlib import Path
from typing import Any

from .ratcalc import Poly, RatMap, parse_poly, ratmap_from_text
from .sprays import RetractPresentation, Spray, rescale_to_unit_ball
from .varieties import RationalPointSampler, Region, VarietyPresentation

SPRAY_FORMAT = "rrtoolkit-spray"
FORMAT_VERSION = 1


class FormatError(ValueError):
    """A document does not match the expected layout."""


def _q(x) -> str:
    return str(Fraction(x))


def _point_doc(p) -> list[str]:
    return [_q(x) for x in p]


def _point(doc) -> tuple[Fraction, ...]:
    return tuple(Fraction(x) for x in doc)


def _ratmap_doc(m) -> dict:
    if not isinstance(m, RatMap):
        raise FormatError(f"map {m!r} has no explicit formula")
    doc = m.to_text()
    if m.name:
        doc["name"] = m.name
    return doc


# -- samplers and varieties ------------------------------------------------------------


def sampler_to_doc(s: RationalPointSampler) -> dict:
    doc: dict[str, Any] = {"kind": s.kind, "seed": s.seed, "bound": s.bound}
    if s.parametrization is not None:
        doc["parametrization"] = _ratmap_doc(s.parametrization)
    if s.factors:
        doc["factors"] = [sampler_to_doc(f) for f in s.factors]
    if s.base is not None:
        doc["base"] = sampler_to_doc(s.base)
    if s.points:
        doc["points"] = [_point_doc(p) for p in s.points]
    if s.anchors:
        doc["anchors"] = [_point_doc(p) for p in s.anchors]
    return doc


def sampler_from_doc(doc: dict) -> RationalPointSampler:
    return RationalPointSampler(
        doc["kind"],
        parametrization=ratmap_from_text(doc["parametrization"]) if "parametrization" in doc else None,
        factors=tuple(sampler_from_doc(f) for f in doc.get("factors", ())),
        base=sampler_from_doc(doc["base"]) if "base" in doc else None,
        points=tuple(_point(p) for p in doc.get("points", ())),
        anchors=tuple(_point(p) for p in doc.get("anchors", ())),
        seed=doc.get("seed", 0),
        bound=doc.get("bound", 10**4),
    )


def variety_to_doc(v: VarietyPresentation) -> dict:
    doc: dict[str, Any] = {
        "ambient_dim": v.ambient_dim,
        "coords": list(v.coords),
        "generators": [g.to_text() for g in v.generators],
        "inequations": [q.to_text() for q in v.inequations],
        "name": v.name,
    }
    if v.sampler is not None:
        doc["sampler"] = sampler_to_doc(v.sampler)
    return doc


def variety_from_doc(doc: dict) -> VarietyPresentation:
    n = doc["ambient_dim"]
    coords = tuple(doc.get("coords") or [f"x{i + 1}" for i in range(n)])
    return VarietyPresentation(
        n,
        tuple(parse_poly(g, coords) for g in doc.get("generators", [])),
        tuple(parse_poly(q, coords) for q in doc.get("inequations", [])),
        sampler_from_doc(doc["sampler"]) if "sampler" in doc else None,
        coords,
        name=doc.get("name", ""),
    )


def region_to_doc(r: Region) -> dict:
    return {
        "ambient_dim": r.ambient_dim,
        "coords": list(r.coords),
        "constraints": [{"poly": c.to_text(), "rel": rel} for c, rel in r.constraints],
        "bounding_box": [[_q(lo), _q(hi)] for lo, hi in r.bounding_box],
        "bounded": r.bounded,
        "name": r.name,
    }


def region_from_doc(doc: dict) -> Region:
    n = doc["ambient_dim"]
    coords = tuple(doc.get("coords") or ())
    names = coords or (("t",) if n == 1 else tuple(f"x{i + 1}" for i in range(n)))
    return Region(
        n,
        tuple((parse_poly(c["poly"], names), c["rel"]) for c in doc.get("constraints", [])),
        tuple((Fraction(lo), Fraction(hi)) for lo, hi in doc["bounding_box"]),
        name=doc.get("name", ""),
        coords=names,
        bounded=doc.get("bounded", True),
    )


# -- retracts and sprays --------------------------------------------------------------


def retract_to_doc(p: RetractPresentation) -> dict:
    return {
        "Y": variety_to_doc(p.Y),
        "n": p.n,
        "W_inequations": [q.to_text() for q in p.W_inequations],
        "i": _ratmap_doc(p.i),
        "r": _ratmap_doc(p.r),
        "name": p.name,
    }


def retract_from_doc(doc: dict) -> RetractPresentation:
    r = ratmap_from_text(doc["r"])
    return RetractPresentation(
        variety_from_doc(doc["Y"]),
        doc["n"],
        tuple(parse_poly(q, r.inputs) for q in doc.get("W_inequations", [])),
        ratmap_from_text(doc["i"]),
        r,
        name=doc.get("name", ""),
    )


def spray_to_doc(s: Spray) -> dict:
    ys_, vs_, zs_ = s.vars
    doc: dict[str, Any] = {
        "format": SPRAY_FORMAT,
        "version": FORMAT_VERSION,
        "name": s.name,
        "n": s.n,
        "vars": {"y": list(ys_), "v": list(vs_), "z": list(zs_)},
        "Y": variety_to_doc(s.Y),
        "ball_validated": s.ball_validated,
    }
    if s.is_explicit() and s.M_test is None and s.N_test is None:
        doc.update(
            M_inequations=[q.to_text() for q in s.M_inequations],
            N_inequations=[q.to_text() for q in s.N_inequations],
            sigma=_ratmap_doc(s.sigma),
            tau=_ratmap_doc(s.tau),
        )
        return doc
    if s.recipe is None:
        raise FormatError(f"spray {s.name!r} is lazily composed and has no recipe")
    doc["recipe"] = _recipe_doc(s.recipe)
    return doc


def _recipe_doc(r: dict) -> dict:
    kind = r["kind"]
    if kind == "glued":
        return {
            "kind": kind,
            "Y": variety_to_doc(r["Y"]),
            "Y1": variety_to_doc(r["Y1"]),
            "Y2": variety_to_doc(r["Y2"]),
            "s1": spray_to_doc(r["s1"]),
            "s2": spray_to_doc(r["s2"]),
            "trials": r["trials"],
            "seed": r["seed"],
        }
    if kind == "rescale":
        return {"kind": kind, "base": _recipe_doc(r["base"]), "f": r["f"]}
    raise FormatError(f"unknown recipe kind {kind!r}")


def _from_recipe(doc: dict) -> Spray:
    kind = doc.get("kind")
    if kind == "glued":
        from .gluing import glue_sprays

        g = glue_sprays(
            variety_from_doc(doc["Y"]),
            variety_from_doc(doc["Y1"]),
            variety_from_doc(doc["Y2"]),
            spray_from_doc(doc["s1"]),
            spray_from_doc(doc["s2"]),
            trials=doc.get("trials", 50),
            seed=doc.get("seed", 0),
            verify=False,
        )
        return g.spray
    if kind == "rescale":
        base = _from_recipe(doc["base"])
        f = doc["f"]
        f = parse_poly(f["num"], base.vars[0]) / parse_poly(f["den"], base.vars[0])
        return rescale_to_unit_ball(base, f)
    raise FormatError(f"unknown recipe kind {kind!r}")


def spray_from_doc(doc: dict) -> Spray:
    if doc.get("format") != SPRAY_FORMAT:
        raise FormatError(f"not a spray document (format {doc.get('format')!r})")
    if doc.get("version") != FORMAT_VERSION:
        raise FormatError(f"unsupported spray format version {doc.get('version')!r}")
    if "recipe" in doc:
        return _from_recipe(doc["recipe"])
    vs = doc["vars"]
    sv = tuple(vs["y"]) + tuple(vs["v"])
    yz = tuple(vs["y"]) + tuple(vs["z"])
    sigma = ratmap_from_text(doc["sigma"])
    tau = ratmap_from_text(doc["tau"])
    if sigma.inputs != sv or tau.inputs != yz:
        raise FormatError("sigma/tau inputs do not match the declared variable blocks")
    return Spray(
        doc["n"],
        variety_from_doc(doc["Y"]),
        tuple(parse_poly(q, sv) for q in doc.get("M_inequations", [])),
        tuple(parse_poly(q, yz) for q in doc.get("N_inequations", [])),
        sigma,
        tau,
        name=doc.get("name", ""),
        ball_validated=doc.get("ball_validated", False),
    )


# -- files --------------------------------------------------------------------------


def dumps(doc) -> str:
    """Deterministic JSON text (sorted keys, two-space indent, final newline)."""
    return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def write_atomic(path: str | os.PathLike, text: str) -> None:
    """Write through a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_json(path: str | os.PathLike):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def save_spray(s: Spray, path) -> None:
    write_atomic(path, dumps(spray_to_doc(s)))


def load_spray(path) -> Spray:
    return spray_from_doc(load_json(path))


def poly_list(texts, vars) -> list[Poly]:
    return [parse_poly(t, vars) for t in texts]
