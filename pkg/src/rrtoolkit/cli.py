"""Command-line entry point: ``rrtoolkit run|gallery|verify|version``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .formats import FormatError, dumps, load_json, retract_to_doc, spray_from_doc, spray_to_doc, variety_to_doc, write_atomic
from .gallery import GALLERY, CircleCover, CubicSurface, gallery_get
from .runner import ConfigError, load_config, run_scenario
from .sprays import RetractPresentation, Spray, verify_spray

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rrtoolkit", description="exact spray, gluing and approximation toolkit")
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a scenario config")
    run.add_argument("config")
    run.add_argument("--output-dir", help="override the config's output directory")
    gal = sub.add_parser("gallery", help="list or export fixtures")
    gsub = gal.add_subparsers(dest="gallery_command", required=True)
    gsub.add_parser("list", help="list fixtures")
    exp = gsub.add_parser("export", help="write a fixture document")
    exp.add_argument("name")
    exp.add_argument("path")
    ver = sub.add_parser("verify", help="check the axioms of a spray file")
    ver.add_argument("spray_file")
    ver.add_argument("--trials", type=int, default=200)
    ver.add_argument("--seed", type=int, default=0)
    sub.add_parser("version", help="print the toolkit version")
    return ap


def _fixture_doc(obj) -> dict:
    if isinstance(obj, Spray):
        return spray_to_doc(obj)
    if isinstance(obj, RetractPresentation):
        return {"retract": retract_to_doc(obj)}
    if isinstance(obj, CircleCover):
        return {
            "cover": {
                "Y": variety_to_doc(obj.Y),
                "Y1": variety_to_doc(obj.Y1),
                "Y2": variety_to_doc(obj.Y2),
                "chart1": retract_to_doc(obj.p1),
                "chart2": retract_to_doc(obj.p2),
            }
        }
    if isinstance(obj, CubicSurface):
        return {"cubic": {"P": obj.P.to_text(), "vars": list(obj.P.vars), "affine_chart": obj.affine_chart}}
    raise FormatError(f"cannot export {type(obj).__name__}")


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "version":
        print(f"rrtoolkit {__version__}")
        return EXIT_OK
    if args.command == "gallery":
        if args.gallery_command == "list":
            for name in sorted(GALLERY):
                e = GALLERY[name]
                print(f"{name:20s} {e.kind:8s} {e.description}")
            return EXIT_OK
        if args.name not in GALLERY:
            print(f"error: unknown gallery entry {args.name!r}", file=sys.stderr)
            return EXIT_CONFIG
        write_atomic(args.path, dumps(_fixture_doc(gallery_get(args.name))))
        return EXIT_OK
    if args.command == "verify":
        try:
            s = spray_from_doc(load_json(args.spray_file))
        except (OSError, ValueError, KeyError) as exc:
            print(f"error: cannot load {args.spray_file}: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        rep = verify_spray(s, args.trials, args.seed)
        for c in rep.checks:
            wit = "" if c.witness is None else f"  witness {c.witness}"
            print(f"{c.name:14s} {c.status:4s} {c.trials:5d}{wit}")
        return EXIT_OK if rep.passed else EXIT_FAIL
    try:
        cfg = load_config(args.config, args.output_dir)
        status, result = run_scenario(cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for r in result.rows:
        label = r.get("check") or (f"degree {r['degree']}" if r.get("degree") else "summary")
        print(f"{result.scenario}: {label}: {r['status']}")
    print(f"reports written to {Path(cfg.output_dir)}")
    return status


if __name__ == "__main__":
    sys.exit(main())
