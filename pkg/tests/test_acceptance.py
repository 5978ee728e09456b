"""Acceptance checks, driven through the shipped configs.

Every config is run twice into separate directories; criteria 1-9 read the
first run and re-derive the key quantities independently, criterion 10
compares the two runs byte for byte.
"""

from __future__ import annotations

import csv
import io
import math
import time
from fractions import Fraction
from pathlib import Path

import pytest

from rrtoolkit.approximation import (
    SMOOTH_SHRINK,
    approximate_c0,
    approximate_c_infty,
    circle_demo_problem,
    disc_problem,
    extend_regular,
)
from rrtoolkit.cli import main
from rrtoolkit.gallery import (
    circle_chart,
    circle_two_chart_cover,
    cubic_third_point,
    disconnected_cubic_fixture,
    secant_pairs,
    sphere_spray,
)
from rrtoolkit.gluing import glue_sprays
from rrtoolkit.ratcalc import RatMap, symbols
from rrtoolkit.runner import magnitude_vectors
from rrtoolkit.sprays import rescale_to_unit_ball, retract_from_spray, spray_from_retract, to_global_spray
from rrtoolkit.varieties import sample_points

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
AXIOMS = ("axiom1", "axiom2", "sigma_at_zero", "image_in_Y")


class Run:
    def __init__(self, name: str, out: Path, status: int, seconds: float):
        self.name, self.out, self.status, self.seconds = name, out, status, seconds
        self.csv = (out / "report.csv").read_bytes()
        self.rows = list(csv.DictReader(io.StringIO(self.csv.decode("utf-8"))))

    def row(self, check: str) -> dict:
        (r,) = [r for r in self.rows if r.get("check") == check]
        return r

    def files(self) -> dict[str, bytes]:
        return {p.name: p.read_bytes() for p in sorted(self.out.iterdir())}


@pytest.fixture(scope="module")
def runs(tmp_path_factory):
    out = {}
    for rep in (1, 2):
        base = tmp_path_factory.mktemp(f"run{rep}")
        for cfg in sorted(CONFIGS.glob("*.json")):
            t0 = time.perf_counter()
            status = main(["run", str(cfg), "--output-dir", str(base / cfg.stem)])
            out[(cfg.stem, rep)] = Run(cfg.stem, base / cfg.stem, status, time.perf_counter() - t0)
    return out


def sphere_sigma_oracle(y, v):
    """Second intersection of the sphere with the line through -y and y + v."""
    w = [vi + 2 * yi for vi, yi in zip(v, y)]
    s = 2 * sum(a * b for a, b in zip(y, w)) / sum(a * a for a in w)
    return tuple(-yi + s * wi for yi, wi in zip(y, w))


def assert_all_pass(run: Run, trials: int, names=AXIOMS):
    for name in names:
        r = run.row(name)
        assert r["status"] == "pass", (run.name, r)
        assert int(r["trials"]) >= trials, (run.name, r)


@pytest.mark.criterion(1, "sphere spray axioms, n = 1, 2, 3, 500 exact samples, <= 60 s")
def test_sphere_spray_axioms(runs, record_property):
    total = 0.0
    for n in (1, 2, 3):
        run = runs[(f"sphere-{n}-axioms", 1)]
        assert run.status == 0
        assert_all_pass(run, 500)
        total += run.seconds
        s = sphere_spray(n)
        ys = sample_points(s.Y, 60, seed=n)
        vs = sample_points(s.Y, 60, seed=10 + n)
        for y, v in zip(ys, vs):
            if s.in_M(y, v):
                assert s.sigma_at(y, v) == sphere_sigma_oracle(y, v)
    record_property("detail", f"{total:.1f} s for the three runs")
    assert total <= 60


@pytest.mark.criterion(2, "circle group spray axioms, 500 exact samples")
def test_circle_group_axioms(runs, record_property):
    run = runs[("circle-group-axioms", 1)]
    assert run.status == 0
    assert_all_pass(run, 500)
    record_property("detail", f"{run.seconds:.1f} s")


@pytest.mark.criterion(3, "retract and spray round trips at 500 samples")
def test_retract_round_trips(runs, record_property):
    for name in ("chart-minus-roundtrip", "chart-plus-roundtrip"):
        run = runs[(name, 1)]
        assert run.status == 0
        assert_all_pass(run, 500, ("retract-roundtrip",))
    run = runs[("sphere-basepoint-retract", 1)]
    assert run.status == 0
    assert_all_pass(run, 500, ("extracted-retract",))
    # direct evaluation of r(i(z)) on fresh samples
    for pole in (-1, 1):
        p = circle_chart(pole)
        for z in sample_points(p.Y, 500, seed=77):
            assert tuple(p.r(p.i(z))) == tuple(z)
    q = retract_from_spray(sphere_spray(1), (1, 0))
    done = 0
    for z in sample_points(q.Y, 600, seed=78):
        if q.Y.contains(z):
            assert tuple(q.r(q.i(z))) == tuple(z)
            done += 1
    record_property("detail", f"extracted chart checked directly at {done} points")
    assert done >= 500


@pytest.mark.criterion(4, "global spray export at 500 samples with |v| up to 10^6, hand value (12/13, 5/13)")
def test_global_export(runs, record_property):
    run = runs[("global-export", 1)]
    assert run.status == 0
    assert_all_pass(run, 500, ("global-export",))
    sizes = [max(abs(c) for c in v) for v in magnitude_vectors(2, 0, 500, 10**6)]
    assert max(sizes) == 10**6 and min(sizes) == Fraction(1, 1000)
    g = to_global_spray(rescale_to_unit_ball(sphere_spray(1), 1))
    v = (Fraction(-1), Fraction(1))
    k = 1 + v[0] ** 2 + v[1] ** 2
    expected = sphere_sigma_oracle((1, 0), tuple(c / k for c in v))
    assert expected == (Fraction(12, 13), Fraction(5, 13))
    assert tuple(g((1, 0) + v)) == expected
    record_property("detail", "s((1,0),(-1,1)) = (12/13, 5/13)")


@pytest.mark.criterion(5, "two-chart circle gluing: axioms at 200 samples, near-pole points, identities, <= 5 min")
def test_glue_circle(runs, record_property):
    run = runs[("glue-circle", 1)]
    assert run.status == 0
    assert all(r["status"] == "pass" for r in run.rows)
    assert_all_pass(run, 200)
    for name in ("theta_times_denominator", "Q1_divides_theta", "Q2diag_divides_theta_minus_1"):
        assert run.row(f"identity:{name}")["status"] == "pass"
    near = run.row("near-pole-denominator")
    assert float(near["witness"]) <= 1e-6
    assert int(run.row("agrees-with-sphere-spray")["trials"]) >= 200
    # an independent point next to the pole (1, 0): t = 10^-3 / 2 gives 1 - x ~ 5e-7
    cov = circle_two_chart_cover()
    g = glue_sprays(
        cov.Y, cov.Y1, cov.Y2, spray_from_retract(cov.p1, 20), spray_from_retract(cov.p2, 20), trials=20, verify=False
    ).spray
    t = Fraction(1, 2000)
    y = ((1 - t * t) / (1 + t * t), 2 * t / (1 + t * t))
    assert 1 - y[0] < Fraction(1, 10**6)
    for z in ((Fraction(-3, 5), Fraction(4, 5)), (Fraction(0), Fraction(-1)), (Fraction(5, 13), Fraction(12, 13))):
        assert g.sigma_at(y, g.tau_at(y, z)) == z
    record_property("detail", f"{run.seconds:.1f} s; smallest chart denominator {near['witness']}")
    assert run.seconds <= 300


@pytest.mark.criterion(6, "bounded regular extension on the disc: exact at 101 points of Z, sup <= 2 on 10^4 points")
def test_bounded_extension_on_disc(runs, record_property):
    run = runs[("extend-regular-disc", 1)]
    assert run.status == 0
    (row,) = run.rows
    assert row["status"] == "pass" and float(row["sup_error"]) <= 2
    p = disc_problem()
    x1, x2 = symbols(p.coords)
    res = extend_regular(p, RatMap(p.coords, [x1 + 10 * x2]), x2)
    assert res.exponents == (int(row["N0"]), int(row["N1"]), int(row["N2"]))
    zpts = [(Fraction(k, 50) - 1, Fraction(0)) for k in range(101)]
    assert all(tuple(res.F(x)) == (x[0],) for x in zpts)
    # 114 points per axis of [-1, 1]^2, kept when inside the closed disc
    grid = [
        (Fraction(2 * i, 113) - 1, Fraction(2 * j, 113) - 1)
        for i in range(114)
        for j in range(114)
        if (Fraction(2 * i, 113) - 1) ** 2 + (Fraction(2 * j, 113) - 1) ** 2 <= 1
    ]
    assert len(grid) == 10**4
    sup = max(abs(float(res.F(x)[0])) for x in grid)
    record_property("detail", f"exponents {res.exponents}, sup {sup:.6f}")
    assert sup <= 2


@pytest.mark.criterion(7, "C0 pipeline on the circle: exact at t = 0, sup error <= 1e-2 at some degree <= 20")
def test_c0_pipeline(runs, record_property):
    run = runs[("approx-c0", 1)]
    assert run.status == 0
    sweep = [r for r in run.rows if r["degree"]]
    good = [r for r in sweep if int(r["degree"]) <= 20 and r["status"] == "pass" and float(r["sup_error"]) <= 1e-2]
    assert good
    d = int(good[0]["degree"])
    p = circle_demo_problem()
    res = approximate_c0(p, d, rescale_to_unit_ball(sphere_spray(1), 1))
    assert tuple(res.f_tilde((Fraction(0),))) == (1, 0)
    sup = 0.0
    for k in range(1001):
        t = Fraction(k, 500) - 1
        a, b = (float(c) for c in res.f_tilde((t,)))
        sup = max(sup, math.hypot(a - math.cos(t), b - math.sin(t)))
    record_property("detail", f"degree {d}: sup error {sup:.3e}")
    assert sup <= 1e-2


@pytest.mark.criterion(8, "C-infinity pipeline: C1 error on D2 <= 1e-1 at some degree <= 30, exact at t = 0")
def test_c_infty_pipeline(runs, record_property):
    run = runs[("approx-cinfty", 1)]
    assert run.status == 0
    sweep = [r for r in run.rows if r["degree"]]
    good = [r for r in sweep if int(r["degree"]) <= 30 and r["status"] == "pass" and float(r["c1_error"]) <= 1e-1]
    assert good
    d = int(good[0]["degree"])
    res = approximate_c_infty(circle_demo_problem(), d, rescale_to_unit_ball(sphere_spray(1), 1))
    assert tuple(res.f_tilde((Fraction(0),))) == (1, 0)
    # central differences of f~ against the exact derivative (-sin t, cos t) on D2
    lo = -SMOOTH_SHRINK[2]
    h = Fraction(1, 10**4)
    worst = 0.0
    for k in range(201):
        t = lo + Fraction(k, 100) * SMOOTH_SHRINK[2]
        fp, fm = res.f_tilde((t + h,)), res.f_tilde((t - h,))
        da, db = (float((a - b) / (2 * h)) for a, b in zip(fp, fm))
        worst = max(worst, math.hypot(da + math.sin(t), db - math.cos(t)))
    record_property("detail", f"degree {d}: C1 error {worst:.3e} on 201 points")
    assert worst <= 1e-1


def affine_cubic(p):
    x, y, z = p
    return x * x + y * y - z * (z - 1) * (z - 2)


@pytest.mark.criterion(9, "cubic third point on 100 secant pairs: on surface, symmetric, involutive")
def test_cubic_third_point(runs, record_property):
    run = runs[("cubic-thirdpoint", 1)]
    assert run.status == 0
    assert_all_pass(run, 100, ("on-surface", "symmetry", "involution"))
    S = disconnected_cubic_fixture()
    pairs = secant_pairs(S, 100)
    for y, z in pairs:
        x = cubic_third_point(S, y, z)
        assert affine_cubic(x) == 0
        assert cubic_third_point(S, z, y) == x
        assert cubic_third_point(S, y, x) == tuple(z)
    record_property("detail", f"{len(pairs)} pairs")


@pytest.mark.criterion(10, "every shipped config twice with the same seed gives byte-identical reports")
def test_determinism(runs, record_property):
    names = sorted({name for name, _ in runs})
    for name in names:
        a, b = runs[(name, 1)], runs[(name, 2)]
        assert a.csv == b.csv, name
        assert a.files() == b.files(), name
        assert a.status == b.status
    record_property("detail", f"{len(names)} configs")
