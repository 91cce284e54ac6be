"""Acceptance checks, one group per criterion; a summary line per criterion is
printed at the end of the run (see conftest.py)."""

import math
import time
from fractions import Fraction as F

import mpmath
import numpy as np
import pytest

from conftest import record
from flattorus import bounds, globopt, hexgrid, satgrid
from flattorus.core import (
    LiftedPolygon,
    load_partition,
    polygon_diameter,
    region_diameter,
    save_partition,
    verify_partition,
)

mpmath.mp.dps = 40

# every partition produced below, re-verified by criterion 9
ARTIFACTS = []


def _keep(name, part):
    ARTIFACTS.append((name, part))
    return part


# ---------------------------------------------------------------- criterion 1


def test_c1_exact_values():
    want = {1: mpmath.sqrt(2) / 2, 2: mpmath.sqrt(2) / 2, 3: mpmath.sqrt(13) / 6}
    ok = True
    for m, v in want.items():
        rec = bounds.best_bounds(m)
        good = abs(rec.lower - float(v)) < 1e-12 and abs(rec.upper - float(v)) < 1e-12
        good = good and abs(bounds.exact_value(m) - float(v)) < 1e-12
        record(1, good, f"m={m}: [{rec.lower!r}, {rec.upper!r}] vs {mpmath.nstr(v, 15)}")
        ok &= good
    assert round(bounds.exact_value(3), 6) == 0.600925
    assert ok


# ---------------------------------------------------------------- criterion 2

AREA_BOUND_COLUMN = {
    8: 0.398942, 9: 0.376126, 10: 0.356825, 11: 0.340219, 12: 0.325735, 13: 0.312956,
    14: 0.301572, 15: 0.291346, 16: 0.282095, 17: 0.273672, 18: 0.265962, 19: 0.258868,
    20: 0.252313, 21: 0.246233, 22: 0.240571, 23: 0.235283, 24: 0.230329, 25: 0.225676,
}


def _hp_pigeonhole(m):
    # smallest integer k with k^2 + k - 1 >= m, from the quadratic root
    k = int(mpmath.ceil((-1 + mpmath.sqrt(5 + 4 * m)) / 2))
    return mpmath.mpf(1) / k


def test_c2_closed_forms():
    bad = []
    for m in range(1, 26):
        stripe = min(mpmath.sqrt(mpmath.mpf(1) / 4 + mpmath.mpf(1) / (m * m)), mpmath.sqrt(2) / 2)
        if abs(bounds.stripe_upper(m) - float(stripe)) > 1e-12:
            bad.append(f"stripe m={m}")
        if abs(bounds.pigeonhole_lower(m) - float(_hp_pigeonhole(m))) > 1e-12:
            bad.append(f"pigeonhole m={m}")
        if m >= 6 and abs(bounds.area_lower(m) - float(2 / mpmath.sqrt(mpmath.pi * m))) > 1e-12:
            bad.append(f"area m={m}")
    for m, v in AREA_BOUND_COLUMN.items():
        if round(bounds.area_lower(m), 6) != v or round(bounds.best_bounds(m).lower, 6) != v:
            bad.append(f"table lower m={m}")
    record(2, not bad, ", ".join(bad))
    assert not bad


# ---------------------------------------------------------------- criterion 3

HEX_OPTIMA = {
    7: ("650/2401", "12/49", "4/49"),
    8: ("25/128", "3/16", "-1/16"),
    9: ("130/729", "2/27", "2/9"),
    10: ("221/1250", "9/50", "-3/25"),
    11: ("2210/14641", "-3/121", "12/121"),
    12: ("169/1296", "1/9", "1/6"),
    14: ("1105/9604", "8/49", "2/49"),
    15: ("578/5625", "4/25", "-1/25"),
    16: ("25/256", "3/16", "0"),
}


def test_c3_timing():
    start = time.perf_counter()
    for m, (a, b) in hexgrid.KNOWN_TILINGS.items():
        hexgrid.minimize_hex(hexgrid.solve_hex_system(a, b, m))
    elapsed = time.perf_counter() - start
    record(3, elapsed < 1.0, f"took {elapsed:.2f} s")
    assert elapsed < 1.0


@pytest.mark.parametrize("m", sorted(HEX_OPTIMA))
def test_c3_table_row(m):
    a, b = hexgrid.KNOWN_TILINGS[m]
    opt = hexgrid.minimize_hex(hexgrid.solve_hex_system(a, b, m))
    want = tuple(F(t) for t in HEX_OPTIMA[m])
    got = (opt.f_min, opt.x_star, opt.y_star)
    record(3, got == want, f"m={m}: got {tuple(map(str, got))}, table {HEX_OPTIMA[m]}")
    assert got == want


# ---------------------------------------------------------------- criterion 4


@pytest.mark.parametrize("m", [8, 11, 12, 16])
def test_c4_hex_certified(m):
    a, b = hexgrid.KNOWN_TILINGS[m]
    opt = hexgrid.minimize_hex(hexgrid.solve_hex_system(a, b, m))
    start = time.perf_counter()
    part = _keep(f"hex m={m}", hexgrid.hex_partition(opt))
    rep = verify_partition(part, tau=math.sqrt(opt.f_min))
    exact = all(hexgrid_region_sq(r) == opt.f_min for r in part.regions)
    elapsed = time.perf_counter() - start
    expected = {8: 0.441942, 12: 13 / 36, 16: 5 / 16}.get(m)
    ok = rep.passed and exact and elapsed < 5.0
    if expected is not None:
        ok &= abs(rep.max_diameter - expected) < 5e-7
    record(4, ok, f"m={m}: max diameter {rep.max_diameter:.6f}, passed={rep.passed}, {elapsed:.2f} s")
    assert ok


def hexgrid_region_sq(r):
    from flattorus.core import region_diameter_sq

    return region_diameter_sq(r)


# ---------------------------------------------------------------- criterion 5


def test_c5_lower_bound_constants():
    recs = {r.m: r for r in satgrid.reference_records()}
    want = {4: "0.556799", 5: "0.521178", 6: "0.474667", 7: "0.444444"}
    exact = {4: mpmath.sqrt(12401) / 200, 5: mpmath.sqrt(7850) / 170, 6: mpmath.sqrt(73) / 18, 7: mpmath.mpf(4) / 9}
    bad = []
    for m, text in want.items():
        v = satgrid.unsat_lower_bound(recs[m])
        if f"{v:.6f}" != text or abs(v - float(exact[m])) > 1e-12:
            bad.append(f"m={m}: {v:.6f}")
    record(5, not bad, ", ".join(bad))
    assert not bad


def test_c5_recertify_m7(solver):
    spec = satgrid.GridGraphSpec(9, 16, 7)
    rec = satgrid.solve_spec(spec, solver, timeout=600, symmetry_breaking=True)
    ok = rec is not None and rec.status == "unsat_certified"
    wall = "timeout" if rec is None else f"{rec.wall_time:.1f} s"
    record(5, ok, f"s=9 k=16 m=7: {rec.status if rec else 'no verdict'} ({wall})")
    assert ok
    assert satgrid.unsat_lower_bound(rec) == pytest.approx(4 / 9, abs=1e-15)


def test_c5_small_instances_brute_force():
    start = time.perf_counter()
    n = 0
    for s in range(2, 5):
        for k in range(1, 2 * s * s + 1):
            for m in range(1, 5):
                satgrid.brute_force_colorable(satgrid.GridGraphSpec(s, k, m))
                n += 1
    elapsed = time.perf_counter() - start
    record(5, elapsed < 60, f"{n} brute-force instances in {elapsed:.1f} s")
    assert elapsed < 60


# ---------------------------------------------------------------- criterion 6


def test_c6_solver_matches_brute_force(solver, tmp_path):
    start = time.perf_counter()
    mismatches = []
    n = 0
    for s in range(2, 5):
        for k in range(1, 2 * s * s + 1):
            for m in range(1, 5):
                spec = satgrid.GridGraphSpec(s, k, m)
                rec = satgrid.solve_spec(spec, solver, timeout=60, workdir=tmp_path)
                expect = satgrid.brute_force_colorable(spec)
                got = None if rec is None else rec.status == "sat_with_coloring"
                if got != expect:
                    mismatches.append((s, k, m))
                if rec is not None and got and (s, k) in ((4, 8), (3, 4)):
                    _keep(f"sat s={s} k={k} m={m}", satgrid.coloring_to_partition(rec.coloring))
                n += 1
    elapsed = time.perf_counter() - start
    ok = not mismatches and elapsed < 300
    record(6, ok, f"{n} instances, {len(mismatches)} mismatches, {elapsed:.1f} s")
    assert ok, mismatches


# ---------------------------------------------------------------- criterion 7

OPT_TARGETS = {9: 0.44, 16: 0.33}


@pytest.mark.parametrize("m", sorted(OPT_TARGETS))
def test_c7_global_optimization(m):
    cfg = globopt.OptimizerConfig(restarts=20, iterations=5000, seed=2024)
    start = time.perf_counter()
    res = globopt.optimize_detailed(m, cfg)
    elapsed = time.perf_counter() - start
    part = _keep(f"globopt m={m}", res.partition)
    rep = verify_partition(part)
    monotone = all(np.all(np.diff(r.history) <= 0) for r in res.restarts if r.phi is not None)
    ok = part.tau <= OPT_TARGETS[m] and rep.passed and monotone and elapsed < 1800
    record(7, ok, f"m={m}: tau {part.tau:.6f} (target {OPT_TARGETS[m]}), verified={rep.passed}, "
                  f"monotone={monotone}, {elapsed:.1f} s")
    assert ok


def test_c7_subgradient_finite_differences():
    rng = np.random.default_rng(7)
    checked, worst = 0, 0.0
    h = 1e-7
    while checked < 100:
        m = int(rng.integers(6, 20))
        try:
            mesh = globopt.torus_voronoi(globopt.seed_circle_packing(m, rng, 60))
        except globopt.CellTooLarge:
            continue
        mesh.X = mesh.X + rng.normal(scale=2e-3, size=mesh.X.shape)
        if not mesh.is_valid() or mesh.face_diameters().max() >= 0.5 - 1e-3:
            continue
        lengths = np.sort(np.concatenate([_pair_lengths(mesh, i) for i in range(mesh.m)]))
        if lengths[-1] - lengths[-2] < 1e-4:
            continue  # max attained twice: not differentiable here
        phi, g = globopt.subgradient(mesh)
        D = rng.normal(size=mesh.X.shape)
        plus, minus = mesh.copy(), mesh.copy()
        plus.X = mesh.X + h * D
        minus.X = mesh.X - h * D
        fd = (globopt.objective(plus) - globopt.objective(minus)) / (2 * h)
        worst = max(worst, abs(fd - float((g * D).sum())))
        checked += 1
    record(7, worst < 1e-6, f"subgradient vs finite differences: worst error {worst:.2e} on {checked} meshes")
    assert worst < 1e-6


def _pair_lengths(mesh, i):
    c = mesh.face_coords(i)
    iu = np.triu_indices(len(c), 1)
    d = c[:, None, :] - c[None, :, :]
    return np.sqrt((d ** 2).sum(axis=2))[iu]


# ---------------------------------------------------------------- criterion 8


def _random_star_polygon(rng):
    k = int(rng.integers(3, 10))
    cx, cy = rng.random(2)
    while True:
        ang = np.sort(rng.random(k)) * 2 * np.pi
        # every angular gap below pi keeps the polygon star-shaped, hence simple
        if np.diff(np.append(ang, ang[0] + 2 * np.pi)).max() < np.pi:
            break
    rad = rng.uniform(0.05, 0.45, size=k)
    return LiftedPolygon(tuple(zip(cx + rad * np.cos(ang), cy + rad * np.sin(ang))))


def _sampled_diameter(poly, pitch):
    v = np.array([[float(x), float(y)] for x, y in poly.vertices])
    pts = [v]
    for a, b in zip(v, np.roll(v, -1, axis=0)):
        n = max(2, int(np.ceil(np.linalg.norm(b - a) / (pitch / 4))))
        t = np.linspace(0, 1, n)[:, None]
        pts.append(a + t * (b - a))
    x0, y0 = v.min(axis=0)
    x1, y1 = v.max(axis=0)
    gx, gy = np.meshgrid(np.arange(x0, x1, pitch), np.arange(y0, y1, pitch))
    grid = np.column_stack([gx.ravel(), gy.ravel()])
    inside = np.array([poly.contains((float(x), float(y))) for x, y in grid], dtype=bool)
    pts.append(grid[inside])
    P = np.concatenate(pts)
    best = 0.0
    for chunk in np.array_split(P, max(1, len(P) // 500)):
        d = chunk[:, None, :] - P[None, :, :]
        d -= np.rint(d)
        best = max(best, float(np.sqrt((d ** 2).sum(axis=2)).max()))
    return best


def test_c8_sampling_oracle():
    rng = np.random.default_rng(8)
    pitch = 0.02
    worst_gap, over = 0.0, 0
    start = time.perf_counter()
    for _ in range(100):
        poly = _random_star_polygon(rng)
        exact = polygon_diameter(poly)
        sampled = _sampled_diameter(poly, pitch)
        if sampled > exact + 1e-12:
            over += 1
        worst_gap = max(worst_gap, exact - sampled)
    elapsed = time.perf_counter() - start
    ok = over == 0 and worst_gap <= 2 * pitch and elapsed < 60
    record(8, ok, f"100 polygons: worst gap {worst_gap:.4f} (limit {2 * pitch}), "
                  f"{over} samples above exact, {elapsed:.1f} s")
    assert ok


def test_c8_named_values():
    third = bounds.stripe_partition(3).regions[0]
    a, b = hexgrid.KNOWN_TILINGS[8]
    hexagon = hexgrid.hex_partition(hexgrid.minimize_hex(hexgrid.solve_hex_system(a, b, 8))).regions[0]
    as_polygon = LiftedPolygon(((0, 0), (F(1, 3), 0), (F(1, 3), 1 - F(1, 10**9)), (0, 1 - F(1, 10**9))))
    v1 = region_diameter(third)
    v2 = polygon_diameter(hexagon)
    ok = (abs(v1 - math.sqrt(13) / 6) < 1e-12 and abs(v2 - 5 / (8 * math.sqrt(2))) < 1e-12
          and abs(polygon_diameter(as_polygon) - math.sqrt(13) / 6) < 1e-8)
    record(8, ok, f"third stripe {v1!r}, m=8 hexagon {v2!r}")
    assert ok


# ---------------------------------------------------------------- criterion 9


def test_c9_round_trip(tmp_path):
    # runs last in file order; also covers every m in Table 3 and the stripes
    for m, (a, b) in hexgrid.KNOWN_TILINGS.items():
        if not any(name == f"hex m={m}" for name, _ in ARTIFACTS):
            _keep(f"hex m={m}", hexgrid.hex_partition(hexgrid.minimize_hex(hexgrid.solve_hex_system(a, b, m))))
    for m in (1, 2, 3):
        _keep(f"stripes m={m}", bounds.stripe_partition(m))
    failed = []
    for i, (name, part) in enumerate(ARTIFACTS):
        path = tmp_path / f"artifact{i}.json"
        save_partition(part, path)
        back = load_partition(path)
        if not verify_partition(back).passed:
            failed.append(name)
    ok = not failed and len(ARTIFACTS) > 0
    record(9, ok, f"{len(ARTIFACTS) - len(failed)}/{len(ARTIFACTS)} re-verified; failed: {failed}")
    assert ok
