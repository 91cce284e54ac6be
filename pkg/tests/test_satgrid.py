import itertools
import math
import os

import numpy as np
import pytest

from flattorus import satgrid
from flattorus.core import verify_partition
from flattorus.satgrid import GridGraphSpec


@pytest.fixture(scope="module")
def solver():
    path = satgrid.find_solver()
    if path is None:
        pytest.skip("no SAT solver installed")
    return path


def _edges_oracle(s, k):
    out = []
    for u, v in itertools.combinations(range(s * s), 2):
        dx = abs(u // s - v // s)
        dy = abs(u % s - v % s)
        if min(dx, s - dx) ** 2 + min(dy, s - dy) ** 2 >= k:
            out.append((u, v))
    return out


@pytest.mark.parametrize("s,k", [(2, 1), (3, 2), (4, 8), (5, 5), (7, 13), (9, 16)])
def test_edges_match_definition(s, k):
    got = satgrid.build_grid_graph(GridGraphSpec(s, k, 3))
    assert [tuple(e) for e in got.tolist()] == _edges_oracle(s, k)


def test_spec_validation_and_tau():
    with pytest.raises(ValueError):
        GridGraphSpec(1, 1, 2)
    with pytest.raises(ValueError):
        GridGraphSpec(3, 0, 2)
    assert GridGraphSpec(9, 16, 7).tau == pytest.approx(4 / 9)


def test_cnf_layout():
    spec = GridGraphSpec(2, 1, 2)
    text = satgrid.emit_cnf(spec)
    lines = text.strip().splitlines()
    header = [ln for ln in lines if ln.startswith("p ")]
    assert header == ["p cnf 8 16"]
    clauses = [list(map(int, ln.split())) for ln in lines if ln and ln[0] not in "cp"]
    assert all(c[-1] == 0 for c in clauses)
    assert [1, 2, 0] in clauses  # cell 0 takes some color
    assert satgrid.var_index(3, 1, 2) == 8


def test_symmetry_breaking_adds_units():
    spec = GridGraphSpec(4, 8, 3)
    plain = satgrid.emit_cnf(spec)
    sb = satgrid.emit_cnf(spec, symmetry_breaking=True)
    clique = satgrid.greedy_clique(spec)
    edges = {tuple(e) for e in satgrid.build_grid_graph(spec).tolist()}
    assert all((min(a, b), max(a, b)) in edges for a, b in itertools.combinations(clique, 2))
    assert len(sb.splitlines()) > len(plain.splitlines())


def test_decode_rejects_bad_models():
    spec = GridGraphSpec(2, 1, 4)
    good = [satgrid.var_index(u, u, 4) for u in range(4)]
    c = satgrid.decode_coloring(good, spec)
    assert c.is_proper(spec)
    with pytest.raises(satgrid.IncompleteModel):
        satgrid.decode_coloring(good[:3], spec)
    with pytest.raises(satgrid.ImproperColoring):
        satgrid.decode_coloring([satgrid.var_index(u, 0, 4) for u in range(4)], spec)


def test_coloring_text_round_trip():
    c = satgrid.GridColoring(3, 2, np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]]))
    back = satgrid.GridColoring.from_text(c.to_text())
    assert np.array_equal(back.colors, c.colors) and back.m == 2


def test_coloring_partition_verifies():
    # 2x2 checker on a 4-grid: color = (x // 2, y // 2)
    colors = np.array([[(x // 2) * 2 + y // 2 for y in range(4)] for x in range(4)])
    c = satgrid.GridColoring(4, 4, colors)
    p = satgrid.coloring_to_partition(c)
    assert p.m == 4 and p.tau == pytest.approx(math.sqrt(2) / 2)
    assert verify_partition(p, n=64).passed


def test_unsat_bound_forms():
    rec = satgrid.SatBoundRecord(7, 9, 16, "unsat_certified")
    assert satgrid.unsat_lower_bound(rec) == pytest.approx(4 / 9)
    assert satgrid.unsat_lower_bound(rec, conservative=True) == pytest.approx(4 / 9 - math.sqrt(2) / 9)
    with pytest.raises(satgrid.StateError):
        satgrid.unsat_lower_bound(satgrid.SatBoundRecord(7, 9, 16, "sat_with_coloring"))


def test_brute_force_known_cases():
    assert satgrid.brute_force_colorable(GridGraphSpec(2, 1, 4))
    assert not satgrid.brute_force_colorable(GridGraphSpec(2, 1, 3))
    assert satgrid.brute_force_colorable(GridGraphSpec(3, 100, 1))
    with pytest.raises(satgrid.ResourceLimit):
        satgrid.brute_force_colorable(GridGraphSpec(5, 5, 3))


def test_parse_solver_output():
    status, model = satgrid.parse_solver_output("c hi\ns SATISFIABLE\nv 1 -2 3\nv -4 0\n")
    assert status == "SAT" and model == [1, -2, 3, -4]
    assert satgrid.parse_solver_output("s UNSATISFIABLE\n")[0] == "UNSAT"
    assert satgrid.parse_solver_output("")[0] == "UNKNOWN"


def test_find_solver_env(monkeypatch):
    monkeypatch.setenv(satgrid.SOLVER_ENV, "/nonexistent/solver")
    with pytest.raises(satgrid.SolverError):
        satgrid.find_solver()


def test_results_csv_round_trip(tmp_path):
    path = tmp_path / "r.csv"
    satgrid.append_result(path, satgrid.SatBoundRecord(6, 18, 73, "unsat_certified", wall_time=1.5))
    satgrid.append_result(path, satgrid.SatBoundRecord(4, 2, 1, "sat_with_coloring"))
    recs = satgrid.load_results(path)
    assert [(r.m, r.s, r.k, r.status) for r in recs] == [(6, 18, 73, "unsat_certified"), (4, 2, 1, "sat_with_coloring")]
    assert recs[0].wall_time == 1.5 and recs[1].wall_time is None
    assert {r.m for r in satgrid.reference_records()} == {4, 5, 6, 7}


@pytest.mark.parametrize("s,k,m", [(3, 4, 2), (3, 4, 3), (4, 8, 3), (4, 5, 4), (4, 4, 4), (4, 2, 4)])
def test_symmetry_breaking_keeps_verdict(solver, s, k, m):
    spec = GridGraphSpec(s, k, m)
    expect = satgrid.brute_force_colorable(spec)
    for sb in (False, True):
        rec = satgrid.solve_spec(spec, solver, timeout=60, symmetry_breaking=sb)
        assert (rec.status == "sat_with_coloring") == expect
        if expect:
            assert rec.coloring.is_proper(spec)


def test_solver_keeps_cnf_on_request(solver, tmp_path):
    satgrid.solve_spec(GridGraphSpec(2, 1, 4), solver, workdir=tmp_path, keep_cnf=True)
    assert any(name.endswith(".cnf") for name in os.listdir(tmp_path))
