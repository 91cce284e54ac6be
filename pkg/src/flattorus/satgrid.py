"""Grid graphs on the torus, their coloring CNFs, and SAT-solver plumbing.

Cells of the ``s x s`` grid are numbered ``u = x * s + y``.  Two cells are
joined when their toroidal squared distance in grid units is at least ``k``,
so every threshold is an exact integer.  The Boolean variable "cell u has
color c" is DIMACS variable ``u * m + c + 1``.
"""

from __future__ import annotations

import csv
import math
import os
import shutil
import subprocess
import tempfile
import time
from dataclasses import dataclass
from importlib import resources
from typing import Iterable, List, Optional, Sequence

import numpy as np

from . import kernels
from .core import Partition, PixelSet, region_diameter

SOLVER_ENV = "FLATTORUS_SAT_SOLVER"
KNOWN_SOLVERS = ("kissat", "cadical", "minisat", "glucose")


class ImproperColoring(ValueError):
    pass


class IncompleteModel(ValueError):
    pass


class StateError(RuntimeError):
    pass


class ResourceLimit(RuntimeError):
    pass


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class GridGraphSpec:
    s: int
    k: int
    m: int

    def __post_init__(self):
        if self.s < 2 or self.k < 1 or self.m < 1:
            raise ValueError(f"need s >= 2, k >= 1, m >= 1; got {self}")

    @property
    def tau(self) -> float:
        return math.sqrt(self.k) / self.s

    @property
    def n_vertices(self) -> int:
        return self.s * self.s

    def far(self, u: int, v: int) -> bool:
        s = self.s
        dx = abs(u // s - v // s)
        dy = abs(u % s - v % s)
        dx = min(dx, s - dx)
        dy = min(dy, s - dy)
        return dx * dx + dy * dy >= self.k


def build_grid_graph(spec: GridGraphSpec) -> np.ndarray:
    """Edge array of shape (E, 2), rows ``(u, v)`` with ``u < v`` in lexicographic order."""
    return kernels.grid_edges(spec.s, spec.k)


def var_index(u: int, c: int, m: int) -> int:
    return u * m + c + 1


def greedy_clique(spec: GridGraphSpec, edges: Optional[np.ndarray] = None) -> List[int]:
    """Largest clique found by greedy growth from every start vertex."""
    if edges is None:
        edges = build_grid_graph(spec)
    n = spec.n_vertices
    adj = np.zeros((n, n), dtype=bool)
    adj[edges[:, 0], edges[:, 1]] = True
    adj[edges[:, 1], edges[:, 0]] = True
    best: List[int] = [0]
    for start in range(n):
        clique = [start]
        cand = adj[start].copy()
        while cand.any():
            # pick the candidate keeping the most candidates alive
            idx = np.flatnonzero(cand)
            scores = (adj[idx] & cand).sum(axis=1)
            v = int(idx[np.argmax(scores)])
            clique.append(v)
            cand &= adj[v]
        if len(clique) > len(best):
            best = sorted(clique)
    return best


def emit_cnf(
    spec: GridGraphSpec,
    edges: Optional[np.ndarray] = None,
    symmetry_breaking: bool = False,
) -> str:
    """DIMACS text for "the grid graph is properly m-colorable".

    With ``symmetry_breaking`` the i-th vertex of a clique is pinned to color
    i by unit clauses (first ``m`` clique vertices only).  Colors are
    interchangeable, so the formula stays equisatisfiable while the solver
    no longer explores permuted copies of the same coloring.
    """
    if edges is None:
        edges = build_grid_graph(spec)
    m, n = spec.m, spec.n_vertices
    pinned = greedy_clique(spec, edges)[:m] if symmetry_breaking and len(edges) else []
    n_clauses = len(edges) * m + n + len(pinned)
    out = [f"c torus grid coloring s={spec.s} k={spec.k} m={m}", f"p cnf {m * n} {n_clauses}"]
    base = edges * m + 1  # variable of color 0 for each endpoint
    for c in range(m):
        pairs = base + c
        out.extend(f"-{a} -{b} 0" for a, b in pairs.tolist())
    for u in range(n):
        out.append(" ".join(str(var_index(u, c, m)) for c in range(m)) + " 0")
    out.extend(f"{var_index(u, c, m)} 0" for c, u in enumerate(pinned))
    return "\n".join(out) + "\n"


def write_cnf(spec: GridGraphSpec, path, symmetry_breaking: bool = False) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(emit_cnf(spec, symmetry_breaking=symmetry_breaking))


# ---------------------------------------------------------------------------
# colorings
# ---------------------------------------------------------------------------


@dataclass
class GridColoring:
    s: int
    m: int
    colors: np.ndarray  # shape (s, s), colors[x, y]

    def conflicts(self, spec: GridGraphSpec) -> np.ndarray:
        edges = build_grid_graph(spec)
        flat = self.colors.reshape(-1)
        return edges[flat[edges[:, 0]] == flat[edges[:, 1]]]

    def is_proper(self, spec: GridGraphSpec) -> bool:
        return len(self.conflicts(spec)) == 0

    def to_text(self) -> str:
        return "\n".join(" ".join(str(int(c)) for c in row) for row in self.colors) + "\n"

    @classmethod
    def from_text(cls, text: str, m: Optional[int] = None) -> "GridColoring":
        rows = [[int(t) for t in line.split()] for line in text.splitlines() if line.strip()]
        colors = np.array(rows, dtype=np.int64)
        if colors.ndim != 2 or colors.shape[0] != colors.shape[1]:
            raise ValueError("coloring must be s lines of s integers")
        if m is None:
            m = int(colors.max()) + 1
        return cls(colors.shape[0], m, colors)


def decode_coloring(model: Iterable[int], spec: GridGraphSpec) -> GridColoring:
    """Read colors off a solver model; the lowest true color wins."""
    m, n = spec.m, spec.n_vertices
    truth = np.zeros(n * m + 1, dtype=bool)
    for lit in model:
        lit = int(lit)
        if 0 < lit <= n * m:
            truth[lit] = True
    table = truth[1:].reshape(n, m)
    has = table.any(axis=1)
    if not has.all():
        u = int(np.flatnonzero(~has)[0])
        raise IncompleteModel(f"cell {u} has no color in the model")
    colors = table.argmax(axis=1).reshape(spec.s, spec.s)
    coloring = GridColoring(spec.s, m, colors)
    bad = coloring.conflicts(spec)
    if len(bad):
        u, v = bad[0]
        raise ImproperColoring(f"cells {u} and {v} are adjacent but share color {colors.reshape(-1)[u]}")
    return coloring


def coloring_to_partition(c: GridColoring) -> Partition:
    """One pixel region per color that actually occurs; tau is the true max diameter."""
    regions = []
    for color in range(c.m):
        xs, ys = np.nonzero(c.colors == color)
        if len(xs):
            regions.append(PixelSet(c.s, tuple(zip(xs.tolist(), ys.tolist()))))
    tau = max(region_diameter(r) for r in regions)
    return Partition(len(regions), regions, tau, provenance=f"sat coloring s={c.s} m={c.m}")


# ---------------------------------------------------------------------------
# bounds from solver verdicts
# ---------------------------------------------------------------------------


@dataclass
class SatBoundRecord:
    m: int
    s: int
    k: int
    status: str  # "unsat_certified" | "sat_with_coloring"
    coloring: Optional[GridColoring] = None
    partition_tau: Optional[float] = None
    wall_time: Optional[float] = None

    def __post_init__(self):
        if self.status not in ("unsat_certified", "sat_with_coloring"):
            raise ValueError(f"unknown status {self.status!r}")

    @property
    def tau(self) -> float:
        return math.sqrt(self.k) / self.s

    @property
    def spec(self) -> GridGraphSpec:
        return GridGraphSpec(self.s, self.k, self.m)


def unsat_lower_bound(record: SatBoundRecord, conservative: bool = False) -> float:
    """Lower bound on d_m from a non-colorable grid graph.

    The default is sqrt(k)/s.  ``conservative=True`` subtracts sqrt(2)/s as
    well, the weaker form of the statement.
    """
    if record.status != "unsat_certified":
        raise StateError(f"record for m={record.m}, s={record.s}, k={record.k} is not UNSAT")
    if conservative:
        return record.tau - math.sqrt(2.0) / record.s
    return record.tau


def brute_force_colorable(spec: GridGraphSpec) -> bool:
    if spec.s > 4 or spec.m > 6:
        raise ResourceLimit("exhaustive search is limited to s <= 4 and m <= 6")
    n = spec.n_vertices
    adj = np.zeros((n, n), dtype=bool)
    edges = build_grid_graph(spec)
    adj[edges[:, 0], edges[:, 1]] = True
    adj[edges[:, 1], edges[:, 0]] = True
    return kernels.colorable(adj, spec.m)


# ---------------------------------------------------------------------------
# external solver
# ---------------------------------------------------------------------------


@dataclass
class SolverResult:
    status: str  # "SAT" | "UNSAT" | "UNKNOWN"
    model: List[int]
    wall_time: float
    returncode: int


def find_solver(path: Optional[str] = None) -> Optional[str]:
    """Explicit path, then $FLATTORUS_SAT_SOLVER, then a known solver on PATH."""
    for cand in (path, os.environ.get(SOLVER_ENV)):
        if cand:
            found = shutil.which(cand)
            if found:
                return found
            raise SolverError(f"SAT solver {cand!r} not found or not executable")
    for name in KNOWN_SOLVERS:
        found = shutil.which(name)
        if found:
            return found
    return None


def parse_solver_output(text: str):
    status = "UNKNOWN"
    model: List[int] = []
    for line in text.splitlines():
        if line.startswith("s "):
            word = line[2:].strip().upper()
            if word in ("SATISFIABLE", "UNSATISFIABLE"):
                status = "SAT" if word == "SATISFIABLE" else "UNSAT"
        elif line.startswith("v "):
            model.extend(int(t) for t in line[2:].split() if t != "0")
    return status, model


def run_solver(
    cnf_path,
    solver: str,
    timeout: Optional[float] = None,
    proof_path=None,
    extra_args: Sequence[str] = (),
) -> SolverResult:
    """Run a DIMACS solver as a subprocess and parse competition-style output.

    A DRAT proof path, when given, is passed as the positional argument after
    the formula (kissat/cadical convention); the proof is not checked here.
    """
    argv = [solver, *extra_args, str(cnf_path)]
    if proof_path is not None:
        argv.append(str(proof_path))
    start = time.perf_counter()
    try:
        proc = subprocess.run(argv, capture_output=True, text=True, timeout=timeout)
    except subprocess.TimeoutExpired:
        return SolverResult("UNKNOWN", [], time.perf_counter() - start, -1)
    elapsed = time.perf_counter() - start
    status, model = parse_solver_output(proc.stdout)
    expected = {"SAT": 10, "UNSAT": 20}.get(status)
    if status != "UNKNOWN" and proc.returncode != expected:
        raise SolverError(f"solver said {status} but exited with {proc.returncode}")
    return SolverResult(status, model, elapsed, proc.returncode)


def solve_spec(
    spec: GridGraphSpec,
    solver: str,
    timeout: Optional[float] = None,
    workdir=None,
    keep_cnf: bool = False,
    symmetry_breaking: bool = False,
) -> Optional[SatBoundRecord]:
    """Emit, solve and interpret one instance; None when the solver gave no verdict."""
    fd, path = tempfile.mkstemp(suffix=".cnf", dir=workdir)
    os.close(fd)
    try:
        write_cnf(spec, path, symmetry_breaking=symmetry_breaking)
        res = run_solver(path, solver, timeout=timeout)
    finally:
        if not keep_cnf:
            os.unlink(path)
    if res.status == "UNSAT":
        return SatBoundRecord(spec.m, spec.s, spec.k, "unsat_certified", wall_time=res.wall_time)
    if res.status == "SAT":
        coloring = decode_coloring(res.model, spec)
        part = coloring_to_partition(coloring)
        return SatBoundRecord(spec.m, spec.s, spec.k, "sat_with_coloring", coloring=coloring,
                              partition_tau=part.tau, wall_time=res.wall_time)
    return None


# ---------------------------------------------------------------------------
# results store
# ---------------------------------------------------------------------------

RESULT_FIELDS = ["m", "s", "k", "status", "wall_time_seconds"]


def append_result(path, record: SatBoundRecord) -> None:
    new = not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        if new:
            w.writerow(RESULT_FIELDS)
        wall = "" if record.wall_time is None else f"{record.wall_time:.3f}"
        w.writerow([record.m, record.s, record.k, record.status, wall])


def read_results(fh) -> List[SatBoundRecord]:
    out = []
    for row in csv.DictReader(fh):
        wall = row.get("wall_time_seconds") or ""
        out.append(SatBoundRecord(int(row["m"]), int(row["s"]), int(row["k"]), row["status"],
                                  wall_time=float(wall) if wall else None))
    return out


def load_results(path) -> List[SatBoundRecord]:
    with open(path, newline="", encoding="utf-8") as fh:
        return read_results(fh)


def reference_records() -> List[SatBoundRecord]:
    """Published non-colorability results shipped with the package."""
    with resources.files("flattorus").joinpath("data/unsat_grids.csv").open(encoding="utf-8") as fh:
        return read_results(fh)
