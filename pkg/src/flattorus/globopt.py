"""Minimize the largest part diameter of a polygonal torus partition.

A partition is a torus mesh: shared vertices ``X`` (canonical coordinates)
and faces given as cycles of (vertex, integer shift) corners, so a face's
local lift is ``X[v] + shift``.  With every face diameter below 1/2 the
diameter of a face is the largest distance between two of its corners, and
the objective is the max of that over faces.  Descent moves the vertices
with adaptive-moment steps on a subgradient and never accepts a step that
raises the objective or breaks a face.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import Voronoi

from . import kernels
from .core import LiftedPolygon, Partition, TorusPoint

log = logging.getLogger(__name__)

Corner = Tuple[int, Tuple[int, int]]


class CellTooLarge(ValueError):
    pass


class LiftViolation(ValueError):
    pass


class StuckStep(RuntimeError):
    pass


class AllRestartsFailed(RuntimeError):
    pass


class MeshError(ValueError):
    pass


@dataclass
class OptimizerConfig:
    restarts: int = 20
    iterations: int = 5000
    step_size: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    softmax_temperature: float = 0.0
    tie_tol: float = 1e-12
    min_step: float = 1e-15
    packing_iterations: int = 200
    max_reseeds: int = 20

    def __post_init__(self):
        if self.restarts < 1 or self.iterations < 0:
            raise ValueError("restarts must be positive and iterations non-negative")
        if self.step_size <= 0 or self.eps <= 0 or self.softmax_temperature < 0:
            raise ValueError("step size and epsilon must be positive, temperature non-negative")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ValueError("moment decay parameters must lie in (0, 1)")


# ---------------------------------------------------------------------------
# mesh
# ---------------------------------------------------------------------------


class MeshPartition:
    """Torus partition with shared vertices; see the module docstring."""

    def __init__(self, X, faces: Sequence[Sequence[Corner]]):
        self.X = np.array(X, dtype=np.float64).reshape(-1, 2)
        self.faces = [[(int(v), (int(s[0]), int(s[1]))) for v, s in f] for f in faces]
        self._topo = None
        self._check_combinatorics()

    @property
    def m(self) -> int:
        return len(self.faces)

    @property
    def r(self) -> int:
        return len(self.X)

    def copy(self) -> "MeshPartition":
        new = MeshPartition.__new__(MeshPartition)
        new.X = self.X.copy()
        new.faces = self.faces
        new._topo = self._topo
        return new

    def edge_keys(self):
        keys = []
        for f in self.faces:
            k = len(f)
            for i in range(k):
                (va, sa), (vb, sb) = f[i], f[(i + 1) % k]
                d = (sb[0] - sa[0], sb[1] - sa[1])
                fwd = (va, vb, d)
                back = (vb, va, (-d[0], -d[1]))
                keys.append(min(fwd, back))
        return keys

    def _check_combinatorics(self):
        if any(len(f) < 3 for f in self.faces):
            raise MeshError("every face needs at least 3 corners")
        counts = {}
        for key in self.edge_keys():
            counts[key] = counts.get(key, 0) + 1
        if any(c != 2 for c in counts.values()):
            raise MeshError("every edge must be shared by exactly two faces")
        used = {v for f in self.faces for v, _ in f}
        if used != set(range(self.r)):
            raise MeshError("vertex list and face corners disagree")
        if self.r - len(counts) + self.m != 0:
            raise MeshError(f"Euler characteristic {self.r - len(counts) + self.m} != 0")

    def topology(self):
        """Index arrays consumed by :mod:`flattorus.kernels`."""
        if self._topo is not None:
            return self._topo
        cv, cs, pa, pb, ea, eb, ef, qa, qb = ([] for _ in range(9))
        base = 0
        for fi, f in enumerate(self.faces):
            k = len(f)
            for v, s in f:
                cv.append(v)
                cs.append(s)
            for i in range(k):
                for j in range(i + 1, k):
                    pa.append(base + i)
                    pb.append(base + j)
            e0 = len(ea)
            for i in range(k):
                ea.append(base + i)
                eb.append(base + (i + 1) % k)
                ef.append(fi)
            for i in range(k):
                for j in range(i + 2, k):
                    if i == 0 and j == k - 1:
                        continue
                    qa.append(e0 + i)
                    qb.append(e0 + j)
            base += k
        as_int = lambda a: np.asarray(a, dtype=np.int64)  # noqa: E731
        self._topo = (
            as_int(cv), np.asarray(cs, dtype=np.float64).reshape(-1, 2), as_int(pa), as_int(pb),
            as_int(ea), as_int(eb), as_int(ef), as_int(qa), as_int(qb), len(self.faces),
        )
        return self._topo

    def face_coords(self, i: int) -> np.ndarray:
        return np.array([self.X[v] + s for v, s in self.faces[i]])

    def face_diameters(self) -> np.ndarray:
        out = np.empty(self.m)
        for i in range(self.m):
            c = self.face_coords(i)
            d = c[:, None, :] - c[None, :, :]
            out[i] = np.sqrt((d**2).sum(axis=2)).max()
        return out

    def is_valid(self) -> bool:
        return kernels.faces_valid(self.X, self.topology())

    def to_partition(self, tau: Optional[float] = None, provenance: str = "") -> Partition:
        regions = [LiftedPolygon(tuple(map(tuple, self.face_coords(i).tolist()))) for i in range(self.m)]
        if tau is None:
            tau = objective(self)
        return Partition(self.m, regions, float(tau), provenance)


def _dedupe_vertices(points: np.ndarray, tol: float = 1e-7):
    """Map lifted points to shared canonical vertices plus integer shifts."""
    canon: List[np.ndarray] = []
    index, shifts = [], []
    for p in points:
        c = p % 1.0
        hit = -1
        for i, q in enumerate(canon):
            d = np.abs(c - q)
            d = np.minimum(d, 1.0 - d)
            if d.max() < tol:
                hit = i
                break
        if hit < 0:
            hit = len(canon)
            canon.append(c)
        index.append(hit)
        shifts.append(tuple(int(v) for v in np.rint(p - canon[hit])))
    return np.array(canon), index, shifts


def _faces_from_lifts(lifts: Sequence[np.ndarray]) -> MeshPartition:
    allpts = np.concatenate(lifts)
    X, index, shifts = _dedupe_vertices(allpts)
    faces, pos = [], 0
    for poly in lifts:
        face: List[Corner] = []
        for _ in range(len(poly)):
            corner = (index[pos], shifts[pos])
            pos += 1
            if not face or face[-1] != corner:
                face.append(corner)
        if len(face) > 1 and face[0] == face[-1]:
            face.pop()
        faces.append(face)
    # snap stored lifts onto the shared vertex coordinates
    return MeshPartition(X, faces)


def torus_voronoi(centers, max_diameter: Optional[float] = 0.5) -> MeshPartition:
    """Voronoi cells of torus points, built from the 3x3 block of translates.

    Raises :class:`CellTooLarge` when some cell's diameter reaches
    ``max_diameter`` (pass ``None`` to skip the check).
    """
    c = np.array([[float(p[0]) % 1.0, float(p[1]) % 1.0] for p in centers])
    m = len(c)
    if m < 2:
        raise ValueError("need at least two centers")
    offsets = [(0, 0)] + [(dx, dy) for dx in (-1, 0, 1) for dy in (-1, 0, 1) if (dx, dy) != (0, 0)]
    pts = np.concatenate([c + np.array(o, dtype=float) for o in offsets])
    vor = Voronoi(pts)
    lifts = []
    for i in range(m):
        region = vor.regions[vor.point_region[i]]
        if -1 in region or not region:
            raise CellTooLarge(f"cell {i} is unbounded in the 3x3 replication")
        poly = vor.vertices[region]
        ang = np.arctan2(poly[:, 1] - c[i, 1], poly[:, 0] - c[i, 0])
        poly = poly[np.argsort(ang)]
        lifts.append(poly)
    mesh = _faces_from_lifts(lifts)
    if max_diameter is not None:
        diam = mesh.face_diameters()
        if diam.max() >= max_diameter:
            raise CellTooLarge(f"cell {int(diam.argmax())} has diameter {diam.max():.6f} >= {max_diameter}")
    return mesh


def mesh_from_partition(p: Partition) -> MeshPartition:
    """Rebuild shared-vertex structure from a partition of lifted polygons."""
    lifts = []
    for r in p.regions:
        if not isinstance(r, LiftedPolygon):
            raise MeshError("only polygon partitions can be meshed")
        lifts.append(np.array([[float(x), float(y)] for x, y in r.vertices]))
    return _faces_from_lifts(lifts)


# ---------------------------------------------------------------------------
# seeding
# ---------------------------------------------------------------------------


def _min_image(d):
    return d - np.rint(d)


def seed_circle_packing(m: int, seed=None, iterations: int = 200) -> List[TorusPoint]:
    """m well-separated torus points: random start, then nearest-neighbor repulsion.

    Each iteration moves every point directly away from its nearest
    neighbor; the step shrinks linearly to zero, which amounts to decaying
    ascent on the minimum pairwise distance.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    pts = rng.random((m, 2))
    if m < 2:
        return [TorusPoint(*p) for p in pts]
    step0 = 0.5 / math.sqrt(m)
    for it in range(iterations):
        step = step0 * (1.0 - it / iterations)
        d = _min_image(pts[:, None, :] - pts[None, :, :])
        dist = np.sqrt((d**2).sum(axis=2))
        np.fill_diagonal(dist, np.inf)
        nn = dist.argmin(axis=1)
        gap = dist[np.arange(m), nn]
        # push apart until the pair reaches the lattice-like spacing, no further
        push = np.minimum(step, np.maximum(0.0, 1.2 / math.sqrt(m) - gap) / 2 + step / 4)
        direction = d[np.arange(m), nn] / np.maximum(gap, 1e-12)[:, None]
        pts = (pts + push[:, None] * direction) % 1.0
    return [TorusPoint(*p) for p in pts]


def min_pairwise_distance(points) -> float:
    pts = np.array([[float(p[0]), float(p[1])] for p in points])
    d = _min_image(pts[:, None, :] - pts[None, :, :])
    dist = np.sqrt((d**2).sum(axis=2))
    np.fill_diagonal(dist, np.inf)
    return float(dist.min())


# ---------------------------------------------------------------------------
# objective and descent
# ---------------------------------------------------------------------------


def objective(mp: MeshPartition) -> float:
    phi, _ = kernels.phi_and_subgradient(mp.X, mp.topology())
    if phi >= 0.5:
        raise LiftViolation(f"a face has diameter {phi:.6f} >= 1/2; corner pairs no longer give the diameter")
    return phi


def subgradient(mp: MeshPartition, temperature: float = 0.0, tie_tol: float = 1e-12):
    """(phi, g) with g of shape (r, 2): averaged over attaining pairs, or softmax-weighted."""
    return kernels.phi_and_subgradient(mp.X, mp.topology(), temperature, tie_tol)


@dataclass
class DescentState:
    m1: np.ndarray
    m2: np.ndarray
    t: float = 0.0
    scale: float = 1.0

    @classmethod
    def fresh(cls, mp: MeshPartition) -> "DescentState":
        return cls(np.zeros_like(mp.X), np.zeros_like(mp.X))


def _run(mp: MeshPartition, config: OptimizerConfig, state: DescentState, iterations: int):
    packed = np.array([state.t, state.scale])
    phi, history, status = kernels.descent(
        mp.X, mp.topology(), iterations, config.step_size, config.beta1, config.beta2,
        config.eps, config.softmax_temperature, config.tie_tol, config.min_step,
        state.m1, state.m2, packed,
    )
    state.t, state.scale = float(packed[0]), float(packed[1])
    return phi, history, status


def descent_step(mp: MeshPartition, config: OptimizerConfig, state: Optional[DescentState] = None):
    """One accepted adaptive-moment step; returns a new mesh and the updated state.

    Raises :class:`StuckStep` when halving the step falls below
    ``config.min_step`` without finding an acceptable move.
    """
    objective(mp)
    new = mp.copy()
    state = DescentState.fresh(mp) if state is None else replace(state, m1=state.m1.copy(), m2=state.m2.copy())
    _, _, status = _run(new, config, state, 1)
    if status:
        raise StuckStep("step size underflow: no acceptable move along the current direction")
    return new, state


def run_descent(mp: MeshPartition, config: OptimizerConfig, iterations: Optional[int] = None):
    """Descend from ``mp`` (not modified); stops early when the step underflows.

    Returns ``(mesh, history)`` with the objective after each accepted step.
    """
    objective(mp)
    new = mp.copy()
    state = DescentState.fresh(mp)
    n = config.iterations if iterations is None else iterations
    _, history, _ = _run(new, config, state, n)
    return new, history


@dataclass
class RestartResult:
    restart: int
    phi: Optional[float]
    initial_phi: Optional[float] = None
    history: np.ndarray = field(default_factory=lambda: np.empty(0))
    mesh: Optional[MeshPartition] = None
    error: str = ""


@dataclass
class OptimizeResult:
    partition: Partition
    best: RestartResult
    restarts: List[RestartResult]


def _restart(m: int, config: OptimizerConfig, r: int, init_centers=None) -> RestartResult:
    rng = np.random.default_rng([config.seed, r])
    mesh = None
    last_error = ""
    for _ in range(config.max_reseeds):
        centers = init_centers if init_centers is not None else seed_circle_packing(
            m, rng, config.packing_iterations)
        try:
            mesh = torus_voronoi(centers)
            break
        except (CellTooLarge, MeshError) as exc:
            last_error = str(exc)
            if init_centers is not None:
                break
    if mesh is None:
        return RestartResult(r, None, error=last_error or "no valid start")
    start = objective(mesh)
    final, history = run_descent(mesh, config)
    return RestartResult(r, objective(final), start, history, final)


def optimize_detailed(m: int, config: Optional[OptimizerConfig] = None, init_centers=None) -> OptimizeResult:
    config = config or OptimizerConfig()
    if m < 5:
        raise ValueError("descent is only meaningful for m >= 5 (cell diameters below 1/2)")
    # for m <= 7 the known bounds leave little or no room below 1/2; expect AllRestartsFailed
    results = []
    for r in range(config.restarts):
        res = _restart(m, config, r, init_centers)
        if res.phi is None:
            log.info("restart %d aborted: %s", r, res.error)
        else:
            log.info("restart %d: %.6f -> %.6f", r, res.initial_phi, res.phi)
        results.append(res)
    ok = [res for res in results if res.phi is not None]
    if not ok:
        raise AllRestartsFailed(f"all {config.restarts} restarts aborted")
    best = min(ok, key=lambda res: (res.phi, res.restart))
    part = best.mesh.to_partition(best.phi, provenance=f"globopt m={m} seed={config.seed} restart={best.restart}")
    return OptimizeResult(part, best, results)


def optimize(m: int, config: Optional[OptimizerConfig] = None, init_centers=None) -> Partition:
    """Best partition over ``config.restarts`` seeded restarts."""
    return optimize_detailed(m, config, init_centers).partition


def grid_centers(k: int) -> List[TorusPoint]:
    """Centers of the k x k square grid, offset by half a cell."""
    return [TorusPoint((i + 0.5) / k, (j + 0.5) / k) for i in range(k) for j in range(k)]
