"""Flat-torus metric, region types, exact diameters and partition checks.

Coordinates may be ``float`` or :class:`fractions.Fraction`.  Every routine
here is written against the generic number protocol, so rational inputs give
exact squared diameters and areas; square roots appear only in the
``*_diameter`` wrappers.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from decimal import Decimal, localcontext
from fractions import Fraction
from numbers import Rational
from typing import List, Tuple, Union

import numpy as np

from . import kernels

HALF_DIAGONAL = math.sqrt(2.0) / 2.0


class InvalidPolygon(ValueError):
    pass


class InvalidRegion(ValueError):
    pass


def _exact(v):
    if isinstance(v, Rational) and not isinstance(v, Fraction):
        return Fraction(v)
    if isinstance(v, np.floating):
        return float(v)
    return v


def _min_image(d):
    d = abs(d) % 1
    return min(d, 1 - d)


@dataclass(frozen=True)
class TorusPoint:
    x: float
    y: float

    def __post_init__(self):
        object.__setattr__(self, "x", _exact(self.x) % 1)
        object.__setattr__(self, "y", _exact(self.y) % 1)

    def __iter__(self):
        yield self.x
        yield self.y

    def __getitem__(self, i):
        return (self.x, self.y)[i]

    def __len__(self):
        return 2


def torus_dist_sq(u, v):
    """Squared torus distance; exact for rational coordinates."""
    dx = _min_image(u[0] - v[0])
    dy = _min_image(u[1] - v[1])
    return dx * dx + dy * dy


def torus_dist(u, v) -> float:
    """Distance on the flat torus R^2 / Z^2 between two points."""
    return math.sqrt(torus_dist_sq(u, v))


# ---------------------------------------------------------------------------
# regions
# ---------------------------------------------------------------------------


def _signed_area2(vertices):
    total = 0
    k = len(vertices)
    for i in range(k):
        x1, y1 = vertices[i]
        x2, y2 = vertices[(i + 1) % k]
        total += x1 * y2 - x2 * y1
    return total


def _orient(a, b, c):
    v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    return (v > 0) - (v < 0)


def _on_segment(a, b, c):
    return min(a[0], b[0]) <= c[0] <= max(a[0], b[0]) and min(a[1], b[1]) <= c[1] <= max(a[1], b[1])


def segments_intersect(a, b, c, d) -> bool:
    """Closed segments ab and cd share at least one point."""
    o1, o2 = _orient(a, b, c), _orient(a, b, d)
    o3, o4 = _orient(c, d, a), _orient(c, d, b)
    if o1 * o2 < 0 and o3 * o4 < 0:
        return True
    return (
        (o1 == 0 and _on_segment(a, b, c))
        or (o2 == 0 and _on_segment(a, b, d))
        or (o3 == 0 and _on_segment(c, d, a))
        or (o4 == 0 and _on_segment(c, d, b))
    )


def is_simple(vertices) -> bool:
    k = len(vertices)
    for i in range(k):
        a, b = vertices[i], vertices[(i + 1) % k]
        if a == b:
            return False
        for j in range(i + 2, k):
            if i == 0 and j == k - 1:
                continue
            if segments_intersect(a, b, vertices[j], vertices[(j + 1) % k]):
                return False
    return True


@dataclass(frozen=True)
class LiftedPolygon:
    """Polygon in plane coordinates whose image mod 1 is a torus region.

    Vertices are counterclockwise; consecutive vertices differ by less than 1
    in each coordinate.
    """

    vertices: Tuple[Tuple[float, float], ...]

    def __post_init__(self):
        verts = tuple((_exact(x), _exact(y)) for x, y in self.vertices)
        object.__setattr__(self, "vertices", verts)
        if len(verts) < 3:
            raise InvalidPolygon("a polygon needs at least 3 vertices")
        for i in range(len(verts)):
            (x1, y1), (x2, y2) = verts[i], verts[(i + 1) % len(verts)]
            if abs(x2 - x1) >= 1 or abs(y2 - y1) >= 1:
                raise InvalidPolygon(f"edge {i} jumps by a full period or more")
        if _signed_area2(verts) <= 0:
            raise InvalidPolygon("vertices must be in counterclockwise order with positive area")
        if not is_simple(verts):
            raise InvalidPolygon("boundary is self-intersecting")

    @property
    def area(self):
        return _signed_area2(self.vertices) / 2

    def bbox(self):
        xs = [v[0] for v in self.vertices]
        ys = [v[1] for v in self.vertices]
        return min(xs), min(ys), max(xs), max(ys)

    def contains(self, p) -> bool:
        """Closed point-in-polygon test in the lifted plane (no wrapping)."""
        verts = self.vertices
        k = len(verts)
        inside = False
        for i in range(k):
            a, b = verts[i], verts[(i + 1) % k]
            if _orient(a, b, p) == 0 and _on_segment(a, b, p):
                return True
            if (a[1] > p[1]) != (b[1] > p[1]):
                xc = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1])
                if p[0] < xc:
                    inside = not inside
        return inside


@dataclass(frozen=True)
class _Strip:
    lo: float
    hi: float

    def __post_init__(self):
        object.__setattr__(self, "lo", _exact(self.lo))
        object.__setattr__(self, "hi", _exact(self.hi))
        if not 0 <= self.lo < self.hi <= 1:
            raise InvalidRegion(f"strip bounds must satisfy 0 <= lo < hi <= 1, got {self.lo}, {self.hi}")

    @property
    def area(self):
        return self.hi - self.lo


@dataclass(frozen=True)
class VerticalStrip(_Strip):
    """Band ``lo <= x <= hi`` wrapping the full y-circle."""


@dataclass(frozen=True)
class HorizontalStrip(_Strip):
    """Band ``lo <= y <= hi`` wrapping the full x-circle."""


@dataclass(frozen=True)
class PixelSet:
    """Union of grid cells ``[i/s, (i+1)/s] x [j/s, (j+1)/s]``."""

    s: int
    cells: Tuple[Tuple[int, int], ...]

    def __post_init__(self):
        cells = tuple((int(i), int(j)) for i, j in self.cells)
        object.__setattr__(self, "cells", cells)
        if self.s < 1:
            raise InvalidRegion("grid size must be positive")
        if not cells:
            raise InvalidRegion("pixel set is empty")
        if len(set(cells)) != len(cells):
            raise InvalidRegion("duplicate cells")
        if any(not (0 <= i < self.s and 0 <= j < self.s) for i, j in cells):
            raise InvalidRegion("cell index out of range")

    @property
    def area(self):
        return Fraction(len(self.cells), self.s * self.s)

    def occupancy(self) -> np.ndarray:
        occ = np.zeros((self.s, self.s), dtype=bool)
        idx = np.array(self.cells)
        occ[idx[:, 0], idx[:, 1]] = True
        return occ


Region = Union[LiftedPolygon, VerticalStrip, HorizontalStrip, PixelSet]


@dataclass
class Partition:
    m: int
    regions: List[Region]
    tau: float
    provenance: str = ""

    def __post_init__(self):
        if len(self.regions) != self.m:
            raise ValueError(f"expected {self.m} regions, got {len(self.regions)}")


# ---------------------------------------------------------------------------
# diameters
# ---------------------------------------------------------------------------


def polygon_diameter_sq(p: LiftedPolygon):
    """Squared torus diameter of the image of ``p``.

    The maximum is taken over vertex pairs and over pairs (vertex, boundary
    point) whose x- or y-coordinates differ by exactly one half.  Corner
    points at offset (1/2, 1/2) inside the polygon are included too, which
    covers the interior of the lines as well.
    """
    x0, y0, x1, y1 = p.bbox()
    if x1 - x0 > 1 or y1 - y0 > 1:
        raise InvalidPolygon("lifted polygon does not fit in a unit window")
    verts = p.vertices
    k = len(verts)
    best = 0
    for i in range(k):
        for j in range(i + 1, k):
            best = max(best, torus_dist_sq(verts[i], verts[j]))
    half = (verts[0][0] * 0 + 1) / 2
    for P in verts:
        for axis in (0, 1):
            other = 1 - axis
            for c in (P[axis] - half, P[axis] + half):
                for e in range(k):
                    A, B = verts[e], verts[(e + 1) % k]
                    if A[axis] == B[axis] or (A[axis] - c) * (B[axis] - c) > 0:
                        continue
                    t = (c - A[axis]) / (B[axis] - A[axis])
                    Q = [None, None]
                    Q[axis] = c
                    Q[other] = A[other] + t * (B[other] - A[other])
                    best = max(best, torus_dist_sq(P, Q))
        for sx in (-half, half):
            for sy in (-half, half):
                Q = (P[0] + sx, P[1] + sy)
                if p.contains(Q):
                    best = max(best, torus_dist_sq(P, Q))
    return best


def polygon_diameter(p: LiftedPolygon) -> float:
    return math.sqrt(polygon_diameter_sq(p))


def _strip_diameter_sq(width):
    h = min(width, (width * 0 + 1) / 2)
    return h * h + (width * 0 + 1) / 4


def _half_units_reach(delta, s):
    """2 * max min-image |t| over real t in [delta - 1, delta + 1], in cell units."""
    def g(t):
        return np.minimum(t % s, s - t % s)

    reach = 2 * np.maximum(g(delta - 1), g(delta + 1))
    return np.where(np.abs(2 * delta - s) <= 2, s, reach)


def pixel_diameter_sq(r: PixelSet) -> Fraction:
    """Exact squared diameter of a union of closed grid cells on the torus."""
    s = r.s
    occ = r.occupancy().astype(float)
    f = np.fft.rfft2(occ)
    corr = np.fft.irfft2(np.conj(f) * f, s=occ.shape)
    dx, dy = np.nonzero(corr > 0.5)  # offsets (dx, dy) realised by some cell pair
    hx = _half_units_reach(dx, s)
    hy = _half_units_reach(dy, s)
    top = int((hx.astype(np.int64) ** 2 + hy.astype(np.int64) ** 2).max())
    return Fraction(top, 4 * s * s)


def region_diameter_sq(r: Region):
    if isinstance(r, LiftedPolygon):
        return polygon_diameter_sq(r)
    if isinstance(r, _Strip):
        return _strip_diameter_sq(r.hi - r.lo)
    if isinstance(r, PixelSet):
        return pixel_diameter_sq(r)
    raise InvalidRegion(f"unknown region type {type(r).__name__}")


def region_diameter(r: Region) -> float:
    return math.sqrt(region_diameter_sq(r))


def region_area(r: Region):
    return r.area


# ---------------------------------------------------------------------------
# verification
# ---------------------------------------------------------------------------


@dataclass
class VerificationReport:
    tau: float
    area_sum: float
    area_ok: bool
    probes: int
    uncovered: int
    overlapping: int
    diameters: List[float] = field(default_factory=list)
    diameter_ok: bool = True
    worst_region: int = -1

    @property
    def coverage_ok(self) -> bool:
        return self.uncovered == 0

    @property
    def disjoint_ok(self) -> bool:
        return self.overlapping == 0

    @property
    def passed(self) -> bool:
        return self.area_ok and self.coverage_ok and self.disjoint_ok and self.diameter_ok

    @property
    def max_diameter(self) -> float:
        return max(self.diameters) if self.diameters else 0.0

    def summary(self) -> str:
        lines = [
            f"area sum     {self.area_sum:.12f}  {'ok' if self.area_ok else 'FAIL'}",
            f"coverage     {self.uncovered} of {self.probes} probes uncovered  {'ok' if self.coverage_ok else 'FAIL'}",
            f"disjointness {self.overlapping} probes in 2+ interiors  {'ok' if self.disjoint_ok else 'FAIL'}",
            f"diameter     max {self.max_diameter:.9f} (region {self.worst_region}) vs tau {self.tau:.9f}  "
            f"{'ok' if self.diameter_ok else 'FAIL'}",
            "PASS" if self.passed else "FAIL",
        ]
        return "\n".join(lines)


def _strip_masks(lo, hi, coords, tol):
    width = float(hi - lo)
    u = (coords - float(lo)) % 1.0
    if width >= 1.0:
        full = np.ones_like(u, dtype=bool)
        return full, full
    closed = (u <= width + tol) | (u >= 1.0 - tol)
    interior = (u > tol) & (u < width - tol)
    return closed, interior


def _pixel_masks(r: PixelSet, coords, tol):
    s = r.s
    occ = r.occupancy()
    f = coords * s
    idx = np.floor(f).astype(np.int64) % s
    frac = f - np.floor(f)
    near = np.minimum(frac, 1.0 - frac) <= tol * s
    nb = np.where(frac < 0.5, idx - 1, idx + 1) % s
    ix, iy = idx[:, None], idx[None, :]
    nx, ny = nb[:, None], nb[None, :]
    near_x, near_y = near[:, None], near[None, :]
    here = occ[ix, iy]
    side_x = occ[nx, iy]
    side_y = occ[ix, ny]
    corner = occ[nx, ny]
    closed = here | (near_x & side_x) | (near_y & side_y) | (near_x & near_y & corner)
    interior = here & (~near_x | side_x) & (~near_y | side_y) & (~(near_x & near_y) | corner)
    return closed, interior


def region_masks(r: Region, n: int, tol: float = 1e-9):
    """Closed/interior membership of the probe grid; arrays indexed [ix, iy]."""
    coords = (np.arange(n) + 0.5) / n
    if isinstance(r, LiftedPolygon):
        vx = [float(v[0]) for v in r.vertices]
        vy = [float(v[1]) for v in r.vertices]
        return kernels.polygon_masks(vx, vy, n, tol)
    if isinstance(r, HorizontalStrip):
        c, i = _strip_masks(r.lo, r.hi, coords, tol)
        return np.broadcast_to(c[None, :], (n, n)), np.broadcast_to(i[None, :], (n, n))
    if isinstance(r, VerticalStrip):
        c, i = _strip_masks(r.lo, r.hi, coords, tol)
        return np.broadcast_to(c[:, None], (n, n)), np.broadcast_to(i[:, None], (n, n))
    if isinstance(r, PixelSet):
        return _pixel_masks(r, coords, tol)
    raise InvalidRegion(f"unknown region type {type(r).__name__}")


def verify_partition(
    p: Partition,
    tau=None,
    n: int = 512,
    diameter_tol: float = 1e-12,
    area_tol: float = 1e-9,
    probe_tol: float = 1e-9,
) -> VerificationReport:
    """Check area, probe coverage, probe disjointness and region diameters.

    ``tau`` overrides the partition's claimed bound.  Failures are reported,
    never raised.
    """
    tau = float(p.tau if tau is None else tau)
    area_sum = sum(region_area(r) for r in p.regions)
    covered = np.zeros((n, n), dtype=np.int32)
    inner = np.zeros((n, n), dtype=np.int32)
    for r in p.regions:
        closed, interior = region_masks(r, n, probe_tol)
        covered += closed
        inner += interior
    diameters = [region_diameter(r) for r in p.regions]
    worst = int(np.argmax(diameters)) if diameters else -1
    return VerificationReport(
        tau=tau,
        area_sum=float(area_sum),
        area_ok=abs(area_sum - 1) <= area_tol,
        probes=n * n,
        uncovered=int((covered == 0).sum()),
        overlapping=int((inner >= 2).sum()),
        diameters=diameters,
        diameter_ok=all(d <= tau + diameter_tol for d in diameters),
        worst_region=worst,
    )


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------


def format_number(v) -> str:
    """Decimal string for a coordinate: exact when possible, else 20 digits."""
    if isinstance(v, Fraction):
        with localcontext() as ctx:
            ctx.prec = 40
            d = Decimal(v.numerator) / Decimal(v.denominator)
        den = v.denominator
        for q in (2, 5):
            while den % q == 0:
                den //= q
        if den == 1:
            return format(d.normalize(), "f")
        return format(d, ".20g")
    if isinstance(v, int):
        return str(v)
    return repr(float(v))


def region_to_dict(r: Region) -> dict:
    if isinstance(r, LiftedPolygon):
        return {"kind": "polygon", "vertices": [[format_number(x), format_number(y)] for x, y in r.vertices]}
    if isinstance(r, HorizontalStrip):
        return {"kind": "hstrip", "lo": format_number(r.lo), "hi": format_number(r.hi)}
    if isinstance(r, VerticalStrip):
        return {"kind": "vstrip", "lo": format_number(r.lo), "hi": format_number(r.hi)}
    if isinstance(r, PixelSet):
        return {"kind": "pixels", "s": r.s, "cells": [list(c) for c in r.cells]}
    raise InvalidRegion(f"unknown region type {type(r).__name__}")


def _num(v):
    if isinstance(v, str):
        f = Fraction(v)
        return f if f.denominator & (f.denominator - 1) == 0 else float(v)
    return v


def region_from_dict(d: dict) -> Region:
    kind = d.get("kind")
    if kind == "polygon":
        return LiftedPolygon(tuple((_num(x), _num(y)) for x, y in d["vertices"]))
    if kind == "vstrip":
        return VerticalStrip(_num(d["lo"]), _num(d["hi"]))
    if kind == "hstrip":
        return HorizontalStrip(_num(d["lo"]), _num(d["hi"]))
    if kind == "pixels":
        return PixelSet(int(d["s"]), tuple(tuple(c) for c in d["cells"]))
    raise InvalidRegion(f"unknown region kind {kind!r}")


def partition_to_dict(p: Partition) -> dict:
    return {
        "m": p.m,
        "tau": repr(float(p.tau)),
        "provenance": p.provenance,
        "regions": [region_to_dict(r) for r in p.regions],
    }


def partition_from_dict(d: dict) -> Partition:
    return Partition(
        m=int(d["m"]),
        regions=[region_from_dict(r) for r in d["regions"]],
        tau=float(d["tau"]),
        provenance=str(d.get("provenance", "")),
    )


def dumps_partition(p: Partition) -> str:
    return json.dumps(partition_to_dict(p), indent=1)


def loads_partition(text: str) -> Partition:
    return partition_from_dict(json.loads(text))


def save_partition(p: Partition, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_partition(p))
        fh.write("\n")


def load_partition(path) -> Partition:
    with open(path, encoding="utf-8") as fh:
        return loads_partition(fh.read())
