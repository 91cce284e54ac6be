"""Periodic tilings of the torus by m translates of a centrally symmetric hexagon.

The hexagon has consecutive edge vectors p1, p2, p3.  Integer triples a, b
express the unit vectors through them, ``a1 p1 + a2 p2 + a3 p3 = (1, 0)`` and
``b1 p1 + b2 p2 + b3 p3 = (0, 1)``.  Solving for p2, p3 leaves p1 = (x, y)
free, and the squared diameter (longest main diagonal) is

    f(x, y) = x^2 + y^2 + C + 2 max(|L(x, y)| + K, M(x, y) - K)

with L, M linear.  Everything is computed in exact rationals.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Dict, List, Optional, Sequence, Tuple

from .core import LiftedPolygon, Partition

Vec = Tuple[Fraction, Fraction]

# coefficient rows (a, b) for the published hexagonal tilings, keyed by m
KNOWN_TILINGS: Dict[int, Tuple[Tuple[int, int, int], Tuple[int, int, int]]] = {
    7: ((3, 1, -2), (-1, 2, 3)),
    8: ((3, 2, -1), (-1, 2, 3)),
    9: ((1, 3, 2), (3, 0, -3)),
    10: ((3, 2, -1), (-2, 2, 4)),
    11: ((-1, 2, 3), (4, 3, -1)),
    12: ((2, 4, 2), (3, 0, -3)),
    14: ((4, 2, -2), (1, 4, 3)),
    15: ((4, 3, -1), (-1, 3, 4)),
    16: ((4, 2, -2), (0, 4, 4)),
}


class DegenerateSpec(ValueError):
    pass


class InconsistentSpec(ValueError):
    pass


class DegenerateHexagon(ValueError):
    pass


@dataclass(frozen=True)
class HexTilingSpec:
    a: Tuple[int, int, int]
    b: Tuple[int, int, int]
    m: int
    alpha2: Fraction
    alpha3: Fraction
    beta2: Fraction
    beta3: Fraction
    C: Fraction

    @property
    def K(self) -> Fraction:
        return self.alpha2 * self.alpha3 + self.beta2 * self.beta3

    def edge_vectors(self, x, y) -> Tuple[Vec, Vec, Vec]:
        x, y = Fraction(x), Fraction(y)
        return (x, y), (-x + self.alpha2, -y + self.beta2), (x + self.alpha3, y + self.beta3)

    def affine_pieces(self):
        """The three affine functions (gx, gy, h) whose max enters f."""
        sx, sy = self.alpha2 + self.alpha3, self.beta2 + self.beta3
        dx, dy = self.alpha3 - self.alpha2, self.beta3 - self.beta2
        K = self.K
        return ((sx, sy, K), (-sx, -sy, K), (dx, dy, -K))


def solve_hex_system(a: Sequence[int], b: Sequence[int], m: int) -> HexTilingSpec:
    a = tuple(int(v) for v in a)
    b = tuple(int(v) for v in b)
    a1, a2, a3 = a
    b1, b2, b3 = b
    D = a2 * b3 - a3 * b2
    if D == 0:
        raise DegenerateSpec(f"a2*b3 - a3*b2 = 0 for a={a}, b={b}")
    minors = (a1 * b2 - a2 * b1, D, a1 * b3 - a3 * b1)
    if not (all(v == m for v in minors) or all(v == -m for v in minors)):
        raise InconsistentSpec(f"2x2 minors {minors} are not all +{m} or all -{m}")
    al2, al3 = Fraction(b3, D), Fraction(-b2, D)
    be2, be3 = Fraction(-a3, D), Fraction(a2, D)
    C = al2 * al2 + al3 * al3 + be2 * be2 + be3 * be3
    return HexTilingSpec(a, b, m, al2, al3, be2, be3, C)


def hex_objective(spec: HexTilingSpec, x, y) -> Fraction:
    """Squared longest main diagonal of the hexagon with p1 = (x, y)."""
    x, y = Fraction(x), Fraction(y)
    L = x * (spec.alpha2 + spec.alpha3) + y * (spec.beta2 + spec.beta3)
    M = x * (spec.alpha3 - spec.alpha2) + y * (spec.beta3 - spec.beta2)
    K = spec.K
    return x * x + y * y + spec.C + 2 * max(abs(L) + K, M - K)


def diagonals_sq(spec: HexTilingSpec, x, y) -> Tuple[Fraction, Fraction, Fraction]:
    """|p1+p2+p3|^2, |p2+p3-p1|^2, |p3-p1-p2|^2 straight from the edge vectors."""
    p1, p2, p3 = spec.edge_vectors(x, y)

    def sq(v):
        return v[0] * v[0] + v[1] * v[1]

    return (
        sq((p1[0] + p2[0] + p3[0], p1[1] + p2[1] + p3[1])),
        sq((p2[0] + p3[0] - p1[0], p2[1] + p3[1] - p1[1])),
        sq((p3[0] - p1[0] - p2[0], p3[1] - p1[1] - p2[1])),
    )


@dataclass(frozen=True)
class HexOptimum:
    spec: HexTilingSpec
    x_star: Fraction
    y_star: Fraction
    f_min: Fraction

    @property
    def tau(self) -> float:
        return math.sqrt(self.f_min)

    @property
    def edge_vectors(self) -> Tuple[Vec, Vec, Vec]:
        return self.spec.edge_vectors(self.x_star, self.y_star)


def _line_minimizer(g, n, c):
    """argmin of |z|^2 + 2 g.z subject to n.z = c."""
    nn = n[0] * n[0] + n[1] * n[1]
    lam = (c + n[0] * g[0] + n[1] * g[1]) / nn
    return (-g[0] + lam * n[0], -g[1] + lam * n[1])


def minimize_hex(spec: HexTilingSpec) -> HexOptimum:
    """Exact global minimum of the convex piecewise quadratic f.

    f = |z|^2 + C + 2 max_i (g_i . z + h_i).  The minimizer is the free
    minimizer of one piece, the minimizer along the line where two pieces
    tie, or the point where all three tie; every such candidate is
    evaluated and the smallest value wins.
    """
    pieces = spec.affine_pieces()
    cands = [(-gx, -gy) for gx, gy, _ in pieces]
    for i in range(3):
        for j in range(i + 1, 3):
            gi, gj = pieces[i], pieces[j]
            n = (gi[0] - gj[0], gi[1] - gj[1])
            if n == (0, 0):
                continue
            cands.append(_line_minimizer(gi[:2], n, gj[2] - gi[2]))
    g0, g1, g2 = pieces
    n1 = (g0[0] - g1[0], g0[1] - g1[1], g1[2] - g0[2])
    n2 = (g0[0] - g2[0], g0[1] - g2[1], g2[2] - g0[2])
    det = n1[0] * n2[1] - n1[1] * n2[0]
    if det != 0:
        cands.append(((n1[2] * n2[1] - n1[1] * n2[2]) / det, (n1[0] * n2[2] - n1[2] * n2[0]) / det))
    best = min((hex_objective(spec, x, y), (Fraction(x), Fraction(y))) for x, y in cands)
    f_min, (x, y) = best
    return HexOptimum(spec, x, y, f_min)


def _cross(u, v):
    return u[0] * v[1] - u[1] * v[0]


def hexagon_vertices(opt: HexOptimum) -> List[Vec]:
    p1, p2, p3 = opt.edge_vectors
    if (0, 0) in (p1, p2, p3):
        raise DegenerateHexagon("an edge vector vanishes")
    zero = Fraction(0)
    verts = [
        (zero, zero),
        p1,
        (p1[0] + p2[0], p1[1] + p2[1]),
        (p1[0] + p2[0] + p3[0], p1[1] + p2[1] + p3[1]),
        (p2[0] + p3[0], p2[1] + p3[1]),
        p3,
    ]
    turns = [_cross(p1, p2), _cross(p2, p3), _cross(p3, (-p1[0], -p1[1]))]
    if not (all(t >= 0 for t in turns) or all(t <= 0 for t in turns)) or all(t == 0 for t in turns):
        raise DegenerateHexagon(f"hexagon is not convex (turns {turns})")
    if sum(turns) < 0:
        verts = [verts[0]] + verts[:0:-1]
    return verts


def lattice_offsets(opt: HexOptimum) -> List[Vec]:
    """Coset representatives mod Z^2 of the lattice spanned by p1+p2 and p2+p3."""
    s = opt.spec
    t1 = (s.alpha2, s.beta2)
    t2 = (s.alpha2 + s.alpha3, s.beta2 + s.beta3)
    seen = {}
    for i in range(s.m):
        for j in range(s.m):
            pt = ((i * t1[0] + j * t2[0]) % 1, (i * t1[1] + j * t2[1]) % 1)
            seen.setdefault(pt, None)
    offsets = sorted(seen)
    if len(offsets) != s.m:
        raise DegenerateHexagon(f"translation lattice has index {len(offsets)}, expected {s.m}")
    return offsets


def hex_partition(opt: HexOptimum) -> Partition:
    verts = hexagon_vertices(opt)
    regions = [
        LiftedPolygon(tuple((vx + ox, vy + oy) for vx, vy in verts)) for ox, oy in lattice_offsets(opt)
    ]
    a, b = opt.spec.a, opt.spec.b
    return Partition(opt.spec.m, regions, opt.tau, provenance=f"hex tiling m={opt.spec.m} a={a} b={b}")


def search_hex(m: int, bound: int = 5) -> Optional[HexOptimum]:
    """Best tiling over coefficient triples with entries in [-bound, bound].

    The minors identity forces a2 = a1 + a3 and b2 = b1 + b3, so only four
    entries are enumerated.  Ties go to the lexicographically smallest (a, b).
    """
    best = None
    rng = range(-bound, bound + 1)
    for a1, a3, b1, b3 in product(rng, rng, rng, rng):
        a2, b2 = a1 + a3, b1 + b3
        if abs(a2) > bound or abs(b2) > bound or abs(a2 * b3 - a3 * b2) != m:
            continue
        a, b = (a1, a2, a3), (b1, b2, b3)
        try:
            opt = minimize_hex(solve_hex_system(a, b, m))
            hexagon_vertices(opt)
        except (DegenerateSpec, InconsistentSpec, DegenerateHexagon):
            continue
        key = (opt.f_min, a, b)
        if best is None or key < best[0]:
            best = (key, opt)
    return None if best is None else best[1]


def optima_csv(optima: Sequence[HexOptimum]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["m", "a1", "a2", "a3", "b1", "b2", "b3", "f_min", "x_star", "y_star", "tau"])
    for o in optima:
        w.writerow([o.spec.m, *o.spec.a, *o.spec.b, str(o.f_min), str(o.x_star), str(o.y_star), f"{o.tau:.6f}"])
    return buf.getvalue()
