"""Closed-form bounds on the optimal maximal part diameter d_m of the torus."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, List, Sequence

from .core import Partition, VerticalStrip

SQRT2_2 = math.sqrt(2.0) / 2.0
SQRT13_6 = math.sqrt(13.0) / 6.0

METHODS = ("exact", "stripes", "area", "pigeonhole", "sat", "hex", "globopt")


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class BoundRecord:
    m: int
    lower: float
    upper: float
    lower_method: str
    upper_method: str

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be positive")
        if self.lower > self.upper + 1e-12:
            raise ValueError(f"lower bound {self.lower} exceeds upper bound {self.upper} for m={self.m}")

    @property
    def gap(self) -> float:
        return (self.upper - self.lower) / self.lower


@dataclass(frozen=True)
class UpperRecord:
    """An upper bound achieved by some construction (hex tiling, descent, ...)."""

    m: int
    tau: float
    method: str


def stripe_upper(m: int) -> float:
    if m < 1:
        raise DomainError("m must be positive")
    return min(math.sqrt(m * m + 4.0) / (2.0 * m), SQRT2_2)


def area_lower(m: int) -> float:
    if m < 6:
        raise DomainError("the isodiametric bound needs m >= 6")
    return 2.0 / math.sqrt(math.pi * m)


def pigeonhole_k(m: int) -> int:
    k = 1
    while k * k + k - 1 < m:
        k += 1
    return k


def pigeonhole_lower(m: int) -> float:
    if m < 1:
        raise DomainError("m must be positive")
    return 1.0 / pigeonhole_k(m)


def exact_value(m: int) -> float:
    if m in (1, 2):
        return SQRT2_2
    if m == 3:
        return SQRT13_6
    raise DomainError(f"exact value known only for m in {{1, 2, 3}}, not {m}")


def stripe_partition(m: int) -> Partition:
    """m vertical bands of width 1/m."""
    if m < 1:
        raise DomainError("m must be positive")
    regions = [VerticalStrip(Fraction(i, m), Fraction(i + 1, m)) for i in range(m)]
    return Partition(m=m, regions=regions, tau=stripe_upper(m), provenance=f"stripes m={m}")


def best_bounds(
    m: int,
    sat_results: Sequence = (),
    upper_results: Iterable[UpperRecord] = (),
) -> BoundRecord:
    """Combine every available bound for ``m``.

    ``sat_results`` holds :class:`flattorus.satgrid.SatBoundRecord` values;
    UNSAT records for this m contribute lower bounds, SAT records with a
    verified partition diameter contribute upper bounds.
    """
    lowers = []
    if m >= 2:
        # k = 1 would claim d_1 >= 1, above the torus diameter
        lowers.append((pigeonhole_lower(m), "pigeonhole"))
    if m <= 3:
        lowers.append((exact_value(m), "exact"))
    if m >= 6:
        lowers.append((area_lower(m), "area"))
    uppers = [(stripe_upper(m), "stripes")]
    if m <= 3:
        uppers.append((exact_value(m), "exact"))
    for rec in sat_results:
        if rec.m != m:
            continue
        if rec.status == "unsat_certified":
            lowers.append((rec.tau, "sat"))
        elif rec.partition_tau is not None:
            uppers.append((rec.partition_tau, "sat"))
    for rec in upper_results:
        if rec.m == m:
            uppers.append((rec.tau, rec.method))
    lower, lower_method = max(lowers, key=lambda t: t[0])
    upper, upper_method = min(uppers, key=lambda t: t[0])
    if m <= 3:
        lower_method = upper_method = "exact"
    return BoundRecord(m, lower, upper, lower_method, upper_method)


def bounds_table(records: List[BoundRecord]) -> str:
    header = f"{'m':>3}  {'lower':>9}  {'upper':>9}  {'lower via':<10}  {'upper via':<10}  {'gap':>7}"
    lines = [header, "-" * len(header)]
    for r in records:
        gap = "exact" if r.upper - r.lower <= 1e-12 else f"{r.gap:.4f}"
        lines.append(
            f"{r.m:>3}  {r.lower:9.6f}  {r.upper:9.6f}  {r.lower_method:<10}  {r.upper_method:<10}  {gap:>7}"
        )
    return "\n".join(lines)


def bounds_csv(records: List[BoundRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["m", "lower", "upper", "lower_method", "upper_method", "gap"])
    for r in records:
        w.writerow([r.m, f"{r.lower:.6f}", f"{r.upper:.6f}", r.lower_method, r.upper_method, f"{r.gap:.4f}"])
    return buf.getvalue()
