"""Partitions of the flat torus into parts of small diameter."""

from .bounds import BoundRecord, best_bounds, stripe_partition, stripe_upper
from .core import (
    HorizontalStrip,
    LiftedPolygon,
    Partition,
    PixelSet,
    TorusPoint,
    VerificationReport,
    VerticalStrip,
    load_partition,
    polygon_diameter,
    region_diameter,
    save_partition,
    torus_dist,
    verify_partition,
)

__all__ = [
    "BoundRecord", "best_bounds", "stripe_partition", "stripe_upper",
    "HorizontalStrip", "LiftedPolygon", "Partition", "PixelSet", "TorusPoint",
    "VerificationReport", "VerticalStrip", "load_partition", "polygon_diameter",
    "region_diameter", "save_partition", "torus_dist", "verify_partition",
]
__version__ = "0.1.0"
