"""Topology-changing operations: plane cut, scalpel tear, cylindrical drill."""

from .cut import CutReport, cut
from .drill import DrillReport, drill, subdivide_1to4
from .tear import ScalpelStroke, TearPlane, TearReport, derive_tear_plane, tear

__all__ = [
    "CutReport", "DrillReport", "ScalpelStroke", "TearPlane", "TearReport",
    "cut", "derive_tear_plane", "drill", "subdivide_1to4", "tear",
]
