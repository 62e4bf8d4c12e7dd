"""Elementary geometric predicates shared by cut, tear and drill.

All arithmetic is plain double precision.  Callers pick one epsilon per
operation (``EPS_REL`` times the mesh bounding-box diagonal) and pass it to
every predicate so that their decisions agree with each other.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import GeometryError

EPS_REL = 1e-9
TANGENT_TOL = 1e-12


class Side(enum.IntEnum):
    NEGATIVE = -1
    ON_PLANE = 0
    POSITIVE = 1


class Overlap(enum.Enum):
    OUTSIDE = "outside"
    INSIDE = "inside"
    CROSSING = "crossing"


@dataclass(frozen=True)
class Plane:
    """The set ``{x : normal . x == offset}`` with a unit normal."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=float).reshape(3)
        length = np.linalg.norm(n)
        if not np.isfinite(length) or length == 0:
            raise GeometryError("plane normal must be non-zero")
        if abs(length - 1.0) > 1e-9:
            raise GeometryError(f"plane normal must be unit length, |n| = {length!r}")
        n = n.copy()
        n.setflags(write=False)
        object.__setattr__(self, "normal", n)
        object.__setattr__(self, "offset", float(self.offset))

    @classmethod
    def from_normal(cls, normal, offset: float) -> "Plane":
        """Normalize ``normal`` first, scaling ``offset`` to match."""
        n = np.asarray(normal, dtype=float).reshape(3)
        length = np.linalg.norm(n)
        if length == 0:
            raise GeometryError("plane normal must be non-zero")
        return cls(n / length, offset / length)

    @classmethod
    def from_point_normal(cls, point, normal) -> "Plane":
        n = np.asarray(normal, dtype=float)
        n = n / np.linalg.norm(n)
        return cls(n, float(n @ np.asarray(point, dtype=float)))

    def signed_distance(self, points) -> np.ndarray:
        return np.asarray(points, dtype=float) @ self.normal - self.offset


@dataclass(frozen=True)
class DrillCylinder:
    axis_start: np.ndarray
    axis_end: np.ndarray
    radius: float

    def __post_init__(self):
        a = np.asarray(self.axis_start, dtype=float).reshape(3)
        b = np.asarray(self.axis_end, dtype=float).reshape(3)
        if np.array_equal(a, b):
            raise GeometryError("drill axis endpoints coincide")
        if not self.radius > 0:
            raise GeometryError(f"drill radius must be > 0, got {self.radius!r}")
        object.__setattr__(self, "axis_start", a)
        object.__setattr__(self, "axis_end", b)
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def direction(self) -> np.ndarray:
        d = self.axis_end - self.axis_start
        return d / np.linalg.norm(d)

    @property
    def length(self) -> float:
        return float(np.linalg.norm(self.axis_end - self.axis_start))


def classify_point(p, plane: Plane, eps: float) -> Side:
    if eps < 0:
        raise ValueError("eps must be >= 0")
    s = float(np.dot(plane.normal, np.asarray(p, dtype=float)) - plane.offset)
    if s > eps:
        return Side.POSITIVE
    if s < -eps:
        return Side.NEGATIVE
    return Side.ON_PLANE


def classify_points(points, plane: Plane, eps: float) -> np.ndarray:
    """Vectorized :func:`classify_point`; returns an int8 array of -1/0/+1."""
    s = plane.signed_distance(points)
    out = np.zeros(len(s), dtype=np.int8)
    out[s > eps] = 1
    out[s < -eps] = -1
    return out


def segment_plane_intersection(p0, p1, plane: Plane, eps: float = 0.0) -> Optional[tuple[float, np.ndarray]]:
    """Crossing of segment ``p0 -> p1`` with ``plane``.

    Returns ``(t, point)`` only when the endpoints lie strictly on opposite
    sides (outside the ``eps`` band); otherwise ``None``.
    """
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    s0 = float(plane.normal @ p0 - plane.offset)
    s1 = float(plane.normal @ p1 - plane.offset)
    if not ((s0 > eps and s1 < -eps) or (s0 < -eps and s1 > eps)):
        return None
    t = s0 / (s0 - s1)
    return t, p0 + t * (p1 - p0)


def segment_circle_intersection_2d(p0, p1, center, radius: float) -> list[tuple[float, np.ndarray]]:
    """Intersections of the open segment ``p0 -> p1`` with a circle, sorted by ``t``.

    A tangent line (``|r^2 - dist^2| <= 1e-12 r^2``) yields a single entry.
    """
    p0 = np.asarray(p0, dtype=float)
    d = np.asarray(p1, dtype=float) - p0
    f = p0 - np.asarray(center, dtype=float)
    a = float(d @ d)
    if a == 0.0:
        raise GeometryError("degenerate segment")
    fd = float(f @ d)
    r2 = radius * radius
    # r^2 - (squared distance from center to the supporting line)
    gap = r2 - (float(f @ f) - fd * fd / a)
    out = []
    if abs(gap) <= TANGENT_TOL * r2:
        roots = [-fd / a]
    elif gap < 0:
        return out
    else:
        h = math.sqrt(gap * a) / a
        roots = [-fd / a - h, -fd / a + h]
    for t in roots:
        if 0.0 < t < 1.0:
            out.append((t, p0 + t * d))
    return out


def _point_segment_dist2(p, a, b):
    ab = b - a
    denom = float(ab @ ab)
    t = 0.0 if denom == 0 else min(1.0, max(0.0, float((p - a) @ ab) / denom))
    q = a + t * ab
    return float((p - q) @ (p - q))


def _cross2(u, v):
    return u[0] * v[1] - u[1] * v[0]


def point_in_triangle_2d(p, a, b, c) -> bool:
    d1 = _cross2(b - a, p - a)
    d2 = _cross2(c - b, p - b)
    d3 = _cross2(a - c, p - c)
    has_neg = d1 < 0 or d2 < 0 or d3 < 0
    has_pos = d1 > 0 or d2 > 0 or d3 > 0
    return not (has_neg and has_pos)


def triangle_circle_overlap_2d(a, b, c, center, radius: float) -> Overlap:
    """INSIDE: all corners strictly inside; OUTSIDE: disjoint from the closed disk; else CROSSING."""
    a, b, c, center = (np.asarray(x, dtype=float) for x in (a, b, c, center))
    r2 = radius * radius
    d2 = [float((x - center) @ (x - center)) for x in (a, b, c)]
    if max(d2) < r2:
        return Overlap.INSIDE
    if point_in_triangle_2d(center, a, b, c):
        return Overlap.CROSSING
    nearest = min(_point_segment_dist2(center, a, b), _point_segment_dist2(center, b, c),
                  _point_segment_dist2(center, c, a))
    return Overlap.CROSSING if nearest <= r2 else Overlap.OUTSIDE


def classify_triangles_circle(tri2d: np.ndarray, radius: float) -> np.ndarray:
    """Vectorized overlap test for triangles ``(k, 3, 2)`` against a circle at the origin.

    Returns int8 codes: 0 outside, 1 inside, 2 crossing.
    """
    tri2d = np.asarray(tri2d, dtype=float).reshape(-1, 3, 2)
    r2 = radius * radius
    d2 = (tri2d ** 2).sum(-1)
    inside = d2.max(1) < r2
    a, b, c = tri2d[:, 0], tri2d[:, 1], tri2d[:, 2]

    def cross(u, v):
        return u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0]

    c1, c2, c3 = cross(b - a, -a), cross(c - b, -b), cross(a - c, -c)
    neg = (c1 < 0) | (c2 < 0) | (c3 < 0)
    pos = (c1 > 0) | (c2 > 0) | (c3 > 0)
    contains = ~(neg & pos)

    def seg_d2(p, q):
        pq = q - p
        denom = (pq ** 2).sum(-1)
        t = np.where(denom > 0, -(p * pq).sum(-1) / np.where(denom > 0, denom, 1.0), 0.0)
        t = np.clip(t, 0.0, 1.0)
        return ((p + t[:, None] * pq) ** 2).sum(-1)

    near = np.minimum(np.minimum(seg_d2(a, b), seg_d2(b, c)), seg_d2(c, a))
    out = np.where(contains | (near <= r2), 2, 0).astype(np.int8)
    out[inside] = 1
    return out


def orthonormal_basis(axis) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return ``(u, v, d)``: a right-handed frame whose third vector is ``axis`` normalized."""
    d = np.asarray(axis, dtype=float)
    d = d / np.linalg.norm(d)
    helper = np.zeros(3)
    helper[int(np.argmin(np.abs(d)))] = 1.0
    u = np.cross(helper, d)
    u /= np.linalg.norm(u)
    v = np.cross(d, u)
    return u, v, d


def project_to_plane(p, plane_origin, basis_u, basis_v) -> np.ndarray:
    """In-plane coordinates of ``p`` (works row-wise on ``(n, 3)`` input)."""
    rel = np.asarray(p, dtype=float) - np.asarray(plane_origin, dtype=float)
    return np.stack([rel @ basis_u, rel @ basis_v], axis=-1)


def unproject_from_plane(q, plane_origin, basis_u, basis_v, height=0.0, axis=None) -> np.ndarray:
    """Inverse of :func:`project_to_plane`, optionally restoring a stored axis coordinate."""
    q = np.asarray(q, dtype=float)
    out = np.asarray(plane_origin, dtype=float) + q[..., :1] * basis_u + q[..., 1:2] * basis_v
    if axis is None:
        axis = np.cross(basis_u, basis_v)
    h = np.asarray(height, dtype=float)
    return out + h[..., None] * axis if h.ndim else out + float(h) * axis
