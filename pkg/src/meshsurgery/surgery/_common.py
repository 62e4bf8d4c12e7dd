"""Pieces shared by the cut, tear and drill operations."""

from __future__ import annotations

import numpy as np

from ..adjacency import AddedVertex, MeshDelta
from ..predicates import EPS_REL
from ..skinning import interpolate_weights, interpolate_weights_barycentric


def mesh_eps(mesh) -> float:
    diag = mesh.bbox_diagonal()
    return EPS_REL * (diag if diag > 0 else 1.0)


class VertexPool:
    """New vertices created by one operation, indexed from ``mesh.vertex_count``.

    ``add`` is keyed so that a point shared by several faces (an edge
    crossing, a midpoint) is created once.
    """

    def __init__(self, mesh):
        self.mesh = mesh
        self.base = mesh.vertex_count
        self.positions: list = []
        self.weights: list = []
        self.uvs: list = []
        self.keys: dict = {}

    def __len__(self):
        return len(self.positions)

    def add(self, key, position, weights=None, uv=None) -> int:
        if key is not None and key in self.keys:
            return self.keys[key]
        idx = self.base + len(self.positions)
        self.positions.append(np.asarray(position, dtype=float))
        self.weights.append(weights)
        self.uvs.append(None if uv is None else tuple(float(x) for x in uv))
        if key is not None:
            self.keys[key] = idx
        return idx

    def position(self, idx):
        if idx < self.base:
            return self.mesh.positions[idx]
        return self.positions[idx - self.base]

    def weight(self, idx):
        if self.mesh.weights is None:
            return None
        if idx < self.base:
            return self.mesh.weights[idx]
        return self.weights[idx - self.base]

    def uv(self, idx):
        if self.mesh.uvs is None:
            return None
        if idx < self.base:
            return self.mesh.uvs[idx]
        return self.uvs[idx - self.base]

    def lerp_attrs(self, a: int, b: int, t: float):
        """Weights and UV of the point at ``t`` along ``a -> b``."""
        w = None
        if self.mesh.weights is not None:
            w = interpolate_weights(self.weight(a), self.weight(b), t)
        uv = None
        if self.mesh.uvs is not None:
            uv = (1.0 - t) * np.asarray(self.uv(a)) + t * np.asarray(self.uv(b))
        return w, uv

    def bary_attrs(self, tri, bary):
        w = None
        if self.mesh.weights is not None:
            w = interpolate_weights_barycentric(*(self.weight(i) for i in tri), bary)
        uv = None
        if self.mesh.uvs is not None:
            uv = sum(c * np.asarray(self.uv(i)) for c, i in zip(bary, tri))
        return w, uv

    def copy_attrs(self, idx):
        return self.weight(idx), self.uv(idx)


def build_delta(pool: VertexPool, removed_faces, added_faces, maps, keep=None) -> tuple[MeshDelta, dict]:
    """Assemble a delta, dropping pool vertices no added face uses and renumbering the rest.

    Args:
        keep: extra pool indices to retain even if unreferenced.
    """
    removed_faces = sorted(set(int(f) for f in removed_faces))
    used = set()
    for tri in added_faces:
        used.update(tri)
    if keep:
        used.update(keep)
    base = pool.base
    renum = {}
    added_vertices = []
    for k in range(len(pool)):
        old = base + k
        if old in used:
            new = base + len(added_vertices)
            renum[old] = new
            added_vertices.append(AddedVertex(new, pool.positions[k], pool.weights[k], pool.uvs[k]))
    faces = tuple(tuple(renum.get(i, i) for i in tri) for tri in added_faces)
    orphans = orphaned_vertices(maps, removed_faces, faces)
    return MeshDelta(tuple(added_vertices), tuple(removed_faces), faces, tuple(orphans)), renum


def orphaned_vertices(maps, removed_faces, added_faces) -> list[int]:
    removed = set(removed_faces)
    candidates = set()
    for f in removed:
        candidates.update(maps.faces[f])
    for tri in added_faces:
        candidates.difference_update(tri)
    out = []
    for v in sorted(candidates):
        if all(f in removed for f in maps.faces_of_vertex(v)):
            out.append(v)
    return out


def split_quad(q, positions):
    """Two triangles for quad ``q`` (in order), split along the shorter diagonal."""
    p = [positions(i) for i in q]
    d02 = float(np.sum((p[0] - p[2]) ** 2))
    d13 = float(np.sum((p[1] - p[3]) ** 2))
    if d13 < d02:
        return [(q[1], q[2], q[3]), (q[1], q[3], q[0])]
    return [(q[0], q[1], q[2]), (q[0], q[2], q[3])]


def triangulate_convex(poly, positions, normal, eps_area=0.0):
    """Ear-clip a convex planar polygon that may contain collinear points.

    Each step removes the strictly convex corner whose ear has the largest
    smallest angle (ties: earliest position).  An ear whose closing diagonal
    runs through another vertex is skipped, since clipping it would leave a
    flat remainder and an unmatched edge split.
    """
    poly = list(poly)
    tris = []
    n = np.asarray(normal, dtype=float)
    while len(poly) > 3:
        best, best_q = None, -1.0
        m = len(poly)
        for i in range(m):
            a, b, c = poly[i - 1], poly[i], poly[(i + 1) % m]
            pa, pb, pc = positions(a), positions(b), positions(c)
            if float(np.cross(pb - pa, pc - pb) @ n) <= eps_area:
                continue
            if _diagonal_blocked(pa, pc, [positions(poly[j]) for j in range(m)
                                          if j not in ((i - 1) % m, i, (i + 1) % m)]):
                continue
            q = _min_angle_cos_free(pa, pb, pc)
            if q > best_q:
                best, best_q = i, q
        if best is None:
            return tris
        m = len(poly)
        tris.append((poly[best - 1], poly[best], poly[(best + 1) % m]))
        del poly[best]
    if len(poly) == 3:
        pa, pb, pc = (positions(i) for i in poly)
        if float(np.cross(pb - pa, pc - pb) @ n) > eps_area:
            tris.append(tuple(poly))
    return tris


def _diagonal_blocked(pa, pc, others) -> bool:
    d = pc - pa
    dd = float(d @ d)
    if dd == 0.0:
        return True
    for p in others:
        t = float((p - pa) @ d) / dd
        if 0.0 < t < 1.0 and float(np.sum((pa + t * d - p) ** 2)) <= 1e-24 * dd:
            return True
    return False


def _min_angle_cos_free(pa, pb, pc):
    """Quality score: twice the area over the sum of squared edge lengths."""
    area2 = float(np.linalg.norm(np.cross(pb - pa, pc - pa)))
    s = float(np.sum((pb - pa) ** 2) + np.sum((pc - pb) ** 2) + np.sum((pa - pc) ** 2))
    return area2 / s if s > 0 else 0.0


def face_normal(p0, p1, p2):
    n = np.cross(p1 - p0, p2 - p0)
    length = np.linalg.norm(n)
    return n / length if length > 0 else n
