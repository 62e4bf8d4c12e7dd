"""Plane cut: split crossing faces, decouple the two sides, report per-component submeshes."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .. import _parallel
from ..adjacency import MeshDelta
from ..mesh import SkinnedMesh, face_components, submesh
from ..predicates import Plane
from ._common import VertexPool, build_delta, mesh_eps, split_quad


@dataclass
class CutReport:
    """Result of :func:`cut`.

    ``mesh`` is the patched whole mesh (all pieces, sides decoupled) that the
    adjacency maps now describe; ``submeshes`` are its edge-connected pieces
    extracted as standalone meshes, ordered by their lowest face id in
    ``mesh``.  ``delta_per_submesh`` partitions ``delta`` by piece, still in
    ``mesh``'s indexing.  ``vertex_sides`` gives +1/-1 per vertex of ``mesh``
    (0 for vertices no face uses).
    """

    plane: Plane
    intersection_points: np.ndarray
    submeshes: list
    elapsed: float
    mesh: SkinnedMesh
    delta: MeshDelta = field(default_factory=MeshDelta)
    delta_per_submesh: list = field(default_factory=list)
    vertex_sides: np.ndarray = None
    submesh_faces: list = field(default_factory=list)

    @property
    def intersection_count(self) -> int:
        return len(self.intersection_points)


def _signed_sides(mesh, plane, eps):
    def chunk(start, stop):
        s = plane.signed_distance(mesh.positions[start:stop])
        out = np.zeros(len(s), dtype=np.int8)
        out[s > eps] = 1
        out[s < -eps] = -1
        return s, out

    parts = _parallel.map_chunks(chunk, mesh.vertex_count, min_chunk=512)
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def cut(mesh: SkinnedMesh, maps, plane: Plane, eps: float | None = None) -> CutReport:
    """Cut ``mesh`` with ``plane``; ``maps`` is patched in place.

    Vertices inside the ``eps`` band count as on-plane and are kept by the
    positive side; the negative side gets its own copy of them.  Strict
    edge crossings produce one vertex per side.  Cross-sections stay open.
    """
    t0 = time.perf_counter()
    if mesh.face_count == 0:
        return CutReport(plane, np.zeros((0, 3)), [], time.perf_counter() - t0, mesh,
                         vertex_sides=np.zeros(mesh.vertex_count, dtype=np.int8))
    if eps is None:
        eps = mesh_eps(mesh)
    dist, sides = _signed_sides(mesh, plane, eps)
    faces = mesh.faces
    fs = sides[faces]
    strict_p = (fs == 1).any(1)
    strict_n = (fs == -1).any(1)
    on = (fs == 0).any(1)
    split = strict_p & strict_n
    remap = strict_n & ~strict_p & on
    affected = np.flatnonzero(split | remap)
    if len(affected) == 0:
        vs = np.where(sides >= 0, 1, -1).astype(np.int8)
        vs[~mesh.referenced()] = 0
        return CutReport(plane, np.zeros((0, 3)), [mesh], time.perf_counter() - t0, mesh,
                         vertex_sides=vs, delta_per_submesh=[MeshDelta()],
                         submesh_faces=[np.arange(mesh.face_count)])

    # strict crossing edges, canonical (lo, hi) and sorted
    sf = faces[split]
    ea = np.concatenate([sf[:, 0], sf[:, 1], sf[:, 2]])
    eb = np.concatenate([sf[:, 1], sf[:, 2], sf[:, 0]])
    crossing = sides[ea].astype(np.int16) * sides[eb] == -1
    lo = np.minimum(ea[crossing], eb[crossing])
    hi = np.maximum(ea[crossing], eb[crossing])
    edges = np.unique(np.stack([lo, hi], 1), axis=0) if len(lo) else np.zeros((0, 2), dtype=np.int64)
    on_vertices = np.unique(faces[affected][fs[affected] == 0])

    pool = VertexPool(mesh)
    pos = mesh.positions
    p_copy, n_copy, side_of_new = {}, {}, {}
    points = []
    for a, b in edges.tolist():
        t = dist[a] / (dist[a] - dist[b])
        x = pos[a] + t * (pos[b] - pos[a])
        w, uv = pool.lerp_attrs(a, b, t)
        p_copy[(a, b)] = pool.add(("p", a, b), x, w, uv)
        n_copy[(a, b)] = pool.add(("n", a, b), x, w, uv)
        side_of_new[p_copy[(a, b)]] = 1
        side_of_new[n_copy[(a, b)]] = -1
        points.append(x)
    for o in on_vertices.tolist():
        w, uv = pool.copy_attrs(o)
        n_copy[o] = pool.add(("n", o), pos[o], w, uv)
        side_of_new[n_copy[o]] = -1
        points.append(pos[o])

    added, origin = [], []
    position = pool.position
    for f in affected.tolist():
        tri = faces[f].tolist()
        st = [int(sides[v]) for v in tri]
        if not split[f]:
            added.append(tuple(n_copy[v] if s == 0 else v for v, s in zip(tri, st)))
            origin.append(f)
            continue
        ppoly, npoly = [], []
        for i in range(3):
            a, b = tri[i], tri[(i + 1) % 3]
            sa, sb = st[i], st[(i + 1) % 3]
            if sa >= 0:
                ppoly.append(a)
            if sa <= 0:
                npoly.append(a if sa < 0 else n_copy[a])
            if sa * sb == -1:
                key = (a, b) if a < b else (b, a)
                ppoly.append(p_copy[key])
                npoly.append(n_copy[key])
        for poly in (ppoly, npoly):
            tris = [tuple(poly)] if len(poly) == 3 else split_quad(poly, position)
            added.extend(tris)
            origin.extend([f] * len(tris))

    delta, renum = build_delta(pool, affected, added, maps)
    new_mesh = mesh.apply_delta(delta)
    maps.apply_delta(delta)

    vertex_sides = np.zeros(new_mesh.vertex_count, dtype=np.int8)
    vertex_sides[: mesh.vertex_count] = np.where(sides >= 0, 1, -1)
    for old, s in side_of_new.items():
        if old in renum:
            vertex_sides[renum[old]] = s
    vertex_sides[~new_mesh.referenced()] = 0

    n_comp, labels = face_components(new_mesh.faces, new_mesh.vertex_count)
    groups = [np.flatnonzero(labels == c) for c in range(n_comp)]
    submeshes = [submesh(new_mesh, g) for g in groups]

    # slot of the j-th added face in the patched mesh (cut never shrinks the face count)
    n_removed = len(delta.removed_faces)
    slots = [delta.removed_faces[j] if j < n_removed else mesh.face_count + j - n_removed
             for j in range(len(delta.added_faces))]
    per = [([], set()) for _ in range(n_comp)]
    for j, slot in enumerate(slots):
        faces_c, origins_c = per[labels[slot]]
        faces_c.append(delta.added_faces[j])
        origins_c.add(origin[j])
    added_by_index = {v.index: v for v in delta.added_vertices}
    delta_per_submesh = []
    for faces_c, origins_c in per:
        used = sorted({i for tri in faces_c for i in tri if i in added_by_index})
        delta_per_submesh.append(MeshDelta(tuple(added_by_index[i] for i in used), tuple(sorted(origins_c)),
                                           tuple(faces_c)))

    return CutReport(
        plane=plane,
        intersection_points=np.asarray(points).reshape(-1, 3),
        submeshes=submeshes,
        elapsed=time.perf_counter() - t0,
        mesh=new_mesh,
        delta=delta,
        delta_per_submesh=delta_per_submesh,
        vertex_sides=vertex_sides,
        submesh_faces=groups,
    )
