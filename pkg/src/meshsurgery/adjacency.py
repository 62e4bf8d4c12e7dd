"""Vertex/face neighbour tables with incremental patching.

The maps are built once after import and afterwards patched in place from
each operation's :class:`MeshDelta`; the patch touches only entries around
the changed faces.  ``build_adjacency(mesh.apply_delta(d))`` and
``build_adjacency(mesh).apply_delta(d)`` are structurally identical.
"""

from __future__ import annotations

from bisect import bisect_left, insort
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from . import _parallel
from .errors import ConsistencyError


class AddedVertex(NamedTuple):
    index: int
    position: np.ndarray
    weights: Optional[tuple] = None
    uv: Optional[tuple] = None


@dataclass(frozen=True)
class MeshDelta:
    """One operation's change set.

    ``removed_vertices`` lists vertices left without faces by the change;
    they stay in the vertex arrays (indices never shift) but leave their
    particles.
    """

    added_vertices: tuple = ()
    removed_faces: tuple = ()
    added_faces: tuple = ()
    removed_vertices: tuple = ()

    def __len__(self):
        return len(self.added_vertices) + len(self.removed_faces) + len(self.added_faces)

    @property
    def is_empty(self) -> bool:
        return len(self) == 0

    def validate(self, n_vertices: int, n_faces: int) -> None:
        for k, v in enumerate(self.added_vertices):
            if v.index != n_vertices + k:
                raise ConsistencyError(f"added vertex has index {v.index}, expected {n_vertices + k}", index=v.index)
        seen = set()
        for f in self.removed_faces:
            if not 0 <= f < n_faces or f in seen:
                raise ConsistencyError(f"removed face {f} does not exist", index=f)
            seen.add(f)
        limit = n_vertices + len(self.added_vertices)
        for tri in self.added_faces:
            if len(set(tri)) != 3 or any(not 0 <= i < limit for i in tri):
                raise ConsistencyError(f"added face {tuple(tri)} is invalid", index=next(iter(tri), None))


def _edges_of(tri):
    a, b, c = tri
    return ((a, b) if a < b else (b, a), (b, c) if b < c else (c, b), (c, a) if c < a else (a, c))


class AdjacencyMaps:
    """Neighbour tables for one mesh.

    Attributes:
        faces: face id -> vertex triple (mirror of the mesh's face array).
        vertex_neighbors: sorted adjacent vertex ids per vertex.
        face_neighbors: sorted edge-adjacent face ids per face.
        edge_to_faces: undirected edge ``(lo, hi)`` -> sorted incident face ids.
        warnings: non-manifold edges seen at build time.
        touched: number of distinct entries modified by the last patch.
    """

    def __init__(self, faces, vertex_neighbors, face_neighbors, edge_to_faces, warnings=None):
        self.faces = faces
        self.vertex_neighbors = vertex_neighbors
        self.face_neighbors = face_neighbors
        self.edge_to_faces = edge_to_faces
        self.warnings = list(warnings or [])
        self.touched = 0

    @property
    def vertex_count(self) -> int:
        return len(self.vertex_neighbors)

    @property
    def face_count(self) -> int:
        return len(self.faces)

    def copy(self) -> "AdjacencyMaps":
        return AdjacencyMaps(
            list(self.faces),
            [list(n) for n in self.vertex_neighbors],
            [list(n) for n in self.face_neighbors],
            {e: list(fs) for e, fs in self.edge_to_faces.items()},
            self.warnings,
        )

    def __eq__(self, other):
        if not isinstance(other, AdjacencyMaps):
            return NotImplemented
        return (self.faces == other.faces and self.vertex_neighbors == other.vertex_neighbors
                and self.face_neighbors == other.face_neighbors and self.edge_to_faces == other.edge_to_faces)

    def faces_of_vertex(self, v: int) -> list[int]:
        out = set()
        for u in self.vertex_neighbors[v]:
            out.update(self.edge_to_faces[(v, u) if v < u else (u, v)])
        return sorted(out)

    def edge_faces(self, a: int, b: int) -> list[int]:
        return self.edge_to_faces.get((a, b) if a < b else (b, a), [])

    def is_boundary_edge(self, a: int, b: int) -> bool:
        return len(self.edge_faces(a, b)) == 1

    def is_boundary_vertex(self, v: int) -> bool:
        return any(self.is_boundary_edge(v, u) for u in self.vertex_neighbors[v])

    # -- patching -------------------------------------------------------

    def _refresh_face(self, f, touched):
        tri = self.faces[f]
        if tri is None:
            return
        nbrs = set()
        for e in _edges_of(tri):
            nbrs.update(self.edge_to_faces.get(e, ()))
        nbrs.discard(f)
        self.face_neighbors[f] = sorted(nbrs)
        touched.add(("f", f))

    def _detach(self, f, touched):
        tri = self.faces[f]
        affected = set()
        for e in _edges_of(tri):
            lst = self.edge_to_faces[e]
            del lst[bisect_left(lst, f)]
            touched.add(("e", e))
            if lst:
                affected.update(lst)
            else:
                del self.edge_to_faces[e]
                a, b = e
                na, nb = self.vertex_neighbors[a], self.vertex_neighbors[b]
                del na[bisect_left(na, b)]
                del nb[bisect_left(nb, a)]
                touched.add(("v", a))
                touched.add(("v", b))
        self.faces[f] = None
        self.face_neighbors[f] = []
        touched.add(("f", f))
        for g in affected:
            self._refresh_face(g, touched)

    def _attach(self, f, tri, touched):
        self.faces[f] = tri
        affected = set()
        for e in _edges_of(tri):
            lst = self.edge_to_faces.get(e)
            if lst is None:
                lst = self.edge_to_faces[e] = []
                a, b = e
                insort(self.vertex_neighbors[a], b)
                insort(self.vertex_neighbors[b], a)
                touched.add(("v", a))
                touched.add(("v", b))
            affected.update(lst)
            insort(lst, f)
            touched.add(("e", e))
        self._refresh_face(f, touched)
        for g in affected:
            self._refresh_face(g, touched)

    def _relocate(self, src, dst, touched):
        # renumber a face; edges and vertex lists keep their shape
        tri = self.faces[src]
        self.faces[dst] = tri
        for e in _edges_of(tri):
            lst = self.edge_to_faces[e]
            del lst[bisect_left(lst, src)]
            insort(lst, dst)
            touched.add(("e", e))
        nbrs = self.face_neighbors[src]
        self.face_neighbors[dst] = nbrs
        touched.add(("f", dst))
        for g in nbrs:
            lst = self.face_neighbors[g]
            del lst[bisect_left(lst, src)]
            insort(lst, dst)
            touched.add(("f", g))

    def apply_delta(self, delta: MeshDelta) -> "AdjacencyMaps":
        """Patch in place (exclusive access required) and return ``self``."""
        delta.validate(self.vertex_count, self.face_count)
        touched: set = set()
        for v in delta.added_vertices:
            self.vertex_neighbors.append([])
            touched.add(("v", v.index))
        removed = sorted(int(f) for f in delta.removed_faces)
        added = [tuple(int(i) for i in tri) for tri in delta.added_faces]
        for f in removed:
            self._detach(f, touched)
        k = min(len(removed), len(added))
        for slot, tri in zip(removed[:k], added[:k]):
            self._attach(slot, tri, touched)
        for tri in added[k:]:
            self.faces.append(None)
            self.face_neighbors.append([])
            self._attach(len(self.faces) - 1, tri, touched)
        for hole in reversed(removed[k:]):
            last = len(self.faces) - 1
            if hole != last:
                self._relocate(last, hole, touched)
            self.faces.pop()
            self.face_neighbors.pop()
        self.touched = len(touched)
        return self


def apply_delta(maps: AdjacencyMaps, delta: MeshDelta) -> AdjacencyMaps:
    return maps.apply_delta(delta)


def _edge_records(faces: np.ndarray):
    def chunk(start, stop):
        f = faces[start:stop]
        edges = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
        edges.sort(axis=1)
        fid = np.tile(np.arange(start, stop), 3)
        return edges, fid

    parts = _parallel.map_chunks(chunk, len(faces))
    edges = np.concatenate([p[0] for p in parts])
    fid = np.concatenate([p[1] for p in parts])
    # sorted reduction makes the result independent of the chunking
    order = np.lexsort((fid, edges[:, 1], edges[:, 0]))
    return edges[order], fid[order]


def build_adjacency(mesh) -> AdjacencyMaps:
    """Populate the neighbour tables from scratch."""
    faces = np.asarray(mesh.faces, dtype=np.int64).reshape(-1, 3)
    n_vertices = mesh.vertex_count
    n_faces = len(faces)
    vertex_neighbors = [[] for _ in range(n_vertices)]
    face_neighbors = [[] for _ in range(n_faces)]
    edge_to_faces: dict = {}
    warnings = []
    if n_faces:
        edges, fid = _edge_records(faces)
        new_group = np.ones(len(edges), dtype=bool)
        new_group[1:] = (edges[1:] != edges[:-1]).any(1)
        starts = np.flatnonzero(new_group)
        uniq = edges[starts]
        groups = np.split(fid, starts[1:])
        keys = list(map(tuple, uniq.tolist()))
        pair_a, pair_b = [], []
        for key, g in zip(keys, groups):
            fl = g.tolist()
            edge_to_faces[key] = fl
            if len(fl) == 2:
                pair_a.append(fl[0])
                pair_b.append(fl[1])
            elif len(fl) > 2:
                warnings.append(f"non-manifold edge {key} shared by {len(fl)} faces")
                for i in range(len(fl)):
                    for j in range(i + 1, len(fl)):
                        pair_a.append(fl[i])
                        pair_b.append(fl[j])
        # vertex neighbours from the unique edge list, both directions
        src = np.concatenate([uniq[:, 0], uniq[:, 1]])
        dst = np.concatenate([uniq[:, 1], uniq[:, 0]])
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        bounds = np.searchsorted(src, np.arange(n_vertices + 1))
        dl = dst.tolist()
        vertex_neighbors = [dl[bounds[v]:bounds[v + 1]] for v in range(n_vertices)]
        if pair_a:
            fa = np.asarray(pair_a + pair_b)
            fb = np.asarray(pair_b + pair_a)
            pairs = np.unique(np.stack([fa, fb], 1), axis=0)
            bounds = np.searchsorted(pairs[:, 0], np.arange(n_faces + 1))
            nl = pairs[:, 1].tolist()
            face_neighbors = [nl[bounds[f]:bounds[f + 1]] for f in range(n_faces)]
    return AdjacencyMaps(list(map(tuple, faces.tolist())), vertex_neighbors, face_neighbors, edge_to_faces, warnings)
