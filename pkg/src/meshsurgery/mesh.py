"""Skinned triangle mesh, duplicate-vertex welding and summary statistics."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import ConsistencyError
from .skinning import validate_weights

MERGE_TOL_REL = 1e-6


def _frozen(a, dtype, shape_tail):
    a = np.array(a, dtype=dtype, copy=True).reshape((-1,) + shape_tail)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SkinnedMesh:
    """Indexed triangle mesh with optional UVs and sparse per-vertex bone weights.

    Arrays are read-only; every operation returns a new mesh.  ``torn`` holds
    the vertex ids lying on tear seams so a second tear over the same seam
    can be refused.
    """

    positions: np.ndarray
    faces: np.ndarray
    uvs: Optional[np.ndarray] = None
    weights: Optional[tuple] = None
    bone_count: int = 0
    torn: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "positions", _frozen(self.positions, np.float64, (3,)))
        object.__setattr__(self, "faces", _frozen(self.faces, np.int64, (3,)))
        if self.uvs is not None:
            object.__setattr__(self, "uvs", _frozen(self.uvs, np.float64, (2,)))
        if self.weights is not None:
            object.__setattr__(self, "weights", tuple(tuple(ws) for ws in self.weights))
        object.__setattr__(self, "torn", frozenset(self.torn))

    @property
    def vertex_count(self) -> int:
        return len(self.positions)

    @property
    def face_count(self) -> int:
        return len(self.faces)

    @classmethod
    def empty(cls) -> "SkinnedMesh":
        return cls(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))

    def validate(self) -> "SkinnedMesh":
        """Check the structural invariants; raise ConsistencyError on the first violation."""
        n = self.vertex_count
        if self.faces.size:
            bad = np.flatnonzero((self.faces < 0).any(1) | (self.faces >= n).any(1))
            if len(bad):
                f = int(bad[0])
                raise ConsistencyError(f"face {f} references a vertex outside [0, {n})", index=f)
            a, b, c = self.faces.T
            bad = np.flatnonzero((a == b) | (b == c) | (a == c))
            if len(bad):
                raise ConsistencyError(f"face {int(bad[0])} is degenerate", index=int(bad[0]))
        if self.uvs is not None and len(self.uvs) != n:
            raise ConsistencyError("uv count differs from vertex count")
        if self.weights is not None:
            if len(self.weights) != n:
                raise ConsistencyError("weight row count differs from vertex count")
            for i, ws in enumerate(self.weights):
                try:
                    validate_weights(ws, self.bone_count)
                except ConsistencyError as exc:
                    raise ConsistencyError(f"vertex {i}: {exc}", index=i) from None
        return self

    def bbox_diagonal(self) -> float:
        if not self.vertex_count:
            return 0.0
        return float(np.linalg.norm(self.positions.max(0) - self.positions.min(0)))

    def face_areas(self) -> np.ndarray:
        return triangle_areas(self.positions, self.faces)

    def area(self) -> float:
        return float(self.face_areas().sum())

    def referenced(self) -> np.ndarray:
        used = np.zeros(self.vertex_count, dtype=bool)
        used[self.faces.ravel()] = True
        return used

    def apply_delta(self, delta) -> "SkinnedMesh":
        """Patch the mesh with a :class:`~meshsurgery.adjacency.MeshDelta`.

        New faces first reuse the slots of removed faces (ascending), extra new
        faces are appended, and surplus holes are filled by moving the last
        face down.  :meth:`AdjacencyMaps.apply_delta` mirrors this exactly.
        """
        delta.validate(self.vertex_count, self.face_count)
        positions = self.positions
        uvs = self.uvs
        weights = self.weights
        if delta.added_vertices:
            positions = np.vstack([positions, [v.position for v in delta.added_vertices]])
            if uvs is not None:
                uvs = np.vstack([uvs, [v.uv if v.uv is not None else (0.0, 0.0) for v in delta.added_vertices]])
            if weights is not None:
                weights = weights + tuple(v.weights for v in delta.added_vertices)
        faces = patch_face_array(self.faces, delta.removed_faces, delta.added_faces)
        return replace(self, positions=positions, faces=faces, uvs=uvs, weights=weights)

    def with_torn(self, vertex_ids) -> "SkinnedMesh":
        return replace(self, torn=self.torn | frozenset(int(v) for v in vertex_ids))


def patch_face_array(faces: np.ndarray, removed, added) -> np.ndarray:
    removed = sorted(int(f) for f in removed)
    added = np.asarray(added, dtype=np.int64).reshape(-1, 3)
    out = np.array(faces, dtype=np.int64, copy=True).reshape(-1, 3)
    k = min(len(removed), len(added))
    if k:
        out[removed[:k]] = added[:k]
    if len(added) > k:
        out = np.vstack([out, added[k:]])
    n = len(out)
    for hole in reversed(removed[k:]):
        last = n - 1
        if hole != last:
            out[hole] = out[last]
        n -= 1
    return out[:n]


def triangle_areas(positions: np.ndarray, faces: np.ndarray) -> np.ndarray:
    if len(faces) == 0:
        return np.zeros(0)
    p = positions[faces]
    return 0.5 * np.linalg.norm(np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]), axis=1)


def face_components(faces: np.ndarray, n_vertices: int) -> tuple[int, np.ndarray]:
    """Label faces by edge-connected component.

    Labels are renumbered so components appear in order of their smallest face id.
    """
    n_faces = len(faces)
    if n_faces == 0:
        return 0, np.zeros(0, dtype=np.int64)
    edges = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
    edges.sort(axis=1)
    fid = np.tile(np.arange(n_faces), 3)
    key = edges[:, 0] * np.int64(n_vertices + 1) + edges[:, 1]
    order = np.argsort(key, kind="stable")
    key, fid = key[order], fid[order]
    same = key[1:] == key[:-1]
    a, b = fid[:-1][same], fid[1:][same]
    graph = coo_matrix((np.ones(len(a)), (a, b)), shape=(n_faces, n_faces))
    n_comp, labels = connected_components(graph, directed=False)
    first = np.full(n_comp, n_faces)
    np.minimum.at(first, labels, np.arange(n_faces))
    rank = np.empty(n_comp, dtype=np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(n_comp)
    return int(n_comp), rank[labels]


@dataclass(frozen=True)
class MeshStats:
    vertex_count: int
    face_count: int
    edge_count: int
    boundary_edge_count: int
    connected_components: int
    total_area: float

    @property
    def euler_characteristic(self) -> int:
        return self.vertex_count - self.edge_count + self.face_count

    def as_dict(self) -> dict:
        return {
            "vertex_count": self.vertex_count,
            "face_count": self.face_count,
            "edge_count": self.edge_count,
            "boundary_edge_count": self.boundary_edge_count,
            "connected_components": self.connected_components,
            "total_area": self.total_area,
        }


def mesh_stats(mesh: SkinnedMesh) -> MeshStats:
    """Counts recomputed from scratch.  Vertices not used by any face still count."""
    faces = mesh.faces
    if len(faces):
        edges = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
        edges.sort(axis=1)
        _, counts = np.unique(edges, axis=0, return_counts=True)
        n_edges, n_boundary = len(counts), int((counts == 1).sum())
    else:
        n_edges = n_boundary = 0
    n_comp, _ = face_components(faces, mesh.vertex_count)
    return MeshStats(
        vertex_count=mesh.vertex_count,
        face_count=mesh.face_count,
        edge_count=int(n_edges),
        boundary_edge_count=n_boundary,
        connected_components=n_comp,
        total_area=mesh.area(),
    )


def default_merge_tol(mesh: SkinnedMesh) -> float:
    return MERGE_TOL_REL * mesh.bbox_diagonal()


def remove_duplicates(mesh: SkinnedMesh, tol: Optional[float] = None) -> tuple[SkinnedMesh, np.ndarray]:
    """Weld vertices closer than ``tol`` (default: 1e-6 of the bbox diagonal).

    Vertices are visited in index order; each one either maps onto the
    lowest-index survivor within ``tol`` or becomes a survivor itself.  A
    survivor keeps its own UV and weights.  Faces that collapse are dropped.

    Returns:
        The welded mesh and an ``old index -> new index`` array.
    """
    if tol is None:
        tol = default_merge_tol(mesh)
    if tol < 0:
        raise ValueError("tol must be >= 0")
    n = mesh.vertex_count
    if n == 0:
        return mesh, np.zeros(0, dtype=np.int64)
    pos = mesh.positions
    target = np.empty(n, dtype=np.int64)
    survivors = []
    if tol == 0:
        seen: dict = {}
        for i, key in enumerate(map(tuple, pos.tolist())):
            j = seen.setdefault(key, i)
            target[i] = j
            if j == i:
                survivors.append(i)
    else:
        cells = np.floor(pos / tol).astype(np.int64)
        grid: dict = {}
        offsets = [(dx, dy, dz) for dx in (-1, 0, 1) for dy in (-1, 0, 1) for dz in (-1, 0, 1)]
        tol2 = tol * tol
        pl = pos.tolist()
        for i, (cx, cy, cz) in enumerate(cells.tolist()):
            px, py, pz = pl[i]
            best = -1
            for dx, dy, dz in offsets:
                for j in grid.get((cx + dx, cy + dy, cz + dz), ()):
                    qx, qy, qz = pl[j]
                    if (px - qx) ** 2 + (py - qy) ** 2 + (pz - qz) ** 2 <= tol2 and (best < 0 or j < best):
                        best = j
            if best >= 0:
                target[i] = best
            else:
                target[i] = i
                survivors.append(i)
                grid.setdefault((cx, cy, cz), []).append(i)
    survivors = np.asarray(survivors, dtype=np.int64)
    new_index = np.full(n, -1, dtype=np.int64)
    new_index[survivors] = np.arange(len(survivors))
    remap = new_index[target]
    faces = remap[mesh.faces] if len(mesh.faces) else mesh.faces
    if len(faces):
        a, b, c = faces.T
        faces = faces[(a != b) & (b != c) & (a != c)]
    uvs = mesh.uvs[survivors] if mesh.uvs is not None else None
    weights = tuple(mesh.weights[i] for i in survivors) if mesh.weights is not None else None
    torn = frozenset(int(remap[v]) for v in mesh.torn)
    return SkinnedMesh(pos[survivors], faces, uvs, weights, mesh.bone_count, torn), remap


def submesh(mesh: SkinnedMesh, face_ids) -> SkinnedMesh:
    """Extract the given faces into a standalone, compacted mesh."""
    face_ids = np.asarray(face_ids, dtype=np.int64)
    faces = mesh.faces[face_ids]
    used = np.unique(faces.ravel())
    new_index = np.full(mesh.vertex_count, -1, dtype=np.int64)
    new_index[used] = np.arange(len(used))
    return SkinnedMesh(
        mesh.positions[used],
        new_index[faces],
        mesh.uvs[used] if mesh.uvs is not None else None,
        tuple(mesh.weights[i] for i in used) if mesh.weights is not None else None,
        mesh.bone_count,
        frozenset(int(new_index[v]) for v in mesh.torn if new_index[v] >= 0),
    )


def compact(mesh: SkinnedMesh) -> tuple[SkinnedMesh, np.ndarray]:
    """Drop vertices no face references.  Returns the mesh and an old->new map (-1 = dropped)."""
    used = np.flatnonzero(mesh.referenced())
    new_index = np.full(mesh.vertex_count, -1, dtype=np.int64)
    new_index[used] = np.arange(len(used))
    out = SkinnedMesh(
        mesh.positions[used],
        new_index[mesh.faces] if len(mesh.faces) else mesh.faces,
        mesh.uvs[used] if mesh.uvs is not None else None,
        tuple(mesh.weights[i] for i in used) if mesh.weights is not None else None,
        mesh.bone_count,
        frozenset(int(new_index[v]) for v in mesh.torn if new_index[v] >= 0),
    )
    return out, new_index


def meshes_equal(a: SkinnedMesh, b: SkinnedMesh, atol: float = 0.0) -> bool:
    if a.positions.shape != b.positions.shape or not np.array_equal(a.faces, b.faces):
        return False
    if not np.allclose(a.positions, b.positions, rtol=0, atol=atol):
        return False
    if (a.uvs is None) != (b.uvs is None) or (a.uvs is not None and not np.allclose(a.uvs, b.uvs, rtol=0, atol=atol)):
        return False
    if (a.weights is None) != (b.weights is None):
        return False
    if a.weights is not None:
        if a.bone_count != b.bone_count:
            return False
        for wa, wb in zip(a.weights, b.weights):
            if len(wa) != len(wb):
                return False
            for (ba, xa), (bb, xb) in zip(wa, wb):
                if ba != bb or abs(xa - xb) > atol:
                    return False
    return True
