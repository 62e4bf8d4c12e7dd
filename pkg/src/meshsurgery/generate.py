"""Procedural test meshes with known area, topology and plane-crossing counts."""

from __future__ import annotations

import numpy as np

from .mesh import SkinnedMesh
from .skinning import normalize_weights


def ramp_weights(positions, axis: int = 0):
    """Two-bone weights blending linearly from bone 0 to bone 1 along ``axis``."""
    x = np.asarray(positions, dtype=float)[:, axis]
    lo, hi = (x.min(), x.max()) if len(x) else (0.0, 1.0)
    span = hi - lo if hi > lo else 1.0
    t = np.clip((x - lo) / span, 0.0, 1.0)
    return tuple(normalize_weights([(0, 1.0 - s), (1, s)]) for s in t.tolist())


def _finish(positions, faces, uvs, axis):
    return SkinnedMesh(positions, faces, uvs=uvs, weights=ramp_weights(positions, axis), bone_count=2)


def plate(n: int = 1, size: float = 1.0) -> SkinnedMesh:
    """Square ``[0, size]^2`` at z = 0 split into n x n quads, two triangles each."""
    if n < 1:
        raise ValueError("plate resolution must be >= 1")
    g = np.linspace(0.0, size, n + 1)
    xx, yy = np.meshgrid(g, g)
    positions = np.stack([xx.ravel(), yy.ravel(), np.zeros(xx.size)], 1)
    idx = np.arange((n + 1) ** 2).reshape(n + 1, n + 1)
    a, b = idx[:-1, :-1].ravel(), idx[:-1, 1:].ravel()
    c, d = idx[1:, 1:].ravel(), idx[1:, :-1].ravel()
    faces = np.concatenate([np.stack([a, b, c], 1), np.stack([a, c, d], 1)])
    return _finish(positions, faces, positions[:, :2] / size, 0)


def cylinder(n: int = 16, m: int = 4, radius: float = 1.0, height: float = 1.0) -> SkinnedMesh:
    """Open tube around the z axis: ``n`` segments per ring, ``m`` bands."""
    if n < 3 or m < 1:
        raise ValueError("cylinder needs n >= 3 and m >= 1")
    ang = 2.0 * np.pi * np.arange(n) / n
    z = height * np.arange(m + 1) / m
    positions = np.stack([np.tile(radius * np.cos(ang), m + 1), np.tile(radius * np.sin(ang), m + 1),
                          np.repeat(z, n)], 1)
    j, i = np.meshgrid(np.arange(m), np.arange(n), indexing="ij")
    i2 = (i + 1) % n
    a, b = (j * n + i).ravel(), (j * n + i2).ravel()
    c, d = ((j + 1) * n + i2).ravel(), ((j + 1) * n + i).ravel()
    faces = np.concatenate([np.stack([a, b, c], 1), np.stack([a, c, d], 1)])
    uvs = np.stack([np.tile(np.arange(n) / n, m + 1), np.repeat(np.arange(m + 1) / m, n)], 1)
    return _finish(positions, faces, uvs, 2)


def cylinder_mid_plane_height(m: int, height: float = 1.0) -> float:
    """Height halfway between the two middle rings, crossing every segment of one band."""
    return height * (m // 2 + 0.5) / m


def sphere(n: int = 8, radius: float = 1.0, center=(0.0, 0.0, 0.0)) -> SkinnedMesh:
    """Closed UV sphere with ``n`` latitude bands and ``2n`` segments: ``4n(n-1)`` faces."""
    if n < 2:
        raise ValueError("sphere needs n >= 2")
    seg = 2 * n
    theta = np.pi * np.arange(1, n) / n
    phi = 2.0 * np.pi * np.arange(seg) / seg
    st, ct = np.repeat(np.sin(theta), seg), np.repeat(np.cos(theta), seg)
    ring = np.stack([st * np.tile(np.cos(phi), n - 1), st * np.tile(np.sin(phi), n - 1), ct], 1)
    positions = np.concatenate([[[0.0, 0.0, 1.0]], ring, [[0.0, 0.0, -1.0]]]) * radius + np.asarray(center)
    top, bottom = 0, 1 + (n - 1) * seg
    i = np.arange(seg)
    i2 = (i + 1) % seg
    parts = [np.stack([np.full(seg, top), 1 + i, 1 + i2], 1)]
    for r in range(n - 2):
        a, b = 1 + r * seg + i, 1 + r * seg + i2
        c, d = 1 + (r + 1) * seg + i2, 1 + (r + 1) * seg + i
        parts += [np.stack([a, d, c], 1), np.stack([a, c, b], 1)]
    last = 1 + (n - 2) * seg
    parts.append(np.stack([np.full(seg, bottom), last + i2, last + i], 1))
    faces = np.concatenate(parts)
    uvs = np.concatenate([[[0.0, 0.0]], np.stack([np.tile(phi / (2 * np.pi), n - 1), np.repeat(theta / np.pi, seg)], 1),
                          [[0.0, 1.0]]])
    return _finish(positions, faces, uvs, 2)


def merge(meshes) -> SkinnedMesh:
    """Disjoint union, vertex and face ids offset in order."""
    positions, faces, uvs, weights = [], [], [], []
    base = 0
    for m in meshes:
        positions.append(m.positions)
        faces.append(m.faces + base)
        uvs.append(m.uvs if m.uvs is not None else np.zeros((m.vertex_count, 2)))
        weights.extend(m.weights or [((0, 1.0),)] * m.vertex_count)
        base += m.vertex_count
    bones = max((m.bone_count for m in meshes), default=0) or 1
    return SkinnedMesh(np.concatenate(positions), np.concatenate(faces), uvs=np.concatenate(uvs),
                       weights=weights, bone_count=bones)


def particle_field(count: int, spacing: float = 2.0, blob_radius: float = 0.1, blob_resolution: int = 4) -> SkinnedMesh:
    """``count`` small spheres on a grid, far enough apart that each forms one particle
    for any cluster range between ``2 * blob_radius`` and ``spacing - 2 * blob_radius``."""
    side = int(np.ceil(np.sqrt(count)))
    blob = sphere(blob_resolution, blob_radius)
    blobs = []
    for k in range(count):
        offset = np.array([k % side, k // side, 0.0]) * spacing
        blobs.append(SkinnedMesh(blob.positions + offset, blob.faces, uvs=blob.uvs, weights=blob.weights,
                                 bone_count=blob.bone_count))
    return merge(blobs)


def tetrahedron() -> SkinnedMesh:
    positions = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    faces = np.array([[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]])
    return _finish(positions, faces, positions[:, :2], 2)


def triangle() -> SkinnedMesh:
    positions = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    return _finish(positions, np.array([[0, 1, 2]]), positions[:, :2], 0)


GENERATORS = {
    "plate": plate,
    "cylinder": cylinder,
    "sphere": sphere,
    "tetrahedron": tetrahedron,
    "triangle": triangle,
    "particles": particle_field,
}


def generate_test_mesh(kind: str, *params) -> SkinnedMesh:
    """Build a named test mesh, e.g. ``generate_test_mesh("cylinder", 16, 4)``."""
    try:
        fn = GENERATORS[kind]
    except KeyError:
        raise ValueError(f"unknown mesh kind {kind!r}; choose from {sorted(GENERATORS)}") from None
    return fn(*params)
