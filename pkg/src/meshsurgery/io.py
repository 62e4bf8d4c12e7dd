"""Wavefront OBJ reading/writing plus the skinning-weights sidecar.

Weights sidecar grammar (``#`` starts a comment, blank lines ignored)::

    bones <bone_count>
    vertices <vertex_count>
    <vertex> <bone> <weight> [<bone> <weight> ...]      # one row per vertex

Vertex indices in the sidecar are 0-based, matching the in-memory mesh.
``save_mesh`` writes the sidecar next to the OBJ as ``<stem>.weights`` and
``load_mesh`` picks it up from there when no explicit path is given.
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from .errors import ConsistencyError, FormatError
from .mesh import SkinnedMesh
from .skinning import validate_weights

FLOAT_FMT = "{:.17g}"


def weights_path_for(path) -> Path:
    return Path(path).with_suffix(".weights")


def _parse_index(token, count):
    """OBJ index (1-based, or negative counting back from the end) to 0-based."""
    i = int(token)
    if i < 0:
        i = count + i
    else:
        i -= 1
    return i


def read_obj(path):
    positions, texcoords, faces, face_tex = [], [], [], []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            tag = parts[0]
            try:
                if tag == "v":
                    if len(parts) < 4:
                        raise FormatError("vertex needs 3 coordinates", path, lineno)
                    positions.append([float(x) for x in parts[1:4]])
                elif tag == "vt":
                    if len(parts) < 3:
                        raise FormatError("texture coordinate needs 2 values", path, lineno)
                    texcoords.append([float(x) for x in parts[1:3]])
                elif tag == "f":
                    if len(parts) != 4:
                        raise FormatError(f"only triangles are supported, got {len(parts) - 1} corners", path, lineno)
                    vi, ti = [], []
                    for tok in parts[1:]:
                        fields = tok.split("/")
                        vi.append(_parse_index(fields[0], len(positions)))
                        if len(fields) > 1 and fields[1]:
                            ti.append(_parse_index(fields[1], len(texcoords)))
                    faces.append(vi)
                    face_tex.append(ti if len(ti) == 3 else None)
                # normals, groups, materials, smoothing: ignored
            except ValueError as exc:
                raise FormatError(f"cannot parse '{tag}' line: {exc}", path, lineno) from None
    return positions, texcoords, faces, face_tex


def load_weights(path, n_vertices: int):
    bone_count = None
    declared = None
    rows: dict = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            try:
                if parts[0] == "bones":
                    bone_count = int(parts[1])
                    continue
                if parts[0] == "vertices":
                    declared = int(parts[1])
                    continue
                if bone_count is None:
                    raise FormatError("weight row before 'bones' header", path, lineno)
                if len(parts) < 3 or len(parts) % 2 == 0:
                    raise FormatError("weight row must be: vertex (bone weight)+", path, lineno)
                v = int(parts[0])
                pairs = [(int(parts[i]), float(parts[i + 1])) for i in range(1, len(parts), 2)]
            except (ValueError, IndexError) as exc:
                raise FormatError(f"cannot parse weights line: {exc}", path, lineno) from None
            if not 0 <= v < n_vertices:
                raise ConsistencyError(f"{path}:{lineno}: weights for missing vertex {v}", index=v)
            for b, _ in pairs:
                if not 0 <= b < bone_count:
                    raise ConsistencyError(f"{path}:{lineno}: bone id {b} outside [0, {bone_count})", index=b)
            rows[v] = tuple(sorted(pairs))
    if bone_count is None:
        raise FormatError("missing 'bones' header", path)
    if declared is not None and declared != n_vertices:
        raise ConsistencyError(f"weights file declares {declared} vertices, mesh has {n_vertices}")
    missing = [v for v in range(n_vertices) if v not in rows]
    if missing:
        raise ConsistencyError(f"no weights for vertex {missing[0]}", index=missing[0])
    weights = tuple(rows[v] for v in range(n_vertices))
    for v, ws in enumerate(weights):
        try:
            validate_weights(ws, bone_count)
        except ConsistencyError as exc:
            raise ConsistencyError(f"{path}: vertex {v}: {exc}", index=v) from None
    return weights, bone_count


def load_mesh(path, weights_path=None) -> SkinnedMesh:
    """Load an OBJ triangle mesh (and its weights sidecar, if any)."""
    positions, texcoords, faces, face_tex = read_obj(path)
    n = len(positions)
    for fi, tri in enumerate(faces):
        for i in tri:
            if not 0 <= i < n:
                raise ConsistencyError(f"{path}: face {fi} references vertex {i + 1} but only {n} exist", index=fi)
    uvs = None
    if texcoords:
        uvs = np.zeros((n, 2))
        if len(texcoords) == n:
            uvs[:] = texcoords
        for tri, tex in zip(faces, face_tex):
            if tex is None:
                continue
            for vi, ti in zip(tri, tex):
                if not 0 <= ti < len(texcoords):
                    raise ConsistencyError(f"{path}: texture index {ti + 1} out of range", index=ti)
                uvs[vi] = texcoords[ti]
    weights, bone_count = None, 0
    if weights_path is None and weights_path_for(path).exists():
        weights_path = weights_path_for(path)
    if weights_path is not None:
        weights, bone_count = load_weights(weights_path, n)
    mesh = SkinnedMesh(
        np.asarray(positions, dtype=float).reshape(-1, 3),
        np.asarray(faces, dtype=np.int64).reshape(-1, 3),
        uvs, weights, bone_count,
    )
    return mesh.validate()


def obj_text(mesh: SkinnedMesh) -> str:
    f = FLOAT_FMT.format
    lines = [f"# meshsurgery obj: {mesh.vertex_count} vertices, {mesh.face_count} faces"]
    lines.extend(f"v {f(x)} {f(y)} {f(z)}" for x, y, z in mesh.positions.tolist())
    if mesh.uvs is not None:
        lines.extend(f"vt {f(u)} {f(v)}" for u, v in mesh.uvs.tolist())
        lines.extend(f"f {a}/{a} {b}/{b} {c}/{c}" for a, b, c in (mesh.faces + 1).tolist())
    else:
        lines.extend(f"f {a} {b} {c}" for a, b, c in (mesh.faces + 1).tolist())
    return "\n".join(lines) + "\n"


def weights_text(mesh: SkinnedMesh) -> str:
    f = FLOAT_FMT.format
    lines = [f"bones {mesh.bone_count}", f"vertices {mesh.vertex_count}"]
    for v, ws in enumerate(mesh.weights):
        lines.append(f"{v} " + " ".join(f"{b} {f(w)}" for b, w in ws))
    return "\n".join(lines) + "\n"


def save_mesh(mesh: SkinnedMesh, path) -> None:
    """Write ``mesh`` as OBJ; weights (if any) go to the ``.weights`` sidecar."""
    path = Path(path)
    text = obj_text(mesh)
    with open(path, "w") as fh:
        fh.write(text)
    sidecar = weights_path_for(path)
    if mesh.weights is not None:
        with open(sidecar, "w") as fh:
            fh.write(weights_text(mesh))
    elif sidecar.exists():
        os.remove(sidecar)
