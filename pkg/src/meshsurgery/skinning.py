"""Linear blend skinning and weight transfer onto newly created vertices.

A weight set is a tuple of ``(bone_id, weight)`` pairs sorted by bone id,
e.g. ``((0, 0.25), (3, 0.75))``.  Zero weights are never stored.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConsistencyError, FormatError, MeshSurgeryError

WeightSet = tuple  # tuple[tuple[int, float], ...]

MAX_INFLUENCES = 4
WEIGHT_SUM_TOL = 1e-6


def _finish(acc: dict, k: int) -> WeightSet:
    entries = [(b, w) for b, w in acc.items() if w > 0.0]
    if len(entries) > k:
        # largest weights win, lower bone id breaks ties
        entries.sort(key=lambda e: (-e[1], e[0]))
        entries = entries[:k]
    total = sum(w for _, w in entries)
    if total <= 0.0:
        raise ConsistencyError("weight set has no positive entry")
    entries.sort()
    return tuple((int(b), w / total) for b, w in entries)


def normalize_weights(entries, k: int = MAX_INFLUENCES) -> WeightSet:
    """Merge duplicate bones, drop zeros, prune to ``k`` entries and rescale to sum 1."""
    acc: dict = {}
    for b, w in entries:
        if w < 0:
            raise ConsistencyError(f"negative weight {w} for bone {b}")
        acc[int(b)] = acc.get(int(b), 0.0) + float(w)
    return _finish(acc, k)


def validate_weights(ws: WeightSet, bone_count: int) -> None:
    if not ws:
        raise ConsistencyError("empty weight set")
    total = 0.0
    for b, w in ws:
        if not 0 <= b < bone_count:
            raise ConsistencyError(f"bone id {b} outside [0, {bone_count})", index=b)
        if w < 0:
            raise ConsistencyError(f"negative weight {w} for bone {b}")
        total += w
    if abs(total - 1.0) > WEIGHT_SUM_TOL:
        raise ConsistencyError(f"weights sum to {total!r}, expected 1")


def interpolate_weights(w0: WeightSet, w1: WeightSet, t: float, k: int = MAX_INFLUENCES) -> WeightSet:
    """Weights of a point at parameter ``t`` along the edge from ``w0``'s vertex to ``w1``'s.

    The result is ``(1 - t) * w0 + t * w1`` over the union of both supports,
    pruned to the ``k`` largest influences and renormalized.
    """
    if t == 0.0:
        return tuple(w0)
    if t == 1.0:
        return tuple(w1)
    acc: dict = {}
    for b, w in w0:
        acc[b] = acc.get(b, 0.0) + (1.0 - t) * w
    for b, w in w1:
        acc[b] = acc.get(b, 0.0) + t * w
    return _finish(acc, k)


def interpolate_weights_barycentric(wa: WeightSet, wb: WeightSet, wc: WeightSet,
                                    bary: Sequence[float], k: int = MAX_INFLUENCES) -> WeightSet:
    u, v, w = (float(x) for x in bary)
    if min(u, v, w) < 0 or abs(u + v + w - 1.0) > 1e-9:
        raise ValueError(f"invalid barycentric coordinates {bary!r}")
    acc: dict = {}
    for ws, c in ((wa, u), (wb, v), (wc, w)):
        if c == 0.0:
            continue
        for b, x in ws:
            acc[b] = acc.get(b, 0.0) + c * x
    return _finish(acc, k)


@dataclass(frozen=True)
class Pose:
    """Final per-bone rigid transforms: ``rotations`` (B, 3, 3), ``translations`` (B, 3)."""

    rotations: np.ndarray
    translations: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.rotations, dtype=float).reshape(-1, 3, 3)
        t = np.asarray(self.translations, dtype=float).reshape(-1, 3)
        if len(r) != len(t):
            raise ConsistencyError("rotation and translation counts differ")
        eye = np.eye(3)
        for i, m in enumerate(r):
            if np.abs(m @ m.T - eye).max() > 1e-6 or np.linalg.det(m) < 0:
                raise ConsistencyError(f"bone {i} rotation is not orthonormal", index=i)
        object.__setattr__(self, "rotations", r)
        object.__setattr__(self, "translations", t)

    @property
    def bone_count(self) -> int:
        return len(self.rotations)

    @classmethod
    def identity(cls, bone_count: int) -> "Pose":
        return cls(np.tile(np.eye(3), (bone_count, 1, 1)), np.zeros((bone_count, 3)))

    @classmethod
    def from_quaternions(cls, quats, translations) -> "Pose":
        """Build a pose from unit quaternions given as ``(w, x, y, z)`` rows."""
        q = np.asarray(quats, dtype=float).reshape(-1, 4)
        q = q / np.linalg.norm(q, axis=1, keepdims=True)
        w, x, y, z = q.T
        rot = np.empty((len(q), 3, 3))
        rot[:, 0, 0] = 1 - 2 * (y * y + z * z)
        rot[:, 0, 1] = 2 * (x * y - z * w)
        rot[:, 0, 2] = 2 * (x * z + y * w)
        rot[:, 1, 0] = 2 * (x * y + z * w)
        rot[:, 1, 1] = 1 - 2 * (x * x + z * z)
        rot[:, 1, 2] = 2 * (y * z - x * w)
        rot[:, 2, 0] = 2 * (x * z - y * w)
        rot[:, 2, 1] = 2 * (y * z + x * w)
        rot[:, 2, 2] = 1 - 2 * (x * x + y * y)
        return cls(rot, translations)

    def to_quaternions(self) -> np.ndarray:
        out = np.empty((self.bone_count, 4))
        for i, m in enumerate(self.rotations):
            tr = np.trace(m)
            if tr > 0:
                s = 2.0 * np.sqrt(tr + 1.0)
                out[i] = (0.25 * s, (m[2, 1] - m[1, 2]) / s, (m[0, 2] - m[2, 0]) / s, (m[1, 0] - m[0, 1]) / s)
            else:
                j = int(np.argmax(np.diag(m)))
                a, b = (j + 1) % 3, (j + 2) % 3
                s = 2.0 * np.sqrt(1.0 + m[j, j] - m[a, a] - m[b, b])
                q = np.empty(4)
                q[0] = (m[b, a] - m[a, b]) / s
                q[1 + j] = 0.25 * s
                q[1 + a] = (m[a, j] + m[j, a]) / s
                q[1 + b] = (m[b, j] + m[j, b]) / s
                out[i] = q
        return out


def weight_matrix(weights, n_vertices: int, bone_count: int):
    """Sparse weights flattened into ``(vertex, bone, weight)`` index arrays."""
    rows, cols, vals = [], [], []
    for i, ws in enumerate(weights):
        for b, w in ws:
            rows.append(i)
            cols.append(b)
            vals.append(w)
    return np.asarray(rows, dtype=np.int64), np.asarray(cols, dtype=np.int64), np.asarray(vals, dtype=float)


def apply_pose(mesh, pose: Pose) -> np.ndarray:
    """Skinned positions of every vertex under ``pose``.

    Computed as ``p + sum_b w_b * ((R_b - I) p + t_b)`` which equals the usual
    ``sum_b w_b * (R_b p + t_b)`` for normalized weights and returns the rest
    positions bit-for-bit under the identity pose.
    """
    if mesh.weights is None:
        raise MeshSurgeryError("mesh has no skinning weights")
    if pose.bone_count != mesh.bone_count:
        raise ConsistencyError(f"pose has {pose.bone_count} bones, mesh expects {mesh.bone_count}")
    p = mesh.positions
    rows, cols, vals = weight_matrix(mesh.weights, len(p), mesh.bone_count)
    delta_rot = pose.rotations - np.eye(3)
    moved = np.einsum("kij,kj->ki", delta_rot[cols], p[rows]) + pose.translations[cols]
    offset = np.zeros_like(p)
    np.add.at(offset, rows, vals[:, None] * moved)
    return p + offset


def load_pose(path) -> Pose:
    """Read a pose file.

    Grammar (``#`` starts a comment)::

        bones <B>
        <bone> <qw> <qx> <qy> <qz> <tx> <ty> <tz>     # B rows, any order
    """
    bone_count = None
    rows = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            try:
                if parts[0] == "bones":
                    bone_count = int(parts[1])
                    continue
                if bone_count is None:
                    raise FormatError("pose row before 'bones' header", path, lineno)
                if len(parts) != 8:
                    raise FormatError("pose row needs bone id, quaternion and translation", path, lineno)
                b = int(parts[0])
                if not 0 <= b < bone_count:
                    raise FormatError(f"bone id {b} out of range", path, lineno)
                rows[b] = [float(x) for x in parts[1:]]
            except (ValueError, IndexError) as exc:
                raise FormatError(f"cannot parse pose line: {exc}", path, lineno) from None
    if bone_count is None:
        raise FormatError("missing 'bones' header", path)
    if len(rows) != bone_count:
        raise FormatError(f"expected {bone_count} bone rows, found {len(rows)}", path)
    data = np.array([rows[b] for b in range(bone_count)])
    return Pose.from_quaternions(data[:, :4], data[:, 4:])


def save_pose(pose: Pose, path) -> None:
    q = pose.to_quaternions()
    with open(path, "w") as fh:
        fh.write(f"bones {pose.bone_count}\n")
        for b in range(pose.bone_count):
            vals = list(q[b]) + list(pose.translations[b])
            fh.write(f"{b} " + " ".join(f"{v:.17g}" for v in vals) + "\n")
