"""Cylindrical drill with adaptive 1-to-4 refinement of the hole rim.

Every face near the drill axis is projected onto the plane perpendicular
to the axis and tested against the drill circle there.  Faces entirely
inside are removed; faces crossing the circle keep only the part outside
it, where each arc is replaced by the chord between its circle/edge
intersection points.  Those points are placed on the original 3D edges, so
mapping them back restores the axis coordinate by linear interpolation
along the edge and the rim lies on the original surface.

When the rim ends up with fewer chords than ``min_contour_edges``, every
face straddling the circle is split 1-to-4 through its edge midpoints
(neighbours are bisected so no T-junctions appear) and the clip is redone,
up to ``MAX_ROUNDS`` times.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .. import _parallel
from ..adjacency import MeshDelta
from ..mesh import SkinnedMesh
from ..predicates import DrillCylinder, classify_triangles_circle, orthonormal_basis, segment_circle_intersection_2d
from ._common import VertexPool, build_delta, face_normal, mesh_eps, split_quad, triangulate_convex

MAX_ROUNDS = 8
DEFAULT_MIN_CONTOUR_EDGES = 10
_T_SNAP = 1e-9


@dataclass
class DrillReport:
    contour_points: np.ndarray
    removed_face_count: int
    subdivision_rounds: int
    elapsed: float
    delta: MeshDelta = field(default_factory=MeshDelta)
    contour_edge_count: int = 0
    initial_contour_edge_count: int = 0
    contour_quality_unmet: bool = False
    cylinder: DrillCylinder = None

    @property
    def is_noop(self) -> bool:
        return self.delta.is_empty


def _edges(tri):
    a, b, c = tri
    return ((a, b), (b, c), (c, a))


def _key(a, b):
    return (a, b) if a < b else (b, a)


class _Patch:
    """Working copy of the faces an operation touches.

    Original faces keep their ids; faces created here get ids from
    ``mesh.face_count`` upward.  Faces outside the patch are reached through
    the adjacency maps and pulled in on demand.
    """

    def __init__(self, mesh: SkinnedMesh, maps):
        self.mesh = mesh
        self.maps = maps
        self.pool = VertexPool(mesh)
        self.faces: dict = {}
        self.edge_map: dict = {}
        self.gone: set = set()
        self.next_id = mesh.face_count

    def _link(self, fid, tri):
        for a, b in _edges(tri):
            self.edge_map.setdefault(_key(a, b), set()).add(fid)

    def pull(self, f):
        if f in self.faces or f in self.gone:
            return
        tri = tuple(self.mesh.faces[f].tolist())
        self.faces[f] = tri
        self._link(f, tri)

    def on_edge(self, a, b):
        key = _key(a, b)
        if a < self.mesh.vertex_count and b < self.mesh.vertex_count:
            for f in self.maps.edge_faces(*key):
                self.pull(f)
        return sorted(self.edge_map.get(key, ()))

    def remove(self, fid):
        tri = self.faces.pop(fid)
        for a, b in _edges(tri):
            s = self.edge_map[_key(a, b)]
            s.discard(fid)
            if not s:
                del self.edge_map[_key(a, b)]
        if fid < self.mesh.face_count:
            self.gone.add(fid)

    def add(self, tri):
        fid = self.next_id
        self.next_id += 1
        self.faces[fid] = tuple(tri)
        self._link(fid, tri)
        return fid

    def delta(self, keep=None):
        added = [self.faces[f] for f in sorted(self.faces) if f >= self.mesh.face_count]
        return build_delta(self.pool, sorted(self.gone), added, self.maps, keep=keep)

    def midpoint(self, a, b):
        key = ("m",) + _key(a, b)
        if key in self.pool.keys:
            return self.pool.keys[key]
        lo, hi = _key(a, b)
        w, uv = self.pool.lerp_attrs(lo, hi, 0.5)
        x = 0.5 * (self.pool.position(lo) + self.pool.position(hi))
        return self.pool.add(key, x, w, uv)

    def subdivide(self, face_ids):
        """1-to-4 split of ``face_ids``; neighbours sharing a split edge are bisected."""
        split = set(face_ids)
        marked = set()
        for f in split:
            marked.update(_key(a, b) for a, b in _edges(self.faces[f]))
        touched = set(split)
        for a, b in sorted(marked):
            touched.update(self.on_edge(a, b))
        position = self.pool.position
        for f in sorted(touched):
            tri = self.faces[f]
            flags = [_key(a, b) in marked for a, b in _edges(tri)]
            n = sum(flags)
            if n == 0:
                continue
            self.remove(f)
            if n == 3:
                a, b, c = tri
                mab, mbc, mca = self.midpoint(a, b), self.midpoint(b, c), self.midpoint(c, a)
                new = [(a, mab, mca), (b, mbc, mab), (c, mca, mbc), (mab, mbc, mca)]
            elif n == 1:
                i = flags.index(True)
                a, b, c = tri[i], tri[(i + 1) % 3], tri[(i + 2) % 3]
                m = self.midpoint(a, b)
                new = [(a, m, c), (m, b, c)]
            else:
                i = flags.index(False)
                # rotate so the unmarked edge is (c, a)
                c, a, b = tri[i], tri[(i + 1) % 3], tri[(i + 2) % 3]
                mab, mbc = self.midpoint(a, b), self.midpoint(b, c)
                new = [(mab, b, mbc)] + split_quad((a, mab, mbc, c), position)
            for t in new:
                self.add(t)


def subdivide_1to4(mesh: SkinnedMesh, maps, face_ids) -> MeshDelta:
    """Delta that splits ``face_ids`` 1-to-4 through shared edge midpoints.

    Faces next to a split edge that are not themselves in ``face_ids`` are
    bisected (or trisected) so the result has no T-junctions.  Midpoint
    weights are the renormalized average of the edge endpoints' weights.
    The delta is returned, not applied.
    """
    patch = _Patch(mesh, maps)
    for f in face_ids:
        patch.pull(int(f))
    patch.subdivide([int(f) for f in face_ids])
    return patch.delta()[0]


class _Frame:
    def __init__(self, cyl: DrillCylinder):
        self.origin = cyl.axis_start
        self.u, self.v, self.d = orthonormal_basis(cyl.axis_end - cyl.axis_start)
        self.radius = cyl.radius
        self.length = cyl.length

    def project(self, p):
        rel = np.asarray(p, dtype=float) - self.origin
        return np.stack([rel @ self.u, rel @ self.v], axis=-1)

    def height(self, p):
        return (np.asarray(p, dtype=float) - self.origin) @ self.d


class _Plan:
    def __init__(self):
        self.removed = []        # faces dropped entirely
        self.changed = {}        # face -> list of replacement triangles
        self.crossing = []       # faces overlapping the circle boundary
        self.chords = []         # (u, v) rim edges
        self.touched = False


class _Driller:
    def __init__(self, mesh, maps, cyl, eps):
        self.patch = _Patch(mesh, maps)
        self.frame = _Frame(cyl)
        self.r = cyl.radius
        self.eps = eps
        self._c2 = {}
        self._crossings = {}

    def coords(self, i):
        c = self._c2.get(i)
        if c is None:
            c = self._c2[i] = self.frame.project(self.patch.pool.position(i))
        return c

    def inside(self, i):
        return float(np.hypot(*self.coords(i))) < self.r - self.eps

    def candidates(self):
        mesh = self.patch.mesh
        if mesh.face_count == 0:
            return []
        pos = mesh.positions
        frame = self.frame

        def chunk(start, stop):
            tri = pos[mesh.faces[start:stop]]
            c2 = frame.project(tri.reshape(-1, 3)).reshape(-1, 3, 2)
            h = frame.height(tri.reshape(-1, 3)).reshape(-1, 3)
            lim = self.r + self.eps
            near = (c2.min(1) <= lim).all(1) & (c2.max(1) >= -lim).all(1)
            near &= (h.max(1) >= -self.eps) & (h.min(1) <= frame.length + self.eps)
            ids = np.flatnonzero(near)
            cls = classify_triangles_circle(c2[ids], self.r)
            return start + ids[cls != 0]

        return np.concatenate(_parallel.map_chunks(chunk, mesh.face_count, min_chunk=512)).tolist()

    def edge_crossings(self, lo, hi):
        """Circle crossings on edge ``lo -> hi`` as ``(t, vertex)`` pairs; cached per edge."""
        key = (lo, hi)
        hit = self._crossings.get(key)
        if hit is not None:
            return hit
        ins_lo, ins_hi = self.inside(lo), self.inside(hi)
        out = []
        if not (ins_lo and ins_hi):
            roots = [(t, x) for t, x in segment_circle_intersection_2d(self.coords(lo), self.coords(hi),
                                                                          (0.0, 0.0), self.r)
                     if _T_SNAP < t < 1.0 - _T_SNAP]
            if ins_lo != ins_hi:
                if roots:
                    roots = [max(roots, key=lambda r: r[0]) if ins_lo else min(roots, key=lambda r: r[0])]
            elif len(roots) != 2:
                roots = []
            pool = self.patch.pool
            plo, phi = pool.position(lo), pool.position(hi)
            for t, _ in roots:
                w, uv = pool.lerp_attrs(lo, hi, t)
                idx = pool.add(None, plo + t * (phi - plo), w, uv)
                out.append((t, idx))
        self._crossings[key] = out
        return out

    def close_over_crossings(self):
        """Pull in every face that shares a crossed edge with a patch face."""
        frontier = sorted(self.patch.faces)
        while frontier:
            grown = set()
            for f in frontier:
                tri = self.patch.faces.get(f)
                if tri is None:
                    continue
                for a, b in _edges(tri):
                    lo, hi = _key(a, b)
                    if self.edge_crossings(lo, hi):
                        before = set(self.patch.faces)
                        self.patch.on_edge(lo, hi)
                        grown |= set(self.patch.faces) - before
            frontier = sorted(grown)

    def plan(self) -> _Plan:
        pl = _Plan()
        patch = self.patch
        position = patch.pool.position
        ids = sorted(patch.faces)
        tri2d = np.array([[self.coords(i) for i in patch.faces[f]] for f in ids]).reshape(-1, 3, 2)
        cls = classify_triangles_circle(tri2d, self.r) if ids else []
        for f, c in zip(ids, cls):
            if c == 0:
                continue
            pl.touched = True
            tri = patch.faces[f]
            if c == 2:
                pl.crossing.append(f)
            poly, chord_before = [], []
            skipped = False
            for a, b in _edges(tri):
                if self.inside(a):
                    skipped = True
                else:
                    poly.append(a)
                    chord_before.append(skipped)
                    skipped = False
                lo, hi = _key(a, b)
                hits = self.edge_crossings(lo, hi)
                if a > b:
                    hits = list(reversed(hits))
                for _, x in hits:
                    poly.append(x)
                    chord_before.append(skipped)
                    skipped = False
            if skipped and chord_before:
                chord_before[0] = True
            if len(poly) < 3:
                pl.removed.append(f)
                continue
            if tuple(poly) == tri:
                continue
            normal = face_normal(*(position(i) for i in tri))
            tris = triangulate_convex(poly, position, normal)
            if not tris:
                pl.removed.append(f)
                continue
            pl.changed[f] = tris
            for i, is_chord in enumerate(chord_before):
                if is_chord:
                    pl.chords.append((poly[i - 1], poly[i]))
        return pl

    def apply(self, pl: _Plan):
        for f in pl.removed:
            self.patch.remove(f)
        for f, tris in pl.changed.items():
            self.patch.remove(f)
            for t in tris:
                self.patch.add(t)


def drill(mesh: SkinnedMesh, maps, cyl: DrillCylinder, min_contour_edges: int = DEFAULT_MIN_CONTOUR_EDGES,
          eps: float | None = None):
    """Remove the part of the surface inside ``cyl``; ``maps`` is patched in place.

    Returns ``(new_mesh, report)``.  Faces are only considered when their
    axis coordinates overlap the drill's length.
    """
    if min_contour_edges < 3:
        raise ValueError("min_contour_edges must be >= 3")
    t0 = time.perf_counter()
    if eps is None:
        eps = mesh_eps(mesh)
    dr = _Driller(mesh, maps, cyl, eps)
    for f in dr.candidates():
        dr.patch.pull(f)
    rounds = 0
    initial = None
    while True:
        dr.close_over_crossings()
        pl = dr.plan()
        if initial is None:
            initial = len(pl.chords)
            if not pl.touched:
                return mesh, DrillReport(np.zeros((0, 3)), 0, 0, time.perf_counter() - t0, cylinder=cyl)
        if len(pl.chords) >= min_contour_edges or rounds >= MAX_ROUNDS or not pl.crossing:
            break
        dr.patch.subdivide(pl.crossing)
        rounds += 1
    dr.apply(pl)
    rim = sorted({i for chord in pl.chords for i in chord})
    delta, renum = dr.patch.delta()
    new_mesh = mesh.apply_delta(delta)
    maps.apply_delta(delta)
    contour = np.asarray([new_mesh.positions[renum.get(i, i)] for i in rim]).reshape(-1, 3)
    report = DrillReport(
        contour_points=contour,
        removed_face_count=len(pl.removed),
        subdivision_rounds=rounds,
        elapsed=time.perf_counter() - t0,
        delta=delta,
        contour_edge_count=len(pl.chords),
        initial_contour_edge_count=initial,
        contour_quality_unmet=len(pl.chords) < min_contour_edges,
        cylinder=cyl,
    )
    return new_mesh, report
