"""Scalpel tear: a bounded slit along a plane whose interior points are split and opened."""

from __future__ import annotations

import time
from collections import defaultdict, deque
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..adjacency import MeshDelta
from ..errors import GeometryError, TearError
from ..mesh import SkinnedMesh
from ..predicates import Plane
from ._common import VertexPool, build_delta, face_normal, mesh_eps, split_quad, triangulate_convex

DEFAULT_OPENING_REL = 0.02


@dataclass(frozen=True)
class ScalpelStroke:
    """Tool segments at the start and end of the stroke.

    ``opening_fraction`` is the distance (in model units) between the two
    lips of the slit, i.e. the fraction of the tear plane's unit normal used
    as displacement; ``None`` means 2% of the mesh bounding-box diagonal.
    """

    start_segment: tuple
    end_segment: tuple
    opening_fraction: Optional[float] = None

    def __post_init__(self):
        segs = []
        for name in ("start_segment", "end_segment"):
            a, b = (np.asarray(p, dtype=float).reshape(3) for p in getattr(self, name))
            if np.array_equal(a, b):
                raise GeometryError(f"{name} is degenerate")
            segs.append((a, b))
            object.__setattr__(self, name, (a, b))
        f = self.opening_fraction
        if f is not None and not 0.0 < f <= 1.0:
            raise GeometryError(f"opening_fraction must be in (0, 1], got {f!r}")


@dataclass(frozen=True)
class TearPlane:
    plane: Plane
    entry: np.ndarray
    entry_face: int
    end_point: np.ndarray

    @property
    def direction(self) -> np.ndarray:
        d = self.end_point - self.entry
        return d / np.linalg.norm(d)

    @property
    def length(self) -> float:
        return float(np.linalg.norm(self.end_point - self.entry))


@dataclass
class TearReport:
    """Result of :func:`tear`.

    ``seam_points`` are the slit's points in order along the stroke, before
    duplication (the first and last stay welded).  ``duplicated_pairs`` holds
    ``(positive_side, negative_side)`` vertex ids, one pair per interior point.
    """

    plane: Optional[Plane]
    seam_points: np.ndarray
    duplicated_pairs: list
    elapsed: float
    delta: MeshDelta = field(default_factory=MeshDelta)
    opening: float = 0.0
    entry: Optional[np.ndarray] = None
    end_vertices: list = field(default_factory=list)

    @property
    def is_noop(self) -> bool:
        return self.delta.is_empty


def ray_first_hit(mesh: SkinnedMesh, p0, p1, eps: float = 1e-12):
    """First hit of segment ``p0 -> p1`` with the mesh: ``(t, face)`` or ``None``."""
    if mesh.face_count == 0:
        return None
    p0 = np.asarray(p0, dtype=float)
    d = np.asarray(p1, dtype=float) - p0
    tri = mesh.positions[mesh.faces]
    e1 = tri[:, 1] - tri[:, 0]
    e2 = tri[:, 2] - tri[:, 0]
    h = np.cross(d, e2)
    a = (e1 * h).sum(1)
    ok = np.abs(a) > eps * max(1.0, float(np.abs(a).max()))
    inv = np.where(ok, 1.0 / np.where(ok, a, 1.0), 0.0)
    s = p0 - tri[:, 0]
    u = inv * (s * h).sum(1)
    q = np.cross(s, e1)
    v = inv * (q @ d)
    t = inv * (q * e2).sum(1)
    tol = 1e-9
    hit = ok & (u >= -tol) & (v >= -tol) & (u + v <= 1 + tol) & (t >= -tol) & (t <= 1 + tol)
    if not hit.any():
        return None
    ids = np.flatnonzero(hit)
    best = ids[np.lexsort((ids, t[ids]))[0]]
    return float(np.clip(t[best], 0.0, 1.0)), int(best)


def derive_tear_plane(mesh: SkinnedMesh, stroke: ScalpelStroke) -> TearPlane:
    """Plane through the scalpel's entry point on the mesh and the end segment.

    The normal follows the right-hand rule over ``(entry, end_a, end_b)``.
    The stroke's end point is the entry point projected onto the end
    segment's line.
    """
    s0, s1 = stroke.start_segment
    hit = ray_first_hit(mesh, s0, s1)
    if hit is None:
        raise GeometryError("scalpel start segment does not intersect the mesh")
    t, face = hit
    entry = s0 + t * (s1 - s0)
    a, b = stroke.end_segment
    n = np.cross(a - entry, b - entry)
    scale = np.linalg.norm(a - entry) * np.linalg.norm(b - entry)
    length = np.linalg.norm(n)
    if scale == 0 or length <= 1e-9 * scale:
        raise GeometryError("entry point and end segment are collinear; tear plane is undefined")
    normal = n / length
    ab = b - a
    end_point = a + float((entry - a) @ ab) / float(ab @ ab) * ab
    return TearPlane(Plane(normal, float(normal @ entry)), entry, face, end_point)


def _noop(plane, entry, t0, opening=0.0):
    return TearReport(plane, np.zeros((0, 3)), [], time.perf_counter() - t0, MeshDelta(), opening, entry)


def tear(mesh: SkinnedMesh, maps, stroke: ScalpelStroke, eps: float | None = None):
    """Open a slit along the stroke; ``maps`` is patched in place.

    Returns ``(new_mesh, report)``.  A stroke whose seam has no interior
    point leaves the mesh unchanged and returns an empty report.
    """
    t0 = time.perf_counter()
    tp = derive_tear_plane(mesh, stroke)
    plane = tp.plane
    if eps is None:
        eps = mesh_eps(mesh)
    opening = stroke.opening_fraction
    if opening is None:
        opening = DEFAULT_OPENING_REL * mesh.bbox_diagonal()
    pos = mesh.positions
    faces = mesh.faces
    dist = plane.signed_distance(pos)
    sides = np.zeros(len(dist), dtype=np.int8)
    sides[dist > eps] = 1
    sides[dist < -eps] = -1
    fs = sides[faces]
    crossed = (fs == 1).any(1) & (fs == -1).any(1)
    flat_pair = ((fs == 0).sum(1) == 2)

    # seam graph: nodes are ('e', lo, hi) edge crossings or ('v', i) on-plane vertices
    face_seg = {}
    graph = defaultdict(list)

    def link(n1, n2, seg):
        graph[n1].append((n2, seg))
        graph[n2].append((n1, seg))

    for f in np.flatnonzero(crossed).tolist():
        tri = faces[f].tolist()
        nodes = []
        for i in range(3):
            a, b = tri[i], tri[(i + 1) % 3]
            if sides[a] == 0:
                nodes.append(("v", a))
            if int(sides[a]) * int(sides[b]) == -1:
                nodes.append(("e", min(a, b), max(a, b)))
        face_seg[f] = (nodes[0], nodes[1])
        link(nodes[0], nodes[1], ("f", f))
    flat_edges = set()
    for f in np.flatnonzero(flat_pair).tolist():
        tri = faces[f].tolist()
        o = sorted(v for v in tri if sides[v] == 0)
        flat_edges.add((o[0], o[1]))
    for a, b in sorted(flat_edges):
        link(("v", a), ("v", b), ("edge", a, b))

    entry_tri = faces[tp.entry_face].tolist()
    start = [n for n in (face_seg.get(tp.entry_face) or ()) if n in graph]
    start += [("v", v) for v in entry_tri if ("v", v) in graph]
    if not start:
        return mesh, _noop(plane, tp.entry, t0, opening)

    comp = set(start)
    queue = deque(start)
    while queue:
        node = queue.popleft()
        for other, _ in graph[node]:
            if other not in comp:
                comp.add(other)
                queue.append(other)

    def node_point(node):
        if node[0] == "v":
            return pos[node[1]]
        _, a, b = node
        t = dist[a] / (dist[a] - dist[b])
        return pos[a] + t * (pos[b] - pos[a])

    direction, length = tp.direction, tp.length
    tol = eps
    kept = {}
    for node in sorted(comp):
        x = node_point(node)
        along = float((x - tp.entry) @ direction)
        if not -tol <= along <= length + tol:
            continue
        if mesh.torn and any(v in mesh.torn for v in node[1:]):
            raise TearError("tear runs over an existing seam; consecutive tears are not supported")
        if node[0] == "e" and maps.is_boundary_edge(node[1], node[2]):
            continue
        if node[0] == "v" and maps.is_boundary_vertex(node[1]):
            continue
        kept[node] = (x, along)

    kept_adj = defaultdict(list)
    for node in kept:
        for other, seg in graph[node]:
            if other in kept:
                kept_adj[node].append((other, seg))
    if not kept_adj:
        return mesh, _noop(plane, tp.entry, t0, opening)
    anchor = min(kept_adj, key=lambda n: (float(np.sum((kept[n][0] - tp.entry) ** 2)), n))
    chain_nodes = {anchor}
    queue = deque([anchor])
    while queue:
        node = queue.popleft()
        for other, _ in kept_adj[node]:
            if other not in chain_nodes:
                chain_nodes.add(other)
                queue.append(other)

    def degrees(nodes):
        segs = defaultdict(set)
        for node in nodes:
            for other, seg in kept_adj[node]:
                if other in nodes:
                    segs[node].add(seg)
        return segs

    node_segs = degrees(chain_nodes)
    if all(len(s) >= 2 for s in node_segs.values()):
        # closed loop: cut it open at the point farthest along the stroke
        far = max(chain_nodes, key=lambda n: (kept[n][1], n))
        chain_nodes.discard(far)
        node_segs = degrees(chain_nodes)
    interior = sorted(n for n in chain_nodes if len(node_segs[n]) >= 2)
    ends = sorted(n for n in chain_nodes if len(node_segs[n]) == 1)
    if not interior:
        return mesh, _noop(plane, tp.entry, t0, opening)
    seg_ids = set()
    for s in node_segs.values():
        seg_ids |= s
    seam_faces = sorted(seg[1] for seg in seg_ids if seg[0] == "f")

    # order the chain from the end nearest the entry
    first = min(ends, key=lambda n: (kept[n][1], n)) if ends else interior[0]
    order, prev, cur = [first], None, first
    while True:
        nxt = sorted(o for o, seg in kept_adj[cur] if o in chain_nodes and seg in seg_ids and o != prev
                     and o not in order)
        if not nxt:
            break
        prev, cur = cur, nxt[0]
        order.append(cur)
    interior_set = set(interior)
    end_set = set(ends)

    # faces touched: split seam faces, T-junction neighbours at welded ends,
    # and every face around an on-plane vertex that gets split in two
    tjunction = set()
    for node in ends:
        if node[0] == "e":
            tjunction.update(f for f in maps.edge_faces(node[1], node[2]) if f not in seam_faces)
    seam_set = set(seam_faces)
    fan = set()
    for node in interior:
        if node[0] == "v":
            fan.update(f for f in maps.faces_of_vertex(node[1]) if f not in seam_set)
    tjunction -= seam_set
    fan -= seam_set | tjunction
    affected = sorted(seam_set | tjunction | fan)
    if mesh.torn:
        for f in affected:
            if any(v in mesh.torn for v in faces[f].tolist()):
                raise TearError("tear runs over an existing seam; consecutive tears are not supported")

    pool = VertexPool(mesh)
    normal = plane.normal
    half = 0.5 * opening
    copies = {}
    single = {}
    pairs = []
    for node in order:
        x = kept[node][0]
        if node[0] == "e":
            _, a, b = node
            t = dist[a] / (dist[a] - dist[b])
            w, uv = pool.lerp_attrs(a, b, t)
        else:
            w, uv = pool.copy_attrs(node[1])
        if node in interior_set:
            if node[0] == "v":
                # snap into the plane so the two lips are mirror images
                x = x - dist[node[1]] * normal
            pi = pool.add(("p",) + node, x + half * normal, w, uv)
            ni = pool.add(("n",) + node, x - half * normal, w, uv)
            copies[node] = (pi, ni)
            pairs.append((pi, ni))
        elif node[0] == "e":
            single[node] = pool.add(node, x, w, uv)
        else:
            single[node] = node[1]

    def resolve(node, side):
        if node in copies:
            return copies[node][0 if side > 0 else 1]
        return single[node]

    position = pool.position
    added = []
    for f in seam_faces:
        tri = faces[f].tolist()
        st = [int(sides[v]) for v in tri]
        ppoly, npoly = [], []
        for i in range(3):
            a, b = tri[i], tri[(i + 1) % 3]
            sa, sb = st[i], st[(i + 1) % 3]
            if sa == 0:
                ppoly.append(resolve(("v", a), 1))
                npoly.append(resolve(("v", a), -1))
            elif sa > 0:
                ppoly.append(a)
            else:
                npoly.append(a)
            if sa * sb == -1:
                node = ("e", min(a, b), max(a, b))
                ppoly.append(resolve(node, 1))
                npoly.append(resolve(node, -1))
        for poly in (ppoly, npoly):
            added.extend([tuple(poly)] if len(poly) == 3 else split_quad(poly, position))

    def face_side(st):
        return -1 if (-1 in st and 1 not in st) else 1

    for f in sorted(tjunction):
        tri = faces[f].tolist()
        side = face_side([int(sides[v]) for v in tri])
        poly = []
        for i in range(3):
            a, b = tri[i], tri[(i + 1) % 3]
            poly.append(resolve(("v", a), side) if ("v", a) in copies else a)
            node = ("e", min(a, b), max(a, b))
            if node in end_set:
                poly.append(single[node])
        n = face_normal(*(pos[v] for v in tri))
        added.extend(triangulate_convex(poly, position, n))
    for f in sorted(fan):
        tri = faces[f].tolist()
        side = face_side([int(sides[v]) for v in tri])
        added.append(tuple(resolve(("v", v), side) if ("v", v) in copies else v for v in tri))

    delta, renum = build_delta(pool, affected, added, maps)
    seam_vertices = [renum.get(i, i) for pair in pairs for i in pair]
    seam_vertices += [renum.get(i, i) for i in single.values()]
    new_mesh = mesh.apply_delta(delta).with_torn(seam_vertices)
    maps.apply_delta(delta)
    report = TearReport(
        plane=plane,
        seam_points=np.asarray([kept[n][0] for n in order]),
        duplicated_pairs=[(renum[p], renum[n]) for p, n in pairs],
        elapsed=time.perf_counter() - t0,
        delta=delta,
        opening=opening,
        entry=tp.entry,
        end_vertices=[renum.get(single[n], single[n]) for n in order if n in single],
    )
    return new_mesh, report
