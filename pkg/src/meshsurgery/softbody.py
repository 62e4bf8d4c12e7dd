"""Particle clusters over mesh vertices and their elastic stepping.

A particle owns every vertex within ``range`` of its seed vertex; vertices
may belong to several particles.  Each particle carries a center position
and velocity and is pulled back toward the (skinned) mean of its members
by a damped spring.  Vertices follow the mean displacement of the
particles that own them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from . import _parallel
from .errors import ConsistencyError, ParameterError
from .skinning import apply_pose

DEFAULT_RANGE = 0.8
DEFAULT_STIFFNESS = 40.0
DEFAULT_DAMPING = 4.0
DEFAULT_DT = 1.0 / 90.0


@dataclass(frozen=True)
class SoftBodyParams:
    """Spring constants per unit mass.

    Attributes:
        k: stiffness in 1/s^2.
        c: damping in 1/s.
        dt: time step in seconds; must satisfy ``dt <= 2 / sqrt(k)``.
    """

    k: float = DEFAULT_STIFFNESS
    c: float = DEFAULT_DAMPING
    dt: float = DEFAULT_DT

    def validate(self) -> "SoftBodyParams":
        if not self.k > 0:
            raise ParameterError(f"stiffness must be > 0, got {self.k!r}")
        if not self.c >= 0:
            raise ParameterError(f"damping must be >= 0, got {self.c!r}")
        if not self.dt > 0:
            raise ParameterError(f"dt must be > 0, got {self.dt!r}")
        if self.dt > 2.0 / np.sqrt(self.k):
            raise ParameterError(f"dt={self.dt!r} exceeds the stability bound 2/sqrt(k)={2.0 / np.sqrt(self.k)!r}")
        return self

    def settle_steps(self) -> int:
        """Step budget within which an impulse is expected to have died out: ``10 / (c dt)``."""
        if self.c == 0:
            raise ParameterError("an undamped system never settles")
        return int(np.ceil(10.0 / (self.c * self.dt)))


@dataclass(frozen=True)
class Particle:
    seed_vertex: int
    member_vertices: tuple
    rest_center: np.ndarray
    position: np.ndarray
    velocity: np.ndarray


def _centers(points, pair_particle, pair_vertex, n_particles):
    counts = np.bincount(pair_particle, minlength=n_particles).astype(float)
    out = np.empty((n_particles, 3))
    sel = points[pair_vertex]
    for k in range(3):
        out[:, k] = np.bincount(pair_particle, weights=sel[:, k], minlength=n_particles)
    return out / np.maximum(counts, 1.0)[:, None]


class Clustering:
    """Vertex/particle membership with per-particle dynamic state.

    Attributes:
        members: sorted member vertex ids per particle.
        seeds: seed vertex id per particle.
        seed_positions: rest position of each seed, kept after the seed vertex
            itself is removed by surgery.
        rest_positions: rest position of every vertex known to the clustering.
        rest_centers, positions, velocities: (P, 3) arrays.
        range: membership radius in model units.
    """

    def __init__(self, members, seeds, seed_positions, rest_positions, range_, positions=None, velocities=None):
        self.members = [np.asarray(m, dtype=np.int64) for m in members]
        self.seeds = np.asarray(seeds, dtype=np.int64).reshape(-1)
        self.seed_positions = np.asarray(seed_positions, dtype=float).reshape(-1, 3)
        self.rest_positions = np.asarray(rest_positions, dtype=float).reshape(-1, 3)
        self.range = float(range_)
        self._pairs = None
        self.rest_centers = self.centers_of(self.rest_positions)
        self.positions = self.rest_centers.copy() if positions is None else np.asarray(positions, dtype=float)
        self.velocities = np.zeros_like(self.rest_centers) if velocities is None else np.asarray(velocities, dtype=float)

    @property
    def n_vertices(self) -> int:
        return len(self.rest_positions)

    @property
    def particle_count(self) -> int:
        return len(self.members)

    def __len__(self):
        return self.particle_count

    def copy(self) -> "Clustering":
        return Clustering(self.members, self.seeds.copy(), self.seed_positions.copy(), self.rest_positions.copy(),
                          self.range, self.positions.copy(), self.velocities.copy())

    def pairs(self):
        """Flattened membership: ``(particle_ids, vertex_ids)`` arrays."""
        if self._pairs is None:
            sizes = [len(m) for m in self.members]
            pid = np.repeat(np.arange(len(sizes)), sizes)
            vid = np.concatenate(self.members) if self.members else np.zeros(0, dtype=np.int64)
            self._pairs = (pid, vid.astype(np.int64))
        return self._pairs

    def centers_of(self, points) -> np.ndarray:
        pid, vid = self.pairs()
        return _centers(np.asarray(points, dtype=float), pid, vid, self.particle_count)

    def particles_per_vertex(self) -> np.ndarray:
        _, vid = self.pairs()
        return np.bincount(vid, minlength=self.n_vertices)

    @property
    def vertex_to_particles(self) -> list:
        out = [[] for _ in range(self.n_vertices)]
        for p, m in enumerate(self.members):
            for v in m.tolist():
                out[v].append(p)
        return out

    @property
    def particles(self) -> list:
        return [Particle(int(self.seeds[p]), tuple(self.members[p].tolist()), self.rest_centers[p],
                         self.positions[p], self.velocities[p]) for p in range(self.particle_count)]

    def uncovered(self, vertex_ids) -> list:
        counts = self.particles_per_vertex()
        return [int(v) for v in vertex_ids if v >= len(counts) or counts[v] == 0]

    def state_equal(self, other: "Clustering") -> bool:
        return (self.particle_count == other.particle_count
                and all(np.array_equal(a, b) for a, b in zip(self.members, other.members))
                and np.array_equal(self.seeds, other.seeds)
                and np.array_equal(self.positions, other.positions)
                and np.array_equal(self.velocities, other.velocities))


def cluster(mesh, range_: float = DEFAULT_RANGE) -> Clustering:
    """Greedy seeding in vertex-index order.

    Each vertex not yet covered becomes a seed, and every vertex within
    ``range_`` of it (inclusive) joins the new particle, whether or not it is
    already covered.  Only vertices used by some face take part, unless the
    mesh has no faces at all.
    """
    if not range_ > 0:
        raise ParameterError(f"cluster range must be > 0, got {range_!r}")
    pos = mesh.positions
    active = mesh.referenced() if mesh.face_count else np.ones(mesh.vertex_count, dtype=bool)
    ids = np.flatnonzero(active)
    members, seeds = [], []
    if len(ids):
        tree = cKDTree(pos[ids])
        covered = np.zeros(mesh.vertex_count, dtype=bool)
        for v in ids.tolist():
            if covered[v]:
                continue
            near = ids[np.asarray(tree.query_ball_point(pos[v], range_), dtype=np.int64)]
            near = np.unique(near)
            covered[near] = True
            members.append(near)
            seeds.append(v)
    seeds = np.asarray(seeds, dtype=np.int64)
    return Clustering(members, seeds, pos[seeds].reshape(-1, 3), pos, range_)


def _side_rule(report):
    """``(vertex -> side, plane)`` when the report split the surface along a plane."""
    plane = getattr(report, "plane", None)
    if plane is None:
        return None, None
    if hasattr(report, "duplicated_pairs"):
        sides = {}
        for p, n in report.duplicated_pairs:
            sides[int(p)] = 1
            sides[int(n)] = -1
        return sides, plane
    if getattr(report, "vertex_sides", None) is not None:
        vs = report.vertex_sides
        return {i: int(s) for i, s in enumerate(vs.tolist()) if s != 0}, plane
    return None, None


def update_clustering(clustering: Clustering, report) -> Clustering:
    """Repair membership after a cut, tear or drill, in place; returns ``clustering``.

    Vertices the operation orphaned leave their particles and particles left
    empty are deleted.  New vertices join every particle whose seed lies
    within range.  When the operation split the surface along a plane, a
    vertex on one side only joins particles whose seed is on that side
    (seeds on the plane count as positive); for a cut, members that ended up
    opposite their particle's seed are dropped first.  A vertex with no
    eligible particle seeds a new one.
    """
    delta = report.delta
    if delta.is_empty:
        return clustering
    n_old = clustering.n_vertices
    for k, av in enumerate(delta.added_vertices):
        if av.index != n_old + k:
            raise ConsistencyError(f"report adds vertex {av.index}, clustering expects {n_old + k}", index=av.index)
    was_covered = clustering.particles_per_vertex() > 0
    if delta.added_vertices:
        new_pos = np.array([av.position for av in delta.added_vertices], dtype=float)
        clustering.rest_positions = np.concatenate([clustering.rest_positions, new_pos])
    rest = clustering.rest_positions
    n_total = len(rest)
    old_centers = clustering.rest_centers
    removed = set(int(v) for v in delta.removed_vertices)
    vertex_side, plane = _side_rule(report)
    seed_side = None
    if plane is not None:
        seed_side = np.where(plane.signed_distance(clustering.seed_positions) < 0, -1, 1)

    members = [m.tolist() for m in clustering.members]
    if removed:
        for p, m in enumerate(members):
            if any(v in removed for v in m):
                members[p] = [v for v in m if v not in removed]
    if plane is not None and not hasattr(report, "duplicated_pairs"):
        for p, m in enumerate(members):
            members[p] = [v for v in m if vertex_side.get(v, seed_side[p]) == seed_side[p]]

    counts = np.zeros(n_total, dtype=np.int64)
    for m in members:
        counts[m] += 1
    pending = list(range(n_old, n_total))
    pending += [v for v in np.flatnonzero(was_covered & (counts[:n_old] == 0)).tolist() if v not in removed]
    pending = sorted(set(pending) - removed)

    def eligible(v, p):
        if seed_side is None or v not in vertex_side:
            return True
        return vertex_side[v] == seed_side[p]

    tree = cKDTree(clustering.seed_positions) if clustering.particle_count else None
    member_sets = [set(m) for m in members]
    leftovers = []
    for v in pending:
        joined = False
        if tree is not None:
            for p in sorted(tree.query_ball_point(rest[v], clustering.range)):
                if v in member_sets[p]:
                    joined = True
                elif eligible(v, p):
                    members[p].append(v)
                    member_sets[p].add(v)
                    joined = True
        if not joined:
            leftovers.append(v)

    # nothing eligible in range: seed a fresh particle
    seeds = clustering.seeds.tolist()
    seed_positions = list(clustering.seed_positions)
    assigned = set()
    for v in leftovers:
        if v in assigned:
            continue
        side = vertex_side.get(v) if vertex_side else None
        group = [u for u in leftovers if u not in assigned
                 and np.linalg.norm(rest[u] - rest[v]) <= clustering.range
                 and (side is None or vertex_side.get(u, side) == side)]
        assigned.update(group)
        members.append(group)
        seeds.append(v)
        seed_positions.append(rest[v])

    n_prev = clustering.particle_count
    keep = np.asarray([p for p, m in enumerate(members) if m], dtype=np.int64)
    old = keep < n_prev
    # surviving particles keep their offset from the (possibly moved) rest center
    disp = np.zeros((len(keep), 3))
    disp[old] = clustering.positions[keep[old]] - old_centers[keep[old]]
    vel = np.zeros((len(keep), 3))
    vel[old] = clustering.velocities[keep[old]]
    clustering.members = [np.asarray(sorted(members[p]), dtype=np.int64) for p in keep.tolist()]
    clustering.seeds = np.asarray([seeds[p] for p in keep.tolist()], dtype=np.int64)
    clustering.seed_positions = np.asarray([seed_positions[p] for p in keep.tolist()], dtype=float).reshape(-1, 3)
    clustering._pairs = None
    clustering.rest_centers = clustering.centers_of(rest)
    clustering.positions = clustering.rest_centers + disp
    clustering.velocities = vel
    return clustering


def apply_impulse(clustering: Clustering, contact_point, force, radius: float, dt: float = DEFAULT_DT) -> int:
    """Add ``force * dt`` (unit mass) to the velocity of every particle within ``radius``.

    Returns the number of particles hit.
    """
    if not radius > 0:
        raise ParameterError(f"impulse radius must be > 0, got {radius!r}")
    if not dt > 0:
        raise ParameterError(f"dt must be > 0, got {dt!r}")
    force = np.asarray(force, dtype=float).reshape(3)
    if clustering.particle_count == 0:
        return 0
    d = np.linalg.norm(clustering.positions - np.asarray(contact_point, dtype=float).reshape(3), axis=1)
    hit = d <= radius
    clustering.velocities[hit] += force * dt
    return int(hit.sum())


def step(clustering: Clustering, mesh, pose=None, params: SoftBodyParams = SoftBodyParams()):
    """Advance the particles one step and return ``(clustering, vertex_positions)``.

    Semi-implicit Euler with unit mass: ``v += (-k (x - target) - c v) dt``
    then ``x += v dt``, where ``target`` is the mean of the members' skinned
    positions.  Each vertex moves from its skinned position by the mean
    displacement of the particles that own it.  The clustering is updated in
    place.
    """
    params.validate()
    if mesh.vertex_count != clustering.n_vertices:
        raise ConsistencyError(f"mesh has {mesh.vertex_count} vertices, clustering tracks {clustering.n_vertices}")
    skinned = mesh.positions if pose is None else apply_pose(mesh, pose)
    target = clustering.centers_of(skinned)
    k, c, dt = params.k, params.c, params.dt
    x, v = clustering.positions, clustering.velocities

    def advance(start, stop):
        vv = v[start:stop] + (-k * (x[start:stop] - target[start:stop]) - c * v[start:stop]) * dt
        return vv, x[start:stop] + vv * dt

    parts = _parallel.map_chunks(advance, clustering.particle_count, min_chunk=1024)
    clustering.velocities = np.concatenate([p[0] for p in parts]).reshape(-1, 3)
    clustering.positions = np.concatenate([p[1] for p in parts]).reshape(-1, 3)
    return clustering, displaced_positions(clustering, skinned, target)


def displaced_positions(clustering: Clustering, skinned, target=None) -> np.ndarray:
    """Skinned positions plus the mean displacement of each vertex's particles."""
    skinned = np.asarray(skinned, dtype=float)
    if target is None:
        target = clustering.centers_of(skinned)
    pid, vid = clustering.pairs()
    disp = clustering.positions - target
    n = len(skinned)
    counts = np.bincount(vid, minlength=n).astype(float)
    out = np.empty_like(skinned)
    sel = disp[pid]
    for k in range(3):
        out[:, k] = np.bincount(vid, weights=sel[:, k], minlength=n)
    out /= np.maximum(counts, 1.0)[:, None]
    return skinned + out


def max_target_distance(clustering: Clustering, skinned) -> float:
    if clustering.particle_count == 0:
        return 0.0
    return float(np.linalg.norm(clustering.positions - clustering.centers_of(skinned), axis=1).max())


def mechanical_energy(clustering: Clustering, skinned, params: SoftBodyParams) -> float:
    """Kinetic plus spring energy ``0.5 * sum(|v|^2 + k |x - target|^2)``, unit masses."""
    u = clustering.positions - clustering.centers_of(skinned)
    v = clustering.velocities
    return float(0.5 * (np.sum(v * v) + params.k * np.sum(u * u)))


def energy_is_monotone(params: SoftBodyParams) -> bool:
    """Whether one step can never raise :func:`mechanical_energy`.

    Kinetic energy alone oscillates while the spring exchanges it with
    potential energy.  The total is non-increasing exactly when the
    quadratic form of the step's update matrix is negative semidefinite,
    which holds once damping is not too small relative to ``k dt``.
    """
    k, c, dt = params.k, params.c, params.dt
    m = np.array([[1.0 - k * dt * dt, dt * (1.0 - c * dt)], [-k * dt, 1.0 - c * dt]])
    q = np.diag([k, 1.0])
    return bool(np.linalg.eigvalsh(m.T @ q @ m - q).max() <= 1e-12 * k)
