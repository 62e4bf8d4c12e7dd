import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import assert_maps_match, weights_ok
from meshsurgery import generate as gen
from meshsurgery.adjacency import build_adjacency
from meshsurgery.mesh import SkinnedMesh, face_components, mesh_stats
from meshsurgery.predicates import Plane
from meshsurgery.surgery import cut
from meshsurgery.surgery._common import mesh_eps
from test_mesh import CUBE_FACES, CUBE_POS


def run_cut(mesh, plane):
    maps = build_adjacency(mesh)
    rep = cut(mesh, maps, plane)
    return rep, maps


def side_pure(sub, plane, eps):
    d = plane.signed_distance(sub.positions[sub.referenced()])
    return not ((d > eps).any() and (d < -eps).any())


def test_tetrahedron_half_height():
    tet = gen.tetrahedron()
    plane = Plane((0.0, 0.0, 1.0), 0.5)
    rep, _ = run_cut(tet, plane)
    # analytic edge-plane solve: every edge to the apex crosses at its midpoint
    pos = tet.positions
    expected = [0.5 * (pos[i] + pos[3]) for i in range(3)]
    got = sorted(map(tuple, np.round(rep.intersection_points, 12)))
    assert got == sorted(map(tuple, np.round(expected, 12)))
    assert rep.intersection_count == 3
    assert len(rep.submeshes) == 2
    assert sum(s.area() for s in rep.submeshes) == pytest.approx(tet.area(), rel=1e-12)


def test_plane_above_cube_misses():
    cube = SkinnedMesh(CUBE_POS, CUBE_FACES)
    rep, maps = run_cut(cube, Plane((0.0, 0.0, 1.0), 10.0))
    assert rep.intersection_count == 0
    assert len(rep.submeshes) == 1 and rep.submeshes[0] is cube
    assert maps == build_adjacency(cube)


def test_two_disjoint_tetrahedra_give_four_pieces():
    a = gen.tetrahedron()
    b = SkinnedMesh(a.positions + [5.0, 0, 0], a.faces, weights=a.weights, bone_count=a.bone_count)
    m = gen.merge([a, b])
    plane = Plane((0.0, 0.0, 1.0), 0.4)
    rep, _ = run_cut(m, plane)
    # flood fill over the per-side faces gives the expected piece count
    n, _ = face_components(rep.mesh.faces, rep.mesh.vertex_count)
    assert len(rep.submeshes) == n == 4


def test_cylinder_mid_plane_crossings():
    for n in (16, 32, 64):
        cyl = gen.cylinder(n, 4)
        rep, _ = run_cut(cyl, Plane((0.0, 0.0, 1.0), gen.cylinder_mid_plane_height(4)))
        assert rep.intersection_count == 2 * n


def test_vertex_accounting_and_decoupling():
    cyl = gen.cylinder(20, 4)
    rep, maps = run_cut(cyl, Plane((0.0, 0.0, 1.0), gen.cylinder_mid_plane_height(4)))
    assert rep.mesh.vertex_count == cyl.vertex_count + 2 * rep.intersection_count
    assert mesh_stats(rep.mesh).connected_components == 2
    assert_maps_match(maps, rep.mesh)


def test_on_plane_vertices_stay_positive_and_negative_gets_copy():
    plate = gen.plate(4)
    plane = Plane((1.0, 0.0, 0.0), 0.5)
    rep, maps = run_cut(plate, plane)
    assert rep.intersection_count > 0
    assert len(rep.submeshes) == 2
    for sub in rep.submeshes:
        assert side_pure(sub, plane, mesh_eps(plate))
    assert sum(s.area() for s in rep.submeshes) == pytest.approx(1.0, rel=1e-12)
    assert_maps_match(maps, rep.mesh)


def test_empty_mesh():
    rep, _ = run_cut(SkinnedMesh.empty(), Plane((0.0, 0.0, 1.0), 0.0))
    assert rep.intersection_count == 0 and rep.submeshes == []


def test_new_vertices_interpolate_weights():
    cyl = gen.cylinder(8, 2)
    rep, _ = run_cut(cyl, Plane.from_normal((0.2, 0.1, 1.0), 0.45))
    assert weights_ok(rep.mesh)
    # the cylinder ramp is linear along z, so interpolation along an edge reproduces the ramp
    fresh = rep.mesh.weights[cyl.vertex_count:]
    x = cyl.positions[:, 2]
    s = (rep.mesh.positions[cyl.vertex_count:, 2] - x.min()) / (x.max() - x.min())
    ref = [((0, 1 - t), (1, t)) for t in s]
    for got, want in zip(fresh, ref):
        g, w = dict(got), dict(want)
        for bone in set(g) | set(w):
            assert g.get(bone, 0.0) == pytest.approx(w.get(bone, 0.0), abs=1e-9)


planes = st.tuples(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1), st.floats(-0.9, 0.9)).filter(
    lambda p: np.linalg.norm(p[:3]) > 0.1)


@settings(max_examples=40, deadline=None)
@given(planes, st.sampled_from(["sphere", "cylinder"]))
def test_area_purity_and_oracle(p, kind):
    mesh = gen.sphere(8) if kind == "sphere" else gen.cylinder(12, 3)
    plane = Plane.from_normal(p[:3], p[3])
    rep, maps = run_cut(mesh, plane)
    assert sum(s.area() for s in rep.submeshes) == pytest.approx(mesh.area(), rel=1e-6)
    eps = mesh_eps(mesh)
    assert all(side_pure(s, plane, eps) for s in rep.submeshes)
    assert weights_ok(rep.mesh)
    assert_maps_match(maps, rep.mesh)


def test_deterministic_repeat():
    mesh = gen.sphere(10)
    plane = Plane.from_normal((0.3, -0.2, 1.0), 0.1)
    a, _ = run_cut(mesh, plane)
    b, _ = run_cut(mesh, plane)
    assert a.mesh.positions.tobytes() == b.mesh.positions.tobytes()
    assert a.mesh.faces.tobytes() == b.mesh.faces.tobytes()
