import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from meshsurgery import generate as gen
from meshsurgery.errors import ConsistencyError
from meshsurgery.mesh import (
    SkinnedMesh, compact, face_components, mesh_stats, patch_face_array, remove_duplicates, submesh,
)

CUBE_POS = np.array([[x, y, z] for x in (0, 1) for y in (0, 1) for z in (0, 1)], dtype=float)
CUBE_FACES = np.array([
    [0, 1, 3], [0, 3, 2], [4, 6, 7], [4, 7, 5], [0, 4, 5], [0, 5, 1],
    [2, 3, 7], [2, 7, 6], [0, 2, 6], [0, 6, 4], [1, 5, 7], [1, 7, 3],
])


def cube():
    return SkinnedMesh(CUBE_POS, CUBE_FACES, weights=[((0, 1.0),)] * 8, bone_count=1)


def test_single_triangle_stats(unit_triangle):
    s = mesh_stats(unit_triangle)
    assert (s.vertex_count, s.face_count, s.edge_count, s.boundary_edge_count, s.connected_components) == (3, 1, 3, 3, 1)
    assert s.total_area == pytest.approx(0.5)


def test_closed_cube_stats():
    s = mesh_stats(cube())
    assert s.boundary_edge_count == 0
    assert s.connected_components == 1
    assert s.euler_characteristic == 2
    assert s.total_area == pytest.approx(6.0)


def test_two_disjoint_triangles_are_two_components():
    m = gen.merge([gen.triangle(), gen.triangle()])
    assert mesh_stats(m).connected_components == 2


def test_validate_rejects_bad_index_and_degenerate_face():
    with pytest.raises(ConsistencyError):
        SkinnedMesh(np.zeros((3, 3)), [[0, 1, 5]]).validate()
    with pytest.raises(ConsistencyError):
        SkinnedMesh(np.eye(3), [[0, 1, 1]]).validate()


def test_validate_rejects_unnormalized_weights():
    with pytest.raises(ConsistencyError):
        SkinnedMesh(np.eye(3), [[0, 1, 2]], weights=[((0, 0.5),)] * 3, bone_count=1).validate()


def test_arrays_are_read_only(unit_triangle):
    with pytest.raises(ValueError):
        unit_triangle.positions[0, 0] = 5.0


def test_coincident_vertices_of_abutting_triangles_merge():
    pos = [[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]]
    m = SkinnedMesh(pos, [[0, 1, 2], [3, 4, 5]])
    out, remap = remove_duplicates(m)
    assert out.vertex_count == 4
    assert out.face_count == 2
    assert remap.tolist() == [0, 1, 2, 1, 3, 2]


def test_zero_tolerance_distinct_vertices_is_identity():
    m = gen.plate(3)
    out, remap = remove_duplicates(m, 0.0)
    assert np.array_equal(remap, np.arange(m.vertex_count))
    assert np.array_equal(out.faces, m.faces)


def test_unwelded_quad_oracle():
    # quad stored as 6 loose vertices; an all-pairs distance scan gives the merge set
    pos = np.array([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 0, 0], [1, 1, 0], [0, 1, 0]], dtype=float)
    m = SkinnedMesh(pos, [[0, 1, 2], [3, 4, 5]])
    out, remap = remove_duplicates(m, 1e-9)
    classes = {}
    for i, j in itertools.product(range(6), repeat=2):
        if np.linalg.norm(pos[i] - pos[j]) <= 1e-9:
            classes.setdefault(i, set()).add(j)
    expected = len({min(c) for c in classes.values()})
    assert out.vertex_count == expected == 4
    assert out.face_count == 2


def test_collapsed_face_is_dropped():
    m = SkinnedMesh([[0, 0, 0], [1e-12, 0, 0], [0, 1, 0], [1, 1, 0]], [[0, 1, 2], [0, 3, 2]])
    out, _ = remove_duplicates(m, 1e-6)
    assert out.face_count == 1


def test_survivor_keeps_own_weights():
    pos = [[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 0]]
    w = [((0, 1.0),), ((0, 1.0),), ((0, 1.0),), ((1, 1.0),)]
    m = SkinnedMesh(pos, [[0, 1, 2], [3, 2, 1]], weights=w, bone_count=2)
    out, remap = remove_duplicates(m)
    assert remap[3] == 0
    assert out.weights[0] == ((0, 1.0),)


def test_remove_duplicates_empty_mesh():
    out, remap = remove_duplicates(SkinnedMesh.empty())
    assert out.vertex_count == 0 and len(remap) == 0


points = st.lists(st.tuples(*[st.integers(0, 6)] * 3), min_size=1, max_size=40)


@settings(max_examples=60, deadline=None)
@given(points, st.sampled_from([0.0, 0.05, 0.3, 1.0]))
def test_remove_duplicates_leaves_no_close_pair_and_is_idempotent(pts, tol):
    pos = np.asarray(pts, dtype=float) * 0.25
    m = SkinnedMesh(pos, np.zeros((0, 3), dtype=np.int64))
    out, remap = remove_duplicates(m, tol)
    p = out.positions
    for i in range(len(p)):
        for j in range(i + 1, len(p)):
            assert np.linalg.norm(p[i] - p[j]) > tol
    # every vertex maps onto a survivor within tol of it
    assert np.all(np.linalg.norm(pos - out.positions[remap], axis=1) <= tol + 1e-15)
    again, remap2 = remove_duplicates(out, tol)
    assert np.array_equal(again.positions, out.positions)
    assert np.array_equal(remap2, np.arange(out.vertex_count))


def test_face_components_ordered_by_lowest_face():
    m = gen.merge([gen.triangle(), gen.plate(1), gen.triangle()])
    n, labels = face_components(m.faces, m.vertex_count)
    assert n == 3
    assert labels.tolist() == [0, 1, 1, 2]


def test_patch_face_array_slot_rule():
    faces = np.arange(15).reshape(5, 3)
    out = patch_face_array(faces, [1, 3], [(20, 21, 22)])
    # first new face fills slot 1; the surplus hole at 3 takes the last face
    assert out.tolist() == [[0, 1, 2], [20, 21, 22], [6, 7, 8], [12, 13, 14]]
    out = patch_face_array(faces, [0], [(20, 21, 22), (30, 31, 32)])
    assert out[0].tolist() == [20, 21, 22] and out[-1].tolist() == [30, 31, 32]


def test_submesh_and_compact():
    m = gen.plate(2)
    s = submesh(m, [0, 1])
    assert s.face_count == 2
    assert s.area() == pytest.approx(m.face_areas()[:2].sum())
    loose = SkinnedMesh(np.vstack([m.positions, [[9, 9, 9]]]), m.faces)
    c, idx = compact(loose)
    assert c.vertex_count == m.vertex_count and idx[-1] == -1
