import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import assert_maps_match, brute_adjacency
from meshsurgery import generate as gen
from meshsurgery.adjacency import AddedVertex, MeshDelta, apply_delta, build_adjacency
from meshsurgery.errors import ConsistencyError
from meshsurgery.mesh import SkinnedMesh
from meshsurgery.surgery import subdivide_1to4
from test_mesh import CUBE_FACES, CUBE_POS


def test_single_triangle(unit_triangle):
    maps = build_adjacency(unit_triangle)
    assert [len(n) for n in maps.vertex_neighbors] == [2, 2, 2]
    assert maps.face_neighbors == [[]]
    assert all(maps.is_boundary_edge(a, b) for a, b in ((0, 1), (1, 2), (0, 2)))


def test_two_triangles_sharing_an_edge():
    maps = build_adjacency(gen.plate(1))
    assert maps.face_neighbors == [[1], [0]]
    assert maps.edge_faces(0, 3) == [0, 1]


def test_closed_cube_matches_brute_scan():
    cube = SkinnedMesh(CUBE_POS, CUBE_FACES)
    maps = build_adjacency(cube)
    assert all(len(n) == 3 for n in maps.face_neighbors)
    assert {len(n) for n in maps.vertex_neighbors} <= {3, 4, 5, 6}
    assert_maps_match(maps, cube)


def test_non_manifold_edge_is_a_warning():
    pos = [[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1]]
    m = SkinnedMesh(pos, [[0, 1, 2], [1, 0, 3], [0, 1, 4]])
    maps = build_adjacency(m)
    assert len(maps.warnings) == 1
    assert maps.edge_faces(0, 1) == [0, 1, 2]


@pytest.mark.parametrize("mesh", [gen.plate(5), gen.sphere(6), gen.cylinder(12, 3)], ids=["plate", "sphere", "cyl"])
def test_build_matches_brute_force(mesh):
    assert_maps_match(build_adjacency(mesh), mesh)


def test_neighbours_are_symmetric():
    maps = build_adjacency(gen.sphere(8))
    for v, ns in enumerate(maps.vertex_neighbors):
        for u in ns:
            assert v in maps.vertex_neighbors[u]


def test_empty_delta_is_identity():
    m = gen.plate(3)
    maps = build_adjacency(m)
    before = maps.copy()
    assert apply_delta(maps, MeshDelta()) == before


def test_subdivision_delta_matches_rebuild():
    m = gen.plate(3)
    maps = build_adjacency(m)
    delta = subdivide_1to4(m, maps.copy(), [4])
    patched = m.apply_delta(delta)
    maps.apply_delta(delta)
    assert_maps_match(maps, patched)
    assert maps == build_adjacency(patched)


def test_removing_one_fan_face_shrinks_lists_symmetrically():
    # fan around vertex 0
    ring = [[np.cos(a), np.sin(a), 0] for a in np.linspace(0, 2 * np.pi, 6, endpoint=False)]
    m = SkinnedMesh([[0, 0, 0]] + ring, [[0, i, i % 6 + 1] for i in range(1, 7)])
    maps = build_adjacency(m)
    delta = MeshDelta(removed_faces=(2,))
    maps.apply_delta(delta)
    patched = m.apply_delta(delta)
    assert_maps_match(maps, patched)
    # edge 3-4 lost its only face
    assert 4 not in maps.vertex_neighbors[3] and 3 not in maps.vertex_neighbors[4]


def test_bad_delta_reports_offending_index():
    m = gen.plate(2)
    maps = build_adjacency(m)
    with pytest.raises(ConsistencyError) as e:
        maps.apply_delta(MeshDelta(removed_faces=(99,)))
    assert e.value.index == 99
    with pytest.raises(ConsistencyError) as e:
        maps.apply_delta(MeshDelta(added_faces=((0, 1, 500),)))
    assert e.value.index is not None
    with pytest.raises(ConsistencyError):
        maps.apply_delta(MeshDelta(added_vertices=(AddedVertex(3, np.zeros(3)),)))


def random_delta(rng, mesh):
    """Remove a few faces and add triangles over existing plus fresh vertices."""
    n, f = mesh.vertex_count, mesh.face_count
    removed = tuple(sorted(rng.choice(f, size=min(f, int(rng.integers(0, 4))), replace=False).tolist()))
    new_v = int(rng.integers(0, 3))
    added_v = tuple(AddedVertex(n + k, rng.normal(size=3), ((0, 1.0),)) for k in range(new_v))
    added = []
    for _ in range(int(rng.integers(0, 5))):
        tri = rng.choice(n + new_v, size=3, replace=False).tolist()
        added.append(tuple(tri))
    for k in range(new_v):
        tri = rng.choice(n, size=2, replace=False).tolist() + [n + k]
        added.append(tuple(tri))
    return MeshDelta(added_v, removed, tuple(added))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_random_delta_sequences_match_rebuild(seed):
    rng = np.random.default_rng(seed)
    mesh = gen.plate(4)
    maps = build_adjacency(mesh)
    for _ in range(15):
        delta = random_delta(rng, mesh)
        mesh = mesh.apply_delta(delta)
        maps.apply_delta(delta)
        assert maps.touched <= 16 * max(len(delta), 1)
    assert maps == build_adjacency(mesh)
    ref = brute_adjacency(mesh.faces, mesh.vertex_count)
    assert maps.edge_to_faces == ref["edge_to_faces"]


def test_patch_touches_are_bounded_by_delta_size():
    m = gen.sphere(30)
    maps = build_adjacency(m)
    delta = subdivide_1to4(m, maps.copy(), [10, 11])
    maps.apply_delta(delta)
    assert maps.touched <= 16 * len(delta)
