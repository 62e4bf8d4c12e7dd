import sys

import numpy as np
import pytest

from meshsurgery import generate as gen
from meshsurgery.mesh import SkinnedMesh


def brute_adjacency(faces, n_vertices):
    """Neighbour tables by direct enumeration, independent of the library's builder."""
    faces = [tuple(int(i) for i in f) for f in np.asarray(faces).reshape(-1, 3)]
    edge_faces = {}
    for f, (a, b, c) in enumerate(faces):
        for u, v in ((a, b), (b, c), (c, a)):
            edge_faces.setdefault((min(u, v), max(u, v)), []).append(f)
    vn = [set() for _ in range(n_vertices)]
    for u, v in edge_faces:
        vn[u].add(v)
        vn[v].add(u)
    fn = [set() for _ in faces]
    for fs in edge_faces.values():
        for f in fs:
            fn[f].update(g for g in fs if g != f)
    return {
        "faces": faces,
        "vertex_neighbors": [sorted(s) for s in vn],
        "face_neighbors": [sorted(s) for s in fn],
        "edge_to_faces": {e: sorted(fs) for e, fs in edge_faces.items()},
    }


def assert_maps_match(maps, mesh):
    ref = brute_adjacency(mesh.faces, mesh.vertex_count)
    assert maps.faces == ref["faces"]
    assert maps.vertex_neighbors == ref["vertex_neighbors"]
    assert maps.face_neighbors == ref["face_neighbors"]
    assert maps.edge_to_faces == ref["edge_to_faces"]


def polygon_area(points):
    """Shoelace area of a planar polygon given in order (2D)."""
    p = np.asarray(points, dtype=float)
    x, y = p[:, 0], p[:, 1]
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def weights_ok(mesh, tol=1e-6):
    if mesh.weights is None:
        return True
    for ws in mesh.weights:
        if not ws or abs(sum(w for _, w in ws) - 1.0) > tol or any(w < 0 for _, w in ws):
            return False
    return True


@pytest.fixture
def unit_triangle():
    return gen.triangle()


@pytest.fixture
def unit_cube_points():
    corners = np.array([[x, y, z] for x in (0, 1) for y in (0, 1) for z in (0, 1)], dtype=float)
    return SkinnedMesh(corners, np.zeros((0, 3), dtype=np.int64))


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    results = getattr(acceptance, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for k in sorted(results):
            terminalreporter.write_line(results[k])
