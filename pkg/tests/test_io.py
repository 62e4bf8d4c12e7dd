import numpy as np
import pytest

from meshsurgery import generate as gen
from meshsurgery.errors import ConsistencyError, FormatError
from meshsurgery.io import load_mesh, save_mesh, weights_path_for
from meshsurgery.mesh import SkinnedMesh, meshes_equal

from test_mesh import CUBE_FACES, CUBE_POS


def write(path, text):
    path.write_text(text)
    return path


def test_single_triangle_file(tmp_path):
    p = write(tmp_path / "t.obj", "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n")
    m = load_mesh(p)
    assert (m.vertex_count, m.face_count) == (3, 1)
    assert m.weights is None


def test_out_of_range_face_index(tmp_path):
    p = write(tmp_path / "t.obj", "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 5\n")
    with pytest.raises(ConsistencyError):
        load_mesh(p)


def test_parse_error_reports_line(tmp_path):
    p = write(tmp_path / "t.obj", "v 0 0 0\nv 1 zero 0\n")
    with pytest.raises(FormatError) as info:
        load_mesh(p)
    assert info.value.line == 2


def test_quads_rejected_with_line(tmp_path):
    p = write(tmp_path / "t.obj", "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\n\nf 1 2 3 4\n")
    with pytest.raises(FormatError) as info:
        load_mesh(p)
    assert info.value.line == 6


def test_cube_with_uniform_single_bone_weights(tmp_path):
    lines = [f"v {x} {y} {z}" for x, y, z in CUBE_POS] + [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in CUBE_FACES]
    p = write(tmp_path / "cube.obj", "\n".join(lines) + "\n")
    write(tmp_path / "cube.weights", "bones 1\nvertices 8\n" + "".join(f"{v} 0 1.0\n" for v in range(8)))
    m = load_mesh(p)
    assert m.face_count == 12
    assert all(ws == ((0, 1.0),) for ws in m.weights)


def test_weight_row_for_missing_vertex(tmp_path):
    p = write(tmp_path / "t.obj", "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n")
    w = write(tmp_path / "w.txt", "bones 1\n0 0 1\n1 0 1\n2 0 1\n7 0 1\n")
    with pytest.raises(ConsistencyError):
        load_mesh(p, w)


def test_weight_with_bad_bone(tmp_path):
    p = write(tmp_path / "t.obj", "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n")
    w = write(tmp_path / "w.txt", "bones 1\n0 0 1\n1 0 1\n2 3 1\n")
    with pytest.raises(ConsistencyError):
        load_mesh(p, w)


def test_slash_and_negative_indices(tmp_path):
    p = write(tmp_path / "t.obj", "v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nvt 1 0\nvt 0 1\nvn 0 0 1\n"
              "f 1/1/1 2/2/1 3/3/1\nf -3//1 -2//1 -1//1\n")
    m = load_mesh(p)
    assert m.faces.tolist() == [[0, 1, 2], [0, 1, 2]]
    assert np.allclose(m.uvs, [[0, 0], [1, 0], [0, 1]])


def test_round_trip_with_weights(tmp_path):
    m = gen.sphere(5)
    path = tmp_path / "s.obj"
    save_mesh(m, path)
    assert weights_path_for(path).exists()
    back = load_mesh(path)
    assert meshes_equal(m, back, atol=1e-12)


def test_round_trip_triangle_exact(tmp_path, unit_triangle):
    save_mesh(unit_triangle, tmp_path / "t.obj")
    back = load_mesh(tmp_path / "t.obj")
    assert np.array_equal(back.faces, unit_triangle.faces)
    assert np.array_equal(back.positions, unit_triangle.positions)


def test_empty_mesh_round_trip(tmp_path):
    save_mesh(SkinnedMesh.empty(), tmp_path / "e.obj")
    back = load_mesh(tmp_path / "e.obj")
    assert back.vertex_count == 0 and back.face_count == 0


def test_save_without_weights_removes_stale_sidecar(tmp_path, unit_triangle):
    path = tmp_path / "t.obj"
    save_mesh(unit_triangle, path)
    save_mesh(SkinnedMesh(unit_triangle.positions, unit_triangle.faces), path)
    assert not weights_path_for(path).exists()


def test_unwritable_path_raises_oserror(tmp_path, unit_triangle):
    with pytest.raises(OSError):
        save_mesh(unit_triangle, tmp_path / "missing_dir" / "t.obj")
