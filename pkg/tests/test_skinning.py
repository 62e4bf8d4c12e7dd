import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from meshsurgery import generate as gen
from meshsurgery.errors import ConsistencyError, FormatError, MeshSurgeryError
from meshsurgery.mesh import SkinnedMesh
from meshsurgery.skinning import (
    Pose, apply_pose, interpolate_weights, interpolate_weights_barycentric, load_pose, normalize_weights,
    save_pose, validate_weights,
)


def as_dict(ws):
    return dict(ws)


def test_endpoint_identity():
    w0 = ((0, 0.7), (1, 0.3))
    w1 = ((2, 1.0),)
    assert interpolate_weights(w0, w1, 0.0) == w0
    assert interpolate_weights(w0, w1, 1.0) == w1


def test_symmetric_midpoint():
    assert interpolate_weights(((0, 1.0),), ((1, 1.0),), 0.5) == ((0, 0.5), (1, 0.5))


def test_three_bone_blend_matches_convex_combination():
    w0 = ((0, 0.7), (1, 0.3))
    w1 = ((1, 0.6), (2, 0.4))
    out = as_dict(interpolate_weights(w0, w1, 0.25))
    # direct convex combination: 0.75 * w0 + 0.25 * w1
    expected = {0: 0.75 * 0.7, 1: 0.75 * 0.3 + 0.25 * 0.6, 2: 0.25 * 0.4}
    assert expected == pytest.approx({0: 0.525, 1: 0.375, 2: 0.1})
    assert out == pytest.approx(expected, abs=1e-12)


def test_pruning_keeps_largest_four():
    w0 = ((0, 0.3), (1, 0.3), (2, 0.2), (3, 0.2))
    w1 = ((4, 1.0),)
    out = interpolate_weights(w0, w1, 0.1, k=4)
    assert len(out) == 4
    assert 4 not in as_dict(out) or min(as_dict(out).values()) >= 0.1 * 0.999
    assert sum(w for _, w in out) == pytest.approx(1.0, abs=1e-12)


def test_barycentric_corner_and_uniform():
    wa, wb, wc = ((0, 1.0),), ((1, 1.0),), ((2, 1.0),)
    assert interpolate_weights_barycentric(wa, wb, wc, (1, 0, 0)) == wa
    out = as_dict(interpolate_weights_barycentric(wa, wb, wc, (1 / 3, 1 / 3, 1 / 3)))
    assert out == pytest.approx({0: 1 / 3, 1: 1 / 3, 2: 1 / 3})
    with pytest.raises(ValueError):
        interpolate_weights_barycentric(wa, wb, wc, (0.5, 0.6, -0.1))


weight_sets = st.lists(st.tuples(st.integers(0, 7), st.floats(0.01, 1.0)), min_size=1, max_size=6).map(normalize_weights)


@settings(max_examples=1000, deadline=None)
@given(weight_sets, weight_sets, weight_sets, st.tuples(st.floats(0, 1), st.floats(0, 1)))
def test_barycentric_output_is_normalized(wa, wb, wc, uv):
    u, v = uv
    if u + v > 1:
        u, v = 1 - u, 1 - v
    out = interpolate_weights_barycentric(wa, wb, wc, (u, v, max(0.0, 1.0 - u - v)))
    assert abs(sum(w for _, w in out) - 1.0) <= 1e-6
    assert all(w > 0 for _, w in out) and len(out) <= 4
    validate_weights(out, 8)


@settings(max_examples=300, deadline=None)
@given(weight_sets, weight_sets, st.floats(0, 1))
def test_edge_interpolation_is_convex_before_pruning(w0, w1, t):
    out = as_dict(interpolate_weights(w0, w1, t, k=16))
    a, b = as_dict(w0), as_dict(w1)
    for bone in set(a) | set(b):
        raw = (1 - t) * a.get(bone, 0.0) + t * b.get(bone, 0.0)
        assert out.get(bone, 0.0) == pytest.approx(raw, abs=1e-12)


def test_normalize_rejects_negative_and_empty():
    with pytest.raises(ConsistencyError):
        normalize_weights([(0, -0.1), (1, 1.1)])
    with pytest.raises(ConsistencyError):
        normalize_weights([(0, 0.0)])


def two_bone_mesh():
    pos = np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0]])
    w = [((0, 1.0),), ((0, 0.5), (1, 0.5)), ((1, 1.0),)]
    return SkinnedMesh(pos, [[0, 1, 2]], weights=w, bone_count=2)


def test_identity_pose_returns_rest_positions_exactly():
    m = gen.sphere(6)
    assert np.array_equal(apply_pose(m, Pose.identity(m.bone_count)), m.positions)


def test_single_bone_translation():
    m = SkinnedMesh(np.eye(3), [[0, 1, 2]], weights=[((0, 1.0),)] * 3, bone_count=1)
    pose = Pose.from_quaternions([(1, 0, 0, 0)], [(1, 0, 0)])
    assert np.allclose(apply_pose(m, pose), m.positions + [1, 0, 0])


def test_half_half_weights_blend_translation():
    m = two_bone_mesh()
    pose = Pose(np.tile(np.eye(3), (2, 1, 1)), [[0, 0, 0], [2, 0, 0]])
    out = apply_pose(m, pose)
    assert np.allclose(out[1], m.positions[1] + [1, 0, 0])


def test_rotation_matches_textbook_blend():
    m = two_bone_mesh()
    angle = 0.7
    q = [(1, 0, 0, 0), (np.cos(angle / 2), 0, 0, np.sin(angle / 2))]
    pose = Pose.from_quaternions(q, [[0, 0, 0], [0.5, -0.2, 1.0]])
    ref = np.zeros((3, 3))
    for i, ws in enumerate(m.weights):
        for b, w in ws:
            ref[i] += w * (pose.rotations[b] @ m.positions[i] + pose.translations[b])
    assert np.allclose(apply_pose(m, pose), ref, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=3, max_size=3))
def test_translating_every_bone_translates_output(shift):
    m = gen.sphere(4)
    rng = np.random.default_rng(0)
    q = rng.normal(size=(2, 4))
    base = Pose.from_quaternions(q, rng.normal(size=(2, 3)))
    moved = Pose(base.rotations, base.translations + np.asarray(shift))
    assert np.allclose(apply_pose(m, moved), apply_pose(m, base) + np.asarray(shift), atol=1e-9)


def test_apply_pose_needs_weights_and_matching_bones():
    with pytest.raises(MeshSurgeryError):
        apply_pose(SkinnedMesh(np.eye(3), [[0, 1, 2]]), Pose.identity(1))
    with pytest.raises(ConsistencyError):
        apply_pose(two_bone_mesh(), Pose.identity(3))


def test_pose_rejects_non_orthonormal():
    with pytest.raises(ConsistencyError):
        Pose([np.diag([1.0, 2.0, 1.0])], [[0, 0, 0]])


def test_pose_file_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    pose = Pose.from_quaternions(rng.normal(size=(3, 4)), rng.normal(size=(3, 3)))
    save_pose(pose, tmp_path / "p.pose")
    back = load_pose(tmp_path / "p.pose")
    assert np.allclose(back.rotations, pose.rotations, atol=1e-12)
    assert np.allclose(back.translations, pose.translations)


def test_pose_file_errors(tmp_path):
    p = tmp_path / "bad.pose"
    p.write_text("bones 2\n0 1 0 0 0 0 0 0\n")
    with pytest.raises(FormatError):
        load_pose(p)
    p.write_text("0 1 0 0 0 0 0 0\n")
    with pytest.raises(FormatError):
        load_pose(p)
