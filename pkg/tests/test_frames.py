import math
import random

import pytest

from freeplay.frames import (
    DisconnectedFrames,
    FrameTree,
    NoSampleBefore,
    Transform2D,
    Transform3D,
    UnknownFrame,
    normalize_angle,
)

from oracles import mat_apply, mat_from_2d, mat_from_quat


def random_2d(rng):
    return Transform2D(rng.uniform(-10, 10), rng.uniform(-2, 2), rng.uniform(-2, 2))


def random_quat(rng):
    q = [rng.gauss(0, 1) for _ in range(4)]
    n = math.sqrt(sum(v * v for v in q))
    return tuple(v / n for v in q)


def random_3d(rng):
    return Transform3D(random_quat(rng), tuple(rng.uniform(-2, 2) for _ in range(3)))


def test_translations_add():
    t = Transform2D.translation(2, 0).compose(Transform2D.translation(0, 3))
    assert (t.x, t.y) == (2, 3)
    assert t.theta == 0.0


def test_identity_compose_is_noop():
    rng = random.Random(1)
    for _ in range(20):
        t = random_2d(rng)
        composed = Transform2D.identity().compose(t)
        assert composed.theta == pytest.approx(t.theta, abs=1e-12)
        assert composed.x == pytest.approx(t.x, abs=1e-12)
        assert composed.y == pytest.approx(t.y, abs=1e-12)


def test_rotation_after_translation_matches_matrix_oracle():
    t = Transform2D.rotation(math.pi / 2).compose(Transform2D.translation(1, 0))
    px, py = t.apply(1, 0)
    assert px == pytest.approx(0.0, abs=1e-12)
    assert py == pytest.approx(2.0, abs=1e-12)
    # same through explicit homogeneous matrices
    m = mat_from_2d(math.pi / 2, 0, 0) @ mat_from_2d(0, 1, 0)
    ox, oy = mat_apply(m, 1, 0)
    assert (px, py) == pytest.approx((ox, oy), abs=1e-12)


def test_random_compose_matches_matrix_oracle():
    rng = random.Random(7)
    for _ in range(100):
        a, b = random_2d(rng), random_2d(rng)
        c = a.compose(b)
        m = mat_from_2d(a.theta, a.x, a.y) @ mat_from_2d(b.theta, b.x, b.y)
        for _ in range(3):
            px, py = rng.uniform(-3, 3), rng.uniform(-3, 3)
            got = c.apply(px, py)
            want = mat_apply(m, px, py)
            assert got == pytest.approx(want, abs=1e-9)


def test_angle_normalized_into_half_open_interval():
    assert normalize_angle(math.pi) == pytest.approx(math.pi)
    assert normalize_angle(-math.pi) == pytest.approx(math.pi)
    assert normalize_angle(3 * math.pi) == pytest.approx(math.pi)
    rng = random.Random(3)
    for _ in range(200):
        t = normalize_angle(rng.uniform(-50, 50))
        assert -math.pi < t <= math.pi


def test_invert_compose_is_identity_2d():
    rng = random.Random(11)
    for _ in range(200):
        t = random_2d(rng)
        i = t.invert().compose(t)
        assert abs(i.theta) < 1e-9
        assert abs(i.x) < 1e-9 and abs(i.y) < 1e-9


def test_invert_compose_is_identity_3d():
    rng = random.Random(13)
    for _ in range(200):
        t = random_3d(rng)
        i = t.invert().compose(t)
        assert abs(abs(i.rotation[0]) - 1.0) < 1e-9
        for v in i.translation:
            assert abs(v) < 1e-9


def test_3d_apply_matches_matrix_oracle():
    rng = random.Random(17)
    for _ in range(100):
        a, b = random_3d(rng), random_3d(rng)
        c = a.compose(b)
        m = mat_from_quat(a.rotation, a.translation) @ mat_from_quat(b.rotation, b.translation)
        v = tuple(rng.uniform(-2, 2) for _ in range(3))
        got = c.apply(v)
        want = (m @ [*v, 1.0])[:3]
        assert got == pytest.approx(tuple(want), abs=1e-9)


def test_quaternion_norm_stable_over_many_compositions():
    rng = random.Random(23)
    acc = Transform3D.identity()
    step = random_3d(rng)
    for _ in range(1_000_000):
        acc = acc.compose(step)
    q = acc.rotation
    norm = math.sqrt(sum(v * v for v in q))
    assert abs(norm - 1.0) <= 1e-9


class TestFrameTree:
    def test_same_frame_resolves_identity(self):
        tree = FrameTree()
        t = tree.resolve("sandtray", "sandtray", 0)
        assert t.rotation == pytest.approx((1, 0, 0, 0))
        assert t.translation == pytest.approx((0, 0, 0))

    def test_static_chain_matches_matrix_oracle(self):
        tree = FrameTree()
        cam = Transform3D((1, 0, 0, 0), (0.3, 0, 0.2))
        half = math.pi / 4  # 90 degrees about z
        optical = Transform3D((math.cos(half), 0, 0, math.sin(half)), (0, 0, 0))
        tree.attach_static("camera1", "sandtray", cam)
        tree.attach_static("optical", "camera1", optical)
        got = tree.resolve("optical", "sandtray", 0)
        m = mat_from_quat(cam.rotation, cam.translation) @ mat_from_quat(
            optical.rotation, optical.translation
        )
        v = (0.1, 0.2, 0.3)
        assert got.apply(v) == pytest.approx(tuple((m @ [*v, 1.0])[:3]), abs=1e-9)

    def test_disconnected_roots(self):
        tree = FrameTree()
        tree.attach_static("a", "island1", Transform3D.identity())
        tree.attach_static("b", "island2", Transform3D.identity())
        with pytest.raises(DisconnectedFrames):
            tree.resolve("a", "b", 0)

    def test_unknown_frame(self):
        tree = FrameTree()
        with pytest.raises(UnknownFrame):
            tree.resolve("sandtray", "nope", 0)

    def test_dynamic_lookup_uses_latest_sample_not_after(self):
        tree = FrameTree()
        tree.attach_dynamic("robot", "sandtray")
        t1 = Transform3D((1, 0, 0, 0), (1, 0, 0))
        t2 = Transform3D((1, 0, 0, 0), (2, 0, 0))
        tree.update("robot", t1, 100)
        tree.update("robot", t2, 200)
        assert tree.resolve("robot", "sandtray", 150).translation[0] == pytest.approx(1.0)
        assert tree.resolve("robot", "sandtray", 200).translation[0] == pytest.approx(2.0)
        assert tree.resolve("robot", "sandtray", 999).translation[0] == pytest.approx(2.0)
        with pytest.raises(NoSampleBefore):
            tree.resolve("robot", "sandtray", 99)

    def test_history_pruned_to_window(self):
        tree = FrameTree(history_us=1_000_000)
        tree.attach_dynamic("robot", "sandtray")
        for i in range(10):
            tree.update("robot", Transform3D((1, 0, 0, 0), (i, 0, 0)), i * 500_000)
        # samples older than latest - 1s are gone
        with pytest.raises(NoSampleBefore):
            tree.resolve("robot", "sandtray", 1_000_000)
        assert tree.resolve("robot", "sandtray", 4_000_000).translation[0] == pytest.approx(8.0)

    def test_cycle_rejected(self):
        tree = FrameTree()
        tree.attach_static("a", "sandtray", Transform3D.identity())
        tree.attach_static("b", "a", Transform3D.identity())
        with pytest.raises(ValueError):
            tree.attach_static("sandtray", "b", Transform3D.identity())

    def test_resolve_symmetry_random_trees(self):
        rng = random.Random(31)
        tree = FrameTree()
        names = ["sandtray"]
        for i in range(12):
            name = f"f{i}"
            parent = rng.choice(names)
            tree.attach_static(name, parent, random_3d(rng))
            names.append(name)
        for _ in range(50):
            a, b = rng.choice(names), rng.choice(names)
            fwd = tree.resolve(a, b, 0)
            back = tree.resolve(b, a, 0).invert()
            v = tuple(rng.uniform(-1, 1) for _ in range(3))
            assert fwd.apply(v) == pytest.approx(back.apply(v), abs=1e-9)
