import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_fps, brute_knn
from riframe.cloud import (
    PointCloud,
    add_noise,
    apply_rotation,
    augment,
    farthest_point_sample,
    fps_indices,
    knn,
    random_sample,
)
from riframe.errors import KTooLarge, NotRotation, TooFewPoints
from riframe.linalg3 import random_rotation


def _line(xs):
    return PointCloud(np.c_[xs, np.zeros(len(xs)), np.zeros(len(xs))])


def _min_pairwise(p):
    d = np.linalg.norm(p[:, None] - p[None], axis=-1)
    d[np.arange(len(p)), np.arange(len(p))] = np.inf
    return d.min()


class TestPointCloud:
    def test_rejects_bad_shape(self):
        with pytest.raises(ValueError):
            PointCloud(np.zeros((4, 2)))

    def test_rejects_empty(self):
        with pytest.raises(TooFewPoints):
            PointCloud(np.zeros((0, 3)))

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            PointCloud([[0.0, np.inf, 0.0]])


class TestFarthestPointSample:
    def test_colinear_forced(self):
        assert list(fps_indices(_line([0, 1, 2, 9]).points, 2, 0)) == [0, 3]

    def test_exhaustion_is_permutation(self, rng):
        pc = PointCloud(rng.standard_normal((50, 3)))
        out = farthest_point_sample(pc, 50, seed=3)
        assert sorted(map(tuple, out.points)) == sorted(map(tuple, pc.points))

    def test_matches_brute_force(self, rng):
        pts = rng.standard_normal((120, 3))
        assert list(fps_indices(pts, 30, 7)) == brute_fps(pts, 30, 7)

    def test_ties_take_lowest_index(self):
        pts = np.array([[0, 0, 0], [1, 0, 0], [-1, 0, 0], [0, 1, 0]], dtype=float)
        assert fps_indices(pts, 2, 0)[1] == 1

    def test_spreads_better_than_random(self):
        wins = 0
        for trial in range(100):
            pc = PointCloud(np.random.default_rng(trial).standard_normal((1024, 3)))
            a = _min_pairwise(farthest_point_sample(pc, 512, trial).points)
            b = _min_pairwise(random_sample(pc, 512, trial).points)
            wins += a >= b
        assert wins >= 95

    def test_deterministic_and_seeded_start(self, rng):
        pc = PointCloud(rng.standard_normal((200, 3)))
        a = farthest_point_sample(pc, 20, 5)
        assert np.array_equal(a.points, farthest_point_sample(pc, 20, 5).points)
        assert a.seed == 5

    def test_permutation_gives_same_set(self, rng):
        pts = rng.standard_normal((300, 3))
        perm = rng.permutation(300)
        a = fps_indices(pts, 40, 11)
        b = perm[fps_indices(pts[perm], 40, int(np.argsort(perm)[11]))]
        assert set(a) == set(b)

    def test_too_many(self, rng):
        with pytest.raises(TooFewPoints):
            farthest_point_sample(PointCloud(rng.standard_normal((5, 3))), 6, 0)


class TestRandomSample:
    def test_permutation(self, rng):
        pc = PointCloud(rng.standard_normal((30, 3)))
        out = random_sample(pc, 30, 1)
        assert sorted(map(tuple, out.points)) == sorted(map(tuple, pc.points))

    def test_single_point(self, rng):
        pc = PointCloud(rng.standard_normal((30, 3)))
        p = random_sample(pc, 1, 2).points[0]
        assert any(np.array_equal(p, q) for q in pc.points)

    def test_deterministic(self, rng):
        pc = PointCloud(rng.standard_normal((30, 3)))
        assert np.array_equal(random_sample(pc, 10, 4).points, random_sample(pc, 10, 4).points)

    def test_too_many(self, rng):
        with pytest.raises(TooFewPoints):
            random_sample(PointCloud(rng.standard_normal((3, 3))), 4, 0)


class TestKnn:
    def test_line(self):
        nb = knn(_line([0, 1, 3]), 1)
        assert nb.indices[:, 0].tolist() == [1, 0, 1]

    def test_all_others(self, rng):
        pts = rng.standard_normal((9, 3))
        nb = knn(pts, 8)
        for i, row in enumerate(nb.indices):
            assert sorted(row) == [j for j in range(9) if j != i]

    def test_matches_brute_force(self, rng):
        pts = rng.standard_normal((1024, 3))
        nb = knn(pts, 32)
        sub = rng.choice(1024, 40, replace=False)
        idx, dist = brute_knn(pts, 32)
        np.testing.assert_array_equal(nb.indices[sub], idx[sub])
        np.testing.assert_allclose(nb.distances[sub], dist[sub], rtol=1e-12)

    def test_full_brute_force_small(self, rng):
        pts = rng.standard_normal((150, 3))
        idx, dist = brute_knn(pts, 10)
        nb = knn(pts, 10)
        np.testing.assert_array_equal(nb.indices, idx)
        np.testing.assert_array_equal(nb.d_max, nb.distances[:, -1])

    def test_ties_lowest_index(self):
        pts = np.array([[0, 0, 0], [1, 0, 0], [-1, 0, 0], [0, 1, 0], [5, 5, 5]], dtype=float)
        assert knn(pts, 2).indices[0].tolist() == [1, 2]

    def test_kdtree_agrees(self, rng):
        pts = rng.standard_normal((800, 3))
        a, b = knn(pts, 16), knn(pts, 16, method="kdtree")
        np.testing.assert_array_equal(a.indices, b.indices)

    def test_queries_subset(self, rng):
        pts = rng.standard_normal((100, 3))
        q = np.array([3, 50, 99])
        np.testing.assert_array_equal(knn(pts, 5, queries=q).indices, knn(pts, 5).indices[q])

    def test_rotation_invariant_indices(self, rng):
        pc = PointCloud(rng.standard_normal((300, 3)))
        base = knn(pc, 16).indices
        for s in range(100):
            np.testing.assert_array_equal(knn(apply_rotation(pc, random_rotation(s)), 16).indices, base)

    def test_k_too_large(self, rng):
        with pytest.raises(KTooLarge):
            knn(rng.standard_normal((5, 3)), 5)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(2, 40), st.integers(0, 2**31 - 1))
    def test_property_sorted_distinct(self, n, seed):
        pts = np.random.default_rng(seed).standard_normal((n, 3))
        k = max(1, n // 2)
        nb = knn(pts, k)
        assert np.all(np.diff(nb.distances, axis=1) >= 0)
        for i, row in enumerate(nb.indices):
            assert len(set(row)) == k and i not in row


class TestTransforms:
    def test_identity_rotation(self, rng):
        pc = PointCloud(rng.standard_normal((10, 3)))
        assert np.array_equal(apply_rotation(pc, np.eye(3)).points, pc.points)

    def test_inverse_and_norms(self, rng):
        pc = PointCloud(rng.standard_normal((100, 3)))
        r = random_rotation(3)
        out = apply_rotation(pc, r)
        np.testing.assert_allclose(apply_rotation(out, r.T).points, pc.points, atol=1e-12)
        np.testing.assert_allclose(np.linalg.norm(out.points, axis=1), np.linalg.norm(pc.points, axis=1), atol=1e-12)

    def test_rejects_reflection(self, rng):
        with pytest.raises(NotRotation):
            apply_rotation(PointCloud(rng.standard_normal((4, 3))), np.diag([1.0, -1.0, 1.0]))

    def test_augment_identity(self, rng):
        pc = PointCloud(rng.standard_normal((20, 3)))
        assert np.array_equal(augment(pc, 1, 0.0, (1.0, 1.0)).points, pc.points)

    def test_augment_scale_doubles_distances(self, rng):
        pc = PointCloud(rng.standard_normal((20, 3)))
        out = augment(pc, 1, 0.0, (2.0, 2.0))
        d0 = np.linalg.norm(pc.points[:, None] - pc.points[None], axis=-1)
        d1 = np.linalg.norm(out.points[:, None] - out.points[None], axis=-1)
        np.testing.assert_allclose(d1, 2 * d0, rtol=1e-12)

    def test_augment_defaults_in_range(self, rng):
        pc = PointCloud(np.zeros((1, 3)) + [0, 0, 0])
        for s in range(50):
            t = augment(pc, s).points[0]
            assert np.all(np.abs(t) <= 0.2)

    def test_augment_deterministic(self, rng):
        pc = PointCloud(rng.standard_normal((20, 3)))
        assert np.array_equal(augment(pc, 9).points, augment(pc, 9).points)

    def test_noise_identity(self, rng):
        pc = PointCloud(rng.standard_normal((20, 3)))
        assert np.array_equal(add_noise(pc, 0.0, 0, 1).points, pc.points)

    def test_outliers_appended_in_unit_ball(self, rng):
        pc = PointCloud(rng.standard_normal((20, 3)))
        out = add_noise(pc, 0.0, 5, 1)
        assert len(out) == 25
        assert np.all(np.linalg.norm(out.points[20:], axis=1) <= 1.0)

    def test_noise_std(self):
        pc = PointCloud(np.zeros((1_000_000 // 3 + 1, 3)))
        out = add_noise(pc, 0.01, 0, 0)
        assert 0.0099 <= out.points.std() <= 0.0101
