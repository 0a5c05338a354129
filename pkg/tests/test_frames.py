import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import jacobi_eigh
from riframe.cloud import NeighborIndex, PointCloud, apply_rotation, knn
from riframe.errors import BarycenterCoincides, DegenerateCloud, DegenerateNeighborhood, ZeroWeightSum
from riframe.frames import (
    DisambiguationStrategy,
    Frame,
    cross_angles_deg,
    grf,
    local_covariance,
    lrf,
    lrf_bases,
    lrf_weights,
    make_proper,
    pairwise_angles_deg,
    relative_angle_deg,
    relative_rotation,
    relative_translation,
    resolve_signs,
    sign_votes,
)
from riframe.linalg3 import random_rotation, z_rotation


def _patch(rng, n=32):
    c = rng.uniform(-2, 2, 3) + 0.5
    r = random_rotation(rng)
    return c + (rng.standard_normal((n, 3)) * [0.2, 0.1, 0.04]) @ r.T


def _manual_nbrs(center, neighbors):
    pts = np.vstack([center, neighbors])
    d = np.linalg.norm(pts[1:] - pts[0], axis=1)
    idx = np.zeros((len(pts), len(neighbors)), dtype=int)
    dist = np.zeros_like(idx, dtype=float)
    idx[0] = np.arange(1, len(pts))
    dist[0] = d
    return PointCloud(pts), NeighborIndex(idx, dist)


class TestWeightsAndCovariance:
    def test_hand_example(self):
        pc, nb = _manual_nbrs([0, 0, 0], [[1, 0, 0], [0.5, 0, 0]])
        np.testing.assert_allclose(lrf_weights(nb.distances[:1])[0], [0, 1], atol=1e-11)
        np.testing.assert_allclose(local_covariance(pc, 0, nb), 0.25 * np.diag([1, 0, 0]), atol=1e-11)

    def test_equidistant_uniform_when_regularized(self):
        w = lrf_weights(np.array([[1.0, 1.0]]))
        np.testing.assert_allclose(w, [[0.5, 0.5]])

    def test_equidistant_raises_without_regularization(self):
        with pytest.raises(ZeroWeightSum):
            lrf_weights(np.array([[1.0, 1.0]]), regularize=False)

    def test_weights_sum_to_one(self, rng):
        w = lrf_weights(rng.uniform(0.1, 1, (50, 16)))
        np.testing.assert_allclose(w.sum(axis=1), 1.0, atol=1e-12)

    def test_all_coincident_raises(self):
        pc, nb = _manual_nbrs([1, 1, 1], [[1, 1, 1], [1, 1, 1], [1, 1, 1]])
        with pytest.raises(DegenerateNeighborhood):
            local_covariance(pc, 0, nb)

    def test_conjugation(self, rng):
        pts = _patch(rng)
        nb = knn(pts, 12)
        pc = PointCloud(pts)
        cov = local_covariance(pc, 0, nb)
        assert np.all(np.linalg.eigvalsh(cov) >= -1e-15)
        for s in range(20):
            r = random_rotation(s)
            pr = apply_rotation(pc, r)
            np.testing.assert_allclose(local_covariance(pr, 0, knn(pr, 12)), r @ cov @ r.T, atol=1e-10)


class TestLocalFrame:
    def test_planar_patch(self, rng):
        xy = rng.uniform(-1, 1, (40, 2))
        pts = np.c_[xy, np.zeros(40)] + [0.3, 0.2, 0.0]
        pts[:, 2] = 0.0
        pc = PointCloud(pts + [0, 0, 2.0])
        nb = knn(pc, 16)
        f = lrf(pc, 5, nb)
        # smallest-variance direction is e_z, signed toward the point (which has z = +2)
        np.testing.assert_allclose(f.basis[:, 2], [0, 0, 1], atol=1e-12)
        pc_low = PointCloud(pts + [0, 0, -2.0])
        np.testing.assert_allclose(lrf(pc_low, 5, knn(pc_low, 16)).basis[:, 2], [0, 0, -1], atol=1e-12)

    def test_valid_frames(self, rng):
        pts = _patch(rng, 64)
        b = lrf_bases(pts, knn(pts, 16))
        gram = np.swapaxes(b, 1, 2) @ b
        assert np.abs(gram - np.eye(3)).max() < 1e-9
        np.testing.assert_allclose(np.linalg.det(b), 1.0, atol=1e-12)

    def test_x_axis_points_from_barycenter(self, rng):
        pts = _patch(rng)
        nb = knn(pts, 10)
        b = lrf_bases(pts, nb)
        bary = pts[nb.indices[3]].mean(axis=0)
        x = (pts[3] - bary) / np.linalg.norm(pts[3] - bary)
        np.testing.assert_allclose(b[3, :, 0], x, atol=1e-14)

    def test_z_axis_against_jacobi_oracle(self, rng):
        pts = _patch(rng)
        pc = PointCloud(pts)
        nb = knn(pc, 12)
        f = lrf(pc, 0, nb)
        _, vecs = jacobi_eigh(local_covariance(pc, 0, nb))
        z = vecs[:, 2] * np.sign(vecs[:, 2] @ pts[0])
        x = f.basis[:, 0]
        z = z - (z @ x) * x
        np.testing.assert_allclose(f.basis[:, 2], z / np.linalg.norm(z), atol=1e-9)

    def test_equivariance(self, rng):
        worst = 0.0
        for _ in range(50):
            pts = _patch(rng)
            base = lrf_bases(pts, knn(pts, 12))
            for _ in range(5):
                r = random_rotation(rng)
                rp = pts @ r.T
                worst = max(worst, np.abs(lrf_bases(rp, knn(rp, 12)) - r @ base).max())
        assert worst < 1e-8

    def test_barycenter_coincides(self):
        pc, nb = _manual_nbrs([0, 0, 0], [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0]])
        with pytest.raises(BarycenterCoincides):
            lrf(pc, 0, nb)

    def test_colinear_neighborhood(self):
        pc, nb = _manual_nbrs([3, 0, 0], [[1, 0, 0], [2, 0, 0], [4.5, 0, 0]])
        with pytest.raises(DegenerateNeighborhood):
            lrf(pc, 0, nb)

    def test_frame_json_round_trip(self, rng):
        f = Frame(random_rotation(1), rng.standard_normal(3))
        obj = f.to_json()
        assert len(obj["basis"]) == 9 and len(obj["origin"]) == 3
        g = Frame.from_json(obj)
        assert np.array_equal(g.basis, f.basis) and np.array_equal(g.origin, f.origin)


class TestSignVotes:
    def test_symmetric_pair(self):
        assert sign_votes(np.array([[1.0, 0, 0], [-1.0, 0, 0]]), np.eye(3)).S_x == 1

    def test_mirrored_cloud_half(self, rng):
        half = rng.standard_normal((50, 3))
        pts = np.vstack([half, half * [-1, 1, 1]])
        assert sign_votes(pts, np.eye(3)).S_x == 50

    def test_brute_force(self, rng):
        pts = rng.standard_normal((101, 3))
        basis = random_rotation(4)
        c = pts - pts.mean(axis=0)
        want = [sum(1 for p in c if float(np.dot(basis[:, a], p)) > 0) for a in range(3)]
        assert list(sign_votes(pts, basis)) == want

    def test_resolution_idempotent(self, rng):
        pts = rng.standard_normal((80, 3)) * [3, 2, 1]
        pts -= pts.mean(axis=0)
        once = resolve_signs(pts, random_rotation(2))
        np.testing.assert_array_equal(resolve_signs(pts, once), once)


class TestGlobalFrame:
    def test_positive_half_space_keeps_x(self, rng):
        pts = rng.standard_normal((200, 3)) * [3, 1, 0.5]
        pts[:, 0] = np.abs(pts[:, 0]) ** 0.5 + np.abs(pts[:, 0])
        g = grf(PointCloud(pts))
        assert sign_votes(pts, g.basis).S_x >= 100

    def test_axis_aligned_ellipsoid(self, rng):
        d = rng.standard_normal((3000, 3))
        pts = d / np.linalg.norm(d, axis=1, keepdims=True) * [3, 2, 1]
        g = grf(PointCloud(pts))
        np.testing.assert_allclose(np.abs(g.basis), np.eye(3), atol=0.1)

    @pytest.mark.parametrize("strategy", list("abcd"))
    def test_every_strategy_is_proper(self, rng, strategy):
        for s in range(20):
            pts = np.random.default_rng(s).standard_normal((60, 3)) * [3, 2, 1]
            g = grf(PointCloud(pts), strategy=strategy, rng=np.random.default_rng(s))
            assert g.is_valid()

    def test_strategy_d_flips_fewest_votes(self):
        basis = np.diag([1.0, 1.0, -1.0])
        out = make_proper(basis, (10, 8, 9), DisambiguationStrategy.d_reverse_smallest)
        np.testing.assert_array_equal(out, np.diag([1.0, -1.0, -1.0]))

    def test_strategy_c_swaps_two_smallest(self):
        basis = np.diag([1.0, 1.0, -1.0])
        out = make_proper(basis, (10, 8, 9), "c")
        np.testing.assert_array_equal(out[:, 1], basis[:, 2])
        assert np.linalg.det(out) == pytest.approx(1.0)

    def test_canonicalization_invariant(self, rng):
        pts = rng.standard_normal((400, 3)) * [3, 2, 1]
        pts += 0.4 * pts[:, [1]] ** 2
        pc = PointCloud(pts)
        g = grf(pc)
        ref = (pc.points - g.origin) @ g.basis
        for s in range(100):
            r = random_rotation(s)
            pr = apply_rotation(pc, r)
            gr = grf(pr)
            assert np.abs((pr.points - gr.origin) @ gr.basis - ref).max() < 1e-7

    def test_degenerate(self):
        with pytest.raises(DegenerateCloud):
            grf(PointCloud(np.c_[np.arange(10.0), np.zeros(10), np.zeros(10)]))
        with pytest.raises(DegenerateCloud):
            grf(PointCloud(np.ones((5, 3))))


class TestRelativeAngles:
    def test_identity(self):
        f = Frame(random_rotation(3), np.zeros(3))
        np.testing.assert_allclose(relative_rotation(f, f), np.eye(3), atol=1e-14)
        # arccos near 1 amplifies roundoff of the trace: ~1e-6 degrees
        assert relative_angle_deg(f, f) < 1e-5

    def test_quarter_turn(self):
        m = random_rotation(5)
        a, b = Frame(m, np.zeros(3)), Frame(m @ z_rotation(np.pi / 2), np.zeros(3))
        assert relative_angle_deg(a, b) == pytest.approx(90.0, abs=1e-9)

    def test_transpose_and_symmetry(self):
        for s in range(100):
            a = Frame(random_rotation(s), np.zeros(3))
            b = Frame(random_rotation(s + 500), np.ones(3))
            np.testing.assert_allclose(relative_rotation(a, b), relative_rotation(b, a).T, atol=1e-15)
            assert relative_angle_deg(a, b) == relative_angle_deg(b, a)

    def test_common_rotation_conjugates(self):
        a, b = random_rotation(1), random_rotation(2)
        r = random_rotation(3)
        o = np.zeros(3)
        fa, fb = Frame(a, o), Frame(b, o)
        ra, rb = Frame(r @ a, o), Frame(r @ b, o)
        np.testing.assert_allclose(relative_rotation(ra, rb), r @ relative_rotation(fa, fb) @ r.T, atol=1e-10)
        assert relative_angle_deg(ra, rb) == pytest.approx(relative_angle_deg(fa, fb), abs=1e-9)

    def test_translation_reported(self):
        a, b = Frame(np.eye(3), [1, 2, 3]), Frame(np.eye(3), [0, 2, 1])
        np.testing.assert_array_equal(relative_translation(a, b), [1, 0, 2])

    def test_pairwise_matrix(self):
        bases = np.stack([random_rotation(s) for s in range(128)])
        ang = pairwise_angles_deg(bases)
        assert np.array_equal(ang, ang.T)
        assert np.all(np.diag(ang) == 0)
        assert ang.min() >= 0 and ang.max() <= 180
        o = np.zeros(3)
        for i, j in [(0, 1), (5, 77), (127, 3)]:
            assert ang[i, j] == pytest.approx(relative_angle_deg(Frame(bases[i], o), Frame(bases[j], o)), abs=1e-9)

    def test_cross_angles(self):
        bases = np.stack([random_rotation(s) for s in range(10)])
        g = random_rotation(99)
        o = np.zeros(3)
        want = [relative_angle_deg(Frame(b, o), Frame(g, o)) for b in bases]
        np.testing.assert_allclose(cross_angles_deg(bases, g), want, atol=1e-9)

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 2**31 - 1), st.integers(0, 2**31 - 1))
    def test_property_range_symmetry(self, s1, s2):
        a, b = Frame(random_rotation(s1), np.zeros(3)), Frame(random_rotation(s2), np.zeros(3))
        v = relative_angle_deg(a, b)
        assert 0.0 <= v <= 180.0 and v == relative_angle_deg(b, a)
