import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import jacobi_eigh
from riframe.errors import NonFinite, NonSymmetric, NotRotation
from riframe.linalg3 import (
    cross,
    eig_sym3,
    is_rotation,
    jacobi_eig3,
    random_rotation,
    rotation_angle_deg,
    z_rotation,
)


def _random_sym(rng, n):
    b = rng.uniform(-1, 1, (n, 3, 3))
    return b + np.swapaxes(b, 1, 2)


def _reconstruct(eig):
    v, w = eig.vectors, eig.values
    return np.einsum("...ij,...j,...kj->...ik", v, w, v)


class TestEigSym3:
    def test_diagonal(self):
        e = eig_sym3(np.diag([1.0, 3.0, 2.0]))
        np.testing.assert_allclose(e.values, [3, 2, 1])
        np.testing.assert_allclose(np.abs(e.vectors), np.eye(3)[:, [1, 2, 0]], atol=1e-15)

    def test_identity_gives_orthonormal_triple(self):
        e = eig_sym3(np.eye(3))
        np.testing.assert_allclose(e.values, [1, 1, 1])
        np.testing.assert_allclose(e.vectors.T @ e.vectors, np.eye(3), atol=1e-12)

    def test_identity_is_deterministic(self):
        a, b = eig_sym3(np.eye(3)), eig_sym3(np.eye(3).copy())
        assert np.array_equal(a.vectors, b.vectors)

    def test_matches_jacobi_oracle(self, rng):
        mats = _random_sym(rng, 2000)
        e = eig_sym3(mats)
        for a, w, v in zip(mats, e.values, e.vectors):
            wo, vo = jacobi_eigh(a)
            np.testing.assert_allclose(w, wo, atol=1e-12)
            # distinct eigenvalues: vectors agree up to sign
            np.testing.assert_allclose(np.abs(np.sum(v * vo, axis=0)), 1.0, atol=1e-8)

    def test_matches_lapack(self, rng):
        mats = _random_sym(rng, 5000)
        e = eig_sym3(mats)
        ref = np.linalg.eigvalsh(mats)[:, ::-1]
        np.testing.assert_allclose(e.values, ref, atol=1e-12)

    def test_reconstruction_10k(self, rng):
        mats = _random_sym(rng, 10_000)
        e = eig_sym3(mats)
        assert np.abs(_reconstruct(e) - mats).max() < 1e-8
        assert np.all(np.diff(e.values, axis=1) <= 0)

    def test_orthonormal_and_residual(self, rng):
        mats = _random_sym(rng, 1000)
        e = eig_sym3(mats)
        gram = np.swapaxes(e.vectors, 1, 2) @ e.vectors
        np.testing.assert_allclose(gram, np.broadcast_to(np.eye(3), gram.shape), atol=1e-12)
        scale = np.linalg.norm(mats, axis=(1, 2))
        resid = np.linalg.norm(mats @ e.vectors - e.vectors * e.values[:, None, :], axis=1)
        assert np.all(resid <= 1e-9 * scale[:, None])

    def test_near_degenerate_uses_orthogonal_fallback(self, rng):
        q = random_rotation(3)
        a = q @ np.diag([2.0, 1.0 + 1e-9, 1.0]) @ q.T
        e = eig_sym3(a)
        np.testing.assert_allclose(e.vectors.T @ e.vectors, np.eye(3), atol=1e-12)
        np.testing.assert_allclose(_reconstruct(e), a, atol=1e-12)

    def test_sign_canonical(self, rng):
        e = eig_sym3(_random_sym(rng, 200))
        for v in e.vectors:
            for c in range(3):
                first = v[np.nonzero(np.abs(v[:, c]) > 1e-12)[0][0], c]
                assert first > 0

    def test_rotation_preserves_eigenvalues(self, rng):
        mats = _random_sym(rng, 500)
        rots = np.stack([random_rotation(s) for s in range(500)])
        rotated = rots @ mats @ np.swapaxes(rots, 1, 2)
        np.testing.assert_allclose(eig_sym3(rotated).values, eig_sym3(mats).values, atol=1e-9)

    def test_rejects_asymmetric(self):
        a = np.eye(3)
        a[0, 1] = 1e-6
        with pytest.raises(NonSymmetric):
            eig_sym3(a)

    def test_rejects_nan(self):
        a = np.eye(3)
        a[2, 2] = np.nan
        with pytest.raises(NonFinite):
            eig_sym3(a)

    @settings(max_examples=200, deadline=None)
    @given(arrays(np.float64, (3, 3), elements=st.floats(-1e3, 1e3, allow_subnormal=False)))
    def test_property_reconstruction(self, b):
        a = b + b.T
        e = eig_sym3(a)
        scale = max(np.abs(a).max(), 1e-300)
        assert np.abs(_reconstruct(e) - a).max() <= 1e-8 * max(scale, 1.0)
        np.testing.assert_allclose(e.vectors.T @ e.vectors, np.eye(3), atol=1e-9)


class TestJacobiFallback:
    def test_agrees_with_closed_form(self, rng):
        mats = _random_sym(rng, 300)
        w, v = jacobi_eig3(mats)
        np.testing.assert_allclose(np.sort(w, axis=1)[:, ::-1], eig_sym3(mats).values, atol=1e-12)


class TestCross:
    def test_basis(self):
        np.testing.assert_array_equal(cross([1, 0, 0], [0, 1, 0]), [0, 0, 1])

    def test_self(self):
        np.testing.assert_array_equal(cross([1.5, -2, 3], [1.5, -2, 3]), [0, 0, 0])

    def test_hand_value(self):
        np.testing.assert_array_equal(cross([1, 2, 3], [4, 5, 6]), [-3, 6, -3])

    def test_orthogonal_and_rotation_equivariant(self, rng):
        u, v = rng.standard_normal((2, 100, 3))
        c = cross(u, v)
        np.testing.assert_allclose(np.sum(c * u, axis=1), 0, atol=1e-12)
        r = random_rotation(9)
        np.testing.assert_allclose(cross(u @ r.T, v @ r.T), c @ r.T, atol=1e-12)


class TestRotations:
    def test_z_axis_fixes_ez(self):
        for s in range(20):
            np.testing.assert_allclose(random_rotation(s, "z_axis") @ [0, 0, 1], [0, 0, 1], atol=1e-15)

    def test_full_is_proper(self):
        for s in range(50):
            r = random_rotation(s)
            assert abs(np.linalg.det(r) - 1) < 1e-12
            np.testing.assert_allclose(r.T @ r, np.eye(3), atol=1e-12)

    def test_deterministic(self):
        assert np.array_equal(random_rotation(42), random_rotation(42))

    def test_uniformity_smoke(self):
        rng = np.random.default_rng(0)
        mean = np.mean([random_rotation(rng) for _ in range(10_000)], axis=0)
        assert np.abs(mean).max() < 0.05

    def test_is_rotation(self):
        assert is_rotation(random_rotation(1))
        assert not is_rotation(np.diag([1.0, 1.0, -1.0]))


class TestRotationAngle:
    def test_identity(self):
        assert rotation_angle_deg(np.eye(3)) == 0.0

    def test_quarter_turn(self):
        assert rotation_angle_deg(z_rotation(np.pi / 2)) == pytest.approx(90.0, abs=1e-12)

    def test_transpose_symmetric(self):
        for s in range(100):
            r1, r2 = random_rotation(s), random_rotation(s + 1000)
            assert rotation_angle_deg(r1 @ r2.T) == rotation_angle_deg(r2 @ r1.T)

    def test_range(self):
        for s in range(200):
            assert 0.0 <= rotation_angle_deg(random_rotation(s)) <= 180.0

    def test_rejects_reflection(self):
        with pytest.raises(NotRotation):
            rotation_angle_deg(np.diag([1.0, 1.0, -1.0]))
