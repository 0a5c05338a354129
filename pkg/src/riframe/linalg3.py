"""Exact-size 3-vector / 3x3-matrix kernels.

Vectors are ``(3,)`` float arrays and matrices are ``(3, 3)`` arrays whose
columns are basis vectors when used as a frame.  The eigensolver and the
rotation helpers also accept leading batch dimensions.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import NonFinite, NonSymmetric, NotRotation

SYMMETRY_TOL = 1e-9
# relative eigenvalue spacing below which the closed form hands over to Jacobi
FALLBACK_SPACING = 1e-6
# relative spacing treated as an exact tie (deterministic tie-break applies)
TIE_SPACING = 1e-12
RESIDUAL_TOL = 1e-11


class SymEig3(NamedTuple):
    """Eigenvalues sorted descending and matching unit eigenvectors (columns)."""

    values: np.ndarray
    vectors: np.ndarray


def cross(u, v) -> np.ndarray:
    """Right-handed cross product; broadcasts over leading dimensions."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    return np.stack(
        [
            u[..., 1] * v[..., 2] - u[..., 2] * v[..., 1],
            u[..., 2] * v[..., 0] - u[..., 0] * v[..., 2],
            u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0],
        ],
        axis=-1,
    )


def _sign_canonicalize(vecs: np.ndarray, axis: int = -2) -> np.ndarray:
    """Flip each vector so its first clearly nonzero component is positive."""
    v = np.moveaxis(vecs, axis, -1)
    nz = np.abs(v) > 1e-12
    first = np.argmax(nz, axis=-1)
    lead = np.take_along_axis(v, first[..., None], axis=-1)[..., 0]
    sign = np.where(lead < 0, -1.0, 1.0)
    return np.moveaxis(v * sign[..., None], -1, axis)


def _closed_form(a: np.ndarray):
    """Trigonometric Cardano eigenvalues + cross-product eigenvectors."""
    q = np.trace(a, axis1=-2, axis2=-1) / 3.0
    p1 = a[..., 0, 1] ** 2 + a[..., 0, 2] ** 2 + a[..., 1, 2] ** 2
    d = np.diagonal(a, axis1=-2, axis2=-1) - q[..., None]
    p2 = np.sum(d * d, axis=-1) + 2.0 * p1
    p = np.sqrt(p2 / 6.0)
    safe_p = np.where(p > 0, p, 1.0)
    b = (a - q[..., None, None] * np.eye(3)) / safe_p[..., None, None]
    r = np.clip(np.linalg.det(b) / 2.0, -1.0, 1.0)
    phi = np.arccos(r) / 3.0
    l1 = q + 2.0 * p * np.cos(phi)
    l3 = q + 2.0 * p * np.cos(phi + 2.0 * np.pi / 3.0)
    l2 = 3.0 * q - l1 - l3

    def eigvec(lam):
        m = a - lam[..., None, None] * np.eye(3)
        r0, r1, r2 = m[..., 0, :], m[..., 1, :], m[..., 2, :]
        cands = np.stack([cross(r0, r1), cross(r0, r2), cross(r1, r2)], axis=-2)
        norms = np.linalg.norm(cands, axis=-1)
        best = np.argmax(norms, axis=-1)
        v = np.take_along_axis(cands, best[..., None, None], axis=-2)[..., 0, :]
        n = np.take_along_axis(norms, best[..., None], axis=-1)
        return v / np.where(n > 0, n, 1.0)

    v1 = eigvec(l1)
    v3 = eigvec(l3)
    v3 = v3 - np.sum(v3 * v1, axis=-1, keepdims=True) * v1
    v3 = v3 / np.maximum(np.linalg.norm(v3, axis=-1, keepdims=True), 1e-300)
    v2 = cross(v3, v1)
    vecs = np.stack([v1, v2, v3], axis=-1)
    vals = np.stack([l1, l2, l3], axis=-1)
    return vals, vecs


def jacobi_eig3(a: np.ndarray, tol: float = 1e-15, max_sweeps: int = 50):
    """Cyclic Jacobi on a batch of symmetric 3x3 matrices.

    Returns unsorted eigenvalues ``(..., 3)`` and eigenvector columns.
    """
    a = np.array(a, dtype=np.float64, copy=True)
    batch = a.shape[:-2]
    a = a.reshape(-1, 3, 3)
    v = np.broadcast_to(np.eye(3), a.shape).copy()
    scale = np.maximum(np.linalg.norm(a, axis=(-2, -1)), 1e-300)
    rows = np.arange(a.shape[0])
    for _ in range(max_sweeps):
        off = np.sqrt(a[:, 0, 1] ** 2 + a[:, 0, 2] ** 2 + a[:, 1, 2] ** 2)
        if np.all(off <= tol * scale):
            break
        for p, q in ((0, 1), (0, 2), (1, 2)):
            apq = a[:, p, q]
            active = np.abs(apq) > 1e-300
            theta = np.where(active, (a[:, q, q] - a[:, p, p]) / (2.0 * np.where(active, apq, 1.0)), 0.0)
            t = np.where(theta >= 0, 1.0, -1.0) / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
            t = np.where(active, t, 0.0)
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            j = np.broadcast_to(np.eye(3), a.shape).copy()
            j[rows, p, p] = c
            j[rows, q, q] = c
            j[rows, p, q] = s
            j[rows, q, p] = -s
            a = np.swapaxes(j, -1, -2) @ a @ j
            v = v @ j
    vals = np.diagonal(a, axis1=-2, axis2=-1).copy()
    return vals.reshape(batch + (3,)), v.reshape(batch + (3, 3))


def _tie_break(vals: np.ndarray, vecs: np.ndarray, scale: float):
    """Deterministic basis for exactly degenerate eigenspaces of one matrix."""
    tie = TIE_SPACING * scale
    d01 = vals[0] - vals[1] <= tie
    d12 = vals[1] - vals[2] <= tie
    if d01 and d12:
        return np.eye(3)
    if not (d01 or d12):
        return vecs
    pair, lone = ((0, 1), 2) if d01 else ((1, 2), 0)
    n = vecs[:, lone]
    for e in np.eye(3):
        w = e - np.dot(e, n) * n
        nw = np.linalg.norm(w)
        if nw > 1e-12:
            first = w / nw
            break
    second = cross(n, first)
    out = vecs.copy()
    out[:, pair[0]] = first
    out[:, pair[1]] = second
    return out


def eig_sym3(a) -> SymEig3:
    """Eigendecomposition of symmetric 3x3 matrices (batched over leading dims).

    Closed-form Cardano solution with a cyclic-Jacobi fallback for nearly
    degenerate spectra or inaccurate residuals.  Eigenvalues are sorted in
    descending order; each eigenvector has its first nonzero component
    positive.  Exact ties use a lexicographic (|x|, |y|, |z|) tie-break.

    Raises:
        NonFinite: on NaN/Inf entries.
        NonSymmetric: if ``|a - a.T|`` exceeds 1e-9 anywhere.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.shape[-2:] != (3, 3):
        raise ValueError(f"expected (..., 3, 3), got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NonFinite("matrix has non-finite entries")
    asym = np.abs(a - np.swapaxes(a, -1, -2))
    if asym.size and asym.max() > SYMMETRY_TOL:
        raise NonSymmetric(f"asymmetry {asym.max():.3g} exceeds {SYMMETRY_TOL}")
    a = 0.5 * (a + np.swapaxes(a, -1, -2))

    batch = a.shape[:-2]
    flat = a.reshape(-1, 3, 3)
    scale = np.linalg.norm(flat, axis=(-2, -1))
    with np.errstate(invalid="ignore", divide="ignore"):
        vals, vecs = _closed_form(flat)
    # Rayleigh refinement of the eigenvalues
    vals = np.einsum("bki,bij,bjk->bk", np.swapaxes(vecs, -1, -2), flat, vecs)
    spacing = np.minimum(vals[:, 0] - vals[:, 1], vals[:, 1] - vals[:, 2])
    resid = np.linalg.norm(flat @ vecs - vecs * vals[:, None, :], axis=(-2, -1))
    bad = (
        (spacing < FALLBACK_SPACING * scale)
        | (resid > RESIDUAL_TOL * np.maximum(scale, 1e-300))
        | ~np.all(np.isfinite(vecs), axis=(-2, -1))
    )
    if np.any(bad):
        jv, jV = jacobi_eig3(flat[bad])
        order = np.argsort(-jv, axis=-1, kind="stable")
        vals[bad] = np.take_along_axis(jv, order, axis=-1)
        vecs[bad] = np.take_along_axis(jV, order[:, None, :], axis=-1)
    vecs = _sign_canonicalize(vecs)
    spacing = np.minimum(vals[:, 0] - vals[:, 1], vals[:, 1] - vals[:, 2])
    ties = np.nonzero(spacing <= TIE_SPACING * scale)[0]
    for i in ties:
        vecs[i] = _sign_canonicalize(_tie_break(vals[i], vecs[i], scale[i]))
    return SymEig3(vals.reshape(batch + (3,)), vecs.reshape(batch + (3, 3)))


def is_rotation(r, tol: float = 1e-9) -> bool:
    r = np.asarray(r, dtype=np.float64)
    if r.shape[-2:] != (3, 3) or not np.all(np.isfinite(r)):
        return False
    ortho = np.abs(np.swapaxes(r, -1, -2) @ r - np.eye(3)).max()
    det = np.abs(np.linalg.det(r) - 1.0).max()
    return bool(ortho <= tol and det <= tol)


def quaternion_to_matrix(q) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64)
    q = q / np.linalg.norm(q, axis=-1, keepdims=True)
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    return np.stack(
        [
            np.stack([1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)], -1),
            np.stack([2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)], -1),
            np.stack([2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)], -1),
        ],
        axis=-2,
    )


def z_rotation(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def random_rotation(rng_seed, mode: str = "full_so3") -> np.ndarray:
    """Sample a rotation matrix.

    ``full_so3`` draws a uniformly distributed unit quaternion (normalized
    4-D Gaussian); ``z_axis`` rotates about +z by an angle in [0, 2*pi).
    ``rng_seed`` is an integer seed or a caller-owned ``np.random.Generator``.
    """
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    if mode == "full_so3":
        q = rng.standard_normal(4)
        r = quaternion_to_matrix(q)
        # re-orthonormalize so R^T R = I holds to ~1e-16
        u, _, vt = np.linalg.svd(r)
        return u @ vt
    if mode == "z_axis":
        return z_rotation(rng.uniform(0.0, 2.0 * np.pi))
    raise ValueError(f"unknown rotation mode {mode!r}")


def rotation_angle_deg(r) -> float:
    """Geodesic angle of a rotation, ``arccos((tr R - 1) / 2)`` in degrees."""
    r = np.asarray(r, dtype=np.float64)
    if not is_rotation(r):
        raise NotRotation("matrix is not a proper rotation within 1e-9")
    c = np.clip((np.trace(r) - 1.0) / 2.0, -1.0, 1.0)
    return float(np.degrees(np.arccos(c)))
