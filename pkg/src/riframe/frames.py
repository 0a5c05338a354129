"""Rotation-equivariant local and global reference frames.

A frame is a right-handed orthonormal basis (columns x, y, z) plus an
origin.  Local frames come from a distance-weighted neighborhood covariance;
the global frame is the PCA basis of the whole cloud with majority-vote
sign resolution.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Optional

import numpy as np

from .cloud import NeighborIndex, PointCloud
from .errors import BarycenterCoincides, DegenerateCloud, DegenerateNeighborhood, ZeroWeightSum
from .linalg3 import cross, eig_sym3

WEIGHT_EPS = 1e-12
DEGENERATE_RATIO = 1e-9


@dataclass(frozen=True)
class Frame:
    basis: np.ndarray
    origin: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "basis", np.asarray(self.basis, dtype=np.float64).reshape(3, 3))
        object.__setattr__(self, "origin", np.asarray(self.origin, dtype=np.float64).reshape(3))

    def is_valid(self, tol: float = 1e-9) -> bool:
        m = self.basis
        return bool(np.abs(m.T @ m - np.eye(3)).max() <= tol and abs(np.linalg.det(m) - 1.0) <= tol)

    def to_json(self) -> dict:
        return {"basis": self.basis.ravel().tolist(), "origin": self.origin.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "Frame":
        return cls(np.array(obj["basis"]).reshape(3, 3), np.array(obj["origin"]))


class DisambiguationStrategy(str, Enum):
    """Ways to turn a reflected PCA basis into a proper rotation."""

    a_permute_random = "a"
    b_negate_random = "b"
    c_permute_smallest_two = "c"
    d_reverse_smallest = "d"


class SignVotes(NamedTuple):
    S_x: int
    S_y: int
    S_z: int


def lrf_weights(dists: np.ndarray, regularize: bool = True) -> np.ndarray:
    """Normalized weights ``(d - |p_ij|) / sum(d - |p_ij|)`` along the last axis.

    ``d`` is the largest neighbor distance.  With ``regularize`` a tiny
    epsilon is added to every raw weight so an all-equidistant neighborhood
    gets uniform weights instead of 0/0.
    """
    d = dists.max(axis=-1, keepdims=True)
    raw = d - dists
    if regularize:
        raw = raw + WEIGHT_EPS
    total = raw.sum(axis=-1, keepdims=True)
    if not regularize and np.any(total == 0):
        raise ZeroWeightSum("every neighbor lies at the maximum distance")
    return raw / total


def _offsets(points, nbrs: NeighborIndex, centers):
    return points[nbrs.indices[centers]] - points[centers][:, None, :]


def _covariances(offsets, regularize=True):
    dists = np.linalg.norm(offsets, axis=-1)
    if np.any(dists.max(axis=-1) == 0):
        bad = np.nonzero(dists.max(axis=-1) == 0)[0]
        raise DegenerateNeighborhood("all neighbors coincide with the center", indices=bad)
    w = lrf_weights(dists, regularize)
    return np.swapaxes(offsets * w[..., None], -1, -2) @ offsets


def local_covariance(pc: PointCloud, center_idx: int, nbrs: NeighborIndex, regularize: bool = True) -> np.ndarray:
    """Distance-weighted covariance of neighbor offsets around one point."""
    off = _offsets(pc.points, nbrs, np.array([center_idx]))
    return _covariances(off, regularize)[0]


def lrf_bases(
    points: np.ndarray,
    nbrs: NeighborIndex,
    centers=None,
    disambiguate: bool = True,
) -> np.ndarray:
    """Local frame bases ``(M, 3, 3)`` for every center (default: all points).

    ``nbrs`` must have one row per point of ``points``.
    """
    points = np.asarray(points, dtype=np.float64)
    centers = np.arange(len(points)) if centers is None else np.asarray(centers)
    off = _offsets(points, nbrs, centers)
    p = points[centers]
    xdir = -off.mean(axis=1)  # p_i minus the barycenter of its neighbors
    xn = np.linalg.norm(xdir, axis=-1)
    scale = np.linalg.norm(off, axis=-1).max(axis=-1)
    bad = xn <= 1e-12 * np.maximum(scale, 1e-300)
    if np.any(bad):
        raise BarycenterCoincides("neighborhood barycenter coincides with the point", indices=np.nonzero(bad)[0])
    x = xdir / xn[:, None]

    eig = eig_sym3(_covariances(off))
    lam = eig.values
    bad = lam[:, 1] <= DEGENERATE_RATIO * lam[:, 0]
    if np.any(bad):
        raise DegenerateNeighborhood("neighborhood is (nearly) colinear", indices=np.nonzero(bad)[0])
    z = eig.vectors[:, :, 2]
    if disambiguate:
        z = np.where((np.einsum("ni,ni->n", z, p) < 0)[:, None], -z, z)
    z = z - np.einsum("ni,ni->n", z, x)[:, None] * x
    zn = np.linalg.norm(z, axis=-1)
    bad = zn <= 1e-9
    if np.any(bad):
        raise DegenerateNeighborhood("normal direction parallel to barycenter offset", indices=np.nonzero(bad)[0])
    z = z / zn[:, None]
    y = cross(z, x)
    return np.stack([x, y, z], axis=-1)


def lrf(pc: PointCloud, center_idx: int, nbrs: NeighborIndex, disambiguate: bool = True) -> Frame:
    """Local reference frame of one point; origin is the point itself."""
    basis = lrf_bases(pc.points, nbrs, np.array([center_idx]), disambiguate)[0]
    return Frame(basis, pc.points[center_idx])


def sign_votes(pc, basis) -> SignVotes:
    """Per axis, how many barycentric offsets have a strictly positive projection."""
    pts = pc.points if isinstance(pc, PointCloud) else np.asarray(pc, dtype=np.float64)
    proj = (pts - pts.mean(axis=0)) @ np.asarray(basis)
    return SignVotes(*(int(c) for c in (proj > 0).sum(axis=0)))


def resolve_signs(pts_centered: np.ndarray, basis: np.ndarray) -> np.ndarray:
    """Keep each axis iff its vote count reaches half the points, else negate."""
    n0 = len(pts_centered)
    votes = ((pts_centered @ basis) > 0).sum(axis=0)
    flip = np.where(votes >= n0 / 2.0, 1.0, -1.0)
    return basis * flip


def make_proper(basis: np.ndarray, votes, strategy, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Apply a valid-rotation strategy to a basis with det = -1."""
    strategy = DisambiguationStrategy(strategy)
    out = basis.copy()
    votes = np.asarray(votes)
    if strategy is DisambiguationStrategy.d_reverse_smallest:
        k = int(np.argmin(votes))
        out[:, k] = -out[:, k]
    elif strategy is DisambiguationStrategy.c_permute_smallest_two:
        i, j = np.argsort(votes, kind="stable")[:2]
        out[:, [i, j]] = out[:, [j, i]]
    else:
        rng = rng if rng is not None else np.random.default_rng()
        if strategy is DisambiguationStrategy.a_permute_random:
            i, j = rng.choice(3, size=2, replace=False)
            out[:, [i, j]] = out[:, [j, i]]
        else:
            k = int(rng.integers(3))
            out[:, k] = -out[:, k]
    return out


def grf(
    pc,
    strategy="d",
    disambiguate: bool = True,
    rng: Optional[np.random.Generator] = None,
) -> Frame:
    """Global PCA frame with sign voting; origin is the barycenter.

    Columns are ordered by decreasing variance.  If the sign-resolved basis
    is a reflection, ``strategy`` restores det = +1 (default: reverse the
    axis with the fewest votes).
    """
    pts = pc.points if isinstance(pc, PointCloud) else np.asarray(pc, dtype=np.float64)
    if len(pts) < 2:
        raise DegenerateCloud("need at least two points")
    center = pts.mean(axis=0)
    c = pts - center
    cov = c.T @ c / len(pts)
    eig = eig_sym3(cov)
    lam = eig.values
    if lam[0] <= 1e-18 or lam[1] <= DEGENERATE_RATIO * lam[0]:
        raise DegenerateCloud("points are coincident or colinear")
    basis = eig.vectors
    if disambiguate:
        basis = resolve_signs(c, basis)
    if np.linalg.det(basis) < 0:
        votes = ((c @ basis) > 0).sum(axis=0)
        basis = make_proper(basis, votes, strategy, rng)
    return Frame(basis, center)


def relative_rotation(f_a: Frame, f_b: Frame) -> np.ndarray:
    """``basis_a @ basis_b.T``; the translation part is deliberately dropped."""
    return f_a.basis @ f_b.basis.T


def relative_translation(f_a: Frame, f_b: Frame) -> np.ndarray:
    return f_a.origin - f_b.origin


def _angle_from_trace(tr):
    return np.degrees(np.arccos(np.clip((tr - 1.0) / 2.0, -1.0, 1.0)))


def relative_angle_deg(f_a: Frame, f_b: Frame) -> float:
    """Geodesic angle between two frames in degrees, symmetric in its arguments."""
    # trace(A B^T) = sum(A * B): elementwise products commute, so this is
    # bitwise symmetric in (a, b)
    return float(_angle_from_trace(np.sum(f_a.basis * f_b.basis)))


def pairwise_angles_deg(bases: np.ndarray) -> np.ndarray:
    """``(..., N, N)`` relative angles; symmetric with a zero diagonal."""
    bases = np.asarray(bases, dtype=np.float64)
    flat = bases.reshape(bases.shape[:-2] + (9,))
    n = flat.shape[-2]
    tr = np.zeros(flat.shape[:-2] + (n, n))
    for c in range(9):
        tr += flat[..., :, None, c] * flat[..., None, :, c]
    ang = _angle_from_trace(tr)
    ang[..., np.arange(n), np.arange(n)] = 0.0
    return ang


def cross_angles_deg(bases: np.ndarray, g_basis: np.ndarray) -> np.ndarray:
    """Relative angle between every local basis and the global basis."""
    tr = np.sum(np.asarray(bases) * np.asarray(g_basis)[..., None, :, :], axis=(-2, -1))
    return _angle_from_trace(tr)
