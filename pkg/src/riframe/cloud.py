"""Point-cloud container, sampling, neighbor queries and augmentation."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist

from .errors import KTooLarge, NotRotation, TooFewPoints
from .linalg3 import is_rotation


@dataclass(frozen=True)
class PointCloud:
    points: np.ndarray
    label: Optional[int] = None
    seed: Optional[int] = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise ValueError(f"points must be (N, 3), got {pts.shape}")
        if len(pts) < 1:
            raise TooFewPoints("a point cloud needs at least one point")
        if not np.all(np.isfinite(pts)):
            raise ValueError("point coordinates must be finite")
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return len(self.points)

    def subset(self, idx, seed=None) -> "PointCloud":
        return PointCloud(self.points[np.asarray(idx)], self.label, self.seed if seed is None else seed)

    def with_points(self, points) -> "PointCloud":
        return replace(self, points=points)


@dataclass(frozen=True)
class NeighborIndex:
    """k nearest neighbors per query, sorted by ascending distance."""

    indices: np.ndarray  # (N, k) int
    distances: np.ndarray  # (N, k) float

    @property
    def k(self) -> int:
        return self.indices.shape[1]

    @property
    def d_max(self) -> np.ndarray:
        return self.distances[:, -1]


def _as_points(pc) -> np.ndarray:
    return pc.points if isinstance(pc, PointCloud) else np.asarray(pc, dtype=np.float64)


def fps_indices(points, n: int, start: int) -> np.ndarray:
    """Greedy maximin selection starting from ``start``; ties -> lowest index."""
    pts = np.asarray(points, dtype=np.float64)
    if not 1 <= n <= len(pts):
        raise TooFewPoints(f"cannot sample {n} of {len(pts)} points")
    out = np.empty(n, dtype=np.int64)
    out[0] = start
    diff = pts - pts[start]
    mind = np.einsum("ij,ij->i", diff, diff)
    for i in range(1, n):
        nxt = int(np.argmax(mind))
        out[i] = nxt
        diff = pts - pts[nxt]
        np.minimum(mind, np.einsum("ij,ij->i", diff, diff), out=mind)
    return out


def fps_start(n_points: int, seed: int) -> int:
    return int(np.random.default_rng(seed).integers(n_points))


def farthest_point_sample(pc: PointCloud, n: int, seed: int) -> PointCloud:
    """Farthest point sampling with a seeded random first point."""
    if not 1 <= n <= len(pc):
        raise TooFewPoints(f"cannot sample {n} of {len(pc)} points")
    idx = fps_indices(pc.points, n, fps_start(len(pc), seed))
    return pc.subset(idx, seed=seed)


def random_sample(pc: PointCloud, n: int, seed: int) -> PointCloud:
    """Uniform sampling without replacement."""
    if not 1 <= n <= len(pc):
        raise TooFewPoints(f"cannot sample {n} of {len(pc)} points")
    idx = np.random.default_rng(seed).choice(len(pc), size=n, replace=False)
    return pc.subset(idx, seed=seed)


def _sorted_by_distance_then_index(dist_rows, idx_rows, k):
    order = np.lexsort((idx_rows, dist_rows), axis=-1)[:, :k]
    return (
        np.take_along_axis(idx_rows, order, axis=1),
        np.take_along_axis(dist_rows, order, axis=1),
    )


def knn(pc, k: int, method: str = "brute", queries=None) -> NeighborIndex:
    """Exact k nearest neighbors excluding self, ties broken by lower index.

    ``method="brute"`` evaluates all O(N^2) distances; ``"kdtree"`` uses a
    scipy KD-tree for large clouds and gives the same answer barring exact
    distance ties.  ``queries`` restricts the query rows to a subset of
    point indices (neighbors are still searched in the full cloud).
    """
    pts = _as_points(pc)
    n = len(pts)
    if not 1 <= k < n:
        raise KTooLarge(f"k={k} must satisfy 1 <= k < {n}")
    q_idx = np.arange(n) if queries is None else np.asarray(queries, dtype=np.int64)
    if method == "kdtree":
        dist, idx = cKDTree(pts).query(pts[q_idx], k=k + 1)
        keep = idx != q_idx[:, None]
        # drop self (or the last extra column when self is not returned first)
        keep[keep.sum(1) > k, -1] = False
        idx = idx[keep].reshape(len(q_idx), k)
        diffs = pts[idx] - pts[q_idx][:, None, :]
        dist = np.sqrt(np.einsum("nkc,nkc->nk", diffs, diffs))
        idx, dist = _sorted_by_distance_then_index(dist, idx, k)
        return NeighborIndex(idx, dist)
    if method != "brute":
        raise ValueError(f"unknown knn method {method!r}")
    d = cdist(pts[q_idx], pts)
    d[np.arange(len(q_idx)), q_idx] = np.inf
    kk = min(k + 8, n - 1)
    cand = np.argpartition(d, kk - 1, axis=1)[:, :kk]
    cd = np.take_along_axis(d, cand, axis=1)
    idx, dist = _sorted_by_distance_then_index(cd, cand, k)
    # rows where the k-th distance reaches the candidate boundary may hide ties
    unsafe = dist[:, -1] >= cd.max(axis=1)
    if kk == n - 1:
        unsafe[:] = False
    for r in np.nonzero(unsafe)[0]:
        order = np.lexsort((np.arange(n), d[r]))[:k]
        idx[r], dist[r] = order, d[r, order]
    return NeighborIndex(idx, dist)


def apply_rotation(pc: PointCloud, r) -> PointCloud:
    """Rotate every point about the world origin: p -> R p."""
    r = np.asarray(r, dtype=np.float64)
    if not is_rotation(r):
        raise NotRotation("apply_rotation needs a proper rotation")
    return pc.with_points(pc.points @ r.T)


def augment(
    pc: PointCloud,
    seed: int,
    translate_range: float = 0.2,
    scale_range: tuple[float, float] = (0.67, 1.5),
) -> PointCloud:
    """One global random scale followed by one global random translation."""
    lo, hi = scale_range
    if lo <= 0 or hi < lo:
        raise ValueError(f"bad scale_range {scale_range}")
    rng = np.random.default_rng(seed)
    t = rng.uniform(-translate_range, translate_range, size=3)
    s = rng.uniform(lo, hi)
    return pc.with_points(pc.points * s + t)


def add_noise(pc: PointCloud, sigma: float, n_outliers: int, seed: int) -> PointCloud:
    """Gaussian jitter on every coordinate plus outliers drawn inside the unit ball."""
    if sigma < 0 or n_outliers < 0:
        raise ValueError("sigma and n_outliers must be non-negative")
    rng = np.random.default_rng(seed)
    pts = pc.points
    if sigma > 0:
        pts = pts + rng.normal(0.0, sigma, size=pts.shape)
    if n_outliers:
        d = rng.standard_normal((n_outliers, 3))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        rad = rng.uniform(0.0, 1.0, size=(n_outliers, 1)) ** (1.0 / 3.0)
        pts = np.vstack([pts, d * rad])
    return pc.with_points(pts)
