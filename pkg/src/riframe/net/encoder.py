"""Two-stage set-abstraction encoders over rotation-invariant inputs.

Stage 1 samples centers by farthest-point sampling and groups each center's
local-frame neighbors; stage 2 samples a subset of those centers and groups
their nearest stage-1 centers.  Grouping indices are computed from point
geometry only through distances, so they do not change under rotation.

The local branch sees ``(p_j - p_i)^T M_i`` (neighbor offsets in the center's
local frame).  The global branch sees coordinates in the global frame:
``[g_j - g_i, g_j]`` at stage 1 and ``g_j - g_i`` at stage 2.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import autodiff as ad
from ..cloud import fps_indices, fps_start, knn
from ..descriptors import DescriptorSet
from ..errors import KTooLarge
from ..frames import cross_angles_deg, pairwise_angles_deg
from .layers import ParamStore, mlp

BRANCH_INPUT_DIMS = {"local": 3, "global": 6}


@dataclass(frozen=True)
class EncoderInputs:
    """Per-cloud grouped inputs (numpy, float64)."""

    loc1: np.ndarray  # (S1, k1, 3)
    glo1: np.ndarray  # (S1, k1, 6)
    nb2: np.ndarray  # (S2, k2) indices into the S1 stage-1 centers
    loc2: np.ndarray  # (S2, k2, 3)
    glo2: np.ndarray  # (S2, k2, 3)
    ang_sa: np.ndarray  # (S2, S2) pairwise local-frame angles, degrees
    ang_ca: np.ndarray  # (S2,) local-vs-global frame angles, degrees
    centers: np.ndarray  # (S2,) indices of the final centers in the cloud


@dataclass
class Batch:
    """Stacked encoder inputs of B clouds."""

    loc1: np.ndarray  # (B*S1*k1, 3)
    glo1: np.ndarray  # (B*S1*k1, 6)
    nb2: np.ndarray  # (B*S2*k2,) row indices into the B*S1 stage-1 features
    loc2: np.ndarray  # (B*S2*k2, 3)
    glo2: np.ndarray  # (B*S2*k2, 3)
    ang_sa: np.ndarray  # (B, S2, S2)
    ang_ca: np.ndarray  # (B, S2)
    shape: tuple  # (B, S1, k1, S2, k2)
    labels: np.ndarray | None = None


def prepare_inputs(points, desc: DescriptorSet, n1: int, n2: int, k1: int, k2: int, seed: int) -> EncoderInputs:
    """Sample centers and gather both branches' grouped inputs for one cloud."""
    pts = np.asarray(points, dtype=np.float64)
    n = len(pts)
    if not (n2 <= n1 <= n):
        raise KTooLarge(f"need n2 <= n1 <= N, got n2={n2}, n1={n1}, N={n}")
    if k1 > desc.k:
        raise KTooLarge(f"stage-1 group size {k1} exceeds the {desc.k} precomputed neighbors")
    if not 1 <= k2 <= n1:
        raise KTooLarge(f"stage-2 group size {k2} must be in [1, {n1}]")

    idx1 = fps_indices(pts, n1, fps_start(n, seed))
    nb1 = desc.neighbors.indices[idx1, :k1]
    loc1 = desc.local[idx1, :k1]
    g = desc.global_
    glo1 = np.concatenate([g[nb1] - g[idx1][:, None, :], g[nb1]], axis=-1)

    p1 = pts[idx1]
    sel2 = fps_indices(p1, n2, fps_start(n1, seed + 1))
    if k2 > 1:
        near = knn(p1, k2 - 1, queries=sel2).indices
        nb2 = np.concatenate([sel2[:, None], near], axis=1)
    else:
        nb2 = sel2[:, None]
    centers = idx1[sel2]
    bases = desc.local_bases[centers]
    off = p1[nb2] - pts[centers][:, None, :]
    loc2 = off @ bases
    glo2 = g[idx1[nb2]] - g[centers][:, None, :]
    return EncoderInputs(
        loc1=loc1,
        glo1=glo1,
        nb2=nb2,
        loc2=loc2,
        glo2=glo2,
        ang_sa=pairwise_angles_deg(bases),
        ang_ca=cross_angles_deg(bases, desc.global_frame.basis),
        centers=centers,
    )


def collate(items, labels=None) -> Batch:
    b = len(items)
    s1, k1 = items[0].loc1.shape[:2]
    s2, k2 = items[0].nb2.shape
    offs = (np.arange(b) * s1)[:, None, None]
    nb2 = (np.stack([it.nb2 for it in items]) + offs).reshape(-1)
    return Batch(
        loc1=np.concatenate([it.loc1.reshape(-1, 3) for it in items]),
        glo1=np.concatenate([it.glo1.reshape(-1, 6) for it in items]),
        nb2=nb2,
        loc2=np.concatenate([it.loc2.reshape(-1, 3) for it in items]),
        glo2=np.concatenate([it.glo2.reshape(-1, 3) for it in items]),
        ang_sa=np.stack([it.ang_sa for it in items]),
        ang_ca=np.stack([it.ang_ca for it in items]),
        shape=(b, s1, k1, s2, k2),
        labels=None if labels is None else np.asarray(labels, dtype=np.int64),
    )


def encode(p: ParamStore, batch: Batch, branch: str, dtype) -> ad.Tensor:
    """Run one branch's two set-abstraction stages: returns ``(B, S2, C)``."""
    b, s1, k1, s2, k2 = batch.shape
    x1 = batch.loc1 if branch == "local" else batch.glo1
    rel2 = batch.loc2 if branch == "local" else batch.glo2
    h = mlp(p, f"enc_{branch}.sa1", ad.Tensor(x1.astype(dtype)), 2, norm=True)
    c1 = h.shape[-1]
    h = ad.max_over_axis(ad.reshape(h, (b * s1, k1, c1)), 1)
    grouped = ad.concat([ad.gather_rows(h, batch.nb2), ad.Tensor(rel2.astype(dtype))], axis=-1)
    h = mlp(p, f"enc_{branch}.sa2", grouped, 2, norm=True)
    c2 = h.shape[-1]
    h = ad.max_over_axis(ad.reshape(h, (b * s2, k2, c2)), 1)
    return ad.reshape(h, (b, s2, c2))
