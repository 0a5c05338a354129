"""Rotation-invariant low-level inputs.

Local descriptors express each neighbor offset in the center point's local
frame; global descriptors express barycentric coordinates in the global PCA
frame.  Both are computed in float64.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .cloud import NeighborIndex, PointCloud, knn
from .errors import MagicMismatch, ParseError, TruncatedFile
from .frames import Frame, grf, lrf_bases

RIDS_MAGIC = b"RIDS"
RIDS_VERSION = 1
_RIDS_HEADER = struct.Struct("<4sBQQ")


@dataclass(frozen=True)
class DescriptorSet:
    local: np.ndarray  # (N, k, 3)
    global_: np.ndarray  # (N, 3)
    local_bases: np.ndarray  # (N, 3, 3)
    global_frame: Frame
    neighbors: NeighborIndex

    @property
    def n(self) -> int:
        return self.local.shape[0]

    @property
    def k(self) -> int:
        return self.local.shape[1]

    def local_frames(self, points) -> list[Frame]:
        return [Frame(b, p) for b, p in zip(self.local_bases, points)]


def local_descriptors(pc, nbrs: NeighborIndex, bases) -> np.ndarray:
    """``(p_j - p_i)^T M_i`` for every point i and neighbor j: shape (N, k, 3)."""
    pts = pc.points if isinstance(pc, PointCloud) else np.asarray(pc, dtype=np.float64)
    bases = np.asarray(bases)
    if isinstance(bases, Frame) or bases.ndim == 2:
        raise ValueError("expected one basis per point")
    off = pts[nbrs.indices] - pts[:, None, :]
    return off @ bases


def global_descriptors(pc, g: Frame) -> np.ndarray:
    """Barycentric coordinates expressed in the global frame: (N, 3)."""
    pts = pc.points if isinstance(pc, PointCloud) else np.asarray(pc, dtype=np.float64)
    return (pts - g.origin) @ g.basis


def compute_descriptors(
    pc: PointCloud,
    k_lrf: int = 32,
    disambiguate_local: bool = True,
    disambiguate_global: bool = True,
    strategy="d",
    rng: Optional[np.random.Generator] = None,
    nbrs: Optional[NeighborIndex] = None,
) -> DescriptorSet:
    """Full descriptor set of a cloud (frames, neighbors and both descriptor kinds)."""
    nbrs = nbrs if nbrs is not None else knn(pc, k_lrf)
    bases = lrf_bases(pc.points, nbrs, disambiguate=disambiguate_local)
    g = grf(pc, strategy=strategy, disambiguate=disambiguate_global, rng=rng)
    return DescriptorSet(
        local=local_descriptors(pc, nbrs, bases),
        global_=global_descriptors(pc, g),
        local_bases=bases,
        global_frame=g,
        neighbors=nbrs,
    )


def encode_rids(ds: DescriptorSet) -> bytes:
    """``RIDS | u8 version | u64 N | u64 k | N*k*3 f32 | N*3 f32`` (little-endian)."""
    head = _RIDS_HEADER.pack(RIDS_MAGIC, RIDS_VERSION, ds.n, ds.k)
    return (
        head
        + np.ascontiguousarray(ds.local, dtype="<f4").tobytes()
        + np.ascontiguousarray(ds.global_, dtype="<f4").tobytes()
    )


def decode_rids(buf: bytes) -> tuple[np.ndarray, np.ndarray]:
    """Return the ``(local, global)`` float32 blocks of a RIDS file."""
    if buf[:4] != RIDS_MAGIC:
        raise MagicMismatch(f"expected magic {RIDS_MAGIC!r}", offset=0)
    if len(buf) < _RIDS_HEADER.size:
        raise TruncatedFile("RIDS header truncated", offset=len(buf))
    _, version, n, k = _RIDS_HEADER.unpack_from(buf)
    if version != RIDS_VERSION:
        raise ParseError(f"unsupported RIDS version {version}", offset=4)
    need = _RIDS_HEADER.size + 4 * (n * k * 3 + n * 3)
    if len(buf) < need:
        raise TruncatedFile(f"RIDS body needs {need} bytes, found {len(buf)}", offset=len(buf))
    off = _RIDS_HEADER.size
    local = np.frombuffer(buf, dtype="<f4", count=n * k * 3, offset=off).reshape(n, k, 3)
    glob = np.frombuffer(buf, dtype="<f4", count=n * 3, offset=off + 4 * n * k * 3).reshape(n, 3)
    return local.copy(), glob.copy()
