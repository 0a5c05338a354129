"""Feature-space registration between fused features and a single branch.

Each registration pair owns two projection heads: ``{name}.phi1`` maps the
candidate side (fused features ``U``) and ``{name}.phi2`` the anchor side
(branch features ``F``).  Projections are L2-normalized so that the small
temperature acts on cosine similarities.
"""
from __future__ import annotations

import numpy as np

from .. import autodiff as ad
from ..errors import ShapeMismatch
from .layers import ParamStore, init_mlp, mlp


def init_projections(store: ParamStore, name: str, c: int, out: int, rng, dtype):
    init_mlp(store, f"{name}.phi1", (c, c, out), rng, dtype)
    init_mlp(store, f"{name}.phi2", (c, c, out), rng, dtype)


def project(p: ParamStore, head: str, x) -> ad.Tensor:
    """Two-layer projection of ``(M, C)`` rows followed by L2 normalization."""
    return ad.l2_normalize_rows(mlp(p, head, x, 2, final_act=False))


def _flat(x) -> ad.Tensor:
    x = ad.as_tensor(x)
    if x.ndim == 3:
        return ad.reshape(x, (x.shape[0] * x.shape[1], x.shape[2]))
    if x.ndim != 2:
        raise ShapeMismatch(f"expected (N, C) or (B, N, C) features, got {x.shape}")
    return x


def correspondence_map(p: ParamStore, name: str, x, y, temperature: float) -> ad.Tensor:
    """Soft matching of every ``y`` row against all ``x`` rows.

    ``m[i, j] = softmax_j(phi1(y_i) . phi2(x_j) / t)``; each row is a
    probability distribution over the rows of ``x``.
    """
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    zx = project(p, f"{name}.phi2", _flat(x))
    zy = project(p, f"{name}.phi1", _flat(y))
    return ad.row_softmax(ad.scalar_mul(ad.matmul(zy, ad.transpose(zx)), 1.0 / temperature))


def registration_logits(p: ParamStore, name: str, u, f, temperature: float) -> ad.Tensor:
    """``(M, M)`` logits with anchor rows ``f_i`` and candidate columns ``U_k``.

    ``M = B * N``: every point of every cloud in the batch is a candidate.
    """
    u, f = _flat(u), _flat(f)
    if u.shape[0] != f.shape[0]:
        raise ShapeMismatch(f"registration: {u.shape} and {f.shape} cover different point sets")
    zf = project(p, f"{name}.phi2", f)
    zu = project(p, f"{name}.phi1", u)
    return ad.scalar_mul(ad.matmul(zf, ad.transpose(zu)), 1.0 / temperature)


def registration_loss(p: ParamStore, name: str, u, f, temperature: float) -> ad.Tensor:
    """InfoNCE with the same point as the positive, averaged over anchors.

    Row ``r`` of the flattened ``f`` corresponds to row ``r`` of the
    flattened ``u``; all other rows of the batch are negatives.
    """
    logits = registration_logits(p, name, u, f, temperature)
    return ad.cross_entropy_logits(logits, np.arange(logits.shape[0]))
