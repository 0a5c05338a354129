"""Offset attention with rotation-aware angular terms.

Shapes: features are ``(B, N, C)``; pairwise angles ``(B, N, N)`` in degrees;
local-to-global angles ``(B, N)``.  Each attention branch owns query, key
and value projections ``{name}.wq``, ``{name}.wk``, ``{name}.wv`` and an
angular projection ``{name}.wa`` (d x d); ``phi`` is a linear layer with
row layer norm and leaky ReLU.
"""
from __future__ import annotations

import numpy as np

from .. import autodiff as ad
from ..errors import OddDimension
from .layers import ParamStore, lbr

OFFSET_NORMS = ("pct", "plain")
L1_EPS = 1e-9


def angular_embedding(delta_deg, d: int, t_alpha: float = 15.0, dtype=np.float64) -> np.ndarray:
    """Sinusoidal embedding of angles (degrees), shape ``delta.shape + (d,)``.

    Even channels hold ``sin(a / 10000**(2k/d))`` and odd channels the
    matching cosine, with ``a = delta / t_alpha``.
    """
    if d <= 0 or d % 2:
        raise OddDimension(f"embedding dimension must be a positive even number, got {d}")
    a = (np.asarray(delta_deg, dtype=np.float64)[..., None] / t_alpha).astype(dtype)
    freq = (10000.0 ** (np.arange(d // 2) * 2.0 / d)).astype(dtype)
    out = np.empty(a.shape[:-1] + (d,), dtype=dtype)
    out[..., 0::2] = np.sin(a / freq)
    out[..., 1::2] = np.cos(a / freq)
    return out


def attention_weights(logits, offset_norm: str = "pct") -> ad.Tensor:
    """Turn raw logits into mixing weights.

    ``pct`` takes the softmax over keys, transposes, and L1-normalizes each
    row, so point ``j`` mixes values ``v_i`` with weights proportional to
    ``softmax_i(A)[j]`` (the offset-attention convention); ``plain`` is the
    usual row softmax.
    """
    if offset_norm == "pct":
        return ad.l1_normalize_rows(ad.transpose(ad.row_softmax(logits)), L1_EPS)
    if offset_norm == "plain":
        return ad.row_softmax(logits)
    raise ValueError(f"offset_norm must be one of {OFFSET_NORMS}, got {offset_norm!r}")


def offset_attention(feats, logits, values, p: ParamStore, phi: str, offset_norm: str = "pct") -> ad.Tensor:
    """``phi(F - W V) + F`` where ``W`` are the normalized attention weights."""
    w = attention_weights(logits, offset_norm)
    f_oa = ad.sub(feats, ad.matmul(w, values))
    return ad.add(lbr(p, phi, f_oa), feats)


def self_terms(feats, p: ParamStore, name: str, emb=None):
    """Logits and values of rotation-aware self-attention.

    ``emb`` is the ``(B, N, N, d)`` embedding of pairwise frame angles, or
    None to drop the angular term.
    """
    q = ad.matmul(feats, p[f"{name}.wq"])
    k = ad.matmul(feats, p[f"{name}.wk"])
    v = ad.matmul(feats, p[f"{name}.wv"])
    logits = ad.matmul(q, ad.transpose(k))
    if emb is not None:
        qa = ad.matmul(q, ad.transpose(p[f"{name}.wa"]))
        logits = ad.add(logits, ad.contract_pairwise(qa, emb))
    return logits, v


def cross_terms(feats, feats_g, p: ParamStore, name: str, emb=None):
    """Logits and values of local-to-global cross-attention.

    Queries come from ``feats``; keys and values from ``feats_g``.  ``emb`` is
    the ``(B, N, d)`` embedding of each key point's local-vs-global angle.
    """
    q = ad.matmul(feats, p[f"{name}.wq"])
    k = ad.matmul(feats_g, p[f"{name}.wk"])
    v = ad.matmul(feats_g, p[f"{name}.wv"])
    logits = ad.matmul(q, ad.transpose(k))
    if emb is not None:
        qa = ad.matmul(q, ad.transpose(p[f"{name}.wa"]))
        logits = ad.add(logits, ad.matmul(qa, ad.Tensor(np.swapaxes(emb, -1, -2).astype(qa.dtype))))
    return logits, v


def ias(feats, p: ParamStore, name: str, phi: str, emb=None, offset_norm: str = "pct") -> ad.Tensor:
    """Rotation-aware self-attention on the local branch."""
    logits, v = self_terms(feats, p, name, emb)
    return offset_attention(feats, logits, v, p, phi, offset_norm)


def iac(feats, feats_g, p: ParamStore, name: str, phi: str, emb=None, offset_norm: str = "pct") -> ad.Tensor:
    """Cross-attention from local features to global features."""
    logits, v = cross_terms(feats, feats_g, p, name, emb)
    return offset_attention(feats, logits, v, p, phi, offset_norm)


def afi(
    feats,
    feats_g,
    p: ParamStore,
    sa: str,
    ca: str,
    phi: str,
    emb_sa=None,
    emb_ca=None,
    offset_norm: str = "pct",
) -> ad.Tensor:
    """Joint attention: self and cross logits are summed, as are their values."""
    l_sa, v_sa = self_terms(feats, p, sa, emb_sa)
    l_ca, v_ca = cross_terms(feats, feats_g, p, ca, emb_ca)
    return offset_attention(feats, ad.add(l_sa, l_ca), ad.add(v_sa, v_ca), p, phi, offset_norm)


def init_branch(store: ParamStore, name: str, c: int, d: int, rng, dtype):
    s = 1.0 / np.sqrt(c)
    store.add(f"{name}.wq", (rng.standard_normal((c, d)) * s).astype(dtype))
    store.add(f"{name}.wk", (rng.standard_normal((c, d)) * s).astype(dtype))
    store.add(f"{name}.wv", (rng.standard_normal((c, c)) * s).astype(dtype))
    store.add(f"{name}.wa", (rng.standard_normal((d, d)) / np.sqrt(d)).astype(dtype))
