"""Classifier built from the two encoders, aligned attention blocks and a head."""
from __future__ import annotations

import hashlib
import json
import math
import struct
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .. import autodiff as ad
from ..errors import CheckpointMismatch, ConfigError, MagicMismatch, TruncatedFile
from .attention import OFFSET_NORMS, afi, angular_embedding, iac, ias, init_branch
from .encoder import BRANCH_INPUT_DIMS, Batch, encode
from .layers import ParamStore, init_linear, init_mlp, linear
from .registration import init_projections, registration_loss


@dataclass(frozen=True)
class NetConfig:
    n_classes: int = 8
    n1: int = 512  # stage-1 centers
    n2: int = 128  # stage-2 centers (points entering attention)
    k1: int = 32
    k2: int = 32
    c1: int = 128
    c2: int = 256
    d_attn: int = 64
    n_blocks: int = 2
    t_alpha: float = 15.0
    temperature: float = 0.017
    proj_dim: int = 64
    head_hidden: int = 256
    lambda_reg: float = 1.0
    offset_norm: str = "pct"
    use_e_sa: bool = True
    use_e_ca: bool = True
    sa_on_global: bool = False
    sequential_attn: bool = False
    reg_local: bool = True
    reg_global: bool = True
    dtype: str = "float32"

    def validate(self):
        if self.offset_norm not in OFFSET_NORMS:
            raise ConfigError(f"offset_norm must be one of {OFFSET_NORMS}")
        if self.d_attn % 2:
            raise ConfigError("d_attn must be even")
        if not (self.n2 <= self.n1) or self.k2 > self.n1:
            raise ConfigError("need n2 <= n1 and k2 <= n1")
        if self.dtype not in ("float32", "float64"):
            raise ConfigError("dtype must be float32 or float64")
        return self

    def config_hash(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    @classmethod
    def from_dict(cls, d: dict) -> "NetConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ConfigError(f"unknown model keys {sorted(unknown)}")
        return cls(**d)


def init_params(cfg: NetConfig, seed: int = 0) -> ParamStore:
    cfg.validate()
    rng = np.random.default_rng(seed)
    dt = np.dtype(cfg.dtype)
    p = ParamStore()
    for br, cin in BRANCH_INPUT_DIMS.items():
        init_mlp(p, f"enc_{br}.sa1", (cin, cfg.c1, cfg.c1), rng, dt)
        init_mlp(p, f"enc_{br}.sa2", (cfg.c1 + 3, cfg.c2, cfg.c2), rng, dt)
    c, d = cfg.c2, cfg.d_attn
    for i in range(cfg.n_blocks):
        init_branch(p, f"blk{i}.sa1", c, d, rng, dt)
        init_linear(p, f"blk{i}.phi1", c, c, rng, dt)
        init_branch(p, f"blk{i}.sa2", c, d, rng, dt)
        init_branch(p, f"blk{i}.ca2", c, d, rng, dt)
        init_linear(p, f"blk{i}.phi2", c, c, rng, dt)
        if cfg.sa_on_global:
            init_branch(p, f"blk{i}.sag", c, d, rng, dt)
            init_linear(p, f"blk{i}.phig", c, c, rng, dt)
    for name, on in (("reg_local", cfg.reg_local), ("reg_global", cfg.reg_global)):
        if on:
            init_projections(p, name, c, cfg.proj_dim, rng, dt)
    init_linear(p, "head.0", c, cfg.head_hidden, rng, dt)
    init_linear(p, "head.1", cfg.head_hidden, cfg.n_classes, rng, dt, gain=1.0)
    return p


def ait_block(p: ParamStore, cfg: NetConfig, i: int, f_loc, f_glo, emb_sa, emb_ca, emb_g):
    """One aligned-integration block: local self-attention, then fusion with the global branch."""
    norm = cfg.offset_norm
    if cfg.sa_on_global:
        f_glo = ias(f_glo, p, f"blk{i}.sag", f"blk{i}.phig", emb_g, norm)
    f1 = ias(f_loc, p, f"blk{i}.sa1", f"blk{i}.phi1", emb_sa, norm)
    if cfg.sequential_attn:
        u = iac(f1, f_glo, p, f"blk{i}.ca2", f"blk{i}.phi2", emb_ca, norm)
    else:
        u = afi(f1, f_glo, p, f"blk{i}.sa2", f"blk{i}.ca2", f"blk{i}.phi2", emb_sa, emb_ca, norm)
    return u, f_glo


def forward(p: ParamStore, cfg: NetConfig, batch: Batch) -> dict:
    """Returns logits and the intermediate feature maps ``f_local``, ``f_global``, ``u``."""
    dt = np.dtype(cfg.dtype)
    f_loc = encode(p, batch, "local", dt)
    f_glo = encode(p, batch, "global", dt)
    emb_sa = angular_embedding(batch.ang_sa, cfg.d_attn, cfg.t_alpha, dt) if cfg.use_e_sa else None
    emb_ca = angular_embedding(batch.ang_ca, cfg.d_attn, cfg.t_alpha, dt) if cfg.use_e_ca else None
    emb_g = None
    if cfg.sa_on_global and cfg.use_e_sa:
        # every point shares the one global frame, so all pairwise angles are 0
        emb_g = angular_embedding(np.zeros_like(batch.ang_sa), cfg.d_attn, cfg.t_alpha, dt)
    u, g = f_loc, f_glo
    for i in range(cfg.n_blocks):
        u, g = ait_block(p, cfg, i, u, g, emb_sa, emb_ca, emb_g)
    return {"logits": classify(p, u), "u": u, "f_local": f_loc, "f_global": f_glo}


def classify(p: ParamStore, u) -> ad.Tensor:
    """Max-pool the fused per-point features and map them to class logits."""
    pooled = ad.max_over_axis(u, 1)
    return linear(p, "head.1", ad.leaky_relu(linear(p, "head.0", pooled)))


def losses(p: ParamStore, cfg: NetConfig, out: dict, labels) -> dict:
    """Cross-entropy, both registration terms and their weighted total."""
    ce = ad.cross_entropy_logits(out["logits"], labels)
    total = ce
    parts = {"ce": ce}
    for name, key, on in (("reg_local", "f_local", cfg.reg_local), ("reg_global", "f_global", cfg.reg_global)):
        if on:
            lr = registration_loss(p, name, out["u"], out[key], cfg.temperature)
            parts[name] = lr
            total = ad.add(total, ad.scalar_mul(lr, cfg.lambda_reg))
    parts["total"] = total
    return parts


class SGD:
    """Momentum SGD with L2 weight decay folded into the gradient.

    With ``clip_norm`` the raw gradients are rescaled so their global L2 norm
    does not exceed it.
    """

    def __init__(
        self,
        params: ParamStore,
        lr: float,
        momentum: float = 0.9,
        weight_decay: float = 1e-4,
        clip_norm: float | None = None,
    ):
        self.params = params
        self.lr = lr
        self.momentum = momentum
        self.weight_decay = weight_decay
        self.clip_norm = clip_norm
        self.velocity = {k: np.zeros_like(v.data) for k, v in params.items()}
        self.last_grad_norm = 0.0

    def step(self):
        sq = sum(float(np.sum(t.grad.astype(np.float64) ** 2)) for t in self.params.values() if t.grad is not None)
        self.last_grad_norm = math.sqrt(sq)
        scale = 1.0
        if self.clip_norm and self.last_grad_norm > self.clip_norm:
            scale = self.clip_norm / self.last_grad_norm
        for k, t in self.params.items():
            if t.grad is None:
                continue
            g = scale * t.grad + self.weight_decay * t.data
            v = self.velocity[k]
            v *= self.momentum
            v += g
            t.data -= (self.lr * v).astype(t.dtype)


def cosine_lr(base: float, epoch: int, total: int, floor: float = 0.0) -> float:
    return floor + 0.5 * (base - floor) * (1.0 + math.cos(math.pi * epoch / max(total, 1)))


CKPT_MAGIC = b"RIMW"
CKPT_VERSION = 1
_CKPT_HEAD = struct.Struct("<4sBI")


def save_checkpoint(path, p: ParamStore, cfg: NetConfig, extra: dict | None = None) -> None:
    """``RIMW | u8 version | u32 header length | JSON header | f32 LE weights``."""
    header = {
        "config": asdict(cfg),
        "config_hash": cfg.config_hash(),
        "shapes": p.shapes(),
        "extra": extra or {},
    }
    hb = json.dumps(header, sort_keys=True).encode()
    blob = b"".join(np.ascontiguousarray(t.data, dtype="<f4").tobytes() for t in p.values())
    Path(path).write_bytes(_CKPT_HEAD.pack(CKPT_MAGIC, CKPT_VERSION, len(hb)) + hb + blob)


def read_checkpoint_header(buf: bytes) -> tuple[dict, int]:
    if buf[:4] != CKPT_MAGIC:
        raise MagicMismatch(f"expected magic {CKPT_MAGIC!r}", offset=0)
    if len(buf) < _CKPT_HEAD.size:
        raise TruncatedFile("checkpoint header truncated", offset=len(buf))
    _, version, hlen = _CKPT_HEAD.unpack_from(buf)
    if version != CKPT_VERSION:
        raise CheckpointMismatch(f"unsupported checkpoint version {version}")
    end = _CKPT_HEAD.size + hlen
    if len(buf) < end:
        raise TruncatedFile("checkpoint header truncated", offset=len(buf))
    return json.loads(buf[_CKPT_HEAD.size:end]), end


def load_checkpoint(path, cfg: NetConfig | None = None) -> tuple[ParamStore, NetConfig, dict]:
    """Load weights; with ``cfg`` given, its parameter shapes must match the file."""
    buf = Path(path).read_bytes()
    header, off = read_checkpoint_header(buf)
    stored = NetConfig.from_dict(header["config"])
    cfg = cfg or stored
    p = init_params(replace_dtype(cfg, "float32"), seed=0)
    want = p.shapes()
    if want != header["shapes"]:
        raise CheckpointMismatch(f"checkpoint shapes do not match the model (config hash {header['config_hash']})")
    for t in p.values():
        n = t.data.size
        if len(buf) < off + 4 * n:
            raise TruncatedFile("checkpoint weights truncated", offset=len(buf))
        t.data = np.frombuffer(buf, dtype="<f4", count=n, offset=off).reshape(t.shape).astype(cfg.dtype)
        off += 4 * n
    return p, cfg, header.get("extra", {})


def replace_dtype(cfg: NetConfig, dtype: str) -> NetConfig:
    d = asdict(cfg)
    d["dtype"] = dtype
    return NetConfig(**d)
