"""Flat ``key = value`` run configuration."""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from ..errors import ConfigError
from ..net import NetConfig

PROTOCOLS = ("zz", "zso3", "so3so3")
_NET_KEYS = {f.name for f in fields(NetConfig)}


@dataclass(frozen=True)
class TrainConfig:
    # data
    seed: int = 0
    data_seed: int = 0
    n_classes: int = 8
    n_train_per_class: int = 40
    n_test_per_class: int = 20
    n_points: int = 1024
    k_lrf: int = 32
    strategy: str = "d"
    disambiguate: bool = True
    # optimization
    epochs: int = 20
    batch_train: int = 32
    batch_eval: int = 16
    lr: float = 0.01
    lr_min: float = 0.0
    momentum: float = 0.9
    weight_decay: float = 1e-4
    grad_clip: float = 10.0
    train_views: int = 2
    augment: bool = True
    eval_every: int = 5
    protocol: str = "zz"
    # robustness sweeps
    noise_sigmas: str = "0,0.01,0.02,0.04"
    outlier_counts: str = "0,16,32,64"
    # model (desk scale)
    n1: int = 256
    n2: int = 64
    k1: int = 16
    k2: int = 16
    c1: int = 64
    c2: int = 128
    d_attn: int = 32
    n_blocks: int = 2
    t_alpha: float = 15.0
    temperature: float = 0.017
    proj_dim: int = 32
    head_hidden: int = 128
    lambda_reg: float = 1.0
    offset_norm: str = "pct"
    use_e_sa: bool = True
    use_e_ca: bool = True
    sa_on_global: bool = False
    sequential_attn: bool = False
    reg_local: bool = True
    reg_global: bool = True
    dtype: str = "float32"

    def validate(self) -> "TrainConfig":
        if self.protocol not in PROTOCOLS:
            raise ConfigError(f"protocol must be one of {PROTOCOLS}, got {self.protocol!r}")
        if not 1 <= self.n_classes <= 8:
            raise ConfigError("n_classes must be between 1 and 8")
        positive = (
            "n_train_per_class", "n_test_per_class", "n_points", "k_lrf", "epochs", "batch_train",
            "batch_eval", "train_views", "eval_every", "t_alpha", "temperature", "lr",
        )
        for key in positive:
            if not getattr(self, key) > 0:
                raise ConfigError(f"{key} must be positive")
        if self.k1 > self.k_lrf:
            raise ConfigError("k1 cannot exceed k_lrf")
        if self.n1 > self.n_points:
            raise ConfigError("n1 cannot exceed n_points")
        if self.strategy not in ("a", "b", "c", "d"):
            raise ConfigError("strategy must be one of a, b, c, d")
        sweep_floats(self.noise_sigmas)
        sweep_floats(self.outlier_counts)
        self.net().validate()
        return self

    def net(self) -> NetConfig:
        d = {k: v for k, v in asdict(self).items() if k in _NET_KEYS}
        return NetConfig(n_classes=self.n_classes, **{k: v for k, v in d.items() if k != "n_classes"})

    def to_dict(self) -> dict:
        return asdict(self)

    def config_hash(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()[:16]


def sweep_floats(text: str) -> list[float]:
    try:
        return [float(s) for s in str(text).split(",") if s.strip()]
    except ValueError:
        raise ConfigError(f"bad comma-separated list {text!r}") from None


def _coerce(name: str, raw, kind):
    if kind is bool or kind == "bool":
        if isinstance(raw, bool):
            return raw
        s = str(raw).strip().lower()
        if s in ("1", "true", "yes", "on"):
            return True
        if s in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{name}: expected a boolean, got {raw!r}")
    try:
        if kind is int or kind == "int":
            return int(raw)
        if kind is float or kind == "float":
            return float(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"{name}: expected {kind}, got {raw!r}") from None
    return str(raw).strip()


_TYPES = {f.name: f.type for f in fields(TrainConfig)}


def parse_config_text(text: str) -> dict:
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        s = line.split("#", 1)[0].strip()
        if not s:
            continue
        if "=" not in s:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (t.strip() for t in s.split("=", 1))
        if key not in _TYPES:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        out[key] = value
    return out


def make_config(values: dict | None = None, **overrides) -> TrainConfig:
    """Build a config from string or typed values; unknown keys are errors."""
    merged = dict(values or {})
    merged.update(overrides)
    unknown = set(merged) - set(_TYPES)
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    typed = {k: _coerce(k, v, _TYPES[k]) for k, v in merged.items()}
    return replace(TrainConfig(), **typed).validate()


def load_config(path=None, **overrides) -> TrainConfig:
    values = parse_config_text(Path(path).read_text()) if path else {}
    return make_config(values, **overrides)
