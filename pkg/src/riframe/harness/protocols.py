"""Rotation protocols, input preparation and evaluation."""
from __future__ import annotations

import numpy as np

from .. import autodiff as ad
from ..cloud import PointCloud, add_noise, apply_rotation, augment
from ..descriptors import compute_descriptors
from ..linalg3 import random_rotation
from ..net import NetConfig, collate, forward, prepare_inputs
from .config import TrainConfig

# (training rotation, test rotation) per protocol
ROTATIONS = {"zz": ("z_axis", "z_axis"), "zso3": ("z_axis", "full_so3"), "so3so3": ("full_so3", "full_so3")}


def seed_for(*parts: int) -> int:
    """Stable 63-bit seed derived from integer parts."""
    return int(np.random.SeedSequence([int(p) % (2**63) for p in parts]).generate_state(1, np.uint64)[0] >> 1)


def rotate(pc: PointCloud, mode: str, seed: int) -> PointCloud:
    return apply_rotation(pc, random_rotation(seed, mode))


def cloud_inputs(pc: PointCloud, cfg: TrainConfig, sample_seed: int, rng_seed: int = 0):
    """Descriptors and grouped encoder inputs of one (already transformed) cloud."""
    desc = compute_descriptors(
        pc,
        k_lrf=cfg.k_lrf,
        disambiguate_local=cfg.disambiguate,
        disambiguate_global=cfg.disambiguate,
        strategy=cfg.strategy,
        rng=np.random.default_rng(rng_seed),
    )
    return prepare_inputs(pc.points, desc, cfg.n1, cfg.n2, cfg.k1, cfg.k2, seed=sample_seed)


def train_inputs(clouds, cfg: TrainConfig, view: int):
    """One rotated and augmented view of every training cloud."""
    mode = ROTATIONS[cfg.protocol][0]
    out = []
    for i, pc in enumerate(clouds):
        s = seed_for(cfg.seed, 1, i, view)
        x = rotate(pc, mode, s)
        if cfg.augment:
            x = augment(x, s + 1)
        out.append(cloud_inputs(x, cfg, sample_seed=pc.seed, rng_seed=s))
    return out


_TEST_STREAM = {"zz": 2, "zso3": 3, "so3so3": 4}


def test_inputs(clouds, cfg: TrainConfig, protocol: str, sigma: float = 0.0, n_outliers: int = 0):
    """Inputs of every test cloud rotated per ``protocol`` (and optionally corrupted).

    Each protocol draws its own fixed rotation per cloud.
    """
    mode = ROTATIONS[protocol][1]
    out = []
    for i, pc in enumerate(clouds):
        s = seed_for(cfg.seed, _TEST_STREAM[protocol], i)
        x = rotate(pc, mode, s)
        if sigma > 0 or n_outliers > 0:
            x = add_noise(x, sigma, n_outliers, s + 1)
        out.append(cloud_inputs(x, cfg, sample_seed=pc.seed, rng_seed=s))
    return out


def predict_logits(params, net_cfg: NetConfig, inputs, batch_size: int) -> np.ndarray:
    rows = []
    with ad.no_grad():
        for start in range(0, len(inputs), batch_size):
            batch = collate(inputs[start : start + batch_size])
            rows.append(forward(params, net_cfg, batch)["logits"].data.astype(np.float64))
    return np.concatenate(rows) if rows else np.zeros((0, net_cfg.n_classes))


def accuracy(logits: np.ndarray, labels) -> float:
    labels = np.asarray(labels)
    return float(np.mean(np.argmax(logits, axis=1) == labels)) if len(labels) else float("nan")


def invariance_residual(a: np.ndarray, b: np.ndarray) -> float:
    """Largest elementwise ``|a - b| / (|a| + 1e-6)``."""
    return float(np.max(np.abs(a - b) / (np.abs(a) + 1e-6))) if a.size else 0.0
