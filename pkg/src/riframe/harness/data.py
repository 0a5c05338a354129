"""Synthetic dataset generation and loading."""
from __future__ import annotations

from pathlib import Path

from ..cloud import PointCloud
from ..cloudio import read_cloud, read_manifest, write_cloud, write_manifest
from ..errors import DatasetMissing
from ..shapes import FAMILIES, generate_shape, make_split
from .config import TrainConfig

SPLITS = ("train", "test")


def split_items(cfg: TrainConfig, split: str):
    families = FAMILIES[: cfg.n_classes]
    if split == "train":
        return make_split(cfg.n_train_per_class, cfg.n_points, cfg.data_seed, families)
    # a different stream so test clouds never repeat training clouds
    return make_split(cfg.n_test_per_class, cfg.n_points, cfg.data_seed + 7919, families)


def make_clouds(cfg: TrainConfig, split: str):
    return [generate_shape(spec, seed) for spec, seed in split_items(cfg, split)]


def gen_data(cfg: TrainConfig, out_dir) -> dict:
    """Write ``<out>/<split>/NNNNN.ripc`` plus ``<out>/<split>.jsonl`` manifests."""
    out = Path(out_dir)
    counts = {}
    for split in SPLITS:
        d = out / split
        d.mkdir(parents=True, exist_ok=True)
        entries = []
        for i, pc in enumerate(make_clouds(cfg, split)):
            rel = Path(split) / f"{i:05d}.ripc"
            write_cloud(pc, out / rel)
            entries.append({"path": rel.as_posix(), "label": pc.label, "seed": pc.seed})
        write_manifest(entries, out / f"{split}.jsonl")
        counts[split] = len(entries)
    return counts


def load_split(data_dir, split: str):
    """Clouds listed in ``<data_dir>/<split>.jsonl`` (float32 on disk, float64 in memory)."""
    root = Path(data_dir)
    manifest = root / f"{split}.jsonl"
    if not manifest.is_file():
        raise DatasetMissing(f"no manifest at {manifest}; run gen-data first")
    clouds = []
    for rec in read_manifest(manifest):
        path = root / rec["path"]
        if not path.is_file():
            raise DatasetMissing(f"manifest entry {path} does not exist")
        clouds.append(PointCloud(read_cloud(path).points, label=rec["label"], seed=rec["seed"]))
    return clouds
