"""Kernel timings: frames, sampling, neighbor search and a network forward."""
from __future__ import annotations

import gc
import time

import numpy as np
from threadpoolctl import threadpool_limits

from .. import autodiff as ad
from ..cloud import PointCloud, fps_indices, knn
from ..frames import grf, lrf_bases
from ..net import collate, forward, init_params
from ..shapes import default_spec, generate_shape
from .config import TrainConfig
from .protocols import cloud_inputs
from .report import new_report

KERNELS = ("lrf", "grf", "fps", "knn", "ait_forward")
DEFAULT_SIZES = (512, 1024, 2048)


MIN_SAMPLE_S = 0.03


def _inner_count(fn) -> int:
    """Calls per sample so one sample lasts at least MIN_SAMPLE_S (after a warm-up call)."""
    fn()
    inner = 1
    while True:
        t = time.perf_counter()
        for _ in range(inner):
            fn()
        took = time.perf_counter() - t
        if took >= MIN_SAMPLE_S:
            return inner
        inner = max(inner * 2, int(np.ceil(inner * MIN_SAMPLE_S / max(took, 1e-9))))


def _sample(fn, inner: int) -> float:
    t = time.perf_counter()
    for _ in range(inner):
        fn()
    return (time.perf_counter() - t) / inner


def _time_round_robin(kernels: dict, repeats: int) -> dict:
    """Per-call seconds of every kernel, sampled in interleaved rounds.

    Interleaving spreads each kernel's samples over the whole run, so slow
    and fast phases of a shared machine hit all kernels alike.
    """
    inner = {key: _inner_count(fn) for key, fn in kernels.items()}
    times = {key: [] for key in kernels}
    gc_was_on = gc.isenabled()
    gc.disable()
    try:
        for _ in range(repeats):
            for key, fn in kernels.items():
                times[key].append(_sample(fn, inner[key]))
    finally:
        if gc_was_on:
            gc.enable()
    return times


def bench_cloud(n: int, seed: int = 0) -> PointCloud:
    return generate_shape(default_spec("torus", n), seed)


def _model_config(cfg: TrainConfig, n: int) -> TrainConfig:
    # keep the desk sampling ratios when the input size changes
    from dataclasses import replace

    scale = n / cfg.n_points
    n1 = max(int(round(cfg.n1 * scale)), cfg.k2)
    n2 = max(int(round(cfg.n2 * scale)), 1)
    return replace(cfg, n_points=n, n1=n1, n2=min(n2, n1))


def _kernels(cfg: TrainConfig, n: int, k: int) -> dict:
    pc = bench_cloud(n, cfg.seed)
    nbrs = knn(pc, k)
    mcfg = _model_config(cfg, n)
    net_cfg = mcfg.net()
    params = init_params(net_cfg, seed=cfg.seed)
    batch = collate([cloud_inputs(pc, mcfg, sample_seed=cfg.seed)])

    def ait():
        with ad.no_grad():
            forward(params, net_cfg, batch)

    return {
        ("lrf", n): lambda: lrf_bases(pc.points, nbrs),
        ("grf", n): lambda: grf(pc),
        ("fps", n): lambda: fps_indices(pc.points, n // 4, 0),
        ("knn", n): lambda: knn(pc, k),
        ("ait_forward", n): ait,
    }


def run_bench(cfg: TrainConfig, sizes=DEFAULT_SIZES, repeats: int = 21, k: int = 32) -> dict:
    """Min and median per-call wall times per kernel and size, single-threaded BLAS.

    ``lrf`` builds every point's frame from precomputed neighbors, ``knn``
    is the exact k-neighbor search, ``fps`` picks N/4 centers and
    ``ait_forward`` is one full network forward (encoders, attention blocks,
    head) on precomputed inputs of one cloud.
    """
    report = new_report("bench", cfg.to_dict(), cfg.config_hash())
    kernels = {}
    with threadpool_limits(1):
        for n in sizes:
            kernels.update(_kernels(cfg, n, k))
        times = _time_round_robin(kernels, repeats)
    rows = []
    for (name, n), ts in times.items():
        best = min(ts)
        rows.append(
            {
                "kernel": name,
                "n_points": n,
                "k": k,
                "seconds_min": best,
                "seconds_median": float(np.median(ts)),
                "seconds_mean": float(np.mean(ts)),
                "per_second": 1.0 / best if best > 0 else float("inf"),
                "repeats": repeats,
            }
        )
    rows.sort(key=lambda r: (r["n_points"], KERNELS.index(r["kernel"])))
    report["results"] = rows
    lrf = {r["n_points"]: r["seconds_min"] for r in rows if r["kernel"] == "lrf"}
    if 1024 in lrf and 2048 in lrf:
        report["lrf_scaling_2048_over_1024"] = lrf[2048] / lrf[1024]
    return report


def compare_bench(a: dict, b: dict) -> dict:
    """Relative difference ``|a - b| / min(a, b)`` of every shared (kernel, N) mean timing.

    The mean over interleaved rounds averages out the fast and slow phases
    of a shared CPU better than the min or the median.
    """
    ta = {(r["kernel"], r["n_points"]): r["seconds_mean"] for r in a["results"]}
    tb = {(r["kernel"], r["n_points"]): r["seconds_mean"] for r in b["results"]}
    return {f"{k}@{n}": abs(ta[(k, n)] - tb[(k, n)]) / min(ta[(k, n)], tb[(k, n)]) for (k, n) in ta if (k, n) in tb}
