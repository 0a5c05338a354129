"""Training and evaluation runs."""
from __future__ import annotations

import logging
import time
from pathlib import Path

import numpy as np

from .. import autodiff as ad
from ..errors import NonFiniteLoss
from ..net import SGD, collate, cosine_lr, forward, init_params, load_checkpoint, losses, save_checkpoint
from .config import PROTOCOLS, TrainConfig, sweep_floats
from .protocols import accuracy, invariance_residual, predict_logits, test_inputs, train_inputs
from .report import new_report, write_report, write_sweep_csv

log = logging.getLogger(__name__)

CHECKPOINT_NAME = "best.rimw"


def train(cfg: TrainConfig, train_clouds, test_clouds, out_dir=None, max_seconds: float | None = None):
    """Train under ``cfg.protocol``; returns ``(params, report)``.

    The checkpoint with the best test accuracy is written to ``out_dir``.

    Descriptors of ``cfg.train_views`` rotated/augmented views per training
    cloud are computed once up front; epoch ``e`` uses view ``e % views``.
    """
    t_start = time.perf_counter()
    net_cfg = cfg.net()
    params = init_params(net_cfg, seed=cfg.seed)
    opt = SGD(params, cfg.lr, cfg.momentum, cfg.weight_decay, cfg.grad_clip or None)
    labels = np.array([pc.label for pc in train_clouds])
    test_labels = np.array([pc.label for pc in test_clouds])

    t0 = time.perf_counter()
    views = [train_inputs(train_clouds, cfg, v) for v in range(cfg.train_views)]
    tests = test_inputs(test_clouds, cfg, cfg.protocol)
    prep_s = time.perf_counter() - t0

    report = new_report("train", cfg.to_dict(), cfg.config_hash())
    report["n_params"] = params.num_params()
    epochs = []
    best = {"accuracy": -1.0, "epoch": None}
    order_rng = np.random.default_rng(cfg.seed)
    out = Path(out_dir) if out_dir else None
    ckpt = out / CHECKPOINT_NAME if out else None
    stopped_early = False

    for epoch in range(cfg.epochs):
        te = time.perf_counter()
        opt.lr = cosine_lr(cfg.lr, epoch, cfg.epochs, cfg.lr_min)
        data = views[epoch % cfg.train_views]
        perm = order_rng.permutation(len(data))
        sums = {"ce": 0.0, "reg_local": 0.0, "reg_global": 0.0, "total": 0.0}
        n_seen, n_correct = 0, 0
        for step, start in enumerate(range(0, len(perm), cfg.batch_train)):
            idx = perm[start : start + cfg.batch_train]
            batch = collate([data[i] for i in idx], labels[idx])
            params.zero_grad()
            out_fw = forward(params, net_cfg, batch)
            parts = losses(params, net_cfg, out_fw, batch.labels)
            total = float(parts["total"].data)
            if not np.isfinite(total):
                raise NonFiniteLoss(epoch=epoch, step=step)
            ad.backward(parts["total"])
            opt.step()
            for k, v in parts.items():
                sums[k] += float(v.data) * len(idx)
            n_seen += len(idx)
            n_correct += int(np.sum(np.argmax(out_fw["logits"].data, axis=1) == batch.labels))
        rec = {"epoch": epoch, "lr": opt.lr, "train_accuracy": n_correct / n_seen, "grad_norm": opt.last_grad_norm}
        rec.update({k: v / n_seen for k, v in sums.items()})
        last = epoch == cfg.epochs - 1
        out_of_time = max_seconds is not None and time.perf_counter() - t_start > max_seconds
        if (epoch + 1) % cfg.eval_every == 0 or last or out_of_time:
            acc = accuracy(predict_logits(params, net_cfg, tests, cfg.batch_eval), test_labels)
            rec["test_accuracy"] = acc
            if acc > best["accuracy"]:
                best = {"accuracy": acc, "epoch": epoch}
                if ckpt:
                    save_checkpoint(ckpt, params, net_cfg, {"epoch": epoch, "test_accuracy": acc})
        rec["seconds"] = time.perf_counter() - te
        epochs.append(rec)
        log.info("epoch %d  %s", epoch, {k: round(v, 4) for k, v in rec.items() if isinstance(v, float)})
        if out_of_time and not last:
            stopped_early = True
            break

    report["epochs"] = epochs
    report["best"] = best
    report["final_test_accuracy"] = epochs[-1].get("test_accuracy")
    report["stopped_early"] = stopped_early
    report["checkpoint"] = str(ckpt) if ckpt else None
    report["timing"] = {"prepare_s": prep_s, "total_s": time.perf_counter() - t_start}
    if out:
        write_report(report, out / "train_report.json")
    return params, report


def evaluate(
    params,
    cfg: TrainConfig,
    test_clouds,
    protocols=PROTOCOLS,
    sweeps: bool = False,
    out_dir=None,
) -> dict:
    """Accuracy per protocol, logit invariance residuals and optional noise/outlier sweeps."""
    t0 = time.perf_counter()
    net_cfg = cfg.net()
    labels = np.array([pc.label for pc in test_clouds])
    report = new_report("eval", cfg.to_dict(), cfg.config_hash())
    logits = {}
    for proto in protocols:
        logits[proto] = predict_logits(params, net_cfg, test_inputs(test_clouds, cfg, proto), cfg.batch_eval)
    report["accuracy"] = {p: accuracy(l, labels) for p, l in logits.items()}
    ref = logits.get("zz")
    if ref is not None:
        report["invariance_residual"] = {p: invariance_residual(ref, l) for p, l in logits.items() if p != "zz"}
        # clouds whose logits moved at all: near-symmetric shapes can flip the global frame
        report["invariance_clouds_changed"] = {
            p: int(np.sum(np.abs(l - ref).max(axis=1) > 1e-3 * (np.abs(ref).max(axis=1) + 1e-6)))
            for p, l in logits.items()
            if p != "zz"
        }
    acc = report["accuracy"]
    if "zz" in acc and "zso3" in acc:
        report["delta_zz_zso3_pp"] = 100.0 * abs(acc["zz"] - acc["zso3"])
    if "zso3" in acc and "so3so3" in acc:
        report["delta_zso3_so3so3_pp"] = 100.0 * abs(acc["zso3"] - acc["so3so3"])

    if sweeps:
        proto = "zso3"
        rows = []
        for sigma in sweep_floats(cfg.noise_sigmas):
            lg = predict_logits(params, net_cfg, test_inputs(test_clouds, cfg, proto, sigma=sigma), cfg.batch_eval)
            rows.append({"kind": "gaussian", "sigma": sigma, "n_outliers": 0, "accuracy": accuracy(lg, labels)})
        for n_out in sweep_floats(cfg.outlier_counts):
            lg = predict_logits(
                params, net_cfg, test_inputs(test_clouds, cfg, proto, n_outliers=int(n_out)), cfg.batch_eval
            )
            rows.append({"kind": "outliers", "sigma": 0.0, "n_outliers": int(n_out), "accuracy": accuracy(lg, labels)})
        report["sweep"] = rows
        if out_dir:
            write_sweep_csv(rows, Path(out_dir) / "robustness.csv")
    report["timing"] = {"total_s": time.perf_counter() - t0}
    if out_dir:
        write_report(report, Path(out_dir) / "eval_report.json")
    return report


def load_for_eval(path, cfg: TrainConfig):
    """Checkpoint weights, checked against the model the config describes."""
    params, _, extra = load_checkpoint(path, cfg.net())
    return params, extra
