"""``riframe`` command-line interface.

Exit codes: 0 success, 1 usage or configuration error, 2 verification
failure, 3 runtime error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from .cloudio import read_cloud
from .descriptors import compute_descriptors, encode_rids
from .errors import ConfigError, RIFrameError, VerificationFailed
from .harness.bench import DEFAULT_SIZES, run_bench
from .harness.config import PROTOCOLS, load_config, make_config, parse_config_text
from .harness.data import gen_data, load_split
from .harness.report import new_report, write_report
from .harness.train import evaluate, load_for_eval, train
from .harness.verify import LEVELS, raise_on_failure, run_suites
from .net.model import read_checkpoint_header

EXIT_OK, EXIT_USAGE, EXIT_VERIFY, EXIT_RUNTIME = 0, 1, 2, 3

# flag -> (config key, value)
ABLATION_FLAGS = {
    "--no-e-sa": ("use_e_sa", False),
    "--no-e-ca": ("use_e_ca", False),
    "--sa-on-global": ("sa_on_global", True),
    "--sequential-attn": ("sequential_attn", True),
    "--no-reg-local": ("reg_local", False),
    "--no-reg-global": ("reg_global", False),
    "--no-disambig": ("disambiguate", False),
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _common(p: argparse.ArgumentParser, ablations: bool = True):
    p.add_argument("--config", help="flat 'key = value' config file")
    p.add_argument("--seed", type=int, help="seed (non-negative integer)")
    p.add_argument("--out", help="output directory (or file for extract)")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override one config key")
    if ablations:
        for flag in ABLATION_FLAGS:
            p.add_argument(flag, action="store_true")
        p.add_argument("--offset-norm", choices=("pct", "plain"))
        p.add_argument("--protocol", choices=PROTOCOLS)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="riframe", description="Rotation-invariant point-cloud learning toolkit.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("gen-data", help="write the synthetic dataset")
    _common(p, ablations=False)

    p = sub.add_parser("extract", help="compute descriptors of one cloud into a RIDS file")
    p.add_argument("input")
    _common(p, ablations=False)
    p.add_argument("--no-disambig", action="store_true")

    p = sub.add_parser("verify", help="run the numerical verification suites")
    _common(p, ablations=False)
    p.add_argument("--level", choices=LEVELS, default="fast")
    p.add_argument("--no-disambig", action="store_true")

    p = sub.add_parser("train", help="train a classifier")
    _common(p)
    p.add_argument("--data", required=True, help="dataset directory from gen-data")
    p.add_argument("--max-minutes", type=float)

    p = sub.add_parser("eval", help="evaluate a checkpoint")
    _common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--sweep", action="store_true", help="also run noise and outlier sweeps")

    p = sub.add_parser("bench", help="time the core kernels")
    _common(p, ablations=False)
    p.add_argument("--repeats", type=int, default=21)
    p.add_argument("--sizes", default=",".join(map(str, DEFAULT_SIZES)))
    return ap


def _values(args, base: dict | None = None) -> dict:
    values = dict(base or {})
    if args.config:
        values.update(parse_config_text(Path(args.config).read_text()))
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        values[k.strip()] = v.strip()
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("--seed must be non-negative")
        values["seed"] = args.seed
    for flag, (key, val) in ABLATION_FLAGS.items():
        if getattr(args, flag[2:].replace("-", "_"), False):
            values[key] = val
    if getattr(args, "offset_norm", None):
        values["offset_norm"] = args.offset_norm
    if getattr(args, "protocol", None):
        values["protocol"] = args.protocol
    return values


def _out_dir(args, default: str) -> Path:
    out = Path(args.out or default)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_gen_data(args) -> int:
    values = _values(args)
    if args.seed is not None:
        values["data_seed"] = args.seed
    cfg = make_config(values)
    out = _out_dir(args, "data")
    counts = gen_data(cfg, out)
    report = new_report("gen-data", cfg.to_dict(), cfg.config_hash())
    report["counts"] = counts
    write_report(report, out / "gen_data_report.json")
    print(json.dumps(counts))
    return EXIT_OK


def cmd_extract(args) -> int:
    cfg = make_config(_values(args))
    pc = read_cloud(args.input)
    rng = np.random.default_rng(cfg.seed)
    desc = compute_descriptors(pc, cfg.k_lrf, not args.no_disambig, not args.no_disambig, cfg.strategy, rng)
    out = Path(args.out) if args.out else Path(args.input).with_suffix(".rids")
    if out.is_dir():
        out = out / (Path(args.input).stem + ".rids")
    out.write_bytes(encode_rids(desc))
    print(f"wrote {out} (N={desc.n}, k={desc.k})")
    return EXIT_OK


def cmd_verify(args) -> int:
    values = _values(args)
    cfg = make_config(values)
    results = run_suites(args.level, cfg.seed, disambiguate=not args.no_disambig, echo=print)
    report = new_report("verify", cfg.to_dict(), cfg.config_hash())
    report["level"] = args.level
    report["disambiguate"] = not args.no_disambig
    report["suites"] = [r.to_json() for r in results]
    if args.out:
        write_report(report, _out_dir(args, ".") / "verify_report.json")
    raise_on_failure(results)
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = make_config(_values(args))
    train_clouds = load_split(args.data, "train")
    test_clouds = load_split(args.data, "test")
    out = _out_dir(args, "run")
    max_s = args.max_minutes * 60 if args.max_minutes else None
    _, report = train(cfg, train_clouds, test_clouds, out, max_seconds=max_s)
    print(json.dumps({"best": report["best"], "checkpoint": report["checkpoint"]}))
    return EXIT_OK


def cmd_eval(args) -> int:
    header, _ = read_checkpoint_header(Path(args.checkpoint).read_bytes())
    stored = {k: v for k, v in header["config"].items() if k != "n_classes"}
    stored["n_classes"] = header["config"]["n_classes"]
    cfg = make_config(_values(args, base=stored))
    protocols = (args.protocol,) if args.protocol else PROTOCOLS
    test_clouds = load_split(args.data, "test")
    params, extra = load_for_eval(args.checkpoint, cfg)
    out = _out_dir(args, "eval")
    report = evaluate(params, cfg, test_clouds, protocols, sweeps=args.sweep, out_dir=out)
    print(json.dumps({"accuracy": report["accuracy"], "checkpoint_epoch": extra.get("epoch")}))
    return EXIT_OK


def cmd_bench(args) -> int:
    cfg = make_config(_values(args))
    try:
        sizes = tuple(int(s) for s in args.sizes.split(","))
    except ValueError:
        raise ConfigError(f"bad --sizes {args.sizes!r}") from None
    report = run_bench(cfg, sizes, args.repeats)
    for r in report["results"]:
        print(f"{r['kernel']:<12} N={r['n_points']:<5} mean {1e3 * r['seconds_mean']:9.3f} ms  min {1e3 * r['seconds_min']:9.3f} ms")
    out = _out_dir(args, "bench")
    write_report(report, out / "bench_report.json")
    return EXIT_OK


COMMANDS = {
    "gen-data": cmd_gen_data,
    "extract": cmd_extract,
    "verify": cmd_verify,
    "train": cmd_train,
    "eval": cmd_eval,
    "bench": cmd_bench,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    if not args.command:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        with threadpool_limits(1):
            return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"riframe: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except VerificationFailed as exc:
        print(f"riframe: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except (RIFrameError, OSError, ValueError) as exc:
        print(f"riframe: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
