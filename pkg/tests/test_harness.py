import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from riframe.cli import main
from riframe.cloudio import write_cloud
from riframe.descriptors import compute_descriptors, decode_rids
from riframe.errors import ConfigError, DatasetMissing
from riframe.harness.bench import compare_bench, run_bench
from riframe.harness.config import make_config, parse_config_text, sweep_floats
from riframe.harness.data import gen_data, load_split, make_clouds
from riframe.harness.protocols import seed_for
from riframe.harness.verify import generic_cloud, run_suites

TINY = {
    "n_classes": 2,
    "n_train_per_class": 2,
    "n_test_per_class": 2,
    "n_points": 128,
    "k_lrf": 16,
    "n1": 32,
    "n2": 8,
    "k1": 8,
    "k2": 4,
    "c1": 8,
    "c2": 16,
    "d_attn": 4,
    "proj_dim": 4,
    "head_hidden": 8,
    "epochs": 1,
    "batch_train": 4,
    "batch_eval": 4,
    "train_views": 1,
    "eval_every": 1,
    "noise_sigmas": "0,0.02",
    "outlier_counts": "0,8",
}


def _tiny_config_file(tmp_path):
    path = tmp_path / "tiny.cfg"
    path.write_text("# tiny run\n" + "".join(f"{k} = {v}\n" for k, v in TINY.items()))
    return path


class TestConfig:
    def test_parse_and_types(self):
        vals = parse_config_text("epochs = 3  # comment\n\nlr=0.5\naugment = false\n")
        cfg = make_config(vals)
        assert cfg.epochs == 3 and cfg.lr == 0.5 and cfg.augment is False

    def test_unknown_key(self):
        with pytest.raises(ConfigError):
            parse_config_text("epocs = 3\n")
        with pytest.raises(ConfigError):
            make_config({"bogus": 1})

    def test_bad_value(self):
        with pytest.raises(ConfigError):
            make_config({"epochs": "many"})

    def test_sweep_floats(self):
        assert sweep_floats("0, 0.01,0.02") == [0.0, 0.01, 0.02]
        with pytest.raises(ConfigError):
            sweep_floats("0,x")

    def test_hash_tracks_values(self):
        assert make_config().config_hash() == make_config().config_hash()
        assert make_config().config_hash() != make_config(lr=0.02).config_hash()

    def test_seed_streams_distinct(self):
        assert seed_for(1, 2) != seed_for(2, 1) and seed_for(1, 2) == seed_for(1, 2)


class TestData:
    def test_gen_data_counts_and_determinism(self, tmp_path):
        cfg = make_config(TINY)
        counts = gen_data(cfg, tmp_path / "a")
        gen_data(cfg, tmp_path / "b")
        assert counts == {"train": 4, "test": 4}
        for f in sorted((tmp_path / "a").rglob("*.ripc")):
            assert f.read_bytes() == (tmp_path / "b" / f.relative_to(tmp_path / "a")).read_bytes()
        clouds = load_split(tmp_path / "a", "train")
        assert sorted(pc.label for pc in clouds) == [0, 0, 1, 1]

    def test_train_and_test_differ(self):
        cfg = make_config(TINY)
        tr, te = make_clouds(cfg, "train"), make_clouds(cfg, "test")
        assert not any(np.array_equal(a.points, b.points) for a in tr for b in te)

    def test_missing_dataset(self, tmp_path):
        with pytest.raises(DatasetMissing):
            load_split(tmp_path, "train")


class TestCli:
    def test_no_arguments_is_usage_error(self):
        assert main([]) == 1

    def test_bad_option(self):
        assert main(["verify", "--level", "sometimes"]) == 1

    def test_unknown_config_key(self, tmp_path):
        assert main(["gen-data", "--out", str(tmp_path), "--set", "nonsense=1"]) == 1

    def test_missing_data_is_runtime_error(self, tmp_path):
        assert main(["train", "--data", str(tmp_path / "none"), "--out", str(tmp_path / "o")]) == 3

    def test_console_script(self):
        r = subprocess.run([sys.executable, "-m", "riframe.cli"], capture_output=True, text=True)
        assert r.returncode == 1

    def test_extract_byte_identical(self, tmp_path):
        pc = generic_cloud(4, 256)
        write_cloud(pc, tmp_path / "c.ripc")
        assert main(["extract", str(tmp_path / "c.ripc"), "--out", str(tmp_path / "a.rids")]) == 0
        assert main(["extract", str(tmp_path / "c.ripc"), "--out", str(tmp_path / "b.rids")]) == 0
        a = (tmp_path / "a.rids").read_bytes()
        assert a == (tmp_path / "b.rids").read_bytes()
        loc, glo = decode_rids(a)
        assert loc.shape == (256, 32, 3) and glo.shape == (256, 3)

    def test_extract_matches_library(self, tmp_path):
        pc = generic_cloud(4, 256)
        write_cloud(pc, tmp_path / "c.xyz")
        main(["extract", str(tmp_path / "c.xyz"), "--out", str(tmp_path / "c.rids"), "--set", "k_lrf=16"])
        loc, _ = decode_rids((tmp_path / "c.rids").read_bytes())
        want = compute_descriptors(type(pc)(np.loadtxt(tmp_path / "c.xyz")), 16).local
        np.testing.assert_allclose(loc, want, atol=1e-6)

    def test_end_to_end(self, tmp_path):
        cfg = _tiny_config_file(tmp_path)
        data, run, ev = tmp_path / "data", tmp_path / "run", tmp_path / "eval"
        assert main(["gen-data", "--config", str(cfg), "--out", str(data)]) == 0
        assert main(["train", "--config", str(cfg), "--data", str(data), "--out", str(run)]) == 0
        rep = json.loads((run / "train_report.json").read_text())
        assert rep["schema"] == "riframe.report/1" and len(rep["epochs"]) == 1
        assert main(["eval", "--config", str(cfg), "--data", str(data), "--checkpoint", str(run / "best.rimw"), "--out", str(ev), "--sweep"]) == 0
        rep = json.loads((ev / "eval_report.json").read_text())
        assert set(rep["accuracy"]) == {"zz", "zso3", "so3so3"}
        assert {"delta_zz_zso3_pp", "delta_zso3_so3so3_pp", "invariance_residual"} <= set(rep)
        with open(ev / "robustness.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 4 and all(r["schema"] == "riframe.sweep/1" for r in rows)

    def test_eval_rejects_mismatched_checkpoint(self, tmp_path):
        cfg = _tiny_config_file(tmp_path)
        data, run = tmp_path / "data", tmp_path / "run"
        main(["gen-data", "--config", str(cfg), "--out", str(data)])
        main(["train", "--config", str(cfg), "--data", str(data), "--out", str(run)])
        code = main(["eval", "--data", str(data), "--checkpoint", str(run / "best.rimw"), "--set", "c1=12", "--out", str(tmp_path / "e")])
        assert code == 3


class TestVerify:
    def test_fast_suites_pass(self):
        results = run_suites("fast", suites=("equivariance", "angles", "gradients"))
        assert all(r.passed for r in results), [r.line() for r in results]

    def test_no_disambiguation_fails_with_exit_2(self, tmp_path):
        code = main(["verify", "--level", "fast", "--no-disambig", "--out", str(tmp_path)])
        assert code == 2
        rep = json.loads((tmp_path / "verify_report.json").read_text())
        inv = next(s for s in rep["suites"] if s["name"] == "invariance")
        assert not inv["passed"]


class TestBench:
    def test_small_bench(self):
        rep = run_bench(make_config(TINY), sizes=(128, 256), repeats=1, k=16)
        kernels = {r["kernel"] for r in rep["results"]}
        assert {"lrf", "grf", "fps", "knn", "ait_forward"} <= kernels
        assert all(r["seconds_min"] > 0 for r in rep["results"])
        assert set(compare_bench(rep, rep).values()) == {0.0}
