import csv
import json
import math
import subprocess
import sys

import pytest

from infoloss.cli import GALLERY, main

THREE_SENSOR = {"signal_cov": [[1, 1, 0], [1, 2, 1], [0, 1, 1]], "noise_cov": [[1, 0, 0], [0, 1, 0], [0, 0, 1]]}
UNEQUAL_NOISE = {"signal_cov": [[1, 0, 0], [0, 1, 0], [0, 0, 0]], "noise_cov": [[1, 0, 0], [0, 2, 0], [0, 0, 3]]}


def write_config(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def run(tmp_path, doc, *extra, command="run", out="out"):
    cfg = write_config(tmp_path, doc)
    return main([command, "--config", cfg, "--out", str(tmp_path / out), *extra])


class TestChannelMode:
    def test_sign_quantizer(self, tmp_path):
        assert run(tmp_path, {"channel": {"param": 2.0, "thresholds": [0.0]}}) == 0
        rows = {r["quantity"]: r for r in read_rows(tmp_path / "out" / "report.csv")}
        row = rows["quantizer_relevant_loss"]
        assert float(row["analytic_value"]) == pytest.approx(0.3112781, abs=1e-7)
        assert float(row["grid_estimate"]) == pytest.approx(0.3112781, abs=0.01)
        assert row["converged"] == "true" and row["tolerance"] == "0.001"

    def test_table_rows(self, tmp_path):
        doc = {"channel": {"param": 2.0, "maps": ["magnitude"], "resolution": 256}}
        assert run(tmp_path, doc) == 0
        rows = {r["quantity"]: r for r in read_rows(tmp_path / "out" / "report.csv")}
        assert float(rows["magnitude:N"]["grid_estimate"]) == pytest.approx(1.0, abs=0.01)
        assert rows["magnitude:N"]["analytic_value"] == ""

    def test_gaussian_noise(self, tmp_path):
        assert run(tmp_path, {"channel": {"noise": "gaussian", "param": 1.0, "resolution": 64}}) == 0


class TestPcaMode:
    def test_unequal_noise(self, tmp_path):
        assert run(tmp_path, {"pca": {**UNEQUAL_NOISE, "M": 2}}) == 0
        (row,) = read_rows(tmp_path / "out" / "report.csv")
        assert float(row["loss_nats"]) == pytest.approx(0.3465736, abs=1e-7)
        assert float(row["thm2_bound"]) == pytest.approx(0.5493061, abs=1e-7)
        assert row["thm1_bound"] == ""
        assert row["best_subset"] == "X1;X2"
        manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
        assert manifest["summary"]["eigenvalues"] == pytest.approx([3, 3, 2], abs=1e-10)

    def test_all_m(self, tmp_path):
        assert run(tmp_path, {"pca": THREE_SENSOR}) == 0
        rows = read_rows(tmp_path / "out" / "report.csv")
        assert [r["M"] for r in rows] == ["1", "2"]
        assert abs(float(rows[1]["loss_nats"])) <= 1e-10
        assert rows[0]["thm2_bound"] == ""  # signal rank 2 > M = 1


class TestIbMode:
    joint = {"variables": [{"name": "S", "size": 2}, {"name": "X", "size": 3}], "mass": [0.1, 0.2, 0.05, 0.3, 0.2, 0.15]}

    def test_inline(self, tmp_path):
        assert run(tmp_path, {"ib": {"joint": self.joint, "budget": 0.0}}) == 0
        rows = read_rows(tmp_path / "out" / "report.csv")
        assert [r["cluster_id"] for r in rows] == ["0", "1", "0"]
        trace = read_rows(tmp_path / "out" / "trace.csv")
        assert len(trace) == 1 and float(trace[0]["cumulative"]) <= 1e-12

    def test_joint_path_relative_to_config(self, tmp_path):
        (tmp_path / "joint.json").write_text(json.dumps(self.joint))
        assert run(tmp_path, {"ib": {"joint_path": "joint.json", "budget": "inf"}}) == 0
        assert {r["cluster_id"] for r in read_rows(tmp_path / "out" / "report.csv")} == {"0"}

    def test_missing_joint_file(self, tmp_path):
        assert run(tmp_path, {"ib": {"joint_path": "nope.json", "budget": 0.1}}) == 2

    def test_bad_joint(self, tmp_path):
        bad = {**self.joint, "mass": [0.5, 0.5, 0.5, 0, 0, 0]}
        assert run(tmp_path, {"ib": {"joint": bad, "budget": 0.1}}) == 2


class TestEstimateMode:
    def test_entropy_and_samples(self, tmp_path):
        doc = {"seed": 3, "estimate": {"source": {"family": "gaussian"}, "n": 2000, "x_dims": 1, "dump_samples": True}}
        assert run(tmp_path, doc) == 0
        rows = {r["quantity"]: r for r in read_rows(tmp_path / "out" / "report.csv")}
        assert float(rows["knn_entropy"]["value"]) == pytest.approx(0.5 * math.log(2 * math.pi * math.e), abs=0.1)
        assert rows["knn_entropy"]["seed"] == "3"
        assert len((tmp_path / "out" / "samples.csv").read_text().splitlines()) == 2001

    def test_seed_required(self, tmp_path):
        assert run(tmp_path, {"estimate": {"source": {"family": "gaussian"}, "n": 2000}}) == 2

    def test_seed_flag(self, tmp_path):
        doc = {"estimate": {"source": {"family": "uniform"}, "n": 2000}}
        assert run(tmp_path, doc, "--seed", "18446744073709551615") == 0

    def test_seed_range(self, tmp_path):
        doc = {"estimate": {"source": {"family": "uniform"}, "n": 2000}}
        assert run(tmp_path, doc, "--seed", "-1") == 2

    def test_thm1(self, tmp_path):
        doc = {
            "seed": 5,
            "estimate": {
                "source": {"family": "gaussian", "latent_dim": 2, "params": {"variance": [4.0, 1.0]}},
                "noise": {
                    "family": "gaussian-mixture",
                    "latent_dim": 2,
                    "params": {
                        "weights": [0.25] * 4,
                        "means": [[0.95, 0.95], [0.95, -0.95], [-0.95, 0.95], [-0.95, -0.95]],
                        "variance": 1 - 0.95**2,
                    },
                },
                "model": {"signal_cov": [[4, 0], [0, 1]], "noise_cov": [[1, 0], [0, 1]], "M": 1},
                "n": 4000,
            },
        }
        assert run(tmp_path, doc) == 0
        rows = {r["quantity"]: r["value"] for r in read_rows(tmp_path / "out" / "report.csv")}
        assert rows["satisfied"] == "false"

    def test_singular_is_numerical_failure(self, tmp_path):
        doc = {
            "seed": 1,
            "estimate": {"source": {"family": "gaussian", "mixing": [[1.0], [2.0]]}, "n": 2000, "x_dims": 1},
        }
        assert run(tmp_path, doc) == 3


class TestSelftest:
    def test_passes(self, tmp_path):
        assert run(tmp_path, {"selftest": {"instances": 40}}, command="selftest") == 0
        rows = read_rows(tmp_path / "out" / "report.csv")
        assert rows and all(r["passed"] == "true" for r in rows)


class TestValidation:
    @pytest.mark.parametrize(
        "doc",
        [
            {},
            {"channel": {"param": 2.0}, "pca": THREE_SENSOR},
            {"mode": "pca", "channel": {"param": 2.0}},
            {"unknown": {}},
            {"channel": {"param": 2.0, "resolution": 8}},
            {"channel": {"param": 1.0}},
            {"pca": {**THREE_SENSOR, "M": 3}},
            [1, 2],
        ],
    )
    def test_invalid(self, tmp_path, doc):
        assert run(tmp_path, doc) == 2

    def test_alias_mismatch(self, tmp_path):
        assert run(tmp_path, {"channel": {"param": 2.0}}, command="pca") == 2

    def test_unreadable_config(self, tmp_path):
        assert main(["run", "--config", str(tmp_path / "missing.json"), "--out", str(tmp_path)]) == 2

    def test_not_json(self, tmp_path):
        p = tmp_path / "cfg.json"
        p.write_text("{mode: channel")
        assert main(["run", "--config", str(p), "--out", str(tmp_path)]) == 2

    def test_no_output_dir(self, tmp_path):
        cfg = write_config(tmp_path, {"channel": {"param": 2.0}})
        assert main(["run", "--config", cfg]) == 2

    def test_output_path_from_config(self, tmp_path):
        cfg = write_config(tmp_path, {"channel": {"param": 2.0}, "output_path": str(tmp_path / "o")})
        assert main(["channel", "--config", cfg]) == 0
        assert (tmp_path / "o" / "report.csv").exists()

    def test_unknown_command_exits_2(self):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 2


class TestReproducibility:
    @pytest.mark.parametrize("name", sorted(GALLERY))
    def test_reports_byte_identical(self, tmp_path, name):
        doc = GALLERY[name]
        assert run(tmp_path, doc, out="a") == 0
        assert run(tmp_path, doc, out="b") == 0
        for f in (tmp_path / "a").glob("*.csv"):
            assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()
        ma = json.loads((tmp_path / "a" / "manifest.json").read_text())
        assert {"started_at", "wall_time_s", "versions", "seed", "config"} <= set(ma)

    def test_gallery_and_module_entry(self, tmp_path):
        proc = subprocess.run(
            [sys.executable, "-m", "infoloss", "gallery", "--out", str(tmp_path)], capture_output=True, text=True
        )
        assert proc.returncode == 0, proc.stderr
        assert sorted(p.name for p in tmp_path.iterdir()) == sorted(GALLERY)
