"""
End-to-end tests of the command line through click's CliRunner.
"""

import json
import os

import numpy as np
import pandas as pd
import pytest
from click.testing import CliRunner

from src.errors import EmbeddingError
from src.grid import CategoricalGrid, proportions, read_grid_file, write_grid_file
from src.main import cli, parse_floats
from src.manifest import RunManifest
from src.shape import rasterize_disk
from src.utils import load_json, load_yaml

QUICK_CONFIG = {
    "validity_search": {
        "max_points": 4,
        "random_configurations": 20,
        "excursion_max_points": 5,
        "excursion_random_configurations": 10,
    },
    "threads": 2,
}


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def quick_config(isolated_config):
    path = isolated_config / "config.json"
    path.write_text(json.dumps(QUICK_CONFIG))
    return str(path)


def invoke(runner, *args):
    return runner.invoke(cli, [str(a) for a in args], catch_exceptions=False)


def read_lines(path):
    with open(path, encoding="utf-8") as f:
        return f.read().splitlines()


class TestScan:
    """scan subcommand."""

    def test_two_by_two_east(self, runner, isolated_config, two_by_two_path):
        out = isolated_config / "east.csv"
        result = invoke(runner, "-o", out, "scan", two_by_two_path, "--lag", 0, 1, "--maxlag", 1)
        assert result.exit_code == 0, result.output
        assert read_lines(out) == [
            "tail,head,drow,dcol,distance,value,npairs",
            "1,1,0,1,1.0,0.5,2",
            "1,2,0,1,1.0,0.5,2",
            "2,1,0,1,1.0,,0",
            "2,2,0,1,1.0,,0",
        ]
        manifest = RunManifest.read(RunManifest.path_for(str(out)))
        assert manifest.subcommand == "scan"
        assert manifest.inputs == [two_by_two_path]
        assert manifest.outputs == [str(out)]
        assert manifest.parameters["maxlag"] == 1

    def test_zero_lag_is_identity(self, runner, isolated_config, two_by_two_path):
        out = isolated_config / "zero.csv"
        result = invoke(runner, "-o", out, "scan", two_by_two_path, "--lag", 0, 0)
        assert result.exit_code == 0, result.output
        assert read_lines(out)[1:] == [
            "1,1,0,0,0.0,1.0,3",
            "1,2,0,0,0.0,0.0,3",
            "2,1,0,0,0.0,0.0,1",
            "2,2,0,0,0.0,1.0,1",
        ]

    def test_reverse_direction(self, runner, isolated_config, two_by_two_path):
        out = isolated_config / "west.csv"
        result = invoke(runner, "-o", out, "scan", two_by_two_path, "--lag", 0, 1, "--maxlag", 1, "--reverse")
        assert result.exit_code == 0, result.output
        assert read_lines(out)[1] == "1,1,0,-1,1.0,1.0,1"

    def test_omnidirectional_bins(self, runner, isolated_config, two_by_two_path):
        out = isolated_config / "omni.csv"
        result = invoke(runner, "-o", out, "scan", two_by_two_path, "--omni", "0.5,1.2")
        assert result.exit_code == 0, result.output
        frame = pd.read_csv(out)
        assert frame["drow"].isna().all()
        assert frame.loc[(frame["tail"] == 1) & (frame["head"] == 1), "npairs"].tolist() == [6]

    def test_default_output_location(self, runner, isolated_config, two_by_two_path):
        result = invoke(runner, "scan", two_by_two_path, "--maxlag", 1)
        assert result.exit_code == 0, result.output
        assert os.path.exists(isolated_config / "output" / "scan.csv")
        assert os.path.exists(isolated_config / "output" / "scan.csv.manifest.json")

    def test_missing_file(self, runner, isolated_config):
        result = runner.invoke(cli, ["scan", "absent.grid"])
        assert result.exit_code == 2

    def test_malformed_grid(self, runner, isolated_config):
        path = isolated_config / "bad.grid"
        path.write_text("nrows 2\nncols 2\ncellsize 1.0\nnclasses 2\n1 2\n1 9\n")
        result = runner.invoke(cli, ["scan", str(path)])
        assert result.exit_code == 2
        assert not os.path.exists(isolated_config / "output" / "scan.csv")

    def test_lag_and_omni_are_exclusive(self, runner, isolated_config, two_by_two_path):
        result = runner.invoke(cli, ["scan", two_by_two_path, "--lag", "0", "1", "--omni", "0.5,1.2"])
        assert result.exit_code == 2


class TestFit:
    """fit subcommand."""

    @pytest.fixture
    def curve_csv(self, runner, isolated_config):
        rng = np.random.default_rng(8)
        grid = CategoricalGrid.from_array(rng.integers(1, 3, size=(12, 12)), nclasses=2)
        grid_path = isolated_config / "random.grid"
        write_grid_file(grid, str(grid_path))
        out = isolated_config / "curve.csv"
        result = invoke(runner, "-o", out, "scan", grid_path, "--lag", 0, 1, "--maxlag", 5)
        assert result.exit_code == 0, result.output
        return out

    def test_gaussian_fit(self, runner, isolated_config, curve_csv):
        out = isolated_config / "fit.csv"
        result = invoke(runner, "-o", out, "fit", curve_csv, "--kernel", "gaussian", "--bandwidth", 1.0,
                        "--hgrid", "0:2:0.5")
        assert result.exit_code == 0, result.output
        frame = pd.read_csv(out)
        fitted = frame[frame["fitted"] == 1]
        assert sorted(fitted["distance"].unique().tolist()) == [0.0, 0.5, 1.0, 1.5, 2.0]
        sums = fitted.groupby(["distance", "tail"])["value"].sum()
        assert np.allclose(sums.to_numpy(), 1.0, atol=1e-12)
        origin = fitted[fitted["distance"] == 0.0]["value"].tolist()
        assert origin == [1.0, 0.0, 0.0, 1.0]
        assert "Nugget" in result.output

    def test_small_compact_kernel_reproduces_knots(self, runner, isolated_config, curve_csv):
        out = isolated_config / "knots.csv"
        result = invoke(runner, "-o", out, "fit", curve_csv, "--kernel", "triangular", "--bandwidth", 0.5,
                        "--hgrid", "1,2,3,4,5")
        assert result.exit_code == 0, result.output
        frame = pd.read_csv(out)
        knots = frame[frame["fitted"] == 0].set_index(["tail", "head", "distance"])["value"]
        fitted = frame[frame["fitted"] == 1].set_index(["tail", "head", "distance"])["value"]
        assert np.allclose(fitted.sort_index().to_numpy(), knots.sort_index().to_numpy(), atol=1e-15)

    def test_lscv(self, runner, isolated_config, curve_csv):
        out = isolated_config / "lscv.csv"
        result = invoke(runner, "-o", out, "fit", curve_csv, "--lscv", "--candidates", "0.5,1,2,4")
        assert result.exit_code == 0, result.output
        manifest = load_json(f"{out}.manifest.json")
        assert manifest["parameters"]["bandwidth"] in (0.5, 1.0, 2.0, 4.0)
        assert manifest["parameters"]["lscv"] is True
        assert manifest["parameters"]["selector"] == "lscv"

    def test_likelihood_selector(self, runner, isolated_config, curve_csv):
        out = isolated_config / "likelihood.csv"
        result = invoke(runner, "-o", out, "fit", curve_csv, "--selector", "likelihood",
                        "--candidates", "0.5,1,2,4")
        assert result.exit_code == 0, result.output
        manifest = load_json(f"{out}.manifest.json")
        assert manifest["parameters"]["selector"] == "likelihood"
        assert manifest["parameters"]["lscv"] is False
        assert manifest["parameters"]["bandwidth"] in (0.5, 1.0, 2.0, 4.0)

    def test_rule_of_thumb_selector(self, runner, isolated_config, curve_csv):
        out = isolated_config / "thumb.csv"
        result = invoke(runner, "-o", out, "fit", curve_csv, "--kernel", "epanechnikov",
                        "--selector", "rule-of-thumb", "--hgrid", "1:5:0.25")
        assert result.exit_code == 0, result.output
        manifest = load_json(f"{out}.manifest.json")
        assert manifest["parameters"]["selector"] == "rule-of-thumb"
        assert manifest["parameters"]["candidates"] is None
        assert manifest["parameters"]["bandwidth"] >= 1.0
        fitted = pd.read_csv(out)
        fitted = fitted[fitted["fitted"] == 1]
        assert fitted["value"].notna().all()

    def test_selector_conflicts(self, runner, isolated_config, curve_csv):
        path = str(curve_csv)
        assert runner.invoke(cli, ["fit", path, "--bandwidth", "1", "--selector", "likelihood"]).exit_code == 2
        assert runner.invoke(cli, ["fit", path, "--lscv", "--selector", "rule-of-thumb"]).exit_code == 2
        assert runner.invoke(cli, ["fit", path, "--selector", "rule-of-thumb", "--candidates", "1,2"]).exit_code == 2

    def test_zero_bandwidth(self, runner, isolated_config, curve_csv):
        result = runner.invoke(cli, ["fit", str(curve_csv), "--kernel", "epanechnikov", "--bandwidth", "0"])
        assert result.exit_code == 2

    def test_bandwidth_or_lscv_required(self, runner, isolated_config, curve_csv):
        assert runner.invoke(cli, ["fit", str(curve_csv)]).exit_code == 2
        assert runner.invoke(cli, ["fit", str(curve_csv), "--bandwidth", "1", "--lscv"]).exit_code == 2

    def test_unit_sum_violation(self, runner, isolated_config):
        path = isolated_config / "corrupt.csv"
        path.write_text("tail,head,drow,dcol,distance,value,npairs\n1,1,0,1,1.0,0.5,2\n1,2,0,1,1.0,0.6,2\n")
        result = runner.invoke(cli, ["fit", str(path), "--bandwidth", "1"])
        assert result.exit_code == 2


class TestValidate:
    """validate subcommand."""

    def test_verdict_table(self, runner, quick_config, isolated_config, verdict_table_path):
        out = isolated_config / "validity.json"
        report = isolated_config / "validity.md"
        result = invoke(runner, "--config", quick_config, "-o", out, "validate", verdict_table_path,
                        "--report", report)
        assert result.exit_code == 0, result.output
        data = load_json(out)
        verdicts = {r["label"]: r["passed"] for r in data["reports"]}
        assert verdicts["exponential"] is True
        assert verdicts["gaussian"] is False
        assert verdicts["triangular"] is False
        assert verdicts["circular"] is False
        gaussian = next(r for r in data["reports"] if r["label"] == "gaussian")
        triangle = next(c for c in gaussian["checks"] if c["name"] == "triangle")
        assert triangle["verdict"] == "fail"
        assert triangle["witness"]["h"] == pytest.approx(0.2)
        assert data["parameters"]["max_points"] == 4

        text = report.read_text(encoding="utf-8")
        assert "| gaussian |" in text
        assert "## gaussian" in text
        assert "## exponential" not in text

        manifest = RunManifest.read(f"{out}.manifest.json")
        assert manifest.outputs == [str(out), str(report)]
        assert manifest.parameters["threads"] == 2

    def test_strict_failure(self, runner, quick_config, isolated_config):
        path = isolated_config / "gaussian.json"
        path.write_text(json.dumps({"family": "gaussian", "range": 1.0, "proportion": 0.5}))
        result = runner.invoke(cli, ["--config", quick_config, "validate", str(path), "--strict"])
        assert result.exit_code == 1

    def test_strict_pass(self, runner, quick_config, isolated_config):
        path = isolated_config / "exponential.json"
        path.write_text(json.dumps({"family": "exponential", "range": 1.0, "proportion": 0.5}))
        result = runner.invoke(cli, ["--config", quick_config, "validate", str(path), "--strict"])
        assert result.exit_code == 0, result.output

    def test_malformed_model_config(self, runner, quick_config, isolated_config):
        path = isolated_config / "broken.yaml"
        path.write_text("models:\n  - family: hole-effect\n    range: 1.0\n    proportion: 0.5\n")
        result = runner.invoke(cli, ["--config", quick_config, "validate", str(path)])
        assert result.exit_code == 2

    def test_missing_config_file(self, runner, isolated_config, verdict_table_path):
        result = runner.invoke(cli, ["--config", "nowhere.json", "validate", verdict_table_path])
        assert result.exit_code == 2


class TestShape:
    """shape subcommand."""

    def test_disk(self, runner, isolated_config):
        grid_path = isolated_config / "disk.grid"
        write_grid_file(rasterize_disk(64, 0.25), str(grid_path))
        out = isolated_config / "shape.csv"
        result = invoke(runner, "-o", out, "shape", grid_path, "--class", 1)
        assert result.exit_code == 0, result.output
        frame = pd.read_csv(out)
        assert frame["kind"].tolist() == ["rate"] * 4 + ["directional", "raster-oracle"]
        psi = frame.set_index("kind")["psi"]
        assert psi["directional"] == pytest.approx(8.0, rel=0.15)
        assert psi["raster-oracle"] > psi["directional"]

    def test_single_direction_is_isotropic(self, runner, isolated_config):
        grid_path = isolated_config / "disk.grid"
        write_grid_file(rasterize_disk(64, 0.25), str(grid_path))
        out = isolated_config / "iso.csv"
        result = invoke(runner, "-o", out, "shape", grid_path, "--class", 1, "--direction", 0, 1, "--nlags", 2)
        assert result.exit_code == 0, result.output
        frame = pd.read_csv(out)
        assert frame["kind"].tolist() == ["rate", "isotropic", "raster-oracle"]
        assert frame.loc[0, "nlags"] == 2

    def test_single_class_map(self, runner, isolated_config):
        grid_path = isolated_config / "flat.grid"
        write_grid_file(CategoricalGrid.from_array(np.ones((6, 6), dtype=int), nclasses=2), str(grid_path))
        out = isolated_config / "flat.csv"
        result = invoke(runner, "-o", out, "shape", grid_path, "--class", 1)
        assert result.exit_code == 0, result.output
        psi = pd.read_csv(out).set_index("kind")["psi"]
        assert psi["directional"] == 0.0
        assert psi["raster-oracle"] == 0.0

    @pytest.mark.parametrize("classlabel", ["2", "3"])
    def test_absent_or_unknown_class(self, runner, isolated_config, classlabel):
        grid_path = isolated_config / "flat.grid"
        write_grid_file(CategoricalGrid.from_array(np.ones((4, 4), dtype=int), nclasses=2), str(grid_path))
        result = runner.invoke(cli, ["shape", str(grid_path), "--class", classlabel])
        assert result.exit_code == 2


class TestSimulate:
    """simulate subcommand."""

    ARGS = ("simulate", "--rows", 16, "--cols", 20, "--range", 3, "--cutoffs", "-0.5,0.5")

    def test_same_seed_same_grid(self, runner, isolated_config):
        first, second = isolated_config / "a.grid", isolated_config / "b.grid"
        assert invoke(runner, "--seed", 5, "-o", first, *self.ARGS).exit_code == 0
        assert invoke(runner, "--seed", 5, "-o", second, *self.ARGS).exit_code == 0
        assert first.read_text() == second.read_text()
        grid = read_grid_file(str(first))
        assert (grid.nrows, grid.ncols, grid.nclasses) == (16, 20, 3)

    def test_sidecar_and_manifest(self, runner, isolated_config):
        out = isolated_config / "sim.grid"
        result = invoke(runner, "--seed", 5, "-o", out, *self.ARGS)
        assert result.exit_code == 0, result.output
        sidecar = load_yaml(str(isolated_config / "sim.meta.yaml"))
        assert sidecar["seed"] == 5
        assert sidecar["cutoffs"] == [-0.5, 0.5]
        assert sidecar["method"] == "dense"
        assert "Simulated categorical grid" in sidecar["summary"]
        manifest = RunManifest.read(f"{out}.manifest.json")
        assert manifest.seed == 5
        assert manifest.outputs == [str(out), str(isolated_config / "sim.meta.yaml")]

    def test_exact_proportions(self, runner, isolated_config):
        out = isolated_config / "exact.grid"
        result = invoke(runner, "-o", out, "simulate", "--rows", 10, "--cols", 10, "--range", 2,
                        "--proportions", "0.3,0.7", "--exact-proportions")
        assert result.exit_code == 0, result.output
        assert load_yaml(str(isolated_config / "exact.meta.yaml"))["realised_proportions"] == [0.3, 0.7]

    def test_target_proportions_within_binomial_bound(self, runner, isolated_config):
        out = isolated_config / "target.grid"
        result = invoke(runner, "-o", out, "simulate", "--rows", 40, "--cols", 40, "--range", 0.5,
                        "--proportions", "0.4,0.6")
        assert result.exit_code == 0, result.output
        realised = proportions(read_grid_file(str(out)))
        sigma = (0.4 * 0.6 / 1600) ** 0.5
        assert abs(realised[0] - 0.4) <= 3 * sigma

    def test_cutoffs_or_proportions(self, runner, isolated_config):
        result = runner.invoke(cli, ["simulate", "--rows", "4", "--cols", "4", "--range", "1"])
        assert result.exit_code == 2
        result = runner.invoke(cli, ["simulate", "--rows", "4", "--cols", "4", "--range", "1",
                                     "--cutoffs", "0", "--proportions", "0.5,0.5"])
        assert result.exit_code == 2

    def test_decreasing_cutoffs(self, runner, isolated_config):
        result = runner.invoke(cli, ["simulate", "--rows", "4", "--cols", "4", "--range", "1",
                                     "--cutoffs", "0.5,0.1"])
        assert result.exit_code == 2

    def test_embedding_failure_exit_code(self, runner, isolated_config, monkeypatch):
        def fail(*args, **kwargs):
            raise EmbeddingError("no non-negative circulant embedding")

        monkeypatch.setattr("src.main.simulate_grf", fail)
        result = runner.invoke(cli, ["simulate", "--rows", "4", "--cols", "4", "--range", "1", "--cutoffs", "0"])
        assert result.exit_code == 3


class TestCheck:
    """check subcommand and global options."""

    def test_check_passes(self, runner, isolated_config):
        result = runner.invoke(cli, ["check"])
        assert result.exit_code == 0, result.output
        assert "Verification Results" in result.output

    def test_check_reports_broken_config(self, runner, isolated_config):
        (isolated_config / "config.json").write_text("{not json")
        result = runner.invoke(cli, ["check"])
        assert result.exit_code == 2

    def test_version(self, runner):
        result = runner.invoke(cli, ["--version"])
        assert result.exit_code == 0
        assert "transiogram" in result.output


class TestParseFloats:
    """Grid-list option parsing."""

    def test_list_and_range(self):
        assert parse_floats("0.5, 1,2", "--x") == [0.5, 1.0, 2.0]
        assert parse_floats("0:1:0.25", "--x") == [0.0, 0.25, 0.5, 0.75, 1.0]
        assert parse_floats(None, "--x") is None

    @pytest.mark.parametrize("text", ["a,b", "1:0:0.1", "0:1:0"])
    def test_bad_values(self, text):
        import click
        with pytest.raises(click.BadParameter):
            parse_floats(text, "--x")
