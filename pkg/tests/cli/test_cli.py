import numpy as np
import prefect
import pytest
from typer.testing import CliRunner

import uosdetect
from uosdetect.cli.main import app
from uosdetect.io import read_matrix, read_table, write_matrix
from uosdetect.settings import temporary_settings
from uosdetect.sim import CURVE_COLUMNS

runner = CliRunner()

CONFIG = """
seed = 3
trials = 1000
calibration_trials = 1000

[scenario]
geometry = "reference"

[roc]
target_pfa = [0.1, 0.3]

[angle_sweep]
angles = [0.3, 0.9]

[gap]
snr_db = [5.0, 10.0]

[n0_sweep]
n0 = [8, 30]
"""

BASELINE_CONFIG = """
seed = 4
trials = 1000

[scenario]
geometry = "random"
ambient_dim = 8
subspace_dim = 2
n_subspaces = 3
snr_db = 5.0

[baseline]
target_pfa = [0.1, 0.2]
"""


@pytest.fixture
def config(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text(CONFIG)
    return path


@pytest.fixture
def out(tmp_path):
    return tmp_path / "out"


def invoke(out, *args):
    return runner.invoke(app, ["--output-dir", str(out), *map(str, args)])


def _gamma(out) -> float:
    return float(read_table(out / "calibration.csv")[0]["gamma_bar"])


def test_version():
    result = runner.invoke(app, ["version"])
    assert result.exit_code == 0
    assert f"uosdetect version: {uosdetect.__version__}" in result.stdout
    assert f"Prefect version: {prefect.__version__}" in result.stdout


class TestCalibrate:
    def test_writes_threshold(self, config, out):
        result = invoke(out, "calibrate", "--config", config, "--target-pfa", 0.1)
        assert result.exit_code == 0, result.output
        assert "gamma_bar = " in result.stdout
        (row,) = read_table(out / "calibration.csv")
        assert row["target_pfa"] == "0.1"
        assert row["calibration_trials"] == "1000"
        assert row["seed"] == "3"
        assert float(row["gamma_bar"]) > 0

    def test_is_reproducible(self, config, out, tmp_path):
        invoke(out, "calibrate", "--config", config)
        again = tmp_path / "again"
        invoke(again, "calibrate", "--config", config)
        assert _gamma(out) == _gamma(again)
        other = tmp_path / "other"
        invoke(other, "--seed", 99, "calibrate", "--config", config)
        assert read_table(other / "calibration.csv")[0]["seed"] == "99"
        assert _gamma(other) != _gamma(out)

    def test_seed_precedence(self, config, tmp_path):
        with temporary_settings(seed=42):
            invoke(tmp_path / "env", "calibrate", "--config", config)
            invoke(tmp_path / "flag", "--seed", 7, "calibrate", "--config", config)
        assert read_table(tmp_path / "env" / "calibration.csv")[0]["seed"] == "42"
        assert read_table(tmp_path / "flag" / "calibration.csv")[0]["seed"] == "7"

    @pytest.mark.parametrize("target", [0, 1.5])
    def test_rejects_target(self, config, out, target):
        result = invoke(out, "calibrate", "--config", config, "--target-pfa", target)
        assert result.exit_code == 2

    def test_too_few_trials_is_numeric(self, config, out):
        result = invoke(out, "calibrate", "--config", config, "--target-pfa", 0.001)
        assert result.exit_code == 3

    def test_missing_config(self, tmp_path, out):
        result = invoke(out, "calibrate", "--config", tmp_path / "missing.toml")
        assert result.exit_code == 2

    @pytest.mark.parametrize(
        "text", ["seed = ", "unknown_key = 1", "[scenario]\nregime = 'sideways'"]
    )
    def test_bad_config(self, tmp_path, out, text):
        path = tmp_path / "bad.toml"
        path.write_text(text)
        result = invoke(out, "calibrate", "--config", path)
        assert result.exit_code == 2

    def test_unwritable_output_dir(self, config, tmp_path):
        blocker = tmp_path / "file.txt"
        blocker.write_text("")
        result = invoke(blocker / "sub", "calibrate", "--config", config)
        assert result.exit_code == 2


def test_roc(config, out):
    result = invoke(out, "roc", "--config", config)
    assert result.exit_code == 0, result.output
    rows = read_table(out / "roc.csv")
    assert list(rows[0]) == list(CURVE_COLUMNS)
    assert [r["target_pfa"] for r in rows] == ["0.1", "0.3"]
    assert (out / "roc.svg").exists()


def test_no_plots(config, out):
    result = invoke(out, "--no-plots", "roc", "--config", config)
    assert result.exit_code == 0, result.output
    assert (out / "roc.csv").exists()
    assert not (out / "roc.svg").exists()


def test_workers_do_not_change_results(config, tmp_path):
    with temporary_settings(chunk_size=250):
        invoke(tmp_path / "serial", "--no-plots", "roc", "--config", config)
        invoke(tmp_path / "parallel", "--no-plots", "--workers", 3, "roc", "--config", config)
    assert (tmp_path / "serial" / "roc.csv").read_bytes() == (
        tmp_path / "parallel" / "roc.csv"
    ).read_bytes()


def test_compare_regimes(config, out):
    result = invoke(out, "compare-regimes", "--config", config)
    assert result.exit_code == 0, result.output
    for name in ("known", "unknown_covariance", "unknown_statistics"):
        assert len(read_table(out / f"roc_{name}.csv")) == 2
    assert (out / "roc_regimes.svg").exists()


def test_angle_sweep(config, out):
    result = invoke(out, "angle-sweep", "--config", config)
    assert result.exit_code == 0, result.output
    rows = read_table(out / "angle_sweep.csv")
    assert len(rows) == 2
    assert rows[0]["requested_angle_1"] == "0.3"
    assert {"whitened_angle_min", "duplicate_flag", "pc_3", "pd_3"} <= set(rows[0])
    assert float(rows[1]["whitened_angle_min"]) == pytest.approx(0.9, abs=1e-8)


def test_noise_geometry(config, out):
    result = invoke(out, "noise-geometry", "--config", config)
    assert result.exit_code == 0, result.output
    rows = read_table(out / "noise_geometry.csv")
    assert [r["subspace"] for r in rows] == ["1", "2", "3"]


def test_gap(config, out):
    result = invoke(out, "gap", "--config", config)
    assert result.exit_code == 0, result.output
    rows = read_table(out / "gap.csv")
    assert len(rows) == 4
    assert all(float(r["gap"]) >= 0 for r in rows)


def test_n0_sweep(config, out):
    result = invoke(out, "n0-sweep", "--config", config, "--n0", "8,40")
    assert result.exit_code == 0, result.output
    rows = read_table(out / "n0_sweep.csv")
    assert sorted({r["n0"] for r in rows}) == ["40", "8"]
    assert "N0 = 40" in result.stdout


def test_n0_sweep_rejects_malformed_list(config, out):
    result = invoke(out, "n0-sweep", "--config", config, "--n0", "8,x")
    assert result.exit_code == 2


def test_geometry(config, out):
    result = invoke(out, "geometry", "--config", config)
    assert result.exit_code == 0, result.output
    rows = read_table(out / "geometry.csv")
    assert [(r["i"], r["j"]) for r in rows] == [("1", "2"), ("1", "3"), ("2", "3")]
    assert float(rows[0]["min_angle"]) == pytest.approx(0.6, abs=1e-8)
    assert float(rows[0]["whitened_min_angle"]) == pytest.approx(0.6, abs=1e-8)


def test_bounds(config, out):
    result = invoke(out, "bounds", "--config", config)
    assert result.exit_code == 0, result.output
    (row,) = read_table(out / "bounds.csv")
    assert row["regime"] == "known"
    assert "pc_lower_bessel_p95_3" in row
    assert float(row["pd_lower"]) <= float(row["pd_upper"])
    assert "P_FA <=" in result.stdout


class TestBaseline:
    def test_direct_sum(self, tmp_path, out):
        path = tmp_path / "baseline.toml"
        path.write_text(BASELINE_CONFIG)
        result = invoke(out, "baseline", "--config", path)
        assert result.exit_code == 0, result.output
        rows = read_table(out / "baseline.csv")
        assert len(rows) == 2
        for r in rows:
            assert float(r["sum_pfa"]) >= float(r["uos_pfa"])

    def test_direct_sum_needs_room(self, config, out):
        result = invoke(out, "baseline", "--config", config)
        assert result.exit_code == 3


def _labelled_samples(tmp_path, rng):
    eye = np.eye(5)
    first = eye[:, :2] @ rng.standard_normal((2, 30))
    second = eye[:, 2:4] @ rng.standard_normal((2, 30))
    write_matrix(tmp_path / "data.csv", np.hstack([first, second]))
    (tmp_path / "labels.csv").write_text("\n".join(["1"] * 30 + ["2"] * 30) + "\n")
    return tmp_path / "data.csv", tmp_path / "labels.csv"


class TestLearnAndDetect:
    def test_learn_bases(self, tmp_path, out, rng):
        data, labels = _labelled_samples(tmp_path, rng)
        result = invoke(out, "learn-bases", data, labels, "--dim", 2)
        assert result.exit_code == 0, result.output
        first = read_matrix(out / "basis_1.csv")
        assert first.shape == (5, 2)
        assert np.allclose(first @ first.T, np.diag([1.0, 1.0, 0.0, 0.0, 0.0]), atol=1e-10)

    def test_learn_bases_rank_deficient_class(self, tmp_path, out, rng):
        data, labels = _labelled_samples(tmp_path, rng)
        result = invoke(out, "learn-bases", data, labels, "--dim", 3)
        assert result.exit_code == 3

    def test_learn_bases_label_count(self, tmp_path, out, rng):
        data, labels = _labelled_samples(tmp_path, rng)
        labels.write_text("1\n2\n")
        result = invoke(out, "learn-bases", data, labels, "--dim", 2)
        assert result.exit_code == 2

    def test_learn_bases_empty_labels(self, tmp_path, out, rng):
        data, labels = _labelled_samples(tmp_path, rng)
        labels.write_text("")
        result = invoke(out, "learn-bases", data, labels, "--dim", 2)
        assert result.exit_code == 2

    @pytest.fixture
    def bases_dir(self, tmp_path, rng):
        data, labels = _labelled_samples(tmp_path, rng)
        bases = tmp_path / "bases"
        invoke(bases, "learn-bases", data, labels, "--dim", 2)
        return bases

    def test_detect_batch_known(self, tmp_path, out, bases_dir):
        observations = np.zeros((5, 3))
        observations[1, 0] = 5.0
        observations[3, 1] = 5.0
        observations[0, 2] = 0.1
        write_matrix(tmp_path / "y.csv", observations)
        result = invoke(
            out, "detect-batch", "--bases-dir", bases_dir, "--data", tmp_path / "y.csv",
            "--sigma2", 1.0, "--gamma-bar", 2.0,
        )
        assert result.exit_code == 0, result.output
        rows = read_table(out / "decisions.csv")
        assert [(r["index"], r["khat"], r["detected"]) for r in rows] == [
            ("0", "1", "1"),
            ("1", "2", "1"),
            ("2", "1", "0"),
        ]
        assert float(rows[0]["statistic"]) == pytest.approx(12.5)
        assert "3 observations, 2 detected" in result.stdout

    def test_detect_batch_unknown_statistics(self, tmp_path, out, bases_dir, rng):
        write_matrix(tmp_path / "y.csv", rng.standard_normal((5, 4)))
        write_matrix(tmp_path / "xi.csv", rng.standard_normal((5, 40)))
        result = invoke(
            out, "detect-batch", "--bases-dir", bases_dir, "--data", tmp_path / "y.csv",
            "--regime", "unknown-statistics", "--training", tmp_path / "xi.csv",
            "--gamma-bar", 0.5,
        )
        assert result.exit_code == 0, result.output
        statistics = [float(r["statistic"]) for r in read_table(out / "decisions.csv")]
        assert len(statistics) == 4
        assert all(0 <= s <= 1 for s in statistics)

    def test_detect_batch_needs_training(self, tmp_path, out, bases_dir, rng):
        write_matrix(tmp_path / "y.csv", rng.standard_normal((5, 4)))
        result = invoke(
            out, "detect-batch", "--bases-dir", bases_dir, "--data", tmp_path / "y.csv",
            "--regime", "unknown-covariance", "--sigma2", 1.0, "--gamma-bar", 0.5,
        )
        assert result.exit_code == 2

    def test_detect_batch_needs_sigma2(self, tmp_path, out, bases_dir, rng):
        write_matrix(tmp_path / "y.csv", rng.standard_normal((5, 4)))
        result = invoke(
            out, "detect-batch", "--bases-dir", bases_dir, "--data", tmp_path / "y.csv",
            "--gamma-bar", 0.5,
        )
        assert result.exit_code == 2

    def test_detect_batch_dimension_mismatch(self, tmp_path, out, bases_dir, rng):
        write_matrix(tmp_path / "y.csv", rng.standard_normal((4, 3)))
        result = invoke(
            out, "detect-batch", "--bases-dir", bases_dir, "--data", tmp_path / "y.csv",
            "--sigma2", 1.0, "--gamma-bar", 0.5,
        )
        assert result.exit_code == 2

    def test_detect_batch_missing_bases(self, tmp_path, out, rng):
        write_matrix(tmp_path / "y.csv", rng.standard_normal((5, 3)))
        (tmp_path / "empty").mkdir()
        result = invoke(
            out, "detect-batch", "--bases-dir", tmp_path / "empty", "--data",
            tmp_path / "y.csv", "--sigma2", 1.0, "--gamma-bar", 0.5,
        )
        assert result.exit_code == 2
