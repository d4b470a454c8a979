import json
from pathlib import Path

import numpy as np
import pandas as pd
import pytest
from numpy.testing import assert_allclose

from controllers.pipeline_controller import PipelineController
from main import run
from models.schemas import DatasetFile, RunReport, StateFile
from models.storage import FileStore
from utils.exceptions import DatasetError


@pytest.fixture
def spec_file(tmp_path):
    rng = np.random.default_rng(42)
    spec = {
        "name": "small",
        "kernel_family": "custom",
        "M": 16,
        "N": 8,
        "noise_fraction": 0.02,
        "seed": 5,
        "custom_kernel": rng.uniform(0.1, 1.0, size=(16, 8)).tolist(),
        "truth": {"values": [0.02, 0.1, 0.3, 0.2, 0.1, 0.15, 0.1, 0.03]},
    }
    path = tmp_path / "spec.json"
    path.write_text(json.dumps(spec))
    return path


@pytest.fixture
def dataset(tmp_path, spec_file):
    path = tmp_path / "data.json"
    assert run(["gen", "--spec", str(spec_file), "--out", str(path)]) == 0
    return path


def test_gen_builtin_example(tmp_path):
    out = tmp_path / "example1.json"
    assert run(["gen", "--spec", "example1", "--out", str(out)]) == 0
    dataset = FileStore.load_dataset(out)
    assert (dataset.M, dataset.N) == (100, 50)
    assert dataset.measure_mode.value == "inverse_variance"


def test_gen_is_byte_identical(tmp_path, spec_file, dataset):
    again = tmp_path / "again.json"
    assert run(["gen", "--spec", str(spec_file), "--out", str(again)]) == 0
    assert again.read_bytes() == dataset.read_bytes()


def test_full_pipeline(tmp_path, dataset):
    pool = tmp_path / "pool.json"
    fit_state, fit_report = tmp_path / "fit.json", tmp_path / "fit_report.json"
    prune_state, prune_report = tmp_path / "prune.json", tmp_path / "prune_report.json"
    table = tmp_path / "distribution.csv"

    assert run(["preselect", "--data", str(dataset), "--tol", "1e-8", "--out", str(pool)]) == 0
    assert len(FileStore.load_pool(pool).indices) == 7

    assert run([
        "fit", "--data", str(dataset), "--pool", str(pool), "--t", "1.1",
        "--measure", "inverse-variance", "--out", str(fit_state), "--report", str(fit_report),
    ]) == 0
    report = FileStore.load(fit_report, RunReport)
    assert report.k == len(report.selected) == len(report.multipliers) >= 1
    assert all(1 <= i <= 16 for i in report.selected)
    assert report.normalization == pytest.approx(1.0)
    assert report.biorthogonality < 1e-6
    assert report.pool_size == 7
    assert report.prediction_to_truth2 is not None
    assert report.observation_to_truth2 > 0
    trace = pd.read_csv(tmp_path / "fit_report_trace.csv")
    assert list(trace.columns) == ["step", "index", "k", "residual2", "projection_norm2"]
    assert len(trace) == report.k + 1

    assert run([
        "prune", "--data", str(dataset), "--state", str(fit_state), "--t", "2.0",
        "--out", str(prune_state), "--report", str(prune_report),
    ]) == 0
    pruned = FileStore.load(prune_report, RunReport)
    assert pruned.k + len(pruned.removed) == report.k
    assert FileStore.load_state(prune_state).stage == "prune"

    assert run(["predict", "--data", str(dataset), "--state", str(prune_state), "--out", str(table)]) == 0
    frame = pd.read_csv(table)
    assert list(frame.columns) == ["n", "p_half", "p"]
    assert frame["p_half"].sum() == pytest.approx(1.0)
    assert_allclose(frame["p"], frame["p_half"] ** 2)
    data = pd.read_csv(tmp_path / "distribution_data.csv")
    assert list(data.columns) == ["i", "f_obs", "f_pred", "f_true", "sigma"]
    assert len(data) == 16


def test_max_k_zero_gives_uniform_distribution(tmp_path, dataset):
    state, report = tmp_path / "state.json", tmp_path / "report.json"
    assert run([
        "fit", "--data", str(dataset), "--max-k", "0", "--out", str(state), "--report", str(report),
    ]) == 0
    result = FileStore.load(report, RunReport)
    assert result.k == 0
    assert result.stop_reason == "max_k"

    loaded = FileStore.load_dataset(dataset)
    system, _ = PipelineController.build_system(loaded)
    ftilde = system.derive().ftilde
    assert result.residual2 == pytest.approx(float(np.dot(ftilde * system.mu.weights, ftilde)))

    table = tmp_path / "uniform.csv"
    assert run(["predict", "--data", str(dataset), "--state", str(state), "--out", str(table)]) == 0
    assert_allclose(pd.read_csv(table)["p_half"], 1.0 / 8)


def test_fit_is_reproducible(tmp_path, dataset):
    outputs = []
    for name in ("a", "b"):
        state = tmp_path / f"{name}.json"
        assert run([
            "fit", "--data", str(dataset), "--out", str(state), "--report", str(tmp_path / f"{name}_report.json"),
        ]) == 0
        outputs.append(state.read_bytes())
    assert outputs[0] == outputs[1]


def test_relative_outputs_go_to_output_dir(tmp_path, dataset):
    target = tmp_path / "runs"
    assert run([
        "--output-dir", str(target), "fit", "--data", str(dataset), "--out", "state.json", "--report", "report.json",
    ]) == 0
    assert (target / "state.json").exists()
    assert (target / "report_trace.csv").exists()


def test_uniform_measure_is_recorded(tmp_path, dataset):
    state = tmp_path / "state.json"
    assert run([
        "fit", "--data", str(dataset), "--measure", "uniform", "--out", str(state), "--report", str(tmp_path / "r.json"),
    ]) == 0
    assert FileStore.load(state, StateFile).measure.value == "uniform"


class TestExitCodes:
    def test_bad_arguments(self):
        assert run([]) == 2
        assert run(["fit", "--data", "x.json"]) == 2
        assert run(["gen", "--spec", "example1", "--out", "x.json", "--bogus"]) == 2

    def test_missing_dataset(self, tmp_path):
        assert run([
            "fit", "--data", str(tmp_path / "missing.json"), "--out", str(tmp_path / "s.json"),
            "--report", str(tmp_path / "r.json"),
        ]) == 3

    def test_invalid_dataset(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"M": 2, "N": 2, "kernel": [[1.0, 0.0]], "f_obs": [1.0, 0.0]}))
        with pytest.raises(DatasetError):
            FileStore.load_dataset(path)
        assert run(["preselect", "--data", str(path), "--out", str(tmp_path / "p.json")]) == 3

    def test_missing_sigma_needs_epsilon(self, tmp_path):
        path = tmp_path / "nosigma.json"
        FileStore.save(path, DatasetFile(M=2, N=2, kernel=[[1.0, 0.0], [0.0, 1.0]], f_obs=[1.0, 0.0]))
        args = ["fit", "--data", str(path), "--out", str(tmp_path / "s.json"), "--report", str(tmp_path / "r.json")]
        assert run(args) == 2
        assert run(args + ["--epsilon2", "1e-6"]) == 0
        assert FileStore.load_state(tmp_path / "s.json").selected == [1]

    def test_degenerate_dataset(self, tmp_path):
        path = tmp_path / "flat.json"
        FileStore.save(
            path,
            DatasetFile(M=3, N=1, kernel=[[1.0], [2.0], [3.0]], f_obs=[2.0, 1.0, 5.0], sigma=[0.1, 0.1, 0.1]),
        )
        assert run([
            "fit", "--data", str(path), "--out", str(tmp_path / "s.json"), "--report", str(tmp_path / "r.json"),
        ]) == 4


def _conforms(value, schema) -> bool:
    """Subset of JSON Schema used by docs/report_schema.json."""
    if "anyOf" in schema:
        return any(_conforms(value, option) for option in schema["anyOf"])
    if "enum" in schema and value not in schema["enum"]:
        return False
    kind = schema.get("type")
    if kind == "object":
        if not isinstance(value, dict) or any(key not in value for key in schema.get("required", [])):
            return False
        properties = schema.get("properties", {})
        return all(key in properties and _conforms(item, properties[key]) for key, item in value.items())
    if kind == "array":
        return isinstance(value, list) and all(_conforms(item, schema.get("items", {})) for item in value)
    if kind == "integer":
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif kind == "number":
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    elif kind == "string":
        ok = isinstance(value, str)
    elif kind == "null":
        ok = value is None
    else:
        ok = True
    return ok and ("minimum" not in schema or value >= schema["minimum"])


def test_every_report_matches_shipped_schema(tmp_path, spec_file):
    schema = json.loads((Path(__file__).resolve().parents[1] / "docs" / "report_schema.json").read_text())
    assert set(schema["properties"]) == set(RunReport.model_json_schema()["properties"])

    data, pool = tmp_path / "data.json", tmp_path / "pool.json"
    fit_state, pruned = tmp_path / "fit.json", tmp_path / "pruned.json"
    reports = {stage: tmp_path / f"{stage}_report.json" for stage in ("gen", "preselect", "fit", "prune", "predict")}

    assert run(["gen", "--spec", str(spec_file), "--out", str(data), "--report", str(reports["gen"])]) == 0
    assert run(["preselect", "--data", str(data), "--out", str(pool), "--report", str(reports["preselect"])]) == 0
    assert run([
        "fit", "--data", str(data), "--pool", str(pool), "--out", str(fit_state), "--report", str(reports["fit"]),
    ]) == 0
    assert run([
        "prune", "--data", str(data), "--state", str(fit_state), "--out", str(pruned), "--report", str(reports["prune"]),
    ]) == 0
    assert run([
        "predict", "--data", str(data), "--state", str(pruned), "--out", str(tmp_path / "distribution.csv"),
        "--report", str(reports["predict"]),
    ]) == 0

    for stage, path in reports.items():
        report = json.loads(path.read_text())
        assert report["stage"] == stage
        assert _conforms(report, schema), stage
    assert not _conforms({"stage": "unknown", "app_version": "1", "dataset": "x"}, schema)
    assert not _conforms({"stage": "fit", "app_version": "1", "dataset": "x", "selected": [0]}, schema)
