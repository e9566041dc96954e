import pytest

from craftforecast.cli import cli
from craftforecast.util import json

WORLD = """\
n_cities: 1
districts_per_city: 2
hotels_per_district: 4
horizon: 60
max_lead: 20
holiday_count: 2
L: 8
P: 3
origin_stride: 3
split_ratios: [0.6, 0.2, 0.2]
"""

TRAIN = """\
L: 8
P: 3
D: 4
kernel: 5
m: 3
groups_per_batch: 2
epochs: 1
max_steps: 2
allow_custom_windows: true
"""


@pytest.fixture
def workspace(tmp_path):
    (tmp_path / "world.yaml").write_text(WORLD)
    (tmp_path / "train.yaml").write_text(TRAIN)
    assert cli(["generate", "--config", str(tmp_path / "world.yaml"), "--seed", "7", "--out", str(tmp_path / "data")]) == 0
    return tmp_path


def test_train_eval_predict(workspace):
    data, run = str(workspace / "data"), workspace / "run"
    assert cli(["train", "--config", str(workspace / "train.yaml"), "--data", data, "--out", str(run)]) == 0
    assert (run / "model.ckpt").exists()
    assert (run / "history.txt").exists()
    assert (run / "log" / "run.log").exists()

    checkpoint = str(run / "model.ckpt")
    assert cli(["eval", "--checkpoint", checkpoint, "--data", data, "--report", str(workspace / "report.json")]) == 0
    report = json.loads((workspace / "report.json").read_bytes())
    assert report["sample_count"] > 0
    assert report["wmape"] is not None

    out = workspace / "forecasts.jsonl"
    assert cli(["predict", "--checkpoint", checkpoint, "--data", data, "--out", str(out)]) == 0
    lines = out.read_bytes().splitlines()
    assert len(lines) == report["sample_count"]


def test_ablate_baseline_diagnose(workspace):
    data, config = str(workspace / "data"), str(workspace / "train.yaml")
    table_path = workspace / "ablation.json"
    assert cli(["ablate", "--config", config, "--data", data, "--seeds", "1", "--out", str(table_path)]) == 0
    table = json.loads(table_path.read_bytes())
    assert [row["variant"] for row in table["rows"]] == ["kpm_only", "itm", "itm_etg", "full"]

    assert cli(["baseline", "--config", config, "--data", data, "--report", str(workspace / "baseline.json")]) == 0
    assert "mae" in json.loads((workspace / "baseline.json").read_bytes())

    curve_path = workspace / "pearson.json"
    assert cli(["diagnose", "pearson", "--data", data, "--pmax", "3", "--out", str(curve_path)]) == 0
    assert len(json.loads(curve_path.read_bytes())["correlations"]) == 3


def test_config_error_exit_code(workspace):
    (workspace / "bad.yaml").write_text(TRAIN + "learning_rate: 0.1\n")
    args = ["train", "--config", str(workspace / "bad.yaml"), "--data", str(workspace / "data"), "--out", str(workspace / "run")]
    assert cli(args) == 2


def test_data_error_exit_code(tmp_path):
    (tmp_path / "train.yaml").write_text(TRAIN)
    args = ["baseline", "--config", str(tmp_path / "train.yaml"), "--data", str(tmp_path / "none"), "--report", str(tmp_path / "r.json")]
    assert cli(args) == 3
    assert cli(["diagnose", "pearson", "--data", str(tmp_path / "none"), "--pmax", "3", "--out", str(tmp_path / "p.json")]) == 3


def test_checkpoint_error_exit_code(workspace):
    (workspace / "broken.ckpt").write_bytes(b"not a checkpoint at all")
    args = ["eval", "--checkpoint", str(workspace / "broken.ckpt"), "--data", str(workspace / "data"), "--report", str(workspace / "r.json")]
    assert cli(args) == 3


def test_usage_errors():
    with pytest.raises(SystemExit):
        cli(["generate", "--seed", "1"])
    with pytest.raises(SystemExit):
        cli(["eval", "--checkpoint", "x", "--data", "y", "--report", "z", "--split", "holdout"])


def test_paths_from_train_config(workspace):
    run = workspace / "configured"
    paths = workspace / "paths.yaml"
    paths.write_text(TRAIN + f'data_dir: "{workspace / "data"}"\nout_dir: "{run}"\n')
    assert cli(["train", "--config", str(paths)]) == 0
    assert (run / "model.ckpt").exists()
    assert (run / "log" / "run.log").exists()
    assert cli(["baseline", "--config", str(paths), "--report", str(workspace / "baseline.json")]) == 0


def test_train_needs_run_dir(workspace):
    assert cli(["train", "--config", str(workspace / "train.yaml"), "--data", str(workspace / "data")]) == 2


def test_infinite_loss_weight_exit_code(workspace):
    (workspace / "inf.yaml").write_text(TRAIN + "alpha3: .inf\n")
    args = ["train", "--config", str(workspace / "inf.yaml"), "--data", str(workspace / "data"), "--out", str(workspace / "run")]
    assert cli(args) == 2


def test_missing_world_file_exit_code(workspace):
    (workspace / "data" / "world.yaml").unlink()
    args = ["baseline", "--config", str(workspace / "train.yaml"), "--data", str(workspace / "data"), "--report", str(workspace / "r.json")]
    assert cli(args) == 3
