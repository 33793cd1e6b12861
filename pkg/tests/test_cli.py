import json
import subprocess
import sys

import pytest

from motionref.cli import evaluate_files, main
from motionref.io import read_descriptions
from motionref.describe import parse_description

SCENARIO = {
    "frames": 15, "width": 1242, "height": 375, "fps": 10,
    "reference": "left cars which are parking",
    "objects": [
        {"id": 1, "motion": "parked", "x": 200, "y": 250, "w": 80, "h": 50, "relevant": True},
        {"id": 2, "motion": "constant_velocity", "x": 600, "y": 200, "w": 60, "h": 40, "vx": 3.0},
        {"id": 3, "motion": "turning", "x": 900, "y": 150, "w": 50, "h": 40, "speed": 4.0,
         "turn_rate": 0.1, "scale_rate": 0.01, "relevant": True},
    ],
}


@pytest.fixture
def sim(tmp_path):
    cfg = tmp_path / "scenario.json"
    cfg.write_text(json.dumps(SCENARIO))
    assert main(["simulate", "--config", str(cfg), "--seed", "1", "--out", str(tmp_path / "sim")]) == 0
    return tmp_path / "sim"


def test_simulate_writes_files(sim):
    for name in ("trajectories.csv", "trajectories.json", "gt.csv", "gt.json"):
        assert (sim / name).exists()


def test_run_and_eval_identity(sim, tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"preset": "identity", "referring": "oracle"}))
    assert main(["run", "--config", str(cfg), "--trajectories", str(sim / "trajectories.csv"),
                 "--out", str(tmp_path / "out")]) == 0
    report = tmp_path / "report.json"
    assert main(["eval", "--gt", str(sim / "gt.csv"), "--pred", str(tmp_path / "out" / "predictions.csv"),
                 "--out", str(report)]) == 0
    values = json.loads(report.read_text())
    assert set(values) == {"HOTA", "DetA", "AssA", "DetRe", "DetPr", "AssRe", "AssPr", "MOTA", "IDF1"}
    assert all(v == 1.0 for v in values.values())
    for _, _, s in read_descriptions(tmp_path / "out" / "descriptions.csv"):
        parse_description(s)


def test_describe(sim, tmp_path):
    out = tmp_path / "d.csv"
    assert main(["describe", "--trajectories", str(sim / "trajectories.csv"), "--out", str(out)]) == 0
    rows = read_descriptions(out)
    assert rows[0][2] == "Target is back-left"  # dx = -0.339, dy = +0.167
    assert len(rows) == 45


def test_eval_gt_equals_pred(sim):
    gt = sim / "gt.csv"
    pred = sim / "pred.csv"
    lines = gt.read_text().splitlines()
    pred.write_text("\n".join([lines[0] + ",class_conf,ref_conf"] + [l + ",1.0,1.0" for l in lines[1:]]) + "\n")
    assert all(v == 1.0 for v in evaluate_files(gt, pred).values())


def test_eval_empty_predictions(sim):
    pred = sim / "empty.csv"
    pred.write_text("frame,id,x_center,y_center,w,h,class_conf,ref_conf\n")
    r = evaluate_files(sim / "gt.csv", pred)
    assert r["MOTA"] <= 0 and r["IDF1"] == 0


def test_eval_schema_error(sim, capsys):
    assert main(["eval", "--gt", str(sim / "gt.csv"), "--pred", str(sim / "gt.csv")]) == 2
    assert "gt.csv:2: expected 8 columns" in capsys.readouterr().err


def test_bad_config_exit_code(sim, tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"heads": 5}))
    code = main(["run", "--config", str(cfg), "--trajectories", str(sim / "trajectories.csv"),
                 "--out", str(tmp_path / "o")])
    assert code == 2
    assert "heads" in capsys.readouterr().err


def test_module_entry_point(sim, tmp_path):
    r = subprocess.run(
        [sys.executable, "-m", "motionref.cli", "eval", "--gt", str(sim / "gt.csv"),
         "--pred", str(sim / "missing.csv")],
        capture_output=True, text=True,
    )
    assert r.returncode == 2 and "error" in r.stderr
