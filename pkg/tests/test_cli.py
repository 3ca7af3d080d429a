import json
import subprocess
import sys

import pytest

from ddstab import benchmarks as bm
from ddstab.cli import main
from ddstab.pipeline import reactor_config, run_algorithm1


def test_design_state_writes_report_and_csv(tmp_path, capsys):
    assert main(["design-state", "--out", str(tmp_path), "--csv", "--seed", "4"]) == 0
    out = capsys.readouterr().out
    assert "certified    True" in out
    report = json.loads((tmp_path / "design-state.json").read_text())
    assert report["certified"] and report["config"]["seed"] == 4
    assert (tmp_path / "state-experiment.csv").exists()
    header = (tmp_path / "state-closed-loop.csv").read_text().splitlines()[0]
    assert header.startswith("t,z0")
    assert main(["verify", str(tmp_path / "design-state.json")]) == 0


def test_design_output_from_config_file(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"kind": "output", "plant": {"num": [1, -1], "den": [1, 0, 4, 0]},
                               "x0": bm.SISO_X0.tolist()}))
    assert main(["design-output", str(cfg), "--delta", "1e-2", "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "design-output.json").read_text())
    assert report["config"]["delta"] == 1e-2


def test_kind_mismatch_is_rejected(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"kind": "output"}))
    with pytest.raises(SystemExit):
        main(["design-state", str(cfg)])


def test_design_from_batch(tmp_path, reactor_batch):
    from ddstab.batching import save_batch

    save_batch(reactor_batch, tmp_path / "batch")
    assert main(["design-from-batch", str(tmp_path / "batch")]) == 0
    plant = tmp_path / "plant.json"
    plant.write_text(json.dumps({"plant": {"A": bm.REACTOR_A.tolist(), "B": bm.REACTOR_B.tolist()}}))
    assert main(["design-from-batch", str(tmp_path / "batch"), "--plant", str(plant), "--out", str(tmp_path)]) == 0
    assert json.loads((tmp_path / "design-from-batch.json").read_text())["certified"]


def test_verify_fails_on_destabilizing_gain(tmp_path):
    report = json.loads(run_algorithm1(reactor_config(seed=1)).to_json())
    report["gain"]["K"] = [[0.0] * 6, [0.0] * 6]
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(report))
    assert main(["verify", str(path)]) == 1


def test_missing_file_exit_code(tmp_path, capsys):
    assert main(["verify", str(tmp_path / "nope.json")]) == 2
    assert "error" in capsys.readouterr().err


def test_reproduce_paper_bundle(tmp_path):
    rc = subprocess.run([sys.executable, "-m", "ddstab.cli", "reproduce-paper", "--which", "state",
                         "--seeds", "2", "--out", str(tmp_path)], capture_output=True, text=True)
    assert rc.returncode == 0, rc.stderr
    assert rc.stdout.count("[PASS]") == 4
    bundle = json.loads((tmp_path / "reproduction.json").read_text())
    assert bundle["passed"] and len(bundle["checks"]) == 4
    assert (tmp_path / "summary.txt").read_text().count("PASS") == 4
