import json
import subprocess
import sys

import numpy as np
import pytest

from wdlfd.cli import main
from wdlfd.core import validate_distribution
from wdlfd.harness import ExperimentConfig, generate_synthetic, save_dataset, save_distribution, trial_seed


@pytest.fixture
def files(tmp_path):
    a = validate_distribution([[0.0, 0.0], [1.0, 0.0]], [0.5, 0.5])
    b = validate_distribution([[3.0, 4.0]], [1.0])
    save_distribution(a, tmp_path / "a.csv")
    save_distribution(b, tmp_path / "b.csv")
    return tmp_path


def test_ot_prints_distance(files, capsys):
    assert main(["ot", "--a", str(files / "a.csv"), "--b", str(files / "b.csv"), "--exponent", "1"]) == 0
    expected = 0.5 * 5.0 + 0.5 * np.hypot(2.0, 4.0)
    assert float(capsys.readouterr().out) == pytest.approx(expected)


def test_barycenter_writes_distribution(files):
    out = files / "bc.csv"
    assert main(["barycenter", "--sources", f"{files / 'a.csv'},{files / 'a.csv'}", "--out", str(out)]) == 0
    assert out.read_text().startswith("f0,f1,weight\n")


def test_lfd_then_classify(files, capsys):
    out = files / "sol.json"
    assert main(["lfd", "--q1", str(files / "a.csv"), "--q2", str(files / "b.csv"),
                 "--theta1", "0.5", "--theta2", "0.5", "--out", str(out)]) == 0
    sol = json.loads(out.read_text())
    assert 0 < sol["objective"] < 2
    (files / "t.csv").write_text("f0,f1,label\n0,0,1\n3,4,2\n")
    capsys.readouterr()
    assert main(["classify", "--solution", str(out), "--test", str(files / "t.csv"), "--k", "3"]) == 0
    text = capsys.readouterr().out
    assert text.startswith("accuracy 1.0")


def test_lfd_variants(files):
    out = files / "sol.json"
    base = ["lfd", "--q1", str(files / "a.csv"), "--q2", str(files / "b.csv"), "--theta1", "0", "--theta2", "0",
            "--out", str(out)]
    assert main(base + ["--gamma-sep", "1.0"]) == 0
    assert json.loads(out.read_text())["separation_satisfied"] is True
    assert main(base + ["--lambda", "0.5"]) == 0
    assert main(base + ["--gamma-sep", "100"]) == 2
    assert main(base + ["--gamma-sep", "1", "--lambda", "1"]) == 1


def test_exit_codes(files, tmp_path):
    assert main(["ot", "--a", str(files / "a.csv"), "--b", str(tmp_path / "missing.csv")]) == 3
    (tmp_path / "bad.csv").write_text("f0,weight\n0,0.7\n1,0.7\n")
    assert main(["ot", "--a", str(files / "a.csv"), "--b", str(tmp_path / "bad.csv")]) == 3
    (tmp_path / "bad.yaml").write_text("trials: 0\n")
    assert main(["synth", "--config", str(tmp_path / "bad.yaml"), "--out", str(tmp_path / "o.csv")]) == 1
    assert main(["lfd", "--q1", str(files / "a.csv"), "--q2", str(files / "b.csv"), "--theta1", "-1",
                 "--theta2", "0", "--out", str(tmp_path / "x.json")]) == 1
    with pytest.raises(SystemExit) as err:
        main(["ot", "--a", "x"])
    assert err.value.code == 1
    with pytest.raises(SystemExit) as err:
        main([])
    assert err.value.code == 1


def test_learn_radii_and_synth(tmp_path, capsys):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("source_sizes: [20]\ntrials: 2\ntarget_test_size: 20\n")
    assert main(["learn-radii", "--config", str(cfg), "--out", str(tmp_path / "trace.json")]) == 0
    trace = json.loads((tmp_path / "trace.json").read_text())
    assert trace["iterations"][0]["theta1"] > 0
    assert main(["synth", "--config", str(cfg), "--out", str(tmp_path / "r.csv"),
                 "--summary", str(tmp_path / "s.json")]) == 0
    assert len((tmp_path / "r.csv").read_text().splitlines()) == 1 + 2 * 3
    data = generate_synthetic(ExperimentConfig(), trial_seed(0, 20, 0), 20).target_test
    save_dataset(data, tmp_path / "t.csv")
    capsys.readouterr()
    assert main(["classify", "--solution", str(tmp_path / "trace.json"), "--test", str(tmp_path / "t.csv")]) == 0
    assert "confusion" in capsys.readouterr().out


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "wdlfd", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "synth" in proc.stdout
