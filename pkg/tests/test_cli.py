import json
import subprocess
import sys
from pathlib import Path

import pytest

from falsar.cli import main

DATA = Path(__file__).parent / "data"


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_falsify_json(capsys):
    code, out, _ = run(capsys, "falsify", "--model", "synthetic", "--spec", "alw_[0,10](y1 > 0 and y2 > 0)",
                       "--algo", "mab-ucb", "--budget", "200", "--seed", "2")
    doc = json.loads(out)
    assert code == 0
    assert doc["outcome"] in ("falsified", "budget-exhausted")
    assert doc["simulations"] <= 200 and doc["seed"] == 2 and doc["algorithm"] == "mab-ucb"
    assert all(it["arm"] in (1, 2) for it in doc["trace"])


def test_falsify_scale_and_mab_flag(capsys, tmp_path):
    out = tmp_path / "r.json"
    code, _, _ = run(capsys, "falsify", "--model", "car", "--spec", "alw_[0,30](gear == 4 -> speed > 43)",
                     "--mab", "egreedy", "--mab-eps", "0.2", "--budget", "60", "--seed", "1",
                     "--scale", "speed:3", "--out", str(out))
    doc = json.loads(out.read_text())
    assert code == 0 and doc["algorithm"] == "mab-egreedy"


def test_falsify_seed_from_env(capsys, monkeypatch):
    monkeypatch.setenv("FALSAR_SEED", "5")
    _, out, _ = run(capsys, "falsify", "--model", "synthetic", "--spec", "alw_[0,10](y2 > 0)", "--budget", "30")
    assert json.loads(out)["seed"] == 5


def test_monitor(capsys, tmp_path):
    trace = tmp_path / "w.csv"
    trace.write_text("time,speed\n0,90\n1,110\n2,90\n")
    code, out, _ = run(capsys, "monitor", "--spec", "alw_[0,2](speed < 120)", "--trace", str(trace))
    assert code == 0 and float(out) == 10
    _, out, _ = run(capsys, "monitor", "--spec", "ev_[0,2](speed > 120)", "--trace", str(trace), "--json")
    assert json.loads(out) == {"robustness": -10.0, "satisfied": False}


def test_bench(capsys, tmp_path):
    raw, summary = tmp_path / "raw.csv", tmp_path / "summary.csv"
    code, _, _ = run(capsys, "bench", "--config", str(DATA / "golden_config.json"), "--trials", "1",
                     "--raw", str(raw), "--summary", str(summary))
    assert code == 0
    assert raw.read_text().startswith("spec_id,scale_k,algo,trial,seed,success")
    assert summary.read_text().startswith("spec_id,scale_k,algo,SR,")
    assert len(raw.read_text().splitlines()) == 1 + 3 * 2 * 3


@pytest.mark.parametrize("argv", [
    ["monitor", "--spec", "alw_[0,2](speed <", "--trace", "none.csv"],
    ["falsify", "--model", "car", "--spec", "alw_[0,30](altitude > 0)", "--budget", "10"],
    ["falsify", "--model", "car", "--spec", "speed > 0", "--budget", "10", "--scale", "altitude:1"],
    ["bench", "--config", "/nonexistent/config.json"],
])
def test_errors_exit_2(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 2 and "error:" in err and out == ""


def test_module_entry_point():
    p = subprocess.run([sys.executable, "-m", "falsar", "--help"], capture_output=True, text=True)
    assert p.returncode == 0
    for cmd in ("falsify", "bench", "monitor"):
        assert cmd in p.stdout
