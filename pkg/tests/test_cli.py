import json
import subprocess
import sys

import pytest

from conftest import ROOT
from smallcover.cli import run

CONFIGS = ROOT / "configs"
I1 = json.loads((CONFIGS / "i1.json").read_text())


def call(tmp_path, command, cfg=None, *extra):
    out = tmp_path / f"{command}.json"
    argv = [command, "--out", str(out), *extra]
    if cfg is not None:
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg))
        argv += ["--config", str(path)]
    code = run(argv)
    return code, (json.loads(out.read_text()) if out.exists() else None)


def test_estimate_exact(tmp_path):
    code, rep = call(tmp_path, "estimate", I1)
    assert code == 0 and rep["result"]["S_T"] == "19/16"
    assert rep["status"] == "ok" and rep["command"] == "estimate"


def test_estimate_mc_needs_seed(tmp_path, capsys):
    code, _ = call(tmp_path, "estimate", dict(I1, mode="mc"))
    assert code == 2
    assert json.loads(capsys.readouterr().err)["field"] == "seed"


def test_malformed_p(tmp_path, capsys):
    bad = {"instance": dict(I1["instance"], p=["1/2", "1/4", "1/8"])}
    code, rep = call(tmp_path, "estimate", bad)
    assert code == 2 and rep is None
    diag = json.loads(capsys.readouterr().err)
    assert diag["error"] == "config" and diag["field"] == "p"


def test_invalid_json(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    assert run(["estimate", "--config", str(path)]) == 2
    assert json.loads(capsys.readouterr().err)["field"] == "config"


def test_budget_exit(tmp_path, capsys):
    code, _ = call(tmp_path, "estimate", I1, "--budget", "3")
    assert code == 3
    assert json.loads(capsys.readouterr().err)["error"] == "budget"


def test_family_and_witness(tmp_path):
    code, rep = call(tmp_path, "family", I1)
    assert code == 0
    assert rep["result"]["size"] == 5
    assert rep["result"]["family"] == [[1, 3], [2, 3], [3, 1], [3, 2], [3, 3]]
    cfg = json.loads((CONFIGS / "i1_witness.json").read_text())
    code, rep = call(tmp_path, "witness", cfg)
    assert code == 0 and rep["result"]["witness"] == {"x_star": [3, 1], "W": [1], "J_size": 1}


def test_cover(tmp_path):
    code, rep = call(tmp_path, "cover", I1)
    res = rep["result"]
    assert code == 0 and len(res["entries"]) == 2
    assert res["delta_weight"] == "1/2" and res["covered"] is True


def test_classes_csv(tmp_path):
    csv_path = tmp_path / "classes.csv"
    code, rep = call(tmp_path, "classes", I1, "--csv", str(csv_path))
    assert code == 0
    lines = csv_path.read_text().splitlines()
    assert lines[0].startswith("j,t")
    assert len(lines) == 1 + len(rep["result"]["classes"])


@pytest.mark.parametrize("name", ["reduce_dyadic.json", "reduce_pareto_main.json"])
def test_reduce(tmp_path, name):
    code, rep = call(tmp_path, "reduce", json.loads((CONFIGS / name).read_text()))
    assert code == 0 and "total_weight" in rep["result"]


def test_selector(tmp_path):
    code, rep = call(tmp_path, "selector", json.loads((CONFIGS / "selector.json").read_text()))
    assert code == 0
    assert rep["result"]["subsets"] == [[1], [2]] and rep["result"]["weight"] == "1/2"


def test_verify_small_random(tmp_path):
    code, rep = call(tmp_path, "verify", {"random": {"count": 10, "seed": 4}})
    assert code == 0
    assert all(r["passed"] for r in rep["result"]["reports"].values())


def test_byte_identical_across_workers(tmp_path):
    cfg = dict(I1, mode="mc", seed=11, samples=50000)
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    assert run(["estimate", "--config", str(path), "--out", str(a), "--workers", "1"]) == 0
    assert run(["estimate", "--config", str(path), "--out", str(b), "--workers", "4"]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_console_script():
    proc = subprocess.run([sys.executable, "-m", "smallcover.cli", "estimate", "--config",
                           str(CONFIGS / "i1.json")], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["result"]["S_T"] == "19/16"
