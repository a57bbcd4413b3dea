import copy
import json
import subprocess
import sys
from pathlib import Path

import pytest

from nlexit import cli
from nlexit import config as C
from nlexit.reports import FAIL, INFO, PASS

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

BASE = {
    "experiment": "exit-stats",
    "seed": 2,
    "n_paths": 200,
    "clamp": 1.0,
    "family": {"kind": "gbm", "control_set": {"type": "sigma_grid", "sigmas": [0.5, 1.0]}, "x0": [0.0]},
    "domain": {"type": "interval", "a": -1.0, "b": 1.0},
    "grid": {"horizon": 1.0, "dt": 0.01},
}


def pointers(cfg):
    with pytest.raises(C.ConfigError) as exc:
        C.validate(cfg)
    return [p for p, _ in exc.value.errors]


def edited(**changes):
    cfg = copy.deepcopy(BASE)
    for path, value in changes.items():
        node = cfg
        keys = path.split("__")
        for k in keys[:-1]:
            node = node[k]
        if value is None:
            del node[keys[-1]]
        else:
            node[keys[-1]] = value
    return cfg


def test_base_config_is_valid():
    assert C.validate(copy.deepcopy(BASE))["experiment"] == "exit-stats"


@pytest.mark.parametrize("cfg,pointer", [
    (edited(grid__dt=None, grid__steps=0), "/grid/steps"),
    (edited(n_paths=0), "/n_paths"),
    (edited(seed=-1), "/seed"),
    (edited(unknown=1), ""),
    (edited(domain__type="blob"), "/domain"),
    (edited(family__control_set__sigmas=[]), "/family/control_set"),
    (edited(clamp=None), ""),
    (edited(grid__steps=10), "/grid"),
    (edited(clamp=5.0), "/clamp"),
    (edited(grid__dt=None, grid__dt_levels=[0.1, 0.01]), "/grid/dt_levels"),
])
def test_validation_pointers(cfg, pointer):
    assert pointer in pointers(cfg)


def test_all_shipped_configs_validate():
    files = sorted(CONFIGS.glob("*.json"))
    assert len(files) >= 8
    for f in files:
        C.load(f)


def test_family_kind_mismatch():
    cfg = edited(family__kind="pointmass")
    C.validate(cfg)
    with pytest.raises(C.ConfigError):
        C.build_family(cfg, C.build_grid(cfg))


def run_cli(tmp_path, cfg, threads=1, name="out", experiment=None):
    path = tmp_path / f"{name}.json"
    path.write_text(json.dumps(cfg))
    out = tmp_path / name
    code = cli.main([experiment or cfg["experiment"], "--config", str(path), "--out", str(out),
                     "--threads", str(threads)])
    return code, out


def test_exit_codes_and_artifacts(tmp_path, capsys):
    code, out = run_cli(tmp_path, BASE)
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    assert report["verdict"] == INFO and report["config"] == BASE
    assert {"schema_version", "code_version", "hypotheses", "metrics", "tolerances", "failures"} <= set(report)
    assert (out / "exits.csv").exists() and (out / "summary.md").exists()

    code, _ = run_cli(tmp_path, edited(n_paths=0), name="bad")
    assert code == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "config" and err["failures"][0]["pointer"] == "/n_paths"

    code, _ = run_cli(tmp_path, BASE, name="mismatch", experiment="simulate")
    assert code == 2


def test_failing_verdict_exit_code(tmp_path):
    cfg = {"experiment": "counterexample", "seed": 0, "n_paths": 50,
           "params": {"which": "degenerate_gbm", "sigmas": [0.0, 0.5], "dt": 0.01}}
    code, out = run_cli(tmp_path, cfg)
    assert code == 1
    assert json.loads((out / "report.json").read_text())["verdict"] == FAIL


@pytest.mark.parametrize("name", ["simulate", "exit_stats", "qc_probe"])
def test_thread_count_does_not_change_reports(tmp_path, name):
    cfg = json.loads((CONFIGS / f"{name}.json").read_text())
    cfg["n_paths"] = min(cfg["n_paths"], 300)
    _, one = run_cli(tmp_path, cfg, 1, "one")
    _, many = run_cli(tmp_path, cfg, 4, "many")
    for f in one.iterdir():
        assert f.read_bytes() == (many / f.name).read_bytes(), f.name


def test_simulate_ndjson_carries_law_ids(tmp_path):
    cfg = json.loads((CONFIGS / "simulate.json").read_text())
    _, out = run_cli(tmp_path, cfg)
    rows = [json.loads(line) for line in (out / "paths.ndjson").read_text().splitlines()]
    assert len(rows) == 2 * cfg["n_paths"]
    assert {r["law_id"] for r in rows} == {0, 1}
    assert json.loads((out / "report.json").read_text())["metrics"]["ledger_exact"] is True


def test_console_entry_point(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"experiment": "partition-approx", "seed": 0, "params": {"levels": [3, 4]}}))
    res = subprocess.run([sys.executable, "-m", "nlexit.cli", "partition-approx", "--config", str(path),
                          "--out", str(tmp_path / "o")], capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    assert f": {PASS} ->" in res.stdout
