import io
import json
import subprocess
import sys

import pytest

from tdmfair.cli import EXIT_MISMATCH, EXIT_NONCONVERGED, EXIT_OK, EXIT_USAGE, main
from tdmfair.experiments import read_csv


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), out=out, err=err)
    return code, out.getvalue(), err.getvalue()


def test_solve_single_node():
    code, out, _ = run("solve", "--n", "1", "--eta", "2", "--power", "1", "--strategy", "ta")
    assert code == EXIT_OK
    assert "objective (min rate): 0.693147181" in out


def test_solve_report_lists_nodes_and_areas():
    code, out, _ = run("solve", "--n", "3", "--strategy", "np")
    assert code == EXIT_OK
    assert "A_i" in out and "C_i/A_i" in out and "min rate per area" in out
    assert "# configuration" in out


def test_solve_json_output_echoes_configuration(tmp_path):
    path = tmp_path / "out.json"
    code, _, _ = run("solve", "--n", "4", "--power", "2", "--strategy", "TAPA", "--json", str(path))
    assert code == EXIT_OK
    doc = json.loads(path.read_text())
    assert doc["configuration"]["n"] == 4 and doc["configuration"]["power"] == 2.0
    assert doc["configuration"]["network"]["total_power"] == 8.0
    assert doc["strategy"] == "TAPA" and len(doc["times"]) == 4


def test_extended_area_model_for_rate_strategies():
    code, out, _ = run("solve", "--n", "3", "--strategy", "br", "--area-model", "extended")
    assert code == EXIT_OK
    assert "min rate per area (extended)" in out


def test_extended_area_model_rejected_for_placement():
    code, _, err = run("solve", "--n", "3", "--strategy", "np", "--area-model", "extended")
    assert code == EXIT_USAGE and "placement" in err


def test_compare_power_adaptation():
    code, out, _ = run("compare", "--n", "2", "--eta", "2", "--power", "1", "--strategy", "pa")
    assert code == EXIT_OK
    assert "solver objective: 0.293893332" in out and "verdict: agree" in out


def test_compare_reports_mismatch(monkeypatch):
    import tdmfair.cli as cli
    monkeypatch.setattr(cli, "discretization_bound", lambda spec, result: 0.0)
    code, out, _ = run("compare", "--n", "3", "--strategy", "np", "--resolution", "0.05")
    assert code == EXIT_MISMATCH and "MISMATCH" in out


def test_compare_rejects_large_instance():
    code, _, err = run("compare", "--n", "4", "--strategy", "ta")
    assert code == EXIT_USAGE and "n <= 3" in err


def test_sweep_to_file_with_sidecar(tmp_path):
    path = tmp_path / "r.csv"
    code, _, _ = run("sweep", "--strategy", "pa", "--eta", "2", "--power", "0.01", "--n-list", "200",
                     "--out", str(path))
    assert code == EXIT_OK
    table = read_csv(path)
    assert len(table.rows) == 1 and 2.97 < table.rows[0].ratio < 2.99
    meta = json.loads((tmp_path / "r.csv.meta.json").read_text())
    assert meta["sweep"]["n_values"] == [200]
    assert "timestamp" not in json.dumps(meta)


def test_sweep_to_stdout_repeated_strategies():
    code, out, _ = run("sweep", "--strategy", "ta", "--strategy", "np", "--n-list", "2", "3",
                       "--power", "1", "--eta", "2", "3")
    assert code == EXIT_OK
    lines = out.splitlines()
    assert lines[0] == "strategy,n,P,eta,objective,base_objective,ratio,converged"
    assert len(lines) == 1 + 2 * 2 * 2


def test_idempotent_outputs(tmp_path):
    outs = []
    for k in range(2):
        p = tmp_path / f"s{k}.csv"
        j = tmp_path / f"s{k}.json"
        run("sweep", "--strategy", "joint", "--n-list", "2", "5", "--power", "1", "--eta", "2",
            "--seed", "3", "--out", str(p))
        run("solve", "--n", "5", "--strategy", "pa-np", "--seed", "3", "--json", str(j))
        outs.append((p.read_bytes(), j.read_bytes(),
                     (tmp_path / f"s{k}.csv.meta.json").read_bytes()))
    assert outs[0] == outs[1]


def test_config_file_and_overrides(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"n": 2, "eta": 2, "power": 1, "strategy": "PA"}))
    code, out, _ = run("solve", "--config", str(cfg))
    assert code == EXIT_OK and "strategy: PA" in out
    code, out, _ = run("solve", "--config", str(cfg), "--strategy", "BR")
    assert code == EXIT_OK and "strategy: BR" in out


@pytest.mark.parametrize("content,key", [
    ({"n": 2, "colour": "red"}, "colour"), ({"n": "two"}, "n"), ({"total_power": [1, 2]}, "total_power")])
def test_bad_config_names_key(tmp_path, content, key):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps(content))
    code, _, err = run("solve", "--config", str(cfg))
    assert code == EXIT_USAGE and repr(key) in err


def test_unreadable_and_malformed_config(tmp_path):
    assert run("solve", "--config", str(tmp_path / "nope.json"))[0] == EXIT_USAGE
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run("solve", "--config", str(bad))[0] == EXIT_USAGE


def test_usage_errors():
    assert run()[0] == EXIT_USAGE
    assert run("solve", "--n", "0")[0] == EXIT_USAGE
    assert run("solve", "--strategy", "magic")[0] == EXIT_USAGE
    assert run("launch")[0] == EXIT_USAGE
    assert run("solve", "--eta", "1")[0] == EXIT_USAGE


def test_nonconvergence_exit_code():
    code, out, _ = run("solve", "--n", "5", "--strategy", "ta", "--max-iterations", "3")
    assert code == EXIT_NONCONVERGED and "converged=no" in out


def test_output_dir_env(tmp_path, monkeypatch):
    monkeypatch.setenv("TDMFAIR_OUTPUT_DIR", str(tmp_path / "outdir"))
    code, _, _ = run("solve", "--n", "2", "--json", "r.json")
    assert code == EXIT_OK
    assert (tmp_path / "outdir" / "r.json").exists()


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "tdmfair", "solve", "--n", "2", "--strategy", "pa"],
                         capture_output=True, text=True)
    assert out.returncode == 0 and "0.293893332" in out.stdout
