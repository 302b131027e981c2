import csv
import json
import subprocess
import sys

import pytest

from susymembrane import cli


def test_minimal_flags_fill_defaults():
    cfg = cli.parse_config(["spectrum", "--L", "6", "--n", "96", "--k", "4"])
    assert cfg["L"] == 6.0 and cfg["n"] == 96 and cfg["k"] == 4
    assert cfg["tol"] == 1e-8 and cfg["seed"] == 42


def test_odd_n_names_key():
    with pytest.raises(cli.ConfigError, match=r"n: n must be an even integer"):
        cli.parse_config(["spectrum", "--n", "97"])


@pytest.mark.parametrize("argv, key", [
    (["spectrum", "--L", "-1"], "L"),
    (["spectrum", "--k", "0"], "k"),
    (["spectrum", "--bc", "periodic"], "bc"),
    (["spectrum", "--operator", "X"], "operator"),
    (["spectrum", "--tol", "abc"], "tol"),
    (["region-scan", "--region", "V"], "region"),
    (["verify-identity", "--eps-sequence", "0.1,0.5"], "eps_sequence"),
    (["bracketing", "--schedule", "32,64"], "schedule"),
    (["oscillator-bound", "--a", "2,1"], "a"),
])
def test_out_of_range_values(argv, key):
    with pytest.raises(cli.ConfigError, match=key):
        cli.parse_config(argv)


def test_unknown_key_in_file(tmp_path):
    p = tmp_path / "c.ini"
    p.write_text("[spectrum]\nwidth = 3\n")
    with pytest.raises(cli.ConfigError, match="width"):
        cli.parse_config(["spectrum", "--config", str(p)])


def test_unknown_section(tmp_path):
    p = tmp_path / "c.ini"
    p.write_text("[plot]\nL = 3\n")
    with pytest.raises(cli.ConfigError, match="plot"):
        cli.parse_config(["spectrum", "--config", str(p)])


def test_key_of_other_command_rejected(tmp_path):
    p = tmp_path / "c.ini"
    p.write_text("[spectrum]\neps = 0.1\n")
    with pytest.raises(cli.ConfigError, match="eps"):
        cli.parse_config(["spectrum", "--config", str(p)])


def test_flag_overrides_file(tmp_path):
    p = tmp_path / "c.ini"
    p.write_text("[bracketing]\nM = 1.0\nL = 4\n[spectrum]\nL = 2\n")
    cfg = cli.parse_config(["bracketing", "--config", str(p), "--M", "2"])
    assert cfg["M"] == 2.0 and cfg["L"] == 4.0
    assert cfg.sources["M"] == {"file": 1.0, "flag": 2.0}
    assert cfg.sources["L"] == {"file": 4.0}


@pytest.mark.parametrize("argv", [
    ["spectrum", "--L", "3.5", "--n", "28", "--operator", "H_M", "--M", "1.25"],
    ["region-scan", "--M", "1,2,3", "--region", "II", "--C", "0.7"],
    ["zero-mode-scan", "--L", "4,6"],
    ["verify-algebra", "--supertrace", "true", "--output", "out.json"],
    ["verify-identity", "--eps-sequence", "0.3,0.1,0"],
    ["oscillator-bound", "--y0", "1,4"],
])
def test_round_trip(argv):
    cfg = cli.parse_config(argv)
    assert cli.parse_config_text(cli.emit_config(cfg), cfg.command) == cfg


def test_verify_algebra_smoke(tmp_path, capsys):
    out = tmp_path / "r.json"
    code = cli.main(["verify-algebra", "--L", "2", "--n", "16", "--output", str(out)])
    assert code == 0
    body = json.loads(out.read_text())
    assert set(body) >= {"config", "checks", "tables", "timings", "timestamp"}
    assert all(c["passed"] for c in body["checks"])
    assert all(c["measured_defect"] <= 1e-12 for c in body["checks"])
    assert body["config"]["L"] == 2.0


def test_region_scan_csv(tmp_path):
    out = tmp_path / "r.csv"
    code = cli.main(["region-scan", "--M", "1,2", "--region", "II", "--L", "6", "--n", "48",
                     "--format", "csv", "--output", str(out)])
    assert code == 0
    rows = list(csv.reader(out.read_text().splitlines()))
    assert rows[0] == ["M", "region", "lambda_min", "residual", "boundary_fraction", "C_hat"]
    assert [r[0] for r in rows[1:]] == ["1.0", "2.0"]
    assert all(float(r[2]) > 0 for r in rows[1:])


def test_forced_failure_exit_1(tmp_path):
    out = tmp_path / "r.json"
    code = cli.main(["region-scan", "--M", "0.1", "--region", "II", "--L", "8", "--n", "160", "--output", str(out)])
    assert code == 1
    body = json.loads(out.read_text())
    assert body["checks"][0]["passed"] is False


def test_config_error_exit_2(capsys):
    assert cli.main(["spectrum", "--n", "97"]) == 2
    assert "n must be an even integer" in capsys.readouterr().err


def test_runtime_error_exit_2_with_partial_report(tmp_path):
    out = tmp_path / "r.json"
    # M = 0.3 is not a multiple of h = 0.25: the run fails after parsing
    code = cli.main(["region-scan", "--M", "0.3", "--L", "4", "--n", "32", "--output", str(out)])
    assert code == 2
    body = json.loads(out.read_text())
    assert "multiple of h" in body["error"]


def test_spectrum_converged_exit_0(tmp_path):
    out = tmp_path / "s.json"
    assert cli.main(["spectrum", "--L", "3", "--n", "24", "--k", "2", "--output", str(out)]) == 0
    body = json.loads(out.read_text())
    rows = body["tables"]["spectrum"]["rows"]
    assert len(rows) == 2 and all(r[3] for r in rows)


def test_spectrum_k_too_large(tmp_path):
    out = tmp_path / "s.json"
    assert cli.main(["spectrum", "--L", "1", "--n", "4", "--k", "40", "--output", str(out)]) == 2


def test_rerun_is_identical_modulo_time(tmp_path):
    bodies = []
    out = tmp_path / "r.json"
    for _ in range(2):
        cli.main(["bracketing", "--L", "4", "--M", "1", "--schedule", "16,32,64", "--output", str(out)])
        body = json.loads(out.read_text())
        body.pop("timestamp")
        body.pop("timings")
        bodies.append(json.dumps(body, sort_keys=True))
    assert bodies[0] == bodies[1]


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "susymembrane", "verify-algebra", "--L", "2", "--n", "16"],
                       capture_output=True, text=True)
    assert r.returncode == 0
    assert json.loads(r.stdout)["passed"] is True
