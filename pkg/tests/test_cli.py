from __future__ import annotations

import json
import math

import pytest

from swingbench import cli
from swingbench.config import THREADS_ENV_VAR


def run_json(capsys, *argv):
    code = cli.run(list(argv))
    captured = capsys.readouterr()
    payload = json.loads(captured.out) if captured.out.strip() else None
    return code, payload, captured.err


def norm_entry(payload, output):
    return next(entry for entry in payload["norms"] if entry["output"] == output)


def test_analyze_complete_graph(capsys):
    code, payload, _ = run_json(capsys, "analyze", "--net", "complete:3", "--M", "1", "--D", "1")
    assert code == 0
    assert payload["command"] == "analyze"
    assert payload["input"]["n"] == 3
    assert [entry["output"] for entry in payload["norms"]] == ["phase", "edge-phase", "frequency", "combined"]

    eigen = payload["eigen"]
    assert [mode["index"] for mode in eigen["modes"]] == [1, 2, 3]
    assert eigen["zeta_min"] == pytest.approx(1.0 / (2.0 * math.sqrt(3.0)))
    assert eigen["pole_match_error"] < 1e-10

    phase = norm_entry(payload, "phase")
    assert phase["hinf"]["closed_form"] == pytest.approx(2.0 * math.sqrt(3.0) / math.sqrt(11.0), rel=1e-12)
    assert phase["hinf"]["oracle"] == pytest.approx(phase["hinf"]["closed_form"], rel=1e-9)
    assert phase["hinf"]["governing_mode"] == 2
    assert phase["hinf"]["discrepancy"] is False

    assert phase["h2"]["closed_form"] == pytest.approx(math.sqrt(1.5))
    assert phase["h2"]["annotations"]["modal_h2"] == pytest.approx(1.0)
    assert phase["h2"]["oracle"] == pytest.approx(1.0)
    assert phase["h2"]["discrepancy"] is True
    assert phase["h2"]["known_discrepancy"] is True

    frequency = norm_entry(payload, "frequency")
    assert frequency["h2"]["oracle"] ** 2 == pytest.approx(1.5)
    assert frequency["hinf"]["closed_form"] == 1.0
    assert frequency["hinf"]["governing_mode"] == 1

    combined = norm_entry(payload, "combined")
    assert combined["h2"]["closed_form"] is None
    assert combined["h2"]["oracle"] > 0


def test_strict_flags_known_gap_unless_allowed(capsys):
    code, _, err = run_json(capsys, "norms", "--net", "complete:3", "--output", "phase", "--strict")
    assert code == 3
    line = json.loads(err.strip().splitlines()[-1])
    assert line["error"] == "Discrepancy"
    assert line["flagged"] == ["phase.h2"]

    code, _, _ = run_json(
        capsys, "norms", "--net", "complete:3", "--output", "phase", "--strict", "--allow-known-discrepancies"
    )
    assert code == 0


def test_strict_passes_for_frequency_output(capsys):
    code, payload, _ = run_json(capsys, "norms", "--net", "path:5", "--output", "frequency", "--strict")
    assert code == 0
    assert payload["norms"][0]["h2"]["discrepancy"] is False


def test_smib_command(capsys):
    code, payload, _ = run_json(capsys, "smib", "--M", "1", "--D", "1", "--B", "1")
    assert code == 0
    norms = payload["norms"][0]
    assert norms["h2"]["closed_form"] == pytest.approx(math.sqrt(0.5), rel=1e-15)
    assert norms["hinf"]["closed_form"] == pytest.approx(2.0 / math.sqrt(3.0), rel=1e-15)
    assert norms["hinf"]["regime"] == "underdamped-branch"
    assert payload["details"]["omega_peak"] == pytest.approx(math.sqrt(0.5))


def test_smib_overdamped(capsys):
    code, payload, _ = run_json(capsys, "smib", "--M", "0.1", "--D", "1", "--B", "1", "--strict")
    assert code == 0
    assert payload["norms"][0]["hinf"]["closed_form"] == 1.0
    assert payload["norms"][0]["hinf"]["regime"] == "overdamped-branch"


def test_smib_rejects_zero_damping(capsys):
    code, payload, err = run_json(capsys, "smib", "--M", "1", "--D", "0", "--B", "1")
    assert code == 2
    assert payload is None
    line = json.loads(err.strip().splitlines()[-1])
    assert line["error"] == "NonPositiveParameter"


def test_missing_network_is_an_input_error(capsys):
    code, _, err = run_json(capsys, "norms", "--M", "1", "--D", "1")
    assert code == 2
    assert json.loads(err.strip().splitlines()[-1])["error"] == "ValidationError"


def test_disconnected_network_file(tmp_path, capsys):
    path = tmp_path / "split.json"
    path.write_text(
        json.dumps({"n": 4, "edges": [{"i": 0, "j": 1, "b": 1.0}, {"i": 2, "j": 3, "b": 1.0}]}), encoding="utf-8"
    )
    code, _, err = run_json(capsys, "analyze", "--net", str(path))
    assert code == 2
    line = json.loads(err.strip().splitlines()[-1])
    assert line["error"] == "DisconnectedGraph"
    assert "lambda2" in line["message"]


def test_unknown_option_is_a_usage_error(capsys):
    code, _, _ = run_json(capsys, "norms", "--net", "complete:3", "--bogus")
    assert code == 2


def test_bad_choice_and_missing_option_exit_2(capsys):
    code, payload, err = run_json(capsys, "norms", "--net", "complete:3", "--output", "bogus")
    assert code == 2
    assert payload is None
    line = json.loads(err.strip().splitlines()[-1])
    assert line["error"] == "BadParameter"

    code, _, err = run_json(capsys, "smib", "--M", "1")
    assert code == 2
    assert json.loads(err.strip().splitlines()[-1])["error"] == "MissingParameter"


def test_bode_csv_is_byte_identical(tmp_path, capsys):
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (first, second):
        code, payload, _ = run_json(
            capsys, "bode", "--net", "complete:3", "--points", "50", "--out", str(out)
        )
        assert code == 0
        assert payload["artifacts"]["bode"] == str(out)
    assert first.read_bytes() == second.read_bytes()
    lines = first.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "omega,sigma_max"
    assert len(lines) == 51
    assert payload["details"]["peak_sigma_max"] <= 2.0 * math.sqrt(3.0) / math.sqrt(11.0) * (1 + 1e-12)


def test_bode_without_out_embeds_table(capsys):
    code, payload, _ = run_json(capsys, "bode", "--M", "1", "--D", "1", "--B", "1", "--points", "5")
    assert code == 0
    table = payload["details"]["bode"]
    assert table["header"] == ["omega", "sigma_max"]
    assert len(table["rows"]) == 5


def test_rootlocus_smib(tmp_path, capsys):
    out = tmp_path / "locus.csv"
    code, _, _ = run_json(
        capsys, "rootlocus", "--D", "1", "--B", "1", "--M-min", "0.01", "--M-max", "100", "--points", "5", "--out", str(out)
    )
    assert code == 0
    lines = out.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "M,mode,re1,im1,re2,im2"
    last = [float(v) for v in lines[-1].split(",")]
    assert last[0] == pytest.approx(100.0)
    assert math.hypot(last[2], last[3]) == pytest.approx(0.1, rel=1e-12)


def test_sweep_writes_kink_and_poles(tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    code, payload, _ = run_json(
        capsys,
        "sweep", "--net", "complete:3", "--param", "M", "--min", "0.01", "--max", "10", "--points", "40",
        "--metrics", "h2-closed,h2-oracle,hinf-closed,hinf-oracle,eigenvalues", "--out", str(out),
    )
    assert code == 0
    assert payload["details"]["kink"] == pytest.approx(1.0 / 6.0)
    assert all(check["passed"] for check in payload["details"]["shape_checks"])
    lines = out.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "param,value,h2_closed,h2_oracle,hinf_closed,hinf_oracle,regime,zeta_min,oracle_row"
    assert len(lines) == 42
    poles = tmp_path / "sweep_poles.csv"
    assert payload["artifacts"]["poles"] == str(poles)
    assert poles.read_text(encoding="utf-8").splitlines()[0] == "value,mode,re1,im1,re2,im2"


def test_sweep_output_does_not_depend_on_threads(tmp_path, capsys, monkeypatch):
    outputs = []
    for threads in ("1", "3"):
        monkeypatch.setenv(THREADS_ENV_VAR, threads)
        out = tmp_path / f"sweep_{threads}.csv"
        code, _, _ = run_json(
            capsys, "sweep", "--net", "cycle:5", "--param", "D", "--min", "0.1", "--max", "10", "--points", "30",
            "--out", str(out),
        )
        assert code == 0
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1]


def test_sweep_rejects_unknown_metric(capsys):
    code, _, err = run_json(
        capsys, "sweep", "--net", "complete:3", "--min", "0.1", "--max", "1", "--metrics", "h3-closed"
    )
    assert code == 2
    assert "h3-closed" in err


def test_combined_tradeoff(capsys):
    code, payload, _ = run_json(
        capsys, "combined", "--net", "complete:3", "--kappa", "1", "--M-min", "0.1", "--M-max", "10", "--points", "12"
    )
    assert code == 0
    checks = {check["property"]: check for check in payload["details"]["shape_checks"]}
    assert checks["strictly-decreasing"]["column"] == "h2_oracle"
    assert checks["strictly-decreasing"]["passed"]
    assert checks["nondecreasing"]["passed"]
    assert payload["details"]["combined"]["header"] == ["M", "h2_oracle", "hinf_oracle"]


def test_validate_small_suite(capsys):
    code, payload, _ = run_json(capsys, "validate", "--count", "4", "--seed", "1", "--n-max", "6", "--impulse-every", "2")
    assert code == 0
    assert payload["details"]["passed"] is True
    assert payload["details"]["cases"] == 4


def test_config_file_changes_digits(tmp_path, capsys):
    config = tmp_path / "config.yaml"
    config.write_text("output:\n  significant_digits: 6\n", encoding="utf-8")
    code, payload, _ = run_json(capsys, "smib", "--M", "1", "--D", "1", "--B", "1", "--config", str(config))
    assert code == 0
    assert payload["norms"][0]["hinf"]["closed_form"] == 1.15470


def test_verbose_logs_go_to_stderr(capsys):
    code, payload, err = run_json(capsys, "norms", "--net", "complete:3", "--verbose")
    assert code == 0
    assert payload["command"] == "norms"
    assert "swingbench" in err
