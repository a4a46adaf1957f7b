import io
import json
from pathlib import Path

import pytest

from covert_game.cli import (CheckResult, RunConfig, _format_loc,
                             emit_report, emit_summary_csv,
                             emit_trajectory_csv, main, parse_scenario)
from covert_game.engine import (Trajectory, initial_state, run_monte_carlo,
                                step_game)
from covert_game.errors import ScenarioSchemaError
from covert_game.presets import binary_document, load_preset, preset_document

SCENARIO_FILE = Path(__file__).resolve().parent.parent / "scenarios" / "example_sec4.json5"


def write_document(tmp_path, document) -> str:
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(document), encoding="utf-8")
    return str(path)


# === parse_scenario ===

def test_parse_preset_document():
    s = parse_scenario(preset_document("example_sec4"))
    assert s.channel.matrix[0][0] == 0.55
    assert s.initial_belief_malicious == 0.15
    alpha = max(v for t, x, a, r, v in s.utilities.receiver if t.value == "malicious")
    assert alpha == pytest.approx(0.176471, abs=1e-6)


def test_bundled_file_matches_preset():
    s = parse_scenario(SCENARIO_FILE.read_text(encoding="utf-8"))
    assert s.fingerprint == load_preset("example_sec4").fingerprint


def test_non_stochastic_row_names_the_row():
    document = binary_document()
    document["channel"][0] = [0.5, 0.4]
    with pytest.raises(ScenarioSchemaError) as info:
        parse_scenario(json.dumps(document))
    assert ("channel[0]" in [path for path, _ in info.value.errors])


def test_missing_benign_action():
    document = binary_document()
    del document["benign_action"]
    with pytest.raises(ScenarioSchemaError) as info:
        parse_scenario(json.dumps(document))
    assert [path for path, _ in info.value.errors] == ["benign_action"]


def test_unknown_symbol_in_system_map():
    document = binary_document()
    document["system_map"][1] = [0, 7, 1]
    with pytest.raises(ScenarioSchemaError) as info:
        parse_scenario(json.dumps(document))
    paths = [path for path, _ in info.value.errors]
    assert "system_map[1]" in paths


def test_unparseable_document():
    with pytest.raises(ScenarioSchemaError) as info:
        parse_scenario("{ channel: [")
    assert info.value.errors[0][0] == "$"


def test_pydantic_locations_become_document_paths():
    assert _format_loc(("utilities", "sender", 3, 0)) == "utility_sender[3][0]"
    assert _format_loc(("channel", "matrix", 1, 0)) == "channel[1][0]"
    assert _format_loc(("inputs", "pmf")) == "input_pmf"
    assert _format_loc(()) == "$"


def test_run_config_needs_one_source():
    with pytest.raises(ValueError):
        RunConfig(command="run")
    with pytest.raises(ValueError):
        RunConfig(command="run", preset="example_sec4", scenario="x.json")
    assert RunConfig(command="verify", preset="example_sec4").seeds == 10


# === emisión ===

def test_empty_trajectory_is_header_only():
    sink = io.StringIO()
    written = emit_trajectory_csv(Trajectory(initial_belief=0.15, benign_action=0, horizon=0), sink)
    assert sink.getvalue() == "k,u,action,x,y,pi_true_m,pi_hat_m,reaction,fixed_point\n"
    assert written == len(sink.getvalue())


def test_forced_step_row(scenario):
    _, record = step_game(initial_state(scenario, 0), scenario, forced_u=0, forced_y=1)
    t = Trajectory(initial_belief=0.15, benign_action=0, horizon=1, records=[record])
    first, second = io.StringIO(), io.StringIO()
    emit_trajectory_csv(t, first)
    emit_trajectory_csv(t, second)
    row = first.getvalue().splitlines()[1]
    assert row.startswith("0,0,1,1,1,0.177419354839,0.154356346")
    assert row.endswith(",0,1")
    assert first.getvalue() == second.getvalue()


def test_summary_csv_shape(scenario):
    summary = run_monte_carlo(scenario, 2, base_seed=1, horizon=10)
    sink = io.StringIO()
    emit_summary_csv(summary, sink)
    lines = sink.getvalue().splitlines()
    assert lines[0] == "k,pi_hat_m,emp_mean_pi_true_m,emp_var"
    assert len(lines) == 11
    assert lines[1].startswith("0,0.154356346")


def test_report_escapes_commas():
    sink = io.StringIO()
    emit_report([CheckResult(check="a", status="info", detail="x, y")], sink)
    assert sink.getvalue() == "check,status,detail\na,info,x; y\n"


# === comandos ===

def test_run_is_byte_identical(tmp_path):
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["run", "--preset", "example_sec4", "--seed", "42", "--out", str(first)]) == 0
    assert main(["run", "--preset", "example_sec4", "--seed", "42", "--out", str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()
    assert len(first.read_text().splitlines()) == 501


def test_verify_preset_passes(capsys):
    assert main(["verify", "--preset", "example_sec4"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "check,status,detail"
    statuses = dict(line.split(",", 2)[:2] for line in lines[1:])
    assert "fail" not in statuses.values()
    for check in ("assumptions", "monotonicity", "g_factor_sweep", "oracle_equivalence", "single_crossing"):
        assert statuses[check] == "pass"


def test_verify_reports_violated_assumption(tmp_path, capsys):
    path = write_document(tmp_path, binary_document(lam=0.5))
    assert main(["verify", "--scenario", path]) == 1
    out = capsys.readouterr().out
    assert "assumptions,fail,channel_informativeness" in out


def test_run_refuses_invalid_scenario(tmp_path, capsys):
    path = write_document(tmp_path, binary_document(lam=0.5))
    assert main(["run", "--scenario", path]) == 1
    assert "channel_informativeness" in capsys.readouterr().err


def test_montecarlo_command(capsys):
    assert main(["montecarlo", "--preset", "example_sec4", "--trials", "3", "--horizon", "20"]) == 0
    assert len(capsys.readouterr().out.splitlines()) == 21


def test_oracle_command(capsys):
    assert main(["oracle", "--preset", "example_sec4"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "k,pi_hat_recursive,pi_hat_oracle,abs_diff"
    assert len(lines) == 7


def test_oracle_command_refuses_long_horizon():
    assert main(["oracle", "--preset", "example_sec4", "--horizon", "7"]) == 2


def test_schema_error_exit_code(tmp_path, capsys):
    document = binary_document()
    document["input_pmf"] = [0.7, 0.7]
    path = write_document(tmp_path, document)
    assert main(["run", "--scenario", path]) == 2
    assert "input_pmf" in capsys.readouterr().err


def test_usage_errors():
    assert main(["run"]) == 2
    assert main(["run", "--preset", "missing"]) == 2
    assert main(["run", "--preset", "example_sec4", "--tol", "-1"]) == 2
    with pytest.raises(SystemExit) as info:
        main(["run", "--preset", "example_sec4", "--scenario", "x.json"])
    assert info.value.code == 2


@pytest.mark.slow
def test_verify_verdict_stable_over_wide_sweep(capsys):
    assert main(["verify", "--preset", "example_sec4", "--seeds", "100"]) == 0
