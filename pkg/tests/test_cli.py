"""Config parsing, artifact layout, CLI verbs, and exit codes."""

import json
import xml.etree.ElementTree as ET

import pytest
from click.testing import CliRunner

from loopsim.cli import (
    ScenarioParseError,
    ScenarioValidationError,
    builtin_scenarios,
    emit_scenarios,
    parse_scenarios,
    run_scenario,
)
from loopsim.cli.main import main

MINIMAL = """
[meta]
schema = 1

[scenario:tiny]
kind = run
mode = ABSTRACT
psi_kind = GATED
gamma_true = 10
gain_lo = 0
gain_hi = 10
update_kind = DELTA_MONOTONE
delta = 1.0
gamma = 10
initial_norm = 11
horizon = 50
seed = 1
outputs = csv,json,svg
checks = drift
"""


class TestParsing:
    def test_minimal_file(self):
        scenarios = parse_scenarios(MINIMAL)
        assert len(scenarios) == 1
        assert scenarios[0].name == "tiny"
        assert scenarios[0].checks == ("drift",)

    def test_missing_meta(self):
        with pytest.raises(ScenarioParseError):
            parse_scenarios("[scenario:x]\nkind = run\n")

    def test_wrong_schema(self):
        with pytest.raises(ScenarioParseError):
            parse_scenarios("[meta]\nschema = 99\n\n[scenario:x]\nkind = run\n")

    def test_bad_number_names_field(self):
        bad = MINIMAL.replace("delta = 1.0", "delta = fast")
        with pytest.raises(ScenarioParseError, match="delta"):
            parse_scenarios(bad)

    def test_negative_beta_entry_is_a_validation_error(self):
        text = """
[meta]
schema = 1

[scenario:bad]
kind = swarm
k = 2
beta = 0 -0.5; 0.5 0
lam = 1,1
gamma = 10
"""
        with pytest.raises(ScenarioValidationError, match="nonnegative"):
            parse_scenarios(text)

    def test_duplicate_names_rejected(self):
        text = MINIMAL + "\n[scenario:tiny]\nkind = run\ngamma = 1\nhorizon = 1\n"
        with pytest.raises((ScenarioParseError, ScenarioValidationError)):
            parse_scenarios(text)

    def test_sweep_expansion(self):
        text = MINIMAL + "sweep_gamma = 5,10,20\n"
        scenario = parse_scenarios(text.replace("gamma = 10", "gamma = 5"))[0]
        points = list(scenario.sweep_points())
        assert len(points) == 3
        assert points[0][0] == "gamma=5"

    def test_unknown_check_rejected(self):
        bad = MINIMAL.replace("checks = drift", "checks = vibes")
        with pytest.raises(ScenarioValidationError, match="vibes"):
            parse_scenarios(bad)


class TestRoundTrip:
    def test_builtin_scenarios_round_trip(self):
        builtins = builtin_scenarios()
        text = emit_scenarios(builtins)
        assert parse_scenarios(text) == builtins


class TestArtifacts:
    def run_tiny(self, tmp_path):
        scenario = parse_scenarios(MINIMAL)[0]
        summary = run_scenario(scenario, tmp_path)
        return scenario, summary

    def test_artifact_files_exist(self, tmp_path):
        scenario, summary = self.run_tiny(tmp_path)
        rundir = tmp_path / "tiny"
        assert (rundir / "base__seed1.csv").exists()
        assert (rundir / "base__seed1.svg").exists()
        assert (tmp_path / "tiny.summary.json").exists()
        assert summary["failures"] == 0

    def test_csv_schema_stability(self, tmp_path):
        self.run_tiny(tmp_path)
        header = (tmp_path / "tiny" / "base__seed1.csv").read_text().splitlines()[0]
        assert header == "t,norm,omega,delta,epsilon_t,flops,events"

    def test_svg_is_valid_xml_with_one_polyline(self, tmp_path):
        self.run_tiny(tmp_path)
        root = ET.fromstring((tmp_path / "tiny" / "base__seed1.svg").read_text())
        polylines = root.findall(".//{http://www.w3.org/2000/svg}polyline")
        assert len(polylines) == 1

    def test_rerun_is_byte_identical(self, tmp_path):
        scenario = parse_scenarios(MINIMAL)[0]
        run_scenario(scenario, tmp_path / "a")
        run_scenario(scenario, tmp_path / "b")
        csv_a = (tmp_path / "a" / "tiny" / "base__seed1.csv").read_bytes()
        csv_b = (tmp_path / "b" / "tiny" / "base__seed1.csv").read_bytes()
        assert csv_a == csv_b

    def test_parallel_jobs_match_serial(self, tmp_path):
        text = MINIMAL + "sweep_gamma = 8,10\n"
        scenario = parse_scenarios(text)[0]
        serial = run_scenario(scenario, tmp_path / "serial", jobs=1)
        parallel = run_scenario(scenario, tmp_path / "parallel", jobs=2)
        assert serial["runs"] == parallel["runs"]


class TestBuiltins:
    def test_onebit_trace(self, tmp_path):
        scenario = [s for s in builtin_scenarios() if s.name == "onebit"][0]
        summary = run_scenario(scenario, tmp_path)
        csv_path = tmp_path / "onebit" / "base__seed1.csv"
        rows = csv_path.read_text().splitlines()[1:]
        assert len(rows) == 32
        assert all(row.split(",")[1] == "1" for row in rows)  # 1-bit context
        assert summary["failures"] == 0

    def test_tokens_classification_contrast(self, tmp_path):
        scenario = [s for s in builtin_scenarios() if s.name == "tokens"][0]
        summary = run_scenario(scenario, tmp_path)
        by_label = {e["label"]: e for e in summary["runs"]}
        hot = by_label["temperature=1.0"]
        cold = by_label["temperature=0.0"]
        assert hot["classification"] == "DIVERGENT"
        assert cold["classification"] == "CONVERGED"
        assert cold["checks"][0]["detail"]["fixed_point_step"] <= 2

    def test_prototype_histories(self, tmp_path):
        scenario = [s for s in builtin_scenarios() if s.name == "prototype"][0]
        summary = run_scenario(scenario, tmp_path)
        statuses = {v["name"]: v["status"] for v in summary["runs"][0]["checks"]}
        assert statuses["prototype_overwrite_binary"] == "PASS"
        assert statuses["prototype_cumulative_monotone"] == "PASS"


class TestConjecture:
    def test_fit_fields_and_point_count(self):
        from loopsim.cli import conjecture_experiment
        scenario = [s for s in builtin_scenarios()
                    if s.name == "conjecture_log"][0]
        fit = conjecture_experiment(scenario)
        assert len(fit["points"]) == 5
        assert fit["slope"] > 0.0
        assert fit["r_squared"] > 0.9
        assert 0.0 <= fit["r_squared"] <= 1.0

    def test_flat_control_has_no_trend(self):
        from loopsim.cli import conjecture_experiment
        scenario = [s for s in builtin_scenarios()
                    if s.name == "conjecture_flat"][0]
        fit = conjecture_experiment(scenario)
        assert abs(fit["slope"]) < 0.5

    def test_needs_three_distinct_budgets(self):
        from loopsim.cli import conjecture_experiment
        base = [s for s in builtin_scenarios() if s.name == "conjecture_log"][0]
        fields = dict(base.fields)
        fields["budgets"] = "100,100,100"
        import dataclasses
        bad = dataclasses.replace(base, fields=tuple(sorted(fields.items())))
        with pytest.raises(ValueError, match="3 distinct"):
            conjecture_experiment(bad)


class TestCliVerbs:
    def test_run_exit_zero(self, tmp_path):
        result = CliRunner().invoke(
            main, ["run", "builtin", "--scenario", "drift",
                   "--out", str(tmp_path)])
        assert result.exit_code == 0

    def test_run_failure_exits_one(self, tmp_path):
        config = tmp_path / "fail.ini"
        config.write_text(MINIMAL.replace("initial_norm = 11",
                                          "initial_norm = 0"))
        result = CliRunner().invoke(
            main, ["run", str(config), "--out", str(tmp_path / "out")])
        assert result.exit_code == 1

    def test_parse_error_exits_two(self, tmp_path):
        config = tmp_path / "bad.ini"
        config.write_text("[meta]\nschema = 1\n\n[scenario:x]\nkind = run\n"
                          "gamma = nope\nhorizon = 1\n")
        result = CliRunner().invoke(
            main, ["run", str(config), "--out", str(tmp_path / "out")])
        assert result.exit_code == 2

    def test_missing_config_exits_two(self):
        result = CliRunner().invoke(main, ["run", "/does/not/exist.ini"])
        assert result.exit_code == 2

    def test_unknown_scenario_exits_two(self):
        result = CliRunner().invoke(
            main, ["run", "builtin", "--scenario", "nonesuch"])
        assert result.exit_code == 2

    def test_audit_verb(self, tmp_path):
        result = CliRunner().invoke(
            main, ["audit", "length", "--samples", "500",
                   "--out", str(tmp_path)])
        assert result.exit_code == 0
        doc = json.loads((tmp_path / "length.audit.json").read_text())
        assert doc["verdicts"][0]["status"] == "PASS"

    def test_gamma_star_verb(self):
        result = CliRunner().invoke(
            main, ["gamma-star", "builtin", "--scenario", "tightness"])
        assert result.exit_code == 0
        doc = json.loads(result.output)
        assert abs(doc["gamma_star"] - 50.0) <= 2.5

    def test_conjecture_needs_budget_grid(self):
        result = CliRunner().invoke(
            main, ["conjecture", "builtin", "--scenario", "drift"])
        assert result.exit_code == 2

    def test_report_aggregates_and_exits(self, tmp_path):
        CliRunner().invoke(main, ["run", "builtin", "--scenario", "drift",
                                  "--out", str(tmp_path)])
        result = CliRunner().invoke(main, ["report", str(tmp_path)])
        assert result.exit_code == 0
        assert "drift" in result.output
        assert "0 failures" in result.output

    def test_documented_counterexamples_do_not_fail_the_report(self, tmp_path):
        CliRunner().invoke(main, ["audit", "compression_gain",
                                  "--samples", "1000", "--out", str(tmp_path)])
        result = CliRunner().invoke(main, ["report", str(tmp_path)])
        assert result.exit_code == 0
        assert "COUNTEREXAMPLE FOUND (documented)" in result.output

    def test_report_flags_failures(self, tmp_path):
        config = tmp_path / "fail.ini"
        config.write_text(MINIMAL.replace("initial_norm = 11",
                                          "initial_norm = 0"))
        CliRunner().invoke(main, ["run", str(config),
                                  "--out", str(tmp_path / "out")])
        result = CliRunner().invoke(main, ["report", str(tmp_path / "out")])
        assert result.exit_code == 1
        assert "FAIL" in result.output
