import json
import math

import numpy as np
import pytest
from click.testing import CliRunner

from simplexflow import (
    ConfigError,
    DiagnosticsReport,
    config_from_dict,
    emit_report,
    run_scenario,
    validate_config,
)
from simplexflow.cli import main as cli_main


def qubit_config(**overrides):
    cfg = {
        "schema_version": 1,
        "id": "qubit",
        "n": 2,
        "hamiltonian": {"kernel": {"real": [[0.0, 1.0], [1.0, 0.0]]}},
        "initial_state": {"psi": {"real": [math.sqrt(0.9), math.sqrt(0.1)], "imag": [0.0, 0.0]}},
        "integrator": {"h": 1e-3, "steps": 200},
        "checks": ["realness", "normalization"],
        "seed": 42,
    }
    cfg.update(overrides)
    return cfg


class TestValidateConfig:
    def test_canonical_qubit_parses(self, tmp_path):
        path = tmp_path / "qubit.json"
        path.write_text(json.dumps(qubit_config()))
        cfg = validate_config(path)
        assert cfg.n == 2
        assert cfg.steps == 200
        assert cfg.scenario_id == "qubit"
        assert cfg.initial.is_normalized

    def test_non_hermitian_kernel_rejected(self):
        cfg = qubit_config(hamiltonian={"kernel": {"real": [[0.0, 1.0], [0.0, 0.0]]}})
        with pytest.raises(ConfigError) as excinfo:
            config_from_dict(cfg)
        assert any("not Hermitian" in msg for msg in excinfo.value.errors)

    def test_dimension_mismatch_names_both_fields(self):
        cfg = qubit_config(initial_state={"rho": [0.2, 0.3, 0.5], "pi": [0.0, 0.0]})
        with pytest.raises(ConfigError) as excinfo:
            config_from_dict(cfg)
        joined = " ".join(excinfo.value.errors)
        assert "initial_state.rho" in joined and "n = 2" in joined

    def test_zero_steps_rejected(self):
        cfg = qubit_config(integrator={"h": 1e-3, "steps": 0})
        with pytest.raises(ConfigError) as excinfo:
            config_from_dict(cfg)
        assert any("steps" in msg for msg in excinfo.value.errors)

    def test_exactly_one_state_form(self):
        cfg = qubit_config()
        cfg["initial_state"] = {
            "rho": [0.5, 0.5],
            "pi": [0.0, 0.0],
            "psi": {"real": [1.0, 0.0], "imag": [0.0, 0.0]},
        }
        with pytest.raises(ConfigError) as excinfo:
            config_from_dict(cfg)
        assert any("exactly one" in msg for msg in excinfo.value.errors)

    def test_unknown_check_listed(self):
        cfg = qubit_config(checks=["realness", "frobnicate"])
        with pytest.raises(ConfigError) as excinfo:
            config_from_dict(cfg)
        assert any("frobnicate" in msg for msg in excinfo.value.errors)

    def test_unpaired_linear_terms_rejected(self):
        cfg = qubit_config()
        cfg["hamiltonian"]["linear_bra"] = {"real": [1.0, 0.0]}
        with pytest.raises(ConfigError) as excinfo:
            config_from_dict(cfg)
        assert any("conjugate" in msg for msg in excinfo.value.errors)

    def test_mismatched_linear_pair_rejected(self):
        cfg = qubit_config()
        cfg["hamiltonian"]["linear_bra"] = {"real": [1.0, 0.0]}
        cfg["hamiltonian"]["linear_ket"] = {"real": [0.0, 1.0]}
        with pytest.raises(ConfigError) as excinfo:
            config_from_dict(cfg)
        assert any("conj(" in msg for msg in excinfo.value.errors)

    def test_unnormalized_initial_state_rejected(self):
        cfg = qubit_config(initial_state={"rho": [0.6, 0.5], "pi": [0.0, 0.0]})
        with pytest.raises(ConfigError) as excinfo:
            config_from_dict(cfg)
        assert any("sum to 1" in msg for msg in excinfo.value.errors)

    def test_errors_aggregate(self):
        cfg = qubit_config(
            integrator={"h": -1.0, "steps": 0},
            checks=["nope"],
            seed="not-an-int",
        )
        with pytest.raises(ConfigError) as excinfo:
            config_from_dict(cfg)
        assert len(excinfo.value.errors) >= 4

    def test_malformed_json_file(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError) as excinfo:
            validate_config(path)
        assert any("invalid JSON" in msg for msg in excinfo.value.errors)

    def test_schema_version_required(self):
        cfg = qubit_config()
        del cfg["schema_version"]
        with pytest.raises(ConfigError):
            config_from_dict(cfg)


class TestRunScenario:
    def test_qubit_scenario_all_checks_pass(self, tmp_path):
        cfg = config_from_dict(
            qubit_config(
                integrator={"h": 2e-4, "steps": 5000},
                checks=[
                    "realness", "normalization", "symplectic", "metric",
                    "complex_structure", "conservation", "bracket_commutator",
                    "ab_independence", "fs_consistency", "gauge_born",
                ],
            )
        )
        result = run_scenario(cfg, out_dir=tmp_path)
        assert result.exit_code == 0
        assert result.report["exit_ok"] is True
        lines = result.trajectory_path.read_text().splitlines()
        assert lines[0].startswith("step,tau,rho_1,rho_2,pi_1,pi_2,re_psi_1")
        assert len(lines) == 5002
        rho1 = np.array([float(line.split(",")[2]) for line in lines[1:]])
        assert rho1.max() - rho1.min() > 0.1  # population oscillates
        norm_defects = np.array([float(line.split(",")[-2]) for line in lines[1:]])
        assert norm_defects.max() <= 1e-10

    def test_nonlinear_control_expected_failure(self, tmp_path):
        cfg = config_from_dict(
            qubit_config(
                id="control",
                hamiltonian={
                    "kernel": {"real": [[0.0, 0.0], [0.0, 0.0]]},
                    "nonlinear": {"tag": "sum_rho_squared", "strength": 1.0},
                },
                initial_state={"rho": [0.5, 0.5], "pi": [0.0, 0.0]},
                checks=[
                    {"name": "metric", "expect_pass": False},
                    "symplectic",
                    "normalization",
                    "realness",
                ],
            )
        )
        result = run_scenario(cfg, out_dir=tmp_path)
        assert result.exit_code == 0
        by_name = {row["name"]: row for row in result.report["checks"]}
        assert by_name["metric"]["pass"] is False
        assert by_name["metric"]["ok"] is True
        assert by_name["symplectic"]["pass"] is True

    def test_unexpected_outcome_fails(self, tmp_path):
        cfg = config_from_dict(
            qubit_config(
                id="control2",
                hamiltonian={
                    "kernel": {"real": [[0.0, 0.0], [0.0, 0.0]]},
                    "nonlinear": {"tag": "quartic_psi", "strength": 1.0},
                },
                initial_state={"rho": [0.5, 0.5], "pi": [0.0, 0.0]},
                checks=["metric"],
            )
        )
        result = run_scenario(cfg, out_dir=tmp_path)
        assert result.exit_code == 1
        assert result.report["exit_ok"] is False

    def test_boundary_error_produces_error_record(self, tmp_path):
        cfg = config_from_dict(
            qubit_config(
                id="boundary",
                initial_state={"rho": [1.0 - 1e-9, 1e-9], "pi": [0.0, math.pi / 2]},
                integrator={"h": 1e-3, "steps": 50},
                checks=[],
            )
        )
        result = run_scenario(cfg, out_dir=tmp_path)
        assert result.exit_code == 2
        assert result.trajectory_path is None
        report = json.loads(result.report_path.read_text())
        assert report["error"]["type"] == "BoundaryError"
        assert report["exit_ok"] is False

    def test_byte_identical_outputs(self, tmp_path):
        cfg = config_from_dict(qubit_config(checks=["realness", "conservation", "bracket_commutator"],
                                            integrator={"h": 2.5e-4, "steps": 400}))
        first = run_scenario(cfg, out_dir=tmp_path / "a")
        second = run_scenario(cfg, out_dir=tmp_path / "b")
        assert first.trajectory_path.read_bytes() == second.trajectory_path.read_bytes()
        assert first.report_path.read_bytes() == second.report_path.read_bytes()

    def test_seed_override_changes_hash(self, tmp_path):
        cfg = config_from_dict(qubit_config(checks=[]))
        base = run_scenario(cfg, out_dir=tmp_path / "a")
        reseeded = run_scenario(cfg, out_dir=tmp_path / "b", seed_override=7)
        assert base.report["config_hash"] != reseeded.report["config_hash"]
        assert reseeded.report["seed"] == 7

    def test_csv_is_round_trip_safe(self, tmp_path):
        cfg = config_from_dict(qubit_config(checks=[], integrator={"h": 1e-3, "steps": 5}))
        result = run_scenario(cfg, out_dir=tmp_path)
        from simplexflow import integrate_midpoint

        trajectory = integrate_midpoint(cfg.hamiltonian, cfg.initial, cfg.h, cfg.steps)
        lines = result.trajectory_path.read_text().splitlines()
        last = lines[-1].split(",")
        n = cfg.n
        assert float(last[1]) == trajectory.parameter_values[-1]
        for i in range(n):
            assert float(last[2 + i]) == trajectory.points[-1].rho[i]
            assert float(last[2 + n + i]) == trajectory.points[-1].pi[i]

    def test_convergence_check_attaches_table(self, tmp_path):
        cfg = config_from_dict(
            qubit_config(
                checks=["convergence"],
                convergence={"h_list": [4e-3, 2e-3, 1e-3], "tau": 0.5},
            )
        )
        result = run_scenario(cfg, out_dir=tmp_path)
        assert result.exit_code == 0
        assert len(result.report["convergence"]) == 3
        assert 1.9 <= result.report["observed_order"] <= 2.1


class TestEmitReport:
    def test_empty_check_list(self, tmp_path):
        path = emit_report(DiagnosticsReport(scenario_id="empty"), tmp_path / "r.json")
        data = json.loads(path.read_text())
        assert data["checks"] == []
        assert data["scenario_id"] == "empty"
        assert "tool_version" in data

    def test_rows_have_required_keys(self, tmp_path):
        report = DiagnosticsReport(scenario_id="full")
        report.add("alpha", 1e-9, 1e-6)
        report.add("beta", 2.0, 1e-6)
        data = json.loads(emit_report(report, tmp_path / "r.json").read_text())
        for row in data["checks"]:
            assert set(row) == {"name", "residual", "tolerance", "pass"}
        assert data["checks"][0]["pass"] is True
        assert data["checks"][1]["pass"] is False

    def test_identical_bytes_for_identical_content(self, tmp_path):
        report = DiagnosticsReport(scenario_id="same")
        report.add("alpha", 1e-9, 1e-6)
        first = emit_report(report, tmp_path / "a.json").read_bytes()
        second = emit_report(report, tmp_path / "b.json").read_bytes()
        assert first == second


class TestCli:
    def write(self, tmp_path, name="scn.json", **overrides):
        path = tmp_path / name
        path.write_text(json.dumps(qubit_config(**overrides)))
        return path

    def test_validate_ok(self, tmp_path):
        path = self.write(tmp_path)
        result = CliRunner().invoke(cli_main, ["validate", str(path)])
        assert result.exit_code == 0
        assert "ok:" in result.output

    def test_validate_reports_every_error(self, tmp_path):
        path = self.write(tmp_path, integrator={"h": -1.0, "steps": 0})
        result = CliRunner().invoke(cli_main, ["validate", str(path)])
        assert result.exit_code == 2
        assert result.output.count("invalid:") >= 2

    def test_run_writes_outputs(self, tmp_path):
        path = self.write(tmp_path)
        out = tmp_path / "out"
        result = CliRunner().invoke(cli_main, ["run", str(path), "--out", str(out)])
        assert result.exit_code == 0, result.output
        assert (out / "qubit_trajectory.csv").exists()
        assert (out / "qubit_report.json").exists()
        assert "realness" in result.output

    def test_run_quiet(self, tmp_path):
        path = self.write(tmp_path)
        result = CliRunner().invoke(
            cli_main, ["run", str(path), "--out", str(tmp_path / "o"), "--quiet"]
        )
        assert result.exit_code == 0
        assert result.output == ""

    def test_run_config_error_exit_2(self, tmp_path):
        path = self.write(tmp_path, integrator={"h": 1e-3, "steps": 0})
        result = CliRunner().invoke(cli_main, ["run", str(path)])
        assert result.exit_code == 2

    def test_batch_runs_all(self, tmp_path):
        scenarios = tmp_path / "scenarios"
        scenarios.mkdir()
        self.write(scenarios, "a.json")
        self.write(scenarios, "b.json", seed=43)
        out = tmp_path / "batch_out"
        result = CliRunner().invoke(cli_main, ["batch", str(scenarios), "--out", str(out)])
        assert result.exit_code == 0, result.output
        assert (out / "a" / "qubit_report.json").exists()
        assert (out / "b" / "qubit_report.json").exists()

    def test_batch_empty_dir(self, tmp_path):
        empty = tmp_path / "none"
        empty.mkdir()
        result = CliRunner().invoke(cli_main, ["batch", str(empty)])
        assert result.exit_code == 2
