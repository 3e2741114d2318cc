import json

import pytest

from kolmolab import config as cfg
from kolmolab import harness
from kolmolab.acceptance import CriterionResult

SMALL_COERCIVITY = {"k_set": [2.0, 4.0], "n_max": 40, "s_grid": [0.0, 0.2, 0.4], "matrix_k": [2.0],
                    "matrix_s": [0.0], "N": 64, "operators_k": 2.0, "margin": 8}


def small_conf():
    c = cfg.defaults()
    c["coercivity"].update(SMALL_COERCIVITY)
    return c


class TestDigest:
    def test_stable_under_key_reordering(self):
        a = {"x": 1, "y": [1.0, 2.0], "z": {"p": 1, "q": 2}}
        b = {"z": {"q": 2, "p": 1}, "y": [1.0, 2.0], "x": 1}
        assert harness.config_digest(a) == harness.config_digest(b)

    def test_changes_with_values(self):
        assert harness.config_digest({"x": 1}) != harness.config_digest({"x": 2})


class TestExperimentOutputs:
    def test_coercivity_outputs_and_manifest(self, tmp_path):
        res = harness.run_experiment("coercivity", small_conf(), tmp_path)
        d = tmp_path / "coercivity"
        for name in ("sequence_minima.csv", "operator_identities.csv", "coercive_matrix.csv",
                     "min_slack_c.svg", "result.json", "manifest.json"):
            assert (d / name).exists(), name
        man = json.loads((d / "manifest.json").read_text())
        assert man["config_digest"] == res["config_digest"]
        assert set(man["outputs"]) >= {"sequence_minima.csv", "result.json"}
        assert set(res["criteria"]) == {"1", "2", "3"}

    def test_csv_bytes_are_deterministic(self, tmp_path):
        harness.run_experiment("coercivity", small_conf(), tmp_path / "a")
        harness.run_experiment("coercivity", small_conf(), tmp_path / "b")
        for name in ("sequence_minima.csv", "operator_identities.csv", "coercive_matrix.csv", "min_slack_c.svg"):
            a = (tmp_path / "a" / "coercivity" / name).read_bytes()
            b = (tmp_path / "b" / "coercivity" / name).read_bytes()
            assert a == b, name

    def test_unknown_experiment(self, tmp_path):
        with pytest.raises(KeyError):
            harness.run_experiment("weather", small_conf(), tmp_path)

    def test_seed_override_reaches_sections(self):
        conf = harness._apply_seed(cfg.defaults(), 17)
        assert conf["dns"]["seed"] == 17 and conf["linear_euler"]["seed"] == 17


class TestReport:
    def _result(self, name, number, passed):
        r = CriterionResult(number, f"title {number}", {"part": passed}, {"value": 1.0}, 0.1)
        return {"experiment": name, "config_digest": "abc", "criteria": {str(number): r.as_dict()}}

    def test_empty_suite_passes(self, tmp_path):
        rep = harness.build_report([], tmp_path)
        assert rep["status"] == "PASS" and rep["criteria"] == {}
        assert json.loads((tmp_path / "report.json").read_text())["schema"] == harness.REPORT_SCHEMA

    def test_failures_named_and_tagged(self, tmp_path):
        rep = harness.build_report([self._result("dns", 11, False), self._result("coercivity", 1, True)], tmp_path)
        assert rep["status"] == "FAIL" and rep["failing"] == [11]
        assert list(rep["criteria"]) == ["1", "11"]
        assert rep["criteria"]["11"]["experiment"] == "dns"
        assert rep["criteria"]["11"]["manifest"] == "dns/manifest.json"

    def test_run_suite_exit_codes(self, tmp_path, capsys):
        p = tmp_path / "c.toml"
        p.write_text("[suite]\nexperiments = []\n")
        assert harness.run_suite(p, tmp_path / "out") == 0
        bad = tmp_path / "bad.toml"
        bad.write_text("[suite]\nexperiment = 1\n")
        assert harness.run_suite(bad, tmp_path / "out") == 2
        assert "unknown key" in capsys.readouterr().err

    def test_collect_rebuilds_report(self, tmp_path):
        harness.run_experiment("coercivity", small_conf(), tmp_path)
        assert harness.report_from_outputs(tmp_path) == 0
        rep = json.loads((tmp_path / "report.json").read_text())
        assert rep["experiments"] == ["coercivity"]


class TestCriterionResult:
    def test_line_format(self):
        r = CriterionResult(4, "decay", {"a": True, "b": False}, {}, 1.25)
        assert not r.passed and r.failing_parts == ["b"]
        assert r.line().startswith("CRITERION  4 FAIL: decay")
        assert "b" in r.line()

    def test_json_safe(self):
        import numpy as np

        r = CriterionResult(1, "x", {"a": True}, {"arr": np.arange(3.0), "f": np.float64(2.0), "t": (1, 2)}, 0.0)
        json.dumps(r.as_dict())
