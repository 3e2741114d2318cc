import json
import subprocess
import sys

import pytest

from kolmolab.cli import SUBCOMMANDS, build_parser, main

SMALL = """
[coercivity]
k_set = [2.0, 4.0]
n_max = 40
s_grid = [0.0, 0.4]
matrix_k = [2.0]
matrix_s = [0.0]
N = 64
"""


@pytest.fixture
def small_toml(tmp_path):
    p = tmp_path / "small.toml"
    p.write_text(SMALL)
    return p


class TestParser:
    @pytest.mark.parametrize("cmd", SUBCOMMANDS)
    def test_global_flags_after_subcommand(self, cmd):
        a = build_parser().parse_args([cmd, "--config", "x.toml", "--out-dir", "o", "--threads", "2", "--seed", "5"])
        assert (a.config, a.out_dir, a.threads, a.seed) == ("x.toml", "o", 2, 5)

    def test_subcommand_required(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args([])


class TestMain:
    def test_coercivity_run(self, small_toml, tmp_path, capsys):
        rc = main(["coercivity", "--config", str(small_toml), "--out-dir", str(tmp_path)])
        out = capsys.readouterr().out
        assert rc == 0
        assert "criterion 1: PASS" in out and "criterion 3: PASS" in out
        assert (tmp_path / "coercivity" / "sequence_minima.csv").exists()

    def test_bad_config_exit_code(self, tmp_path, capsys):
        p = tmp_path / "bad.toml"
        p.write_text("[coercivity]\nk_set = 3\n")
        assert main(["coercivity", "--config", str(p), "--out-dir", str(tmp_path)]) == 2
        assert "expected an array" in capsys.readouterr().err

    def test_threads_validated(self, capsys):
        assert main(["report", "--threads", "0"]) == 2

    def test_report_over_suite(self, small_toml, tmp_path):
        text = small_toml.read_text() + '\n[suite]\nexperiments = ["coercivity"]\n'
        small_toml.write_text(text)
        assert main(["report", "--config", str(small_toml), "--out-dir", str(tmp_path)]) == 0
        rep = json.loads((tmp_path / "report.json").read_text())
        assert rep["status"] == "PASS" and sorted(rep["criteria"]) == ["1", "2", "3"]

    def test_report_collect_on_empty_dir(self, tmp_path):
        assert main(["report", "--collect", "--out-dir", str(tmp_path)]) == 0


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "kolmolab", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and "kolmolab" in proc.stdout
