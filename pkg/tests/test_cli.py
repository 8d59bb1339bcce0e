"""Integration tests for the command-line entry point"""
import json

import pytest

from main import EXIT_ERROR, EXIT_OK, build_parser, main
from persistence.outputs import read_csv


@pytest.mark.unit
class TestParser:
    """Test argument parsing"""

    def test_subcommands(self):
        """Test every command parses"""
        for command in ("converge", "sweep", "scale", "oracle", "validate"):
            assert build_parser().parse_args([command]).command == command

    def test_unknown_command(self):
        """Test an unknown command exits through argparse"""
        with pytest.raises(SystemExit):
            build_parser().parse_args(["plot"])

    def test_version(self, capsys):
        """Test --version prints the version"""
        with pytest.raises(SystemExit):
            build_parser().parse_args(["--version"])
        assert "1.0.0" in capsys.readouterr().out


@pytest.mark.integration
class TestMain:
    """Test commands end to end"""

    def test_invalid_gamma_writes_nothing(self, tmp_path):
        """Test a config error exits 1 before any output"""
        out = tmp_path / "out"
        assert main(["converge", "--gamma", "0", "--out", str(out)]) == EXIT_ERROR
        assert not out.exists()

    def test_oracle_certificate(self, tmp_path):
        """Test the oracle writes its certificate and the resolved config"""
        assert main(["oracle", "--out", str(tmp_path)]) == EXIT_OK
        cert = json.loads((tmp_path / "certificate_fig3-pf.json").read_text())
        assert cert["duality_gap"] >= -1e-9
        assert len(cert["allocation"]["p_ul_w"]) == 2
        config = json.loads((tmp_path / "config.json").read_text())
        assert config["version"] == "1.0.0"
        assert config["preset"] == "fig3-pf"

    def test_rerun_identical(self, tmp_path):
        """Test two runs produce byte-identical tables"""
        for name in ("a", "b"):
            assert main(["oracle", "--out", str(tmp_path / name)]) == EXIT_OK
        a = (tmp_path / "a" / "oracle_fig3-pf.csv").read_bytes()
        b = (tmp_path / "b" / "oracle_fig3-pf.csv").read_bytes()
        assert a == b

    def test_converge_short(self, tmp_path):
        """Test a short run writes its trace, fit and plot"""
        assert main(["converge", "--max-iters", "60", "--out", str(tmp_path)]) == EXIT_OK
        rows = read_csv(tmp_path / "trace_fig3-pf.csv")
        assert len(rows) == 61
        assert rows[0]["iter"] == "0"
        fit = json.loads((tmp_path / "fit_fig3-pf.json").read_text())
        assert fit["rounds"] == 60
        assert fit["gamma"] == 0.02
        assert (tmp_path / "trace_fig3-pf.svg").exists()

    def test_sweep_from_config(self, tmp_path):
        """Test a config file narrows the sweep"""
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"preset": "fig2-pf", "sweep_db": [-80.0, -40.0, 3]}))
        out = tmp_path / "out"
        assert main(["sweep", "--config", str(path), "--out", str(out)]) == EXIT_OK
        rows = read_csv(out / "sweep_fig2-pf.csv")
        assert [float(r["g_i_db"]) for r in rows] == [-80.0, -60.0, -40.0]
        assert (out / "sweep_utility_fig2-pf.svg").exists()

    def test_json_format(self, tmp_path):
        """Test --format json writes row lists"""
        assert main(["oracle", "--format", "json", "--preset", "fig2-pf", "--out", str(tmp_path)]) == EXIT_OK
        rows = json.loads((tmp_path / "oracle_fig2-pf.json").read_text())
        assert isinstance(rows, list)
        assert "utility_star" in rows[0]

    def test_missing_scenario_file(self, tmp_path):
        """Test an unreadable scenario file exits 1"""
        code = main(["oracle", "--scenario", str(tmp_path / "absent.json"), "--out", str(tmp_path / "o")])
        assert code == EXIT_ERROR

    def test_scale_one_level(self, tmp_path):
        """Test the smallest scaling run"""
        assert main(["scale", "--levels", "1", "--seeds", "1", "--out", str(tmp_path)]) == EXIT_OK
        rows = read_csv(tmp_path / "scaling.csv")
        assert len(rows) == 1
        assert rows[0]["M"] == "128"
        assert read_csv(tmp_path / "scaling_summary.csv")[0]["level"] == "1"

    @pytest.mark.slow
    def test_validate_rerun_identical(self, tmp_path):
        """Test two validation runs with one seed write identical tables"""
        codes = [main(["validate", "--levels", "2", "--seeds", "2", "--seed", "0", "--out", str(tmp_path / name)])
                 for name in ("a", "b")]
        assert codes[0] == codes[1]
        a = (tmp_path / "a" / "validation.csv").read_bytes()
        b = (tmp_path / "b" / "validation.csv").read_bytes()
        assert a == b
        assert len(read_csv(tmp_path / "a" / "validation.csv")) > 10
