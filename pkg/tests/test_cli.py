import json
from pathlib import Path

import numpy as np
import pytest

from fvkernel import cli
from fvkernel.config import ConfigError, parse_config
from fvkernel.fock import LinearBoseBathSpec, Statistics

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

G4_MIN = """\
[bath]
random = true
num_modes = 4

[run]
samples = 2
"""


class TestParseConfig:
    def test_minimal_g4check(self):
        cfg = parse_config(G4_MIN, "g4check")
        assert cfg.command == "g4check" and cfg.random_bath and cfg.num_modes == 4
        assert cfg.seed == 42
        assert cfg.tolerances == {"g4": 1e-10}

    def test_explicit_bath(self):
        cfg = parse_config((CONFIGS / "dynamics.ini").read_text(), "dynamics")
        np.testing.assert_array_equal(cfg.bath.energies, [1.0, 2.0])
        assert cfg.bath.g[1, 0] == -0.1
        assert cfg.grid.N == 10 and cfg.system.delta == 1.0

    def test_antisymmetry_violation(self):
        text = "[bath]\nenergies = 1, 2\ng = 0, 0.1; 0.2, 0\nbeta = 1\n"
        with pytest.raises(ConfigError, match=r"bath\.g \(line 3\).*antisymmetric"):
            parse_config(text, "corr")

    def test_unknown_key_is_named(self):
        text = "[bath]\nenergies = 1, 2\ng = 0, 0.1; -0.1, 0\nbetta = 1\n"
        with pytest.raises(ConfigError, match="betta") as exc:
            parse_config(text, "corr")
        assert "line 4" in str(exc.value)

    def test_unknown_section(self):
        with pytest.raises(ConfigError, match=r"\[solver\]"):
            parse_config(G4_MIN + "[solver]\nx = 1\n", "g4check")

    def test_parse_error_line_number(self):
        with pytest.raises(ConfigError, match="line 3"):
            parse_config("[bath]\nrandom = true\nthis line has no separator\n", "corr")

    def test_missing_header(self):
        with pytest.raises(ConfigError, match="line 1"):
            parse_config("random = true\n", "corr")

    def test_bad_value(self):
        with pytest.raises(ConfigError, match=r"bath\.beta \(line 4\)"):
            parse_config("[bath]\nenergies = 1\ng = 0\nbeta = hot\n", "corr")

    def test_command_conflict(self):
        with pytest.raises(ConfigError, match="command"):
            parse_config(G4_MIN + "command = corr\n", "g4check")

    def test_tolerance_override(self):
        cfg = parse_config(G4_MIN + "tol_g4 = 0.7\n", "g4check")
        assert cfg.tolerances["g4"] == 0.7
        with pytest.raises(ConfigError, match="tol_absdiff"):
            parse_config(G4_MIN + "tol_absdiff = 0.7\n", "g4check")

    def test_missing_sections(self):
        with pytest.raises(ConfigError, match=r"\[grid\]"):
            parse_config("[bath]\nrandom = true\nnum_modes = 2\n", "kernels")
        with pytest.raises(ConfigError, match=r"\[bath\]"):
            parse_config("[run]\nseed = 1\n", "corr")

    def test_linear_bosons_only_for_kernels(self):
        text = "[bath]\nfamily = bose_linear\nomega = 1, 2\nbeta = 1\n[grid]\ntf = 1\nn = 4\n"
        assert isinstance(parse_config(text, "kernels").bath, LinearBoseBathSpec)
        with pytest.raises(ConfigError):
            parse_config(text, "corr")

    def test_pairing_requires_fermions(self):
        text = G4_MIN.replace("random", "family = bose_bilinear\nrandom")
        with pytest.raises(ConfigError, match="fermi"):
            parse_config(text, "pairing")

    def test_complex_initial_state(self):
        text = (CONFIGS / "dynamics.ini").read_text().replace(
            "rho0 = 1, 0; 0, 0", "rho0 = 0.5, 0.5j; -0.5j, 0.5")
        assert parse_config(text, "dynamics").system.rho0[0, 1] == 0.5j


def run_cli(tmp_path, command, text, *extra):
    cfg = tmp_path / f"{command}.ini"
    cfg.write_text(text)
    out = tmp_path / "out"
    status = cli.main([command, "--config", str(cfg), "--output", str(out), *extra])
    summary = json.loads((out / "summary.json").read_text())
    return status, out, summary


class TestRun:
    def test_kernels_decoupled_all_zero(self, tmp_path):
        text = ("[bath]\nenergies = 1, 2\ng = 0, 0; 0, 0\nbeta = 1\n"
                "[grid]\nt0 = 0\ntf = 1\nn = 4\n")
        status, out, summary = run_cli(tmp_path, "kernels", text)
        rows = (out / "result.csv").read_text().splitlines()
        assert rows[0] == "family,tau,kR_re,kR_im,kI_re,kI_im"
        for row in rows[1:]:
            assert all(float(v) == 0 for v in row.split(",")[2:])
        assert status == 0 and summary["pass"]

    @pytest.mark.parametrize("family", ["bose_bilinear", "bose_linear"])
    def test_kernels_bosonic(self, tmp_path, family):
        bath = ("[bath]\nfamily = bose_linear\nomega = 1, 2\nc = 1, 0.5\nm = 1, 1\nbeta = 1\n"
                if family == "bose_linear" else
                "[bath]\nfamily = bose_bilinear\nenergies = 1, 1.5\ng = 0, 0.1; -0.1, 0\n"
                "beta = 1\n")
        status, out, summary = run_cli(tmp_path, "kernels", bath + "[grid]\ntf = 5\nn = 20\n")
        assert status == 0 and summary["family"] == family

    def test_corr_passes(self, tmp_path):
        status, _, summary = run_cli(tmp_path, "corr", G4_MIN.replace("4", "3"))
        assert status == 0 and summary["max_absdiff"] <= 1e-11

    def test_csv_format(self, tmp_path):
        _, out, _ = run_cli(tmp_path, "corr", G4_MIN)
        raw = (out / "result.csv").read_bytes()
        assert b"\r" not in raw and raw.endswith(b"\n")
        header, first = raw.decode().splitlines()[:2]
        assert header == "sample_id,t1,t2,C_re,C_im,trace_re,trace_im,absdiff"
        t1 = first.split(",")[1]
        assert float(t1) == float(repr(float(t1)))
        assert len(t1.replace(".", "").lstrip("0")) >= 15

    def test_seed_changes_output(self, tmp_path):
        _, out, _ = run_cli(tmp_path, "corr", G4_MIN, "--seed", "1")
        a = (out / "result.csv").read_bytes()
        _, out, summary = run_cli(tmp_path, "corr", G4_MIN, "--seed", "2")
        assert (out / "result.csv").read_bytes() != a
        assert summary["seed"] == 2

    def test_tolerance_violation_exit_status(self, tmp_path):
        status, _, summary = run_cli(tmp_path, "corr", G4_MIN + "tol_absdiff = -1\n")
        assert status == 1 and summary["pass"] is False and summary["pass_absdiff"] is False

    def test_g4check_reports_bosons_without_verdict(self, tmp_path):
        text = ("[bath]\nfamily = bose_bilinear\nenergies = 1, 1.5\ng = 0, 0.05; -0.05, 0\n"
                "beta = 2\n[run]\nsamples = 1\nd = LRLR\n")
        status, out, summary = run_cli(tmp_path, "g4check", text)
        assert summary["asserted"] is False and status == 0
        assert len((out / "result.csv").read_text().splitlines()) == 2

    def test_dynamics(self, tmp_path):
        status, out, summary = run_cli(tmp_path, "dynamics", (CONFIGS / "dynamics.ini").read_text())
        assert status == 0 and summary["method"] == "pathsum"
        rows = (out / "result.csv").read_text().splitlines()
        assert rows[0] == "method,t,sz,sx,purity,trace_dev" and len(rows) == 1 + 2 * 11

    def test_config_error_exit(self, tmp_path, capsys):
        cfg = tmp_path / "bad.ini"
        cfg.write_text("[bath]\nbetta = 1\n")
        assert cli.main(["corr", "--config", str(cfg)]) == 2
        assert "betta" in capsys.readouterr().err

    def test_missing_file(self, tmp_path, capsys):
        assert cli.main(["corr", "--config", str(tmp_path / "nope.ini")]) == 3
        assert "nope.ini" in capsys.readouterr().err

    def test_unknown_command(self):
        with pytest.raises(SystemExit):
            cli.main(["plot", "--config", "x.ini"])
