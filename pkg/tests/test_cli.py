import argparse
import subprocess
import sys

import pytest

from hillconvex import certifier as CERT
from hillconvex.cli import RunConfig, build_parser, main
from hillconvex.errors import ConfigError


def run(tmp_path, *args):
    return main([*args, "--out", str(tmp_path)])


def test_defaults_mirror_reference_parameters():
    cfg = RunConfig("verify", "figures")
    assert cfg.eps == 1e-6
    assert cfg.eps_x == 1 / 2.05e5 and cfg.eps_u == 1 / 4.59e4
    assert cfg.seed == 0 and cfg.trials == 1000


def test_unknown_config_keys_rejected():
    ns = argparse.Namespace(command="oracle", bogus=1)
    with pytest.raises(ConfigError):
        RunConfig.from_namespace(ns)


def test_validation():
    with pytest.raises(ConfigError):
        RunConfig("verify", "final", eps_x=-1.0).validate()
    with pytest.raises(ConfigError):
        RunConfig("verify", "final", stripes=0).validate()


def test_parser_shapes():
    ns = build_parser().parse_args(["verify", "final", "--stripes", "16", "--only", "fig2,fig5"])
    assert ns.stripes == 16 and ns.only == ("fig2", "fig5")


def test_only_single_row(tmp_path, capsys):
    assert run(tmp_path, "verify", "figures", "--only", "fig2", "--no-plot") == 0
    out = capsys.readouterr().out
    parsed = CERT.parse_report(out)
    assert set(parsed) == {"", "summary", "fig2"}
    assert parsed["summary"]["rows"] == "1"
    assert parsed["fig2"]["verdict"] == "pass"
    assert (tmp_path / "verify_figures.txt").read_text() == out


def test_coarse_eps_fails(tmp_path, capsys):
    assert run(tmp_path, "verify", "figures", "--only", "fig2,fig9", "--eps", "1e-2", "--no-plot") == 1
    parsed = CERT.parse_report(capsys.readouterr().out)
    assert parsed["summary"]["first_failure"] == "fig2"
    assert parsed["fig2"]["certifying"] == "false"


def test_reports_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["verify", "figures", "--only", "fig9,fig12", "--out", str(d)]) == 0
    assert (a / "verify_figures.txt").read_bytes() == (b / "verify_figures.txt").read_bytes()
    assert (a / "verify_figures.png").exists()
    assert "wall_time_s" in (a / "timing.txt").read_text()
    assert "wall_time" not in (a / "verify_figures.txt").read_text()


def test_oracle_smoke(tmp_path, capsys):
    assert run(tmp_path, "oracle", "--trials", "10", "--seed", "5") == 0
    parsed = CERT.parse_report(capsys.readouterr().out)
    assert parsed["oracle"]["mode"] == "smoke (non-certifying)"
    assert parsed[""]["seed"] == "5"
    assert parsed["summary"]["verdict"] == "pass"


def test_steps_12(tmp_path, capsys):
    assert run(tmp_path, "verify", "steps", "--only", "1,2", "--no-plot") == 0
    parsed = CERT.parse_report(capsys.readouterr().out)
    assert parsed["steps summary"] == {"step1": "pass", "step2": "pass"}
    assert parsed["step1 fig5"]["B_source"] == "interval"
    assert "step2 fig15m_sup" in parsed


def test_final_coarse_sharp(tmp_path, capsys):
    code = run(tmp_path, "verify", "final", "--eps-x", "1e-3", "--eps-u", "1e-3", "--stripes", "4")
    parsed = CERT.parse_report(capsys.readouterr().out)
    cert = parsed["final-sharp"]
    assert cert["certifying"] == "false"
    assert float(cert["M"]) < -19
    # coarse steps cannot beat eps*B: the margin stage fails, not the sweep
    assert code == 1
    assert parsed["final summary"]["stage_failed"] == "margin"
    assert parsed["derivative bounds"]["B_u_reference"] == CERT._fmt(CERT.REF_B_U)


@pytest.mark.parametrize("target,header", [
    ("hill-region", "theta,q1,q2"),
    ("fiber", "theta,q1,q2,residual"),
    ("graph:f2", "x,value"),
    ("graph:l_plus", "x,k,value"),
    ("graph:d", "x,k,alpha,value"),
    ("disk", "s1,s2,value"),
])
def test_emit_headers(tmp_path, capsys, target, header):
    assert run(tmp_path, "emit", target, "--n", "16") == 0
    files = capsys.readouterr().out.split()
    csvs = [f for f in files if f.endswith(".csv")]
    assert len(csvs) == 1
    with open(csvs[0]) as fh:
        assert fh.readline().strip() == header


def test_emit_graph_f2_domain(tmp_path, capsys):
    assert run(tmp_path, "emit", "graph:f2", "--n", "5000", "--no-plot") == 0
    lines = (tmp_path / "graph_f2.csv").read_text().splitlines()
    assert len(lines) == 5001
    assert float(lines[1].split(",")[0]) == 0.01
    assert float(lines[-1].split(",")[0]) == 0.54


def test_emit_flow(tmp_path):
    assert run(tmp_path, "emit", "flow", "--n", "200", "--dt", "1e-3") == 0
    assert (tmp_path / "flow.csv").read_text().startswith("t,q1,q2,p1,p2,Kc\n")
    assert (tmp_path / "flow.png").exists()


def test_emit_fiber_negative_coordinates(tmp_path):
    assert run(tmp_path, "emit", "fiber", "--p=1.5,-0.7", "--c", "2.2", "--no-plot") == 0


@pytest.mark.parametrize("args,code", [
    (["emit", "graph:nope"], 2),
    (["emit", "sideways"], 2),
    (["verify", "figures", "--eps", "-1"], 2),
    (["verify", "figures", "--only", "fig99"], 2),
    (["verify", "steps", "--only", "4"], 2),
    (["verify", "nothing"], 2),
    (["emit", "fiber", "--c", "2.0"], 3),
])
def test_exit_codes(tmp_path, args, code):
    assert run(tmp_path, *args) == code


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "hillconvex", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and "hillconvex" in r.stdout
