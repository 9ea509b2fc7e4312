import math

import numpy as np
import pytest

import nonlocalmp as nm
from nonlocalmp import cli, fem
from nonlocalmp.cases import CASE_NAMES, case_config_text
from nonlocalmp.config import parse_config_text
from nonlocalmp.errors import ConfigError

from conftest import h_for

FAST_CFG = f"""
# coarse, fast single run
domain.left = {-math.pi!r}
domain.right = {math.pi!r}
constraint = dirichlet
kernel = exponential
kernel.scale = 1.0
nonlinearity = cubic
initial_guess = sine
epsilon = 1e-3
delta = 1.0
h = {h_for(20)!r}
"""


def test_list_cases(capsys):
    assert cli.main(["--list-cases"]) == 0
    out = capsys.readouterr().out
    assert "case1" in out and "Table 1" in out
    assert "case5" in out and "Neumann" in out
    assert "extended domain" in out and "(-1.5,4.5)" in out
    assert sum(out.count(name) for name in CASE_NAMES) == len(CASE_NAMES)


def test_requires_exactly_one_source(capsys):
    assert cli.main([]) == 4
    assert cli.main(["--config", "x.cfg", "--case", "case1"]) == 4


def test_missing_config_file():
    assert cli.main(["--config", "/nonexistent/path.cfg"]) == 4


def test_malformed_kernel_key(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("kernel = sombrero\nh = 0.3\n")
    assert cli.main(["--config", str(cfg)]) == 4
    assert "kernel" in capsys.readouterr().err


def test_unknown_key_rejected(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("h = 0.3\nfrobnicate = 1\n")
    assert cli.main(["--config", str(cfg)]) == 4
    err = capsys.readouterr().err
    assert "frobnicate" in err and "line 2" in err


def test_kernel_param_mismatch_rejected(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("kernel = exponential\nkernel.p = 4.0\nh = 0.3\n")
    assert cli.main(["--config", str(cfg)]) == 4


def test_single_run_outputs(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(FAST_CFG)
    out_csv = tmp_path / "solution.csv"
    log_csv = tmp_path / "log.csv"
    mat = tmp_path / "B.txt"
    code = cli.main(["--config", str(cfg), "--out", str(out_csv),
                     "--log", str(log_csv), "--dump-matrix", str(mat)])
    assert code == 0
    out = capsys.readouterr().out
    assert "h,n_dof,R_L1,R_L2,E_L1,E_L2,iterations,wall_time_s" in out

    mesh = nm.build_mesh(-math.pi, math.pi, h_for(20))
    u = fem.read_function_csv(out_csv, mesh)
    assert np.max(np.abs(u.values)) > 0.1

    log_lines = log_csv.read_text().splitlines()
    assert log_lines[0] == "iteration,energy,grad_norm_h1,t_star,halvings"
    energies = [float(l.split(",")[1]) for l in log_lines[1:]]
    assert all(b < a for a, b in zip(energies, energies[1:]))

    assert len(mat.read_text().splitlines()) == 19 * 19


def test_log_streams_to_stdout(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(FAST_CFG)
    assert cli.main(["--config", str(cfg)]) == 0
    out = capsys.readouterr().out
    assert "iteration,energy,grad_norm_h1,t_star,halvings" in out


def test_header_echo_roundtrip(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(FAST_CFG)
    assert cli.main(["--config", str(cfg)]) == 0
    out = capsys.readouterr().out
    echoed = "\n".join(line[2:] for line in out.splitlines()
                       if line.startswith("# ") and " = " in line
                       and not line.startswith("# kernel mass")
                       and not line.startswith("# coercivity"))
    spec_orig = parse_config_text(FAST_CFG)
    spec_echo = parse_config_text(echoed)
    assert spec_echo == spec_orig


@pytest.mark.parametrize("name", CASE_NAMES)
def test_bundled_cases_parse(name):
    spec = parse_config_text(case_config_text(name))
    assert spec.h_list and len(spec.h_list) >= 3
    if name == "case5":
        assert spec.constraint == "neumann"
        assert spec.extension == pytest.approx(1.5)
        assert spec.initial_guess == "step(1,2)"
    else:
        assert spec.constraint == "dirichlet"
    assert spec.epsilon == pytest.approx(1e-3)
    assert spec.delta == pytest.approx(1.0)


def test_study_run_writes_report(tmp_path, capsys):
    cfg = tmp_path / "study.cfg"
    cfg.write_text(FAST_CFG.replace(f"h = {h_for(20)!r}",
                                    f"h_list = {h_for(10)!r} {h_for(14)!r} {h_for(20)!r}\n"
                                    f"output.report = {tmp_path / 'rep.csv'}\n"
                                    f"output.plot = {tmp_path / 'rep.plot'}"))
    code = cli.main(["--config", str(cfg)])
    assert code == 0
    rep = (tmp_path / "rep.csv").read_text().splitlines()
    assert rep[0] == "h,n_dof,R_L1,R_L2,E_L1,E_L2,iterations,wall_time_s"
    assert len(rep) == 4
    out = capsys.readouterr().out
    assert "# fitted order R_L1" in out
    assert (tmp_path / "rep.plot").read_text().count("# ") >= 4


def test_exit_code_mapping():
    from nonlocalmp.verify import CaseReport
    ok = CaseReport(h=0.1, n_dof=1, R_L1=0, R_L2=0, E_L1=0, E_L2=0,
                    iterations=1, wall_time_s=0, converged=True)
    triv = CaseReport(h=0.1, n_dof=1, R_L1=0, R_L2=0, E_L1=0, E_L2=0,
                      iterations=1, wall_time_s=0, converged=True,
                      trivial=True)
    bad = CaseReport(h=0.1, n_dof=1, R_L1=0, R_L2=0, E_L1=0, E_L2=0,
                     iterations=1, wall_time_s=0, failed=True)
    assert cli._exit_code([ok]) == 0
    assert cli._exit_code([ok, triv]) == 2
    assert cli._exit_code([ok, triv, bad]) == 3


def test_config_error_reporting():
    with pytest.raises(ConfigError) as info:
        parse_config_text("h = 0.1\nh = 0.2\n")
    assert info.value.line == 2
    with pytest.raises(ConfigError):
        parse_config_text("constraint = mixed\nh = 0.1\n")
    with pytest.raises(ConfigError):
        parse_config_text("h = 0.1\ninitial_guess = parabola\n")
    with pytest.raises(ConfigError):
        parse_config_text("no equals sign here\n")


def test_unknown_case_name(capsys):
    assert cli.main(["--case", "case9"]) == 4
    assert "case9" in capsys.readouterr().err


def test_csv_initial_guess(tmp_path):
    import math
    from nonlocalmp.config import RunSpec

    mesh = nm.build_mesh(-math.pi, math.pi, h_for(20))
    u0 = nm.interpolate(mesh, math.sin, constraint="dirichlet")
    path = tmp_path / "start.csv"
    fem.write_function_csv(path, u0)
    spec = RunSpec(h=h_for(20), initial_guess=str(path))
    u1 = spec.initial_guess_fe(mesh)
    np.testing.assert_allclose(u1.values, u0.values, atol=1e-15)
