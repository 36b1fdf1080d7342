import json

import pytest

from pemfc.cli import EXIT_CONFIG, EXIT_OK, EXIT_SOLVER, EXIT_VERDICT, main
from pemfc.io import load_report, strip_volatile

SMALL = """\
resolution: {fuel: 2, a: 2, m: 2, c: 2, air: 2, ny: 8}
ledger: {C_K: 4.5}
inequalities: {fuel: 2, porous: 1, ny: 4, n_samples: 20}
convergence: {fuel: 2, porous: 1, ny: 4, refinements: 1}
output: {probe_points: 11}
"""


@pytest.fixture
def cfg(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text(SMALL)
    return p


def _run(cfg, out, *extra):
    return main([extra[0], "--config", str(cfg), "--out", str(out), *extra[1:]])


@pytest.mark.parametrize("cmd", ["check-hypotheses", "ledger", "simulate", "verify-inequalities"])
def test_subcommands_succeed(cfg, tmp_path, cmd):
    out = tmp_path / "o"
    assert _run(cfg, out, cmd, "--strict") == EXIT_OK
    rep = load_report(out / "report.json")
    assert rep["subcommand"] == cmd and rep["exit_code"] == 0


def test_simulate_artifacts(cfg, tmp_path):
    out = tmp_path / "o"
    assert _run(cfg, out, "simulate") == EXIT_OK
    assert (out / "fields.vtk").exists()
    rows = (out / "probes.csv").read_text().splitlines()
    assert rows[0].startswith("x,y,ux") and len(rows) == 12
    rep = load_report(out / "report.json")
    assert rep["solve"]["converged"] is True


def test_convergence_study_subcommand(cfg, tmp_path):
    out = tmp_path / "o"
    assert _run(cfg, out, "convergence-study") == EXIT_OK
    assert (out / "convergence.csv").exists()


def test_report_deterministic(cfg, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert _run(cfg, a, "simulate", "--seed", "5") == EXIT_OK
    assert _run(cfg, b, "simulate", "--seed", "5") == EXIT_OK
    ra, rb = (strip_volatile(load_report(d / "report.json")) for d in (a, b))
    assert json.dumps(ra, sort_keys=True) == json.dumps(rb, sort_keys=True)


def test_failed_verdict_strict(tmp_path):
    p = tmp_path / "si.yaml"
    p.write_text("dataset: {name: pemfc_si}\nresolution: {fuel: 2, a: 2, m: 2, c: 2, air: 2, ny: 8}\n"
                 "ledger: {C_K: 4.5}\n")
    assert _run(p, tmp_path / "o", "ledger", "--strict") == EXIT_VERDICT
    assert _run(p, tmp_path / "o", "ledger") == EXIT_OK
    assert _run(p, tmp_path / "o", "simulate", "--strict") == EXIT_VERDICT


def test_solver_failure_exit(cfg, tmp_path):
    p = tmp_path / "c1.yaml"
    p.write_text(SMALL + "solver: {max_outer_iters: 1, tol: 1.0e-14}\n")
    assert _run(p, tmp_path / "o", "simulate") == EXIT_SOLVER


def test_config_errors(tmp_path, capsys):
    p = tmp_path / "bad.yaml"
    p.write_text("bounds: {mu_lo: 3.0, mu_hi: 2.0}\n")
    assert _run(p, tmp_path / "o", "ledger") == EXIT_CONFIG
    assert "(H1)" in capsys.readouterr().err
    assert main(["ledger", "--config", str(tmp_path / "missing.yaml")]) == EXIT_CONFIG
    assert main(["ledger", "--seed", "-1", "--out", str(tmp_path / "o")]) == EXIT_CONFIG
