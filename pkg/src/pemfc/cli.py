"""Command line: ``pemfc <subcommand> --config <path> [--out DIR] [--seed N] [--strict]``.

Exit codes: 0 success, 2 failed verdict in strict mode, 3 solver failure or
non-convergence, 4 configuration error.
"""
from __future__ import annotations

import argparse
import datetime
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .coefficients import check_hypotheses
from .config import ConfigError, RunConfig, parse_config, resolve
from .fem import FemError, SolverError
from .fixed_point import run_picard
from .inequalities import build_cases, certify, estimate_korn_constant
from .io import cell_average, node_values, point_values, write_csv, write_report, write_vtk
from .ledger import LedgerError, build_ledger, min_a_objective, kappa_sharp, optimize_epsilons
from .mms import convergence_study
from .model import CellModel
from .tec import GateError

log = logging.getLogger("pemfc")

EXIT_OK, EXIT_VERDICT, EXIT_SOLVER, EXIT_CONFIG = 0, 2, 3, 4
SUBCOMMANDS = ("check-hypotheses", "ledger", "simulate", "verify-inequalities", "convergence-study")


def _base_report(cfg: RunConfig, name: str, seed: int) -> dict:
    return {"subcommand": name, "seed": seed, "version": __version__, "config": cfg.to_dict(),
            "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat()}


def _model(cfg: RunConfig) -> CellModel:
    ds = cfg.dataset
    return CellModel(ds.geo, cfg.resolution(), ds.coeffs, ds.bdata)


def compute_ledger(cfg: RunConfig, model: CellModel, seed: int = 0):
    """Ledger for the configured dataset on ``model``'s mesh; returns (report, korn_estimate)."""
    ds = cfg.dataset
    opts = cfg.ledger_options()
    korn = None
    if opts.C_K is None:
        korn, _ = estimate_korn_constant(model.mesh)
    eps = cfg.eps()
    if cfg["ledger"]["optimize_eps"]:
        kap = kappa_sharp(ds.coeffs.bounds, ds.coeffs.constants, opts.kappa_mode)
        eps, _, _ = optimize_epsilons(min_a_objective(ds.coeffs.bounds, ds.coeffs.constants, ds.coeffs.rho_1m, kap),
                                      seed=seed)
    rep = build_ledger(ds.coeffs.bounds, ds.coeffs.constants, ds.geo.L, model.gamma_cl_measure(),
                       model.lifting_norms(), ds.coeffs.rho_1m, eps, ds.coeffs.bv.jL_c, opts, C_K_estimate=korn)
    return rep, korn


def run_check_hypotheses(cfg, out: Path, seed: int, strict: bool):
    ds = cfg.dataset
    hr = check_hypotheses(ds.coeffs, ds.bdata, ds.geo, seed=seed)
    report = _base_report(cfg, "check-hypotheses", seed)
    report["hypotheses"] = hr.to_dict()
    report["passed"] = hr.passed
    for c in hr.checks:
        print(f"{c.name}: {'PASS' if c.passed else 'FAIL'} (margin {c.margin:.3g}) {c.detail}")
    return (EXIT_VERDICT if strict and not hr.passed else EXIT_OK), report


def run_ledger(cfg, out: Path, seed: int, strict: bool):
    model = _model(cfg)
    rep, korn = compute_ledger(cfg, model, seed)
    report = _base_report(cfg, "ledger", seed)
    report["ledger"] = rep.to_dict()
    report["korn_estimate"] = korn
    print(f"verdict: {rep.verdict}  margin: {rep.margin:.6g}  root1: {rep.root1:.6g}  root2: {rep.root2:.6g}")
    return (EXIT_VERDICT if strict and not rep.verdict else EXIT_OK), report


def run_simulate(cfg, out: Path, seed: int, strict: bool):
    model = _model(cfg)
    rep, korn = compute_ledger(cfg, model, seed)
    report = _base_report(cfg, "simulate", seed)
    report["ledger"] = rep.to_dict()
    report["korn_estimate"] = korn
    if strict and not rep.verdict:
        print("smallness verdict fails; not solving in strict mode")
        return EXIT_VERDICT, report
    t0 = time.perf_counter()
    cell, sr = run_picard(model, rep, cfg.picard())
    report["solve"] = sr.to_dict()
    report["elapsed"] = time.perf_counter() - t0
    write_fields(cfg, model, cell, out)
    print(f"picard: {sr.status} after {len(sr.iterations)} iterations; residual {sr.residuals[-1]:.3e}")
    if not sr.converged:
        return EXIT_SOLVER, report
    if strict and not (sr.all_in_K() and sr.estimates_hold()):
        return EXIT_VERDICT, report
    return EXIT_OK, report


def write_fields(cfg: RunConfig, model: CellModel, cell, out: Path) -> None:
    o = cfg["output"]
    mesh = model.mesh
    cx, cy = model.Vf.components
    ux, uy = model.Vf.split(cell.u)
    if o["vtk"]:
        vq = model.V.volume(("a", "c"))
        write_vtk(out / "fields.vtk", mesh, {
            "p": node_values(model.Hp, cell.p), "rho1": node_values(model.V, cell.rho1),
            "rho2": node_values(model.V, cell.rho2), "theta": node_values(model.V, cell.theta),
            "phi": node_values(model.Vp, cell.phi)},
            cell_fields={"Q": cell_average(mesh, vq.cell_of_q, vq.w, cell.Q)},
            vectors={"u": (node_values(cx, ux), node_values(cy, uy))})
    if o["csv"]:
        y = o["probe_y"] * model.geo.L
        x = np.linspace(0.0, model.geo.width, o["probe_points"])
        yy = np.full_like(x, y)
        cols = [x, yy, point_values(cx, ux, x, yy), point_values(cy, uy, x, yy), point_values(model.Hp, cell.p, x, yy),
                point_values(model.V, cell.rho1, x, yy), point_values(model.V, cell.rho2, x, yy),
                point_values(model.V, cell.theta, x, yy), point_values(model.Vp, cell.phi, x, yy)]
        write_csv(out / "probes.csv", ["x", "y", "ux", "uy", "p", "rho1", "rho2", "theta", "phi"], zip(*cols))


def run_verify_inequalities(cfg, out: Path, seed: int, strict: bool):
    from .geometry import build_mesh
    s = cfg["inequalities"]
    geo = cfg.dataset.geo
    mesh = build_mesh(geo, cfg.mesh_resolution("inequalities"))
    results = certify(build_cases(mesh, geo), s["n_samples"], seed, tol=s["tol"])
    korn, _ = estimate_korn_constant(mesh)
    report = _base_report(cfg, "verify-inequalities", seed)
    report["inequalities"] = [r.to_dict() for r in results]
    report["korn_estimate"] = korn
    write_csv(out / "inequalities.csv", ["name", "worst_ratio", "n_samples", "worst_kind", "passed"],
              [(r.name, r.worst_ratio, r.n_samples, r.worst_kind, r.passed) for r in results])
    for r in results:
        print(f"{r.name}: worst ratio {r.worst_ratio:.12f} over {r.n_samples} samples "
              f"[{'PASS' if r.passed else 'FAIL'}]")
    print(f"discrete Korn estimate: {korn:.6f}")
    ok = all(r.passed for r in results)
    return (EXIT_VERDICT if strict and not ok else EXIT_OK), report


def run_convergence_study(cfg, out: Path, seed: int, strict: bool):
    s = cfg["convergence"]
    study = convergence_study(cfg.dataset.geo, cfg.mesh_resolution("convergence"), s["refinements"])
    report = _base_report(cfg, "convergence-study", seed)
    report["convergence"] = study.to_dict()
    rows = []
    for f, errs in study.errors.items():
        for k, (h, e) in enumerate(zip(study.h, errs)):
            rows.append((f, h, e, study.orders[f][k - 1] if k else ""))
    write_csv(out / "convergence.csv", ["field", "h", "l2_error", "order"], rows)
    ok = True
    for f in study.errors:
        mo = study.min_order(f)
        ok &= mo >= s["min_order"]
        print(f"{f}: observed L2 orders {', '.join(f'{o:.3f}' for o in study.orders[f])}")
    return (EXIT_VERDICT if strict and not ok else EXIT_OK), report


RUNNERS = {"check-hypotheses": run_check_hypotheses, "ledger": run_ledger, "simulate": run_simulate,
           "verify-inequalities": run_verify_inequalities, "convergence-study": run_convergence_study}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pemfc", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="YAML run configuration (defaults when omitted)")
        s.add_argument("--out", default=None, help="output directory (default: output.dir of the config)")
        s.add_argument("--seed", type=int, default=0)
        s.add_argument("--strict", action="store_true", help="exit 2 on any failed verdict")
        s.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        cfg = parse_config(args.config) if args.config else resolve(None, "<defaults>")
        if args.seed < 0:
            raise ConfigError("seed must be nonnegative")
    except ConfigError as exc:
        for m in exc.messages:
            print(f"config error: {m}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out if args.out is not None else cfg["output"]["dir"])
    out.mkdir(parents=True, exist_ok=True)
    try:
        code, report = RUNNERS[args.command](cfg, out, args.seed, args.strict)
    except (SolverError, GateError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER if isinstance(exc, SolverError) or not args.strict else EXIT_VERDICT
    except (ConfigError, LedgerError, FemError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    report["exit_code"] = code
    write_report(out / "report.json", report)
    return code


if __name__ == "__main__":
    sys.exit(main())
