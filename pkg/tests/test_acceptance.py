"""Acceptance criteria, each at its stated tolerance and time budget.

Every test records one PASS/FAIL line, printed in the terminal summary.
"""
import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from pemfc.coefficients import ButlerVolmerData, butler_volmer_raw
from pemfc.datasets import normalized, random_admissible
from pemfc.fixed_point import PicardConfig, run_picard
from pemfc.geometry import Resolution, build_mesh
from pemfc.inequalities import build_cases, certify, estimate_korn_constant, korn_sweep
from pemfc.ledger import LedgerOptions, bisect_root, build_ledger, positive_root, root1_coeffs, root2_coeffs, \
    sanity_arithmetic
from pemfc.mms import FIELDS, convergence_study
from pemfc.model import CellModel

FINE = Resolution(32, 16, 16, 16, 32, 128)


def record(n, ok, detail):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def fine_korn():
    ds = normalized()
    t0 = time.perf_counter()
    val, _ = estimate_korn_constant(build_mesh(ds.geo, FINE))
    return val, time.perf_counter() - t0


def _ledger(ds, model, korn):
    c = ds.coeffs
    return build_ledger(c.bounds, c.constants, ds.geo.L, model.gamma_cl_measure(), model.lifting_norms(), c.rho_1m,
                        ds.eps, c.bv.jL_c, LedgerOptions(), C_K_estimate=korn)


def test_criterion_1_inequalities():
    ds = normalized()
    t0 = time.perf_counter()
    res = certify(build_cases(build_mesh(ds.geo, FINE), ds.geo), n_samples=1000, seed=0, tol=1e-10)
    dt = time.perf_counter() - t0
    worst = max(res, key=lambda r: r.worst_ratio)
    ok = len(res) == 13 and all(r.passed and r.n_samples >= 1000 for r in res) and dt <= 120
    record(1, ok, f"{len(res)} cases, worst ratio {worst.worst_ratio:.12f} ({worst.name}), {dt:.1f} s")


def test_criterion_2_sanity_arithmetic():
    s = sanity_arithmetic(sigma_hi=120.0, alpha_hi=0.3 / 320, k_lo=0.2, u_in=0.2, K=1.76e-11)
    ok = (abs(s["seebeck_threshold"] - 0.0408) <= 1e-3 and s["seebeck_ok"] and s["slip_ok"]
          and s["bracket"] == (1.9, 6.3))
    lo, hi = s["slip_load"]
    record(2, ok, f"sqrt(k/sigma) = {s['seebeck_threshold']:.6f}, alpha = {s['alpha_hi']:.3e}, "
                  f"slip load [{lo:.4f}, {hi:.4f}] -> {s['slip_load_rounded']}")


def test_criterion_3_energy_estimates(fine_korn):
    korn, t_korn = fine_korn
    t0 = time.perf_counter()
    n_solves, worst, failures = 0, math.inf, []
    for seed in range(20):
        ds = random_admissible(seed)
        model = CellModel(ds.geo, FINE, ds.coeffs, ds.bdata)
        rep = _ledger(ds, model, korn)
        if not rep.verdict:
            failures.append(f"seed {seed}: verdict false")
            continue
        _, sr = run_picard(model, rep, PicardConfig(tol=1e-8))
        if not sr.converged:
            failures.append(f"seed {seed}: {sr.status}")
        for r in sr.iterations:
            n_solves += 1
            worst = min(worst, r.flow_margin, r.tec_margin)
            if r.flow_margin < 0 or r.tec_margin < 0:
                failures.append(f"seed {seed} iter {r.iteration}: margins {r.flow_margin:.3e} {r.tec_margin:.3e}")
    dt = time.perf_counter() - t0 + t_korn
    ok = not failures and dt <= 300
    record(3, ok, f"20 datasets, {n_solves} flow+TEC solves, smallest margin {worst:.3e}, {dt:.1f} s"
                  + (f"; {failures[:3]}" if failures else ""))


def test_criterion_4_fixed_point(fine_korn):
    korn, t_korn = fine_korn
    ds = normalized()
    t0 = time.perf_counter()
    model = CellModel(ds.geo, FINE, ds.coeffs, ds.bdata)
    rep = _ledger(ds, model, korn)
    _, sr = run_picard(model, rep, PicardConfig(tol=1e-8, max_outer_iters=50))
    dt = time.perf_counter() - t0 + t_korn
    ok = rep.verdict and sr.converged and sr.residuals[-1] <= 1e-8 and sr.all_in_K() and dt <= 600
    record(4, ok, f"verdict {rep.verdict} (margin {rep.margin:.4g}), {sr.status} in {len(sr.iterations)} iterations, "
                  f"residual {sr.residuals[-1]:.2e}, in K {sr.all_in_K()}, {dt:.1f} s")


def test_criterion_5_mms():
    ds = normalized()
    study = convergence_study(ds.geo, Resolution(2, 1, 1, 1, 2, 4), refinements=3)
    mins = {f: study.min_order(f) for f in FIELDS}
    ok = all(len(study.orders[f]) == 3 and m >= 1.8 for f, m in mins.items())
    record(5, ok, ", ".join(f"{f} {m:.3f}" for f, m in mins.items()))


def test_criterion_6_butler_volmer():
    bv = ButlerVolmerData(j0_a=1800.0, j0_c=0.0132)
    eta = np.linspace(-1.0, 1.0, 100_000)
    ok, parts = True, []
    for el in ("a", "c"):
        j0, jL, B = bv.params(el, 8.314, 96485.0)
        j = butler_volmer_raw(eta, j0, jL, B)
        jm = butler_volmer_raw(-eta, j0, jL, B)
        odd = np.max(np.abs(j + jm))
        bounded = bool(np.all(np.abs(j) < jL))
        zero = butler_volmer_raw(np.array([0.0]), j0, jL, B)[0]
        ok &= odd == 0.0 and bounded and zero == 0.0
        parts.append(f"{el}: max|j(η)+j(-η)| {odd:.1e}, max|j|/jL {np.max(np.abs(j)) / jL:.15f}, j(0) {zero}")
    record(6, ok, "; ".join(parts))


def test_criterion_7_roots():
    rng = np.random.default_rng(7)
    worst = 0.0
    for L, a in zip(10 ** rng.uniform(-3, 2, 100), 10 ** rng.uniform(-6, 3, 100)):
        for co in (root1_coeffs(L, a), root2_coeffs(L, a)):
            r, rb = positive_root(*co), bisect_root(*co)
            worst = max(worst, abs(r - rb) / max(abs(rb), 1e-300))
    record(7, worst <= 1e-12, f"100 (L, a) points, worst relative difference to bisection {worst:.2e}")


def test_criterion_8_korn():
    ds = normalized()
    vals = korn_sweep(ds.geo, Resolution(4, 2, 2, 2, 4, 16), levels=3)
    ok = all(v >= 1 for v in vals) and all(b >= a for a, b in zip(vals, vals[1:]))
    record(8, ok, "estimates " + ", ".join(f"{v:.6f}" for v in vals))
