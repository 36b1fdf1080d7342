"""Outer fixed-point iteration on the normalized dataset, with per-iteration diagnostics."""
import argparse
import time

from pemfc.datasets import normalized, random_admissible
from pemfc.fixed_point import PicardConfig, run_picard
from pemfc.geometry import Resolution
from pemfc.inequalities import estimate_korn_constant
from pemfc.ledger import LedgerOptions, build_ledger
from pemfc.model import CellModel


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--fuel", type=int, default=32)
    ap.add_argument("--ny", type=int, default=128)
    ap.add_argument("--seed", type=int, default=None, help="use a random admissible dataset instead")
    ap.add_argument("--omega", type=float, default=1.0)
    ap.add_argument("--tol", type=float, default=1e-8)
    args = ap.parse_args()
    ds = normalized() if args.seed is None else random_admissible(args.seed)
    n, h = args.fuel, args.fuel // 2
    model = CellModel(ds.geo, Resolution(n, h, h, h, n, args.ny), ds.coeffs, ds.bdata)
    korn, _ = estimate_korn_constant(model.mesh)
    c = ds.coeffs
    rep = build_ledger(c.bounds, c.constants, ds.geo.L, model.gamma_cl_measure(), model.lifting_norms(), c.rho_1m,
                       ds.eps, c.bv.jL_c, LedgerOptions(), C_K_estimate=korn)
    print(f"{ds.name}: verdict {rep.verdict}, margin {rep.margin:.4g}, radii ({rep.R1:.4g}, {rep.R2:.4g}, {rep.R3:.4g})")
    t0 = time.perf_counter()
    cell, sr = run_picard(model, rep, PicardConfig(tol=args.tol, omega=args.omega))
    for r in sr.iterations:
        print(f"iter {r.iteration:2d}  residual {r.residual:.3e}  omega {r.omega:.3g}  newton {r.newton_iters}  "
              f"flow margin {r.flow_margin:.3e}  transport margin {r.tec_margin:.3e}  in K {all(r.in_K.values())}")
    print(f"{sr.status} in {len(sr.iterations)} iterations, {time.perf_counter() - t0:.1f} s")
    print(f"max density rho1 {cell.rho1.max():.4g}, temperature range [{cell.theta.min():.4g}, {cell.theta.max():.4g}]")


if __name__ == "__main__":
    main()
