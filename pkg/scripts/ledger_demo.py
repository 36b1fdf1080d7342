"""Smallness ledger for the built-in datasets, plus the SI order-of-magnitude checks."""
import argparse

from pemfc.datasets import normalized, pemfc_si, random_admissible
from pemfc.geometry import Resolution
from pemfc.inequalities import estimate_korn_constant
from pemfc.ledger import LedgerOptions, build_ledger, sanity_arithmetic
from pemfc.model import CellModel


def report(ds, res):
    model = CellModel(ds.geo, res, ds.coeffs, ds.bdata)
    korn, _ = estimate_korn_constant(model.mesh)
    c = ds.coeffs
    rep = build_ledger(c.bounds, c.constants, ds.geo.L, model.gamma_cl_measure(), model.lifting_norms(), c.rho_1m,
                       ds.eps, c.bv.jL_c, LedgerOptions(), C_K_estimate=korn)
    print(f"{ds.name}: C_K {rep.C_K:.4g}  C0 {rep.C0:.4g}  B0 {rep.B0:.4g}  root1 {rep.root1:.4g}  "
          f"root2 {rep.root2:.4g}  rhs {rep.rhs:.4g}  margin {rep.margin:.4g}  verdict {rep.verdict}")
    print(f"    radii R1 {rep.R1:.4g}  R2 {rep.R2:.4g}  R3 {rep.R3:.4g}")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--ny", type=int, default=32)
    ap.add_argument("--random", type=int, default=3, help="number of random admissible datasets")
    args = ap.parse_args()
    res = Resolution(8, 4, 4, 4, 8, args.ny)
    for ds in [normalized(), pemfc_si()] + [random_admissible(s) for s in range(args.random)]:
        report(ds, res)
    for k, v in sanity_arithmetic().items():
        print(f"{k}: {v}")


if __name__ == "__main__":
    main()
