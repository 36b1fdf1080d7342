"""Manufactured-solution convergence of the flow, species, heat and potential blocks."""
import argparse

from pemfc.datasets import normalized
from pemfc.geometry import Resolution
from pemfc.mms import convergence_study


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--refinements", type=int, default=3)
    args = ap.parse_args()
    study = convergence_study(normalized().geo, Resolution(2, 1, 1, 1, 2, 4), args.refinements)
    print("h: " + "  ".join(f"{h:.4g}" for h in study.h))
    for f, errs in study.errors.items():
        print(f"{f:10s} errors " + "  ".join(f"{e:.3e}" for e in errs)
              + "   orders " + "  ".join(f"{o:.3f}" for o in study.orders[f]))


if __name__ == "__main__":
    main()
