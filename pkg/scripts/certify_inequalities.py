"""Certify every functional inequality on one mesh and print the worst ratios."""
import argparse
import time

from pemfc.datasets import normalized
from pemfc.geometry import Resolution, build_mesh
from pemfc.inequalities import build_cases, certify, estimate_korn_constant


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--fuel", type=int, default=32, help="cells across each channel")
    ap.add_argument("--porous", type=int, default=16, help="cells across each porous layer")
    ap.add_argument("--ny", type=int, default=128)
    ap.add_argument("--samples", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    ds = normalized()
    p = args.porous
    mesh = build_mesh(ds.geo, Resolution(args.fuel, p, p, p, args.fuel, args.ny))
    t0 = time.perf_counter()
    for r in certify(build_cases(mesh, ds.geo), args.samples, args.seed):
        print(f"{r.name:12s} worst ratio {r.worst_ratio:.12f} ({r.worst_kind}) {'PASS' if r.passed else 'FAIL'}")
    korn, _ = estimate_korn_constant(mesh)
    print(f"discrete Korn estimate {korn:.6f}; {time.perf_counter() - t0:.1f} s")


if __name__ == "__main__":
    main()
