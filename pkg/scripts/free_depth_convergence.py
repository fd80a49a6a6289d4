"""Truncation depth study for the free (circular) model.

Shows how the L_p norm on the truncated Fock space moves with the depth
for a single scalar generator, next to the column/row reference.

    python3 scripts/free_depth_convergence.py --lam 0.5 --p 3
"""

import argparse

import numpy as np

from nclp import fock
from nclp.opspace import OpVector, intersection_norm, sum_norm


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--lam", type=float, default=0.5)
    ap.add_argument("--p", type=float, default=3.0)
    ap.add_argument("--depths", type=int, nargs="+", default=[1, 2, 3, 4, 5, 6])
    args = ap.parse_args()

    xs = OpVector.of([np.eye(1)], [args.lam])
    ref = intersection_norm(xs, args.p) if args.p >= 2 else sum_norm(xs, args.p).value
    study = fock.free_depth_study(xs, args.p, args.depths)
    cap = fock.KhintchineConfig().max_basis
    print(f"lam={args.lam} p={args.p} reference={ref:.9f}")
    for d, v in sorted(study["lhs"].items()):
        N = fock.free_ambient_dim(1, d)
        # above the basis cap the vacuum vector state replaces the algebra density
        mode = "vector state" if N * N > cap else "algebra density"
        print(f"depth {d:2d}  ambient={N:4d}  {mode:>15}  lhs={v:.9f}  ratio={v / ref:.6f}")
    print(f"converged (last two depths): {study['converged']}")


if __name__ == "__main__":
    main()
