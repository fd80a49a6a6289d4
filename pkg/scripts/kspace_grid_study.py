"""Ratio of the discretized K-space norm to the S_p[C_q] norm as the grid is refined.

    python3 scripts/kspace_grid_study.py --p 1.0 --theta 0.5
"""

import argparse

from nclp.cli import instance_rng
from nclp.interpolation import GridConfig, KSpaceConfig, cq_k_norm, ratio_bracket
from nclp.linalg import random_complex
from nclp.opspace import ExponentTriple, OpVector, cq_norm


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--p", type=float, default=1.0)
    ap.add_argument("--theta", type=float, default=0.5)
    ap.add_argument("--instances", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    e = ExponentTriple(args.p, args.theta)
    grids = [GridConfig(1e-2, 1e2, 21), GridConfig(1e-4, 1e4, 81), GridConfig(1e-6, 1e6, 241)]
    print(f"p={args.p} theta={args.theta} q={e.q:.6g}")
    print(f"{'grid':>22} {'eps_grid':>10} {'min ratio':>12} {'max ratio':>12} {'bracket':>22}")
    for g in grids:
        ratios, eps = [], 0.0
        for i in range(args.instances):
            rng = instance_rng(args.seed, i)
            xs = OpVector.of(random_complex((3, 2, 2), rng))
            res = cq_k_norm(xs, e, KSpaceConfig(grid=g))
            ratios.append(res.value / cq_norm(xs, e))
            eps = max(eps, res.eps_grid)
        lo, hi = ratio_bracket(args.p, eps)
        label = f"[{g.t_min:.0e}, {g.t_max:.0e}] x {g.n}"
        print(f"{label:>22} {eps:10.2e} {min(ratios):12.9f} {max(ratios):12.9f}   [{lo:.4f}, {hi:.4f}]")


if __name__ == "__main__":
    main()
