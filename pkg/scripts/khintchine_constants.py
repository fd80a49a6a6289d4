"""Empirical two-sided constants of the CAR and free Khintchine comparisons.

For each p, draws random tuples and reports the largest observed
``lhs / max(column, row)`` (p >= 2) or ``sum_norm / lhs`` (p < 2).

    python3 scripts/khintchine_constants.py --instances 100 --seed 0
"""

import argparse
import math

import numpy as np

from nclp import fock
from nclp.cli import instance_rng
from nclp.linalg import random_complex
from nclp.opspace import OpVector


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--instances", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--kinds", nargs="+", default=["car", "free"])
    args = ap.parse_args()

    print(f"{'kind':>5} {'p':>6} {'min ratio':>10} {'max ratio':>10} {'approx':>7}")
    for kind in args.kinds:
        for p in (1.25, 1.5, 1.75, 2.0, 3.0, 4.0, 6.0):
            ratios, approx = [], False
            for i in range(args.instances):
                rng = instance_rng(args.seed, i)
                n, m = int(rng.integers(1, 3)), int(rng.integers(1, 3))
                lam = np.exp(rng.uniform(math.log(0.25), math.log(4.0), n))
                xs = OpVector.of(random_complex((n, m, m), rng), lam)
                rep = fock.khintchine_report(xs, kind, p)
                ratios.append(rep.ratio_lower if p >= 2 else rep.ratio_upper)
                approx |= rep.approximate
            print(f"{kind:>5} {p:6.3g} {min(ratios):10.6f} {max(ratios):10.6f} {str(approx):>7}")


if __name__ == "__main__":
    main()
