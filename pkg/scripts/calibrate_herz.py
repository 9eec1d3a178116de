"""Brute-force sweep behind the frozen Herz threshold.

Runs ``count`` seeded random martingales at each depth and prints the
largest ratio ``((Mf)** - (Mf)*) / (Sf)**`` on the Herz grid, per depth and
overall, plus 1.5 times the overall value.
"""

import argparse

import numpy as np

from symmetrize.martingale import herz_ratio, random_martingale


def sweep(depths, count, seed0=0):
    out = {}
    for d in depths:
        best = 0.0
        for k in range(count):
            lhs, rhs = herz_ratio(random_martingale(d, seed0 + k))
            pos = rhs > 0
            if np.any(pos):
                best = max(best, float(np.max(lhs[pos] / rhs[pos])))
        out[d] = best
    return out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--count", type=int, default=1000)
    ap.add_argument("--depths", default="4,5,6,7,8,9,10,11,12")
    args = ap.parse_args()
    res = sweep([int(d) for d in args.depths.split(",")], args.count)
    for d, v in res.items():
        print(f"depth {d:2d}: sup ratio {v:.6f}")
    top = max(res.values())
    print(f"overall sup {top:.6f}; threshold 1.5 x sup = {1.5 * top:.6f}")


if __name__ == "__main__":
    main()
