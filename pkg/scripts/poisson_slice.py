"""Poisson kernel on the complex line through 0 and a boundary point.

Writes a CSV of the kernel on a grid of that slice and prints the largest
deviation from the ball kernel, which vanishes for epsilon = 0.
"""

import argparse
import csv

import numpy as np

from lgeo.boundary import DELTA_EXCL, poisson_kernel
from lgeo.domains import make_ellipsoid
from lgeo.errors import GeodesicError
from lgeo.verification import ball_kernel


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--epsilon", type=float, default=0.2)
    ap.add_argument("--count", type=int, default=15)
    ap.add_argument("--out", default="poisson_slice.csv")
    args = ap.parse_args()
    dom = make_ellipsoid(2, np.eye(2), args.epsilon)
    p = dom.ray_to_boundary(np.array([1.0, 0.0]))
    ts = np.linspace(-1.0, 1.0, args.count)
    worst = 0.0
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "P", "P_ball"])
        for y in ts:
            for x in ts:
                z = complex(x, y) * p
                if dom.rho(z) >= -1e-6 or np.linalg.norm(z - p) < DELTA_EXCL:
                    continue
                try:
                    val = poisson_kernel(dom, p, z)
                except GeodesicError:
                    continue
                ref = ball_kernel(z / np.linalg.norm(p), p / np.linalg.norm(p))
                worst = max(worst, abs(val - ref))
                w.writerow([f"{x:.17g}", f"{y:.17g}", f"{val:.17g}", f"{ref:.17g}"])
    print(f"wrote {args.out}; max |P - P_ball| = {worst:.3e}")


if __name__ == "__main__":
    main()
