"""Geodesic battery along a family of ellipsoids shrinking to the ball.

For each epsilon prints the worst violation of every battery check; the
values should decrease continuously to ball levels as epsilon goes to 0.
"""

import argparse

import numpy as np

from lgeo.domains import make_ellipsoid
from lgeo.verification import SamplePlan, run_geodesic_battery


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--eps", default="0.4,0.2,0.1,0.05,0.01,0")
    ap.add_argument("--count", type=int, default=10)
    args = ap.parse_args()
    names = None
    for eps in (float(e) for e in args.eps.split(",")):
        rep = run_geodesic_battery(make_ellipsoid(2, np.eye(2), eps), SamplePlan(count=args.count, seed=1))
        if names is None:
            names = [c.name for c in rep.checks]
            print(f"{'eps':>6} " + " ".join(f"{n[:12]:>12}" for n in names))
        print(f"{eps:6.3f} " + " ".join(f"{rep.check(n).max_violation:12.2e}" for n in names))


if __name__ == "__main__":
    main()
