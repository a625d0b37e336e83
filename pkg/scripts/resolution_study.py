"""Solve one ellipsoid geodesic on growing grids and compare Fourier coefficients.

Prints, per grid size, the attained residual and the largest coefficient
difference against the finest grid.
"""

import argparse

import numpy as np

from lgeo.domains import make_ellipsoid
from lgeo.errors import GeodesicError
from lgeo.geodesic import SolverOptions, solve_preferred


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--epsilon", type=float, default=0.2)
    ap.add_argument("--vhat", type=complex, default=0.2 + 0.1j)
    ap.add_argument("--sizes", default="64,128,256,512")
    args = ap.parse_args()
    dom = make_ellipsoid(2, np.eye(2), args.epsilon)
    p = dom.ray_to_boundary(np.array([1.0, 0.3 + 0.2j]))
    sizes = [int(s) for s in args.sizes.split(",")]
    discs = {}
    for n in sizes:
        try:
            discs[n] = solve_preferred(dom, p, vhat=np.array([args.vhat]),
                                       opts=SolverOptions(nodes=n, tol=1e-6, max_nodes=n))
        except GeodesicError as exc:
            print(f"{n:6d} no convergence: {exc}")
    ref = discs[sizes[-1]].phi.taylor()
    print(f"{'nodes':>6} {'theta':>10} {'iters':>6} {'coef diff':>10}")
    for n in sizes:
        if n not in discs:
            continue
        t = discs[n].phi.taylor()
        k = min(len(t), len(ref))
        diff = np.max(np.abs(t[:k] - ref[:k]))
        d = discs[n].diagnostics
        print(f"{n:6d} {d['theta']:10.2e} {d['iterations']:6d} {diff:10.2e}")


if __name__ == "__main__":
    main()
