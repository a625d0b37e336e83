"""Command line front end: solve geodesics, evaluate kernel fields, run batteries.

Exit codes: 0 success, 1 bad configuration, 2 solver failure or failed
check, 3 input/output error.  ``LG_LOG`` sets the log level (name or number).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .boundary import DELTA_EXCL, kernel_from_psi, psi
from .circle import nodes
from .domains import Domain, domain_from_dict
from .errors import GeodesicError, NotInLp, NotSLC, SampleOffBoundary, TooCloseToSingularity
from .geodesic import SolverOptions, solve_preferred
from .verification import SamplePlan, hcma_boundary_probe, run_geodesic_battery, run_smoothness_suite

log = logging.getLogger("lgeo")

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_IO = 0, 1, 2, 3
FLOAT_FORMAT = "{:.17g}"


class ConfigError(Exception):
    pass


# parsing ---------------------------------------------------------------------------


def parse_vector(text: str) -> np.ndarray:
    """Comma separated complex entries in Python syntax, e.g. ``"1, 0.3j"`` or ``"0.6+0.1j,0"``."""
    try:
        return np.array([complex(tok.strip().replace(" ", "")) for tok in text.split(",")], dtype=complex)
    except ValueError as exc:
        raise ConfigError(f"cannot parse vector {text!r}") from exc


def load_domain(spec: str) -> Domain:
    """Domain from a JSON file path or an inline JSON object."""
    text = spec
    if not spec.lstrip().startswith("{"):
        text = Path(spec).read_text()
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"domain config is not valid JSON: {exc}") from exc
    try:
        return domain_from_dict(cfg)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad domain config: {exc}") from exc


@dataclass(frozen=True)
class GridSpec:
    """Points ``origin + (x + i y) direction`` on a rectangular parameter grid."""

    origin: np.ndarray
    direction: np.ndarray
    re: tuple
    im: tuple

    def parameters(self) -> list:
        xs = np.linspace(self.re[0], self.re[1], int(self.re[2]))
        ys = np.linspace(self.im[0], self.im[1], int(self.im[2]))
        return [(x, y) for y in ys for x in xs]

    def point(self, x: float, y: float) -> np.ndarray:
        return self.origin + complex(x, y) * self.direction


def _axis(text: str) -> tuple:
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"grid axis {text!r} must be lo:hi:count")
    lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
    if count < 1:
        raise ConfigError("grid axis count must be positive")
    return lo, hi, count


def parse_grid(text: str, p: np.ndarray) -> GridSpec:
    """Grid over the complex line through 0 and ``p``.

    Compact form ``"x0:x1:nx,y0:y1:ny"``; a JSON object may instead give
    ``{"re": [x0, x1, nx], "im": [y0, y1, ny], "origin": [...], "direction": [...]}``
    with vectors as lists of ``[re, im]`` pairs or plain numbers.
    """
    n = p.shape[0]
    try:
        if text.lstrip().startswith("{"):
            cfg = json.loads(text)
            vec = lambda a: np.array([complex(*e) if isinstance(e, list) else complex(e) for e in a])
            origin = vec(cfg["origin"]) if "origin" in cfg else np.zeros(n, dtype=complex)
            direction = vec(cfg["direction"]) if "direction" in cfg else p.copy()
            re = tuple(cfg["re"])
            im = tuple(cfg.get("im", [0.0, 0.0, 1]))
            re, im = _axis(":".join(map(str, re))), _axis(":".join(map(str, im)))
        else:
            axes = text.split(",")
            re = _axis(axes[0])
            im = _axis(axes[1]) if len(axes) > 1 else (0.0, 0.0, 1)
            origin, direction = np.zeros(n, dtype=complex), p.copy()
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad grid spec {text!r}: {exc}") from exc
    if origin.shape != (n,) or direction.shape != (n,):
        raise ConfigError("grid origin and direction must match the dimension")
    return GridSpec(origin, direction, re, im)


def boundary_point(dom: Domain, text: str) -> np.ndarray:
    p = parse_vector(text)
    if p.shape != (dom.n,):
        raise ConfigError(f"--p has {p.shape[0]} entries, expected {dom.n}")
    if abs(dom.rho(p)) > 1e-8:
        raise ConfigError(f"--p is not on the boundary (rho = {float(dom.rho(p)):.3e})")
    return p


def fmt(x) -> str:
    return FLOAT_FORMAT.format(float(x))


# commands ----------------------------------------------------------------------------


def cmd_geodesic(args) -> int:
    dom = load_domain(args.domain)
    p = boundary_point(dom, args.p)
    vhat = parse_vector(args.vhat) if args.vhat else np.zeros(dom.n - 1, dtype=complex)
    if vhat.shape != (dom.n - 1,):
        raise ConfigError(f"--vhat has {vhat.shape[0]} entries, expected {dom.n - 1}")
    opts = SolverOptions(nodes=args.nodes, tol=args.tol, max_nodes=max(1024, args.nodes))
    try:
        g = solve_preferred(dom, p, vhat=vhat, opts=opts)
    except NotInLp as exc:
        raise ConfigError(str(exc)) from exc
    except GeodesicError as exc:
        print(f"solver failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        for key in ("iterations", "residual"):
            if getattr(exc, key, None) is not None:
                print(f"  {key} = {getattr(exc, key)}", file=sys.stderr)
        return EXIT_SOLVER
    out = Path(args.out)
    doc = {"flags": _flags(args), "domain": dom.to_dict(), "geodesic": g.to_dict()}
    out.write_text(json.dumps(doc, indent=2, default=_jsonable))
    trace = out.with_name(out.stem + "_trace.csv")
    zeta = nodes(g.phi.num_nodes)
    with trace.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["theta"] + [f"{part}_phi{k + 1}" for k in range(dom.n) for part in ("re", "im")])
        for j, z in enumerate(zeta):
            vals = g.phi.values[j]
            w.writerow([fmt(np.angle(z) % (2 * np.pi))] + [fmt(c) for v in vals for c in (v.real, v.imag)])
    print(f"wrote {out} and {trace}")
    return EXIT_OK


def _field_point(task):
    """Kernel and representation at one grid point; returns a row of strings."""
    dom, p, z, opts = task
    if np.linalg.norm(z - p) < DELTA_EXCL:
        return "excluded", None
    if dom.rho(z) >= 0.0:
        return "outside", None
    try:
        w = psi(dom, p, z, opts)
    except TooCloseToSingularity:
        return "excluded", None
    except GeodesicError as exc:
        return f"failed:{type(exc).__name__}", None
    return "converged", w


def cmd_field(args) -> int:
    dom = load_domain(args.domain)
    p = boundary_point(dom, args.p)
    grid = parse_grid(args.grid, p)
    opts = SolverOptions()
    params = grid.parameters()
    tasks = [(dom, p, grid.point(x, y), opts) for x, y in params]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_field_point, tasks, chunksize=1))
    else:
        results = [_field_point(t) for t in tasks]
    nu = dom.normal(p)
    header = ["x", "y"] + [f"{part}_z{k + 1}" for k in range(dom.n) for part in ("re", "im")]
    if args.quantity == "P":
        header += ["P"]
    else:
        header += [f"{part}_psi{k + 1}" for k in range(dom.n) for part in ("re", "im")] + ["abs_psi"]
    header += ["converged", "status"]
    failed = 0
    with Path(args.out).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for (x, y), (_, _, z, _), (status, val) in zip(params, tasks, results):
            row = [fmt(x), fmt(y)] + [fmt(c) for v in z for c in (v.real, v.imag)]
            if args.quantity == "P":
                row += [fmt(kernel_from_psi(nu, val)) if val is not None else ""]
            elif val is not None:
                row += [fmt(c) for v in val for c in (v.real, v.imag)] + [fmt(np.linalg.norm(val))]
            else:
                row += [""] * (2 * dom.n + 1)
            row += [int(status == "converged"), status]
            failed += status.startswith("failed")
            w.writerow(row)
    print(f"wrote {args.out}: {len(params)} points, {failed} failed")
    return EXIT_SOLVER if failed else EXIT_OK


def cmd_verify(args) -> int:
    dom = load_domain(args.domain)
    suites = ["geodesic", "hcma", "smoothness"] if args.suite == "all" else [args.suite]
    p = dom.ray_to_boundary(np.eye(dom.n, dtype=complex)[0])
    reports = []
    for name in suites:
        log.info("running suite %s", name)
        try:
            if name == "geodesic":
                rep = run_geodesic_battery(dom, SamplePlan(count=20))
            elif name == "hcma":
                rep = hcma_boundary_probe(dom, p)
            else:
                rep = run_smoothness_suite(dom)
        except GeodesicError as exc:
            reports.append({"title": name, "pass": False, "error": f"{type(exc).__name__}: {exc}"})
            continue
        reports.append(rep.to_dict())
        for c in rep.checks:
            print(f"[{'PASS' if c.passed else 'FAIL'}] {name}.{c.name}: {c.max_violation:.3e} (<= {c.threshold:g})")
    ok = all(r["pass"] for r in reports)
    doc = {"flags": _flags(args), "domain": dom.to_dict(), "pass": ok, "suites": reports}
    Path(args.out).write_text(json.dumps(doc, indent=2, default=_jsonable))
    print(f"wrote {args.out}: {'pass' if ok else 'fail'}")
    return EXIT_OK if ok else EXIT_SOLVER


# plumbing ------------------------------------------------------------------------------


def _flags(args) -> dict:
    return {k: v for k, v in vars(args).items() if k != "func"}


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    raise TypeError(f"cannot serialize {type(obj)}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lgeo", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("geodesic", help="solve one preferred geodesic")
    g.add_argument("--domain", required=True, help="domain config JSON (file or inline)")
    g.add_argument("--p", required=True, help="boundary point, comma separated complex entries")
    g.add_argument("--vhat", default="", help="fibre coordinate (n-1 complex entries); default 0")
    g.add_argument("--nodes", type=int, default=256)
    g.add_argument("--tol", type=float, default=1e-8)
    g.add_argument("--out", required=True, help="JSON output; the trace CSV goes next to it")
    g.set_defaults(func=cmd_geodesic)

    f = sub.add_parser("field", help="Poisson kernel or representation on a slice grid")
    f.add_argument("--domain", required=True)
    f.add_argument("--p", required=True)
    f.add_argument("--grid", required=True, help='"x0:x1:nx,y0:y1:ny" on the line through 0 and p, or JSON')
    f.add_argument("--quantity", choices=("P", "psi"), default="P")
    f.add_argument("--out", required=True)
    f.add_argument("--jobs", type=int, default=1)
    f.set_defaults(func=cmd_field)

    v = sub.add_parser("verify", help="run verification batteries")
    v.add_argument("--domain", required=True)
    v.add_argument("--suite", choices=("geodesic", "hcma", "smoothness", "all"), default="all")
    v.add_argument("--out", required=True)
    v.set_defaults(func=cmd_verify)
    return parser


def _configure_logging() -> None:
    level = os.environ.get("LG_LOG", "WARNING")
    level = int(level) if level.isdigit() else getattr(logging, level.upper(), logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    _configure_logging()
    args = build_parser().parse_args(argv)
    if args.command == "geodesic" and (args.nodes < 16 or args.nodes & (args.nodes - 1)):
        print("config error: --nodes must be a power of two >= 16", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except (ConfigError, NotSLC, SampleOffBoundary) as exc:
        print(f"config error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except GeodesicError as exc:
        print(f"solver error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
