"""Property batteries and regularity probes across the solver stack.

Each battery returns a :class:`Report` made of named checks, each with the
largest violation seen, its threshold and a pass flag.  Solver failures are
counted in a separate check instead of being raised.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import unitary_group

from .boundary import (
    LeafMap,
    kernel_from_psi,
    laplacian_5,
    laplacian_9,
    leaf_kernel,
    leaf_kernel_samples,
    poisson_kernel,
    psi,
    shoot,
)
from .domains import Domain, fiber_unchart
from .errors import GeodesicError
from .geodesic import SolverOptions, solve_preferred

log = logging.getLogger(__name__)


@dataclass
class Check:
    name: str
    max_violation: float
    threshold: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.max_violation) and self.max_violation <= self.threshold)

    def to_dict(self) -> dict:
        return {"name": self.name, "max_violation": float(self.max_violation), "threshold": self.threshold,
                "pass": self.passed}


@dataclass
class Report:
    title: str
    checks: list = field(default_factory=list)
    info: dict = field(default_factory=dict)

    def add(self, name: str, value: float, threshold: float) -> None:
        self.checks.append(Check(name, float(value), float(threshold)))

    def check(self, name: str) -> Check:
        return next(c for c in self.checks if c.name == name)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {"title": self.title, "pass": self.passed, "checks": [c.to_dict() for c in self.checks],
                "info": self.info}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, default=_jsonable)


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    raise TypeError(f"cannot serialize {type(obj)}")


# geodesic battery ---------------------------------------------------------------

GEODESIC_THRESHOLDS = {
    "properness": 1e-8,
    "dual_holomorphy": 1e-7,
    "winding": 0.0,
    "normalization": 1e-7,
    "boundary_data": 1e-8,
    "unitary_equivariance": 1e-9,
    "solver_failures": 0.0,
}


@dataclass(frozen=True)
class SamplePlan:
    """Random boundary data: ``count`` points, fibre coordinates of modulus below ``vhat_radius``."""

    count: int = 20
    seed: int = 0
    vhat_radius: float = 0.6
    equivariance_every: int = 1


def sample_data(dom: Domain, plan: SamplePlan):
    rng = np.random.default_rng(plan.seed)
    points = dom.sample_boundary(plan.count, rng)
    m = dom.n - 1
    out = []
    for p in points:
        d = rng.standard_normal(m) + 1j * rng.standard_normal(m)
        radius = plan.vhat_radius * rng.random() ** (1.0 / (2 * m))
        out.append((p, radius * d / np.linalg.norm(d)))
    return out


def run_geodesic_battery(dom: Domain, plan: SamplePlan = SamplePlan(), opts: SolverOptions = SolverOptions(),
                         thresholds: dict | None = None) -> Report:
    """Geodesic conditions on sampled data, plus equivariance under random unitaries."""
    thr = dict(GEODESIC_THRESHOLDS, **(thresholds or {}))
    rng = np.random.default_rng(plan.seed + 1)
    worst = {k: 0.0 for k in thr}
    failures = 0
    per_sample = []
    for k, (p, vhat) in enumerate(sample_data(dom, plan)):
        try:
            g = solve_preferred(dom, p, vhat=vhat, opts=opts)
        except GeodesicError as exc:
            failures += 1
            per_sample.append({"index": k, "error": f"{type(exc).__name__}: {exc}"})
            continue
        d = g.diagnostics
        row = {
            "properness": d["proper"],
            "dual_holomorphy": d["dual_holomorphy"],
            "winding": abs(d["winding"]),
            "normalization": d["normalization"],
            "boundary_data": max(d["point"], d["velocity"]),
        }
        if plan.equivariance_every and k % plan.equivariance_every == 0:
            U = unitary_group.rvs(dom.n, random_state=rng)
            try:
                h = solve_preferred(dom.rotated(U), U @ p, v=U @ g.datum.v, opts=opts)
                row["unitary_equivariance"] = float(np.max(np.abs(h.phi.values - g.phi.values @ U.T)))
            except GeodesicError as exc:
                failures += 1
                per_sample.append({"index": k, "error": f"rotated: {type(exc).__name__}: {exc}"})
        for key, val in row.items():
            worst[key] = max(worst[key], val)
        per_sample.append({"index": k, **row, "iterations": d["iterations"]})
    worst["solver_failures"] = failures
    report = Report(f"geodesic battery on {dom.kind} (n={dom.n}, eps={dom.epsilon})")
    for key, val in worst.items():
        report.add(key, val, thr[key])
    report.info["samples"] = per_sample
    return report


# parameter dependence -------------------------------------------------------------


@dataclass(frozen=True)
class SmoothnessReport:
    ratio: float
    steps: tuple
    second_differences: tuple

    def to_dict(self) -> dict:
        return {"ratio": self.ratio, "steps": list(self.steps), "second_differences": list(self.second_differences)}


def leaf_samples(dom: Domain, p, vhat, zetas, opts: SolverOptions = SolverOptions(), center=None, initial=None):
    """Values of the leaf map at the points ``zetas`` for boundary datum ``(p, vhat)``."""
    g = solve_preferred(dom, p, vhat=vhat, opts=opts, center=center, initial=initial)
    return g(zetas), g


DEFAULT_ZETAS = np.array([0.0, 0.5, -0.5j, 0.7 * np.exp(2.5j), np.exp(2j)])


def parameter_smoothness_probe(dom: Domain, p, vhat, direction, h: float = 0.05, zetas=DEFAULT_ZETAS,
                               opts: SolverOptions = SolverOptions()) -> SmoothnessReport:
    """Richardson ratio of second differences of the leaf map along a parameter line.

    ``direction = (dp, dvhat)`` moves the base point radially back onto the
    boundary and the fibre coordinate linearly; the fibre chart stays
    centered at the normal of the unperturbed point.  For a smooth map the
    ratio ``|D(h) - D(h/2)| / |D(h/2) - D(h/4)|`` of second differences tends
    to four.
    """
    p = np.asarray(p, dtype=complex)
    vhat = np.asarray(vhat, dtype=complex)
    dp, dv = (np.asarray(d, dtype=complex) for d in direction)
    center = dom.normal(p)
    base, g0 = leaf_samples(dom, p, vhat, zetas, opts, center)

    def at(t):
        pt = dom.ray_to_boundary(p + t * dp)
        return leaf_samples(dom, pt, vhat + t * dv, zetas, opts, center, initial=g0)[0]

    steps = (h, h / 2, h / 4)
    d2 = [(at(s) - 2 * base + at(-s)) / s**2 for s in steps]
    num = np.max(np.abs(d2[0] - d2[1]))
    den = np.max(np.abs(d2[1] - d2[2]))
    return SmoothnessReport(float(num / den), steps, tuple(float(np.max(np.abs(d))) for d in d2))


# boundary Monge-Ampere probe -------------------------------------------------------

HCMA_THRESHOLDS = {
    "leaf_pullback": 1e-6,
    "leaf_laplacian": 1e-5,
    "boundary_decay_rate": 1e-2,
    "boundary_decay_bracket": 10.0,
    "nontangential_bracket": 10.0,
    "ball_closed_form": 1e-8,
    "solver_failures": 0.0,
}


def ball_kernel(z, p) -> float:
    """Closed-form kernel of the unit ball: ``-(1 - |z|^2) / |1 - <z, p>|^2``."""
    z = np.asarray(z, dtype=complex)
    p = np.asarray(p, dtype=complex)
    return float(-(1.0 - np.vdot(z, z).real) / abs(1.0 - np.vdot(p, z)) ** 2)


def cone_directions(dom: Domain, p, half_angle: float = np.pi / 4) -> list:
    """Unit directions pointing into the domain within ``half_angle`` of ``-nu_p``."""
    nu = dom.normal(p)
    tangent = np.zeros(dom.n, dtype=complex)
    tangent[np.argmin(np.abs(nu))] = 1.0
    tangent -= np.vdot(nu, tangent) * nu
    tangent /= np.linalg.norm(tangent)
    out = [-nu]
    for a in (half_angle / 2, half_angle):
        for t in (1j * nu, tangent, -tangent):
            out.append(-np.cos(a) * nu + np.sin(a) * t)
    return out


def hcma_boundary_probe(dom: Domain, p, opts: SolverOptions = SolverOptions(), seed: int = 0,
                        leaf_count: int = 3, pullback_count: int = 20, h: float = 1e-2,
                        decay_count: int = 24, decay_depth: float = 1e-4, thresholds: dict | None = None) -> Report:
    """Boundary behaviour and leaf harmonicity of the Poisson kernel with pole ``p``.

    Away from the pole the kernel vanishes linearly in the distance ``d`` to
    the boundary: the rate check compares depths ``d`` and ``d/10``, and the
    bracket check bounds ``|P| |x - p|^2 / d`` above and below for boundary
    points with ``|x - p| >= 1``.  Near the pole, ``|P| |z - p|`` is bracketed
    along the central leaf and on a cone of half-angle pi/4 around ``-nu_p``.
    """
    thr = dict(HCMA_THRESHOLDS, **(thresholds or {}))
    p = np.asarray(p, dtype=complex)
    nu = dom.normal(p)
    rng = np.random.default_rng(seed)
    m = dom.n - 1
    report = Report(f"boundary Monge-Ampere probe on {dom.kind} (n={dom.n}, eps={dom.epsilon})")
    failures = 0
    leaves = LeafMap(dom, p, opts)

    def random_leaf(radius):
        d = rng.standard_normal(m) + 1j * rng.standard_normal(m)
        return radius * rng.random() * d / np.linalg.norm(d)

    # leaf pullback: the kernel along a leaf is a disc Poisson kernel
    pull, closed = 0.0, 0.0
    for _ in range(pullback_count):
        vhat = random_leaf(0.6)
        zeta = 0.8 * np.sqrt(rng.random()) * np.exp(2j * np.pi * rng.random())
        try:
            g = solve_preferred(dom, p, vhat=vhat, opts=opts)
            z = g(zeta)
            if np.linalg.norm(z - p) < 2e-2:
                continue
            coords = shoot(dom, p, z, opts, guess=(vhat, zeta), leaves=leaves)
        except GeodesicError:
            failures += 1
            continue
        v = fiber_unchart(dom, p, coords.vhat)
        value = kernel_from_psi(nu, nu + (coords.zeta - 1.0) * np.vdot(nu, v) * v)
        c = np.vdot(nu, g.datum.v).real
        pull = max(pull, abs(value - leaf_kernel(c, zeta)))
        if dom.kind == "ball":
            closed = max(closed, abs(value - ball_kernel(z, p)))
    report.add("leaf_pullback", pull, thr["leaf_pullback"])
    if dom.kind == "ball":
        report.add("ball_closed_form", closed, thr["ball_closed_form"])

    # leaf harmonicity at stencil width h
    lap9, lap5 = 0.0, 0.0
    for _ in range(leaf_count):
        vhat = random_leaf(0.5)
        zeta0 = 0.5 * np.sqrt(rng.random()) * np.exp(2j * np.pi * rng.random())
        try:
            S = leaf_kernel_samples(dom, p, vhat, zeta0, h, opts)
        except GeodesicError:
            failures += 1
            continue
        lap9 = max(lap9, abs(laplacian_9(S, h)))
        lap5 = max(lap5, abs(laplacian_5(S, h)))
    report.add("leaf_laplacian", lap9, thr["leaf_laplacian"])
    report.info["leaf_laplacian_five_point"] = lap5

    # linear vanishing at the boundary away from the pole
    rates, brackets, literal = [], [], 0.0
    for x in dom.sample_boundary(decay_count, rng):
        dist = np.linalg.norm(x - p)
        if dist < 1.0:
            continue
        nx = dom.normal(x)
        try:
            near = abs(poisson_kernel(dom, p, x - decay_depth * nx, opts, leaves=leaves))
            nearer = abs(poisson_kernel(dom, p, x - 0.1 * decay_depth * nx, opts, leaves=leaves))
        except GeodesicError:
            failures += 1
            continue
        literal = max(literal, near)
        rates.append(abs(near / (10.0 * nearer) - 1.0))
        q = near * dist**2 / decay_depth
        brackets.append(max(q, 1.0 / q))
    report.add("boundary_decay_rate", max(rates, default=np.inf), thr["boundary_decay_rate"])
    report.add("boundary_decay_bracket", max(brackets, default=np.inf), thr["boundary_decay_bracket"])
    report.info["boundary_decay_max_abs"] = literal
    report.info["boundary_decay_depth"] = decay_depth

    # nontangential growth: |P| |z - p| stays in a bracket [1/C, C]
    products = []
    for direction in cone_directions(dom, p):
        for t in (0.2, 0.1, 0.05, 0.02):
            z = p + t * direction
            if dom.rho(z) >= 0:
                continue
            try:
                products.append(abs(poisson_kernel(dom, p, z, opts, leaves=leaves)) * t)
            except GeodesicError:
                failures += 1
    g0 = solve_preferred(dom, p, opts=opts)
    for r in (0.9, 0.95, 0.98):
        z = g0(r)
        try:
            products.append(abs(poisson_kernel(dom, p, z, opts, leaves=leaves)) * np.linalg.norm(z - p))
        except GeodesicError:
            failures += 1
    products = np.array(products)
    bracket = float(max(products.max(), 1.0 / products.min())) if products.size else np.inf
    report.add("nontangential_bracket", bracket, thr["nontangential_bracket"])
    report.info["nontangential_products"] = products.tolist()
    report.add("solver_failures", failures, thr["solver_failures"])
    return report


def run_smoothness_suite(dom: Domain, opts: SolverOptions = SolverOptions(), seed: int = 0,
                         count: int = 2, band: tuple = (3.5, 4.5)) -> Report:
    """Richardson ratios for a few random parameter lines, checked against ``band``."""
    rng = np.random.default_rng(seed)
    report = Report(f"parameter smoothness on {dom.kind} (n={dom.n}, eps={dom.epsilon})")
    ratios = []
    failures = 0
    for p, vhat in sample_data(dom, SamplePlan(count=count, seed=seed, vhat_radius=0.4)):
        dp = rng.standard_normal(dom.n) + 1j * rng.standard_normal(dom.n)
        dv = rng.standard_normal(dom.n - 1) + 1j * rng.standard_normal(dom.n - 1)
        try:
            res = parameter_smoothness_probe(dom, p, vhat, (dp / np.linalg.norm(dp), dv / np.linalg.norm(dv)),
                                             opts=opts)
        except GeodesicError:
            failures += 1
            continue
        ratios.append(res.ratio)
    mid = 0.5 * (band[0] + band[1])
    worst = max((abs(r - mid) for r in ratios), default=np.inf)
    report.add("richardson_ratio_deviation", worst, 0.5 * (band[1] - band[0]))
    report.add("solver_failures", failures, 0.0)
    report.info["ratios"] = ratios
    return report
