"""Acceptance criteria 1-7 at their stated tolerances; one summary line per criterion."""

import time

import numpy as np
import pytest

from conftest import random_symbols, random_trig_field, record_criterion
from helpers import flatten_theta, quadratic_ratios, random_direction
from lgeo.boundary import psi, psi_inverse
from lgeo.canonical import build_chart, canonical_rho, factorization_residual, outer_function, spectral_factorize
from lgeo.circle import CircleField, nodes, taylor_eval
from lgeo.domains import fiber_unchart, make_ball, make_ellipsoid
from lgeo.geodesic import apply_linearization, ball_geodesic, make_state, solve_preferred, theta_residual
from lgeo.rh import OneJet, RHSolver, TwoPoint, rh_residual, solve_direct
from lgeo.verification import SamplePlan, hcma_boundary_probe, run_geodesic_battery, run_smoothness_suite
from test_canonical import IDENTITIES, random_outer_matrix
from test_rh import fourier_matching_jet, identity_symbols


def random_vhat(rng, m, radius):
    d = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    return radius * rng.random() ** (1.0 / (2 * m)) * d / np.linalg.norm(d)


def random_point(rng, dom, scale=0.95):
    z = rng.standard_normal(dom.n) + 1j * rng.standard_normal(dom.n)
    return scale * rng.random() ** (1.0 / (2 * dom.n)) * dom.ray_to_boundary(z)


def test_criterion_1_ball_oracle():
    rng = np.random.default_rng(101)
    worst, slowest = 0.0, 0.0
    for n in (2, 3):
        ball = make_ball(n)
        for p in ball.sample_boundary(20, rng):
            vhat = random_vhat(rng, n - 1, 0.9)
            t0 = time.perf_counter()
            g = solve_preferred(ball, p, vhat=vhat)
            slowest = max(slowest, time.perf_counter() - t0)
            exact = ball_geodesic(p, fiber_unchart(ball, p, vhat))
            worst = max(worst, np.max(np.abs(g.phi.values - exact.phi.values)))
    ok = worst <= 1e-9 and slowest <= 5.0
    record_criterion(1, ok, f"sup error {worst:.2e} (<= 1e-9), slowest solve {slowest:.2f} s (<= 5 s)")
    assert ok


def test_criterion_2_ellipsoid_battery():
    details, ok = [], True
    for eps in (0.1, 0.2):
        rep = run_geodesic_battery(make_ellipsoid(2, np.eye(2), eps), SamplePlan(count=20, seed=7))
        ok &= rep.passed
        vals = ", ".join(f"{c.name} {c.max_violation:.1e}" for c in rep.checks
                         if c.name in ("properness", "dual_holomorphy", "winding", "normalization", "solver_failures"))
        details.append(f"eps={eps}: {vals}")
    record_criterion(2, ok, "; ".join(details))
    assert ok


def _solve(solver, f, c):
    return solver.solve_jet(f, c) if isinstance(c, OneJet) else solver.solve_two_point(f, c)


def test_criterion_3_linear_rh():
    rng = np.random.default_rng(303)
    oracle_err = 0.0
    for _ in range(20):
        f = random_trig_field(rng, (2,), 64)
        c = OneJet(complex(*rng.uniform(-0.5, 0.5, 2)), rng.standard_normal(2) + 1j * rng.standard_normal(2),
                   rng.standard_normal(2) + 1j * rng.standard_normal(2))
        g = RHSolver(identity_symbols(2)).solve_jet(f, c)
        ref = fourier_matching_jet(f, c)
        oracle_err = max(oracle_err, np.max(np.abs(g.taylor()[: ref.shape[0]] - ref)))
    constraint, unique = 0.0, 0.0
    for k in range(50):
        sym = random_symbols(rng, 2, 128)
        f = random_trig_field(rng, (2,), 128)
        a, b = rng.standard_normal(2) + 1j * rng.standard_normal(2), rng.standard_normal(2) + 1j * rng.standard_normal(2)
        solver = RHSolver(sym)
        if k % 2:
            c = OneJet(complex(*rng.uniform(-0.6, 0.6, 2)), a, b)
            g = solver.solve_jet(f, c)
            side = max(np.max(np.abs(taylor_eval(g.taylor(), c.zeta0) - a)),
                       np.max(np.abs(taylor_eval(g.taylor(), c.zeta0, 1) - b)))
        else:
            c = TwoPoint(1.0, -1.0, a, b)
            g = solver.solve_two_point(f, c)
            side = max(np.max(np.abs(taylor_eval(g.taylor(), 1.0) - a)), np.max(np.abs(taylor_eval(g.taylor(), -1.0) - b)))
        constraint = max(constraint, rh_residual(sym, f, g), side)
        unique = max(unique, np.max(np.abs(solve_direct(sym, f, c).values - g.values)),
                     np.max(np.abs(_solve(RHSolver(sym, pivoting="qr"), f, c).values - g.values)))
    ok = oracle_err <= 1e-12 and constraint <= 1e-8 and unique <= 1e-9
    record_criterion(3, ok, f"oracle {oracle_err:.1e} (<= 1e-12), constraints {constraint:.1e} (<= 1e-8), "
                            f"re-assembly {unique:.1e} (<= 1e-9)")
    assert ok


def test_criterion_4_linearization_and_newton():
    rng = np.random.default_rng(404)
    rel = 0.0
    doms = [make_ellipsoid(2, np.eye(2), 0.2),
            make_ellipsoid(3, np.array([[1, 0.3j, 0], [0.3j, -0.5, 0.2], [0, 0.2, 0.4]]), 0.3)]
    for dom in doms:
        p = dom.sample_boundary(1, rng)[0]
        g = solve_preferred(dom, p, vhat=random_vhat(rng, dom.n - 1, 0.4))
        phi = g.phi + random_direction(rng, dom.n) * 1e-2
        A0 = make_state(dom, phi, g.datum).flat.A0
        t = 1e-5
        for _ in range(10):
            d = random_direction(rng, dom.n)
            lin = flatten_theta(apply_linearization(dom, phi, A0, d))
            fd = (flatten_theta(theta_residual(dom, phi + d * t, g.datum, A0=A0))
                  - flatten_theta(theta_residual(dom, phi - d * t, g.datum, A0=A0))) / (2 * t)
            rel = max(rel, np.linalg.norm(lin - fd) / np.linalg.norm(lin))
    ratio, solves, counted = 0.0, 0, 0
    for dom in doms:
        for p in dom.sample_boundary(5, rng):
            g = solve_preferred(dom, p, vhat=random_vhat(rng, dom.n - 1, 0.6))
            ratios = quadratic_ratios(g.diagnostics["history"])
            ratio = max([ratio] + ratios)
            counted += len(ratios) > 0
            solves += 1
    ok = rel <= 1e-4 and ratio <= 10.0 and counted == solves
    record_criterion(4, ok, f"linearization rel. error {rel:.1e} (<= 1e-4) over 20 directions; "
                            f"max r_(k+1)/r_k^2 {ratio:.2f} (<= 10) over {counted}/{solves} solves")
    assert ok


def _round_trips(dom, p, rng, count):
    nu = dom.normal(p)
    worst = 0.0
    done = 0
    while done < count:
        z = random_point(rng, dom)
        if np.linalg.norm(z - p) < 0.05:
            continue
        worst = max(worst, np.max(np.abs(psi_inverse(dom, p, psi(dom, p, z)) - z)))
        w = rng.standard_normal(dom.n) + 1j * rng.standard_normal(dom.n)
        w *= 0.95 * rng.random() ** (1.0 / (2 * dom.n)) / np.linalg.norm(w)
        if np.linalg.norm(w - nu) < 0.05:
            continue
        worst = max(worst, np.max(np.abs(psi(dom, p, psi_inverse(dom, p, w)) - w)))
        done += 1
    return worst


def test_criterion_5_boundary_representation():
    rng = np.random.default_rng(505)
    ball, ell = make_ball(2), make_ellipsoid(2, np.eye(2), 0.2)
    trip = {}
    for name, dom in (("ball", ball), ("ellipsoid", ell)):
        p = dom.ray_to_boundary(np.array([1.0, 0.3 + 0.2j]))
        trip[name] = _round_trips(dom, p, rng, 50)
    reports = {"ball": hcma_boundary_probe(ball, np.array([1.0, 0.0], dtype=complex), seed=5),
               "ellipsoid": hcma_boundary_probe(ell, ell.ray_to_boundary(np.array([1.0, 0.3 + 0.2j])), seed=5)}
    ok = max(trip.values()) <= 1e-6 and all(r.passed for r in reports.values())
    b, e = reports["ball"], reports["ellipsoid"]
    record_criterion(5, ok, (
        f"round trips ball {trip['ball']:.1e} / ellipsoid {trip['ellipsoid']:.1e} (<= 1e-6); "
        f"pullback {max(b.check('leaf_pullback').max_violation, e.check('leaf_pullback').max_violation):.1e} (<= 1e-6); "
        f"leaf Laplacian {max(b.check('leaf_laplacian').max_violation, e.check('leaf_laplacian').max_violation):.1e} "
        f"(<= 1e-5); ball decay bracket {b.check('boundary_decay_bracket').max_violation:.2f}, "
        f"nontangential bracket {b.check('nontangential_bracket').max_violation:.2f} (C <= 10)"))
    assert ok, (b.to_json(), e.to_json())


def test_criterion_6_canonical_chart(ball2, ellipsoid_chart, complex_chart):
    chart = build_chart(ball2, ball_geodesic(np.array([1.0, 0j]), np.array([1.0, 0j])))
    rng = np.random.default_rng(606)
    z = np.stack([(0.8 + 0.25 * rng.random(30)) * np.exp(2j * np.pi * rng.random(30)),
                  0.1 * rng.random(30) * np.exp(2j * np.pi * rng.random(30))], axis=1)
    ball_err = np.max(np.abs(canonical_rho(chart, z) - (np.sum(np.abs(z) ** 2, axis=1) - 1)))
    zeta = nodes(128)
    scalar_err = max(np.max(np.abs(spectral_factorize(CircleField(np.abs(2 + zeta) ** 2)).values[:, 0, 0]
                                   - 1 / (2 + zeta))),
                     np.max(np.abs(outer_function(CircleField(np.abs(2 + zeta) ** 2)).values - 1 / (2 + zeta))))
    matrix_err = 0.0
    for _ in range(10):
        M = random_outer_matrix(rng, 3).values
        R = CircleField(np.swapaxes(M, 1, 2) @ np.conj(M))
        H = spectral_factorize(R)
        V = M @ H.values
        matrix_err = max(matrix_err, factorization_residual(H, R), np.max(np.abs(V - V.mean(axis=0))))
    straight = max(rep.checks[k] for _, _, rep in (ellipsoid_chart, complex_chart) for k in IDENTITIES)
    s0 = max(ellipsoid_chart[2].S0_norm, complex_chart[2].S0_norm)
    ok = ball_err <= 1e-12 and scalar_err <= 1e-10 and matrix_err <= 1e-9 and straight <= 1e-7 and s0 < 1
    record_criterion(6, ok, f"ball chart {ball_err:.1e} (<= 1e-12), scalar {scalar_err:.1e} (<= 1e-10), "
                            f"matrix {matrix_err:.1e} (<= 1e-9), straightening {straight:.1e} (<= 1e-7, "
                            f"symmetric identity in chain-rule form), max |S0| {s0:.3f} (< 1)")
    assert ok


@pytest.mark.xfail(strict=True, reason="the symmetric identity as literally written omits the rho_z F'' term")
def test_criterion_6_literal_symmetric_identity(ellipsoid_chart, complex_chart):
    worst = max(ellipsoid_chart[2].checks["symmetric_block"],
                complex_chart[2].checks["symmetric_block"])
    record_criterion(6, worst <= 1e-7, f"literal A0^T rho_zz A0 = blockdiag(0, S0): violation {worst:.2e} "
                                       "(<= 1e-7); see the decisions ledger", label="literal symmetric form")
    assert worst <= 1e-7


def test_criterion_7_parameter_smoothness(ellipsoid2, complex_ellipsoid3):
    ratios, ok = [], True
    for dom, count in ((make_ellipsoid(2, np.eye(2), 0.1), 1), (ellipsoid2, 2), (complex_ellipsoid3, 1)):
        rep = run_smoothness_suite(dom, seed=11, count=count)
        ok &= rep.passed
        ratios += rep.info["ratios"]
    record_criterion(7, ok, "Richardson ratios " + ", ".join(f"{r:.3f}" for r in ratios) + " (in [3.5, 4.5])")
    assert ok
