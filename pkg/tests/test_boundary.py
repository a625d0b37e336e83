import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lgeo.boundary import (
    LeafMap,
    ball_leaf,
    ball_split,
    laplacian_5,
    laplacian_9,
    leaf_kernel,
    leaf_kernel_samples,
    leaf_stencil,
    poisson_kernel,
    psi,
    psi_inverse,
    shoot,
)
from lgeo.domains import fiber_unchart, make_ball
from lgeo.errors import TooCloseToSingularity
from lgeo.geodesic import solve_preferred

E1 = np.array([1.0, 0.0], dtype=complex)
seeds = st.integers(0, 2**31 - 1)


def ball_kernel(z, p):
    return -(1 - np.vdot(z, z).real) / abs(1 - np.vdot(p, z)) ** 2


# closed-form ball leaves --------------------------------------------------------------


@given(seeds)
def test_ball_split_inverts_ball_leaf(seed):
    rng = np.random.default_rng(seed)
    nu = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    nu /= np.linalg.norm(nu)
    w = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    w *= 0.95 * rng.random() / np.linalg.norm(w)
    v, zeta = ball_split(nu, w)
    c = np.vdot(nu, v)
    assert abs(np.linalg.norm(v) - 1) < 1e-13 and c.real > 0 and abs(c.imag) < 1e-12
    assert np.max(np.abs(ball_leaf(nu, v, zeta) - w)) < 1e-13
    assert abs(zeta) < 1


def test_ball_split_examples():
    v, zeta = ball_split(E1, np.zeros(2))
    assert np.allclose(v, E1) and abs(zeta) < 1e-15
    with pytest.raises(TooCloseToSingularity):
        ball_split(E1, E1)


# shooting ----------------------------------------------------------------------------------


def test_shoot_ball_examples(ball2):
    c = shoot(ball2, E1, np.zeros(2))
    assert np.max(np.abs(c.vhat)) < 1e-10 and abs(c.zeta) < 1e-10 and c.converged
    c = shoot(ball2, E1, -E1)
    assert np.max(np.abs(c.vhat)) < 1e-8 and abs(c.zeta + 1) < 1e-8
    with pytest.raises(TooCloseToSingularity):
        shoot(ball2, E1, E1 - 1e-3)


@pytest.mark.parametrize("which", ["ball", "ellipsoid"])
def test_shoot_recovers_leaf_coordinates(which, ball2, ellipsoid2):
    dom = ball2 if which == "ball" else ellipsoid2
    rng = np.random.default_rng(0)
    p = dom.ray_to_boundary(np.array([1.0, 0.3 + 0.2j]))
    leaves = LeafMap(dom, p)
    for _ in range(3):
        vhat = 0.5 * rng.random() * np.exp(2j * np.pi * rng.random(1))
        zeta = 0.7 * np.sqrt(rng.random()) * np.exp(2j * np.pi * rng.random())
        z = solve_preferred(dom, p, vhat=vhat)(zeta)
        c = shoot(dom, p, z, leaves=leaves)
        assert np.max(np.abs(c.vhat - vhat)) < 1e-7 and abs(c.zeta - zeta) < 1e-7
        assert np.isfinite(c.jacobian_condition) and c.jacobian_condition < 1e6


# the representation and the kernel ------------------------------------------------------


def test_psi_examples(ball2):
    assert np.allclose(psi(ball2, E1, E1), E1)
    assert np.max(np.abs(psi(ball2, E1, np.zeros(2)))) < 1e-10
    assert np.max(np.abs(psi_inverse(ball2, E1, np.zeros(2)))) < 1e-12
    assert abs(poisson_kernel(ball2, E1, np.zeros(2)) + 1) < 1e-10


def test_ball_kernel_closed_form(ball2):
    rng = np.random.default_rng(1)
    p = ball2.sample_boundary(1, rng)[0]
    for _ in range(5):
        z = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        z *= 0.9 * rng.random() / np.linalg.norm(z)
        if np.linalg.norm(z - p) < 0.05:
            continue
        assert abs(poisson_kernel(ball2, p, z) - ball_kernel(z, p)) < 1e-8


def test_round_trips_and_range(ellipsoid2):
    rng = np.random.default_rng(2)
    p = ellipsoid2.ray_to_boundary(np.array([1.0, 0.3 + 0.2j]))
    nu = ellipsoid2.normal(p)
    for _ in range(3):
        z = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        z = 0.7 * rng.random() * ellipsoid2.ray_to_boundary(z)
        if np.linalg.norm(z - p) < 0.05:
            continue
        w = psi(ellipsoid2, p, z)
        assert np.linalg.norm(w) < 1
        assert np.max(np.abs(psi_inverse(ellipsoid2, p, w) - z)) < 1e-6
        w2 = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        w2 *= 0.9 * rng.random() / np.linalg.norm(w2)
        if np.linalg.norm(w2 - nu) > 0.05:
            assert np.max(np.abs(psi(ellipsoid2, p, psi_inverse(ellipsoid2, p, w2)) - w2)) < 1e-6


def test_boundary_points_map_to_the_sphere(ellipsoid2):
    rng = np.random.default_rng(3)
    p = ellipsoid2.ray_to_boundary(E1)
    for x in ellipsoid2.sample_boundary(4, rng):
        if np.linalg.norm(x - p) < 0.3:
            continue
        assert abs(np.linalg.norm(psi(ellipsoid2, p, x)) - 1) < 1e-7
        assert abs(poisson_kernel(ellipsoid2, p, x)) < 1e-6


def test_leaf_pullback(ellipsoid2):
    rng = np.random.default_rng(4)
    p = ellipsoid2.ray_to_boundary(np.array([1.0, 0.3 + 0.2j]))
    nu = ellipsoid2.normal(p)
    for _ in range(3):
        vhat = 0.5 * rng.random() * np.exp(2j * np.pi * rng.random(1))
        zeta = 0.7 * np.sqrt(rng.random()) * np.exp(2j * np.pi * rng.random())
        g = solve_preferred(ellipsoid2, p, vhat=vhat)
        c = np.vdot(nu, fiber_unchart(ellipsoid2, p, vhat)).real
        value = poisson_kernel(ellipsoid2, p, g(zeta), guess=(vhat, zeta))
        assert abs(value - leaf_kernel(c, zeta)) < 1e-6
        assert value < 0


# discrete Laplacians --------------------------------------------------------------------------


def test_laplacians_on_known_functions():
    h = 1e-2
    harmonic = leaf_stencil(lambda z: (z**3).real + np.exp(z).imag, 0.2 + 0.1j, h)
    assert abs(laplacian_9(harmonic, h)) < 1e-9
    quad = leaf_stencil(lambda z: abs(z) ** 2, 0.3, h)
    assert abs(laplacian_5(quad, h) - 4) < 1e-9 and abs(laplacian_9(quad, h) - 4) < 1e-9


def test_disc_poisson_kernel_is_harmonic_and_five_point_error_is_second_order():
    kernel = lambda z: leaf_kernel(0.8, z)
    errs = []
    for h in (2e-2, 1e-2):
        S = leaf_stencil(kernel, 0.3 - 0.2j, h)
        assert abs(laplacian_9(S, h)) < 1e-6
        errs.append(abs(laplacian_5(S, h)))
    assert 3.5 < errs[0] / errs[1] < 4.5


def test_leaf_laplacian_from_shooting(ball3):
    p = ball3.ray_to_boundary(np.array([1.0, 0.2j, 0.1]))
    S = leaf_kernel_samples(ball3, p, np.array([0.3, -0.1j]), 0.2 + 0.1j, 1e-2)
    assert abs(laplacian_9(S, 1e-2)) < 1e-5
