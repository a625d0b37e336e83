import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_trig_field
from lgeo.circle import (
    CircleField,
    analytic_projection,
    circle_derivative,
    hilbert_transform,
    holomorphic_extend,
    nodes,
    poincare_distance,
    taylor_eval,
    winding_number,
)
from lgeo.errors import NotHolomorphic, OutsideDisc, TooCloseToZero

N = 128
seeds = st.integers(0, 2**31 - 1)


def trace(func, n=N):
    return CircleField.from_function(func, n)


# hilbert transform ---------------------------------------------------------------


def test_hilbert_of_cosine_is_sine():
    u = trace(lambda z: z.real)
    assert np.allclose(hilbert_transform(u).values, nodes(N).imag, atol=1e-14)


def test_hilbert_annihilates_constants():
    assert hilbert_transform(trace(lambda z: 3.0 + 0 * z)).sup_norm() < 1e-15


def test_hilbert_of_real_cubic():
    u = trace(lambda z: (z**3).real)
    assert np.allclose(hilbert_transform(u).values, (nodes(N) ** 3).imag, atol=1e-14)


@given(seeds)
def test_hilbert_twice_is_minus_identity_plus_mean(seed):
    rng = np.random.default_rng(seed)
    u = random_trig_field(rng, (), N).map(np.real)
    back = hilbert_transform(hilbert_transform(u))
    assert np.max(np.abs(back.values - (-u.values + u.mean()))) < 1e-12
    assert hilbert_transform(u).is_real_valued()


# analytic projection --------------------------------------------------------------


def test_projection_kills_holomorphic_traces():
    assert analytic_projection(trace(lambda z: z**2)).sup_norm() < 1e-15
    assert analytic_projection(trace(lambda z: 2.0 + 0 * z)).sup_norm() < 1e-15


def test_projection_keeps_inverse_power():
    u = trace(lambda z: 1 / z)
    assert np.allclose(analytic_projection(u).values, u.values, atol=1e-15)


def test_projection_matches_hilbert_formula():
    rng = np.random.default_rng(4)
    u = random_trig_field(rng, (2,), N)
    formula = 0.5 * (u.values - 1j * hilbert_transform(u).values) - 0.5 * u.mean()
    # the formula and the projection differ only on the Nyquist mode, which is zero here
    assert np.max(np.abs(analytic_projection(u).values - formula)) < 1e-13


@given(seeds)
def test_projection_is_idempotent(seed):
    u = random_trig_field(np.random.default_rng(seed), (3,), N)
    once = analytic_projection(u)
    assert np.max(np.abs(analytic_projection(once).values - once.values)) < 1e-12


@given(seeds)
def test_projection_vanishes_iff_holomorphic(seed):
    rng = np.random.default_rng(seed)
    u = random_trig_field(rng, (), N)
    hol = u - analytic_projection(u)
    assert hol.is_holomorphic()
    assert not u.is_holomorphic()


# evaluation and derivatives --------------------------------------------------------


def test_extend_examples():
    assert abs(holomorphic_extend(trace(lambda z: z**2), 0.0)) < 1e-15
    assert abs(holomorphic_extend(trace(lambda z: 2 + 1j + 0 * z), 0.3 - 0.2j) - (2 + 1j)) < 1e-14
    assert abs(holomorphic_extend(trace(lambda z: (1 + z) ** 2), 0.5) - 2.25) < 1e-14


def test_extend_rejects_antiholomorphic():
    with pytest.raises(NotHolomorphic):
        holomorphic_extend(trace(lambda z: z + 1 / z), 0.1)


@given(seeds)
def test_extend_matches_cauchy_integral(seed):
    rng = np.random.default_rng(seed)
    u = random_trig_field(rng, (2,), N)
    u = u - analytic_projection(u)
    # trapezoid quadrature of the Cauchy kernel converges like |w|^N
    pts = 0.8 * np.sqrt(rng.random(20)) * np.exp(2j * np.pi * rng.random(20))
    z = nodes(N)
    cauchy = np.array([np.mean(u.values * (z / (z - w))[:, None], axis=0) for w in pts])
    assert np.max(np.abs(holomorphic_extend(u, pts) - cauchy)) < 1e-10


def test_taylor_eval_agrees_with_horner():
    rng = np.random.default_rng(2)
    u = random_trig_field(rng, (2,), N)
    u = u - analytic_projection(u)
    pts = 0.8 * np.exp(2j * np.pi * rng.random(7))
    assert np.allclose(taylor_eval(u.taylor(), pts), holomorphic_extend(u, pts), atol=1e-13)


def test_derivative_examples():
    assert np.allclose(circle_derivative(trace(lambda z: z)).values, 1.0, atol=1e-14)
    assert np.allclose(circle_derivative(trace(lambda z: z**2), 2).values, 2.0, atol=1e-13)
    assert abs(circle_derivative(trace(lambda z: z**3)).at_one() - 3.0) < 1e-13
    assert abs(trace(lambda z: z**3).at_one(1) - 3.0) < 1e-13
    assert abs(trace(lambda z: z**3).at_one(2) - 6.0) < 1e-12


def test_serialization_round_trip():
    u = random_trig_field(np.random.default_rng(1), (2,), N)
    back = CircleField.from_json(u.to_json())
    assert np.max(np.abs(back.values - u.values)) < 1e-15
    assert u.to_dict()["dim"] == 2 and u.to_dict()["n"] == N


def test_values_and_coefficients_are_consistent():
    u = random_trig_field(np.random.default_rng(3), (), N)
    back = CircleField.from_coeffs(u.coeffs)
    assert np.max(np.abs(back.values - u.values)) <= 1e-13 * u.sup_norm()


# winding numbers and distances ------------------------------------------------------


def test_winding_examples():
    assert winding_number(trace(lambda z: z)) == 1
    assert winding_number(trace(lambda z: -1.0 + 0 * z)) == 0
    # <0 - zeta e1, zeta e1> on the radial ball geodesic is identically -1
    assert winding_number(trace(lambda z: -z * np.conj(z))) == 0
    assert winding_number(trace(lambda z: z ** -2)) == -2


def test_winding_guard():
    with pytest.raises(TooCloseToZero):
        winding_number(trace(lambda z: z - 1.0))


@given(seeds, st.integers(-3, 3))
def test_winding_stable_under_small_perturbation(seed, k):
    rng = np.random.default_rng(seed)
    u = trace(lambda z: 2.0 * z**k, 1024)
    noise = random_trig_field(rng, (), 1024, degree=4)
    noise = noise * (0.5 / noise.sup_norm())
    assert winding_number(u + noise) == k


def test_poincare_examples():
    assert poincare_distance(0, 0) == 0.0
    assert abs(poincare_distance(0, 0.5) - 0.5493061443340549) < 1e-15
    a = 0.3
    moved = (0.3j - a) / (1 - a * 0.3j)
    assert abs(poincare_distance(0.3, 0.3j) - poincare_distance(0, moved)) < 1e-14
    with pytest.raises(OutsideDisc):
        poincare_distance(1.0, 0)


@given(st.complex_numbers(max_magnitude=0.95), st.complex_numbers(max_magnitude=0.95))
def test_poincare_symmetric(a, b):
    assert abs(poincare_distance(a, b) - poincare_distance(b, a)) < 1e-12
