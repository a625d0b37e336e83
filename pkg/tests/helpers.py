"""Shared helpers for the geodesic tests."""

import numpy as np

from lgeo.circle import CircleField


def flatten_theta(r) -> np.ndarray:
    """All blocks of a residual as one complex vector."""
    return np.concatenate([np.asarray(r.proper, dtype=complex).ravel(), r.tangency.values.ravel(),
                           np.ravel(r.point), np.ravel(r.velocity), [r.normalization]])


def random_direction(rng, n: int, degree: int = 6, nodes: int = 256) -> CircleField:
    """Random holomorphic polynomial trace with decaying coefficients."""
    k = np.arange(degree)[:, None]
    taylor = (rng.standard_normal((degree, n)) + 1j * rng.standard_normal((degree, n))) / (1.0 + k) ** 2
    return CircleField.from_taylor(taylor, nodes)


def quadratic_ratios(history, floor: float = 1e-11) -> list:
    """``r_{k+1} / (r_k^2)`` over the last three steps, ignoring steps that land below the floor.

    The floor is the larger of ``floor`` and ten times the smallest residual
    reached, i.e. the discretization level at which the iteration stalls.
    """
    h = list(history)
    floor = max(floor, 10.0 * min(h))
    out = []
    for a, b in zip(h[-4:-1], h[-3:]):
        if b <= floor:
            continue
        out.append(b / a**2)
    return out
