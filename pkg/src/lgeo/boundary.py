"""Boundary spherical representation and the pluricomplex Poisson kernel.

Every point ``z`` of the closed domain other than ``p`` lies on exactly one
preferred geodesic through ``p``; its leaf coordinates ``(vhat, zeta)`` are
found by shooting, i.e. Newton's method on ``phi_{p, v(vhat)}(zeta) = z``.
The representation ``Psi_p`` sends ``z`` to the point with the same leaf
coordinates on the ball leaf through the unit normal ``nu_p``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .domains import Domain, fiber_chart, fiber_unchart
from .errors import GeodesicError, NoConvergence, TooCloseToSingularity
from .geodesic import GeodesicDisc, SolverOptions, solve_preferred

log = logging.getLogger(__name__)

DELTA_EXCL = 1e-2
FD_STEP = 1e-6
TOL_SHOOT = 1e-10


@dataclass(frozen=True)
class LeafCoordinates:
    """Leaf coordinates of a point: fibre coordinate and disc parameter."""

    vhat: np.ndarray
    zeta: complex
    converged: bool
    jacobian_condition: float
    residual: float
    iterations: int = 0


# the ball leaves through nu_p ------------------------------------------------


def ball_leaf(nu, v, zeta):
    """Point ``nu + (zeta - 1) <v, nu> v`` of the ball leaf through ``nu``."""
    nu = np.asarray(nu, dtype=complex)
    v = np.asarray(v, dtype=complex)
    return nu + (zeta - 1.0) * np.vdot(nu, v) * v


def ball_split(nu, w):
    """Direction ``v`` and parameter ``zeta`` of the ball leaf through ``nu`` and ``w``.

    Inverts :func:`ball_leaf` in closed form for ``w != nu``.
    """
    nu = np.asarray(nu, dtype=complex)
    w = np.asarray(w, dtype=complex)
    a = np.vdot(w, nu)  # <nu, w>
    diff = w - nu
    dist = np.linalg.norm(diff)
    if dist == 0.0:
        raise TooCloseToSingularity("w coincides with the pole nu_p")
    v = -((1.0 - a) / abs(1.0 - a)) * diff / dist
    zeta = 1.0 - dist**2 / abs(1.0 - a) ** 2 * (1.0 - np.conj(a))
    return v, complex(zeta)


def _initial_coordinates(dom: Domain, p, z):
    """Leaf coordinates of ``z`` as if the domain were the ball with pole ``nu_p``."""
    nu = dom.normal(p)
    w = nu + (np.asarray(z) - p)
    r = np.linalg.norm(w)
    if r > 0.995:
        w = w * 0.995 / r
    v, zeta = ball_split(nu, w)
    return fiber_chart(dom, p, v), zeta


# shooting --------------------------------------------------------------------


class LeafMap:
    """Evaluates ``(vhat, zeta) -> phi_{p, v(vhat)}(zeta)`` with warm-started solves."""

    def __init__(self, dom: Domain, p, opts: SolverOptions = SolverOptions()):
        self.dom = dom
        self.p = np.asarray(p, dtype=complex)
        self.opts = opts
        self._last: GeodesicDisc | None = None

    def disc(self, vhat, warm: GeodesicDisc | None = None) -> GeodesicDisc:
        initial = warm if warm is not None else self._last
        try:
            g = solve_preferred(self.dom, self.p, vhat=vhat, opts=self.opts, initial=initial)
        except GeodesicError:
            if initial is None:
                raise
            g = solve_preferred(self.dom, self.p, vhat=vhat, opts=self.opts)
        self._last = g
        return g


def _pack(vhat, zeta) -> np.ndarray:
    return np.concatenate([vhat.real, vhat.imag, [zeta.real, zeta.imag]])


def _unpack(x: np.ndarray, m: int):
    return x[:m] + 1j * x[m : 2 * m], complex(x[2 * m], x[2 * m + 1])


def _realify(z: np.ndarray) -> np.ndarray:
    return np.concatenate([z.real, z.imag])


def shoot(dom: Domain, p, z, opts: SolverOptions = SolverOptions(), delta_excl: float = DELTA_EXCL,
          tol: float = TOL_SHOOT, max_iter: int = 30, guess=None, leaves: LeafMap | None = None) -> LeafCoordinates:
    """Leaf coordinates ``(vhat, zeta)`` with ``phi_{p, v}(zeta) = z``.

    Newton's method over ``(vhat, zeta)`` in real coordinates.  Derivatives
    in ``vhat`` are forward differences of re-solved geodesics; the
    derivative in ``zeta`` is ``phi'(zeta)``.  ``guess`` is an optional
    starting pair ``(vhat, zeta)``.
    """
    p = np.asarray(p, dtype=complex)
    z = np.asarray(z, dtype=complex)
    if np.linalg.norm(z - p) < delta_excl:
        raise TooCloseToSingularity(f"|z - p| = {np.linalg.norm(z - p):.2e} < {delta_excl}")
    n = dom.n
    m = n - 1
    leaves = leaves or LeafMap(dom, p, opts)
    vhat, zeta = guess if guess is not None else _initial_coordinates(dom, p, z)
    vhat = np.asarray(vhat, dtype=complex)
    x = _pack(vhat, complex(zeta))
    g = leaves.disc(vhat)
    F = _realify(g(zeta) - z)
    res = float(np.linalg.norm(F))
    cond = np.inf
    for it in range(max_iter):
        vhat, zeta = _unpack(x, m)
        J = np.empty((2 * n, 2 * n))
        for k in range(2 * m):
            e = np.zeros(m, dtype=complex)
            e[k % m] = 1.0 if k < m else 1j
            gk = leaves.disc(vhat + FD_STEP * e, warm=g)
            J[:, k] = _realify(gk(zeta) - g(zeta)) / FD_STEP
        d = g.derivative(zeta)
        J[:, 2 * m] = _realify(d)
        J[:, 2 * m + 1] = _realify(1j * d)
        cond = float(np.linalg.cond(J))
        if res <= tol:
            return LeafCoordinates(vhat, zeta, True, cond, res, it)
        step = np.linalg.solve(J, -F)
        t, accepted = 1.0, False
        for _ in range(12):
            trial = x + t * step
            tv, tz = _unpack(trial, m)
            if np.vdot(tv, tv).real < 1.0 and abs(tz) < 1.2:
                try:
                    gt = leaves.disc(tv, warm=g)
                    Ft = _realify(gt(tz) - z)
                    if np.linalg.norm(Ft) < res:
                        accepted = True
                        break
                except GeodesicError:
                    pass
            t *= 0.5
        if not accepted:
            raise NoConvergence(f"shooting line search failed at {res:.3e}", it, res)
        x, g, F = trial, gt, Ft
        res = float(np.linalg.norm(F))
        log.debug("shooting iteration %d: |phi(zeta) - z| = %.3e", it + 1, res)
    vhat, zeta = _unpack(x, m)
    if res <= tol:
        return LeafCoordinates(vhat, zeta, True, cond, res, max_iter)
    raise NoConvergence(f"shooting stalled at {res:.3e}", max_iter, res)


def leaf_point(dom: Domain, p, vhat, zeta, opts: SolverOptions = SolverOptions()):
    """Evaluate ``phi_{p, v(vhat)}(zeta)``."""
    g = solve_preferred(dom, p, vhat=vhat, opts=opts)
    return g(zeta)


# the representation and the kernel --------------------------------------------


def psi_from_leaf(dom: Domain, p, coords: LeafCoordinates) -> np.ndarray:
    nu = dom.normal(p)
    v = fiber_unchart(dom, p, coords.vhat)
    return ball_leaf(nu, v, coords.zeta)


def psi(dom: Domain, p, z, opts: SolverOptions = SolverOptions(), **kw) -> np.ndarray:
    """Boundary spherical representation ``Psi_p(z)`` (with ``Psi_p(p) = nu_p``)."""
    p = np.asarray(p, dtype=complex)
    z = np.asarray(z, dtype=complex)
    if np.array_equal(z, p):
        return dom.normal(p)
    return psi_from_leaf(dom, p, shoot(dom, p, z, opts, **kw))


def psi_inverse(dom: Domain, p, w, opts: SolverOptions = SolverOptions(), initial=None) -> np.ndarray:
    """Inverse representation: evaluate the leaf of ``w``'s ball coordinates."""
    p = np.asarray(p, dtype=complex)
    nu = dom.normal(p)
    w = np.asarray(w, dtype=complex)
    if np.array_equal(w, nu):
        return p
    v, zeta = ball_split(nu, w)
    g = solve_preferred(dom, p, vhat=fiber_chart(dom, p, v), opts=opts, initial=initial)
    return g(zeta)


def kernel_from_psi(nu, w) -> float:
    """``-(1 - |w|^2) / |1 - <w, nu>|^2``."""
    nu = np.asarray(nu, dtype=complex)
    w = np.asarray(w, dtype=complex)
    return float(-(1.0 - np.vdot(w, w).real) / abs(1.0 - np.vdot(nu, w)) ** 2)


def poisson_kernel(dom: Domain, p, z, opts: SolverOptions = SolverOptions(), **kw) -> float:
    """Pluricomplex Poisson kernel ``P(z, p)`` evaluated through ``Psi_p``."""
    return kernel_from_psi(dom.normal(p), psi(dom, p, z, opts, **kw))


def leaf_kernel(c: float, zeta) -> np.ndarray:
    """Kernel pulled back to a leaf: ``-(1/c^2) (1 - |zeta|^2) / |1 - zeta|^2``."""
    zeta = np.asarray(zeta, dtype=complex)
    return -(1.0 - np.abs(zeta) ** 2) / (c**2 * np.abs(1.0 - zeta) ** 2)


# discrete leaf Laplacians --------------------------------------------------


def laplacian_5(values: np.ndarray, h: float) -> float:
    """Five-point Laplacian from a 3x3 stencil of samples ``values[i, j] = u(x_i, y_j)``."""
    u = values
    return float((u[0, 1] + u[2, 1] + u[1, 0] + u[1, 2] - 4.0 * u[1, 1]) / h**2)


def laplacian_9(values: np.ndarray, h: float) -> float:
    """Nine-point (Mehrstellen) Laplacian; exact to sixth order on harmonic functions."""
    u = values
    edges = u[0, 1] + u[2, 1] + u[1, 0] + u[1, 2]
    corners = u[0, 0] + u[0, 2] + u[2, 0] + u[2, 2]
    return float((4.0 * edges + corners - 20.0 * u[1, 1]) / (6.0 * h**2))


def leaf_stencil(func, zeta0: complex, h: float) -> np.ndarray:
    """Samples ``func(zeta0 + i h + j h sqrt(-1))`` for ``i, j in {-1, 0, 1}``."""
    out = np.empty((3, 3))
    for i, dx in enumerate((-h, 0.0, h)):
        for j, dy in enumerate((-h, 0.0, h)):
            out[i, j] = func(zeta0 + dx + 1j * dy)
    return out


def leaf_kernel_samples(dom: Domain, p, vhat, zeta0: complex, h: float,
                        opts: SolverOptions = SolverOptions()) -> np.ndarray:
    """Kernel values at a 3x3 stencil on one leaf, each obtained by shooting."""
    g = solve_preferred(dom, p, vhat=vhat, opts=opts)
    leaves = LeafMap(dom, p, opts)
    vhat = np.asarray(vhat, dtype=complex)

    def value(zeta):
        coords = shoot(dom, p, g(zeta), opts, guess=(vhat, zeta), leaves=leaves)
        return kernel_from_psi(dom.normal(p), psi_from_leaf(dom, p, coords))

    return leaf_stencil(value, zeta0, h)
