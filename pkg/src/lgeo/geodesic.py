"""Spectral Newton solver for preferred complex geodesics.

A geodesic is represented by the trace of ``phi`` on the circle (Taylor
coefficients below ``N/2``).  The nonlinear system has five blocks:

1. ``rho(phi)`` on the circle (properness),
2. ``Pi([A0^T rho_z(phi)] / (A0^T rho_z(phi))_1)`` (holomorphic extension of the dual),
3. ``phi(1) - p``,
4. ``phi'(1) - <v, nu_p> v``,
5. ``Im(rho_z(phi(1))^T phi''(1) + phi'(1)^T rho_zz(phi(1)) phi'(1))`` (normalization),

where ``A0`` is a flattening matrix built from the current iterate.  Each
Newton step solves the linearized system by splitting ``A0^{-1} dphi`` into a
scalar first component (a Hilbert transform solve) and the remaining
components (a linear Riemann-Hilbert problem with a one-jet constraint at 1).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .circle import (
    DEFAULT_NODES,
    CircleField,
    analytic_projection,
    circle_derivative,
    hilbert_transform,
    holomorphic_extend,
    holomorphic_part,
    nodes,
    poincare_distance,
    taylor_eval,
    winding_number,
)
from .domains import BoundaryDatum, Domain, make_ball, make_datum, unitary_frame
from .errors import (
    DualDegenerate,
    DualNotHolomorphic,
    FirstComponentVanishes,
    GeodesicError,
    NoConvergence,
    NotInLp,
    SampleOffBoundary,
)
from .rh import OneJet, RHSolver, RHSymbols

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverOptions:
    """Knobs of the Newton/continuation solver."""

    nodes: int = DEFAULT_NODES
    tol: float = 1e-8
    polish_tol: float = 1e-11
    max_iter: int = 25
    max_backtrack: int = 8
    corona_fraction: float = 0.05
    band_fraction: float = 1.0 / 3.0
    refine: int = 2
    max_nodes: int = 1024
    homotopy_min_step: float = 1.0 / 64
    check_dual: bool = True


@dataclass(frozen=True)
class Flattening:
    """Flattening matrix ``A0`` with ``A0^T dual = e_1`` and first column ``phi'``."""

    A0: CircleField
    rotation: np.ndarray
    min_modulus: float

    def derivatives_at_one(self):
        A = self.A0
        return A.at_one(0), A.at_one(1), A.at_one(2)


@dataclass(frozen=True)
class ThetaResidual:
    proper: np.ndarray
    tangency: CircleField
    point: np.ndarray
    velocity: np.ndarray
    normalization: float

    def norms(self) -> dict:
        return {
            "proper": float(np.max(np.abs(self.proper))),
            "tangency": self.tangency.sup_norm(),
            "point": float(np.linalg.norm(self.point)),
            "velocity": float(np.linalg.norm(self.velocity)),
            "normalization": float(abs(self.normalization)),
        }

    def norm(self) -> float:
        return max(self.norms().values())

    def __sub__(self, other: "ThetaResidual") -> "ThetaResidual":
        return ThetaResidual(
            self.proper - other.proper,
            self.tangency - other.tangency,
            self.point - other.point,
            self.velocity - other.velocity,
            self.normalization - other.normalization,
        )

    def scaled(self, s: float) -> "ThetaResidual":
        return ThetaResidual(
            s * self.proper, s * self.tangency, s * self.point, s * self.velocity, s * self.normalization
        )


@dataclass(frozen=True, eq=False)
class GeodesicDisc:
    """Solved geodesic with its dual map, flattening and diagnostics."""

    phi: CircleField
    dual: CircleField
    datum: BoundaryDatum
    A0: CircleField
    diagnostics: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.phi.shape[0]

    def __call__(self, zeta):
        return holomorphic_extend(self.phi, zeta, check=False)

    def derivative(self, zeta, order: int = 1):
        return taylor_eval(self.phi.taylor(), zeta, order)

    def to_dict(self) -> dict:
        return {
            "datum": self.datum.to_dict(),
            "phi": self.phi.to_dict(),
            "dual": self.dual.to_dict(),
            "diagnostics": {k: v for k, v in self.diagnostics.items() if k != "history"}
            | {"history": list(self.diagnostics.get("history", []))},
        }


# closed forms on the ball ---------------------------------------------------


def ball_geodesic(q, v, n_nodes: int = DEFAULT_NODES) -> GeodesicDisc:
    """Preferred geodesic ``q + (zeta - 1) <v, q> v`` of the unit ball and its dual."""
    q = np.asarray(q, dtype=complex)
    v = np.asarray(v, dtype=complex)
    v = v / np.linalg.norm(v)
    c = np.vdot(q, v)  # <v, q> = sum v_j conj(q_j)
    if c.real <= 0 or abs(c.imag) > 1e-10:
        raise NotInLp(f"<v, q> = {c:.3e}")
    c = c.real
    phi = CircleField.from_taylor(np.array([q - c * v, c * v]), n_nodes)
    dual = CircleField.from_taylor(np.array([np.conj(v) / c, (np.conj(q) - c * np.conj(v)) / c**2]), n_nodes)
    dom = make_ball(q.shape[0])
    datum = make_datum(dom, q, v=v)
    A0 = flattening_matrix(phi, dual).A0
    return GeodesicDisc(phi, dual, datum, A0, {"closed_form": True})


# dual map and flattening -----------------------------------------------------


def raw_dual(dom: Domain, phi: CircleField) -> tuple[CircleField, np.ndarray]:
    """Nodal ``zeta rho_z(phi) / <zeta rho_z(phi), conj phi'>`` and the denominator."""
    z = nodes(phi.num_nodes)
    g = dom.grad(phi.values)
    dphi = circle_derivative(phi).values
    m = z * np.einsum("ki,ki->k", g, dphi)
    return CircleField(z[:, None] * g / m[:, None]), m


def _corona_frame(dual: np.ndarray):
    """Unitary whose first two columns ``w1, w2`` keep ``(w1^T dual, w2^T dual)`` away from 0.

    Candidate planes are the dominant right singular plane of the nodal dual
    matrix, planes spanned by conjugated dual vectors at a few nodes, and
    coordinate planes; the largest worst-case ratio
    ``|(w1^T dual, w2^T dual)| / max |dual|`` wins.
    """
    n = dual.shape[1]
    scale = np.max(np.linalg.norm(dual, axis=1))
    if n == 2:
        return np.eye(2, dtype=complex), float(np.min(np.linalg.norm(dual, axis=1)) / scale)
    idx = np.linspace(0, dual.shape[0], 6, endpoint=False).astype(int)
    cands = [np.linalg.svd(dual, full_matrices=False)[2][:2].conj().T]
    cands += [np.conj(dual[[a, b]]).T for i, a in enumerate(idx) for b in idx[i + 1 :]]
    eye = np.eye(n)
    cands += [eye[:, [a, b]] for a in range(n) for b in range(a + 1, n)]
    best, best_val = None, -1.0
    for W in cands:
        Q, R = np.linalg.qr(np.column_stack([W, eye]))
        if abs(R[1, 1]) < 1e-8 * abs(R[0, 0]):
            continue
        val = np.min(np.linalg.norm(dual @ Q[:, :2], axis=1)) / scale
        if val > best_val:
            best, best_val = Q, val
    return best, float(best_val)


CORONA_SMOOTHING = 4.0


def corona_pair(f1: np.ndarray, f2: np.ndarray, degree: int):
    """Polynomials ``psi1, psi2`` of given degree with ``psi1 f1 + psi2 f2 = 1`` on the circle.

    The Bezout identity leaves a free multiple of ``(-f2, f1)``; it is fixed
    by minimizing a Sobolev-weighted norm of the Taylor coefficients, which
    keeps the spectrum of the pair decaying.  Returns the nodal values of
    both and the sup-norm Bezout residual.
    """
    N = f1.shape[0]
    z = nodes(N)
    k = np.arange(degree + 1)
    V = z[:, None] ** k[None, :]
    weight = np.tile((1.0 + k) ** -CORONA_SMOOTHING, 2)
    M = np.hstack([f1[:, None] * V, f2[:, None] * V]) * weight
    coef = weight * np.linalg.lstsq(M, np.ones(N, dtype=complex), rcond=None)[0]
    psi1 = V @ coef[: degree + 1]
    psi2 = V @ coef[degree + 1 :]
    res = float(np.max(np.abs(psi1 * f1 + psi2 * f2 - 1.0)))
    return psi1, psi2, res


def flattening_matrix(phi: CircleField, dual: CircleField, fraction: float = 0.05) -> Flattening:
    """Holomorphic ``A0`` with first column ``phi'`` and ``A0^T dual = e_1``.

    Coordinates are rotated so that the first two dual components have no
    common zero; the remaining columns use a corona pair for those two.  In
    dimension two no corona pair is needed and ``det A0 = <phi', dual> = 1``.
    """
    n = phi.shape[0]
    N = phi.num_nodes
    dual_vals = np.asarray(dual.values)
    gamma, ratio = _corona_frame(dual_vals)
    if ratio < fraction:
        raise DualDegenerate(f"dual components nearly vanish together (ratio {ratio:.3f} < {fraction})")
    U = gamma.conj().T
    rdual = dual_vals @ gamma  # gamma^T dual, nodewise
    rdphi = circle_derivative(phi).values @ U.T
    A = np.zeros((N, n, n), dtype=complex)
    A[:, :, 0] = rdphi
    A[:, 0, 1] = -rdual[:, 1]
    A[:, 1, 1] = rdual[:, 0]
    if n > 2:
        psi1, psi2, bez = corona_pair(rdual[:, 0], rdual[:, 1], N // 4)
        if bez > 1e-8:
            raise DualDegenerate(f"corona pair residual {bez:.2e}")
        for j in range(2, n):
            A[:, 0, j] = holomorphic_part(CircleField(-rdual[:, j] * psi1)).values
            A[:, 1, j] = holomorphic_part(CircleField(-rdual[:, j] * psi2)).values
            A[:, j, j] = 1.0
    A = np.einsum("ij,kjl->kil", gamma, A)
    return Flattening(CircleField(A), U, float(ratio))


# the nonlinear system ---------------------------------------------------------


def velocity_target(datum: BoundaryDatum) -> np.ndarray:
    s = np.sqrt(1.0 - np.vdot(datum.vhat, datum.vhat).real)
    return s * datum.v


def _normalization_expr(jet1, d1, d2):
    """``rho_z^T phi'' + phi'^T rho_zz phi'`` at zeta = 1."""
    return jet1.z @ d2 + d1 @ jet1.zz @ d1


def theta_residual(dom: Domain, phi: CircleField, datum, vhat=None, A0: CircleField | None = None,
                   fraction: float = 0.05) -> ThetaResidual:
    """Evaluate the five blocks of the geodesic system at ``phi``.

    ``datum`` is a :class:`BoundaryDatum` or a boundary point ``p``, in which
    case ``vhat`` gives the fibre coordinate.  Without ``A0`` the flattening
    is built from ``phi`` itself.
    """
    if not isinstance(datum, BoundaryDatum):
        datum = make_datum(dom, datum, vhat=vhat)
    if A0 is None:
        A0 = flattening_matrix(phi, holomorphic_part(raw_dual(dom, phi)[0]), fraction).A0
    jet = dom.jet(phi.values, 1)
    a = np.einsum("kij,ki->kj", A0.values, jet.z)
    a1 = a[:, 0]
    if np.min(np.abs(a1)) < 1e-8 * np.max(np.abs(a)):
        raise FirstComponentVanishes("(A0^T rho_z)_1 vanishes at a node")
    tang = analytic_projection(CircleField(a[:, 1:] / a1[:, None]))
    p1 = phi.at_one(0)
    d1 = phi.at_one(1)
    d2 = phi.at_one(2)
    jet1 = dom.jet(p1, 2)
    norm_val = np.imag(_normalization_expr(jet1, d1, d2))
    return ThetaResidual(
        proper=np.real(jet.rho),
        tangency=tang,
        point=p1 - datum.p,
        velocity=d1 - velocity_target(datum),
        normalization=float(norm_val),
    )


def apply_linearization(dom: Domain, phi: CircleField, A0: CircleField, dphi: CircleField) -> ThetaResidual:
    """Exact derivative of :func:`theta_residual` at ``phi`` (fixed ``A0``) applied to ``dphi``."""
    jet = dom.jet(phi.values, 2)
    A = A0.values
    u = dphi.values
    a = np.einsum("kij,ki->kj", A, jet.z)
    dg = np.einsum("kij,kj->ki", jet.zz, u) + np.einsum("kij,kj->ki", jet.zzbar, np.conj(u))
    da = np.einsum("kij,ki->kj", A, dg)
    a1 = a[:, :1]
    dq = da[:, 1:] / a1 - a[:, 1:] * da[:, :1] / a1**2
    proper = 2.0 * np.real(np.einsum("ki,ki->k", jet.z, u))
    p1, d1, d2 = phi.at_one(0), phi.at_one(1), phi.at_one(2)
    w, wv, wa = dphi.at_one(0), dphi.at_one(1), dphi.at_one(2)
    j1 = dom.jet(p1, 3)
    dz = j1.zz @ w + j1.zzbar @ np.conj(w)
    dzz = np.einsum("jkl,l->jk", j1.zzz, w) + np.einsum("jkl,l->jk", j1.zzzbar, np.conj(w))
    norm = dz @ d2 + j1.z @ wa + 2.0 * d1 @ j1.zz @ wv + d1 @ dzz @ d1
    return ThetaResidual(proper, analytic_projection(CircleField(dq)), w, wv, float(np.imag(norm)))


@dataclass(frozen=True, eq=False)
class NewtonState:
    """Quantities frozen at a Newton iterate."""

    phi: CircleField
    datum: BoundaryDatum
    flat: Flattening
    residual: ThetaResidual


def make_state(dom: Domain, phi: CircleField, datum: BoundaryDatum, fraction: float = 0.05) -> NewtonState:
    dual = holomorphic_part(raw_dual(dom, phi)[0])
    flat = flattening_matrix(phi, dual, fraction)
    return NewtonState(phi, datum, flat, theta_residual(dom, phi, datum, A0=flat.A0))


def _hilbert_extension(real_field: np.ndarray, n: int) -> np.ndarray:
    """Taylor coefficients of ``u + i H u`` for a real field ``u``."""
    u = CircleField(real_field.astype(complex))
    f0 = u + 1j * hilbert_transform(u)
    return f0.taylor()


class ReducedInverse:
    """Approximate inverse of the linearization through ``psi = A0^{-1} dphi``.

    The first component of ``psi`` comes from the Hilbert transform of the
    properness data, the rest from a linear Riemann-Hilbert problem with a
    one-jet constraint at ``zeta = 1``.  At an exact geodesic the reduction
    inverts the linearization on its range; at nearby iterates its error is
    proportional to the current residual, which :func:`linearized_step`
    removes by defect correction.  Everything that depends only on the
    iterate is computed once here.
    """

    def __init__(self, dom: Domain, state: NewtonState):
        self.dom = dom
        self.state = state
        phi = state.phi
        self.N = N = phi.num_nodes
        self.n = n = phi.shape[0]
        self.z = z = nodes(N)
        self.A = A = state.flat.A0.values
        jet = dom.jet(phi.values, 2)
        a = np.einsum("kij,ki->kj", A, jet.z)
        self.mu = mu = 1.0 / (z * a[:, 0]).real
        self.A1, self.dA1, self.ddA1 = state.flat.derivatives_at_one()
        self.A1inv = np.linalg.inv(self.A1)
        self.p1, self.d1, self.d2 = phi.at_one(0), phi.at_one(1), phi.at_one(2)
        self.j1 = dom.jet(self.p1, 3)
        self.c1 = (self.A1.T @ self.j1.z)[0]
        self.solver = None
        if n > 1:
            H0 = mu[:, None, None] * np.einsum("kji,kjl,klm->kim", A, jet.zzbar, np.conj(A))
            S0 = (z**2 * mu)[:, None, None] * np.einsum("kji,kjl,klm->kim", A, jet.zz, A)
            self.H0 = 0.5 * (H0 + np.conj(np.swapaxes(H0, 1, 2)))
            self.S0 = 0.5 * (S0 + np.swapaxes(S0, 1, 2))
            sym = RHSymbols(CircleField(self.H0[:, 1:, 1:]), CircleField(self.S0[:, 1:, 1:]))
            self.solver = RHSolver(sym)

    def __call__(self, rhs: ThetaResidual) -> CircleField:
        N, n, z, j1 = self.N, self.n, self.z, self.j1
        A1inv, dA1, ddA1 = self.A1inv, self.dA1, self.ddA1

        # constraints on psi at zeta = 1
        psi1 = A1inv @ rhs.point
        dpsi1 = A1inv @ (rhs.velocity - dA1 @ psi1)

        # normalization block: isolate Im(a_1(1) psi_1''(1))
        w, wv, d1 = rhs.point, rhs.velocity, self.d1
        dz = j1.zz @ w + j1.zzbar @ np.conj(w)
        dzz = np.einsum("jkl,l->jk", j1.zzz, w) + np.einsum("jkl,l->jk", j1.zzzbar, np.conj(w))
        known = dz @ self.d2 + 2.0 * d1 @ j1.zz @ wv + d1 @ dzz @ d1
        known = known + j1.z @ (ddA1 @ psi1 + 2.0 * dA1 @ dpsi1)
        lam = rhs.normalization - np.imag(known)
        c1 = self.c1

        # first component: Re(psi_1 / zeta) = mu r with r = rhs.proper / 2
        f0 = _hilbert_extension(self.mu * 0.5 * rhs.proper, N)
        F0 = taylor_eval(f0, 1.0)
        dF0 = taylor_eval(f0, 1.0, 1)
        X = 2.0 * dF0 + taylor_eval(f0, 1.0, 2)
        M = np.array(
            [
                [0.0, 2.0, 1.0],
                [-2.0, 0.0, 0.0],
                [-2.0 * c1.imag, 2.0 * c1.real, 0.0],
            ]
        )
        b = np.array(
            [
                psi1[0].imag - F0.imag,
                dpsi1[0].real - (F0 + dF0).real,
                lam - np.imag(c1 * X),
            ]
        )
        ar, ai, beta = np.linalg.solve(M, b)
        alpha = ar + 1j * ai
        t1 = np.zeros(N // 2 + 1, dtype=complex)
        t1[0] = alpha
        t1[1 : len(f0) + 1] += f0
        t1[1] += 1j * beta
        t1[2] -= np.conj(alpha)
        psi_first = CircleField.from_taylor(t1[: N // 2], N)

        psi = np.zeros((N, n), dtype=complex)
        psi[:, 0] = psi_first.values
        if n > 1:
            q = psi_first.values / z
            ftil = -rhs.tangency.values + np.conj(q)[:, None] * self.H0[:, 1:, 0] + q[:, None] * self.S0[:, 1:, 0]
            g = self.solver.solve_jet(CircleField(ftil), OneJet(1.0, psi1[1:], dpsi1[1:]))
            psi[:, 1:] = g.values
        dphi = np.einsum("kij,kj->ki", self.A, psi)
        return holomorphic_part(CircleField(dphi))


def linearized_step(dom: Domain, state, rhs: ThetaResidual, refine: int = 2,
                    inverse: ReducedInverse | None = None) -> CircleField:
    """Solve ``L(dphi) = rhs`` with the reduction plus ``refine`` defect-correction sweeps.

    ``state`` is a :class:`NewtonState` or a solved :class:`GeodesicDisc`.
    """
    if isinstance(state, GeodesicDisc):
        state = make_state(dom, state.phi, state.datum)
    inv = inverse or ReducedInverse(dom, state)
    dphi = inv(rhs)
    target = rhs.norm()
    for _ in range(refine):
        defect = rhs - apply_linearization(dom, state.phi, state.flat.A0, dphi)
        if defect.norm() <= 1e-3 * target:
            break
        dphi = dphi + inv(defect)
    return dphi


SPECTRAL_FILTER = 1e-15


def _truncate(phi: CircleField, band: int | None = None) -> CircleField:
    """Keep Taylor degrees below ``band`` (default ``N/4``) and drop roundoff-level coefficients.

    The band limit keeps nodal products of ``phi`` with the dual and with
    ``A0`` free of aliasing; without it a noise plateau in the tail is fed
    back through ``phi'`` and stalls Newton near 1e-8.  The relative filter
    removes roundoff that the ``k**2`` weights of the second derivative at 1
    would otherwise turn into a residual floor near 1e-11.
    """
    t = phi.taylor()[: band or phi.num_nodes // 4].copy()
    t[np.abs(t) < SPECTRAL_FILTER * np.abs(t).max()] = 0.0
    return CircleField.from_taylor(t, phi.num_nodes)


def newton(dom: Domain, phi: CircleField, datum: BoundaryDatum, opts: SolverOptions = SolverOptions()):
    """Damped Newton iteration from ``phi``; returns (phi, state, history)."""
    state = make_state(dom, phi, datum, opts.corona_fraction)
    res = state.residual.norm()
    history = [res]
    for it in range(opts.max_iter):
        if res <= opts.polish_tol:
            break
        step = linearized_step(dom, state, state.residual.scaled(-1.0), opts.refine)
        t = 1.0
        accepted = False
        for _ in range(opts.max_backtrack):
            trial = _truncate(phi + t * step, int(opts.band_fraction * phi.num_nodes))
            try:
                tstate = make_state(dom, trial, datum, opts.corona_fraction)
                tres = tstate.residual.norm()
            except GeodesicError:
                tres = np.inf
            if np.isfinite(tres) and tres < res:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break
        prev = res
        phi, state, res = trial, tstate, tres
        history.append(res)
        log.debug("newton iteration %d: |Theta| = %.3e (step %.3g)", it + 1, res, t)
        if res <= opts.tol and (res > 0.25 * prev or t < 1.0):
            break
    if not res <= opts.tol:
        raise NoConvergence(f"Newton stalled at |Theta| = {res:.3e}", len(history) - 1, res)
    return phi, state, history


def interior_probe_winding(dom: Domain, phi: CircleField, zeta=0.0) -> int:
    """Winding number of ``<z - phi, nu(phi)>`` for the interior point ``z = phi(zeta)``."""
    zpt = holomorphic_extend(phi, zeta, check=False)
    nu = dom.normal(phi.values)
    return winding_number(CircleField(np.einsum("ki,ki->k", zpt[None, :] - phi.values, np.conj(nu))))


def finalize(dom: Domain, phi: CircleField, state: NewtonState, opts: SolverOptions, history=()) -> GeodesicDisc:
    """Recover the dual, check holomorphy and attach diagnostics."""
    raw, m = raw_dual(dom, phi)
    dual = holomorphic_part(raw)
    dual_res = analytic_projection(raw).sup_norm()
    mu_imag = float(np.max(np.abs(m.imag) / np.abs(m)))
    dphi = circle_derivative(phi).values
    dual_norm = float(np.max(np.abs(np.einsum("ki,ki->k", dphi, dual.values) - 1.0)))
    diag = dict(state.residual.norms())
    diag.update(
        dual_holomorphy=float(dual_res),
        dual_normalization=dual_norm,
        mu_imag=mu_imag,
        mu_min=float(np.min((1.0 / m).real)),
        winding=interior_probe_winding(dom, phi),
        iterations=len(history) - 1,
        history=[float(h) for h in history],
        theta=state.residual.norm(),
    )
    if opts.check_dual and dual_res > 10 * opts.tol:
        raise DualNotHolomorphic(f"dual projection residual {dual_res:.3e}")
    return GeodesicDisc(phi, dual, state.datum, state.flat.A0, diag)


def _ball_start(dom: Domain, datum: BoundaryDatum, n_nodes: int) -> CircleField:
    q = make_ball(dom.n).ray_to_boundary(datum.p)
    ball = make_ball(dom.n)
    center = dom.normal(datum.p)
    v = make_datum(ball, q, vhat=datum.vhat, center=center).v
    return ball_geodesic(q, v, n_nodes).phi


def solve_preferred(dom: Domain, p, vhat=None, opts: SolverOptions = SolverOptions(), initial=None,
                    v=None, center=None) -> GeodesicDisc:
    """Preferred geodesic through boundary point ``p`` with fibre coordinate ``vhat``.

    Without an initial guess, the solver continues from the ball along the
    straight-line family of defining functions, halving the parameter step
    whenever Newton fails.  If the solve still fails, the grid is doubled up
    to ``opts.max_nodes`` before :class:`NoConvergence` is raised.
    """
    p = np.asarray(p, dtype=complex)
    if abs(dom.rho(p)) > 1e-8:
        raise SampleOffBoundary(f"|rho(p)| = {abs(dom.rho(p)):.2e}")
    datum = make_datum(dom, p, vhat=vhat, v=v, center=center)
    while True:
        try:
            return _solve_on_grid(dom, datum, opts, initial)
        except NoConvergence:
            if 2 * opts.nodes > opts.max_nodes:
                raise
            log.info("no convergence on %d nodes; retrying on %d", opts.nodes, 2 * opts.nodes)
            opts = replace(opts, nodes=2 * opts.nodes)


def _solve_on_grid(dom: Domain, datum: BoundaryDatum, opts: SolverOptions, initial) -> GeodesicDisc:
    N = opts.nodes
    if initial is not None:
        phi0 = initial.phi if isinstance(initial, GeodesicDisc) else initial
        phi, state, hist = newton(dom, phi0.with_nodes(N), datum, opts)
        return finalize(dom, phi, state, opts, hist)

    if not dom.rescaled:
        phi, state, hist = newton(dom, _ball_start(dom, datum, N), datum, opts)
        return finalize(dom, phi, state, opts, hist)

    # continuation from the ball; the chart is centered at the target normal
    p = datum.p
    chart_center = dom.normal(p) if datum.center is None else datum.center
    phi = _ball_start(dom, datum, N)
    t, dt = 0.0, 1.0
    stages = []
    loose = replace(opts, polish_tol=max(opts.polish_tol, 1e-10))
    while t < 1.0:
        t_new = min(1.0, t + dt)
        dom_t = dom.scaled_family(t_new)
        datum_t = make_datum(dom_t, dom_t.ray_to_boundary(p), vhat=datum.vhat, center=chart_center)
        try:
            phi_t, state, hist = newton(dom_t, phi, datum_t, opts if t_new == 1.0 else loose)
        except GeodesicError as exc:
            dt = 0.5 * (t_new - t)
            log.debug("continuation step to t=%.4f failed (%s); halving", t_new, exc)
            if dt < opts.homotopy_min_step:
                raise NoConvergence(f"continuation stalled at t={t:.4f}", getattr(exc, "iterations", None),
                                    getattr(exc, "residual", None)) from exc
            continue
        stages.append((t_new, len(hist) - 1))
        phi, t = phi_t, t_new
        dt = 2 * dt
    disc = finalize(dom, phi, state, opts, hist)
    disc.diagnostics["continuation"] = stages
    return replace(disc, datum=datum)


# isometry --------------------------------------------------------------------


def locate(disc: GeodesicDisc, z, guess=None, tol: float = 1e-13, max_iter: int = 50) -> complex:
    """Find ``zeta`` in the disc with ``phi(zeta) = z`` (Gauss-Newton)."""
    z = np.asarray(z, dtype=complex)
    if guess is None:
        r = np.linspace(0, 0.95, 20)
        th = np.linspace(0, 2 * np.pi, 48, endpoint=False)
        grid = (r[:, None] * np.exp(1j * th[None, :])).ravel()
        vals = disc(grid)
        guess = grid[np.argmin(np.linalg.norm(vals - z, axis=1))]
    zeta = complex(guess)
    for _ in range(max_iter):
        res = disc(zeta) - z
        d = disc.derivative(zeta)
        step = np.vdot(d, res) / np.vdot(d, d)
        zeta -= step
        if abs(step) < tol:
            break
    return zeta


@dataclass(frozen=True)
class IsometryReport:
    distance: float
    cross_distance: float
    discrepancy: float
    anchor: complex


def isometry_check(dom: Domain, g: GeodesicDisc, zeta1, zeta2, anchor_angle: float = 2 * np.pi / 3,
                   opts: SolverOptions = SolverOptions()) -> IsometryReport:
    """Compare Poincare distances of two points under two parametrizations of the same leaf.

    The second parametrization is the preferred geodesic anchored at the
    boundary point ``phi(exp(i angle))`` with the leaf's own direction there.
    """
    d = poincare_distance(zeta1, zeta2)
    anchor = np.exp(1j * anchor_angle)
    p2 = g(anchor)
    p2 = dom.ray_to_boundary(p2) if abs(dom.rho(p2)) > 1e-12 else p2
    v2 = anchor * g.derivative(anchor)
    v2 = v2 / np.linalg.norm(v2)
    other = solve_preferred(dom, p2, v=v2, opts=opts)
    z1, z2 = g(zeta1), g(zeta2)
    # the reparametrization is a disc automorphism sending 1 to the anchor
    w1 = locate(other, z1)
    w2 = locate(other, z2)
    d2 = poincare_distance(w1, w2)
    return IsometryReport(d, d2, abs(d - d2), complex(anchor))
