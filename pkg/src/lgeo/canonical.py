"""Canonical coordinates along a geodesic disc.

Given a solved geodesic ``phi`` with dual ``phi*`` the chart is built in
three stages:

* a map ``G`` linear in ``w'`` with ``G(., 0) = phi``, whose first column of
  the Jacobian is ``phi'`` and whose remaining columns are annihilated by
  ``phi*`` (a corona pair ``psi1 phi*_1 + psi2 phi*_2 = 1`` handles n > 2);
* a holomorphic matrix ``H`` with ``H^T R conj(H) = I`` on the circle, where
  ``R`` is the transversal complex Hessian of ``r = |phi*| rho o G``;
* the defining function ``rho = lambda * r(z1, H(z1) z')`` whose two-jet
  along the circle times ``{0}`` is that of the ball up to the symmetric
  block ``S0``.

Coordinates are first rotated by a unitary ``gamma`` so that the first two
dual components have no common zero; ``F = gamma G H`` maps the chart to the
original domain.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .circle import CircleField, analytic_projection, hilbert_transform, nodes, taylor_eval
from .domains import Domain, to_complex, to_real
from .errors import DualDegenerate, NoConvergence, NotPositiveDefinite, OutsideCollar
from .geodesic import GeodesicDisc, _corona_frame, corona_pair

log = logging.getLogger(__name__)

TOL_FACT = 1e-9
COLLAR_TRANSVERSAL = 0.1
COLLAR_RADIUS = 0.8
# difference stencils straddle the circle, so the collar extends slightly outside it
COLLAR_OUTER = 1.05


# matrix spectral factorization ---------------------------------------------


def _plus_part(spec: np.ndarray) -> np.ndarray:
    """Positive frequencies plus half the mean (numpy FFT order)."""
    n = spec.shape[0]
    out = np.zeros_like(spec)
    out[1 : n // 2] = spec[1 : n // 2]
    out[0] = 0.5 * spec[0]
    return out


def outer_function(R: CircleField) -> CircleField:
    """Scalar outer ``h`` with ``|h|^2 R = 1``: ``exp(-(log R + i H log R)/2)``."""
    u = CircleField(np.log(np.real(R.values)).astype(complex))
    return CircleField(np.exp(-0.5 * (u + 1j * hilbert_transform(u)).values))


def spectral_factorize(R: CircleField, tol: float = 1e-14, max_iter: int = 100) -> CircleField:
    """Holomorphic ``H`` with ``H^T R conj(H) = I`` on the circle.

    Wilson's Newton-type iteration builds a holomorphic ``W`` with
    ``W W^* = R``; then ``H = W^{-T}``.  The constant unitary freedom is
    fixed by making ``H(0)`` lower triangular with positive diagonal.
    """
    vals = np.asarray(R.values)
    if vals.ndim == 1:
        vals = vals[:, None, None]
    N, m, _ = vals.shape
    if np.max(np.abs(vals - np.conj(np.swapaxes(vals, 1, 2)))) > 1e-10 * np.max(np.abs(vals)):
        raise NotPositiveDefinite("symbol is not Hermitian")
    vals = 0.5 * (vals + np.conj(np.swapaxes(vals, 1, 2)))
    if np.min(np.linalg.eigvalsh(vals)) <= 0.0:
        raise NotPositiveDefinite("symbol has a nonpositive eigenvalue")

    eye = np.eye(m)
    W = np.broadcast_to(np.linalg.cholesky(vals.mean(axis=0)).conj().T, (N, m, m)).copy()
    scale = np.max(np.abs(vals))
    err = np.inf
    for it in range(max_iter):
        Winv = np.linalg.inv(W)
        g = Winv @ vals @ np.conj(np.swapaxes(Winv, 1, 2))
        spec = _plus_part(np.fft.fft(g + eye, axis=0) / N)
        g0 = spec[0]
        upper = np.triu(g0)
        skew = upper - upper.conj().T
        gplus = np.fft.ifft(spec, axis=0) * N
        W = W @ (gplus + skew)
        prev, err = err, np.max(np.abs(W @ np.conj(np.swapaxes(W, 1, 2)) - vals)) / scale
        log.debug("factorization sweep %d: relative residual %.3e", it + 1, err)
        if err <= tol or (err > 0.5 * prev and err < 1e3 * tol):
            break
    if err > TOL_FACT:
        raise NoConvergence(f"factorization residual {err:.2e}", it + 1, err)

    # gauge: W(0) upper triangular with positive diagonal, i.e. H(0) lower triangular
    W0 = W.mean(axis=0)
    upper, Q = scipy.linalg.rq(W0)
    phase = np.diag(upper) / np.abs(np.diag(upper))
    U = Q.conj().T @ np.diag(phase)
    W = W @ U
    H = np.swapaxes(np.linalg.inv(W), 1, 2)
    return CircleField(H)


def factorization_residual(H: CircleField, R: CircleField) -> float:
    Hv = np.asarray(H.values)
    Rv = np.asarray(R.values)
    if Rv.ndim == 1:
        Rv = Rv[:, None, None]
        Hv = Hv[:, None, None]
    prod = np.swapaxes(Hv, 1, 2) @ Rv @ np.conj(Hv)
    return float(np.max(np.abs(prod - np.eye(Rv.shape[1]))))


# the chart ---------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CanonicalChart:
    """Holomorphic data of the canonical coordinates along one geodesic.

    All Taylor arrays live in the rotated coordinates ``xi = gamma^* x``.
    ``factor_H`` holds ``H`` at the circle nodes and ``H_taylor`` its
    coefficients; ``R`` is the transversal Hessian the factorization
    inverts.
    """

    dom: Domain
    gamma: np.ndarray
    phi_taylor: np.ndarray
    dual_taylor: np.ndarray
    psi1_taylor: np.ndarray
    psi2_taylor: np.ndarray
    R: CircleField
    factor_H: CircleField
    H_taylor: np.ndarray
    corona_ratio: float

    @property
    def n(self) -> int:
        return self.phi_taylor.shape[1]

    @property
    def num_nodes(self) -> int:
        return self.R.num_nodes

    # defining function of the domain in rotated coordinates
    def r0_jet(self, xi, order: int = 2):
        g = self.gamma
        jet = self.dom.jet(np.asarray(xi) @ g.T, order)
        out = {"rho": jet.rho, "z": jet.z @ g}
        if order >= 2:
            out["zz"] = np.einsum("ji,...jk,kl->...il", g, jet.zz, g)
            out["zzbar"] = np.einsum("ji,...jk,kl->...il", g, jet.zzbar, np.conj(g))
        return out

    # the map G ------------------------------------------------------------

    def columns(self, w1, order: int = 0) -> np.ndarray:
        """``order``-th w1-derivative of the Jacobian ``dG/dw`` at ``(w1, 0)``; shape ``(..., n, n)``."""
        w1 = np.asarray(w1, dtype=complex)
        n = self.n
        out = np.zeros(w1.shape + (n, n), dtype=complex)
        out[..., :, 0] = taylor_eval(self.phi_taylor, w1, order + 1)
        dual = [taylor_eval(self.dual_taylor, w1, k) for k in range(order + 1)]
        out[..., 0, 1] = -dual[order][..., 1]
        out[..., 1, 1] = dual[order][..., 0]
        if n > 2:
            for k in range(order + 1):
                p1 = taylor_eval(self.psi1_taylor, w1, k)
                p2 = taylor_eval(self.psi2_taylor, w1, k)
                d = dual[order - k]
                out[..., 0, 2:] -= math.comb(order, k) * p1[..., None] * d[..., 2:]
                out[..., 1, 2:] -= math.comb(order, k) * p2[..., None] * d[..., 2:]
            if order == 0:
                out[..., 2:, 2:] = np.eye(n - 2)
        return out

    def G(self, w) -> np.ndarray:
        """Evaluate ``G(w1, w')`` for points of shape ``(..., n)``."""
        w = np.asarray(w, dtype=complex)
        C = self.columns(w[..., 0])
        return taylor_eval(self.phi_taylor, w[..., 0]) + np.einsum("...ij,...j->...i", C[..., :, 1:], w[..., 1:])

    def H(self, z1, order: int = 0) -> np.ndarray:
        return taylor_eval(self.H_taylor, z1, order)

    def F(self, z) -> np.ndarray:
        """``F(z) = gamma G(z1, H(z1) z')`` in the original coordinates."""
        z = np.asarray(z, dtype=complex)
        w = np.concatenate([z[..., :1], np.einsum("...ij,...j->...i", self.H(z[..., 0]), z[..., 1:])], axis=-1)
        return self.G(w) @ self.gamma.T

    def F_jacobian(self, z) -> np.ndarray:
        """Complex Jacobian ``F'(z)``."""
        z = np.asarray(z, dtype=complex)
        z1, zp = z[..., 0], z[..., 1:]
        Hm = self.H(z1)
        dH = self.H(z1, 1)
        wp = np.einsum("...ij,...j->...i", Hm, zp)
        C = self.columns(z1)
        dC = self.columns(z1, 1)
        n = self.n
        J = np.zeros(z.shape[:-1] + (n, n), dtype=complex)
        J[..., :, 0] = C[..., :, 0] + np.einsum("...ij,...j->...i", dC[..., :, 1:], wp)
        J[..., :, 0] += np.einsum("...ij,...j->...i", C[..., :, 1:], np.einsum("...ij,...j->...i", dH, zp))
        J[..., :, 1:] = C[..., :, 1:] @ Hm
        return np.einsum("ij,...jk->...ik", self.gamma, J)

    def A0(self, zeta=None) -> np.ndarray:
        """``F'(zeta, 0)`` at the circle nodes (default) or given points."""
        zeta = nodes(self.num_nodes) if zeta is None else np.asarray(zeta, dtype=complex)
        z = np.zeros(zeta.shape + (self.n,), dtype=complex)
        z[..., 0] = zeta
        return self.F_jacobian(z)

    def F_inverse(self, x, guess=None, tol: float = 1e-15, max_iter: int = 30) -> np.ndarray:
        """Newton inversion of ``F`` for points near the disc."""
        x = np.asarray(x, dtype=complex)
        if guess is None:
            raise ValueError("F_inverse needs an initial guess")
        z = np.array(guess, dtype=complex)
        for _ in range(max_iter):
            res = self.F(z) - x
            step = np.linalg.solve(self.F_jacobian(z), res[..., None])[..., 0]
            z = z - step
            if np.max(np.abs(step)) < tol:
                break
        return z

    # the function r and its two-jet along w' = 0 ----------------------------

    def _dual_modulus(self, w1):
        d0 = taylor_eval(self.dual_taylor, w1)
        return np.sqrt(np.sum(np.abs(d0) ** 2, axis=-1))

    def r(self, w) -> np.ndarray:
        """``r(w) = |phi*(w1)| rho(gamma G(w))``."""
        w = np.asarray(w, dtype=complex)
        return self._dual_modulus(w[..., 0]) * self.r0_jet(self.G(w), 0)["rho"]

    def r_jet(self, w1):
        """Gradient and complex Hessians of ``r`` at ``(w1, 0)``.

        Returns ``(r_w, r_ww, r_wwbar)`` with ``r_wwbar[i, j] = d^2 r / dw_i d conj(w_j)``.
        """
        w1 = np.asarray(w1, dtype=complex)
        d0 = taylor_eval(self.dual_taylor, w1)
        d1 = taylor_eval(self.dual_taylor, w1, 1)
        d2 = taylor_eval(self.dual_taylor, w1, 2)
        m = np.sqrt(np.sum(np.abs(d0) ** 2, axis=-1))
        inner = np.sum(d1 * np.conj(d0), axis=-1)  # <phi*', phi*>
        m1 = inner / (2 * m)
        m11bar = (np.sum(np.abs(d1) ** 2, axis=-1) - np.abs(inner) ** 2 / (2 * m**2)) / (2 * m)
        m11 = np.sum(d2 * np.conj(d0), axis=-1) / (2 * m) - inner**2 / (4 * m**3)

        C = self.columns(w1)
        dC = self.columns(w1, 1)
        jet = self.r0_jet(taylor_eval(self.phi_taylor, w1), 2)
        s = jet["rho"]
        s_w = np.einsum("...k,...ki->...i", jet["z"], C)
        s_wwbar = np.einsum("...ki,...kl,...lj->...ij", C, jet["zzbar"], np.conj(C))
        s_ww = np.einsum("...ki,...kl,...lj->...ij", C, jet["zz"], C)
        # second derivatives of G: d1 d1 G = phi'', d1 dj G = (dC)_j, the rest vanish
        corr = np.einsum("...k,...kj->...j", jet["z"], dC)
        s_ww[..., 0, :] += corr
        s_ww[..., :, 0] += corr
        s_ww[..., 0, 0] -= corr[..., 0]

        n = self.n
        mw = np.zeros(w1.shape + (n,), dtype=complex)
        mw[..., 0] = m1
        r_w = mw * s[..., None] + m[..., None] * s_w
        r_wwbar = m[..., None, None] * s_wwbar
        r_wwbar[..., 0, 0] += m11bar * s
        r_wwbar += mw[..., :, None] * np.conj(s_w)[..., None, :] + s_w[..., :, None] * np.conj(mw)[..., None, :]
        r_ww = m[..., None, None] * s_ww
        r_ww[..., 0, 0] += m11 * s
        r_ww += mw[..., :, None] * s_w[..., None, :] + s_w[..., :, None] * mw[..., None, :]
        return r_w, r_ww, r_wwbar

    # the canonical defining function ---------------------------------------

    def lam(self, z) -> np.ndarray:
        """Correction factor ``lambda(z1, z')``."""
        z = np.asarray(z, dtype=complex)
        z1, zp = z[..., 0], z[..., 1:]
        _, _, r_wwbar = self.r_jet(z1)
        r11 = r_wwbar[..., 0, 0].real
        r1bar_l = np.conj(r_wwbar[..., 0, 1:])  # d^2 r / d conj(w1) d w_l
        Hm = self.H(z1)
        inner = np.einsum("...k,...lk,...l->...", zp, Hm, r1bar_l)
        return 1.0 - 0.5 * (1.0 - np.abs(z1) ** 2) * (1.0 - r11) - 2.0 * np.real(np.conj(z1) * inner)

    def rho(self, z) -> np.ndarray:
        """Canonical defining function ``lambda(z) r(z1, H(z1) z')`` (no collar check)."""
        z = np.asarray(z, dtype=complex)
        w = np.concatenate([z[..., :1], np.einsum("...ij,...j->...i", self.H(z[..., 0]), z[..., 1:])], axis=-1)
        return self.lam(z) * self.r(w)

    def pushforward_rho(self, x, guess) -> np.ndarray:
        """Defining function ``rho o F^{-1}`` of the original domain near the disc."""
        return self.rho(self.F_inverse(x, guess))

    def S0(self) -> CircleField:
        """Symmetric block ``H^T r_{w'w'} H`` at the circle nodes."""
        z = nodes(self.num_nodes)
        _, r_ww, _ = self.r_jet(z)
        Hm = np.asarray(self.factor_H.values)
        return CircleField(np.einsum("kji,kjl,klm->kim", Hm, r_ww[:, 1:, 1:], Hm))

    def to_dict(self) -> dict:
        pack = lambda a: np.stack([np.real(a), np.imag(a)], axis=-1).tolist()
        return {
            "gamma": pack(self.gamma),
            "phi_taylor": pack(self.phi_taylor),
            "dual_taylor": pack(self.dual_taylor),
            "psi1_taylor": pack(self.psi1_taylor),
            "psi2_taylor": pack(self.psi2_taylor),
            "H_taylor": pack(self.H_taylor),
            "corona_ratio": self.corona_ratio,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _trim(taylor: np.ndarray, rel: float = 1e-15) -> np.ndarray:
    """Drop trailing Taylor coefficients below ``rel`` times the largest one."""
    mag = np.abs(taylor).reshape(taylor.shape[0], -1).max(axis=1)
    keep = np.nonzero(mag > rel * mag.max())[0]
    return taylor[: keep[-1] + 1] if keep.size else taylor[:1]


def build_G(g: GeodesicDisc, dom: Domain, fraction: float = 0.05) -> dict:
    """Rotation, corona pair and Taylor data of ``G`` for a solved geodesic."""
    dual = np.asarray(g.dual.values)
    N = g.phi.num_nodes
    n = g.n
    gamma, ratio = _corona_frame(dual)
    if ratio < fraction:
        raise DualDegenerate(f"dual components nearly vanish together (ratio {ratio:.3f} < {fraction})")
    U = gamma.conj().T
    phi_t = _trim(g.phi.taylor() @ U.T)
    dual_t = _trim(g.dual.taylor() @ gamma)
    if n > 2:
        rdual = dual @ gamma
        psi1, psi2, bez = corona_pair(rdual[:, 0], rdual[:, 1], N // 4)
        if bez > 1e-8:
            raise DualDegenerate(f"corona pair residual {bez:.2e}")
        psi1_t = _trim(CircleField(psi1).taylor()[: N // 4 + 1])
        psi2_t = _trim(CircleField(psi2).taylor()[: N // 4 + 1])
    else:
        # no corona pair enters G in dimension two
        psi1_t = psi2_t = np.zeros(1, dtype=complex)
    return {"gamma": gamma, "phi_taylor": phi_t, "dual_taylor": dual_t,
            "psi1_taylor": psi1_t, "psi2_taylor": psi2_t, "corona_ratio": ratio}


def build_chart(dom: Domain, g: GeodesicDisc, fraction: float = 0.05) -> CanonicalChart:
    """Complete canonical chart along the solved geodesic ``g``."""
    data = build_G(g, dom, fraction)
    N = g.phi.num_nodes
    n = g.n
    empty = CircleField(np.zeros((N, n - 1, n - 1), dtype=complex))
    partial = CanonicalChart(dom, R=empty, factor_H=empty, H_taylor=np.zeros((1, n - 1, n - 1)), **data)
    z = nodes(N)
    _, _, r_wwbar = partial.r_jet(z)
    R = CircleField(r_wwbar[:, 1:, 1:])
    H = spectral_factorize(R)
    H_taylor = _trim(H.taylor())
    return CanonicalChart(dom, R=R, factor_H=H, H_taylor=H_taylor, **data)


def canonical_rho(chart: CanonicalChart, z) -> np.ndarray:
    """Canonical defining function in the collar ``|z'| <= 0.1``, ``0.8 <= |z1|``."""
    z = np.asarray(z, dtype=complex)
    r1 = np.abs(z[..., 0])
    rp = np.linalg.norm(z[..., 1:], axis=-1)
    if np.any(rp > COLLAR_TRANSVERSAL) or np.any(r1 < COLLAR_RADIUS) or np.any(r1 > COLLAR_OUTER):
        raise OutsideCollar("point outside the collar |z'| <= 0.1, |z1| >= 0.8")
    return chart.rho(z)


# numerical two-jets ------------------------------------------------------------

FD_STEP = 1e-3


def complex_jet(func, z: np.ndarray, h: float = FD_STEP):
    """Gradient ``f_z`` and Hessians ``f_zz``, ``f_zzbar`` of a real function by fourth-order differences.

    ``func`` maps arrays of points ``(..., n)`` to real values; ``z`` has
    shape ``(K, n)``.
    """
    z = np.asarray(z, dtype=complex)
    x = to_real(z)
    d = x.shape[-1]
    n = d // 2
    eye = np.eye(d)

    cache = {}

    def f(shift):
        key = np.asarray(shift, dtype=float).round(15).tobytes()
        if key not in cache:
            cache[key] = np.real(func(to_complex(x + shift)))
        return cache[key]

    w1 = [(-2, 1.0), (-1, -8.0), (1, 8.0), (2, -1.0)]
    grad = np.zeros(x.shape)
    hess = np.zeros(x.shape + (d,))
    f0 = f(np.zeros(d))
    for a in range(d):
        grad[:, a] = sum(c * f(s * h * eye[a]) for s, c in w1) / (12 * h)
        hess[:, a, a] = (
            -f(2 * h * eye[a]) + 16 * f(h * eye[a]) - 30 * f0 + 16 * f(-h * eye[a]) - f(-2 * h * eye[a])
        ) / (12 * h**2)
        for b in range(a):
            val = sum(ca * cb * f(sa * h * eye[a] + sb * h * eye[b]) for sa, ca in w1 for sb, cb in w1)
            hess[:, a, b] = hess[:, b, a] = val / (144 * h**2)
    Wz = 0.5 * np.hstack([np.eye(n), -1j * np.eye(n)])
    f_z = grad @ Wz.T
    f_zz = np.einsum("ia,kab,jb->kij", Wz, hess, Wz)
    f_zzbar = np.einsum("ia,kab,jb->kij", Wz, hess, np.conj(Wz))
    return f_z, f_zz, f_zzbar


# verification of the normal form ------------------------------------------------


@dataclass(frozen=True)
class StraighteningReport:
    checks: dict
    S0_norm: float
    remainder_order: float

    @property
    def max_violation(self) -> float:
        return max(self.checks.values())

    def to_dict(self) -> dict:
        return {"checks": dict(self.checks), "S0_norm": self.S0_norm, "remainder_order": self.remainder_order,
                "max_violation": self.max_violation}


def verify_straightening(chart: CanonicalChart, phi: CircleField | None = None, h: float = FD_STEP,
                         factor: CircleField | None = None) -> StraighteningReport:
    """Check the normal-form identities along the circle at every node.

    Derivatives of the canonical defining function and of its push-forward
    to the original domain are taken by finite differences, independently
    of the analytic two-jet used to build the chart.  ``phi`` (original
    coordinates) is compared with ``F(., 0)`` when given; ``factor``
    replaces the chart's ``H`` in the factorization check.
    """
    N = chart.num_nodes
    n = chart.n
    zeta = nodes(N)
    base = np.zeros((N, n), dtype=complex)
    base[:, 0] = zeta
    checks = {}

    F0 = chart.F(base)
    checks["value_on_circle"] = float(np.max(np.abs(chart.rho(base))))
    if phi is not None:
        checks["F_restricts_to_phi"] = float(np.max(np.abs(F0 - np.asarray(phi.values))))

    # two-jet of the canonical function on the circle
    f_z, f_zz, f_zzbar = complex_jet(chart.rho, base, h)
    eye = np.eye(n)
    checks["grad_z1"] = float(np.max(np.abs(f_z[:, 0] - np.conj(zeta))))
    checks["grad_transversal"] = float(np.max(np.abs(f_z[:, 1:])))
    checks["hess_11bar"] = float(np.max(np.abs(f_zzbar[:, 0, 0] - 1.0)))
    checks["hess_1jbar"] = float(np.max(np.abs(f_zzbar[:, 0, 1:])))
    checks["hess_ijbar"] = float(np.max(np.abs(f_zzbar[:, 1:, 1:] - eye[1:, 1:])))
    checks["hess_11"] = float(np.max(np.abs(f_zz[:, 0, 0])))
    checks["hess_1j"] = float(np.max(np.abs(f_zz[:, 0, 1:])))
    S0 = np.asarray(chart.S0().values)
    checks["S0_matches_hessian"] = float(np.max(np.abs(f_zz[:, 1:, 1:] - S0)))

    Hf = chart.factor_H if factor is None else factor
    checks["factorization"] = factorization_residual(Hf, chart.R)

    # the same identities seen from the original domain through A0 = F'(., 0)
    A0 = chart.A0(zeta)
    pushed = lambda x: chart.pushforward_rho(x, guess=np.broadcast_to(base, x.shape))
    g_z, g_zz, g_zzbar = complex_jet(pushed, F0, h)
    a = zeta[:, None] * np.einsum("kji,kj->ki", A0, g_z)
    checks["normal_row"] = float(np.max(np.abs(a - eye[0])))
    herm = np.einsum("kji,kjl,klm->kim", A0, g_zzbar, np.conj(A0))
    checks["hermitian_block"] = float(np.max(np.abs(herm - eye)))
    target = np.zeros((N, n, n), dtype=complex)
    target[:, 1:, 1:] = S0
    sym = np.einsum("kji,kjl,klm->kim", A0, g_zz, A0)
    checks["symmetric_block"] = float(np.max(np.abs(sym - target)))
    # chain rule: rho_D'' = A0^T rho_Omega'' A0 + rho_Omega' . F''
    corr = sym + np.einsum("kj,kjab->kab", g_z, _F_second(chart, zeta))
    checks["symmetric_block_chain_rule"] = float(np.max(np.abs(corr - target)))

    S0_norm = float(np.max(np.linalg.norm(S0, 2, axis=(1, 2)))) if n > 1 else 0.0
    return StraighteningReport(checks, S0_norm, _remainder_order(chart, S0))


def _F_second(chart: CanonicalChart, zeta: np.ndarray) -> np.ndarray:
    """Second derivatives ``d^2 F_k / dz_a dz_b`` at ``(zeta, 0)``; shape ``(K, n, n, n)``."""
    n = chart.n
    C = chart.columns(zeta)
    dC = chart.columns(zeta, 1)
    Hm = chart.H(zeta)
    dH = chart.H(zeta, 1)
    out = np.zeros(zeta.shape + (n, n, n), dtype=complex)
    out[..., :, 0, 0] = taylor_eval(chart.phi_taylor, zeta, 2)
    cross = dC[..., :, 1:] @ Hm + C[..., :, 1:] @ dH
    out[..., :, 0, 1:] = cross
    out[..., :, 1:, 0] = cross
    return np.einsum("ij,...jab->...iab", chart.gamma, out)


def _remainder_order(chart: CanonicalChart, S0: np.ndarray, t: float = 2e-2) -> float:
    """Observed order of the remainder after the quadratic model near the circle.

    The model is ``-1 + |z|^2 + Re(z'^T S0 z')`` with ``S0`` frozen at the
    base node; the order should exceed two.
    """
    N = chart.num_nodes
    n = chart.n
    rng = np.random.default_rng(7)
    idx = rng.choice(N, size=8, replace=False)
    zeta = nodes(N)[idx]
    orders = []
    for k, z0 in zip(idx, zeta):
        u = rng.normal(size=n) + 1j * rng.normal(size=n)
        u[0] = -abs(u[0]) * z0  # point into the disc
        u /= np.linalg.norm(u)
        rem = []
        for s in (t, t / 2):
            z = np.zeros(n, dtype=complex)
            z[0] = z0
            z = z + s * u
            model = -1.0 + np.vdot(z, z).real + np.real(z[1:] @ S0[k] @ z[1:])
            rem.append(abs(chart.rho(z[None, :])[0] - model))
        # a remainder at roundoff level means the model is exact (the ball)
        orders.append(np.inf if rem[0] < 1e-13 else np.log2(rem[0] / max(rem[1], 1e-300)))
    return float(np.min(orders))
