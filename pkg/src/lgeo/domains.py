"""Quadric strongly linearly convex domains and the fibre chart on S_dOmega.

Domains are the ball and ellipsoids ``|z|^2 + eps Re(z^T B z) < 1``.  Raw
defining functions are real quadrics in the real coordinates ``X = (x, y)``;
the defining function used everywhere is rescaled so that ``|grad rho| = 2``
on the boundary, which makes the outward unit normal equal to
``conj(rho_z)``.

Complex derivatives follow the Wirtinger convention: ``rho_z[j]`` is
``d rho / d z_j``, ``rho_zz[j, k]`` is ``d^2 rho / dz_j dz_k`` and
``rho_zzbar[j, k]`` is ``d^2 rho / dz_j d conj(z_k)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ChartSingularity, NotInLp, NotSLC, SampleOffBoundary


def _wirtinger(n: int) -> np.ndarray:
    """Matrix W with d/dz_j = sum_a W[j, a] d/dX_a for X = (x, y)."""
    eye = np.eye(n)
    return 0.5 * np.hstack([eye, -1j * eye])


def to_real(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    return np.concatenate([z.real, z.imag], axis=-1)


def to_complex(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    n = x.shape[-1] // 2
    return x[..., :n] + 1j * x[..., n:]


def _quadric_matrix(n: int, B: np.ndarray, epsilon: float) -> np.ndarray:
    """Real Hessian of ``|z|^2 + eps Re(z^T B z)``."""
    Br, Bi = B.real, B.imag
    return 2.0 * np.eye(2 * n) + epsilon * np.block([[2 * Br, -2 * Bi], [-2 * Bi, -2 * Br]])


# scale factor f(a, b) = a sqrt(1 + a) / sqrt(b): one-variable pieces and derivatives
def _g_derivs(a):
    s = 1.0 + a
    return [
        a * np.sqrt(s),
        (1.0 + 1.5 * a) / np.sqrt(s),
        (1.0 + 0.75 * a) / s**1.5,
        (-0.75 - 0.375 * a) / s**2.5,
    ]


def _h_derivs(b):
    return [b**-0.5, -0.5 * b**-1.5, 0.75 * b**-2.5, -1.875 * b**-3.5]


@dataclass(frozen=True)
class Jet:
    """Complex derivatives of the defining function at a batch of points."""

    rho: np.ndarray
    z: np.ndarray
    zz: np.ndarray
    zzbar: np.ndarray
    zzz: np.ndarray | None = None
    zzzbar: np.ndarray | None = None


@dataclass(frozen=True, eq=False)
class Domain:
    """Ball or ellipsoid with derivative oracles of the normalized defining function."""

    n: int
    kind: str = "ball"
    epsilon: float = 0.0
    B: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("dimension must be at least 2")
        B = np.zeros((self.n, self.n)) if self.B is None else np.asarray(self.B, dtype=complex)
        if B.shape != (self.n, self.n):
            raise ValueError("B must be n x n")
        if np.max(np.abs(B - B.T), initial=0.0) > 1e-12:
            raise ValueError("B must be symmetric")
        if abs(self.epsilon) * np.linalg.norm(B, 2) >= 1.0:
            raise NotSLC(f"epsilon*||B|| = {abs(self.epsilon) * np.linalg.norm(B, 2):.3f} >= 1")
        B.setflags(write=False)
        object.__setattr__(self, "B", B)
        Q = _quadric_matrix(self.n, B, self.epsilon)
        Q.setflags(write=False)
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "_W", _wirtinger(self.n))

    @property
    def rescaled(self) -> bool:
        """Whether the raw quadric needs rescaling to reach |grad rho| = 2."""
        return self.epsilon != 0.0 and np.any(self.B != 0)

    @property
    def normalized(self) -> bool:
        return True

    # raw quadric -------------------------------------------------------

    def raw_rho(self, z) -> np.ndarray:
        x = to_real(z)
        return 0.5 * np.einsum("...i,ij,...j->...", x, self.Q, x) - 1.0

    # derivative oracles ------------------------------------------------

    def _real_jet(self, x: np.ndarray, order: int):
        """Value and real derivatives up to ``order`` (<= 3) of the normalized rho."""
        Q = self.Q
        a = 0.5 * np.einsum("...i,ij,...j->...", x, Q, x) - 1.0
        da = x @ Q
        if not self.rescaled:
            d2 = np.broadcast_to(Q, x.shape[:-1] + Q.shape)
            d3 = np.zeros(x.shape[:-1] + (2 * self.n,) * 3) if order >= 3 else None
            return a, da, d2, d3
        Q2 = Q @ Q
        b = 0.25 * np.einsum("...i,ij,...j->...", x, Q2, x)
        db = 0.5 * (x @ Q2)
        g = _g_derivs(a)
        h = _h_derivs(b)
        # partials of f(a, b) = g(a) h(b)
        F1 = np.stack([g[1] * h[0], g[0] * h[1]], axis=-1)
        F2 = np.empty(a.shape + (2, 2))
        F2[..., 0, 0] = g[2] * h[0]
        F2[..., 0, 1] = F2[..., 1, 0] = g[1] * h[1]
        F2[..., 1, 1] = g[0] * h[2]
        U1 = np.stack([da, db], axis=-2)
        U2 = np.stack([Q, 0.5 * Q2])
        val = g[0] * h[0]
        d1 = np.einsum("...a,...ai->...i", F1, U1)
        d2 = np.einsum("...ab,...ai,...bj->...ij", F2, U1, U1) + np.einsum("...a,aij->...ij", F1, U2)
        d3 = None
        if order >= 3:
            F3 = np.empty(a.shape + (2, 2, 2))
            for i in range(2):
                for j in range(2):
                    for k in range(2):
                        na = 3 - (i + j + k)
                        F3[..., i, j, k] = g[na] * h[3 - na]
            T = np.einsum("...ab,aij,...bk->...ijk", F2, U2, U1)
            d3 = (
                np.einsum("...abc,...ai,...bj,...ck->...ijk", F3, U1, U1, U1)
                + T
                + np.swapaxes(T, -1, -2)
                + np.moveaxis(T, -1, -3)
            )
        return val, d1, d2, d3

    def jet(self, z, order: int = 2) -> Jet:
        """Complex derivatives of rho at points ``z`` (shape ``(..., n)``)."""
        x = to_real(z)
        val, d1, d2, d3 = self._real_jet(x, order)
        W = self._W
        Wb = W.conj()
        rz = d1 @ W.T
        rzz = np.einsum("ja,...ab,kb->...jk", W, d2, W)
        rzzb = np.einsum("ja,...ab,kb->...jk", W, d2, Wb)
        zzz = zzzb = None
        if order >= 3:
            zzz = np.einsum("ja,kb,lc,...abc->...jkl", W, W, W, d3)
            zzzb = np.einsum("ja,kb,lc,...abc->...jkl", W, W, Wb, d3)
        return Jet(val, rz, rzz, rzzb, zzz, zzzb)

    def rho(self, z) -> np.ndarray:
        x = to_real(z)
        a = 0.5 * np.einsum("...i,ij,...j->...", x, self.Q, x) - 1.0
        if not self.rescaled:
            return a
        b = 0.25 * np.einsum("...i,ij,...j->...", x, self.Q @ self.Q, x)
        return a * np.sqrt((1.0 + a) / b)

    def grad(self, z) -> np.ndarray:
        return self.jet(z, 1).z

    def hess_zz(self, z) -> np.ndarray:
        return self.jet(z).zz

    def hess_zzbar(self, z) -> np.ndarray:
        return self.jet(z).zzbar

    def normal(self, p) -> np.ndarray:
        """Outward unit normal ``conj(rho_z)/|rho_z|``."""
        g = np.conj(self.grad(p))
        return g / np.linalg.norm(g, axis=-1, keepdims=True)

    # geometry helpers ----------------------------------------------------

    def ray_to_boundary(self, direction) -> np.ndarray:
        """Boundary point on the ray through ``direction`` (homogeneous quadric)."""
        d = np.asarray(direction, dtype=complex)
        x = to_real(d)
        scale = 0.5 * np.einsum("...i,ij,...j->...", x, self.Q, x)
        return d / np.sqrt(scale)[..., None]

    def sample_boundary(self, count: int, rng: np.random.Generator) -> np.ndarray:
        d = rng.standard_normal((count, self.n)) + 1j * rng.standard_normal((count, self.n))
        return self.ray_to_boundary(d)

    def rotated(self, U: np.ndarray) -> "Domain":
        """Image ``U(Omega)`` under a unitary map."""
        U = np.asarray(U, dtype=complex)
        if not self.rescaled:
            return Domain(self.n, self.kind, self.epsilon, self.B)
        Ub = U.conj()
        B = Ub @ self.B @ Ub.T
        return Domain(self.n, self.kind, self.epsilon, 0.5 * (B + B.T))

    def scaled_family(self, t: float) -> "Domain":
        """Member of the straight-line family from the ball (t=0) to this domain (t=1)."""
        if t == 0.0 or not self.rescaled:
            return make_ball(self.n)
        return Domain(self.n, self.kind, self.epsilon * t, self.B)

    # serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        out = {"type": self.kind, "n": self.n, "epsilon": float(self.epsilon), "B": self.B.real.tolist()}
        if np.any(self.B.imag != 0):
            out["B_imag"] = self.B.imag.tolist()
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def make_ball(n: int) -> Domain:
    return Domain(n, "ball")


def make_ellipsoid(n: int, B, epsilon: float) -> Domain:
    B = np.asarray(B, dtype=complex)
    if epsilon == 0.0:
        return make_ball(n)
    return Domain(n, "ellipsoid", float(epsilon), B)


def domain_from_dict(cfg: dict) -> Domain:
    kind = cfg.get("type")
    n = int(cfg["n"])
    if kind == "ball":
        return make_ball(n)
    if kind == "ellipsoid":
        B = np.asarray(cfg.get("B", np.eye(n)), dtype=complex)
        if "B_imag" in cfg:
            B = B + 1j * np.asarray(cfg["B_imag"], dtype=float)
        return make_ellipsoid(n, B, float(cfg.get("epsilon", 0.0)))
    raise ValueError(f"unknown domain type {kind!r}")


# Hermitian/symmetric form margins ------------------------------------------


def form_matrix(H: np.ndarray, S: np.ndarray) -> np.ndarray:
    """Real symmetric matrix of ``v -> v^T H conj(v) - Re(v^T S v)`` in (Re v, Im v)."""
    K = np.swapaxes(H, -1, -2)
    top = np.concatenate([K.real, -K.imag], axis=-1)
    bot = np.concatenate([K.imag, K.real], axis=-1)
    herm = np.concatenate([top, bot], axis=-2)
    top = np.concatenate([S.real, -S.imag], axis=-1)
    bot = np.concatenate([-S.imag, -S.real], axis=-1)
    sym = np.concatenate([top, bot], axis=-2)
    M = herm - sym
    return 0.5 * (M + np.swapaxes(M, -1, -2))


def form_margin(H: np.ndarray, S: np.ndarray) -> np.ndarray:
    """``min_{|v|=1} v^T H conj(v) - |v^T S v|`` (exact, via a phase rotation of v)."""
    return np.linalg.eigvalsh(form_matrix(H, S))[..., 0]


def relative_margin(H: np.ndarray, S: np.ndarray) -> np.ndarray:
    """``1 - max |v^T S v| / v^T H conj(v)``, invariant under positive rescaling."""
    L = np.linalg.cholesky(H.conj())
    Li = np.linalg.inv(L).conj()
    M = Li @ S @ np.swapaxes(Li, -1, -2)
    return 1.0 - np.linalg.norm(M, 2, axis=(-2, -1))


@dataclass(frozen=True)
class SLCReport:
    min_margin: float
    min_relative_margin: float
    margins: np.ndarray

    @property
    def passed(self) -> bool:
        return self.min_margin > 0


def slc_check(dom: Domain, samples, tol: float = 1e-8) -> SLCReport:
    """Strong linear convexity margins on complex tangent spaces at boundary samples."""
    samples = np.atleast_2d(np.asarray(samples, dtype=complex))
    off = np.abs(dom.rho(samples))
    if np.max(off) > tol:
        raise SampleOffBoundary(f"|rho| = {np.max(off):.2e} at a sample")
    jet = dom.jet(samples)
    margins, rel = [], []
    for k, p in enumerate(samples):
        nu = np.conj(jet.z[k]) / np.linalg.norm(jet.z[k])
        T = unitary_frame(nu, nu)[:, 1:]
        H = T.T @ jet.zzbar[k] @ T.conj()
        S = T.T @ jet.zz[k] @ T
        margins.append(form_margin(H, S))
        rel.append(relative_margin(H, S))
    margins = np.array(margins)
    return SLCReport(float(np.min(margins)), float(np.min(rel)), margins)


# unitary frames and the fibre chart -----------------------------------------


def _reflect_frame(nu: np.ndarray) -> np.ndarray:
    """Unitary with first column ``nu``, smooth away from ``nu = -e_1``, identity at e_1."""
    n = nu.shape[0]
    c = nu[0]
    u = nu[1:]
    if abs(1.0 + c) < 1e-10:
        raise ChartSingularity("normal is antipodal to the chart center")
    phase = (1.0 + c) / (1.0 + np.conj(c))
    G = np.empty((n, n), dtype=complex)
    G[0, 0] = c
    G[1:, 0] = u
    G[0, 1:] = -phase * np.conj(u)
    G[1:, 1:] = np.eye(n - 1) - np.outer(u, np.conj(u)) / (1.0 + np.conj(c))
    return G


def _base_frame(nu: np.ndarray) -> np.ndarray:
    if abs(1.0 + nu[0]) >= 0.5:
        return _reflect_frame(nu)
    return -_reflect_frame(-nu)


def unitary_frame(nu, center=None) -> np.ndarray:
    """Unitary ``gamma`` with ``gamma e_1 = nu`` in the chart around ``center``.

    Without a center the chart is centered at ``nu`` itself; in every case
    ``gamma_{e_1} = I`` for the default chart.
    """
    nu = np.asarray(nu, dtype=complex)
    nu = nu / np.linalg.norm(nu)
    if center is None:
        return _base_frame(nu)
    center = np.asarray(center, dtype=complex)
    G0 = _base_frame(center / np.linalg.norm(center))
    local = G0.conj().T @ nu
    if abs(1.0 + local[0]) < 1e-8:
        raise ChartSingularity("normal is antipodal to the chart center")
    return G0 @ _reflect_frame(local)


@dataclass(frozen=True)
class BoundaryDatum:
    """Point-direction pair (p, v) with its fibre coordinate ``vhat``."""

    p: np.ndarray
    v: np.ndarray
    vhat: np.ndarray
    center: np.ndarray | None = None

    def to_dict(self) -> dict:
        pack = lambda a: np.stack([np.real(a), np.imag(a)], axis=-1).tolist()
        out = {"p": pack(self.p), "v": pack(self.v), "vhat": pack(self.vhat)}
        if self.center is not None:
            out["center"] = pack(self.center)
        return out


def fiber_unchart(dom: Domain, p, vhat, center=None) -> np.ndarray:
    vhat = np.asarray(vhat, dtype=complex)
    s = 1.0 - np.vdot(vhat, vhat).real
    if s <= 0:
        raise NotInLp("|vhat| must be < 1")
    gamma = unitary_frame(dom.normal(p), center)
    return gamma @ np.concatenate([[np.sqrt(s)], vhat])


def fiber_chart(dom: Domain, p, v, center=None, tol: float = 1e-10) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    v = v / np.linalg.norm(v)
    gamma = unitary_frame(dom.normal(p), center)
    w = gamma.conj().T @ v
    if w[0].real <= 0 or abs(w[0].imag) > tol * max(1.0, abs(w[0])):
        raise NotInLp(f"<v, nu_p> = {w[0]:.3e} is not positive")
    return w[1:]


def make_datum(dom: Domain, p, vhat=None, v=None, center=None) -> BoundaryDatum:
    """Build a datum from either the fibre coordinate or the direction."""
    p = np.asarray(p, dtype=complex)
    if vhat is None and v is None:
        vhat = np.zeros(dom.n - 1)
    if vhat is not None:
        vhat = np.asarray(vhat, dtype=complex)
        v = fiber_unchart(dom, p, vhat, center)
    else:
        v = np.asarray(v, dtype=complex)
        v = v / np.linalg.norm(v)
        vhat = fiber_chart(dom, p, v, center)
    c = None if center is None else np.asarray(center, dtype=complex)
    return BoundaryDatum(p, v, vhat, c)
