"""Linear Riemann-Hilbert problems on the unit circle.

For Hermitian ``H`` and symmetric ``S`` with ``v^T H conj(v) > |v^T S v|`` we
look for holomorphic ``g`` such that ``H conj(g/zeta) + S g/zeta + f`` is the
trace of a holomorphic function, with the value and derivative of ``g``
prescribed at one point (one-jet) or the values prescribed at two points.

Everything is discretized in coefficient space.  A base solve with fixed
``g(0)`` imposes the projection condition on the frequencies ``-1 ... -K``
for Taylor coefficients ``1 ... K`` of ``g``, which is a square real-linear
system; the constrained problems are assembled from ``4m + 1`` base
solutions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .circle import CircleField, analytic_projection, taylor_eval
from .domains import form_margin
from .errors import BasisDegenerate, IllConditioned, NotAdmissible

COND_MAX = 1e10
TOL_RH = 1e-8


@dataclass(frozen=True, eq=False)
class RHSymbols:
    """Symbols ``H`` (Hermitian) and ``S`` (symmetric) sampled on the circle."""

    H: CircleField
    S: CircleField

    def __post_init__(self):
        if self.H.shape != self.S.shape or len(self.H.shape) != 2:
            raise ValueError("H and S must be square matrix fields of equal size")
        if self.H.num_nodes != self.S.num_nodes:
            raise ValueError("H and S must share the grid")

    @property
    def m(self) -> int:
        return self.H.shape[0]

    @property
    def num_nodes(self) -> int:
        return self.H.num_nodes

    def hermitian_defect(self) -> float:
        H = self.H.values
        return float(np.max(np.abs(H - np.conj(np.swapaxes(H, 1, 2)))))

    def symmetric_defect(self) -> float:
        S = self.S.values
        return float(np.max(np.abs(S - np.swapaxes(S, 1, 2))))

    def margin(self) -> float:
        """Admissibility margin ``min v^T H conj(v) - |v^T S v|`` over nodes and unit v."""
        H = 0.5 * (self.H.values + np.conj(np.swapaxes(self.H.values, 1, 2)))
        S = 0.5 * (self.S.values + np.swapaxes(self.S.values, 1, 2))
        return float(np.min(form_margin(H, S)))


@dataclass(frozen=True)
class OneJet:
    zeta0: complex
    z0: np.ndarray
    v0: np.ndarray


@dataclass(frozen=True)
class TwoPoint:
    zeta0: complex
    xi0: complex
    z0: np.ndarray
    w0: np.ndarray

    def __post_init__(self):
        if abs(self.zeta0 - self.xi0) < 1e-12:
            raise ValueError("the two constraint points must differ")


def shift_spectrum(spec: np.ndarray, s: int) -> np.ndarray:
    """Multiply by ``zeta**s`` in coefficient space, dropping modes that leave the band."""
    n = spec.shape[0]
    ordered = np.fft.fftshift(spec, axes=0)
    out = np.zeros_like(ordered)
    if s >= 0:
        out[s:] = ordered[: n - s]
    else:
        out[: n + s] = ordered[-s:]
    return np.fft.ifftshift(out, axes=0)


def _realify(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Real matrix of ``g -> A g + B conj(g)`` acting on ``(Re g, Im g)``."""
    P, M = A + B, A - B
    return np.block([[P.real, -M.imag], [P.imag, M.real]])


def _blocks(spec: np.ndarray, idx: np.ndarray) -> np.ndarray:
    """Gather matrix coefficients at integer frequencies, zero outside the band."""
    n = spec.shape[0]
    valid = (idx >= -n // 2) & (idx < n // 2)
    out = spec[np.mod(idx, n)]
    out[~valid] = 0.0
    return out


def _to_matrix(blocks: np.ndarray) -> np.ndarray:
    K, L, m, _ = blocks.shape
    return blocks.transpose(0, 2, 1, 3).reshape(K * m, L * m)


@dataclass(eq=False)
class RHSolver:
    """Factorized base problem for fixed symbols; doubles as the basis cache.

    ``degree`` is the number ``K`` of free Taylor coefficients of a base
    solution; the default ``N/2 - 2`` leaves room for the factor ``zeta`` in
    the solution formula.
    """

    sym: RHSymbols
    degree: int | None = None
    cond_max: float = COND_MAX
    pivoting: str = "lu"
    check_admissible: bool = True
    _basis: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        sym = self.sym
        if self.check_admissible:
            margin = sym.margin()
            if not margin > 0:
                raise NotAdmissible(f"admissibility margin {margin:.3e}")
        n = sym.num_nodes
        K = n // 2 - 2 if self.degree is None else self.degree
        self.degree = K
        i = np.arange(1, K + 1)[:, None]
        k = np.arange(1, K + 1)[None, :]
        self._Hspec = np.array(sym.H.spectrum)
        self._Sspec = np.array(sym.S.spectrum)
        A = _to_matrix(_blocks(self._Sspec, -i - k))
        B = _to_matrix(_blocks(self._Hspec, k - i))
        self.matrix = _realify(A, B)
        self._factorize()

    def _factorize(self):
        M = self.matrix
        if self.pivoting == "lu":
            lu, piv = sla.lu_factor(M, check_finite=False)
            anorm = np.linalg.norm(M, 1)
            rcond, _ = sla.lapack.dgecon(lu, anorm, norm="1")
            self._lu = (lu, piv)
            self.condition = np.inf if rcond == 0 else 1.0 / rcond
        elif self.pivoting == "qr":
            Qm, Rm, perm = sla.qr(M, pivoting=True)
            self._qr = (Qm, Rm, perm)
            d = np.abs(np.diag(Rm))
            self.condition = np.inf if d.min() == 0 else d.max() / d.min()
        else:
            raise ValueError(f"unknown pivoting {self.pivoting!r}")
        if not self.condition < self.cond_max:
            raise IllConditioned(f"condition number {self.condition:.3e}")

    def _solve_real(self, rhs: np.ndarray) -> np.ndarray:
        if self.pivoting == "lu":
            return sla.lu_solve(self._lu, rhs, check_finite=False)
        Qm, Rm, perm = self._qr
        y = sla.solve_triangular(Rm, Qm.T @ rhs)
        x = np.empty_like(y)
        x[perm] = y
        return x

    # base problem ------------------------------------------------------

    def _rhs(self, fspec: np.ndarray, g0: np.ndarray) -> np.ndarray:
        """Complex right-hand side at frequencies -1..-K for all columns."""
        K = self.degree
        i = -np.arange(1, K + 1)
        Hm = _blocks(self._Hspec, i)
        Sm = _blocks(self._Sspec, i)
        data = _blocks(fspec, i)
        data = data + np.einsum("kab,bc->kac", Hm, np.conj(g0)) + np.einsum("kab,bc->kac", Sm, g0)
        return -data.reshape(K * self.sym.m, -1)

    def base_taylor(self, fspec: np.ndarray, g0: np.ndarray) -> np.ndarray:
        """Taylor coefficients ``(K+1, m, r)`` of base solutions for r right-hand sides.

        ``fspec`` has shape ``(N, m, r)`` and ``g0`` shape ``(m, r)``.
        """
        K, m = self.degree, self.sym.m
        rhs = self._rhs(fspec, g0)
        x = self._solve_real(np.vstack([rhs.real, rhs.imag]))
        half = K * m
        coef = (x[:half] + 1j * x[half:]).reshape(K, m, -1)
        return np.concatenate([g0[None], coef], axis=0)

    def solve_base(self, f: CircleField | None, g0) -> CircleField:
        m, n = self.sym.m, self.sym.num_nodes
        fspec = np.zeros((n, m)) if f is None else np.asarray(f.spectrum)
        g0 = np.asarray(g0, dtype=complex).reshape(m)
        taylor = self.base_taylor(fspec[..., None], g0[:, None])[..., 0]
        return CircleField.from_taylor(taylor, n)

    # basis of the solution formula ---------------------------------------

    def homogeneous_basis(self) -> np.ndarray:
        """Taylor coefficients of the 4m symbol-only basis functions of ``g``.

        Column order: Re g(0)_k, Im g(0)_k, Re g'(0)_k, Im g'(0)_k.  Each
        column is the full function ``g`` (degree ``K + 1``) contributed by a
        unit value of that real parameter.
        """
        if "basis" in self._basis:
            return self._basis["basis"]
        m, n, K = self.sym.m, self.sym.num_nodes, self.degree
        eye = np.eye(m)
        Hs, Ss = self._Hspec, self._Sspec
        zH = shift_spectrum(Hs, 1)
        Sz = shift_spectrum(Ss, -1)
        f_hr = zH + Sz
        f_hi = -1j * zH + 1j * Sz
        fspec = np.concatenate([f_hr, f_hi, np.zeros((n, m, 2 * m))], axis=2)
        g0 = np.concatenate([np.zeros((m, 2 * m)), eye, 1j * eye], axis=1)
        base = self.base_taylor(fspec, g0)
        funcs = np.zeros((K + 2, m, 4 * m), dtype=complex)
        # zeta * (base solution)
        funcs[1:] = base
        funcs[0, :, :m] = eye
        funcs[0, :, m : 2 * m] = 1j * eye
        self._basis["basis"] = funcs
        return funcs

    def particular(self, f: CircleField | None) -> np.ndarray:
        """Taylor coefficients of ``zeta * g_star`` for data ``f``."""
        m, n, K = self.sym.m, self.sym.num_nodes, self.degree
        out = np.zeros((K + 2, m), dtype=complex)
        if f is None:
            return out
        base = self.base_taylor(np.asarray(f.spectrum)[..., None], np.zeros((m, 1)))[..., 0]
        out[1:] = base
        return out

    def _assemble(self, f, evaluate, target, ordering=None):
        m = self.sym.m
        funcs = self.homogeneous_basis()
        part = self.particular(f)
        perm = np.arange(4 * m) if ordering is None else np.asarray(ordering)
        funcs = funcs[..., perm]
        cols = np.stack([evaluate(funcs[..., j]) for j in range(4 * m)], axis=1)
        rhs = target - evaluate(part)
        A = np.vstack([cols.real, cols.imag])
        b = np.concatenate([rhs.real, rhs.imag])
        cond = np.linalg.cond(A)
        if not cond < self.cond_max:
            raise BasisDegenerate(f"constraint system condition {cond:.3e}")
        coef = np.linalg.solve(A, b)
        taylor = part + funcs @ coef
        return CircleField.from_taylor(taylor, self.sym.num_nodes)

    def solve_jet(self, f: CircleField | None, c: OneJet, ordering=None) -> CircleField:
        z0 = np.asarray(c.z0, dtype=complex)
        v0 = np.asarray(c.v0, dtype=complex)

        def evaluate(t):
            return np.concatenate([taylor_eval(t, c.zeta0), taylor_eval(t, c.zeta0, 1)])

        return self._assemble(f, evaluate, np.concatenate([z0, v0]), ordering)

    def solve_two_point(self, f: CircleField | None, c: TwoPoint, ordering=None) -> CircleField:
        z0 = np.asarray(c.z0, dtype=complex)
        w0 = np.asarray(c.w0, dtype=complex)

        def evaluate(t):
            return np.concatenate([taylor_eval(t, c.zeta0), taylor_eval(t, c.xi0)])

        return self._assemble(f, evaluate, np.concatenate([z0, w0]), ordering)


def solve_base(sym: RHSymbols, f: CircleField | None, g0, cache: RHSolver | None = None) -> CircleField:
    solver = cache if cache is not None else RHSolver(sym)
    return solver.solve_base(f, g0)


def solve_jet(sym: RHSymbols, f: CircleField | None, c: OneJet, cache: RHSolver | None = None) -> CircleField:
    solver = cache if cache is not None else RHSolver(sym)
    return solver.solve_jet(f, c)


def solve_two_point(sym: RHSymbols, f: CircleField | None, c: TwoPoint, cache: RHSolver | None = None) -> CircleField:
    solver = cache if cache is not None else RHSolver(sym)
    return solver.solve_two_point(f, c)


def solve_direct(sym: RHSymbols, f: CircleField | None, c: OneJet | TwoPoint) -> CircleField:
    """Independent assembly: one bordered system for all Taylor coefficients of g.

    Unknowns are the coefficients ``0 ... K+1`` of ``g``; the projection
    condition for ``g/zeta`` is imposed at frequencies ``-1 ... -K`` and the
    constraint rows are appended.  No base solutions are involved.
    """
    m, n = sym.m, sym.num_nodes
    K = n // 2 - 2
    Hs, Ss = np.array(sym.H.spectrum), np.array(sym.S.spectrum)
    i = np.arange(1, K + 1)[:, None]
    k = np.arange(0, K + 2)[None, :]
    A = _to_matrix(_blocks(Ss, -i - k + 1))
    B = _to_matrix(_blocks(Hs, -i + k - 1))
    fspec = np.zeros((n, m)) if f is None else np.asarray(f.spectrum)
    rhs = -_blocks(fspec, -np.arange(1, K + 1)).reshape(-1)
    powers = np.arange(K + 2)
    if isinstance(c, OneJet):
        pts, orders, targets = [c.zeta0, c.zeta0], [0, 1], [c.z0, c.v0]
    else:
        pts, orders, targets = [c.zeta0, c.xi0], [0, 0], [c.z0, c.w0]
    rows = []
    for pt, order in zip(pts, orders):
        w = np.ones(K + 2, dtype=complex)
        for j in range(order):
            w = w * (powers - j)
        expo = np.clip(powers - order, 0, None)
        vals = np.where(powers >= order, w * complex(pt) ** expo, 0.0)
        rows.append(np.kron(vals[None, :], np.eye(m)))
    C = np.vstack(rows)
    Afull = np.vstack([A, C])
    Bfull = np.vstack([B, np.zeros_like(C)])
    rfull = np.concatenate([rhs, np.concatenate([np.asarray(t, dtype=complex) for t in targets])])
    M = _realify(Afull, Bfull)
    x = np.linalg.solve(M, np.concatenate([rfull.real, rfull.imag]))
    half = (K + 2) * m
    taylor = (x[:half] + 1j * x[half:]).reshape(K + 2, m)
    return CircleField.from_taylor(taylor, n)


def rh_residual(sym: RHSymbols, f: CircleField | None, g: CircleField, weighted: bool = True) -> float:
    """Sup-norm of the anti-holomorphic part of ``H conj(G) + S G + f``.

    ``G = g/zeta`` when ``weighted`` (constrained problems) and ``G = g`` for
    base problems.  Products are formed on a doubled grid to avoid aliasing.
    """
    n = sym.num_nodes
    big = 2 * n
    H = sym.H.with_nodes(big).values
    S = sym.S.with_nodes(big).values
    gv = g.with_nodes(big).values
    if weighted:
        from .circle import nodes

        gv = gv / nodes(big)[:, None]
    total = np.einsum("kab,kb->ka", H, np.conj(gv)) + np.einsum("kab,kb->ka", S, gv)
    if f is not None:
        total = total + f.with_nodes(big).values
    return analytic_projection(CircleField(total)).sup_norm()
