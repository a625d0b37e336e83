"""Spectral calculus for band-limited fields on the unit circle.

A :class:`CircleField` holds samples of a (vector or matrix valued) function
at the equispaced nodes ``zeta_j = exp(2 pi i j / N)``.  Every operator in
this module is a diagonal Fourier multiplier, so all of them are exact on
trigonometric polynomials of degree below ``N/2``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import NotHolomorphic, OutsideDisc, TooCloseToZero

DEFAULT_NODES = 256
TOL_NEG = 1e-10


def nodes(n: int) -> np.ndarray:
    """Return the ``n`` equispaced points of the unit circle, starting at 1."""
    return np.exp(2j * np.pi * np.arange(n) / n)


def frequencies(n: int) -> np.ndarray:
    """Integer frequencies in numpy FFT order."""
    return np.fft.fftfreq(n, d=1.0 / n).round().astype(int)


@dataclass(frozen=True, eq=False)
class CircleField:
    """Nodal samples of a function on the unit circle.

    ``values`` has shape ``(N, *shape)`` where ``shape`` is ``()`` for
    scalars, ``(k,)`` for vectors and ``(k, m)`` for matrices.
    """

    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.ndim == 0 or vals.shape[0] < 2 or vals.shape[0] % 2:
            raise ValueError("a circle field needs an even, positive number of nodes")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    # construction -------------------------------------------------------

    @classmethod
    def from_function(cls, func, n: int = DEFAULT_NODES) -> "CircleField":
        """Sample ``func`` (vectorized over the node array) at ``n`` nodes."""
        return cls(np.asarray(func(nodes(n)), dtype=complex))

    @classmethod
    def from_spectrum(cls, spectrum: np.ndarray) -> "CircleField":
        """Build from coefficients given in numpy FFT order."""
        spectrum = np.asarray(spectrum, dtype=complex)
        n = spectrum.shape[0]
        return cls(np.fft.ifft(spectrum, axis=0) * n)

    @classmethod
    def from_coeffs(cls, coeffs: np.ndarray) -> "CircleField":
        """Build from coefficients ordered ``k = -N/2 ... N/2 - 1``."""
        return cls.from_spectrum(np.fft.ifftshift(np.asarray(coeffs), axes=0))

    @classmethod
    def from_taylor(cls, taylor: np.ndarray, n: int = DEFAULT_NODES) -> "CircleField":
        """Trace of the polynomial ``sum_k taylor[k] zeta**k`` (degree < n/2)."""
        taylor = np.asarray(taylor, dtype=complex)
        if taylor.shape[0] > n // 2:
            raise ValueError("polynomial degree exceeds the grid resolution")
        spec = np.zeros((n,) + taylor.shape[1:], dtype=complex)
        spec[: taylor.shape[0]] = taylor
        return cls.from_spectrum(spec)

    # basic attributes ----------------------------------------------------

    @property
    def num_nodes(self) -> int:
        return self.values.shape[0]

    @property
    def shape(self) -> tuple:
        return self.values.shape[1:]

    @property
    def dim(self) -> int:
        return int(np.prod(self.shape)) if self.shape else 1

    @cached_property
    def spectrum(self) -> np.ndarray:
        """Fourier coefficients in numpy FFT order (frequency ``frequencies(N)``)."""
        spec = np.fft.fft(self.values, axis=0) / self.num_nodes
        spec.setflags(write=False)
        return spec

    @property
    def coeffs(self) -> np.ndarray:
        """Fourier coefficients ordered ``k = -N/2 ... N/2 - 1``."""
        return np.fft.fftshift(self.spectrum, axes=0)

    @property
    def freqs(self) -> np.ndarray:
        return frequencies(self.num_nodes)

    def taylor(self) -> np.ndarray:
        """Nonnegative-frequency coefficients ``c_0 ... c_{N/2-1}``."""
        return np.array(self.spectrum[: self.num_nodes // 2])

    def sup_norm(self) -> float:
        vals = self.values.reshape(self.num_nodes, -1)
        return float(np.max(np.linalg.norm(vals, axis=1))) if vals.size else 0.0

    def negative_mass(self) -> float:
        """Sup-norm of the strictly negative-frequency part."""
        return analytic_projection(self).sup_norm()

    def is_holomorphic(self, tol: float | None = None) -> bool:
        tol = TOL_NEG * max(self.sup_norm(), 1.0) if tol is None else tol
        return self.negative_mass() <= tol

    def is_real_valued(self, tol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(self.values.imag), initial=0.0) <= tol * max(self.sup_norm(), 1.0))

    def mean(self) -> np.ndarray:
        return np.array(self.spectrum[0])

    def at_one(self, order: int = 0) -> np.ndarray:
        """Value (or complex derivative of given order) of the trace at zeta=1.

        Computed from coefficients as the Laurent series derivative, which is
        the complex derivative of the extension for holomorphic fields.
        """
        k = self.freqs.astype(float)
        weight = np.ones_like(k)
        for j in range(order):
            weight = weight * (k - j)
        return np.tensordot(weight, self.spectrum, axes=(0, 0))

    def map(self, func) -> "CircleField":
        """Apply a nodewise function to the values."""
        return CircleField(func(self.values))

    def with_nodes(self, n: int) -> "CircleField":
        """Re-sample on ``n`` nodes by zero padding or truncating the spectrum."""
        old = self.num_nodes
        if n == old:
            return self
        coeffs = self.coeffs
        out = np.zeros((n,) + self.shape, dtype=complex)
        half = min(n, old) // 2
        out[n // 2 - half : n // 2 + half] = coeffs[old // 2 - half : old // 2 + half]
        return CircleField.from_coeffs(out)

    # arithmetic on nodal values -----------------------------------------

    def __add__(self, other):
        return CircleField(self.values + _vals(other))

    __radd__ = __add__

    def __sub__(self, other):
        return CircleField(self.values - _vals(other))

    def __rsub__(self, other):
        return CircleField(_vals(other) - self.values)

    def __mul__(self, other):
        return CircleField(self.values * _vals(other))

    __rmul__ = __mul__

    def __neg__(self):
        return CircleField(-self.values)

    def conj(self) -> "CircleField":
        return CircleField(np.conj(self.values))

    # serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        c = self.coeffs
        return {
            "n": self.num_nodes,
            "dim": list(self.shape) if len(self.shape) > 1 else (self.shape[0] if self.shape else 1),
            "coeffs": np.stack([c.real, c.imag], axis=-1).tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CircleField":
        arr = np.asarray(data["coeffs"], dtype=float)
        coeffs = arr[..., 0] + 1j * arr[..., 1]
        if coeffs.shape[0] != data["n"]:
            raise ValueError("coefficient count does not match n")
        return cls.from_coeffs(coeffs)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "CircleField":
        return cls.from_dict(json.loads(text))


def _vals(other):
    return other.values if isinstance(other, CircleField) else other


def _multiplier(u: CircleField, mult: np.ndarray) -> CircleField:
    mult = mult.reshape((-1,) + (1,) * len(u.shape))
    return CircleField.from_spectrum(u.spectrum * mult)


def hilbert_transform(u: CircleField) -> CircleField:
    """Conjugate function: multiply coefficient k by ``-i sgn(k)``.

    The Nyquist mode is annihilated so that real fields stay real.
    """
    k = u.freqs
    mult = -1j * np.sign(k).astype(complex)
    mult[k == -u.num_nodes // 2] = 0.0
    return _multiplier(u, mult)


def analytic_projection(u: CircleField) -> CircleField:
    """Keep exactly the strictly negative frequencies of ``u``.

    Equals ``(u - i H u)/2 - mean(u)/2``; the kernel consists of the traces
    of holomorphic functions.
    """
    return _multiplier(u, (u.freqs < 0).astype(complex))


def holomorphic_part(u: CircleField) -> CircleField:
    """Complementary projection onto frequencies ``0 <= k < N/2``."""
    return _multiplier(u, (u.freqs >= 0).astype(complex))


def holomorphic_extend(u: CircleField, zeta, check: bool = True, tol: float | None = None):
    """Evaluate ``sum_{k>=0} c_k zeta**k`` at a point or array of points.

    The result has shape ``np.shape(zeta) + u.shape``.
    """
    if check and not u.is_holomorphic(tol):
        raise NotHolomorphic(f"negative-frequency mass {u.negative_mass():.3e}")
    taylor = u.taylor()
    zeta = np.asarray(zeta, dtype=complex)
    out = np.zeros(zeta.shape + u.shape, dtype=complex)
    zz = zeta.reshape(zeta.shape + (1,) * len(u.shape))
    for c in taylor[::-1]:
        out = out * zz + c
    return out


def taylor_eval(taylor: np.ndarray, zeta, order: int = 0):
    """Evaluate the ``order``-th derivative of a polynomial given by Taylor coefficients."""
    taylor = np.asarray(taylor, dtype=complex)
    k = np.arange(taylor.shape[0], dtype=float)
    weight = np.ones_like(k)
    for j in range(order):
        weight = weight * (k - j)
    coef = (taylor * weight.reshape((-1,) + (1,) * (taylor.ndim - 1)))[order:]
    zeta = np.asarray(zeta, dtype=complex)
    if coef.shape[0] == 0:
        return np.zeros(zeta.shape + taylor.shape[1:], dtype=complex)
    flat = zeta.reshape(-1, 1)
    powers = np.cumprod(np.broadcast_to(flat, (flat.shape[0], coef.shape[0])), axis=1)
    powers = np.hstack([np.ones_like(flat), powers[:, :-1]])
    out = powers @ coef.reshape(coef.shape[0], -1)
    return out.reshape(zeta.shape + taylor.shape[1:])


def circle_derivative(u: CircleField, order: int = 1) -> CircleField:
    """Term-by-term d/dzeta of the Laurent series of ``u``.

    Coefficient ``c_k`` moves to frequency ``k - order`` with weight
    ``k (k-1) ... (k-order+1)``; modes pushed below ``-N/2`` are dropped.
    """
    if order < 1:
        raise ValueError("order must be a positive integer")
    n = u.num_nodes
    coeffs = u.coeffs
    k = np.arange(-n // 2, n // 2)
    weight = np.ones(n)
    for j in range(order):
        weight = weight * (k - j)
    weighted = coeffs * weight.reshape((-1,) + (1,) * len(u.shape))
    out = np.zeros_like(coeffs)
    out[: n - order] = weighted[order:]
    return CircleField.from_coeffs(out)


def winding_number(u: CircleField) -> int:
    """Winding number of a nonvanishing scalar field around the origin."""
    vals = np.asarray(u.values)
    if vals.ndim != 1:
        raise ValueError("winding number needs a scalar field")
    step = np.abs(np.diff(np.append(vals, vals[0])))
    if np.min(np.abs(vals)) <= 10.0 * np.max(step):
        raise TooCloseToZero(
            f"min |u| = {np.min(np.abs(vals)):.3e} vs max increment {np.max(step):.3e}"
        )
    ratio = np.append(vals[1:], vals[0]) / vals
    return int(np.rint(np.sum(np.angle(ratio)) / (2 * np.pi)))


def poincare_distance(z1, z2) -> float:
    """Poincare distance ``artanh |(z1 - z2) / (1 - z1 conj(z2))|`` on the disc."""
    z1 = complex(z1)
    z2 = complex(z2)
    if abs(z1) >= 1 or abs(z2) >= 1:
        raise OutsideDisc("both points must lie in the open unit disc")
    return float(np.arctanh(abs((z1 - z2) / (1 - z1 * np.conj(z2)))))
