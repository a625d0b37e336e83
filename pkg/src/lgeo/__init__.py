"""Complex geodesics, boundary spherical representation and canonical charts for quadric domains."""

from .boundary import poisson_kernel, psi, psi_inverse, shoot
from .canonical import build_chart, canonical_rho, spectral_factorize, verify_straightening
from .circle import CircleField, analytic_projection, hilbert_transform
from .domains import Domain, domain_from_dict, make_ball, make_ellipsoid
from .geodesic import GeodesicDisc, SolverOptions, solve_preferred
from .rh import RHSymbols, solve_jet

__all__ = [
    "CircleField",
    "Domain",
    "GeodesicDisc",
    "RHSymbols",
    "SolverOptions",
    "analytic_projection",
    "build_chart",
    "canonical_rho",
    "domain_from_dict",
    "hilbert_transform",
    "make_ball",
    "make_ellipsoid",
    "poisson_kernel",
    "psi",
    "psi_inverse",
    "shoot",
    "solve_jet",
    "solve_preferred",
    "spectral_factorize",
    "verify_straightening",
]
