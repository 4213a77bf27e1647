"""Constants of the fractional Laplacian and the radial profile integral.

Everything downstream (Green functions, deformation kernels, boundary
formulas) is normalized through the handful of gamma-function constants
defined here, so they are kept in one place and cross-checked hard in the
test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import DomainError

SUPPORTED_DIMS = (1, 2, 3)


@dataclass(frozen=True)
class FracParams:
    """Dimension and fractional order of (-Delta)^s.

    The constraint dim > 2s keeps the whole ball calculus in the regime
    where the fundamental solution is a positive decaying power.
    """

    dim: int
    s: float

    def __post_init__(self):
        if self.dim not in SUPPORTED_DIMS:
            raise DomainError(f"dim must be one of {SUPPORTED_DIMS}, got {self.dim!r}")
        if not (isinstance(self.s, (int, float)) and 0.0 < float(self.s) < 1.0):
            raise DomainError(f"s must lie in (0, 1), got {self.s!r}")
        if self.dim <= 2.0 * self.s:
            raise DomainError(f"need dim > 2*s, got dim={self.dim}, s={self.s}")


def gamma_fn(x: float) -> float:
    """Gamma function on the positive half line."""
    if x <= 0.0:
        raise DomainError(f"gamma_fn needs x > 0, got {x}")
    return math.gamma(x)


def c_ns(p: FracParams) -> float:
    """Normalization of the singular-integral definition of (-Delta)^s."""
    n, s = p.dim, p.s
    return math.pi ** (-n / 2.0) * s * 4.0**s * gamma_fn((n + 2.0 * s) / 2.0) / gamma_fn(1.0 - s)


def b_ns(p: FracParams) -> float:
    """Coefficient of the fundamental solution b * |x-y|^(2s-dim)."""
    n, s = p.dim, p.s
    return math.pi ** (-n / 2.0) * 4.0 ** (-s) * gamma_fn((n - 2.0 * s) / 2.0) / gamma_fn(s)


def hadamard_const(s: float) -> float:
    """Gamma(1+s)^2, the prefactor of every boundary shape-derivative formula.

    Accepts s in (0, 1]; at s = 1 the value is exactly 1, matching the
    classical local limit.
    """
    if not 0.0 < s <= 1.0:
        raise DomainError(f"hadamard_const needs s in (0, 1], got {s}")
    return gamma_fn(1.0 + s) ** 2


def kappa_ns(p: FracParams) -> float:
    """Normalization of the closed-form ball Green function."""
    n, s = p.dim, p.s
    return gamma_fn(n / 2.0) / (4.0**s * math.pi ** (n / 2.0) * gamma_fn(s) ** 2)


def beta_total(p: FracParams) -> float:
    """Value of the ring integral at r = infinity: B(s, (dim-2s)/2)."""
    return float(special.beta(p.s, (p.dim - 2.0 * p.s) / 2.0))


def ring_integral(r, p: FracParams):
    """Integral of t^(s-1) (1+t)^(-dim/2) over (0, r).

    Reduces exactly to an incomplete beta function under t = x/(1-x);
    vectorized over r, monotone increasing, with limit beta_total(p).
    """
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0.0) or np.any(np.isnan(r_arr)):
        raise DomainError("ring_integral needs r >= 0")
    b = (p.dim - 2.0 * p.s) / 2.0
    total = beta_total(p)
    with np.errstate(invalid="ignore"):
        x = np.where(np.isinf(r_arr), 1.0, r_arr / (1.0 + r_arr))
    out = total * special.betainc(p.s, b, x)
    if np.isscalar(r) or r_arr.ndim == 0:
        return float(out)
    return out


def ring_integral_tail(r, p: FracParams):
    """Complementary ring integral over (r, infinity), stable for large r."""
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0.0) or np.any(np.isnan(r_arr)):
        raise DomainError("ring_integral_tail needs r >= 0")
    b = (p.dim - 2.0 * p.s) / 2.0
    total = beta_total(p)
    with np.errstate(invalid="ignore"):
        x = np.where(np.isinf(r_arr), 1.0, r_arr / (1.0 + r_arr))
    # betaincc is the numerically safe complement; present in scipy >= 1.11.
    if hasattr(special, "betaincc"):
        out = total * special.betaincc(p.s, b, x)
    else:
        out = total * (1.0 - special.betainc(p.s, b, x))
    if np.isscalar(r) or r_arr.ndim == 0:
        return float(out)
    return out


def ring_integrand(t, p: FracParams):
    """Raw integrand of ring_integral, exposed for independent quadrature."""
    t_arr = np.asarray(t, dtype=float)
    return t_arr ** (p.s - 1.0) * (1.0 + t_arr) ** (-p.dim / 2.0)


def sphere_area(dim: int, radius: float = 1.0) -> float:
    """Surface measure of the sphere bounding a ball of the given radius.

    dim = 1 uses counting measure (two endpoints), matching the convention
    used by the boundary quadrature rules.
    """
    if dim == 1:
        return 2.0
    if dim == 2:
        return 2.0 * math.pi * radius
    if dim == 3:
        return 4.0 * math.pi * radius**2
    raise DomainError(f"dim must be one of {SUPPORTED_DIMS}, got {dim!r}")
