"""Kernels produced by deforming the fractional Dirichlet form.

Pulling the quadratic form of (-Delta)^s back along a flow multiplies the
kernel |y-z|^(-dim-2s) by Jacobian and distance-distortion factors; the
first-order term in t is the `deformation_weight` below, and freezing its
coefficients at a point x gives the weight driving the far-field integral
identity checked in the operators module.
"""

from __future__ import annotations

import numpy as np

from .core_math import FracParams, c_ns
from .errors import DomainError
from .geometry import AffineFlow, VectorField


def _rows(pts) -> np.ndarray:
    return np.atleast_2d(np.asarray(pts, dtype=float))


def _scalar_out(out: np.ndarray, *inputs) -> np.ndarray | float:
    if all(np.asarray(q).ndim == 1 for q in inputs):
        return float(out[0])
    return out


def deformation_weight(field: VectorField, y, z, p: FracParams):
    """First-order kernel weight of the flow generated by `field`.

    (c/2) [div Y(y) + div Y(z) - (dim+2s) ((Y(y)-Y(z)).(y-z)) / |y-z|^2].
    """
    y2, z2 = _rows(y), _rows(z)
    d = y2 - z2
    q2 = np.sum(d**2, axis=1)
    if np.any(q2 == 0.0):
        raise DomainError("deformation_weight needs y != z")
    quad = np.sum((field(y2) - field(z2)) * d, axis=1) / q2
    out = 0.5 * c_ns(p) * (
        field.divergence(y2) + field.divergence(z2) - (p.dim + 2.0 * p.s) * quad
    )
    return _scalar_out(out, y, z)


def frozen_deformation_weight(field: VectorField, x, y, z, p: FracParams):
    """Deformation weight with the field's coefficients frozen at x.

    (c/2) [2 div Y(x) - (dim+2s) (DY(x)(y-z)).(y-z) / |y-z|^2]; the limit of
    deformation_weight under (y, z) -> (x + eps y, x + eps z).
    """
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    y2, z2 = _rows(y), _rows(z)
    d = y2 - z2
    q2 = np.sum(d**2, axis=1)
    if np.any(q2 == 0.0):
        raise DomainError("frozen_deformation_weight needs y != z")
    dy = field.matrix
    div_x = float(np.trace(dy))
    quad = np.sum((d @ dy.T) * d, axis=1) / q2
    del x_arr  # affine fields: DY and div are position-free, x kept for signature clarity
    out = 0.5 * c_ns(p) * (2.0 * div_x - (p.dim + 2.0 * p.s) * quad)
    return _scalar_out(out, y, z)


def deformation_kernel(field: VectorField, y, z, p: FracParams):
    """deformation_weight times the fractional kernel |y-z|^(-dim-2s)."""
    y2, z2 = _rows(y), _rows(z)
    q = np.linalg.norm(y2 - z2, axis=1)
    if np.any(q == 0.0):
        raise DomainError("deformation_kernel needs y != z")
    w = np.atleast_1d(deformation_weight(field, y2, z2, p))
    out = w * q ** (-(p.dim + 2.0 * p.s))
    return _scalar_out(out, y, z)


def pullback_kernel(flow: AffineFlow, t: float, y, z, p: FracParams):
    """Kernel of the Dirichlet form pulled back along the flow at time t.

    (c/2) Jac(y) Jac(z) / |Phi_t y - Phi_t z|^(dim+2s); at t = 0 this is the
    plain fractional kernel.
    """
    y2, z2 = _rows(y), _rows(z)
    yt, zt = flow.map(y2, t), flow.map(z2, t)
    q = np.linalg.norm(yt - zt, axis=1)
    if np.any(q == 0.0):
        raise DomainError("pullback_kernel: flow collapsed the pair")
    jac = flow.jacobian_det(t)
    out = 0.5 * c_ns(p) * jac * jac * q ** (-(p.dim + 2.0 * p.s))
    return _scalar_out(out, y, z)


def kernel_difference_bound(x, y, z, p: FracParams, beta: float | None = None):
    """Majorant for differences of deformed fundamental-solution powers.

    Three regimes: for 2s < 1 a plain power maximum, for 2s > 1 a Lipschitz
    factor |y-z| times gradient-scale powers, and at 2s = 1 an interpolated
    form with exponent `beta` in (0, 1).
    """
    x2 = _rows(x)
    y2, z2 = _rows(y), _rows(z)
    qxy = np.linalg.norm(x2 - y2, axis=1)
    qxz = np.linalg.norm(x2 - z2, axis=1)
    qyz = np.linalg.norm(y2 - z2, axis=1)
    if np.any(qxy == 0.0) or np.any(qxz == 0.0) or np.any(qyz == 0.0):
        raise DomainError("kernel_difference_bound needs pairwise distinct points")
    n, s = p.dim, p.s
    if 2.0 * s < 1.0:
        out = np.maximum(qxy ** (2 * s - n), qxz ** (2 * s - n))
    elif 2.0 * s > 1.0:
        out = qyz * np.maximum(qxy ** (2 * s - n - 1), qxz ** (2 * s - n - 1))
    else:
        if beta is None:
            beta = 0.5
        if not 0.0 < beta < 1.0:
            raise DomainError(f"beta must lie in (0, 1), got {beta}")
        out = qyz**beta * np.maximum(qxy ** (1 - n - beta), qxz ** (1 - n - beta))
    return _scalar_out(out, x, y, z)
