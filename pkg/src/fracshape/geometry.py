"""Ball domains, affine deformation flows, and quadrature factories.

Quadrature design notes, since they carry the accuracy budget of the whole
package:

* boundary rules: exact two-point counting measure in 1d, trapezoid on the
  circle (spectral for periodic integrands), Gauss-Legendre x trapezoid on
  the sphere.
* interior-singularity volume rules: polar coordinates around the singular
  point; a Gauss-Jacobi core absorbs the r^(2s-1) radial weight produced by
  an |x-y|^(2s-dim) kernel, smooth Legendre panels bridge to the far zone,
  and geometrically graded panels toward the boundary absorb integrands
  vanishing like dist^s there.
* boundary-layer volume rules: same polar structure around the center with
  a Gauss-Jacobi layer carrying the (R-r)^(s-1) weight of trace-type
  integrands.

All rules return plain (nodes, weights) pairs: sum(w * f(nodes)) targets
the plain volume/surface integral of f.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

from .core_math import FracParams, sphere_area
from .errors import DomainError, QuadratureError

SPHERE_TOL = 1e-8  # off-sphere tolerance for normals, relative to radius


# ---------------------------------------------------------------------------
# domains, flows, vector fields


@dataclass(frozen=True, eq=False)
class BallDomain:
    """Open ball; the only domain shape the closed-form calculus covers."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.center, dtype=float))
        if c.ndim != 1 or c.size not in (1, 2, 3):
            raise DomainError(f"center must be a 1/2/3-vector, got shape {c.shape}")
        if not self.radius > 0.0:
            raise DomainError(f"radius must be positive, got {self.radius}")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def dim(self) -> int:
        return self.center.size

    def same_as(self, other: "BallDomain") -> bool:
        return self.dim == other.dim and self.radius == other.radius and bool(
            np.all(self.center == other.center)
        )


def signed_distance(d: BallDomain, y) -> np.ndarray | float:
    """Distance to the sphere, positive inside the ball."""
    y_arr = np.asarray(y, dtype=float)
    rho = np.linalg.norm(np.atleast_2d(y_arr) - d.center, axis=1)
    out = d.radius - rho
    return float(out[0]) if y_arr.ndim == 1 else out


def outward_normal(d: BallDomain, z) -> np.ndarray:
    """Unit outward normal at a point on the sphere (strict membership check)."""
    z_arr = np.asarray(z, dtype=float)
    if abs(np.linalg.norm(z_arr - d.center) - d.radius) > SPHERE_TOL * d.radius:
        raise DomainError("outward_normal: point is not on the boundary sphere")
    return (z_arr - d.center) / d.radius


@dataclass(frozen=True, eq=False)
class VectorField:
    """Affine vector field Y(x) = matrix @ x + offset.

    The three flavors the deformation calculus needs (constant, dilation-type
    affine, general linear) are all instances; `kind` is kept for report
    echoing only.
    """

    matrix: np.ndarray
    offset: np.ndarray
    kind: str = "linear"

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        v = np.atleast_1d(np.asarray(self.offset, dtype=float))
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] != v.size:
            raise DomainError(f"inconsistent field shapes: {m.shape} vs {v.shape}")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "offset", v)

    @classmethod
    def constant(cls, v) -> "VectorField":
        v = np.atleast_1d(np.asarray(v, dtype=float))
        return cls(np.zeros((v.size, v.size)), v, kind="constant")

    @classmethod
    def affine(cls, a: float, v) -> "VectorField":
        v = np.atleast_1d(np.asarray(v, dtype=float))
        return cls(a * np.eye(v.size), v, kind="affine")

    @classmethod
    def linear(cls, matrix, offset=None) -> "VectorField":
        m = np.asarray(matrix, dtype=float)
        if offset is None:
            offset = np.zeros(m.shape[0])
        return cls(m, offset, kind="linear")

    @property
    def dim(self) -> int:
        return self.offset.size

    def __call__(self, pts) -> np.ndarray:
        p = np.asarray(pts, dtype=float)
        return p @ self.matrix.T + self.offset

    @property
    def div_value(self) -> float:
        # affine fields have spatially constant divergence
        return float(np.trace(self.matrix))

    def divergence(self, pts) -> np.ndarray | float:
        p = np.asarray(pts, dtype=float)
        if p.ndim == 1:
            return self.div_value
        return np.full(p.shape[0], self.div_value)

    @property
    def lipschitz(self) -> float:
        return float(np.linalg.norm(self.matrix, 2))

    def __add__(self, other: "VectorField") -> "VectorField":
        return VectorField(self.matrix + other.matrix, self.offset + other.offset)


@dataclass(frozen=True, eq=False)
class AffineFlow:
    """One-parameter family x -> (1 + t*a) x + t*v of dilations and shifts."""

    scale_rate: float
    shift_rate: np.ndarray

    def __post_init__(self):
        v = np.atleast_1d(np.asarray(self.shift_rate, dtype=float))
        object.__setattr__(self, "shift_rate", v)
        object.__setattr__(self, "scale_rate", float(self.scale_rate))

    @classmethod
    def translation(cls, v) -> "AffineFlow":
        return cls(0.0, v)

    @classmethod
    def dilation(cls, dim: int, a: float = 1.0) -> "AffineFlow":
        return cls(a, np.zeros(dim))

    @property
    def dim(self) -> int:
        return self.shift_rate.size

    @property
    def t_max(self) -> float:
        """Conservative parameter range on which the flow is a diffeomorphism."""
        return 1.0 / (2.0 * abs(self.scale_rate) + 1.0)

    def map(self, pts, t: float) -> np.ndarray:
        p = np.asarray(pts, dtype=float)
        return (1.0 + t * self.scale_rate) * p + t * self.shift_rate

    def jacobian_det(self, t: float) -> float:
        return (1.0 + t * self.scale_rate) ** self.dim

    def generator(self) -> VectorField:
        if self.scale_rate == 0.0:
            return VectorField.constant(self.shift_rate)
        return VectorField.affine(self.scale_rate, self.shift_rate)

    def bi_lipschitz(self, t_abs_max: float) -> tuple[float, float]:
        """Lower/upper distance-distortion constants over |t| <= t_abs_max."""
        lo = 1.0 - t_abs_max * abs(self.scale_rate)
        hi = 1.0 + t_abs_max * abs(self.scale_rate)
        if lo <= 0.0:
            raise DomainError("flow degenerates inside the requested t range")
        return lo, hi


def deform(d: BallDomain, flow: AffineFlow, t: float) -> BallDomain:
    """Image of a ball under the affine flow at time t (again a ball)."""
    scale = 1.0 + t * flow.scale_rate
    if scale <= 1e-12:
        raise DomainError(f"flow degenerates at t={t}: scale factor {scale}")
    return BallDomain(flow.map(d.center, t), scale * d.radius)


# ---------------------------------------------------------------------------
# cached 1d rules


@lru_cache(maxsize=256)
def _leg(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = roots_legendre(n)
    return x, w


@lru_cache(maxsize=256)
def _jac(n: int, beta: float) -> tuple[np.ndarray, np.ndarray]:
    # weight (1+x)^beta on [-1, 1]
    x, w = roots_jacobi(n, 0.0, beta)
    return x, w


def _panel_nodes(edges: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes/weights on consecutive [e_i, e_{i+1}]."""
    xg, wg = _leg(n)
    mid = 0.5 * (edges[..., 1:] + edges[..., :-1])
    half = 0.5 * (edges[..., 1:] - edges[..., :-1])
    r = mid[..., None] + half[..., None] * xg
    w = half[..., None] * wg
    return r, w


def _graded_edges(a, b, panels: int, ratio: float) -> np.ndarray:
    """Panel edges on [a, b] with widths shrinking geometrically toward b."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    ks = ratio ** np.arange(1, panels)
    edges = np.concatenate(
        [a[..., None], b[..., None] - (b - a)[..., None] * ks[::-1], b[..., None]],
        axis=-1,
    )
    return edges


def sphere_rule(dim: int, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Directions and weights integrating over the unit sphere S^(dim-1).

    Direction sets are antipodally symmetric, which downstream consumers rely
    on to cancel odd kernel singularities.
    """
    if dim == 1:
        return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    if dim == 2:
        m = max(4, order + (order % 2))  # even count keeps antipodal pairs
        th = 2.0 * math.pi * np.arange(m) / m
        dirs = np.stack([np.cos(th), np.sin(th)], axis=1)
        return dirs, np.full(m, 2.0 * math.pi / m)
    if dim == 3:
        n_pol = max(4, order)
        n_az = 2 * n_pol
        u, wu = _leg(n_pol)
        phi = 2.0 * math.pi * np.arange(n_az) / n_az
        su = np.sqrt(1.0 - u**2)
        dirs = np.stack(
            [
                np.outer(su, np.cos(phi)).ravel(),
                np.outer(su, np.sin(phi)).ravel(),
                np.repeat(u, n_az),
            ],
            axis=1,
        )
        w = np.repeat(wu, n_az) * (2.0 * math.pi / n_az)
        return dirs, w
    raise DomainError(f"unsupported dim {dim}")


# ---------------------------------------------------------------------------
# boundary rule


@dataclass(frozen=True, eq=False)
class BoundaryQuadrature:
    nodes: np.ndarray
    weights: np.ndarray
    normals: np.ndarray
    domain: BallDomain
    order: int

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))


_DEFAULT_BOUNDARY_ORDER = {1: 2, 2: 128, 3: 24}


def boundary_rule(d: BallDomain, order: int | None = None) -> BoundaryQuadrature:
    """Surface quadrature on the sphere bounding d.

    In 1d the boundary is two points carrying unit weight each; in higher
    dimensions `order` controls the angular resolution.
    """
    if order is None:
        order = _DEFAULT_BOUNDARY_ORDER[d.dim]
    if order < 2:
        raise QuadratureError(f"boundary rule needs order >= 2, got {order}")
    if d.dim == 1:
        nodes = np.array([[d.center[0] - d.radius], [d.center[0] + d.radius]])
        weights = np.array([1.0, 1.0])
        normals = np.array([[-1.0], [1.0]])
        return BoundaryQuadrature(nodes, weights, normals, d, 2)
    dirs, w = sphere_rule(d.dim, order)
    nodes = d.center + d.radius * dirs
    weights = w * d.radius ** (d.dim - 1)
    return BoundaryQuadrature(nodes, weights, dirs.copy(), d, order)


# ---------------------------------------------------------------------------
# interior-singularity volume rule


@dataclass(frozen=True, eq=False)
class SingularVolumeQuadrature:
    nodes: np.ndarray
    weights: np.ndarray
    point: np.ndarray
    domain: BallDomain
    params: FracParams
    order: int
    r_inner: float

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))


_DEFAULT_VOLUME_ORDER = {1: 64, 2: 96, 3: 16}

_INNER_FRACTION = 0.9  # polar core stops at this fraction of dist(x, boundary)
_CORE_FRACTION = 0.25  # Gauss-Jacobi core inside the polar zone
_BOUNDARY_FRACTION = 0.4  # share of the outer span given to the boundary panel


def _ray_exit(d: BallDomain, x: np.ndarray, dirs: np.ndarray) -> np.ndarray:
    """Distance from interior x to the sphere along each direction."""
    p = x - d.center
    b = dirs @ p
    disc = b**2 + d.radius**2 - float(p @ p)
    return -b + np.sqrt(disc)


def _aligned_edges(lo: np.ndarray, hi: np.ndarray, cross: np.ndarray, n_base: int) -> np.ndarray:
    """Per-ray panel edges on [lo_i, hi_i]: a uniform base grid plus whatever
    crossing radii fall inside, padded by splitting the widest gap until every
    ray carries the same edge count (keeps the node arrays rectangular)."""
    n_rays = cross.shape[0]
    n_edge = n_base + 1 + cross.shape[1]
    out = np.empty((n_rays, n_edge))
    for i in range(n_rays):
        e = np.linspace(lo[i], hi[i], n_base + 1)
        ci = cross[i]
        ci = ci[(ci > lo[i]) & (ci < hi[i])]
        e = np.unique(np.concatenate([e, ci]))
        while e.size < n_edge:
            j = int(np.argmax(np.diff(e)))
            e = np.insert(e, j + 1, 0.5 * (e[j] + e[j + 1]))
        out[i] = e
    return out


def volume_rule_singular(
    d: BallDomain, x, p: FracParams, order: int | None = None, breaks: tuple | None = None
) -> SingularVolumeQuadrature:
    """Volume rule on the ball adapted to an |x-y|^(2s-dim) singularity at x.

    The returned plain weights integrate kernel-type integrands (singular
    factor times smooth, vanishing like dist^s at the boundary) to roughly
    1e-7 relative at default order; they remain consistent for smooth
    integrands. `breaks` is an optional (center, radii) pair naming spheres
    around `center` where the integrand has fine radial structure; panel
    edges then align with the per-ray crossings of those spheres.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    delta = signed_distance(d, x)
    if delta <= 1e-12 * d.radius:
        raise DomainError("volume_rule_singular: singular point must be strictly inside")
    if order is None:
        order = _DEFAULT_VOLUME_ORDER[d.dim]
    if order < 4:
        raise QuadratureError(f"volume rule needs order >= 4, got {order}")

    s = p.s
    dirs, ang_w = sphere_rule(d.dim, order if d.dim > 1 else 2)
    n_dirs = dirs.shape[0]

    r_in = _INNER_FRACTION * delta
    r_core = _CORE_FRACTION * r_in

    if d.dim == 1:
        n_core = order
        n_shell = max(12, order // 3)
        n_outer = max(12, order // 3)
        n_bnd = max(16, order // 3)
        n_pan = 3
    elif d.dim == 2:
        n_core = max(20, order // 3)
        n_shell = max(16, order // 6)
        n_outer = max(14, order // 6)
        n_bnd = max(16, order // 6)
        n_pan = max(3, order // 16)
    else:
        n_core = max(16, order)
        n_shell = max(12, 3 * order // 4)
        n_outer = max(10, order // 2)
        n_bnd = max(12, 3 * order // 4)
        n_pan = max(3, order // 6)

    # per-ray crossing radii of the break spheres, NaN where a ray misses
    cross = np.empty((n_dirs, 0))
    if breaks is not None:
        bc = np.atleast_1d(np.asarray(breaks[0], dtype=float))
        radii_b = np.atleast_1d(np.asarray(breaks[1], dtype=float))
        xc = x - bc
        cc = float(xc @ xc)
        bb = dirs @ xc
        cols = []
        for rho in radii_b:
            disc = bb**2 - (cc - rho * rho)
            hit = disc > 0.0
            rt = np.sqrt(np.where(hit, disc, 0.0))
            cols.append(np.where(hit, -bb - rt, np.nan))
            cols.append(np.where(hit, -bb + rt, np.nan))
        cross = np.stack(cols, axis=1)

    rs, ws = [], []

    # Gauss-Jacobi core: weight r^(2s-1); plain weights carry r^(dim-2s) back.
    xi, wj = _jac(n_core, 2.0 * s - 1.0)
    r_c = r_core * (1.0 + xi) / 2.0
    w_c = (r_core / 2.0) ** (2.0 * s) * wj * r_c ** (p.dim - 2.0 * s)
    rs.append(np.broadcast_to(r_c, (n_dirs, n_core)))
    ws.append(np.broadcast_to(w_c, (n_dirs, n_core)))

    # smooth shell between the core and the polar radius
    if cross.shape[1]:
        sh_edges = _aligned_edges(np.full(n_dirs, r_core), np.full(n_dirs, r_in), cross, 2)
        r_sh, w_sh = _panel_nodes(sh_edges, n_shell)
        r_sh = r_sh.reshape(n_dirs, -1)
        w_sh = w_sh.reshape(n_dirs, -1) * r_sh ** (p.dim - 1)
        rs.append(r_sh)
        ws.append(w_sh)
    else:
        shell_edges = np.array([r_core, 0.5 * (r_core + r_in), r_in])
        r_sh, w_sh = _panel_nodes(shell_edges, n_shell)
        r_sh = r_sh.reshape(-1)
        w_sh = (w_sh.reshape(-1)) * r_sh ** (p.dim - 1)
        rs.append(np.broadcast_to(r_sh, (n_dirs, r_sh.size)))
        ws.append(np.broadcast_to(w_sh, (n_dirs, r_sh.size)))

    # smooth panels out to a per-direction split radius, then a Gauss-Jacobi
    # boundary panel carrying the (r_exit - r)^(s-1) weight: plainized, it is
    # exact for integrands behaving like dist^(s-1) or dist^s at the sphere.
    r_exit = _ray_exit(d, x, dirs)
    r_mid = r_in + (1.0 - _BOUNDARY_FRACTION) * (r_exit - r_in)
    if cross.shape[1]:
        edges = _aligned_edges(np.full(n_dirs, r_in), r_mid, cross, n_pan)
    else:
        frac = np.linspace(0.0, 1.0, n_pan + 1)
        edges = r_in + (r_mid - r_in)[:, None] * frac
    r_out, w_out = _panel_nodes(edges, n_outer)
    r_out = r_out.reshape(n_dirs, -1)
    w_out = w_out.reshape(n_dirs, -1) * r_out ** (p.dim - 1)
    rs.append(r_out)
    ws.append(w_out)

    xi_b, wj_b = _jac(n_bnd, s - 1.0)
    half = 0.5 * (r_exit - r_mid)
    tau = half[:, None] * (1.0 + xi_b)
    r_b = r_exit[:, None] - tau
    w_b = half[:, None] ** s * wj_b * tau ** (1.0 - s) * r_b ** (p.dim - 1)
    rs.append(r_b)
    ws.append(w_b)

    r_all = np.concatenate(rs, axis=1)
    w_all = np.concatenate(ws, axis=1) * ang_w[:, None]
    nodes = x + r_all[..., None] * dirs[:, None, :]

    return SingularVolumeQuadrature(
        nodes.reshape(-1, d.dim),
        w_all.reshape(-1),
        x,
        d,
        p,
        order,
        r_in,
    )


def reference_kernel_integral(d: BallDomain, x, p: FracParams, n_ang: int = 512) -> float:
    """Integral of |x-y|^(2s-dim) over the ball, by exact radial reduction.

    Used as the independent reference for volume_rule_singular: the radial
    integral is r_exit(omega)^(2s) / (2s) exactly, so only a smooth angular
    integral remains.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if signed_distance(d, x) <= 0:
        raise DomainError("reference point must be inside the ball")
    dirs, ang_w = sphere_rule(d.dim, n_ang if d.dim > 1 else 2)
    r_exit = _ray_exit(d, x, dirs)
    return float(np.dot(ang_w, r_exit ** (2.0 * p.s)) / (2.0 * p.s))


# ---------------------------------------------------------------------------
# boundary-layer volume rule


def volume_rule_boundary_layer(
    d: BallDomain, p: FracParams, order: int | None = None, layer_fraction: float = 0.35
) -> SingularVolumeQuadrature:
    """Volume rule adapted to integrands blowing up like dist^(s-1) at the sphere.

    Polar around the center; a Gauss-Jacobi layer carries the (R-r)^(s-1)
    weight so trace-type volume integrals converge spectrally.
    """
    if order is None:
        order = _DEFAULT_VOLUME_ORDER[d.dim]
    s = p.s
    R = d.radius
    t_layer = layer_fraction * R
    dirs, ang_w = sphere_rule(d.dim, order if d.dim > 1 else 2)

    n_core = max(16, order // 2) if d.dim == 1 else 16
    n_lay = max(24, order // 2) if d.dim == 1 else 20

    core_edges = np.linspace(0.0, R - t_layer, 4)
    r_core, w_core = _panel_nodes(core_edges, n_core)
    r_core = r_core.reshape(-1)
    w_core = w_core.reshape(-1) * r_core ** (p.dim - 1)

    # layer: tau = R - r with weight tau^(s-1); plain weights restore tau^(1-s)
    xi, wj = _jac(n_lay, s - 1.0)
    tau = t_layer * (1.0 + xi) / 2.0
    r_lay = R - tau
    w_lay = (t_layer / 2.0) ** s * wj * tau ** (1.0 - s) * r_lay ** (p.dim - 1)

    r_all = np.concatenate([r_core, r_lay])
    w_rad = np.concatenate([w_core, w_lay])

    nodes = d.center + r_all[None, :, None] * dirs[:, None, :]
    weights = (ang_w[:, None] * w_rad[None, :]).reshape(-1)
    return SingularVolumeQuadrature(
        nodes.reshape(-1, d.dim),
        weights,
        d.center,
        d,
        p,
        order,
        R - t_layer,
    )
