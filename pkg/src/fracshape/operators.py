"""Pointwise fractional Laplacian, Green potentials, and integral identities.

Everything here runs on balls, where the Green function is in closed form, so
each operator has at least one independent route to check it against: closed
solutions for constant and affine sources, an exact far-field formula for
(-Delta)^s of a compactly supported bump, and the representation, duality,
gradient and frozen-weight identities tying them together.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core_math import FracParams, c_ns, gamma_fn, sphere_area
from .errors import DomainError, QuadratureError
from .geometry import (
    BallDomain,
    VectorField,
    _jac,
    _panel_nodes,
    boundary_rule,
    signed_distance,
    sphere_rule,
    volume_rule_boundary_layer,
    volume_rule_singular,
)
from .green_ball import GreenBall


# ---------------------------------------------------------------------------
# test fields: plateau bumps and affine sources


def bump_profile(t):
    """C-infinity plateau: 1 on [0, 1], 0 on [2, inf), monotone between."""
    t = np.asarray(t, dtype=float)
    out = np.zeros(t.shape)
    out[t <= 1.0] = 1.0
    mid = (t > 1.0) & (t < 2.0)
    tm = t[mid]
    a = np.exp(-1.0 / (2.0 - tm))
    b = np.exp(-1.0 / (tm - 1.0))
    out[mid] = a / (a + b)
    return out


@dataclass(frozen=True, eq=False)
class SmoothBump:
    """Smooth compactly supported plateau bump.

    Equals `amplitude` on the ball of radius `width` around `center` and
    vanishes identically outside radius sqrt(2) * width.
    """

    center: np.ndarray
    width: float
    amplitude: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "center", np.atleast_1d(np.asarray(self.center, dtype=float)))
        if self.width <= 0:
            raise DomainError(f"bump width must be positive, got {self.width}")

    @property
    def dim(self) -> int:
        return self.center.size

    @property
    def support_radius(self) -> float:
        return float(np.sqrt(2.0) * self.width)

    def __call__(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        squeeze = pts.ndim == 1
        pts = np.atleast_2d(pts)
        t = np.sum((pts - self.center) ** 2, axis=-1) / self.width**2
        out = self.amplitude * bump_profile(t)
        return float(out[0]) if squeeze else out


@dataclass(frozen=True, eq=False)
class SourceTerm:
    """Affine right-hand side h(y) = offset + slope . y with exact gradient."""

    offset: float
    slope: np.ndarray
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "slope", np.atleast_1d(np.asarray(self.slope, dtype=float)))

    @classmethod
    def constant(cls, value: float, dim: int) -> "SourceTerm":
        return cls(float(value), np.zeros(dim), label=f"h={value:g}")

    @classmethod
    def affine(cls, offset: float, slope, label: str = "") -> "SourceTerm":
        slope = np.atleast_1d(np.asarray(slope, dtype=float))
        return cls(float(offset), slope, label=label or "affine")

    @property
    def dim(self) -> int:
        return self.slope.size

    @property
    def is_constant(self) -> bool:
        return bool(np.all(self.slope == 0.0))

    @property
    def lipschitz(self) -> float:
        return float(np.linalg.norm(self.slope))

    def __call__(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        squeeze = pts.ndim == 1
        out = self.offset + np.atleast_2d(pts) @ self.slope
        return float(out[0]) if squeeze else out

    def gradient(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return np.broadcast_to(self.slope, pts.shape).copy()


def _source_values(h, pts) -> np.ndarray:
    vals = h(pts)
    return np.asarray(vals, dtype=float)


# ---------------------------------------------------------------------------
# closed solutions on balls


def torsion_constant(p: FracParams) -> float:
    """Coefficient C with (-Delta)^s [C (1-|x|^2)_+^s] = 1 on the unit ball."""
    n, s = p.dim, p.s
    return 4.0 ** (-s) * gamma_fn(n / 2.0) / (gamma_fn(n / 2.0 + s) * gamma_fn(1.0 + s))


def torsion_value(d: BallDomain, x, p: FracParams):
    """Solution of (-Delta)^s u = 1 with zero exterior data: C (R^2-|x-c|^2)^s."""
    x = np.asarray(x, dtype=float)
    squeeze = x.ndim == 1
    q2 = np.sum((np.atleast_2d(x) - d.center) ** 2, axis=-1)
    a = np.maximum(d.radius**2 - q2, 0.0)
    out = torsion_constant(p) * a**p.s
    return float(out[0]) if squeeze else out


def torsion_gradient(d: BallDomain, x, p: FracParams) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    q2 = float(np.sum((x - d.center) ** 2))
    a = d.radius**2 - q2
    if a <= 0:
        raise DomainError("torsion_gradient needs an interior point")
    return -2.0 * p.s * torsion_constant(p) * a ** (p.s - 1.0) * (x - d.center)


def torsion_trace(d: BallDomain, p: FracParams) -> float:
    """Boundary trace u / dist^s of the torsion solution: constant C (2R)^s."""
    return torsion_constant(p) * (2.0 * d.radius) ** p.s


def moment_solution_coef(p: FracParams) -> float:
    """Coefficient k with (-Delta)^s [k (1-|x|^2)_+^s x_i] = x_i on the unit ball."""
    n, s = p.dim, p.s
    mu = 4.0**s * gamma_fn(1.0 + s) * gamma_fn((n + 2.0 * s) / 2.0 + 1.0) / gamma_fn(n / 2.0 + 1.0)
    return 1.0 / mu


def affine_source_solution(d: BallDomain, h: SourceTerm, x, p: FracParams):
    """Closed solution for an affine source on any ball.

    Splitting h(y) = (offset + slope.c) + slope.(y-c) gives a torsion part
    plus first-moment parts, each explicit after scaling to the unit ball.
    """
    x = np.asarray(x, dtype=float)
    squeeze = x.ndim == 1
    xh = (np.atleast_2d(x) - d.center) / d.radius
    amp = np.maximum(1.0 - np.sum(xh**2, axis=-1), 0.0)
    c0 = h.offset + float(h.slope @ d.center)
    out = c0 * torsion_constant(p) * (d.radius**2 - d.radius**2 * np.sum(xh**2, axis=-1)) ** p.s
    out = np.where(amp > 0, out, 0.0)
    mom = moment_solution_coef(p) * d.radius ** (2.0 * p.s + 1.0) * amp**p.s * (xh @ h.slope)
    out = out + mom
    return float(out[0]) if squeeze else out


def affine_source_gradient(d: BallDomain, h: SourceTerm, x, p: FracParams) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    xh = (x - d.center) / d.radius
    amp = 1.0 - float(xh @ xh)
    if amp <= 0:
        raise DomainError("affine_source_gradient needs an interior point")
    s = p.s
    c0 = h.offset + float(h.slope @ d.center)
    grad = c0 * torsion_constant(p) * d.radius ** (2 * s) * s * amp ** (s - 1.0) * (-2.0 * xh)
    k = moment_solution_coef(p) * d.radius ** (2.0 * s + 1.0)
    grad = grad + k * (
        s * amp ** (s - 1.0) * (-2.0 * xh) * float(xh @ h.slope) + amp**s * h.slope
    )
    return grad / d.radius


def affine_source_trace(d: BallDomain, h: SourceTerm, z, p: FracParams):
    """Boundary trace u / dist^s of the affine-source solution.

    (R^2-|y-c|^2)^s / dist^s tends to (2R)^s at the sphere, so both the
    torsion and the first-moment parts have explicit traces.
    """
    z2 = np.atleast_2d(np.asarray(z, dtype=float))
    zh = (z2 - d.center) / d.radius
    c0 = h.offset + float(h.slope @ d.center)
    base = (2.0 * d.radius) ** p.s
    out = base * (torsion_constant(p) * c0 + moment_solution_coef(p) * d.radius * (zh @ h.slope))
    return float(out[0]) if np.asarray(z).ndim == 1 else out


# ---------------------------------------------------------------------------
# pointwise fractional Laplacian


_PV_ANGULAR = {1: 2, 2: 64, 3: 24}
_PV_RADIAL = 40
_FAR_SPLIT = 0.25  # distance to the support beyond which the exact far form is used


def _support_grid(bump: SmoothBump, p: FracParams, n_rad: int = 14, n_ang: int | None = None):
    """Polar quadrature over the support ball of a bump, with values attached.

    Radial edges sit on the profile break radii, so the rule is aligned with
    the bump's smoothness structure in every dimension.
    """
    if n_ang is None:
        n_ang = {1: 2, 2: 24, 3: 12}[p.dim]
    dirs, aw = sphere_rule(p.dim, n_ang)
    sig, sr = bump.width, bump.support_radius
    edges = np.array([0.0, 0.5 * sig, sig, 0.5 * (sig + sr), sr])
    r, w = _panel_nodes(edges, n_rad)
    r = r.reshape(-1)
    w = w.reshape(-1) * r ** (p.dim - 1)
    nodes = bump.center + r[None, :, None] * dirs[:, None, :]
    nodes = nodes.reshape(-1, p.dim)
    weights = (aw[:, None] * w).reshape(-1)
    return nodes, weights, bump(nodes)


def _aligned_panels(lo: float, hi: float, features, scale: float, n: int = 12, power: float = 0.0):
    """Legendre panels on [lo, hi] with edges pinned to the given radii.

    Gaps are subdivided to at most 0.4 * scale; `power` folds a factor r^power
    into the weights.
    """
    edges = {lo, hi}
    for f in features:
        if lo + 1e-12 < f < hi - 1e-12:
            edges.add(float(f))
    edges = sorted(edges)
    full = []
    for a, b in zip(edges[:-1], edges[1:]):
        k = max(1, int(np.ceil((b - a) / (0.4 * scale))))
        full.extend(np.linspace(a, b, k + 1)[:-1].tolist())
    full.append(hi)
    r, w = _panel_nodes(np.array(full), n)
    r = r.reshape(-1)
    w = w.reshape(-1)
    if power != 0.0:
        w = w * r**power
    return r, w


def _feature_radii_1d(bump: SmoothBump, x: float) -> np.ndarray:
    """Radii r > 0 where w(x+r) or w(x-r) crosses a profile break (dim 1)."""
    dd = x - float(bump.center[0])
    out = []
    for rho in (bump.width, bump.support_radius):
        out.extend([rho - dd, -rho - dd, dd - rho, dd + rho])
    return np.array(sorted(r for r in out if r > 1e-12))


def frac_laplacian_far(bump: SmoothBump, xs, p: FracParams, grid=None) -> np.ndarray:
    """(-Delta)^s of a bump at points outside its support, by direct integral.

    There the principal value drops and (-Delta)^s w (x) equals
    -c_{N,s} integral of w(y) |x-y|^(-dim-2s) dy over the support.
    """
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    if grid is None:
        grid = _support_grid(bump, p)
    nodes, weights, vals = grid
    out = np.empty(xs.shape[0])
    chunk = max(1, int(2e6) // max(nodes.shape[0], 1))
    for i in range(0, xs.shape[0], chunk):
        block = xs[i : i + chunk]
        dist = np.linalg.norm(block[:, None, :] - nodes[None, :, :], axis=-1)
        out[i : i + chunk] = -(dist ** (-(p.dim + 2.0 * p.s))) @ (weights * vals)
    return c_ns(p) * out


def _support_grid_refined(bump: SmoothBump, p: FracParams, gap: float):
    """Support grid resolving a kernel that varies on scale `gap` at the rim."""
    sig, sr = bump.width, bump.support_radius
    n_ang = int(np.clip(10.0 * sr / gap, 16, 384 if p.dim == 2 else 24))
    if p.dim == 1:
        n_ang = 2
    dirs, aw = sphere_rule(p.dim, n_ang)
    edges = {0.0, 0.5 * sig, sig, sr}
    w_edge = 0.5 * gap
    t = sr - w_edge
    while t > sig and w_edge < 0.3 * sig:
        edges.add(t)
        w_edge *= 2.0
        t -= w_edge
    r, w = _panel_nodes(np.array(sorted(edges)), 12)
    r = r.reshape(-1)
    w = w.reshape(-1) * r ** (p.dim - 1)
    nodes = bump.center + r[None, :, None] * dirs[:, None, :]
    nodes = nodes.reshape(-1, p.dim)
    weights = (aw[:, None] * w).reshape(-1)
    return nodes, weights, bump(nodes)


def frac_laplacian_pv_batch(
    bump: SmoothBump, xs, p: FracParams, *, near_radius: float = 1.0, order: int | None = None
) -> np.ndarray:
    """(-Delta)^s of a plateau bump at many points.

    Symmetrized second differences under a feature-aware radial rule near each
    point, panel quadrature over the annulus where the bump still contributes,
    and the exact far-field integral once the point clears the support. Points
    slightly outside the support also use the far integral, on a grid refined
    for the kernel scale set by their distance to the rim.
    """
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    if xs.shape[1] != p.dim:
        raise DomainError("point dimension mismatch")
    out = np.empty(xs.shape[0])
    gap = np.linalg.norm(xs - bump.center, axis=1) - bump.support_radius
    far = gap >= _FAR_SPLIT
    if np.any(far):
        out[far] = frac_laplacian_far(bump, xs[far], p)
    if p.dim > 1:
        # between the rim and the far split, bucket by rim distance and use
        # the exact outside integral on matched grids
        close = (gap > 0.0) & ~far
        lo = 1e-3 * bump.width
        g = np.maximum(gap, lo)
        for k in range(int(np.ceil(np.log2(_FAR_SPLIT / lo))) + 1):
            hi_k = _FAR_SPLIT / 2.0**k
            sel = close & (g <= hi_k) & (g > hi_k / 2.0)
            if np.any(sel):
                grid = _support_grid_refined(bump, p, hi_k / 2.0)
                out[sel] = frac_laplacian_far(bump, xs[sel], p, grid=grid)
        inner = ~far & ~close
    else:
        inner = ~far
    if np.any(inner):
        out[inner] = _pv_near_batch(bump, xs[inner], p, near_radius, order)
    return out


def _pv_radial_scheme(p, r0, scale, n_rad):
    """Radial nodes/weights for the second-difference integrand D(r)/r^2.

    The surface factor r^(dim-1) cancels r^(-dim) of the kernel, so radially
    the integrand is (D/r^2) r^(1-2s) in every dimension. A Gauss-Jacobi core
    carries the weight near 0; panels no wider than half the feature scale
    resolve the plateau onsets further out.
    """
    s = p.s
    rc = 0.1 * min(r0, scale)
    xi, wj = _jac(max(16, n_rad // 2), 1.0 - 2.0 * s)
    r_core = rc * (1.0 + xi) / 2.0
    w_core = (rc / 2.0) ** (2.0 - 2.0 * s) * wj
    n_pan = min(200, max(4, int(np.ceil((r0 - rc) / (0.2 * scale)))))
    edges = np.linspace(rc, r0, n_pan + 1)
    r_gl, w_gl = _panel_nodes(edges, 10)
    r_gl = r_gl.reshape(-1)
    w_gl = w_gl.reshape(-1) * r_gl ** (1.0 - 2.0 * s)
    return np.concatenate([r_core, r_gl]), np.concatenate([w_core, w_gl])


def _pv_near_single_1d(bump, x: float, p, r0, n_gl=12):
    """Single-point pv in dim 1 with panel edges pinned to the bump features.

    Without angular averaging a fixed radial grid can straddle two nearly
    coincident profile breaks; aligning the edges removes that failure mode.
    """
    s = p.s
    sig = bump.width
    feats = _feature_radii_1d(bump, x)
    r_hi = abs(x - float(bump.center[0])) + bump.support_radius
    first = float(feats[0]) if feats.size else sig
    rc = min(0.25 * r0, 0.5 * first, 0.1 * sig)
    xi, wj = _jac(24, 1.0 - 2.0 * s)
    r_core = rc * (1.0 + xi) / 2.0
    w_core = (rc / 2.0) ** (2.0 - 2.0 * s) * wj
    r_pan, w_pan = _aligned_panels(rc, r0, feats, sig, n=n_gl, power=1.0 - 2.0 * s)
    r_n = np.concatenate([r_core, r_pan])
    w_n = np.concatenate([w_core, w_pan])

    w0 = bump(np.array([[x]]))[0]
    dh = (2.0 * w0 - bump(np.atleast_2d(x + r_n).T) - bump(np.atleast_2d(x - r_n).T)) / r_n**2
    near = 2.0 * float(w_n @ dh)

    far_b = 0.0
    if r_hi > r0:
        r_f, w_f = _aligned_panels(r0, r_hi, feats, sig, n=n_gl, power=-1.0 - 2.0 * s)
        vals = bump(np.atleast_2d(x + r_f).T) + bump(np.atleast_2d(x - r_f).T)
        far_b = 2.0 * float(w_f @ vals)
    tail0 = sphere_area(1, 1.0) * r0 ** (-2.0 * s) / (2.0 * s)
    return 0.5 * c_ns(p) * (near + 2.0 * w0 * tail0 - far_b)


def _pv_near_batch(bump, xs, p, r0, order):
    n, s = p.dim, p.s
    if n == 1:
        return np.array([_pv_near_single_1d(bump, float(q[0]), p, r0) for q in xs])
    n_rad = order or _PV_RADIAL
    dirs, aw = sphere_rule(n, _PV_ANGULAR[n] if order is None else max(order, 8))
    r_near, w_near = _pv_radial_scheme(p, r0, bump.width, n_rad)

    r_max = float(np.max(np.linalg.norm(xs - bump.center, axis=1))) + bump.support_radius
    width = max(bump.width * 0.25, (r_max - r0) / 160.0)
    n_pan = max(4, int(np.ceil((r_max - r0) / width)))
    edges = np.linspace(r0, max(r_max, r0 * 1.5), n_pan + 1)
    r_far, w_far = _panel_nodes(edges, 12)
    r_far = r_far.reshape(-1)
    w_far = w_far.reshape(-1) * r_far ** (-1.0 - 2.0 * s)

    w0 = bump(xs)
    tail0 = sphere_area(n, 1.0) * r0 ** (-2.0 * s) / (2.0 * s)

    out = np.empty(xs.shape[0])
    n_dirs = dirs.shape[0]
    chunk = max(1, int(4e6) // (n_dirs * (r_near.size + r_far.size)))
    offs_near = r_near[None, :, None] * dirs[:, None, :]  # (nd, K, N)
    offs_far = r_far[None, :, None] * dirs[:, None, :]
    for i in range(0, xs.shape[0], chunk):
        blk = xs[i : i + chunk]  # (m, N)
        pp = blk[:, None, None, :] + offs_near[None]
        pm = blk[:, None, None, :] - offs_near[None]
        wp = bump(pp.reshape(-1, n)).reshape(pp.shape[:3])
        wm = bump(pm.reshape(-1, n)).reshape(pp.shape[:3])
        d2 = (2.0 * w0[i : i + chunk, None, None] - wp - wm) / r_near**2
        near = np.einsum("d,k,mdk->m", aw, w_near, d2)
        fp = blk[:, None, None, :] + offs_far[None]
        fm = blk[:, None, None, :] - offs_far[None]
        vp = bump(fp.reshape(-1, n)).reshape(fp.shape[:3])
        vm = bump(fm.reshape(-1, n)).reshape(fp.shape[:3])
        far_b = np.einsum("d,k,mdk->m", aw, w_far, vp + vm)
        out[i : i + chunk] = near + 2.0 * w0[i : i + chunk] * tail0 - far_b
    return 0.5 * c_ns(p) * out


def frac_laplacian_pv(
    w,
    x,
    p: FracParams,
    *,
    near_radius: float = 1.0,
    support: tuple | None = None,
    order: int | None = None,
    radial_breaks: tuple = (),
) -> float:
    """(-Delta)^s w at a single point, for smooth w of known support.

    `support` is a (center, radius) ball containing supp w; bumps carry their
    own. `radial_breaks` lists radii around x where w has limited smoothness,
    and the far-field panels are refined toward them.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if isinstance(w, SmoothBump) and not radial_breaks:
        return float(frac_laplacian_pv_batch(w, x[None, :], p, near_radius=near_radius, order=order)[0])
    if support is None:
        if isinstance(w, SmoothBump):
            support = (w.center, w.support_radius)
        else:
            raise DomainError("frac_laplacian_pv needs a support ball for generic w")
    sc = np.atleast_1d(np.asarray(support[0], dtype=float))
    s_rad = float(support[1])
    n, s = p.dim, p.s
    n_rad = order or _PV_RADIAL
    dirs, aw = sphere_rule(n, _PV_ANGULAR[n] if order is None else max(order, 8))

    r0 = near_radius
    scale = w.width if isinstance(w, SmoothBump) else 0.25 * s_rad
    r_near, w_near = _pv_radial_scheme(p, r0, scale, n_rad)

    r_max = float(np.linalg.norm(x - sc)) + s_rad
    base = np.linspace(r0, max(r_max, 1.5 * r0), max(6, int(np.ceil((r_max - r0) / 0.25)) + 1))
    edges = set(base.tolist())
    for brk in radial_breaks:
        if r0 < brk < r_max:
            for k in range(1, 7):
                step = 0.2**k * 0.25
                edges.add(min(max(brk - step, r0), r_max))
                edges.add(min(max(brk + step, r0), r_max))
            edges.add(brk)
    edges = np.array(sorted(edges))
    r_far, w_far = _panel_nodes(edges, 12)
    r_far = r_far.reshape(-1)
    w_far = w_far.reshape(-1) * r_far ** (-1.0 - 2.0 * s)

    def ev(pts):
        return np.asarray(w(pts), dtype=float)

    w0 = float(ev(x[None, :])[0])
    near = 0.0
    far_b = 0.0
    for k, om in enumerate(dirs):
        pp = x + r_near[:, None] * om
        pm = x - r_near[:, None] * om
        d2 = (2.0 * w0 - ev(pp) - ev(pm)) / r_near**2
        near += aw[k] * float(w_near @ d2)
        fp = x + r_far[:, None] * om
        fm = x - r_far[:, None] * om
        far_b += aw[k] * float(w_far @ (ev(fp) + ev(fm)))
    tail0 = sphere_area(n, 1.0) * r0 ** (-2.0 * s) / (2.0 * s)
    return 0.5 * c_ns(p) * (near + 2.0 * w0 * tail0 - far_b)


# ---------------------------------------------------------------------------
# Green potentials


def solve_dirichlet(d: BallDomain, h, x, p: FracParams, order: int | None = None) -> float:
    """u(x) = integral of G(x, y) h(y) dy: the solution of (-Delta)^s u = h."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    rule = volume_rule_singular(d, x, p, order)
    g = GreenBall(d, p)
    hv = _source_values(h, rule.nodes)
    return float(np.sum(rule.weights * g.green(x, rule.nodes) * hv))


def potential_gradient(d: BallDomain, h, x, p: FracParams, order: int | None = None) -> np.ndarray:
    """Gradient of the Green potential at x.

    The antipodally paired volume rule cancels the odd leading singularity of
    grad_x G, so the principal value converges without explicit subtraction.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    rule = volume_rule_singular(d, x, p, order)
    g = GreenBall(d, p)
    hv = _source_values(h, rule.nodes)
    grads = g.green_grad(x, rule.nodes, which="first")
    return (rule.weights * hv) @ grads


# ---------------------------------------------------------------------------
# integral identities


def representation_check(
    d: BallDomain, bump: SmoothBump, x, p: FracParams, order: int | None = None, pv_order: int | None = None
) -> tuple[float, float]:
    """Green representation: integral G(x, .) (-Delta)^s w should give w(x).

    Returns (reconstructed value, w(x)). The two routes are independent: the
    left side never sees w directly, only its fractional Laplacian.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    margin = np.linalg.norm(bump.center - d.center) + bump.support_radius
    if margin >= d.radius * (1.0 - 1e-9):
        raise DomainError("bump support must lie strictly inside the ball")
    # the fractional Laplacian of the bump rings sharply on its two feature
    # spheres; align the radial panels with them
    rule = volume_rule_singular(d, x, p, order, breaks=(bump.center, (bump.width, bump.support_radius)))
    g = GreenBall(d, p)
    lap = frac_laplacian_pv_batch(bump, rule.nodes, p, order=pv_order)
    value = float(np.sum(rule.weights * g.green(x, rule.nodes) * lap))
    return value, float(bump(x[None, :])[0])


def duality_check(
    d: BallDomain,
    f,
    h,
    p: FracParams,
    *,
    boundary_order: int | None = None,
    volume_order: int | None = None,
    solve_order: int | None = None,
    trace_eps0: float | None = None,
) -> tuple[float, float]:
    """Pairing identity between a boundary density and a volume source.

    lhs integrates h against the boundary-layer potential of f built from the
    Green trace kernel; rhs integrates f against the numerically extrapolated
    trace of the Green potential of h. `f` takes (nodes, normals).
    """
    brule = boundary_rule(d, boundary_order)
    g = GreenBall(d, p)
    fvals = np.asarray(f(brule.nodes, brule.normals), dtype=float)

    vol = volume_rule_boundary_layer(d, p, volume_order)
    inner = g.trace_potential(vol.nodes, brule, fvals)
    hv = _source_values(h, vol.nodes)
    lhs = float(np.sum(vol.weights * hv * inner))

    def u_of(pts):
        return np.array([solve_dirichlet(d, h, q, p, solve_order) for q in np.atleast_2d(pts)])

    traces = np.array(
        [g.trace_numeric(u_of, z, eps0=trace_eps0) for z in brule.nodes]
    )
    rhs = float(np.sum(brule.weights * fvals * traces))
    return lhs, rhs


def gradient_identity_check(
    d: BallDomain,
    h: SourceTerm,
    field: VectorField,
    x,
    p: FracParams,
    *,
    volume_order: int | None = None,
    fd_step: float = 0.02,
) -> tuple[float, float]:
    """Transport identity: the volume pairing against div(h Y) plus the kernel
    gradient term reproduces grad u(x) . Y(x).

    The grad_y G factor is restructured as grad_y G . (Y(y) - Y(x)) plus the
    bounded combination (grad_x + grad_y) G . Y(x), so no principal value is
    needed. The right side is an independent directional finite difference of
    the potential.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    rule = volume_rule_singular(d, x, p, volume_order)
    g = GreenBall(d, p)
    nodes = rule.nodes
    hv = _source_values(h, nodes)
    gv = g.green(x, nodes)
    yn = field(nodes)
    yx = field(np.atleast_2d(x))[0]
    div_h_y = np.sum(h.gradient(nodes) * yn, axis=1) + hv * field.divergence(nodes)
    term1 = float(np.sum(rule.weights * gv * div_h_y))
    g2 = g.green_grad(x, nodes, which="second")
    gs = g.green_grad_sum(x, nodes)
    term2 = float(
        np.sum(rule.weights * hv * (np.sum(g2 * (yn - yx), axis=1) + gs @ yx))
    )
    lhs = term1 + term2

    vnorm = float(np.linalg.norm(yx))
    if vnorm < 1e-14:
        return lhs, 0.0
    e0 = fd_step * d.radius / vnorm
    margin = signed_distance(d, x) / (2.0 * vnorm)
    e0 = min(e0, margin / 2.0)

    def deriv(e):
        up = solve_dirichlet(d, h, x + e * yx, p, volume_order)
        um = solve_dirichlet(d, h, x - e * yx, p, volume_order)
        return (up - um) / (2.0 * e)

    d1, d2 = deriv(e0), deriv(e0 / 2.0)
    rhs = (4.0 * d2 - d1) / 3.0
    return lhs, rhs

# ---------------------------------------------------------------------------
# frozen-weight far-field identity


def _singular_aligned_rule(power, hi, pins, scale, n_core, n_gl=12):
    """Rule for int_0^hi f(r) r^power dr with f smooth away from the pins.

    A Gauss-Jacobi core carries the power weight up to half the first pin,
    aligned Legendre panels (power folded into the weights) do the rest.
    """
    pos = sorted(float(q) for q in pins if 1e-12 < q < hi)
    first = pos[0] if pos else hi
    rc = 0.5 * min(first, scale, hi)
    xi, wj = _jac(n_core, power)
    r_core = rc * (1.0 + xi) / 2.0
    w_core = (rc / 2.0) ** (1.0 + power) * wj
    r_pan, w_pan = _aligned_panels(rc, hi, np.array(pos), scale, n=n_gl, power=power)
    return np.concatenate([r_core, r_pan]), np.concatenate([w_core, w_pan])


def _fw_u_pins(dd, sig, sr):
    """Radii where the shifted-bump second difference can change character."""
    base = [abs(dd - sr), abs(dd - sig), dd, dd + sig, dd + sr, sig, sr]
    out = set()
    for a in base:
        for b in (0.0, sig, sr, 2.0 * sig, 2.0 * sr, sig + sr):
            for v in (a + b, abs(a - b)):
                if v > 1e-9:
                    out.add(float(v))
    return sorted(out)


def _support_rule_1d(bump: SmoothBump, n_gl=12):
    c = float(bump.center[0])
    sig, sr = bump.width, bump.support_radius
    r, w = _aligned_panels(c - sr, c + sr, np.array([c - sig, c + sig]), sig, n=n_gl)
    return r, w * bump(r[:, None])


def _e_values_1d(bump: SmoothBump, us, p: FracParams, n_core, n_gl=12):
    """E(u) = int |m|^(2s-1) [2w(m) - w(m+u) - w(m-u)] dm, one u at a time.

    The kernel weight rides a Jacobi core at m = 0 and the panel edges track
    both the static profile breaks and the ones shifted by +-u, which is what
    keeps small-width bumps resolved.
    """
    s = p.s
    c = float(bump.center[0])
    sig, sr = bump.width, bump.support_radius
    breaks = (c - sr, c - sig, c + sig, c + sr)
    out = np.empty(len(us))
    for i, u in enumerate(us):
        pins = {b + sh for b in breaks for sh in (0.0, u, -u)}
        hi = abs(c) + sr + u
        nodes, wts = [], []
        for sgn in (1.0, -1.0):
            r, w = _singular_aligned_rule(
                2.0 * s - 1.0, hi, [sgn * q for q in pins], sig, n_core, n_gl
            )
            nodes.append(sgn * r)
            wts.append(w)
        m = np.concatenate(nodes)[:, None]
        wt = np.concatenate(wts)
        f = 2.0 * bump(m) - bump(m + u) - bump(m - u)
        out[i] = float(wt @ f)
    return out


_FW_ANGULAR = {1: 2, 2: 32, 3: 6}
_FW_INNER_ANGULAR = {2: 24, 3: 8}


def frozen_weight_identity(
    bump: SmoothBump,
    field: VectorField,
    x,
    p: FracParams,
    *,
    angular_order: int | None = None,
    radial_order: int = 20,
    pv_order: int | None = None,
) -> tuple[float, float]:
    """Far-field identity for the frozen deformation weight, based at x.

    lhs integrates second differences of w against the kernel |m - x|^(2s-dim)
    and the frozen direction weight of the field; rhs is (dim - 2s) times the
    quadratic direction moment of (-Delta)^s w against the same kernel. The
    two must agree; both are returned.

    The second-difference reduction collapses the double integral to one
    radial profile per direction, so the whole check is deterministic nested
    quadrature in every dimension.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    n, s = p.dim, p.s
    bump = SmoothBump(bump.center - x, bump.width, bump.amplitude)
    dy = field.matrix
    tr_dy = float(np.trace(dy))
    sig, sr = bump.width, bump.support_radius
    dd = float(np.linalg.norm(bump.center))
    ext0 = dd + sr
    u_switch = ext0 + _FAR_SPLIT
    u_far = 2.0 * ext0 + 2.0
    r_g = ext0 + 1.5

    if n == 1:
        u_pins = _fw_u_pins(dd, sig, sr)
        n_gl_u = 12
    else:
        # the u-integrand is smooth, so a pruned pin set keeps the panel
        # count (and with it the tensor-grid cost) manageable
        u_pins = sorted(
            q
            for q in {sig, sr, 2.0 * sig, 2.0 * sr, sig + sr, abs(dd - sig), dd + sig, abs(dd - sr), dd + sr}
            if q > 1e-9
        )
        n_gl_u = 10
    u_c0 = 0.5 * min(u_pins[0] if u_pins else u_switch, 0.4 * sig)
    xi_a, wj_a = _jac(radial_order, 1.0 - 2.0 * s)
    u_a = u_c0 * (1.0 + xi_a) / 2.0
    w_a = (u_c0 / 2.0) ** (2.0 - 2.0 * s) * wj_a
    u_b, w_b = _aligned_panels(
        u_c0, u_switch, np.array(u_pins), sig, n=n_gl_u, power=-1.0 - 2.0 * s
    )

    edges_c = np.geomspace(u_switch, u_far, 4)
    u_c, w_c = _panel_nodes(edges_c, 12)
    u_c = u_c.reshape(-1)
    w_c = w_c.reshape(-1) * u_c ** (-1.0 - 2.0 * s)

    xg, wg = np.polynomial.legendre.leggauss(12)
    tau_d = (1.0 / u_far) * (1.0 + xg) / 2.0
    w_d = (1.0 / u_far) / 2.0 * wg

    if n == 1:
        c1 = float(bump.center[0])
        sup_r, sup_wv = _support_rule_1d(bump)
        # the kernel weight can be singular inside the support, so A_w gets
        # its own origin-aligned rule rather than the plain support rule
        breaks = (c1 - sr, c1 - sig, c1 + sig, c1 + sr)
        a_w = 0.0
        for sgn in (1.0, -1.0):
            r0, w0 = _singular_aligned_rule(
                2.0 * s - 1.0, dd + sr, [sgn * b for b in breaks], sig, 20
            )
            a_w += float(w0 @ bump((sgn * r0)[:, None]))

        e_a = _e_values_1d(bump, u_a, p, radial_order)
        e_b = _e_values_1d(bump, u_b, p, radial_order)
        j_ab = float(w_a @ (e_a / u_a**2)) + float(w_b @ e_b)

        q_c = np.abs(sup_r[None, :] - u_c[:, None]) ** (2.0 * s - 1.0) @ sup_wv
        q_cm = np.abs(sup_r[None, :] + u_c[:, None]) ** (2.0 * s - 1.0) @ sup_wv
        j_c = float(w_c @ (2.0 * a_w - q_c - q_cm))

        psi = (
            np.abs(sup_r[None, :] * tau_d[:, None] - 1.0) ** (2.0 * s - 1.0)
            + np.abs(sup_r[None, :] * tau_d[:, None] + 1.0) ** (2.0 * s - 1.0)
        ) @ sup_wv
        j_d = 2.0 * a_w * u_far ** (-2.0 * s) / (2.0 * s) - float(w_d @ psi)

        # both directions carry the same profile and the same quadratic weight
        omega_w = 0.5 * c_ns(p) * (2.0 * tr_dy - (1.0 + 2.0 * s) * float(dy[0, 0]))
        lhs = 2.0 * omega_w * (j_ab + j_c + j_d)

        far_grid = _support_grid(bump, p)
        rhs = 0.0
        for om in (1.0, -1.0):
            pins_g = [om * c1 + v for v in (-sr, -sig, sig, sr)]
            r_r, w_r = _singular_aligned_rule(2.0 * s - 1.0, r_g, pins_g, sig, 16)
            g_near = frac_laplacian_pv_batch(
                bump, (om * r_r)[:, None], p, order=pv_order
            )
            tau_rc = (1.0 / r_g) * (1.0 + xg) / 2.0
            w_rc = (1.0 / r_g) / 2.0 * wg
            g_tail = frac_laplacian_far(bump, (om / tau_rc)[:, None], p, grid=far_grid)
            j = float(w_r @ g_near) + float(w_rc @ (tau_rc ** (-1.0 - 2.0 * s) * g_tail))
            rhs += float(dy[0, 0]) * j
        rhs *= n - 2.0 * s
        return lhs, rhs

    n_ang = angular_order if angular_order is not None else _FW_ANGULAR[n]
    dirs, aw = sphere_rule(n, n_ang)

    feats_ext = [abs(dd - sig), dd + sig, abs(dd - sr), dd + sr]
    r_m, w_m_rad = _singular_aligned_rule(
        2.0 * s - 1.0, ext0 + u_switch, feats_ext, sig, 20, n_gl=10
    )
    dirs_m, aw_m = sphere_rule(n, _FW_INNER_ANGULAR[n])
    m_nodes = (r_m[None, :, None] * dirs_m[:, None, :]).reshape(-1, n)
    m_w = (aw_m[:, None] * w_m_rad).reshape(-1)
    w_m = bump(m_nodes)
    a_w = float(m_w @ w_m)

    sp_nodes, sp_w, sp_v = _support_grid(bump, p)
    sp_wv = sp_w * sp_v
    u_ab = np.concatenate([u_a, u_b])

    lhs = 0.0
    for k, om in enumerate(dirs):
        omega_w = 0.5 * c_ns(p) * (2.0 * tr_dy - (n + 2.0 * s) * float(om @ dy @ om))
        shift = u_ab[:, None] * om
        wp = bump((m_nodes[None, :, :] + shift[:, None, :]).reshape(-1, n)).reshape(
            u_ab.size, -1
        )
        wm = bump((m_nodes[None, :, :] - shift[:, None, :]).reshape(-1, n)).reshape(
            u_ab.size, -1
        )
        e_ab = (2.0 * w_m[None, :] - wp - wm) @ m_w
        j_ab = float(w_a @ (e_ab[: u_a.size] / u_a**2)) + float(w_b @ e_ab[u_a.size :])

        da = np.linalg.norm(sp_nodes[None, :, :] - u_c[:, None, None] * om, axis=-1)
        db = np.linalg.norm(sp_nodes[None, :, :] + u_c[:, None, None] * om, axis=-1)
        e_c = 2.0 * a_w - (da ** (2.0 * s - n) + db ** (2.0 * s - n)) @ sp_wv
        j_c = float(w_c @ e_c)

        pa = np.linalg.norm(sp_nodes[None, :, :] * tau_d[:, None, None] - om, axis=-1)
        pb = np.linalg.norm(sp_nodes[None, :, :] * tau_d[:, None, None] + om, axis=-1)
        psi = (pa ** (2.0 * s - n) + pb ** (2.0 * s - n)) @ sp_wv
        j_d = 2.0 * a_w * u_far ** (-2.0 * s) / (2.0 * s) - float(
            w_d @ (tau_d ** (n - 1.0) * psi)
        )
        lhs += aw[k] * omega_w * (j_ab + j_c + j_d)

    far_grid = (sp_nodes, sp_w, sp_v)
    r_r, w_r = _singular_aligned_rule(2.0 * s - 1.0, r_g, feats_ext, sig, 16)
    tau_rc = (1.0 / r_g) * (1.0 + xg) / 2.0
    w_rc = (1.0 / r_g) / 2.0 * wg
    pts_near = (r_r[None, :, None] * dirs[:, None, :]).reshape(-1, n)
    pts_tail = ((1.0 / tau_rc)[None, :, None] * dirs[:, None, :]).reshape(-1, n)
    g_near = frac_laplacian_pv_batch(bump, pts_near, p, order=pv_order).reshape(len(dirs), -1)
    g_tail = frac_laplacian_far(bump, pts_tail, p, grid=far_grid).reshape(len(dirs), -1)
    qf = np.einsum("ki,ij,kj->k", dirs, dy, dirs)
    j_dir = g_near @ w_r + g_tail @ (w_rc * tau_rc ** (-1.0 - 2.0 * s))
    rhs = float((n - 2.0 * s) * (aw * qf) @ j_dir)
    return lhs, rhs
