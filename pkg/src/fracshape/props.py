"""Seeded property sweeps for the kernel and Green-function estimates.

Existence-of-a-constant claims become regression tests here. Each sweep draws
a reproducible sample, evaluates the claimed inequality, and counts
violations against a constant that was measured once on a calibration run and
then frozen with a factor-2 margin. Zero violations is the contract; a
violation therefore signals a code regression, not sampling bad luck.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core_math import FracParams, c_ns
from .deformation_kernels import (
    deformation_kernel,
    kernel_difference_bound,
    pullback_kernel,
)
from .geometry import AffineFlow, BallDomain
from .green_ball import GreenBall

_T_MAX = 0.05  # flow-parameter range shared by every deformation sweep

# measured on the calibration sweep (seed 20260815, quadrupled sample counts)
# and doubled; keyed by claim, not by grid point, so one regression anywhere
# in the (dim, s) grid trips the suite
FROZEN = {
    "expansion": 0.25,
    "difference_low": 2.2,
    "difference_half_b25": 1.2,
    "difference_half_b50": 1.2,
    "difference_half_b75": 1.2,
    "difference_high": 1.0,
    # the s -> dim/2 edge of the grid pushes the fundamental-solution
    # coefficient, and with it the sharp constant, above 2
    "green_bound": 4.2,
    "grad_fd": 1e-5,
    "exact_laws": 1e-11,
}


@dataclass(frozen=True)
class SweepResult:
    """Outcome of one property sweep."""

    name: str
    samples: int
    violations: int
    observed: float
    bound: float

    @property
    def passed(self) -> bool:
        return self.violations == 0


def _ball_points(rng, n, dim, radius=3.0):
    u = rng.normal(size=(n, dim))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    r = radius * rng.random(n) ** (1.0 / dim)
    return r[:, None] * u


def _distinct_pairs(rng, n, dim, radius=3.0, floor=1e-6):
    y = _ball_points(rng, n, dim, radius)
    z = _ball_points(rng, n, dim, radius)
    bad = np.linalg.norm(y - z, axis=1) < floor
    while np.any(bad):
        z[bad] = _ball_points(rng, int(bad.sum()), dim, radius)
        bad = np.linalg.norm(y - z, axis=1) < floor
    return y, z


def _default_flow(dim: int) -> AffineFlow:
    v = np.zeros(dim)
    v[0] = 0.25
    return AffineFlow(0.3, v)


def sweep_expansion(p: FracParams, seed, n: int = 1200, bound: float | None = None) -> SweepResult:
    """Quadratic remainder of the pulled-back kernel in the flow parameter.

    |kappa_t - kappa_0 - t kappa_Y| |y-z|^(dim+2s) <= C t^2 over random
    (y, z, t), after normalizing away the kernel constant.
    """
    if bound is None:
        bound = FROZEN["expansion"]
    rng = np.random.default_rng(seed)
    flow = _default_flow(p.dim)
    gen = flow.generator()
    n_t = 16
    per = n // n_t
    norm = 2.0 / c_ns(p)
    obs = 0.0
    violations = 0
    total = 0
    for t in rng.uniform(-_T_MAX, _T_MAX, n_t):
        y, z = _distinct_pairs(rng, per, p.dim)
        q = np.linalg.norm(y - z, axis=1)
        k_t = np.atleast_1d(pullback_kernel(flow, float(t), y, z, p))
        k_0 = np.atleast_1d(pullback_kernel(flow, 0.0, y, z, p))
        k_y = np.atleast_1d(deformation_kernel(gen, y, z, p))
        resid = np.abs(k_t - k_0 - t * k_y) * q ** (p.dim + 2.0 * p.s) * norm
        ratio = resid / (t * t + 1e-13)
        obs = max(obs, float(np.max(ratio)))
        violations += int(np.sum(ratio > bound))
        total += per
    return SweepResult(f"expansion-remainder[dim={p.dim},s={p.s}]", total, violations, obs, bound)


def sweep_ellipticity(p: FracParams, seed, n: int = 1200) -> SweepResult:
    """Two-sided kernel bounds derived from the flow's distortion constants."""
    rng = np.random.default_rng(seed)
    flow = _default_flow(p.dim)
    lo, hi = flow.bi_lipschitz(_T_MAX)
    pw = p.dim + 2.0 * p.s
    lam = 0.5 * c_ns(p) * lo ** (2 * p.dim) * hi ** (-pw)
    big = 0.5 * c_ns(p) * hi ** (2 * p.dim) * lo ** (-pw)
    obs = 0.0
    violations = 0
    n_t = 16
    per = n // n_t
    for t in rng.uniform(-_T_MAX, _T_MAX, n_t):
        y, z = _distinct_pairs(rng, per, p.dim)
        q = np.linalg.norm(y - z, axis=1)
        val = np.atleast_1d(pullback_kernel(flow, float(t), y, z, p)) * q**pw
        ratio = np.maximum(val / big, lam / val)
        obs = max(obs, float(np.max(ratio)))
        violations += int(np.sum(ratio > 1.0))
    return SweepResult(f"ellipticity[dim={p.dim},s={p.s}]", n_t * per, violations, obs, 1.0)


def sweep_distance_power(p: FracParams, seed, n: int = 1200) -> SweepResult:
    """Distance powers transform within the flow's bi-Lipschitz envelope."""
    rng = np.random.default_rng(seed)
    flow = _default_flow(p.dim)
    lo, hi = flow.bi_lipschitz(_T_MAX)
    betas = (2.0 * p.s - p.dim, -p.dim - 2.0 * p.s)
    obs = 0.0
    violations = 0
    total = 0
    n_t = 8
    per = n // (n_t * len(betas))
    for beta in betas:
        c = max(hi, 1.0 / lo) ** abs(beta)
        for t in rng.uniform(-_T_MAX, _T_MAX, n_t):
            y, z = _distinct_pairs(rng, per, p.dim)
            q = np.linalg.norm(y - z, axis=1)
            qt = np.linalg.norm(flow.map(y, float(t)) - flow.map(z, float(t)), axis=1)
            ratio = (qt / q) ** beta
            margin = np.maximum(ratio / c, 1.0 / (c * ratio))
            obs = max(obs, float(np.max(margin)))
            violations += int(np.sum(margin > 1.0))
            total += per
    return SweepResult(f"distance-power[dim={p.dim},s={p.s}]", total, violations, obs, 1.0)


def sweep_difference_bound(
    p: FracParams, seed, n: int = 1200, beta: float | None = None, bound: float | None = None
) -> SweepResult:
    """Deformed fundamental-power differences against the static majorant."""
    if bound is None:
        if 2.0 * p.s < 1.0:
            bound = FROZEN["difference_low"]
        elif 2.0 * p.s > 1.0:
            bound = FROZEN["difference_high"]
        else:
            bound = FROZEN[f"difference_half_b{int(round(100 * (beta if beta is not None else 0.5)))}"]
    rng = np.random.default_rng(seed)
    flow = _default_flow(p.dim)
    al = 2.0 * p.s - p.dim
    obs = 0.0
    violations = 0
    n_t = 8
    per = n // n_t
    eps = np.finfo(float).eps
    for t in rng.uniform(-_T_MAX, _T_MAX, n_t):
        y, z = _distinct_pairs(rng, per, p.dim)
        x, _ = _distinct_pairs(rng, per, p.dim)
        ok = (np.linalg.norm(x - y, axis=1) > 1e-6) & (np.linalg.norm(x - z, axis=1) > 1e-6)
        x, y, z = x[ok], y[ok], z[ok]
        xt, yt, zt = (flow.map(q, float(t)) for q in (x, y, z))
        a = np.linalg.norm(xt - yt, axis=1) ** al
        b = np.linalg.norm(xt - zt, axis=1) ** al
        lhs = np.abs(a - b)
        maj = np.atleast_1d(kernel_difference_bound(x, y, z, p, beta=beta))
        ratio = lhs / (bound * maj + 64.0 * eps * np.maximum(a, b))
        obs = max(obs, float(np.max(ratio)) * bound)
        violations += int(np.sum(ratio > 1.0))
    tag = f",beta={beta}" if beta is not None else ""
    return SweepResult(
        f"difference-bound[dim={p.dim},s={p.s}{tag}]", n_t * per, violations, obs, bound
    )


def sweep_green_bound(p: FracParams, seed, n: int = 10000, bound: float | None = None) -> SweepResult:
    """Green function under the three-way distance/boundary majorant."""
    if bound is None:
        bound = FROZEN["green_bound"]
    rng = np.random.default_rng(seed)
    d = BallDomain(np.zeros(p.dim), 1.0)
    g = GreenBall(d, p)
    x = _ball_points(rng, n, p.dim, radius=1.0)
    y = _ball_points(rng, n, p.dim, radius=1.0)
    keep = np.linalg.norm(x - y, axis=1) > 1e-6
    x, y = x[keep], y[keep]
    dx = 1.0 - np.linalg.norm(x, axis=1)
    dy = 1.0 - np.linalg.norm(y, axis=1)
    keep = (dx > 1e-9) & (dy > 1e-9)
    x, y, dx, dy = x[keep], y[keep], dx[keep], dy[keep]
    q = np.linalg.norm(x - y, axis=1)
    vals = g.green(x, y)
    maj = np.minimum(
        q ** (2.0 * p.s - p.dim),
        np.minimum(dx**p.s, dy**p.s) * q ** (p.s - p.dim),
    )
    ratio = vals / maj
    obs = float(np.max(ratio))
    violations = int(np.sum(ratio > bound))
    return SweepResult(f"green-bound[dim={p.dim},s={p.s}]", x.shape[0], violations, obs, bound)


def sweep_green_laws(p: FracParams, seed, n: int = 1200, tol: float | None = None) -> SweepResult:
    """Symmetry, positivity, and the exact scaling/translation laws."""
    if tol is None:
        tol = FROZEN["exact_laws"]
    rng = np.random.default_rng(seed)
    d = BallDomain(np.zeros(p.dim), 1.0)
    g = GreenBall(d, p)
    x = _ball_points(rng, n, p.dim, radius=1.0) * 0.999
    y = _ball_points(rng, n, p.dim, radius=1.0) * 0.999
    keep = np.linalg.norm(x - y, axis=1) > 1e-6
    x, y = x[keep], y[keep]
    base = g.green(x, y)
    rel = np.abs(g.green(y, x) - base) / base
    positive = base > 0.0

    lam = rng.uniform(0.5, 2.0)
    v = rng.normal(size=p.dim)
    scaled = GreenBall(BallDomain(np.zeros(p.dim), lam), p)
    rel_scale = np.abs(scaled.green(lam * x, lam * y) * lam ** (p.dim - 2.0 * p.s) - base) / base
    moved = GreenBall(BallDomain(v, 1.0), p)
    rel_shift = np.abs(moved.green(x + v, y + v) - base) / base

    worst = float(max(np.max(rel), np.max(rel_scale), np.max(rel_shift)))
    violations = int(np.sum(rel > tol) + np.sum(rel_scale > tol) + np.sum(rel_shift > tol))
    violations += int(np.sum(~positive))
    return SweepResult(f"green-laws[dim={p.dim},s={p.s}]", 3 * x.shape[0], violations, worst, tol)


def sweep_gradient_fd(p: FracParams, seed, n: int = 1000, tol: float | None = None) -> SweepResult:
    """Closed-form gradients against central finite differences."""
    if tol is None:
        tol = FROZEN["grad_fd"]
    rng = np.random.default_rng(seed)
    d = BallDomain(np.zeros(p.dim), 1.0)
    g = GreenBall(d, p)
    x = _ball_points(rng, n, p.dim, radius=1.0) * 0.8
    y = _ball_points(rng, n, p.dim, radius=1.0) * 0.8
    keep = np.linalg.norm(x - y, axis=1) > 0.15
    x, y = x[keep], y[keep]
    e = rng.normal(size=(x.shape[0], p.dim))
    e /= np.linalg.norm(e, axis=1, keepdims=True)
    h = 1e-5

    worst = 0.0
    violations = 0
    count = 0
    base_scale = np.abs(g.green(x, y)) / 0.15
    for which in ("first", "second"):
        if which == "first":
            fd = (g.green(x + h * e, y) - g.green(x - h * e, y)) / (2.0 * h)
        else:
            fd = (g.green(x, y + h * e) - g.green(x, y - h * e)) / (2.0 * h)
        proj = np.sum(g.green_grad(x, y, which=which) * e, axis=1)
        rel = np.abs(fd - proj) / np.maximum(np.abs(proj), base_scale)
        worst = max(worst, float(np.max(rel)))
        violations += int(np.sum(rel > tol))
        count += x.shape[0]

    xr = x[np.linalg.norm(x, axis=1) < 0.85]
    er = rng.normal(size=xr.shape)
    er /= np.linalg.norm(er, axis=1, keepdims=True)
    fd_r = np.array(
        [(g.robin(q + h * ee) - g.robin(q - h * ee)) / (2.0 * h) for q, ee in zip(xr, er)]
    )
    proj_r = np.array([g.robin_grad(q) @ ee for q, ee in zip(xr, er)])
    scale_r = np.maximum(np.abs(proj_r), np.abs(np.array([g.robin(q) for q in xr])))
    rel_r = np.abs(fd_r - proj_r) / scale_r
    worst = max(worst, float(np.max(rel_r)))
    violations += int(np.sum(rel_r > tol))
    count += xr.shape[0]
    return SweepResult(f"gradient-fd[dim={p.dim},s={p.s}]", count, violations, worst, tol)


_GRID = ((1, 0.25), (1, 0.45), (2, 0.5), (2, 0.75), (3, 0.4))
_DIFFERENCE_CASES = ((0.25, None), (0.5, 0.25), (0.5, 0.5), (0.5, 0.75), (0.75, None))


def run_property_suites(seed: int = 20260815, n: int = 1200, n_green: int = 10000) -> list[SweepResult]:
    """All sweeps over the standard (dim, s) grid with per-sweep child seeds."""
    results: list[SweepResult] = []
    ss = np.random.SeedSequence(seed)
    children = iter(ss.spawn(len(_GRID) * 5 + len(_DIFFERENCE_CASES) + 2))
    for dim, s in _GRID:
        p = FracParams(dim, s)
        results.append(sweep_expansion(p, next(children), n))
        results.append(sweep_ellipticity(p, next(children), n))
        results.append(sweep_distance_power(p, next(children), n))
        results.append(sweep_green_bound(p, next(children), n_green))
        results.append(sweep_green_laws(p, next(children), n))
    for s, beta in _DIFFERENCE_CASES:
        p = FracParams(2, s)
        results.append(sweep_difference_bound(p, next(children), n, beta=beta))
    for dim, s in ((1, 0.25), (2, 0.75)):
        results.append(sweep_gradient_fd(FracParams(dim, s), next(children), n))
    return results
