"""Closed-form Green function of (-Delta)^s on a ball, and its derived objects.

On the unit ball the Green function is

    G(x, y) = kappa * |x-y|^(2s-dim) * I(r0),
    r0 = (1-|x|^2)(1-|y|^2) / |x-y|^2,

with I the ring integral from core_math; general balls follow by exact
translation/scaling. The regular part, Robin function, boundary trace
u/dist^s, and all gradients below are analytic consequences of that formula,
so every quantity the shape-derivative formulas need is available in closed
form and vectorized.
"""

from __future__ import annotations

import numpy as np

from . import core_math as cm
from .errors import DomainError, ExtrapolationError, SingularityError
from .geometry import BallDomain, signed_distance

_ROBIN_MIN_DIST = 1e-3  # fraction of radius below which robin() refuses to evaluate


def fundamental_solution(x, y, p: cm.FracParams):
    """Free-space kernel b * |x-y|^(2s-dim)."""
    x_arr = np.atleast_2d(np.asarray(x, dtype=float))
    y_arr = np.atleast_2d(np.asarray(y, dtype=float))
    q = np.linalg.norm(x_arr - y_arr, axis=1)
    if np.any(q == 0.0):
        raise SingularityError("fundamental solution evaluated on the diagonal")
    out = cm.b_ns(p) * q ** (2.0 * p.s - p.dim)
    return float(out[0]) if out.size == 1 and np.asarray(x).ndim == 1 and np.asarray(y).ndim == 1 else out


class GreenBall:
    """Green function calculus for (-Delta)^s on a fixed ball."""

    def __init__(self, domain: BallDomain, params: cm.FracParams):
        if domain.dim != params.dim:
            raise DomainError(f"domain dim {domain.dim} != params dim {params.dim}")
        self.domain = domain
        self.params = params
        self.kappa = cm.kappa_ns(params)
        self.b = cm.b_ns(params)
        self.beta_total = cm.beta_total(params)

    # -- helpers ----------------------------------------------------------

    def _unit(self, pts: np.ndarray) -> np.ndarray:
        return (pts - self.domain.center) / self.domain.radius

    def _pair(self, x, y) -> tuple[np.ndarray, np.ndarray, bool]:
        """Broadcast x and y to matching (m, dim) arrays."""
        x_arr = np.asarray(x, dtype=float)
        y_arr = np.asarray(y, dtype=float)
        scalar = x_arr.ndim == 1 and y_arr.ndim == 1
        x2 = np.atleast_2d(x_arr)
        y2 = np.atleast_2d(y_arr)
        if x2.shape[0] == 1 and y2.shape[0] > 1:
            x2 = np.broadcast_to(x2, y2.shape)
        if y2.shape[0] == 1 and x2.shape[0] > 1:
            y2 = np.broadcast_to(y2, x2.shape)
        return x2, y2, scalar

    @staticmethod
    def _ring_deriv(r0: np.ndarray, p: cm.FracParams) -> np.ndarray:
        # d/dr of the ring integral, r0^(s-1) (1+r0)^(-dim/2), log-form for large r0
        with np.errstate(divide="ignore"):
            return np.exp((p.s - 1.0) * np.log(r0) - (p.dim / 2.0) * np.log1p(r0))

    # -- values -----------------------------------------------------------

    def green(self, x, y):
        """G(x, y); zero whenever either argument leaves the open ball."""
        x2, y2, scalar = self._pair(x, y)
        p = self.params
        xh, yh = self._unit(x2), self._unit(y2)
        q = np.linalg.norm(xh - yh, axis=1)
        ax = 1.0 - np.sum(xh**2, axis=1)
        ay = 1.0 - np.sum(yh**2, axis=1)
        inside = (ax > 0.0) & (ay > 0.0)
        if np.any((q == 0.0) & inside):
            raise SingularityError("green evaluated on the diagonal")
        out = np.zeros_like(q)
        if np.any(inside):
            qi = q[inside]
            r0 = ax[inside] * ay[inside] / qi**2
            out[inside] = self.kappa * qi ** (2.0 * p.s - p.dim) * cm.ring_integral(r0, p)
            out[inside] *= self.domain.radius ** (2.0 * p.s - p.dim)
        return float(out[0]) if scalar else out

    def regular_part(self, x, y):
        """H = fundamental - G; smooth across the diagonal, equals F outside."""
        x2, y2, scalar = self._pair(x, y)
        p = self.params
        xh, yh = self._unit(x2), self._unit(y2)
        q = np.linalg.norm(xh - yh, axis=1)
        ax = 1.0 - np.sum(xh**2, axis=1)
        ay = 1.0 - np.sum(yh**2, axis=1)
        if np.any(ax <= 0.0):
            raise DomainError("regular_part: x must be interior")
        out = np.empty_like(q)
        coincide = q == 0.0
        if np.any(coincide):
            # diagonal limit is the Robin function
            for i in np.flatnonzero(coincide):
                out[i] = self.robin(x2[i])
        inside = (ay > 0.0) & ~coincide
        ext = ~inside & ~coincide
        if np.any(inside):
            qi = q[inside]
            r0 = ax[inside] * ay[inside] / qi**2
            # complementary ring integral keeps precision when G ~ fundamental
            out[inside] = (
                self.kappa
                * qi ** (2.0 * p.s - p.dim)
                * cm.ring_integral_tail(r0, p)
                * self.domain.radius ** (2.0 * p.s - p.dim)
            )
        if np.any(ext):
            scale = self.domain.radius ** (2.0 * p.s - p.dim)
            out[ext] = self.b * q[ext] ** (2.0 * p.s - p.dim) * scale
        return float(out[0]) if scalar else out

    def robin(self, x) -> float:
        """Diagonal of the regular part; diverges like dist^(2s-dim) at the sphere."""
        x_arr = np.atleast_1d(np.asarray(x, dtype=float))
        delta = signed_distance(self.domain, x_arr)
        if delta < _ROBIN_MIN_DIST * self.domain.radius:
            raise DomainError(
                f"robin diverges at the boundary; dist/radius = {delta / self.domain.radius:.2e}"
            )
        p = self.params
        xh = self._unit(x_arr)
        a = 1.0 - float(xh @ xh)
        coef = self.kappa / (p.dim / 2.0 - p.s)
        return coef * a ** (2.0 * p.s - p.dim) * self.domain.radius ** (2.0 * p.s - p.dim)

    def robin_grad(self, x) -> np.ndarray:
        x_arr = np.atleast_1d(np.asarray(x, dtype=float))
        delta = signed_distance(self.domain, x_arr)
        if delta < _ROBIN_MIN_DIST * self.domain.radius:
            raise DomainError("robin_grad too close to the boundary")
        p = self.params
        xh = self._unit(x_arr)
        a = 1.0 - float(xh @ xh)
        coef = 2.0 * self.kappa * (p.dim - 2.0 * p.s) / (p.dim / 2.0 - p.s)
        grad_unit = coef * xh * a ** (2.0 * p.s - p.dim - 1.0)
        return grad_unit * self.domain.radius ** (2.0 * p.s - p.dim - 1.0)

    # -- gradients ----------------------------------------------------------

    def _grad_unit_first(self, xh: np.ndarray, yh: np.ndarray) -> np.ndarray:
        p = self.params
        q = np.linalg.norm(xh - yh, axis=1)
        ax = 1.0 - np.sum(xh**2, axis=1)
        ay = 1.0 - np.sum(yh**2, axis=1)
        if np.any(q == 0.0):
            raise SingularityError("green_grad evaluated on the diagonal")
        if np.any(ax <= 0.0) or np.any(ay <= 0.0):
            raise DomainError("green_grad needs both points strictly inside")
        r0 = ax * ay / q**2
        ring = cm.ring_integral(r0, p)
        dring = self._ring_deriv(r0, p)
        pre = self.kappa * q ** (2.0 * p.s - p.dim - 2.0)
        term = (2.0 * p.s - p.dim) * (xh - yh) * np.atleast_1d(ring)[:, None]
        term = term - 2.0 * dring[:, None] * (ay[:, None] * xh + r0[:, None] * (xh - yh))
        return pre[:, None] * term

    def green_grad(self, x, y, which: str = "first"):
        """Gradient of G in the first or second argument (both interior)."""
        x2, y2, scalar = self._pair(x, y)
        if which == "first":
            g = self._grad_unit_first(self._unit(x2), self._unit(y2))
        elif which == "second":
            # symmetry of G makes the second-argument gradient a swap
            g = self._grad_unit_first(self._unit(y2), self._unit(x2))
        else:
            raise ValueError(f"which must be 'first' or 'second', got {which!r}")
        g = g * self.domain.radius ** (2.0 * self.params.s - self.params.dim - 1.0)
        return g[0] if scalar else g

    def green_grad_sum(self, x, y):
        """(grad_x + grad_y) G, evaluated in a form with no diagonal blow-up.

        The fundamental part cancels exactly in the sum, so this stays
        bounded as y -> x and is safe inside near-diagonal quadratures.
        """
        x2, y2, scalar = self._pair(x, y)
        p = self.params
        xh, yh = self._unit(x2), self._unit(y2)
        q = np.linalg.norm(xh - yh, axis=1)
        ax = 1.0 - np.sum(xh**2, axis=1)
        ay = 1.0 - np.sum(yh**2, axis=1)
        if np.any(q == 0.0):
            raise SingularityError("green_grad_sum evaluated on the diagonal")
        if np.any(ax <= 0.0) or np.any(ay <= 0.0):
            raise DomainError("green_grad_sum needs both points strictly inside")
        r0 = ax * ay / q**2
        dring = self._ring_deriv(r0, p)
        pre = -2.0 * self.kappa * q ** (2.0 * p.s - p.dim - 2.0) * dring
        g = pre[:, None] * (ay[:, None] * xh + ax[:, None] * yh)
        g = g * self.domain.radius ** (2.0 * p.s - p.dim - 1.0)
        return g[0] if scalar else g

    # -- boundary trace -----------------------------------------------------

    def trace_green(self, x, z):
        """Fractional normal trace of G(x, .) at boundary points z.

        Closed form (2^s kappa / s) (1-|x|^2)^s |x-z|^(-dim) in unit-ball
        coordinates, rescaled to the actual ball.
        """
        x_arr = np.atleast_1d(np.asarray(x, dtype=float))
        if signed_distance(self.domain, x_arr) <= 0.0:
            raise DomainError("trace_green: x must be interior")
        z2 = np.atleast_2d(np.asarray(z, dtype=float))
        zh = self._unit(z2)
        if np.any(np.abs(np.linalg.norm(zh, axis=1) - 1.0) > 1e-8):
            raise DomainError("trace_green: z must lie on the boundary sphere")
        p = self.params
        xh = self._unit(x_arr)
        a = 1.0 - float(xh @ xh)
        q = np.linalg.norm(xh - zh, axis=1)
        out = (2.0**p.s * self.kappa / p.s) * a**p.s * q ** (-float(p.dim))
        out = out * self.domain.radius ** (p.s - p.dim)
        return float(out[0]) if np.asarray(z).ndim == 1 else out

    def trace_green_pairs(self, xs, zs) -> np.ndarray:
        """trace_green for every (interior point, boundary point) pair.

        Returns a (len(xs), len(zs)) matrix; the workhorse behind volume x
        boundary double integrals.
        """
        xs2 = np.atleast_2d(np.asarray(xs, dtype=float))
        zs2 = np.atleast_2d(np.asarray(zs, dtype=float))
        if np.any(signed_distance(self.domain, xs2) <= 0.0):
            raise DomainError("trace_green_pairs: interior points required")
        zh = self._unit(zs2)
        if np.any(np.abs(np.linalg.norm(zh, axis=1) - 1.0) > 1e-8):
            raise DomainError("trace_green_pairs: z must lie on the boundary sphere")
        p = self.params
        xh = self._unit(xs2)
        a = 1.0 - np.sum(xh**2, axis=1)
        q = np.linalg.norm(xh[:, None, :] - zh[None, :, :], axis=-1)
        out = (2.0**p.s * self.kappa / p.s) * a[:, None] ** p.s * q ** (-float(p.dim))
        return out * self.domain.radius ** (p.s - p.dim)

    def trace_potential(self, pts, boundary, fvals) -> np.ndarray:
        """Boundary integral of trace_green(y, z) f(z) dsigma(z), at interior y.

        The trace kernel peaks on a scale of dist(y) near the sphere, which no
        fixed surface rule resolves for y deep in the boundary layer. Instead
        f is projected on circular or spherical harmonics, each of which pairs
        with the |yh-zh|^(-dim) kernel in closed form (one factor |yh|^k per
        mode), so the result is exact for band-limited densities uniformly in
        y. `boundary` is a rule from boundary_rule, `fvals` its node samples.
        """
        p = self.params
        d = self.domain
        pts2 = np.atleast_2d(np.asarray(pts, dtype=float))
        if np.any(signed_distance(d, pts2) <= 0.0):
            raise DomainError("trace_potential: interior points required")
        fv = np.asarray(fvals, dtype=float)
        if fv.shape != (boundary.nodes.shape[0],):
            raise DomainError("trace_potential: fvals must sample the boundary rule nodes")
        yh = self._unit(pts2)
        rho2 = np.sum(yh**2, axis=1)
        pre = (2.0**p.s * self.kappa / p.s) * (1.0 - rho2) ** p.s * d.radius ** (p.s - 1.0)
        zh = self._unit(boundary.nodes)
        wf = (boundary.weights / d.radius ** (p.dim - 1)) * fv

        if p.dim == 1:
            kern = 1.0 / np.abs(yh[:, None, 0] - zh[None, :, 0])
            return pre * (kern @ wf)

        if p.dim == 2:
            kmax = max(zh.shape[0] // 2 - 1, 1)
            theta = np.arctan2(zh[:, 1], zh[:, 0])
            ks = np.arange(1, kmax + 1)
            coef = np.exp(-1j * np.outer(ks, theta)) @ wf
            a0 = float(np.sum(wf))
            w = yh[:, 0] + 1j * yh[:, 1]
            series = a0 + 2.0 * np.real(w[:, None] ** ks @ coef)
            return pre * series / (1.0 - rho2)

        # dim == 3: sum over Legendre orders; (2k+1) rho^k P_k(zh . omega)
        # telescopes to the kernel, and truncating at the rule's polar order
        # matches the band limit the surface rule itself assumes
        kmax = max(4, boundary.order) - 1
        rho = np.sqrt(rho2)
        omh = yh / np.maximum(rho, 1e-300)[:, None]
        dots = omh @ zh.T
        pkm1 = np.ones_like(dots)
        pk = dots
        acc = pkm1 @ wf + 3.0 * rho * (pk @ wf)
        rk = rho.copy()
        for k in range(1, kmax):
            pkp1 = ((2.0 * k + 1.0) * dots * pk - k * pkm1) / (k + 1.0)
            rk = rk * rho
            acc = acc + (2.0 * k + 3.0) * rk * (pkp1 @ wf)
            pkm1, pk = pk, pkp1
        return pre * acc / (1.0 - rho2)

    def trace_numeric(self, u, z, eps0: float | None = None, levels: int = 3) -> float:
        """Boundary trace u/dist^s at z from interior samples plus Richardson.

        `u` must accept an (m, dim) array. The sampled quotient has a leading
        O(eps) error; a full extrapolation tableau in powers of 2 removes it.
        Raises if the tableau fails to settle.
        """
        if levels < 2:
            raise DomainError("trace_numeric needs at least 2 levels")
        z_arr = np.atleast_1d(np.asarray(z, dtype=float))
        nu = (z_arr - self.domain.center) / self.domain.radius
        if abs(np.linalg.norm(z_arr - self.domain.center) - self.domain.radius) > 1e-8 * self.domain.radius:
            raise DomainError("trace_numeric: z must lie on the boundary sphere")
        if eps0 is None:
            eps0 = 1e-2 * self.domain.radius
        eps = eps0 / 2.0 ** np.arange(levels)
        pts = z_arr[None, :] - eps[:, None] * nu[None, :]
        vals = np.asarray(u(pts), dtype=float)
        t = vals / eps**self.params.s

        tableau = [t]
        for j in range(1, levels):
            prev = tableau[-1]
            fac = 2.0**j
            tableau.append((fac * prev[1:] - prev[:-1]) / (fac - 1.0))
        best = float(tableau[-1][-1])
        prev_best = float(tableau[-2][-1])
        scale = max(abs(best), abs(t[-1]), 1e-300)
        osc = abs(best - prev_best)
        if osc > max(0.05 * scale, 1e-9):
            raise ExtrapolationError(
                f"trace extrapolation did not settle: sequence {t.tolist()}, "
                f"last correction {osc:.3e}"
            )
        return best
