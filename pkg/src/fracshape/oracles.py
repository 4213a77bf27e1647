"""Finite-difference shape-derivative oracles on exactly transformed balls.

Affine flows map balls to balls, so every deformed quantity here is evaluated
through closed forms (or through a pullback quadrature with frozen nodes) and
differenced in t. None of these routines look at the boundary-integral
formulas they are meant to check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ExtrapolationError
from .geometry import deform, signed_distance, volume_rule_singular
from .green_ball import GreenBall
from .hadamard import ShapeScenario
from .operators import SourceTerm, potential_gradient, torsion_value

_RICHARDSON_ORDER = 2  # central differences: error series in t^2


@dataclass(frozen=True)
class FDSchedule:
    """Step sizes and acceptance thresholds for Richardson differencing.

    `ratio_tol` bounds the relative deviation of successive difference ratios
    from the theoretical 2^order = 4; `noise_floor` (relative to the value
    scale) is the level below which ratios are no longer meaningful.
    """

    t0: float = 1e-2
    levels: int = 3
    ratio_tol: float = 0.2
    noise_floor: float = 1e-9

    def __post_init__(self):
        if self.t0 <= 0.0:
            raise DomainError(f"t0 must be positive, got {self.t0}")
        if self.levels < 2:
            raise DomainError(f"need at least 2 levels, got {self.levels}")


def richardson_derivative(F, schedule: FDSchedule | None = None, t_cap: float | None = None) -> float:
    """Extrapolated F'(0) from central differences at t0, t0/2, ...

    Ratios of successive difference gaps must sit near 4 (second order) unless
    the gaps have hit the noise floor; otherwise the sequence is rejected so a
    bad step size cannot silently produce garbage.
    """
    sched = schedule or FDSchedule()
    t0 = sched.t0 if t_cap is None else min(sched.t0, t_cap)
    if t0 <= 0.0:
        raise DomainError(f"empty step range: cap {t_cap}")
    ts = t0 / 2.0 ** np.arange(sched.levels)
    f_vals = np.array([[F(t), F(-t)] for t in ts])
    diffs = (f_vals[:, 0] - f_vals[:, 1]) / (2.0 * ts)

    scale = max(float(np.max(np.abs(diffs))), 1e-300)
    # rounding noise in a central difference is ~ eps |F| / (2 t)
    fd_noise = 64.0 * np.finfo(float).eps * float(np.max(np.abs(f_vals))) / (2.0 * ts[-1])
    floor = max(sched.noise_floor * scale, fd_noise)
    gaps = diffs[:-1] - diffs[1:]
    if sched.levels >= 3:
        for k in range(gaps.size - 1):
            if max(abs(gaps[k]), abs(gaps[k + 1])) <= floor:
                continue
            ratio = gaps[k] / gaps[k + 1] if gaps[k + 1] != 0.0 else np.inf
            if abs(ratio / 2.0**_RICHARDSON_ORDER - 1.0) > sched.ratio_tol:
                raise ExtrapolationError(
                    f"difference ratios {(gaps[:-1] / np.where(gaps[1:] == 0, np.nan, gaps[1:])).tolist()} "
                    f"not near 4; quotients {diffs.tolist()}"
                )
    tab = diffs
    for j in range(1, sched.levels):
        fac = 4.0**j
        tab = (fac * tab[1:] - tab[:-1]) / (fac - 1.0)
    return float(tab[-1])


def _interior_cap(sc: ShapeScenario, x: np.ndarray) -> float:
    """Largest safe |t|: keeps x inside the deformed ball with half its margin."""
    d, flow = sc.domain, sc.flow
    delta = float(signed_distance(d, x))
    speed = (
        abs(flow.scale_rate) * (d.radius + np.linalg.norm(x - d.center) + np.linalg.norm(d.center))
        + np.linalg.norm(flow.shift_rate)
    )
    cap = 0.4 * flow.t_max
    if speed > 0.0:
        cap = min(cap, 0.5 * delta / speed)
    return cap


def oracle_green(sc: ShapeScenario, x, y, schedule: FDSchedule | None = None) -> float:
    """FD reference for the Green-function shape derivative at fixed (x, y).

    Differences G on the transformed ball at transported points, then removes
    the transport terms with the analytic gradients.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    p, d, flow = sc.params, sc.domain, sc.flow

    def F(t):
        return GreenBall(deform(d, flow, t), p).green(flow.map(x, t), flow.map(y, t))

    dval = richardson_derivative(F, schedule, t_cap=0.4 * flow.t_max)
    Y = flow.generator()
    g = sc.green
    return dval - float(g.green_grad(x, y, "first") @ Y(x)) - float(g.green_grad(x, y, "second") @ Y(y))


def oracle_robin(sc: ShapeScenario, x, schedule: FDSchedule | None = None) -> float:
    """FD reference for the Robin-function shape derivative at fixed x."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    p, d, flow = sc.params, sc.domain, sc.flow

    def F(t):
        return GreenBall(deform(d, flow, t), p).robin(flow.map(x, t))

    dval = richardson_derivative(F, schedule, t_cap=0.4 * flow.t_max)
    Y = flow.generator()
    return dval - float(sc.green.robin_grad(x) @ Y(x))


def oracle_solution(
    sc: ShapeScenario,
    h: SourceTerm,
    x,
    schedule: FDSchedule | None = None,
    volume_order: int | None = None,
) -> float:
    """FD reference for the solution shape derivative at a fixed point.

    Constant sources ride the exact transformation law of the torsion
    solution, differenced at fixed x. General sources use the pullback
    quadrature with nodes frozen at t = 0, so the t-differencing sees
    correlated (and cancelling) quadrature error, minus the transport term
    from the solution gradient.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    p, d, flow = sc.params, sc.domain, sc.flow
    cap = _interior_cap(sc, x)

    if isinstance(h, SourceTerm) and h.is_constant:

        def F(t):
            return h.offset * torsion_value(deform(d, flow, t), x, p)

        return richardson_derivative(F, schedule, t_cap=cap)

    rule = volume_rule_singular(d, x, p, order=volume_order)
    nodes, wts = rule.nodes, rule.weights
    Y = flow.generator()

    def F(t):
        dom_t = deform(d, flow, t)
        xt = flow.map(x, t)
        yt = flow.map(nodes, t)
        gt = GreenBall(dom_t, p)
        vals = gt.green(xt, yt) * np.asarray(h(yt), dtype=float)
        return float(wts @ vals) * flow.jacobian_det(t)

    dval = richardson_derivative(F, schedule, t_cap=cap)
    grad = potential_gradient(d, h, x, p, order=volume_order)
    return dval - float(grad @ Y(x))
