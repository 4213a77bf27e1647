"""Boundary-integral shape derivatives for the Dirichlet problem on balls.

The three formulas assembled here express derivatives of the Green function,
of the solution, and of the Robin function under a domain deformation as
boundary integrals of fractional traces against the normal speed Y . nu.
Everything reduces to surface quadrature of smooth integrands once the
evaluation points keep away from the boundary.
"""

from __future__ import annotations

import numpy as np

from .core_math import FracParams, hadamard_const
from .errors import DomainError
from .geometry import (
    AffineFlow,
    BallDomain,
    BoundaryQuadrature,
    VectorField,
    boundary_rule,
    signed_distance,
)
from .green_ball import GreenBall
from .operators import SourceTerm, solve_dirichlet, torsion_trace

_MARGIN_FRACTION = 0.1


class ShapeScenario:
    """A ball, a deformation flow, and the parameters they are studied under.

    `boundary_order=None` uses the per-dimension default surface rule and
    enforces the evaluation-point margin; passing an explicit order is the
    escape hatch for points closer to the boundary, at the caller's risk.
    """

    def __init__(
        self,
        domain: BallDomain,
        flow: AffineFlow,
        params: FracParams,
        boundary_order: int | None = None,
    ):
        if domain.dim != params.dim or flow.dim != params.dim:
            raise DomainError(
                f"dimension mismatch: domain {domain.dim}, flow {flow.dim}, params {params.dim}"
            )
        self.domain = domain
        self.flow = flow
        self.params = params
        self.boundary_order = boundary_order
        self.green = GreenBall(domain, params)
        self._brule: BoundaryQuadrature | None = None

    @property
    def dim(self) -> int:
        return self.params.dim

    def surface_rule(self) -> BoundaryQuadrature:
        if self._brule is None:
            self._brule = boundary_rule(self.domain, self.boundary_order)
        return self._brule

    def normal_speed(self, field: VectorField | None = None) -> np.ndarray:
        """Y . nu at the surface-rule nodes."""
        rule = self.surface_rule()
        f = field if field is not None else self.flow.generator()
        return np.sum(f(rule.nodes) * rule.normals, axis=1)

    def require_margin(self, pts) -> None:
        """Evaluation points must keep a fixed fraction of R away from the sphere.

        The trace of G(x, .) peaks like |x-z|^(-dim); the default surface
        orders are calibrated for delta(x) >= 0.1 R. An explicit
        boundary_order disables the guard.
        """
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        delta = signed_distance(self.domain, pts)
        if np.any(delta <= 0.0):
            raise DomainError("evaluation points must be strictly interior")
        if self.boundary_order is None and np.any(delta < _MARGIN_FRACTION * self.domain.radius):
            raise DomainError(
                f"point margin {float(np.min(delta)):.4g} below "
                f"{_MARGIN_FRACTION:g} * radius; pass an explicit boundary_order to override"
            )


def shape_deriv_green(sc: ShapeScenario, x, y, field: VectorField | None = None) -> float:
    """Derivative of the Green function at (x, y) under the scenario flow.

    Surface integral of the product of the two fractional traces times the
    normal speed, scaled by the square of the trace normalization constant.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if np.linalg.norm(x - y) < 1e-12 * sc.domain.radius:
        raise DomainError("shape_deriv_green needs two distinct points")
    sc.require_margin(np.stack([x, y]))
    rule = sc.surface_rule()
    tx = sc.green.trace_green(x, rule.nodes)
    ty = sc.green.trace_green(y, rule.nodes)
    speed = sc.normal_speed(field)
    c = hadamard_const(sc.params.s)
    return c * rule.integrate(tx * ty * speed)


def solution_trace_profile(
    sc: ShapeScenario,
    h: SourceTerm,
    *,
    solve_order: int | None = None,
    trace_eps0: float | None = None,
) -> tuple[np.ndarray, str]:
    """Fractional trace of the solution at every surface-rule node.

    Constant sources have the explicit torsion trace; anything else is traced
    numerically by solving near the boundary and extrapolating the quotient
    u / dist^s. The returned tag records which route produced the values.
    """
    rule = sc.surface_rule()
    if isinstance(h, SourceTerm) and h.is_constant:
        val = h.offset * torsion_trace(sc.domain, sc.params)
        return np.full(rule.nodes.shape[0], val), "closed-form"

    def u_of(pts):
        pts = np.atleast_2d(pts)
        return np.array(
            [solve_dirichlet(sc.domain, h, q, sc.params, order=solve_order) for q in pts]
        )

    vals = np.array(
        [
            sc.green.trace_numeric(u_of, z, eps0=trace_eps0)
            for z in rule.nodes
        ]
    )
    return vals, "numeric-extrapolated"


def shape_deriv_solution(
    sc: ShapeScenario,
    h: SourceTerm,
    x,
    field: VectorField | None = None,
    *,
    trace_profile: np.ndarray | None = None,
    solve_order: int | None = None,
    trace_eps0: float | None = None,
) -> float:
    """Shape derivative of the Dirichlet solution at a fixed interior point.

    Precomputing `trace_profile` once per (scenario, source) with
    solution_trace_profile amortizes the expensive part across evaluation
    points; it depends on neither x nor the flow.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    sc.require_margin(x)
    rule = sc.surface_rule()
    if trace_profile is None:
        trace_profile, _ = solution_trace_profile(
            sc, h, solve_order=solve_order, trace_eps0=trace_eps0
        )
    tx = sc.green.trace_green(x, rule.nodes)
    speed = sc.normal_speed(field)
    c = hadamard_const(sc.params.s)
    return c * rule.integrate(tx * trace_profile * speed)


def shape_deriv_robin(sc: ShapeScenario, x, field: VectorField | None = None) -> float:
    """Shape derivative of the Robin function; nonpositive for expanding flows."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    sc.require_margin(x)
    rule = sc.surface_rule()
    tx = sc.green.trace_green(x, rule.nodes)
    speed = sc.normal_speed(field)
    c = hadamard_const(sc.params.s)
    return -c * rule.integrate(tx**2 * speed)
