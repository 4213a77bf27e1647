"""Shape derivatives for the fractional Laplacian on balls."""

from .core_math import (
    FracParams,
    b_ns,
    beta_total,
    c_ns,
    gamma_fn,
    hadamard_const,
    kappa_ns,
    ring_integral,
    ring_integral_tail,
    sphere_area,
)
from .deformation_kernels import (
    deformation_kernel,
    deformation_weight,
    frozen_deformation_weight,
    kernel_difference_bound,
    pullback_kernel,
)
from .errors import (
    ConfigError,
    DomainError,
    ExtrapolationError,
    FracshapeError,
    QuadratureError,
    SingularityError,
)
from .geometry import (
    AffineFlow,
    BallDomain,
    VectorField,
    boundary_rule,
    deform,
    outward_normal,
    reference_kernel_integral,
    signed_distance,
    sphere_rule,
    volume_rule_boundary_layer,
    volume_rule_singular,
)
from .green_ball import GreenBall, fundamental_solution
from .hadamard import (
    ShapeScenario,
    shape_deriv_green,
    shape_deriv_robin,
    shape_deriv_solution,
    solution_trace_profile,
)
from .operators import (
    SmoothBump,
    SourceTerm,
    affine_source_gradient,
    affine_source_solution,
    affine_source_trace,
    duality_check,
    frac_laplacian_far,
    frac_laplacian_pv,
    frac_laplacian_pv_batch,
    frozen_weight_identity,
    gradient_identity_check,
    moment_solution_coef,
    potential_gradient,
    representation_check,
    solve_dirichlet,
    torsion_constant,
    torsion_gradient,
    torsion_trace,
    torsion_value,
)
from .oracles import (
    FDSchedule,
    oracle_green,
    oracle_robin,
    oracle_solution,
    richardson_derivative,
)
from .props import SweepResult, run_property_suites

__version__ = "0.1.0"

__all__ = [
    "AffineFlow",
    "BallDomain",
    "ConfigError",
    "DomainError",
    "ExtrapolationError",
    "FDSchedule",
    "FracParams",
    "FracshapeError",
    "GreenBall",
    "QuadratureError",
    "ShapeScenario",
    "SingularityError",
    "SmoothBump",
    "SourceTerm",
    "SweepResult",
    "VectorField",
    "affine_source_gradient",
    "affine_source_solution",
    "affine_source_trace",
    "b_ns",
    "beta_total",
    "boundary_rule",
    "c_ns",
    "deform",
    "deformation_kernel",
    "deformation_weight",
    "duality_check",
    "frac_laplacian_far",
    "frac_laplacian_pv",
    "frac_laplacian_pv_batch",
    "frozen_deformation_weight",
    "frozen_weight_identity",
    "fundamental_solution",
    "gamma_fn",
    "gradient_identity_check",
    "hadamard_const",
    "kappa_ns",
    "kernel_difference_bound",
    "moment_solution_coef",
    "oracle_green",
    "oracle_robin",
    "oracle_solution",
    "outward_normal",
    "potential_gradient",
    "pullback_kernel",
    "reference_kernel_integral",
    "representation_check",
    "richardson_derivative",
    "ring_integral",
    "ring_integral_tail",
    "run_property_suites",
    "shape_deriv_green",
    "shape_deriv_robin",
    "shape_deriv_solution",
    "signed_distance",
    "solution_trace_profile",
    "solve_dirichlet",
    "sphere_area",
    "sphere_rule",
    "torsion_constant",
    "torsion_gradient",
    "torsion_trace",
    "torsion_value",
    "volume_rule_boundary_layer",
    "volume_rule_singular",
    "__version__",
]
