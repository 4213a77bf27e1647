import numpy as np
import pytest

from fracshape import (
    AffineFlow,
    BallDomain,
    DomainError,
    FracParams,
    ShapeScenario,
    SourceTerm,
    VectorField,
    affine_source_trace,
    hadamard_const,
    shape_deriv_green,
    shape_deriv_robin,
    shape_deriv_solution,
    solution_trace_profile,
    torsion_constant,
)


def scenario(dim, s, flow=None, boundary_order=None):
    d = BallDomain(np.zeros(dim), 1.0)
    if flow is None:
        flow = AffineFlow.translation(np.eye(dim)[0])
    return ShapeScenario(d, flow, FracParams(dim, s), boundary_order)


# -- structural zeros ---------------------------------------------------------


def test_rotation_field_moves_nothing():
    # rotations are tangent to the sphere, so every derivative vanishes
    sc = scenario(2, 0.6)
    rot = VectorField.linear([[0.0, -1.0], [1.0, 0.0]])
    x = np.array([0.3, 0.1])
    y = np.array([-0.2, 0.25])
    assert abs(shape_deriv_green(sc, x, y, rot)) < 1e-12
    assert abs(shape_deriv_robin(sc, x, rot)) < 1e-12
    h = SourceTerm.constant(1.0, 2)
    assert abs(shape_deriv_solution(sc, h, x, rot)) < 1e-12


def test_mirror_symmetric_translation_is_zero():
    # x, y on the axis orthogonal to the shift: odd integrand, even node set
    sc = scenario(2, 0.5)
    x = np.array([0.0, 0.3])
    y = np.array([0.0, -0.3])
    assert abs(shape_deriv_green(sc, x, y)) < 1e-12


# -- closed transformation laws ----------------------------------------------


@pytest.mark.parametrize("dim,s", [(1, 0.25), (1, 0.45), (2, 0.5), (2, 0.75)])
def test_green_dilation_law(dim, s):
    sc = scenario(dim, s, AffineFlow.dilation(dim))
    g = sc.green
    x = np.zeros(dim)
    x[0] = 0.35
    y = np.full(dim, -0.2)
    lhs = shape_deriv_green(sc, x, y)
    closed = (
        (2.0 * s - dim) * g.green(x, y)
        - g.green_grad(x, y, "first") @ x
        - g.green_grad(x, y, "second") @ y
    )
    assert lhs == pytest.approx(closed, rel=1e-9)


@pytest.mark.parametrize("dim,s", [(1, 0.3), (2, 0.6)])
def test_green_translation_law(dim, s):
    v = np.zeros(dim)
    v[0] = 1.0
    sc = scenario(dim, s, AffineFlow.translation(v))
    x = np.zeros(dim)
    x[0] = 0.4
    y = np.full(dim, -0.25)
    lhs = shape_deriv_green(sc, x, y)
    assert lhs == pytest.approx(-sc.green.green_grad_sum(x, y) @ v, rel=1e-9)


@pytest.mark.parametrize("dim,s", [(1, 0.25), (2, 0.75)])
def test_robin_laws(dim, s):
    x = np.zeros(dim)
    x[0] = 0.3
    sc = scenario(dim, s, AffineFlow.dilation(dim))
    g = sc.green
    lhs = shape_deriv_robin(sc, x)
    assert lhs == pytest.approx((2.0 * s - dim) * g.robin(x) - g.robin_grad(x) @ x, rel=1e-9)
    assert shape_deriv_robin(sc, np.zeros(dim)) < 0.0  # growing ball lowers R

    v = np.eye(dim)[0]
    sct = scenario(dim, s, AffineFlow.translation(v))
    assert shape_deriv_robin(sct, x) == pytest.approx(-sct.green.robin_grad(x) @ v, rel=1e-9)


@pytest.mark.parametrize("dim,s", [(1, 0.4), (2, 0.6)])
def test_torsion_solution_laws(dim, s):
    # constant source: the solution is explicit on every ball, so the flow
    # derivative has a closed form to compare against
    h = SourceTerm.constant(1.0, dim)
    c_tor = torsion_constant(FracParams(dim, s))
    x = np.zeros(dim)
    x[0] = 0.25

    sc = scenario(dim, s, AffineFlow.dilation(dim))
    want = 2.0 * s * c_tor * (1.0 - x @ x) ** (s - 1.0)
    assert shape_deriv_solution(sc, h, x) == pytest.approx(want, rel=1e-9)

    v = np.eye(dim)[0]
    sct = scenario(dim, s, AffineFlow.translation(v))
    want_t = 2.0 * s * c_tor * (1.0 - x @ x) ** (s - 1.0) * (x @ v)
    assert shape_deriv_solution(sct, h, x) == pytest.approx(want_t, rel=1e-9)


# -- algebraic structure -------------------------------------------------------


def test_derivative_is_linear_in_the_field():
    sc = scenario(2, 0.55)
    x = np.array([0.2, -0.1])
    y = np.array([-0.3, 0.2])
    f1 = VectorField.constant([1.0, 0.0])
    f2 = VectorField.linear([[0.5, 0.0], [0.2, -0.3]])
    combo = VectorField(2.0 * f1.matrix + 3.0 * f2.matrix, 2.0 * f1.offset + 3.0 * f2.offset)
    lhs = shape_deriv_green(sc, x, y, combo)
    rhs = 2.0 * shape_deriv_green(sc, x, y, f1) + 3.0 * shape_deriv_green(sc, x, y, f2)
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_green_derivative_symmetric_in_points():
    sc = scenario(2, 0.6)
    x = np.array([0.35, 0.0])
    y = np.array([-0.1, 0.3])
    assert shape_deriv_green(sc, x, y) == pytest.approx(shape_deriv_green(sc, y, x), rel=1e-13)


def test_surface_rule_doubling_is_stable():
    d = BallDomain(np.zeros(2), 1.0)
    p = FracParams(2, 0.7)
    flow = AffineFlow(0.5, np.array([1.0, -0.5]))
    x = np.array([0.3, 0.2])
    y = np.array([-0.25, -0.1])
    coarse = shape_deriv_green(ShapeScenario(d, flow, p), x, y)
    fine = shape_deriv_green(ShapeScenario(d, flow, p, boundary_order=256), x, y)
    assert coarse == pytest.approx(fine, rel=1e-8)


# -- guards --------------------------------------------------------------------


def test_margin_guard_and_override():
    sc = scenario(2, 0.5)
    near = np.array([0.95, 0.0])
    with pytest.raises(DomainError):
        shape_deriv_robin(sc, near)
    loose = scenario(2, 0.5, boundary_order=512)
    assert np.isfinite(shape_deriv_robin(loose, near))


def test_coincident_points_rejected():
    sc = scenario(1, 0.25)
    with pytest.raises(DomainError):
        shape_deriv_green(sc, np.array([0.2]), np.array([0.2]))


def test_dimension_mismatch_rejected():
    d = BallDomain(np.zeros(2), 1.0)
    with pytest.raises(DomainError):
        ShapeScenario(d, AffineFlow.translation([1.0]), FracParams(2, 0.5))


# -- trace profile routes ------------------------------------------------------


def test_trace_profile_routes_and_cross_check():
    sc = scenario(1, 0.35)
    vals, tag = solution_trace_profile(sc, SourceTerm.constant(2.0, 1))
    assert tag == "closed-form"
    assert np.allclose(vals, 2.0 * torsion_constant(sc.params) * 2.0**sc.params.s)

    h = SourceTerm.affine(1.0, [0.5])
    vals_n, tag_n = solution_trace_profile(sc, h)
    assert tag_n == "numeric-extrapolated"
    rule = sc.surface_rule()
    closed = np.array([affine_source_trace(sc.domain, h, z, sc.params) for z in rule.nodes])
    assert np.allclose(vals_n, closed, rtol=1e-3)


def test_classical_limit_of_the_normalization():
    assert hadamard_const(1.0) == 1.0
    s_grid = np.array([0.9, 0.99, 0.999])
    gaps = np.abs([hadamard_const(float(s)) - 1.0 for s in s_grid])
    assert np.all(np.diff(gaps) < 0.0)
