import math

import numpy as np
import pytest
from scipy import special

from fracshape import (
    AffineFlow,
    BallDomain,
    DomainError,
    FracParams,
    VectorField,
    boundary_rule,
    deform,
    outward_normal,
    reference_kernel_integral,
    signed_distance,
    sphere_area,
    sphere_rule,
    volume_rule_boundary_layer,
    volume_rule_singular,
)


def ball_volume(dim, radius):
    return sphere_area(dim, radius) * radius / dim


# -- domain basics -----------------------------------------------------------


def test_signed_distance_values():
    d = BallDomain(np.zeros(2), 1.0)
    assert signed_distance(d, np.zeros(2)) == pytest.approx(1.0)
    assert signed_distance(d, np.array([1.0, 0.0])) == pytest.approx(0.0, abs=1e-15)
    assert signed_distance(d, np.array([2.0, 0.0])) == pytest.approx(-1.0)
    batch = signed_distance(d, np.array([[0.0, 0.0], [0.5, 0.0]]))
    assert np.allclose(batch, [1.0, 0.5])


def test_outward_normal_values():
    d = BallDomain(np.zeros(2), 1.0)
    assert np.allclose(outward_normal(d, [1.0, 0.0]), [1.0, 0.0])
    assert np.allclose(outward_normal(d, [0.0, -1.0]), [0.0, -1.0])
    shifted = BallDomain(np.array([1.0, 1.0]), 2.0)
    assert np.allclose(outward_normal(shifted, [3.0, 1.0]), [1.0, 0.0])
    with pytest.raises(DomainError):
        outward_normal(d, [0.5, 0.0])


def test_ball_validation():
    with pytest.raises(DomainError):
        BallDomain(np.zeros(2), -1.0)
    with pytest.raises(DomainError):
        BallDomain(np.zeros(4), 1.0)


# -- fields and flows ---------------------------------------------------------


def test_vector_field_shapes_and_divergence():
    fld = VectorField.affine(0.5, np.array([1.0, -2.0]))
    pts = np.array([[0.0, 0.0], [2.0, 2.0]])
    vals = fld(pts)
    assert np.allclose(vals, [[1.0, -2.0], [2.0, -1.0]])
    assert fld.div_value == pytest.approx(1.0)  # trace of 0.5 * I in 2d
    m = np.array([[1.0, 2.0], [0.0, 3.0]])
    lin = VectorField.linear(m)
    assert np.allclose(lin(np.array([1.0, 1.0])), [3.0, 3.0])
    assert lin.div_value == pytest.approx(4.0)
    both = fld + lin
    assert np.allclose(both(np.array([1.0, 1.0])), fld(np.array([1.0, 1.0])) + [3.0, 3.0])


def test_affine_flow_map_and_jacobian():
    flow = AffineFlow(0.3, np.array([0.1, -0.2]))
    t = 0.07
    pts = np.array([[0.4, -0.5], [0.0, 0.0]])
    mapped = flow.map(pts, t)
    assert np.allclose(mapped, (1.0 + 0.3 * t) * pts + t * np.array([0.1, -0.2]))
    assert flow.jacobian_det(t) == pytest.approx((1.0 + 0.3 * t) ** 2, rel=1e-14)
    gen = flow.generator()
    assert np.allclose(gen(np.array([1.0, 1.0])), 0.3 * np.array([1.0, 1.0]) + [0.1, -0.2])


def test_affine_flow_bi_lipschitz_brackets_distances():
    rng = np.random.default_rng(5)
    flow = AffineFlow(-0.8, np.array([0.4, 0.0, 0.1]))
    lo, hi = flow.bi_lipschitz(0.05)
    for _ in range(50):
        t = rng.uniform(-0.05, 0.05)
        y, z = rng.normal(size=(2, 3))
        d0 = np.linalg.norm(y - z)
        d1 = np.linalg.norm(flow.map(y, t) - flow.map(z, t))
        assert lo * d0 <= d1 * (1 + 1e-12)
        assert d1 <= hi * d0 * (1 + 1e-12)


def test_deform_examples():
    ball = BallDomain(np.zeros(2), 1.0)
    moved = deform(ball, AffineFlow.translation(np.array([1.0, 0.0])), 0.1)
    assert np.allclose(moved.center, [0.1, 0.0]) and moved.radius == pytest.approx(1.0)
    grown = deform(ball, AffineFlow.dilation(2, 1.0), 0.1)
    assert np.allclose(grown.center, 0.0) and grown.radius == pytest.approx(1.1)
    frozen = deform(ball, AffineFlow(0.5, np.array([2.0, 2.0])), 0.0)
    assert frozen.same_as(ball)
    with pytest.raises(DomainError):
        deform(ball, AffineFlow.dilation(2, -1.0), 1.5)  # past the collapse guard


# -- quadrature rules ----------------------------------------------------------


def test_sphere_rule_weight_sums():
    pts, w = sphere_rule(2, 64)
    assert abs(w.sum() - 2.0 * math.pi) < 1e-12
    pts3, w3 = sphere_rule(3, 16)
    assert abs(w3.sum() - 4.0 * math.pi) < 1e-10
    pts1, w1 = sphere_rule(1, 2)
    assert np.allclose(sorted(pts1.ravel()), [-1.0, 1.0]) and np.allclose(w1, 1.0)


def test_sphere_rule_moments():
    for dim in (2, 3):
        pts, w = sphere_rule(dim, 24)
        assert np.allclose(w @ pts, 0.0, atol=1e-12)
        second = pts.T * w @ pts
        assert np.allclose(second, np.eye(dim) * sphere_area(dim) / dim, atol=1e-10)
        # antipodal symmetry kills all odd moments at once
        flipped = np.array(sorted(map(tuple, np.round(-pts, 12))))
        straight = np.array(sorted(map(tuple, np.round(pts, 12))))
        assert np.allclose(flipped, straight)


def test_boundary_rule_constant_and_linear():
    d = BallDomain(np.array([0.3, -0.2]), 1.7)
    rule = boundary_rule(d, 96)
    assert rule.integrate(np.ones(len(rule.nodes))) == pytest.approx(
        sphere_area(2, 1.7), rel=1e-12
    )
    vals = rule.nodes[:, 0]
    assert rule.integrate(vals) == pytest.approx(0.3 * sphere_area(2, 1.7), rel=1e-12)
    assert np.allclose(np.linalg.norm(rule.normals, axis=1), 1.0)


def test_volume_rule_singular_on_green_integrand():
    # designed use: singular factor at x times a boundary decay like dist^s.
    # Integrating the ball Green function over the ball gives the closed-form
    # torsion value exactly, so this is a sharp end-to-end accuracy probe.
    from fracshape import GreenBall
    from fracshape.operators import torsion_value

    for dim, s, tol in ((1, 0.25, 5e-5), (1, 0.45, 5e-5), (2, 0.6, 1e-7), (3, 0.45, 1e-9)):
        d = BallDomain(np.zeros(dim), 1.3)
        p = FracParams(dim, s)
        g = GreenBall(d, p)
        x = np.zeros(dim)
        x[0] = 0.4
        rule = volume_rule_singular(d, x, p)
        vals = g.green(np.broadcast_to(x, rule.nodes.shape), rule.nodes)
        assert rule.integrate(vals) == pytest.approx(torsion_value(d, x, p), rel=tol)


def test_volume_rule_singular_consistency_for_rough_integrands():
    # constants and the bare kernel power do not vanish at the sphere, so the
    # rule is only consistent there, not spectrally accurate
    for dim, s in ((1, 0.25), (2, 0.6), (3, 0.45)):
        d = BallDomain(np.zeros(dim), 1.3)
        p = FracParams(dim, s)
        x = np.zeros(dim)
        x[0] = 0.4
        rule = volume_rule_singular(d, x, p)
        got = rule.integrate(np.ones(len(rule.nodes)))
        assert got == pytest.approx(ball_volume(dim, 1.3), rel=1e-3)
        unit = BallDomain(np.zeros(dim), 1.0)
        rule_u = volume_rule_singular(unit, x, p)
        r = np.linalg.norm(rule_u.nodes - x, axis=1)
        got_k = rule_u.integrate(r ** (2.0 * s - dim))
        assert got_k == pytest.approx(reference_kernel_integral(unit, x, p), rel=5e-4)


def test_volume_rule_boundary_layer_distance_power():
    # integral of dist(y)^s over the ball has the closed beta-function value
    for dim, s in ((1, 0.45), (2, 0.7), (3, 0.55)):
        d = BallDomain(np.zeros(dim), 1.0)
        p = FracParams(dim, s if 2 * s < dim else 0.45)
        rule = volume_rule_boundary_layer(d, p)
        dist = 1.0 - np.linalg.norm(rule.nodes, axis=1)
        got = rule.integrate(dist**p.s)
        ref = sphere_area(dim) * special.beta(dim, p.s + 1.0)
        assert got == pytest.approx(ref, rel=1e-9)


def test_volume_rules_respect_interior_points():
    d = BallDomain(np.zeros(2), 1.0)
    p = FracParams(2, 0.5)
    with pytest.raises(DomainError):
        volume_rule_singular(d, np.array([1.5, 0.0]), p)
