import numpy as np
import pytest

from fracshape import (
    AffineFlow,
    BallDomain,
    ExtrapolationError,
    FDSchedule,
    FracParams,
    ShapeScenario,
    SourceTerm,
    oracle_green,
    oracle_robin,
    oracle_solution,
    richardson_derivative,
    torsion_constant,
)


def scenario(dim, s, flow):
    return ShapeScenario(BallDomain(np.zeros(dim), 1.0), flow, FracParams(dim, s))


# -- the extrapolator itself ---------------------------------------------------


def test_richardson_on_smooth_functions():
    assert richardson_derivative(np.sin) == pytest.approx(1.0, abs=1e-12)
    assert richardson_derivative(lambda t: (1.0 + t) ** 5) == pytest.approx(5.0, rel=1e-12)
    assert richardson_derivative(lambda t: np.exp(3.0 * t)) == pytest.approx(3.0, rel=1e-12)


def test_richardson_respects_step_cap():
    # F blows up past |t| = 1e-3; the cap keeps every sample inside
    def F(t):
        if abs(t) > 1e-3:
            raise AssertionError("stepped outside the allowed range")
        return np.tan(t)

    assert richardson_derivative(F, t_cap=1e-3) == pytest.approx(1.0, abs=1e-10)


def test_richardson_rejects_nonsmooth_input():
    # odd but only Hoelder at 0: the gap ratios sit near sqrt(2), not 4
    with pytest.raises(ExtrapolationError):
        richardson_derivative(lambda t: np.sign(t) * np.sqrt(abs(t)))


def test_richardson_tolerates_flat_functions():
    # gap ratios are meaningless at the noise floor; constants must not raise
    assert richardson_derivative(lambda t: 7.0) == 0.0


def test_schedule_validation():
    from fracshape import DomainError

    with pytest.raises(DomainError):
        FDSchedule(t0=-1.0)
    with pytest.raises(DomainError):
        FDSchedule(levels=1)


# -- oracle vs closed transformation laws ---------------------------------------


@pytest.mark.parametrize("dim,s", [(1, 0.25), (2, 0.6)])
def test_oracle_green_translation_matches_gradient(dim, s):
    v = np.eye(dim)[0]
    sc = scenario(dim, s, AffineFlow.translation(v))
    x = np.zeros(dim)
    x[0] = 0.35
    y = np.full(dim, -0.2)
    want = -float(sc.green.green_grad_sum(x, y) @ v)
    assert oracle_green(sc, x, y) == pytest.approx(want, rel=1e-7)


@pytest.mark.parametrize("dim,s", [(1, 0.45), (2, 0.75)])
def test_oracle_robin_dilation_matches_closed_form(dim, s):
    sc = scenario(dim, s, AffineFlow.dilation(dim))
    x = np.zeros(dim)
    x[0] = 0.3
    g = sc.green
    want = (2.0 * s - dim) * g.robin(x) - float(g.robin_grad(x) @ x)
    assert oracle_robin(sc, x) == pytest.approx(want, rel=1e-7)


def test_oracle_solution_constant_source_dilation():
    dim, s = 2, 0.6
    sc = scenario(dim, s, AffineFlow.dilation(dim))
    h = SourceTerm.constant(1.0, dim)
    x = np.array([0.25, 0.0])
    c_tor = torsion_constant(sc.params)
    want = 2.0 * s * c_tor * (1.0 - x @ x) ** (s - 1.0)
    assert oracle_solution(sc, h, x) == pytest.approx(want, rel=1e-7)


def test_oracle_solution_affine_source_runs_the_pullback_route():
    # sloped source: no closed torsion shortcut, the frozen-node quadrature
    # difference must still land on the translation law of the potential
    dim, s = 1, 0.25
    v = np.array([1.0])
    sc = scenario(dim, s, AffineFlow.translation(v))
    h = SourceTerm.affine(1.0, [0.5])
    x = np.array([0.2])
    from fracshape import shape_deriv_solution

    formula = shape_deriv_solution(sc, h, x)
    assert oracle_solution(sc, h, x) == pytest.approx(formula, rel=1e-3)


def test_oracle_robin_at_the_dilation_fixed_point():
    # the center never moves and grad R vanishes there, so the oracle reduces
    # to the pure scaling rate of the Robin function
    sc = scenario(2, 0.5, AffineFlow.dilation(2))
    want = (2.0 * 0.5 - 2) * sc.green.robin(np.zeros(2))
    assert oracle_robin(sc, np.zeros(2)) == pytest.approx(want, rel=1e-9)
