import math

import numpy as np
import pytest
from scipy import integrate

from fracshape import (
    DomainError,
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
from fracshape.core_math import ring_integrand


def test_gamma_fn_basic_values():
    assert gamma_fn(1.0) == 1.0
    assert gamma_fn(2.0) == 1.0
    assert gamma_fn(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-15)
    with pytest.raises(DomainError):
        gamma_fn(0.0)
    with pytest.raises(DomainError):
        gamma_fn(-1.5)


def test_params_validation():
    FracParams(1, 0.25)
    FracParams(3, 0.999)
    with pytest.raises(DomainError):
        FracParams(4, 0.25)
    with pytest.raises(DomainError):
        FracParams(2, 0.0)
    with pytest.raises(DomainError):
        FracParams(2, 1.0)
    with pytest.raises(DomainError):
        FracParams(1, 0.5)  # dim > 2s fails at equality
    with pytest.raises(DomainError):
        FracParams(1, 0.75)


def test_c_ns_half_laplacian_value():
    # classical: the half Laplacian on the plane carries c_{2,1/2} = 1/(2 pi)
    assert c_ns(FracParams(2, 0.5)) == pytest.approx(1.0 / (2.0 * math.pi), rel=1e-14)


def test_c_ns_against_gaussian_quadrature():
    # (-Delta)^s e^{-|x|^2} at 0 equals, in Fourier form,
    # (2 sqrt(pi))^{-N} * \int |xi|^{2s} e^{-|xi|^2/4} dxi,
    # and in real form c_{N,s} \int (1 - e^{-r^2}) r^{-1-2s} S_{N-1} r^{N-1} dr.
    for dim, s in ((1, 0.25), (2, 0.6), (3, 0.45)):
        p = FracParams(dim, s)
        real, _ = integrate.quad(
            lambda r: (1.0 - math.exp(-(r**2))) * r ** (dim - 1) * r ** (-dim - 2 * s),
            0.0,
            np.inf,
        )
        real *= c_ns(p) * sphere_area(dim)
        fourier, _ = integrate.quad(
            lambda q: q ** (2 * s) * math.exp(-(q**2) / 4.0) * q ** (dim - 1),
            0.0,
            np.inf,
        )
        fourier *= sphere_area(dim) / (2.0 * math.sqrt(math.pi)) ** dim
        assert real == pytest.approx(fourier, rel=5e-9)


def test_b_ns_riesz_normalization():
    # b_{N,s} must invert c_{N,s}: checked through the exact product formula
    # kappa * B(s, (N-2s)/2) = b, which ties all three constants together.
    for dim, s in ((1, 0.25), (1, 0.45), (2, 0.5), (2, 0.75), (3, 0.4), (3, 0.9)):
        p = FracParams(dim, s)
        assert kappa_ns(p) * beta_total(p) == pytest.approx(b_ns(p), rel=1e-13)


def test_hadamard_const_endpoints():
    assert hadamard_const(1.0) == pytest.approx(1.0, abs=1e-15)
    assert hadamard_const(0.5) == pytest.approx(math.pi / 4.0, rel=1e-14)
    # continuity toward both endpoints
    assert hadamard_const(0.999) == pytest.approx(1.0, abs=2e-3)
    assert hadamard_const(1e-6) == pytest.approx(1.0, abs=1e-5)
    with pytest.raises(DomainError):
        hadamard_const(0.0)
    with pytest.raises(DomainError):
        hadamard_const(1.2)


@pytest.mark.parametrize("dim,s", [(1, 0.25), (2, 0.5), (2, 0.75), (3, 0.4)])
def test_ring_integral_matches_raw_quadrature(dim, s):
    p = FracParams(dim, s)
    for r in (0.3, 1.0, 7.5):
        ref, err = integrate.quad(lambda t: ring_integrand(t, p), 0.0, r, points=[0.0])
        assert ring_integral(r, p) == pytest.approx(ref, rel=1e-10, abs=err * 10)


def test_ring_integral_zero_and_limits():
    p = FracParams(2, 0.5)
    assert ring_integral(0.0, p) == 0.0
    assert ring_integral(np.inf, p) == pytest.approx(beta_total(p), rel=1e-14)
    rs = np.array([0.1, 1.0, 10.0, 1e4])
    vals = ring_integral(rs, p)
    assert np.all(np.diff(vals) > 0)
    # complement identity, including far out where cancellation would bite
    tails = ring_integral_tail(rs, p)
    assert np.allclose(vals + tails, beta_total(p), rtol=1e-13)
    assert ring_integral_tail(1e8, p) > 0


def test_ring_integral_rejects_negative():
    p = FracParams(1, 0.25)
    with pytest.raises(DomainError):
        ring_integral(-0.5, p)
    with pytest.raises(DomainError):
        ring_integral_tail(np.array([1.0, -2.0]), p)


def test_sphere_area_dims():
    assert sphere_area(1) == 2.0
    assert sphere_area(2) == pytest.approx(2.0 * math.pi, rel=1e-15)
    assert sphere_area(3) == pytest.approx(4.0 * math.pi, rel=1e-15)
    assert sphere_area(2, 2.5) == pytest.approx(5.0 * math.pi, rel=1e-15)
    assert sphere_area(3, 2.0) == pytest.approx(16.0 * math.pi, rel=1e-15)
