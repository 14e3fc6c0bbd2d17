import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from src.convex.body import area_density, random_perturbed_ball
from src.spectral.legendre import legendre_eval
from src.spectral.quadrature import build_rule, sphere_area, zonal_integral
from src.spectral.zonal import (
    ZonalFunction,
    box_n,
    convolve,
    cosine_multiplier_closed_form,
    cosine_multipliers,
    cosine_transform,
    decay_exponent,
    expand,
    inner,
    l2_norm,
    laplacian,
    mean_width,
    multiply,
    orthogonal_projection,
    radon_t,
    segment_function,
    sobolev_norm,
    spherical_radon_mixture,
)
from src.utils.errors import DimensionMismatchError, DomainError


def random_zonal(rng, n, kmax=12):
    return ZonalFunction(n, rng.normal(size=kmax + 1) / (1.0 + np.arange(kmax + 1)) ** 2)


def test_expand_recovers_polynomial():
    n = 5
    profile = lambda t: 2.0 + 0.5 * legendre_eval(n, 3, t) - 0.25 * legendre_eval(n, 6, t)
    f = expand(n, profile, kmax=10)
    expected = np.zeros(11)
    expected[[0, 3, 6]] = [2.0, 0.5, -0.25]
    assert_allclose(f.coeffs, expected, atol=1e-13)
    t = np.linspace(-1, 1, 17)
    assert_allclose(f(t), profile(t), atol=1e-13)


def test_multipliers_of_constant():
    f = ZonalFunction.constant(4, 3.0, kmax=5)
    assert f.multipliers()[0] == pytest.approx(3.0 * sphere_area(4))
    assert mean_width(f) == 6.0


def test_funk_hecke_eigenrelation(rng):
    n = 4
    f = random_zonal(rng, n)
    for j in range(0, 8):
        mode = ZonalFunction.legendre_mode(n, j, kmax=12)
        assert_allclose(convolve(mode, f).coeffs, f.multipliers()[j] * mode.coeffs, rtol=1e-14)


def test_box_commutes_with_convolution(rng):
    n = 5
    f, g = random_zonal(rng, n), random_zonal(rng, n)
    assert_allclose(box_n(convolve(g, f)).coeffs, convolve(box_n(g), f).coeffs, rtol=1e-13, atol=1e-15)


def test_self_adjointness(rng):
    n = 4
    for _ in range(50):
        f, g, h = (random_zonal(rng, n) for _ in range(3))
        assert inner(convolve(f, h), g) == pytest.approx(inner(f, convolve(g, h)), rel=1e-10, abs=1e-12)


def test_first_area_density_is_box_of_support(rng):
    for n in (3, 4, 5):
        for _ in range(7):
            body = random_perturbed_ball(n, rng)
            density = area_density(body, 1, kmax=16).density
            assert_allclose(density.coeffs, box_n(body.support_function(16)).coeffs, atol=1e-9)


def test_laplacian_and_box():
    n = 4
    mode = ZonalFunction.legendre_mode(n, 3, kmax=5)
    assert laplacian(mode).coeffs[3] == -3 * (3 + n - 2)
    assert box_n(mode).coeffs[3] == pytest.approx((1 - 3) * (3 + n - 1) / (n - 1))
    assert box_n(ZonalFunction.legendre_mode(n, 1, kmax=5)).coeffs[1] == 0.0


def test_norms_and_projection(rng):
    n = 3
    f = random_zonal(rng, n, kmax=6).with_kmax(6)
    parts = [orthogonal_projection(f, k) for k in range(7)]
    assert sum(l2_norm(p) ** 2 for p in parts) == pytest.approx(l2_norm(f) ** 2, rel=1e-13)
    assert l2_norm(ZonalFunction.constant(n, 1.0, 2)) == pytest.approx(math.sqrt(4 * math.pi))
    with pytest.raises(DomainError):
        orthogonal_projection(f, 7)


def test_sobolev_norm():
    n = 4
    even = ZonalFunction(n, [1.0, 0.0, 0.5])
    direct = math.sqrt(zonal_integral(build_rule(n, 16), lambda t: even(t) ** 2))
    assert sobolev_norm(even, 0) == pytest.approx(direct, rel=1e-10)
    assert sobolev_norm(ZonalFunction.constant(n, 1.0, 4), 3) == pytest.approx(math.sqrt(sphere_area(n)))
    assert sobolev_norm(even.scaled(2.0), 2) == pytest.approx(2.0 * sobolev_norm(even, 2))
    assert sobolev_norm(even, 1) > sobolev_norm(even, 0)
    with pytest.raises(DomainError):
        sobolev_norm(ZonalFunction(n, [1.0, 0.3]), 1)


def test_radon_transforms():
    n = 5
    f = ZonalFunction(n, [1.0, 0.2, -0.4, 0.1])
    assert_allclose(radon_t(f, 1.0).coeffs, f.coeffs)
    even = ZonalFunction(n, [1.0, 0.0, -0.4, 0.0, 0.25])
    assert_allclose(radon_t(even, -1.0).coeffs, even.coeffs, atol=1e-15)
    assert radon_t(ZonalFunction.legendre_mode(n, 2, 2), 0.0).coeffs[2] == pytest.approx(-1.0 / (n - 1))
    mixture = spherical_radon_mixture(f, [0.3, -0.3], [0.5, 0.5])
    average = 0.5 * (radon_t(f, 0.3).coeffs + radon_t(f, -0.3).coeffs)
    assert_allclose(mixture.coeffs, average, atol=1e-15)
    assert_allclose(mixture.coeffs[1::2], 0.0, atol=1e-15)
    with pytest.raises(DomainError):
        spherical_radon_mixture(f, [0.1, 0.2], [1.0])


@pytest.mark.parametrize("n", [3, 4, 5, 6])
def test_cosine_closed_form(n):
    a = cosine_multipliers(n, 20)
    closed = np.array([cosine_multiplier_closed_form(n, k) for k in range(21)])
    assert_allclose(a, closed, rtol=1e-9, atol=1e-13 * a[0])


def test_cosine_transform_and_segment():
    n = 4
    seg = segment_function(n, 128)
    t = np.array([-0.8, -0.5, 0.4, 0.95])
    assert_allclose(seg(t), np.abs(t), atol=5e-3)
    mode = ZonalFunction.legendre_mode(n, 2, kmax=8)
    assert cosine_transform(mode).coeffs[2] == pytest.approx(cosine_multipliers(n, 8)[2])
    assert seg.even


@pytest.mark.parametrize("n", [3, 4, 5])
def test_segment_decay_exponent(n):
    slope = decay_exponent(cosine_multipliers(n, 128), kmin=32, kmax=128)
    assert slope == pytest.approx(-(n + 2) / 2, abs=0.2)


def test_json_round_trip():
    f = ZonalFunction(4, [1.0, 0.0, 0.25, -0.125])
    g = ZonalFunction.from_json(f.to_json())
    assert g.n == 4
    assert_allclose(g.coeffs, f.coeffs)
    with pytest.raises(DomainError):
        ZonalFunction.from_dict({"n": 4, "kmax": 5, "coeffs": [1.0]})


def test_arithmetic_and_mismatch():
    f = ZonalFunction(4, [1.0, 2.0, 3.0])
    g = ZonalFunction(4, [1.0, 1.0])
    assert_allclose((f + g).coeffs, [2.0, 3.0])
    assert_allclose((2 * f - f).coeffs, f.coeffs)
    assert_allclose(multiply(f, [1.0, 0.0, 2.0]).coeffs, [1.0, 0.0, 6.0])
    with pytest.raises(DimensionMismatchError):
        f + ZonalFunction(5, [1.0])
    with pytest.raises(ValueError):
        f.coeffs[0] = 2.0
