import itertools
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.linalg import null_space

from src.convex.body import (
    RevolutionBody,
    SupportClass,
    area_density,
    ball,
    body_from_spec,
    classify_support,
    elementary_density,
    ellipsoid,
    empirical_transitions,
    generalized_zonoid,
    intervals,
    legendre_body,
    mixed_area_density,
    mixed_discriminant_diagonal,
    nonnegativity_witness,
    perturbed_ball,
    random_perturbed_ball,
    zonoid_from_multipliers,
)
from src.spectral.legendre import legendre_table
from src.spectral.zonal import ZonalFunction, segment_function, spherical_radon_mixture
from src.utils.errors import ConfigError, DomainError, InvalidBodyError, UnsupportedProfileError

SAMPLE_T = [-0.93, -0.4, 0.0, 0.35, 0.8]


def homogeneous_hessian(body, u, step=1e-4):
    """Central-difference Hessian of x -> |x| phi(x_n / |x|) at u, restricted to u-perp."""
    n = len(u)

    def extension(x):
        r = np.linalg.norm(x)
        return r * float(body.support(np.clip(x[-1] / r, -1.0, 1.0)))

    hess = np.empty((n, n))
    eye = np.eye(n) * step
    for a in range(n):
        for b in range(n):
            hess[a, b] = (
                extension(u + eye[a] + eye[b])
                - extension(u + eye[a] - eye[b])
                - extension(u - eye[a] + eye[b])
                + extension(u - eye[a] - eye[b])
            ) / (4 * step * step)
    basis = null_space(u[None, :])
    return basis.T @ hess @ basis


def brute_force_density(matrix, i):
    """D(A[i], Id[n-1-i]) from the characteristic polynomial of A."""
    m = matrix.shape[0]
    coefficients = np.poly(matrix)
    return (-1) ** i * coefficients[i] / math.comb(m, i)


def unit_vector(n, t):
    u = np.zeros(n)
    u[0] = math.sqrt(1 - t * t)
    u[-1] = t
    return u


def gate_bodies(n, seed):
    rng = np.random.default_rng(seed)
    return [ellipsoid(n, 1.5, 1.0), ellipsoid(n, 0.7, 1.2), random_perturbed_ball(n, rng), random_perturbed_ball(n, rng)]


@pytest.mark.parametrize("n", [3, 4, 5])
def test_mixed_discriminant_gate(n):
    for body in gate_bodies(n, seed=n):
        for t in SAMPLE_T:
            restricted = homogeneous_hessian(body, unit_vector(n, t))
            g1, g2 = body.hessian_eigenvalues(t)
            assert_allclose(np.sort(np.linalg.eigvalsh(restricted)), np.sort([g1] * (n - 2) + [g2]), atol=1e-6)
            for i in range(1, n):
                expected = brute_force_density(restricted, i)
                assert float(elementary_density(g1, g2, n, i)) == pytest.approx(expected, abs=1e-6)


def test_mixed_area_density_reduces_to_elementary():
    n = 5
    body = ellipsoid(n, 1.3, 0.9)
    t = np.array(SAMPLE_T)
    g1, g2 = body.hessian_eigenvalues(t)
    for i in range(n):
        bodies = [body] * i + [ball(n)] * (n - 1 - i)
        assert_allclose(mixed_area_density(bodies, t), elementary_density(g1, g2, n, i), rtol=1e-12)


def test_mixed_discriminant_is_symmetric(rng):
    n = 4
    bodies = [ellipsoid(n, 1.4, 1.0), random_perturbed_ball(n, rng), ball(n, 2.0)]
    t = np.linspace(-0.9, 0.9, 7)
    reference = mixed_area_density(bodies, t)
    assert_allclose(mixed_area_density(bodies[::-1], t), reference, rtol=1e-12)
    assert_allclose(mixed_area_density([bodies[1], bodies[0], bodies[2]], t), reference, rtol=1e-12)


def brute_force_mixed_discriminant(matrices):
    """D(A_1, ..., A_m) by inclusion-exclusion over det(sum of a subset)."""
    m = len(matrices)
    total = 0.0
    for size in range(1, m + 1):
        for subset in itertools.combinations(matrices, size):
            total += (-1) ** (m - size) * np.linalg.det(sum(subset))
    return total / math.factorial(m)


def test_mixed_area_density_of_distinct_bodies(rng):
    n = 4
    bodies = [ellipsoid(n, 1.4, 1.0), random_perturbed_ball(n, rng), perturbed_ball(n, 3, 0.1)]
    for t in SAMPLE_T:
        u = unit_vector(n, t)
        expected = brute_force_mixed_discriminant([homogeneous_hessian(body, u) for body in bodies])
        assert float(mixed_area_density(bodies, t)) == pytest.approx(expected, abs=1e-6)


def test_mixed_discriminant_of_identical_rows_is_determinant():
    eigs = np.array([2.0, 3.0, 5.0])
    assert mixed_discriminant_diagonal(np.tile(eigs, (3, 1))) == pytest.approx(30.0)


def test_ellipsoid_eigenvalues():
    n, a, b = 4, 2.0, 1.0
    body = ellipsoid(n, a, b)
    t = np.linspace(-1, 1, 11)
    phi = np.sqrt(a * a * t * t + b * b * (1 - t * t))
    g1, g2 = body.hessian_eigenvalues(t)
    assert_allclose(g1, b * b / phi, rtol=1e-13)
    assert_allclose(g2, a * a * b * b / phi ** 3, rtol=1e-13)
    assert classify_support(body).kind is SupportClass.C2PLUS


def test_classification():
    assert classify_support(ball(4)).kind is SupportClass.C2PLUS
    assert classify_support(perturbed_ball(4, 2, 0.9, check=False)).kind is SupportClass.NOT_SUPPORT
    with pytest.raises(InvalidBodyError):
        perturbed_ball(4, 2, 0.9)


def test_classifier_matches_hessian_signs(rng):
    n = 4
    bodies = [ellipsoid(n, 1.5, 1.0), random_perturbed_ball(n, rng), perturbed_ball(n, 2, 0.9, check=False)]
    for body in bodies:
        semidefinite = True
        for t in rng.uniform(-1.0, 1.0, 100):
            smallest = np.min(np.linalg.eigvalsh(homogeneous_hessian(body, unit_vector(n, t))))
            g1, g2 = body.hessian_eigenvalues(t)
            if abs(min(g1, g2)) > 1e-4:
                assert (smallest >= 0) == (min(g1, g2) >= 0)
            semidefinite &= smallest >= -1e-6
        assert semidefinite == classify_support(body).valid


@pytest.mark.parametrize("n", [3, 4, 5])
def test_second_degree_endpoints_are_support_with_zero_margin(n):
    for lam in ((n - 1) / (n + 1), -(n - 1) / (2 * n - 1)):
        result = classify_support(perturbed_ball(n, 2, lam, check=False))
        assert result.kind is SupportClass.SUPPORT
        assert result.margin == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("i", [1, 2, 3])
def test_area_density_scaling_and_centroid(i, rng):
    n = 4
    for body in (ellipsoid(n, 1.3, 0.8), random_perturbed_ball(n, rng)):
        density = area_density(body, i, kmax=32)
        scaled = area_density(body.scaled(1.7), i, kmax=32)
        assert_allclose(scaled.density.coeffs, 1.7 ** i * density.density.coeffs, rtol=1e-12, atol=1e-14)
        assert abs(density.centroid) < 1e-10
        assert abs(area_density(body.translated(0.5), i, kmax=32).centroid) < 1e-10


@pytest.mark.parametrize("n", [3, 4, 5])
def test_second_degree_transitions(n):
    lower, upper = empirical_transitions(n, 2)
    assert lower == pytest.approx(-(n - 1) / (2 * n - 1), abs=1e-6)
    assert upper == pytest.approx((n - 1) / (n + 1), abs=1e-6)
    bounds = intervals(n, 2)
    assert bounds.exact
    assert bounds.i_lower == pytest.approx(-(n - 1) / (2 * n - 1), rel=1e-10)
    assert bounds.i_upper == pytest.approx((n - 1) / (n + 1), rel=1e-12)
    assert bounds.j_upper == pytest.approx(n - 1, rel=1e-10)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_fourth_degree_transitions_inside_bounds(n):
    lower, upper = empirical_transitions(n, 4)
    bounds = intervals(n, 4)
    assert bounds.i_lower - 1e-6 <= lower < 0 < upper <= bounds.i_upper + 1e-6


@pytest.mark.parametrize("n,k", [(3, 2), (4, 4), (5, 6), (6, 8)])
def test_nonnegativity_witness(n, k):
    witness = nonnegativity_witness(n, k)
    assert -1e-12 <= witness < 1e-9


def test_translation_and_dilation():
    n = 4
    body = perturbed_ball(n, 2, 0.2)
    t = np.linspace(-1, 1, 9)
    moved = body.translated(0.3)
    for a, b in zip(moved.hessian_eigenvalues(t), body.hessian_eigenvalues(t)):
        assert_allclose(a, b, atol=1e-14)
    assert_allclose(moved.spectrum.coeffs[1], 0.3)
    big = body.scaled(2.0)
    assert_allclose(big.support(t), 2.0 * body.support(t))
    with pytest.raises(DomainError):
        body.scaled(-1.0)


def test_minkowski_sum():
    n = 3
    total = ellipsoid(n, 2.0, 1.0) + ball(n)
    t = np.linspace(-1, 1, 7)
    assert_allclose(total.support(t), ellipsoid(n, 2.0, 1.0).support(t) + 1.0)
    assert classify_support(total).kind is SupportClass.C2PLUS


def test_from_zonal_keeps_spectrum():
    h = ZonalFunction(4, [1.0, 0.0, 0.1])
    body = RevolutionBody.from_zonal(h, check=True)
    assert body.support_function(4).coeffs.tolist() == [1.0, 0.0, 0.1, 0.0, 0.0]


def test_zonoids():
    n = 4
    round_zonoid = zonoid_from_multipliers(n, [1.0, 0.0, 0.0])
    assert_allclose(round_zonoid.spectrum.coeffs[1:], 0.0, atol=1e-14)
    assert classify_support(round_zonoid).kind is SupportClass.C2PLUS
    with pytest.raises(DomainError):
        zonoid_from_multipliers(n, [1.0, 0.0, 2.0])
    signed = generalized_zonoid(n, [1.0, 0.0, -0.5], check=False)
    assert signed.kind == "generalized_zonoid"


def test_generalized_zonoid_of_discrete_measure():
    n, kmax = 5, 12
    points, masses = np.array([0.3, -0.3, 0.8, -0.8]), np.array([0.5, 0.5, -0.1, -0.1])
    mu = legendre_table(n, kmax, points) @ masses
    body = generalized_zonoid(n, mu, check=False)
    expected = spherical_radon_mixture(segment_function(n, kmax), points, masses)
    assert_allclose(body.spectrum.coeffs, expected.coeffs, rtol=1e-12, atol=1e-15)


def test_random_bodies_are_smooth_and_reproducible():
    a = random_perturbed_ball(4, np.random.default_rng(3))
    b = random_perturbed_ball(4, np.random.default_rng(3))
    assert_allclose(a.spectrum.coeffs, b.spectrum.coeffs)
    assert classify_support(a).kind is SupportClass.C2PLUS


def test_body_records():
    body = body_from_spec({"kind": "ellipsoid", "n": 4, "a": 2.0, "b": 1.0})
    assert body.to_spec() == {"kind": "ellipsoid", "n": 4, "a": 2.0, "b": 1.0}
    legendre = body_from_spec({"kind": "legendre", "n": 3, "coeffs": [1.0, 0.0, 0.1]})
    assert legendre_body(3, [1.0, 0.0, 0.1]).to_spec() == legendre.to_spec()
    with pytest.raises(UnsupportedProfileError):
        body_from_spec({"kind": "segment", "n": 4})
    with pytest.raises(ConfigError):
        body_from_spec({"kind": "cube", "n": 4})
    with pytest.raises(ConfigError):
        body_from_spec({"kind": "ellipsoid", "n": 4})
