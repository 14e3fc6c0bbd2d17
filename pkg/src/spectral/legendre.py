"""
Legendre polynomials of dimension n: P_k^n(t) = C_k^{(n-2)/2}(t) / C_k^{(n-2)/2}(1),
their derivatives, the relative maxima of |P_k^n| and the dimensions N(n,k) of
the spaces of spherical harmonics of degree k on S^{n-1}.
"""
import logging
import math

import numpy as np
from scipy.optimize import bisect

from src.utils.errors import DomainError, NumericalError

logger = logging.getLogger(__name__)

EXTREMA_GRID_POINTS = 4096
EXTREMA_TOL = 1e-12


def _check_dimension(n: int):
    if int(n) != n or n < 3:
        raise DomainError(f"dimension must be an integer >= 3, got {n}")


def _check_degree(k: int, minimum: int = 0):
    if int(k) != k or k < minimum:
        raise DomainError(f"degree must be an integer >= {minimum}, got {k}")


def _as_points(t) -> np.ndarray:
    arr = np.asarray(t, dtype=float)
    if np.any(np.abs(arr) > 1.0) or np.any(np.isnan(arr)):
        raise DomainError(f"Legendre argument outside [-1, 1]: {t}")
    return arr


def _scalar_or_array(values: np.ndarray, like):
    return float(values) if np.ndim(like) == 0 else values


def legendre_table(n: int, kmax: int, t) -> np.ndarray:
    """
    Evaluate P_0^n, ..., P_kmax^n at the points t.

    Returns an array of shape (kmax + 1,) + shape(t). Uses the recurrence
    (k+n-2) P_{k+1} = (2k+n-2) t P_k - k P_{k-1}.
    """
    _check_dimension(n)
    _check_degree(kmax)
    t = _as_points(t)
    x = t.reshape(-1)
    table = np.empty((kmax + 1, x.size))
    table[0] = 1.0
    if kmax >= 1:
        table[1] = x
    for k in range(1, kmax):
        table[k + 1] = ((2 * k + n - 2) * x * table[k] - k * table[k - 1]) / (k + n - 2)
    # exact endpoint values
    table[:, x == 1.0] = 1.0
    if np.any(x == -1.0):
        signs = (-1.0) ** np.arange(kmax + 1)
        table[:, x == -1.0] = signs[:, None]
    return table.reshape((kmax + 1,) + t.shape)


def legendre_eval(n: int, k: int, t):
    """Return P_k^n(t); vectorized over t."""
    _check_degree(k)
    values = legendre_table(n, k, t)[k]
    return _scalar_or_array(values, t)


def derivative_table(n: int, kmax: int, t, order: int = 1) -> np.ndarray:
    """
    Derivatives of P_0^n, ..., P_kmax^n of the given order (0, 1 or 2).

    Uses d/dt P_k^n = k(k+n-2)/(n-1) P_{k-1}^{n+2}, applied `order` times.
    """
    if order not in (0, 1, 2):
        raise DomainError(f"derivative order must be 0, 1 or 2, got {order}")
    _check_dimension(n)
    t = _as_points(t)
    if order == 0:
        return legendre_table(n, kmax, t)

    out = np.zeros((kmax + 1,) + t.shape)
    if kmax < order:
        return out
    shifted = legendre_table(n + 2 * order, kmax - order, t)
    k = np.arange(kmax + 1, dtype=float)
    factor = k * (k + n - 2) / (n - 1)
    if order == 2:
        factor = factor * (k - 1) * (k + n - 1) / (n + 1)
    out[order:] = factor[order:].reshape((-1,) + (1,) * t.ndim) * shifted
    return out


def legendre_derivative(n: int, k: int, t):
    """First derivative of P_k^n at t."""
    _check_degree(k)
    values = derivative_table(n, k, t, order=1)[k]
    return _scalar_or_array(values, t)


def legendre_second_derivative(n: int, k: int, t):
    """Second derivative of P_k^n at t."""
    _check_degree(k)
    values = derivative_table(n, k, t, order=2)[k]
    return _scalar_or_array(values, t)


def laplacian_eigenvalue(n: int, k: int) -> int:
    """Eigenvalue of the spherical Laplacian on degree-k harmonics of S^{n-1}."""
    _check_dimension(n)
    _check_degree(k)
    return -k * (k + n - 2)


def ode_residual(n: int, k: int, t):
    """(1-t^2) P'' - (n-1) t P' + k(k+n-2) P, which vanishes identically."""
    t_arr = _as_points(t)
    table = [derivative_table(n, k, t_arr, order=o)[k] for o in (0, 1, 2)]
    residual = (1 - t_arr ** 2) * table[2] - (n - 1) * t_arr * table[1] - laplacian_eigenvalue(n, k) * table[0]
    return _scalar_or_array(residual, t)


def critical_points(n: int, k: int) -> list[float]:
    """
    Critical points of P_k^n in [0, 1), in decreasing order.

    They are bracketed by sign changes of P' on a grid uniform in
    arccos(t), then refined by bisection. For even k the critical point t = 0
    is exact.
    """
    _check_dimension(n)
    _check_degree(k, minimum=2)

    # t from 1 down to (just above) 0
    grid = np.cos(np.linspace(0.0, 0.5 * np.pi, EXTREMA_GRID_POINTS))[:-1]
    slope = derivative_table(n, k, grid, order=1)[k]

    def dp(x):
        return legendre_derivative(n, k, x)

    critical = []
    for j in range(len(grid) - 1):
        if slope[j] == 0.0:
            critical.append(float(grid[j]))
        elif slope[j] * slope[j + 1] < 0.0:
            critical.append(bisect(dp, grid[j + 1], grid[j], xtol=EXTREMA_TOL))
    if k % 2 == 0:
        critical.append(0.0)

    expected = k // 2
    if len(critical) != expected:
        raise NumericalError(
            f"found {len(critical)} critical points of P_{k}^{n} in [0, 1), expected {expected}"
        )
    critical.sort(reverse=True)
    return critical


def relative_maxima(n: int, k: int) -> list[float]:
    """
    Successive relative maxima nu_k^n[1] > nu_k^n[2] > ... of |P_k^n(t)| as t
    decreases from 1 to 0.
    """
    return [abs(legendre_eval(n, k, x)) for x in critical_points(n, k)]


def harmonic_dimension(n: int, k: int) -> int:
    """N(n,k) = (n+2k-2)/(n+k-2) * binom(n+k-2, n-2), in exact integer arithmetic."""
    _check_dimension(n)
    _check_degree(k)
    numerator = (n + 2 * k - 2) * math.comb(n + k - 2, n - 2)
    value, remainder = divmod(numerator, n + k - 2)
    if remainder:
        raise NumericalError(f"N({n},{k}) is not an integer: {numerator}/{n + k - 2}")
    return value


def harmonic_dimensions(n: int, kmax: int) -> np.ndarray:
    """N(n,0..kmax) as floats; overflow of the float conversion is reported."""
    values = []
    for k in range(kmax + 1):
        exact = harmonic_dimension(n, k)
        try:
            values.append(float(exact))
        except OverflowError as e:
            raise NumericalError(f"N({n},{k}) does not fit a double") from e
    return np.array(values)
