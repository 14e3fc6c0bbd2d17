"""
Zonal functions on S^{n-1} stored as Legendre spectra

    f(u) = sum_k c_k P_k^n(e . u),        a_k^n[f] = c_k omega_n / N(n,k),

and the multiplier calculus built on them: convolution (Funk-Hecke), the
operator box_n = Id + Laplacian/(n-1), Sobolev norms, generalized spherical
Radon transforms and the cosine transform. Zonal measures enter only through
their multiplier sequences.
"""
import json
import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.special import gammaln

from src.spectral.legendre import derivative_table, harmonic_dimensions, legendre_table
from src.spectral.quadrature import (
    QuadratureRule,
    build_rule,
    build_split_rule,
    default_node_count,
    multipliers,
    sphere_area,
)
from src.utils.errors import DimensionMismatchError, DomainError

logger = logging.getLogger(__name__)

DEFAULT_KMAX = 128
EVEN_TOL = 1e-13


@lru_cache(maxsize=128)
def _dims(n: int, kmax: int) -> np.ndarray:
    dims = harmonic_dimensions(n, kmax)
    dims.setflags(write=False)
    return dims


def coefficient_scale(n: int, kmax: int) -> np.ndarray:
    """N(n,k)/omega_n: converts a_k^n[f] into the coefficient c_k."""
    return _dims(n, kmax) / sphere_area(n)


@dataclass(frozen=True, eq=False)
class ZonalFunction:
    """A zonal function, as coefficients in the basis P_k^n(e . u), k = 0..kmax."""

    n: int
    coeffs: np.ndarray

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 3:
            raise DomainError(f"dimension must be an integer >= 3, got {self.n}")
        coeffs = np.array(self.coeffs, dtype=float).reshape(-1)
        if coeffs.size == 0:
            raise DomainError("a zonal function needs at least the degree-0 coefficient")
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)

    # constructors

    @classmethod
    def from_multipliers(cls, n: int, values) -> "ZonalFunction":
        values = np.asarray(values, dtype=float)
        return cls(n, values * coefficient_scale(n, len(values) - 1))

    @classmethod
    def constant(cls, n: int, value: float = 1.0, kmax: int = DEFAULT_KMAX) -> "ZonalFunction":
        coeffs = np.zeros(kmax + 1)
        coeffs[0] = value
        return cls(n, coeffs)

    @classmethod
    def legendre_mode(cls, n: int, k: int, kmax: int = DEFAULT_KMAX, amplitude: float = 1.0) -> "ZonalFunction":
        """amplitude * P_k^n(e . u)."""
        if not 0 <= k <= kmax:
            raise DomainError(f"mode degree {k} outside 0..{kmax}")
        coeffs = np.zeros(kmax + 1)
        coeffs[k] = amplitude
        return cls(n, coeffs)

    # views

    @property
    def kmax(self) -> int:
        return len(self.coeffs) - 1

    @property
    def even(self) -> bool:
        scale = max(1.0, float(np.max(np.abs(self.coeffs))))
        odd = self.coeffs[1::2]
        return odd.size == 0 or float(np.max(np.abs(odd))) <= EVEN_TOL * scale

    def multipliers(self) -> np.ndarray:
        """a_k^n[f] = c_k omega_n / N(n,k)."""
        return self.coeffs / coefficient_scale(self.n, self.kmax)

    def __call__(self, t):
        t_arr = np.asarray(t, dtype=float)
        values = np.tensordot(self.coeffs, legendre_table(self.n, self.kmax, t_arr), axes=1)
        return float(values) if t_arr.ndim == 0 else values

    def derivative(self, t, order: int = 1):
        t_arr = np.asarray(t, dtype=float)
        table = derivative_table(self.n, self.kmax, t_arr, order=order)
        values = np.tensordot(self.coeffs, table, axes=1)
        return float(values) if t_arr.ndim == 0 else values

    def at_nodes(self, rule: QuadratureRule, order: int = 0) -> np.ndarray:
        """Values (or derivatives) at the nodes of a rule, using its cached tables."""
        _require_same_dimension(self.n, rule.n)
        return self.coeffs @ rule.legendre(self.kmax, order)

    def with_kmax(self, kmax: int) -> "ZonalFunction":
        """Truncate or zero-pad to a new truncation degree."""
        coeffs = np.zeros(kmax + 1)
        keep = min(kmax, self.kmax) + 1
        coeffs[:keep] = self.coeffs[:keep]
        return ZonalFunction(self.n, coeffs)

    def scaled(self, factor: float) -> "ZonalFunction":
        return ZonalFunction(self.n, factor * self.coeffs)

    def __add__(self, other: "ZonalFunction") -> "ZonalFunction":
        _require_same_dimension(self.n, other.n)
        kmax = min(self.kmax, other.kmax)
        return ZonalFunction(self.n, self.coeffs[: kmax + 1] + other.coeffs[: kmax + 1])

    def __sub__(self, other: "ZonalFunction") -> "ZonalFunction":
        return self + other.scaled(-1.0)

    def __neg__(self) -> "ZonalFunction":
        return self.scaled(-1.0)

    def __mul__(self, factor: float) -> "ZonalFunction":
        return self.scaled(float(factor))

    __rmul__ = __mul__

    # serialization

    def to_dict(self) -> dict:
        return {"n": int(self.n), "kmax": int(self.kmax), "coeffs": [float(c) for c in self.coeffs]}

    @classmethod
    def from_dict(cls, data: dict) -> "ZonalFunction":
        try:
            coeffs = np.asarray(data["coeffs"], dtype=float)
            n = int(data["n"])
        except (KeyError, TypeError, ValueError) as e:
            raise DomainError(f"malformed zonal function record: {e}") from e
        if "kmax" in data and int(data["kmax"]) != len(coeffs) - 1:
            raise DomainError(f"kmax {data['kmax']} does not match {len(coeffs)} coefficients")
        return cls(n, coeffs)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "ZonalFunction":
        return cls.from_dict(json.loads(text))


def _require_same_dimension(n1: int, n2: int):
    if n1 != n2:
        raise DimensionMismatchError(f"dimension mismatch: {n1} != {n2}")


def expand(n: int, phi, kmax: int = DEFAULT_KMAX, rule: Optional[QuadratureRule] = None) -> ZonalFunction:
    """
    Legendre expansion of a profile: c_k = N(n,k)/omega_n * a_k^n[phi].

    phi is a vectorized callable on [-1, 1] or its values at the nodes of `rule`.
    """
    if rule is None:
        rule = build_rule(n, default_node_count(kmax))
    _require_same_dimension(n, rule.n)
    coeffs = coefficient_scale(n, kmax) * multipliers(rule, kmax, phi)
    return ZonalFunction(n, coeffs)


def multiply(f: ZonalFunction, factors) -> ZonalFunction:
    """Apply a multiplier transformation given by its per-degree factors."""
    factors = np.asarray(factors, dtype=float)
    kmax = min(f.kmax, len(factors) - 1)
    return ZonalFunction(f.n, f.coeffs[: kmax + 1] * factors[: kmax + 1])


def convolve(mu: ZonalFunction, f: ZonalFunction) -> ZonalFunction:
    """mu * f: the degree-k component of mu is multiplied by a_k^n[f]."""
    _require_same_dimension(mu.n, f.n)
    return multiply(mu, f.multipliers())


def inner(f: ZonalFunction, g: ZonalFunction) -> float:
    """L^2(S^{n-1}) inner product by Parseval."""
    _require_same_dimension(f.n, g.n)
    kmax = min(f.kmax, g.kmax)
    return float(np.sum(f.coeffs[: kmax + 1] * g.coeffs[: kmax + 1] / coefficient_scale(f.n, kmax)))


def l2_norm(f: ZonalFunction) -> float:
    return float(np.sqrt(inner(f, f)))


def orthogonal_projection(f: ZonalFunction, k: int) -> ZonalFunction:
    """pi_k f."""
    if not 0 <= k <= f.kmax:
        raise DomainError(f"degree {k} outside 0..{f.kmax}")
    coeffs = np.zeros_like(f.coeffs)
    coeffs[k] = f.coeffs[k]
    return ZonalFunction(f.n, coeffs)


def mean_width(h: ZonalFunction) -> float:
    """w = (2/omega_n) int h = 2 c_0."""
    return 2.0 * float(h.coeffs[0])


def box_multipliers(n: int, kmax: int) -> np.ndarray:
    k = np.arange(kmax + 1, dtype=float)
    return (1.0 - k) * (k + n - 1) / (n - 1)


def box_n(f: ZonalFunction) -> ZonalFunction:
    """box_n f = f + Laplacian(f)/(n-1); sends h(K, .) to the density of S_1(K, .)."""
    return multiply(f, box_multipliers(f.n, f.kmax))


def laplacian(f: ZonalFunction) -> ZonalFunction:
    k = np.arange(f.kmax + 1, dtype=float)
    return multiply(f, -k * (k + f.n - 2))


def sobolev_norm(f: ZonalFunction, s: int) -> float:
    """||f||_{H^s}^2 = sum_k (1+k^2)^s ||pi_k f||^2, stated for even f."""
    if int(s) != s or s < 0:
        raise DomainError(f"Sobolev order must be an integer >= 0, got {s}")
    if not f.even:
        raise DomainError("the Sobolev identity is used for even functions only")
    k = np.arange(f.kmax + 1, dtype=float)
    squares = f.coeffs ** 2 / coefficient_scale(f.n, f.kmax)
    return float(np.sqrt(np.sum((1.0 + k ** 2) ** s * squares)))


def radon_t(f: ZonalFunction, t: float) -> ZonalFunction:
    """Generalized spherical Radon transform R_t; a_k^n[R_t] = P_k^n(t)."""
    return multiply(f, legendre_table(f.n, f.kmax, float(t)))


def spherical_radon_mixture(f: ZonalFunction, points, masses) -> ZonalFunction:
    """T_mu f = int R_t f dmu(t) for a discrete measure mu = sum masses_j delta_{points_j} on [-1, 1]."""
    points = np.asarray(points, dtype=float)
    masses = np.asarray(masses, dtype=float)
    if points.shape != masses.shape:
        raise DomainError("points and masses must have the same length")
    factors = legendre_table(f.n, f.kmax, points) @ masses
    return multiply(f, factors)


@lru_cache(maxsize=64)
def cosine_multipliers(n: int, kmax: int) -> np.ndarray:
    """a_k^n[C] = int |e . u| P_k^n(e . u) du by split quadrature; odd degrees are 0."""
    rule = build_split_rule(n, default_node_count(kmax))
    values = multipliers(rule, kmax, np.abs)
    values[1::2] = 0.0
    values.setflags(write=False)
    return values


def cosine_multiplier_closed_form(n: int, k: int) -> float:
    """
    Closed form matching the quadrature values:

        a_0 = 2 omega_{n-1}/(n-1),
        a_k = 2 omega_{n-1} (-1)^{(k-2)/2} (k-2)! Gamma(a+1) / (2^k Gamma(k/2) Gamma(k/2+a+2)),

    for even k >= 2 with a = (n-3)/2, and 0 for odd k.
    """
    if k < 0:
        raise DomainError(f"degree must be >= 0, got {k}")
    if k % 2:
        return 0.0
    area = sphere_area(n - 1)
    if k == 0:
        return 2.0 * area / (n - 1)
    a = 0.5 * (n - 3)
    log_mag = gammaln(k - 1) + gammaln(a + 1) - k * np.log(2.0) - gammaln(0.5 * k) - gammaln(0.5 * k + a + 2)
    sign = -1.0 if ((k - 2) // 2) % 2 else 1.0
    return float(2.0 * area * sign * np.exp(log_mag))


def segment_function(n: int, kmax: int = DEFAULT_KMAX) -> ZonalFunction:
    """|e . u|, the support function of the segment [-e, e], as a spectrum."""
    return ZonalFunction.from_multipliers(n, cosine_multipliers(n, kmax))


def cosine_transform(f: ZonalFunction) -> ZonalFunction:
    """C f = f * |e . .|."""
    return multiply(f, cosine_multipliers(f.n, f.kmax))


def decay_exponent(values, kmin: int = 8, kmax: int = 64, even_only: bool = True) -> float:
    """
    Least-squares slope of log|a_k| against log k over kmin <= k <= kmax.

    Degrees where |a_k| is at the rounding floor are skipped.
    """
    values = np.asarray(values.multipliers() if isinstance(values, ZonalFunction) else values, dtype=float)
    k = np.arange(len(values))
    mask = (k >= kmin) & (k <= kmax)
    if even_only:
        mask &= k % 2 == 0
    floor = 1e-14 * max(1e-300, float(np.max(np.abs(values))))
    mask &= np.abs(values) > floor
    if np.count_nonzero(mask) < 2:
        raise DomainError(f"not enough nonzero multipliers in [{kmin}, {kmax}] for a slope fit")
    slope, _ = np.polyfit(np.log(k[mask]), np.log(np.abs(values[mask])), 1)
    return float(slope)
