"""
Zonal integration on S^{n-1}: for a profile phi on [-1, 1],

    int_{S^{n-1}} phi(u . e) du = omega_{n-1} int_{-1}^{1} phi(t) (1-t^2)^{(n-3)/2} dt,

evaluated with Gauss-Jacobi rules (alpha = beta = (n-3)/2), and extraction of
the multipliers a_k^n[phi] = int phi(u . e) P_k^n(u . e) du.
"""
import logging
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import gammaln, roots_jacobi

from src.spectral.legendre import derivative_table, legendre_table
from src.utils.errors import DomainError, QuadratureError

logger = logging.getLogger(__name__)

EXTRA_NODES = 32


def sphere_area(n: int) -> float:
    """omega_n = 2 pi^{n/2} / Gamma(n/2), the surface area of S^{n-1}."""
    if n < 1:
        raise DomainError(f"sphere_area needs n >= 1, got {n}")
    return float(2.0 * np.exp(0.5 * n * np.log(np.pi) - gammaln(0.5 * n)))


def ball_volume(n: int) -> float:
    """kappa_n = pi^{n/2} / Gamma(n/2 + 1), the volume of the unit ball in R^n."""
    if n < 0:
        raise DomainError(f"ball_volume needs n >= 0, got {n}")
    return float(np.exp(0.5 * n * np.log(np.pi) - gammaln(0.5 * n + 1.0)))


def default_node_count(kmax: int) -> int:
    return kmax + EXTRA_NODES


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Nodes in (-1, 1) and positive weights that already include omega_{n-1}."""

    n: int
    nodes: np.ndarray
    weights: np.ndarray
    _tables: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def m(self) -> int:
        return len(self.nodes)

    def legendre(self, kmax: int, order: int = 0) -> np.ndarray:
        """Cached table of P_k^n (or its derivatives) at the nodes, shape (kmax+1, m)."""
        key = (kmax, order)
        if key not in self._tables:
            if order == 0:
                table = legendre_table(self.n, kmax, self.nodes)
            else:
                table = derivative_table(self.n, kmax, self.nodes, order=order)
            table.setflags(write=False)
            self._tables[key] = table
        return self._tables[key]

    def integrate(self, values: np.ndarray) -> float:
        return float(np.dot(self.weights, values))


def _check_rule_args(n: int, m: int):
    if int(n) != n or n < 3:
        raise DomainError(f"dimension must be an integer >= 3, got {n}")
    if int(m) != m or m < 1:
        raise DomainError(f"node count must be >= 1, got {m}")


def _validated(n: int, nodes: np.ndarray, weights: np.ndarray) -> QuadratureRule:
    if not (np.all(np.isfinite(nodes)) and np.all(np.isfinite(weights))) or np.any(weights <= 0):
        raise QuadratureError(f"Gauss-Jacobi rule for n={n} with {len(nodes)} nodes did not converge")
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(n=n, nodes=nodes, weights=weights)


@lru_cache(maxsize=64)
def build_rule(n: int, m: int) -> QuadratureRule:
    """
    m-point Gauss rule for the weight omega_{n-1} (1-t^2)^{(n-3)/2} on [-1, 1].

    Exact for polynomials of degree <= 2m - 1. scipy's roots_jacobi performs the
    Golub-Welsch eigen decomposition of the Jacobi matrix followed by Newton
    polishing.
    """
    logger.debug("building Gauss-Jacobi rule n=%d m=%d", n, m)
    _check_rule_args(n, m)
    alpha = 0.5 * (n - 3)
    try:
        nodes, weights = roots_jacobi(m, alpha, alpha)
    except (ValueError, np.linalg.LinAlgError) as e:
        raise QuadratureError(f"Gauss-Jacobi rule for n={n}, m={m} failed: {e}") from e
    return _validated(n, np.asarray(nodes, float), np.asarray(weights, float) * sphere_area(n - 1))


@lru_cache(maxsize=64)
def build_split_rule(n: int, m: int) -> QuadratureRule:
    """
    2m-point rule made of one Gauss-Jacobi rule on each of [-1, 0] and [0, 1].

    For odd n it is exact for profiles that are polynomial on each half, such as
    |t| P_k^n(t); for even n it is spectrally accurate for them.
    On [0, 1] with t = (1+s)/2 the weight becomes 2^{-alpha} (1-s)^alpha (1+t)^alpha;
    (1-s)^alpha is handled by the rule and (1+t)^alpha is smooth.
    """
    _check_rule_args(n, m)
    alpha = 0.5 * (n - 3)
    try:
        s, v = roots_jacobi(m, alpha, 0.0)
    except (ValueError, np.linalg.LinAlgError) as e:
        raise QuadratureError(f"split Gauss-Jacobi rule for n={n}, m={m} failed: {e}") from e
    t = 0.5 * (1.0 + s)
    w = v * 0.5 ** (alpha + 1.0) * (1.0 + t) ** alpha
    nodes = np.concatenate([-t[::-1], t])
    weights = np.concatenate([w[::-1], w]) * sphere_area(n - 1)
    return _validated(n, nodes, weights)


def _profile_values(rule: QuadratureRule, phi) -> np.ndarray:
    values = phi(rule.nodes) if callable(phi) else np.asarray(phi, dtype=float)
    values = np.broadcast_to(np.asarray(values, dtype=float), rule.nodes.shape)
    return values


def zonal_integral(rule: QuadratureRule, phi) -> float:
    """int_{S^{n-1}} phi(u . e) du; phi is a vectorized callable or values at the nodes."""
    return rule.integrate(_profile_values(rule, phi))


def multiplier(rule: QuadratureRule, k: int, phi) -> float:
    """The number a_k^n[phi] = int phi(u . e) P_k^n(u . e) du."""
    if k < 0:
        raise DomainError(f"degree must be >= 0, got {k}")
    return rule.integrate(_profile_values(rule, phi) * rule.legendre(k)[k])


def multipliers(rule: QuadratureRule, kmax: int, phi) -> np.ndarray:
    """a_0^n[phi], ..., a_kmax^n[phi] in one pass."""
    weighted = rule.weights * _profile_values(rule, phi)
    return rule.legendre(kmax) @ weighted
