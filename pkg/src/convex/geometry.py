"""
Mixed volumes of bodies of revolution,

    V(K_1, K[i], B[n-1-i]) = (1/n) int h(K_1, u) s_i(K, u) du,

intrinsic volumes, and the inequalities used to reduce the class of
minimizers of psi_i(K) = V_{i+1}(Phi_i K) / V_{i+1}(K)^i to fixed points of
Phi_i^2.
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from src.convex.body import RevolutionBody, ball, classify_support, density_at_nodes, support_at_nodes
from src.spectral.quadrature import ball_volume, build_rule, default_node_count, sphere_area
from src.spectral.zonal import DEFAULT_KMAX, ZonalFunction, box_multipliers
from src.utils.errors import DomainError, InvalidBodyError
from src.valuation.valuation import MinkowskiValuation, apply

logger = logging.getLogger(__name__)

HOMOTHETY_TOL = 1e-8

Body = Union[RevolutionBody, ZonalFunction]


def _as_body(K: Body, label: str, check: bool) -> RevolutionBody:
    body = RevolutionBody.from_zonal(K) if isinstance(K, ZonalFunction) else K
    if check:
        result = classify_support(body)
        if not result.valid:
            raise InvalidBodyError(f"{label} is not a support function (margin {result.margin:.3e})")
    return body


def mixed_volume(K1: Body, K: Body, i: int, kmax: int = DEFAULT_KMAX, check: bool = True) -> float:
    """V(K1, K[i], B[n-1-i])."""
    K1 = _as_body(K1, "K1", check)
    K = _as_body(K, "K", check)
    if K1.n != K.n:
        raise DomainError(f"dimension mismatch: {K1.n} != {K.n}")
    if not 0 <= i <= K.n - 1:
        raise DomainError(f"mixed_volume needs 0 <= i <= {K.n - 1}, got {i}")
    rule = build_rule(K.n, default_node_count(kmax))
    return rule.integrate(support_at_nodes(K1, rule) * density_at_nodes(K, i, rule)) / K.n


def intrinsic_volume(K: Body, i: int, kmax: int = DEFAULT_KMAX, check: bool = True) -> float:
    """V_i(K) = binom(n, i) / kappa_{n-i} * V(K[i], B[n-i])."""
    K = _as_body(K, "K", check)
    n = K.n
    if not 0 <= i <= n:
        raise DomainError(f"intrinsic_volume needs 0 <= i <= {n}, got {i}")
    if i == n:
        mixed = mixed_volume(K, K, n - 1, kmax, check=False)
    elif i == 0:
        mixed = ball_volume(n)
    else:
        # V(K[i], B[n-i]) = V(B, K[i], B[n-1-i])
        mixed = mixed_volume(ball(n), K, i, kmax, check=False)
    return math.comb(n, i) / ball_volume(n - i) * mixed


def _image_body(val: MinkowskiValuation, K: RevolutionBody, kmax: int, label: str) -> RevolutionBody:
    h = apply(val, K, kmax, check=False)
    return _as_body(h, label, check=True)


def psi_ratio(val: MinkowskiValuation, K: Body, kmax: Optional[int] = None) -> float:
    """V_{i+1}(Phi_i K) / V_{i+1}(K)^i; invariant under dilation and translation."""
    kmax = val.kmax if kmax is None else kmax
    K = _as_body(K, "K", check=True)
    image = _image_body(val, K, kmax, "Phi_i K")
    j = val.i + 1
    return intrinsic_volume(image, j, kmax, check=False) / intrinsic_volume(K, j, kmax, check=False) ** val.i


def homothety_distance(h1: ZonalFunction, h2: ZonalFunction) -> float:
    """
    Largest coefficient difference after scaling both to mean width 2,
    ignoring degree 1 (translations along the axis).
    """
    kmax = min(h1.kmax, h2.kmax)
    if not (h1.coeffs[0] > 0 and h2.coeffs[0] > 0):
        raise DomainError("homothety distance needs positive mean widths")
    a = h1.coeffs[: kmax + 1] / h1.coeffs[0]
    b = h2.coeffs[: kmax + 1] / h2.coeffs[0]
    diff = np.abs(a - b)
    if kmax >= 1:
        diff[1] = 0.0
    return float(np.max(diff))


@dataclass(frozen=True)
class ClassReductionReport:
    lhs: float
    rhs: float
    residual: float
    identity_residual: float
    homothety_distance: float

    @property
    def homothetic(self) -> bool:
        return self.homothety_distance < HOMOTHETY_TOL

    def to_dict(self) -> dict:
        return {
            "lhs": self.lhs,
            "rhs": self.rhs,
            "residual": self.residual,
            "identity_residual": self.identity_residual,
            "homothety_distance": self.homothety_distance,
            "homothetic": self.homothetic,
        }


def class_reduction_check(val: MinkowskiValuation, K: Body, kmax: Optional[int] = None) -> ClassReductionReport:
    """
    psi_i(K) >= V_{i+1}(Phi^2 K) / V_{i+1}(Phi K)^i, with equality iff Phi^2 K
    and K are homothetic. identity_residual compares
    V(Phi K, Phi K[i], B) with V(Phi^2 K, K[i], B).
    """
    kmax = val.kmax if kmax is None else kmax
    K = _as_body(K, "K", check=True)
    once = _image_body(val, K, kmax, "Phi_i K")
    twice = _image_body(val, once, kmax, "Phi_i^2 K")
    j = val.i + 1
    v_k = intrinsic_volume(K, j, kmax, check=False)
    v_once = intrinsic_volume(once, j, kmax, check=False)
    v_twice = intrinsic_volume(twice, j, kmax, check=False)
    lhs = v_once / v_k ** val.i
    rhs = v_twice / v_once ** val.i

    left = mixed_volume(once, once, val.i, kmax, check=False)
    right = mixed_volume(twice, K, val.i, kmax, check=False)
    distance = homothety_distance(twice.spectrum, K.support_function(kmax))
    return ClassReductionReport(lhs, rhs, lhs - rhs, left - right, distance)


def aleksandrov_fenchel_residual(K: Body, L: Body, i: int, kmax: int = DEFAULT_KMAX) -> float:
    """V(L, K[i], B[n-i-1])^{i+1} - V(L[i+1], B) V(K[i+1], B)^i, which is >= 0."""
    K = _as_body(K, "K", check=True)
    L = _as_body(L, "L", check=True)
    if not 1 <= i <= K.n - 1:
        raise DomainError(f"Aleksandrov-Fenchel check needs 1 <= i <= {K.n - 1}, got {i}")
    mixed = mixed_volume(L, K, i, kmax, check=False)
    return mixed ** (i + 1) - mixed_volume(L, L, i, kmax, check=False) * mixed_volume(K, K, i, kmax, check=False) ** i


@dataclass(frozen=True)
class Degree1Report:
    n: int
    residual: float
    schneider_margins: list
    printed_residual: Optional[float]
    sharp_residual: Optional[float]

    @property
    def min_schneider_margin(self) -> float:
        return min(self.schneider_margins) if self.schneider_margins else float("inf")

    def to_dict(self) -> dict:
        return {
            "residual": self.residual,
            "min_schneider_margin": self.min_schneider_margin,
            "printed_residual": self.printed_residual,
            "sharp_residual": self.sharp_residual,
        }


def degree1_check(val: MinkowskiValuation, K: Body, kmax: Optional[int] = None) -> Degree1Report:
    """
    For a degree-1 valuation:

    * V_2(Phi K) - V_2(Phi B)/V_2(B) V_2(K), which is >= 0 for every Phi;
    * margins a_0[f] - |a_k[f] box_k| for k >= 2;
    * for body generators, V(Phi K[2], B) - a_0^2/(n-1)^2 V(K[2], B) - c a_0^2/((n-1)^2 omega_n) V(K, B)^2
      with c = n(n-2) (printed_residual) and c = n^2(n-2) (sharp_residual,
      equality at balls).
    """
    if val.i != 1:
        raise DomainError(f"degree1_check needs a valuation of degree 1, got {val.i}")
    kmax = val.kmax if kmax is None else kmax
    n = val.n
    K = _as_body(K, "K", check=True)
    image = _image_body(val, K, kmax, "Phi_1 K")
    unit = ball(n)
    image_ball = _image_body(val, unit, kmax, "Phi_1 B")
    residual = intrinsic_volume(image, 2, kmax, check=False) - (
        intrinsic_volume(image_ball, 2, kmax, check=False) / intrinsic_volume(unit, 2, kmax, check=False)
    ) * intrinsic_volume(K, 2, kmax, check=False)

    a = val.multipliers() * val.scale
    a0 = float(a[0])
    k_top = min(kmax, val.kmax)
    box = box_multipliers(n, k_top)
    margins = [float(a0 - abs(a[k] * box[k])) for k in range(2, k_top + 1)]

    printed = sharp = None
    if val.body_generated:
        a0_used = float(val.multipliers()[0])
        lhs = mixed_volume(image, image, 1, kmax, check=False)
        quermass = mixed_volume(K, K, 1, kmax, check=False)
        width_term = mixed_volume(K, unit, 0, kmax, check=False) ** 2
        base = a0_used ** 2 / (n - 1) ** 2
        tail = base / sphere_area(n) * width_term
        printed = lhs - base * quermass - n * (n - 2) * tail
        sharp = lhs - base * quermass - n * n * (n - 2) * tail
    return Degree1Report(n, residual, margins, printed, sharp)
