"""
Convex bodies of revolution about the axis e, given by their support profile

    h(K, u) = phi(u . e) on S^{n-1}.

The Hessian of the 1-homogeneous extension restricted to u-perp has the
eigenvalue g1 = phi - t phi' (multiplicity n-2) and g2 = (1-t^2) phi'' + g1
(multiplicity 1), t = u . e. Support-function validity, the area-measure
densities s_i and the mixed area densities all reduce to g1 and g2.
"""
import itertools
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import bisect

from src.spectral.legendre import critical_points, legendre_eval, relative_maxima
from src.spectral.quadrature import QuadratureRule, build_rule, default_node_count
from src.spectral.zonal import DEFAULT_KMAX, ZonalFunction, cosine_multipliers, expand
from src.utils.errors import (
    ConfigError,
    DimensionMismatchError,
    DomainError,
    InvalidBodyError,
    NumericalError,
    UnsupportedProfileError,
)

logger = logging.getLogger(__name__)

C2PLUS_TOL = 1e-9
SUPPORT_TOL = -1e-12
CLASSIFY_POINTS = 4097
CENTROID_TOL = 1e-8


def classification_grid(points: int = CLASSIFY_POINTS) -> np.ndarray:
    """Grid on [-1, 1] uniform in arccos(t); contains -1, 0 and 1 exactly."""
    grid = np.cos(np.linspace(np.pi, 0.0, points))
    grid[0], grid[-1] = -1.0, 1.0
    if points % 2:
        grid[points // 2] = 0.0
    return grid


class SupportClass(str, Enum):
    NOT_SUPPORT = "NotSupport"
    SUPPORT = "Support"
    C2PLUS = "C2Plus"


@dataclass(frozen=True)
class Classification:
    kind: SupportClass
    min_g1: float
    min_g2: float

    @property
    def margin(self) -> float:
        return min(self.min_g1, self.min_g2)

    @property
    def valid(self) -> bool:
        return self.kind is not SupportClass.NOT_SUPPORT


@dataclass(frozen=True, eq=False)
class RevolutionBody:
    """
    A body of revolution through its profile and the profile's first two
    derivatives. Bodies whose profile is a Legendre polynomial keep the spectrum.
    """

    n: int
    phi: Callable = field(repr=False)
    dphi: Callable = field(repr=False)
    ddphi: Callable = field(repr=False)
    kind: str = "derived"
    params: dict = field(default_factory=dict)
    spectrum: Optional[ZonalFunction] = field(default=None, repr=False)

    def support(self, t):
        return self.phi(np.asarray(t, dtype=float))

    def hessian_eigenvalues(self, t):
        """(g1, g2) = (phi - t phi', (1-t^2) phi'' + phi - t phi')."""
        t = np.asarray(t, dtype=float)
        g1 = self.phi(t) - t * self.dphi(t)
        g2 = (1.0 - t ** 2) * self.ddphi(t) + g1
        return g1, g2

    def support_function(self, kmax: int = DEFAULT_KMAX, rule: Optional[QuadratureRule] = None) -> ZonalFunction:
        """h(K, .) as a Legendre spectrum."""
        if self.spectrum is not None:
            return self.spectrum.with_kmax(kmax)
        return expand(self.n, self.phi, kmax, rule)

    def scaled(self, factor: float) -> "RevolutionBody":
        """The dilate factor * K."""
        if factor <= 0:
            raise DomainError(f"dilation factor must be positive, got {factor}")
        spectrum = None if self.spectrum is None else self.spectrum.scaled(factor)
        return RevolutionBody(
            self.n,
            lambda t: factor * self.phi(t),
            lambda t: factor * self.dphi(t),
            lambda t: factor * self.ddphi(t),
            spectrum=spectrum,
        )

    def translated(self, c: float) -> "RevolutionBody":
        """K + c e: the profile gains c t."""
        spectrum = None
        if self.spectrum is not None:
            coeffs = np.array(self.spectrum.with_kmax(max(1, self.spectrum.kmax)).coeffs)
            coeffs[1] += c
            spectrum = ZonalFunction(self.n, coeffs)
        return RevolutionBody(
            self.n,
            lambda t: self.phi(t) + c * t,
            lambda t: self.dphi(t) + c,
            self.ddphi,
            spectrum=spectrum,
        )

    def __add__(self, other: "RevolutionBody") -> "RevolutionBody":
        """Minkowski sum: profiles add."""
        if self.n != other.n:
            raise DimensionMismatchError(f"dimension mismatch: {self.n} != {other.n}")
        spectrum = None
        if self.spectrum is not None and other.spectrum is not None:
            kmax = max(self.spectrum.kmax, other.spectrum.kmax)
            spectrum = self.spectrum.with_kmax(kmax) + other.spectrum.with_kmax(kmax)
        return RevolutionBody(
            self.n,
            lambda t: self.phi(t) + other.phi(t),
            lambda t: self.dphi(t) + other.dphi(t),
            lambda t: self.ddphi(t) + other.ddphi(t),
            spectrum=spectrum,
        )

    def displaced(self, direction: "RevolutionBody", eps: float) -> "RevolutionBody":
        """The profile phi + eps psi for a second profile psi; eps may be negative."""
        if self.n != direction.n:
            raise DimensionMismatchError(f"dimension mismatch: {self.n} != {direction.n}")
        spectrum = None
        if self.spectrum is not None and direction.spectrum is not None:
            kmax = max(self.spectrum.kmax, direction.spectrum.kmax)
            spectrum = self.spectrum.with_kmax(kmax) + direction.spectrum.with_kmax(kmax).scaled(eps)
        return RevolutionBody(
            self.n,
            lambda t: self.phi(t) + eps * direction.phi(t),
            lambda t: self.dphi(t) + eps * direction.dphi(t),
            lambda t: self.ddphi(t) + eps * direction.ddphi(t),
            spectrum=spectrum,
        )

    def to_spec(self) -> dict:
        if self.kind == "derived":
            if self.spectrum is None:
                raise ConfigError("derived bodies without a spectrum have no JSON record")
            return {"kind": "legendre", "n": self.n, "coeffs": [float(c) for c in self.spectrum.coeffs]}
        return {"kind": self.kind, "n": self.n, **self.params}

    @classmethod
    def from_zonal(cls, h: ZonalFunction, check: bool = False) -> "RevolutionBody":
        """The body (or, with check=False, just the profile) with support spectrum h."""
        body = cls(
            h.n,
            h,
            lambda t: h.derivative(t, 1),
            lambda t: h.derivative(t, 2),
            spectrum=h,
        )
        if check:
            _require_valid(body)
        return body


def _require_valid(body: RevolutionBody, label: str = "body") -> Classification:
    result = classify_support(body)
    if not result.valid:
        raise InvalidBodyError(
            f"{label} is not a support function: min g1 = {result.min_g1:.3e}, min g2 = {result.min_g2:.3e}"
        )
    return result


def classify_support(body: RevolutionBody, grid: Optional[np.ndarray] = None) -> Classification:
    """
    Classify a profile as NotSupport, Support or C2Plus from the signs of g1
    and g2 on a dense grid including t = -1, 0, 1.
    """
    if grid is None:
        grid = classification_grid()
    g1, g2 = body.hessian_eigenvalues(grid)
    if not (np.all(np.isfinite(g1)) and np.all(np.isfinite(g2))):
        raise UnsupportedProfileError("profile derivatives are not finite on [-1, 1]")
    min_g1, min_g2 = float(np.min(g1)), float(np.min(g2))
    margin = min(min_g1, min_g2)
    if margin > C2PLUS_TOL:
        kind = SupportClass.C2PLUS
    elif margin > SUPPORT_TOL:
        kind = SupportClass.SUPPORT
    else:
        kind = SupportClass.NOT_SUPPORT
    return Classification(kind, min_g1, min_g2)


def hessian_eigenvalues(body: RevolutionBody, t):
    return body.hessian_eigenvalues(t)


def elementary_density(g1, g2, n: int, i: int):
    """
    s_i = [C(n-2,i) g1^i + C(n-2,i-1) g1^{i-1} g2] / C(n-1,i): the normalized
    i-th elementary symmetric function of the eigenvalues (g1 x (n-2), g2).
    """
    if not 0 <= i <= n - 1:
        raise DomainError(f"area measure order must lie in 0..{n - 1}, got {i}")
    g1 = np.asarray(g1, dtype=float)
    g2 = np.asarray(g2, dtype=float)
    total = np.zeros(np.broadcast(g1, g2).shape)
    if i <= n - 2:
        total = total + math.comb(n - 2, i) * g1 ** i
    if i >= 1:
        total = total + math.comb(n - 2, i - 1) * g1 ** (i - 1) * g2
    return total / math.comb(n - 1, i)


@dataclass(frozen=True)
class AreaDensity:
    """Density s_i(K, .) of the area measure S_i(K, .) as a zonal spectrum."""

    n: int
    i: int
    density: ZonalFunction

    @property
    def centroid(self) -> float:
        """First Legendre coefficient; zero for every convex body."""
        return float(self.density.coeffs[1]) if self.density.kmax >= 1 else 0.0


def support_at_nodes(body: RevolutionBody, rule: QuadratureRule) -> np.ndarray:
    if body.spectrum is not None:
        return body.spectrum.at_nodes(rule)
    return body.support(rule.nodes)


def eigenvalues_at_nodes(body: RevolutionBody, rule: QuadratureRule):
    """(g1, g2) at the nodes of a rule; spectral bodies use the rule's cached tables."""
    if body.spectrum is None:
        return body.hessian_eigenvalues(rule.nodes)
    t = rule.nodes
    phi, dphi, ddphi = (body.spectrum.at_nodes(rule, order) for order in (0, 1, 2))
    g1 = phi - t * dphi
    return g1, (1.0 - t ** 2) * ddphi + g1


def density_at_nodes(body: RevolutionBody, i: int, rule: QuadratureRule) -> np.ndarray:
    g1, g2 = eigenvalues_at_nodes(body, rule)
    return elementary_density(g1, g2, body.n, i)


def area_density(
    body: RevolutionBody,
    i: int,
    kmax: int = DEFAULT_KMAX,
    rule: Optional[QuadratureRule] = None,
    check: bool = True,
) -> AreaDensity:
    """s_i(K, .) evaluated at the quadrature nodes and expanded in P_k^n."""
    if check:
        _require_valid(body)
    if rule is None:
        rule = build_rule(body.n, default_node_count(kmax))
    values = density_at_nodes(body, i, rule)
    result = AreaDensity(body.n, i, expand(body.n, values, kmax, rule))
    if abs(result.centroid) > CENTROID_TOL * max(1.0, abs(float(result.density.coeffs[0]))):
        logger.warning("S_%d has centroid %.3e; the quadrature under-resolves the body", i, result.centroid)
    return result


def mixed_discriminant_diagonal(eigenvalues: np.ndarray) -> np.ndarray:
    """
    Mixed discriminant of simultaneously diagonal matrices: per(Lambda)/m!,
    where row j of Lambda holds the eigenvalues of the j-th matrix. Extra
    trailing axes are broadcast. The permanent uses Ryser's formula.
    """
    lam = np.asarray(eigenvalues, dtype=float)
    m = lam.shape[0]
    if lam.shape[1] != m:
        raise DomainError(f"eigenvalue matrix must be square, got {lam.shape[:2]}")
    total = np.zeros(lam.shape[2:])
    for size in range(1, m + 1):
        for cols in itertools.combinations(range(m), size):
            row_sums = lam[:, list(cols)].sum(axis=1)
            total = total + (-1) ** size * np.prod(row_sums, axis=0)
    return (-1) ** m * total / math.factorial(m)


def mixed_area_density(bodies: Sequence[RevolutionBody], t):
    """Density of the mixed area measure S(K_1, ..., K_{n-1}, .) at t = u . e."""
    if not bodies:
        raise DomainError("mixed_area_density needs n-1 bodies")
    n = bodies[0].n
    if any(b.n != n for b in bodies):
        raise DimensionMismatchError("all bodies must share the dimension")
    if len(bodies) != n - 1:
        raise DomainError(f"mixed_area_density needs exactly {n - 1} bodies, got {len(bodies)}")
    t = np.asarray(t, dtype=float)
    lam = np.empty((n - 1, n - 1) + t.shape)
    for j, body in enumerate(bodies):
        g1, g2 = body.hessian_eigenvalues(t)
        lam[j, 0] = g2
        lam[j, 1:] = g1
    values = mixed_discriminant_diagonal(lam)
    return float(values) if t.ndim == 0 else values


# constructors


def _finish(body: RevolutionBody, check: bool) -> RevolutionBody:
    if check:
        _require_valid(body, label=f"{body.kind} body {body.params}")
    return body


def _polynomial_body(n: int, coeffs, kind: str, params: dict, check: bool) -> RevolutionBody:
    spectrum = ZonalFunction(n, coeffs)
    body = RevolutionBody(
        n,
        spectrum,
        lambda t: spectrum.derivative(t, 1),
        lambda t: spectrum.derivative(t, 2),
        kind=kind,
        params=params,
        spectrum=spectrum,
    )
    return _finish(body, check)


def ball(n: int, radius: float = 1.0) -> RevolutionBody:
    if radius <= 0:
        raise DomainError(f"ball radius must be positive, got {radius}")
    params = {} if radius == 1.0 else {"radius": float(radius)}
    return _polynomial_body(n, [radius], "ball", params, check=False)


def ellipsoid(n: int, a: float, b: float) -> RevolutionBody:
    """Semi-axis a along e and b in e-perp: phi(t) = sqrt(a^2 t^2 + b^2 (1-t^2))."""
    if a <= 0 or b <= 0:
        raise DomainError(f"ellipsoid semi-axes must be positive, got a={a}, b={b}")
    d = a * a - b * b

    def phi(t):
        return np.sqrt(b * b + d * t * t)

    def dphi(t):
        return d * t / phi(t)

    def ddphi(t):
        return d * b * b / phi(t) ** 3

    return RevolutionBody(n, phi, dphi, ddphi, kind="ellipsoid", params={"a": float(a), "b": float(b)})


def perturbed_ball(n: int, k: int, lam: float, check: bool = True) -> RevolutionBody:
    """1 + lam P_k^n(t)."""
    if k < 0:
        raise DomainError(f"perturbation degree must be >= 0, got {k}")
    coeffs = np.zeros(max(k, 0) + 1)
    coeffs[0] = 1.0
    coeffs[k] += lam
    return _polynomial_body(n, coeffs, "perturbed_ball", {"k": int(k), "lambda": float(lam)}, check)


def legendre_body(n: int, coeffs, check: bool = True) -> RevolutionBody:
    """Profile sum_k coeffs[k] P_k^n(t)."""
    coeffs = [float(c) for c in coeffs]
    return _polynomial_body(n, coeffs, "legendre", {"coeffs": coeffs}, check)


def _zonoid_coeffs(n: int, mu) -> np.ndarray:
    mu = np.asarray(mu, dtype=float)
    support_multipliers = cosine_multipliers(n, len(mu) - 1) * mu
    return ZonalFunction.from_multipliers(n, support_multipliers).coeffs


def zonoid_from_multipliers(n: int, mu, check: bool = True) -> RevolutionBody:
    """
    Zonoid Z^mu of a non-negative even zonal measure mu given by a_k^n[mu]:
    a_k^n[Z^mu] = a_k^n[C] a_k^n[mu].
    """
    mu = [float(m) for m in mu]
    if not mu or mu[0] <= 0:
        raise DomainError("a non-negative generating measure needs a_0[mu] > 0")
    if any(abs(m) > mu[0] * (1 + 1e-12) for m in mu):
        raise DomainError("|a_k[mu]| <= a_0[mu] fails, so mu is not a non-negative measure")
    return _polynomial_body(n, _zonoid_coeffs(n, mu), "zonoid", {"mu": mu}, check)


def generalized_zonoid(n: int, mu, check: bool = True) -> RevolutionBody:
    """Generalized zonoid of a signed even zonal measure; convexity is checked, not assumed."""
    mu = [float(m) for m in mu]
    if not mu:
        raise DomainError("empty measure spectrum")
    return _polynomial_body(n, _zonoid_coeffs(n, mu), "generalized_zonoid", {"mu": mu}, check)


def body_from_spec(record: dict) -> RevolutionBody:
    """Build a body from a JSON record such as {"kind": "ellipsoid", "n": 4, "a": 2.0, "b": 1.0}."""
    try:
        kind = record["kind"]
        n = int(record["n"])
        if kind == "ball":
            return ball(n, float(record.get("radius", 1.0)))
        if kind == "ellipsoid":
            return ellipsoid(n, float(record["a"]), float(record["b"]))
        if kind == "perturbed_ball":
            return perturbed_ball(n, int(record["k"]), float(record["lambda"]), check=record.get("check", True))
        if kind == "legendre":
            return legendre_body(n, record["coeffs"], check=record.get("check", True))
        if kind == "zonoid":
            return zonoid_from_multipliers(n, record["mu"])
        if kind == "generalized_zonoid":
            return generalized_zonoid(n, record["mu"])
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"malformed body record {record}: {e}") from e
    if kind == "segment":
        raise UnsupportedProfileError("the segment profile |t| is not C^2; use it as a generator only")
    raise ConfigError(f"unknown body kind {kind!r}")


def random_perturbed_ball(
    n: int,
    rng: np.random.Generator,
    degrees: Sequence[int] = (2, 3, 4, 5, 6),
    amplitude: float = 0.5,
    max_tries: int = 1000,
) -> RevolutionBody:
    """
    1 + sum_k c_k P_k^n with c_k uniform in +-amplitude (n-1)/((k-1)(k+n-1)),
    rejection-sampled to class C^2_+.
    """
    kmax = max(degrees)
    for attempt in range(max_tries):
        coeffs = np.zeros(kmax + 1)
        coeffs[0] = 1.0
        for k in degrees:
            scale = amplitude * (n - 1) / ((k - 1) * (k + n - 1)) if k >= 2 else amplitude
            coeffs[k] = rng.uniform(-scale, scale)
        body = legendre_body(n, coeffs, check=False)
        if classify_support(body).kind is SupportClass.C2PLUS:
            return body
        logger.debug("rejected random body on attempt %d", attempt + 1)
    raise NumericalError(f"no C2Plus body found in {max_tries} draws")


# intervals of admissible perturbations


@dataclass(frozen=True)
class IntervalReport:
    n: int
    k: int
    i_lower: float
    i_upper: float
    j_lower: float
    j_upper: float
    exact: bool

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "k": self.k,
            "I": [self.i_lower, self.i_upper],
            "J": [self.j_lower, self.j_upper],
            "exact": self.exact,
        }


def intervals(n: int, k: int) -> IntervalReport:
    """
    Bounds for I_k^n (lambda with 1 + lam P_k^n of class C^2_+ lies in their
    span, with equality for k = 2) and J_k^n (gamma with 1 + gamma P_k^n >= 0).
    """
    if k < 2:
        raise DomainError(f"intervals need k >= 2, got {k}")
    nu = relative_maxima(n, k)[0]
    lower = -1.0 / ((k * (n + k - 2) - 1) * nu)
    upper = (n - 1) / ((k - 1) * (n + k - 1))
    return IntervalReport(n, k, lower, upper, -1.0, 1.0 / nu, k == 2)


def empirical_transitions(n: int, k: int, xtol: float = 1e-12) -> tuple[float, float]:
    """
    Negative and positive lambda where 1 + lam P_k^n stops being of class
    C^2_+, found by bisection on the classifier margin.
    """
    grid = classification_grid()

    def margin(lam: float) -> float:
        return classify_support(perturbed_ball(n, k, lam, check=False), grid).margin - C2PLUS_TOL

    def edge(direction: float) -> float:
        step = 1.0
        for _ in range(60):
            if margin(direction * step) <= 0:
                inner = direction * step / 2 if step > 1.0 else 0.0
                return bisect(margin, inner, direction * step, xtol=xtol)
            step *= 2.0
        raise NumericalError(f"1 + lam P_{k}^{n} stays C2Plus for |lam| up to {step}")

    return edge(-1.0), edge(1.0)


def nonnegativity_witness(n: int, k: int) -> float:
    """min over the grid of 1 + gamma P_k^n with gamma = 1/nu_k^n[1]; zero up to rounding."""
    gamma = 1.0 / relative_maxima(n, k)[0]
    extrema = np.array(critical_points(n, k))
    grid = np.concatenate([classification_grid(), extrema, -extrema])
    return float(np.min(1.0 + gamma * legendre_eval(n, k, grid)))
