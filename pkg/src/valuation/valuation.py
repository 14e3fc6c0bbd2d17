"""
SO(n) equivariant Minkowski valuations of degree i acting on bodies of revolution

    h(Phi_i K, .) = S_i(K, .) * f,

with f an SO(n-1) invariant generator stored as a Legendre spectrum. Besides
the operator itself this module holds its linearization at the ball, the
spectral-gap checks on the generator and a finite-difference check of the
area-measure derivative.
"""
import logging
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from src.convex.body import (
    Classification,
    RevolutionBody,
    SupportClass,
    body_from_spec,
    classification_grid,
    classify_support,
    density_at_nodes,
    eigenvalues_at_nodes,
    mixed_discriminant_diagonal,
)
from src.spectral.quadrature import QuadratureRule, build_rule, default_node_count
from src.spectral.zonal import (
    DEFAULT_KMAX,
    ZonalFunction,
    box_multipliers,
    box_n,
    convolve,
    decay_exponent,
    expand,
    segment_function,
)
from src.utils.errors import ConfigError, DimensionMismatchError, DomainError, InvalidBodyError

logger = logging.getLogger(__name__)

GAP_TOL = 1e-10
DECAY_THRESHOLD = 2.0
BODY_SOURCES = ("segment", "projection", "body")


@dataclass(frozen=True, eq=False)
class MinkowskiValuation:
    """
    Phi_i with generator f. With normalized=True the generator was divided by
    `scale` = a_0[f] so that Phi_i B = B.
    """

    n: int
    i: int
    generator: ZonalFunction = field(repr=False)
    scale: float = 1.0
    source: str = "spectrum"
    normalized: bool = True
    spec: dict = field(default_factory=dict)

    @property
    def kmax(self) -> int:
        return self.generator.kmax

    @property
    def body_generated(self) -> bool:
        """True when f is the support function of a convex body (Phi_i is monotone)."""
        return self.source in BODY_SOURCES

    def multipliers(self) -> np.ndarray:
        return self.generator.multipliers()

    def to_dict(self) -> dict:
        return {
            "n": int(self.n),
            "i": int(self.i),
            "source": self.source,
            "normalized": self.normalized,
            "scale": float(self.scale),
            "generator": self.spec or {"kind": "spectrum", "coeffs": [float(c) for c in self.generator.coeffs]},
        }


def make_valuation(
    n: int,
    i: int,
    generator: ZonalFunction,
    source: str = "spectrum",
    normalize: bool = True,
    spec: Optional[dict] = None,
) -> MinkowskiValuation:
    if int(i) != i or not 1 <= i <= n - 1:
        raise DomainError(f"valuation degree must lie in 1..{n - 1}, got {i}")
    if generator.n != n:
        raise DimensionMismatchError(f"generator lives in dimension {generator.n}, not {n}")
    a0 = float(generator.multipliers()[0])
    if not a0 > 0:
        raise DomainError(f"a non-trivial valuation needs a_0[f] > 0, got {a0:.6g}")
    if generator.kmax >= 1 and abs(generator.multipliers()[1]) > GAP_TOL * a0:
        logger.info("generator has a degree-1 component; the valuation is not centered")
    scale = 1.0
    if normalize:
        scale = a0
        generator = generator.scaled(1.0 / a0)
    return MinkowskiValuation(n, i, generator, scale, source, normalize, dict(spec or {}))


def from_body(L: RevolutionBody, i: int, kmax: int = DEFAULT_KMAX, normalize: bool = True) -> MinkowskiValuation:
    """Phi_i generated by f = h(L, .)."""
    try:
        spec = L.to_spec()
    except ConfigError:
        spec = {}
    spec.pop("n", None)
    return make_valuation(L.n, i, L.support_function(kmax), "body", normalize, spec)


def from_segment(n: int, i: int, kmax: int = DEFAULT_KMAX, normalize: bool = True) -> MinkowskiValuation:
    """Phi_i generated by |e . u|, the support function of [-e, e]."""
    return make_valuation(n, i, segment_function(n, kmax), "segment", normalize, {"kind": "segment"})


def projection_body(n: int, i: Optional[int] = None, kmax: int = DEFAULT_KMAX) -> MinkowskiValuation:
    """
    Projection-body operator Pi_i with f = |e . u| / 2, not normalized. For
    i = n-1 this is the classical projection body, and Pi B = kappa_{n-1} B.
    """
    i = n - 1 if i is None else i
    generator = segment_function(n, kmax).scaled(0.5)
    return make_valuation(n, i, generator, "projection", normalize=False, spec={"kind": "projection"})


def from_spectrum(n: int, i: int, coeffs, normalize: bool = True) -> MinkowskiValuation:
    """Phi_i with an arbitrary (possibly non-monotone) generator spectrum."""
    generator = ZonalFunction(n, coeffs)
    spec = {"kind": "spectrum", "coeffs": [float(c) for c in generator.coeffs]}
    return make_valuation(n, i, generator, "spectrum", normalize, spec)


def valuation_from_spec(record: dict, kmax: int = DEFAULT_KMAX) -> MinkowskiValuation:
    """
    Build a valuation from {"n": 4, "i": 2, "generator": {"kind": "segment"}}.

    Generator kinds: segment, projection, spectrum (with "coeffs") and every
    body kind understood by body_from_spec. "normalize" defaults to true.
    """
    try:
        n = int(record["n"])
        i = int(record["i"])
        generator = dict(record.get("generator", {"kind": "segment"}))
        kind = generator["kind"]
        normalize = bool(record.get("normalize", True))
        kmax = int(record.get("kmax", kmax))
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"malformed valuation record {record}: {e}") from e

    if kind == "segment":
        return from_segment(n, i, kmax, normalize)
    if kind == "projection":
        return projection_body(n, i, kmax)
    if kind == "spectrum":
        if "coeffs" not in generator:
            raise ConfigError("spectrum generator needs 'coeffs'")
        try:
            return from_spectrum(n, i, generator["coeffs"], normalize)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"malformed spectrum generator {generator}: {e}") from e
    generator.setdefault("n", n)
    if int(generator["n"]) != n:
        raise ConfigError(f"generator dimension {generator['n']} differs from valuation dimension {n}")
    return from_body(body_from_spec(generator), i, kmax, normalize)


# the operator


def _as_body(K: Union[RevolutionBody, ZonalFunction], check: bool = False) -> RevolutionBody:
    if isinstance(K, ZonalFunction):
        return RevolutionBody.from_zonal(K, check=check)
    return K


def _rule_for(n: int, kmax: int, rule: Optional[QuadratureRule]) -> QuadratureRule:
    return rule if rule is not None else build_rule(n, default_node_count(kmax))


def _sup(f, grid: np.ndarray) -> float:
    return float(np.max(np.abs(f(grid))))


def apply(
    val: MinkowskiValuation,
    K: Union[RevolutionBody, ZonalFunction],
    kmax: Optional[int] = None,
    rule: Optional[QuadratureRule] = None,
    check: bool = True,
) -> ZonalFunction:
    """
    Support spectrum of Phi_i K: the density s_i(K, .) is sampled at the
    quadrature nodes, expanded and convolved with f. An image that fails the
    support test is returned with a warning.
    """
    K = _as_body(K)
    if K.n != val.n:
        raise DimensionMismatchError(f"body dimension {K.n} differs from valuation dimension {val.n}")
    kmax = val.kmax if kmax is None else kmax
    rule = _rule_for(val.n, kmax, rule)
    if check:
        result = classify_support(K)
        if not result.valid:
            raise InvalidBodyError(f"input is not a support function (margin {result.margin:.3e})")
    density = expand(val.n, density_at_nodes(K, val.i, rule), kmax, rule)
    image = convolve(density, val.generator.with_kmax(kmax))
    if check:
        result = classify_support(RevolutionBody.from_zonal(image))
        if not result.valid:
            logger.warning("Phi_%d K is not a support function (margin %.3e)", val.i, result.margin)
    return image


@dataclass(frozen=True)
class ValuationImage:
    support: ZonalFunction
    classification: Classification


def image(val: MinkowskiValuation, K: Union[RevolutionBody, ZonalFunction], kmax: Optional[int] = None) -> ValuationImage:
    """apply() together with the classification of the result."""
    h = apply(val, K, kmax, check=False)
    return ValuationImage(h, classify_support(RevolutionBody.from_zonal(h)))


# linearization at the ball


def linearization_multipliers(val: MinkowskiValuation, m: int = 1, kmax: Optional[int] = None) -> np.ndarray:
    """
    Per-degree multipliers of d(Phi_i^m) at h_B: [i box_k a_k[f] / a_0[f]]^m,
    i.e. those of the normalized valuation. Degrees above the generator's
    truncation get 0.
    """
    if int(m) != m or m < 1:
        raise DomainError(f"power must be an integer >= 1, got {m}")
    kmax = val.kmax if kmax is None else kmax
    a = val.generator.with_kmax(kmax).multipliers()
    mu = val.i * box_multipliers(val.n, kmax) * a / a[0]
    return mu ** m


def ball_derivative(val: MinkowskiValuation, g: ZonalFunction) -> ZonalFunction:
    """d Phi_i(h_B) g = i T_f box_n g."""
    kmax = min(g.kmax, val.kmax)
    return box_n(convolve(g.with_kmax(kmax), val.generator.with_kmax(kmax))).scaled(val.i)


@dataclass(frozen=True)
class DerivativeReport:
    eps: float
    sup_error: float
    relative_error: float
    fd: ZonalFunction = field(repr=False)
    analytic: ZonalFunction = field(repr=False)

    def to_dict(self) -> dict:
        return {"eps": self.eps, "sup_error": self.sup_error, "relative_error": self.relative_error}


def area_density_derivative(
    h: RevolutionBody, g: RevolutionBody, i: int, rule: QuadratureRule
) -> np.ndarray:
    """d s_i(h) g = i D(D^2 g, D^2 h[i-1], Id[n-1-i]) at the nodes of a rule."""
    n = h.n
    lam = np.empty((n - 1, n - 1, rule.m))
    rows = [g] + [h] * (i - 1)
    for j, body in enumerate(rows):
        g1, g2 = eigenvalues_at_nodes(body, rule)
        lam[j, 0] = g2
        lam[j, 1:] = g1
    lam[len(rows):] = 1.0
    return i * mixed_discriminant_diagonal(lam)


def derivative_fd_check(
    val: MinkowskiValuation,
    h: RevolutionBody,
    g: Union[ZonalFunction, RevolutionBody],
    eps: float = 1e-4,
    kmax: Optional[int] = None,
) -> DerivativeReport:
    """
    Central difference (Phi(h + eps g) - Phi(h - eps g)) / (2 eps) against the
    mixed-area-density derivative, as a sup-norm relative error on a grid.
    """
    kmax = val.kmax if kmax is None else kmax
    rule = _rule_for(val.n, kmax, None)
    direction = _as_body(g)
    plus, minus = h.displaced(direction, eps), h.displaced(direction, -eps)
    for label, body in (("h + eps g", plus), ("h - eps g", minus)):
        result = classify_support(body)
        if not result.valid:
            raise InvalidBodyError(f"{label} is not a support function (margin {result.margin:.3e})")

    image_plus, image_minus = apply(val, plus, kmax, rule), apply(val, minus, kmax, rule)
    fd = (image_plus - image_minus).scaled(0.5 / eps)
    density = expand(val.n, area_density_derivative(h, direction, val.i, rule), kmax, rule)
    analytic = convolve(density, val.generator.with_kmax(kmax))

    grid = classification_grid(1025)
    sup_error = float(np.max(np.abs(fd(grid) - analytic(grid))))
    # a derivative that vanishes is measured against |Phi h| |g| / |h|
    base = (image_plus + image_minus).scaled(0.5)
    floor = _sup(base, grid) * _sup(direction.support, grid) / _sup(h.support, grid)
    scale = max(_sup(analytic, grid), floor)
    relative = sup_error / scale if scale > 0 else sup_error
    logger.debug("FD check eps=%g: sup error %.3e, relative %.3e", eps, sup_error, relative)
    return DerivativeReport(float(eps), sup_error, relative, fd, analytic)


# spectral gap


@dataclass(frozen=True)
class GapReport:
    """
    Per-degree margins of the two gap conditions on a generator:

        |a_k| < a_0 / ((k-1)(n+k-1))                  (origin-symmetric bodies)
        |a_k| < a_0 (n-1) / (i (k-1)(k+n-1))          (contraction of Phi_i^2)
    """

    n: int
    i: Optional[int]
    kmax: int
    a0: float
    degrees: list
    a: list
    body_bound: list
    body_margin: list
    contraction_bound: Optional[list]
    contraction_margin: Optional[list]
    c2plus: bool

    @property
    def body_pass(self) -> bool:
        """k = 2 may be an equality unless the generator is C^2_+."""
        for k, margin in zip(self.degrees, self.body_margin):
            if k == 2 and not self.c2plus:
                if margin < -GAP_TOL * self.a0:
                    return False
            elif margin <= GAP_TOL * self.a0:
                return False
        return True

    @property
    def contraction_pass(self) -> bool:
        if self.contraction_margin is None:
            return False
        return all(margin > GAP_TOL * self.a0 for margin in self.contraction_margin)

    def to_dict(self) -> dict:
        rows = []
        for j, k in enumerate(self.degrees):
            row = {
                "k": k,
                "a_k": self.a[j],
                "ratio": self.a[j] / self.a0,
                "body_bound": self.body_bound[j],
                "body_margin": self.body_margin[j],
            }
            if self.contraction_bound is not None:
                row["contraction_bound"] = self.contraction_bound[j]
                row["contraction_margin"] = self.contraction_margin[j]
            rows.append(row)
        return {
            "schema": "v1",
            "report": "gap",
            "n": self.n,
            "i": self.i,
            "kmax": self.kmax,
            "a0": self.a0,
            "c2plus": self.c2plus,
            "body_pass": self.body_pass,
            "contraction_pass": self.contraction_pass if self.i is not None else None,
            "degrees": rows,
        }


def _is_c2plus(body: RevolutionBody) -> bool:
    return classify_support(body).kind is SupportClass.C2PLUS


def gap_check(
    source: Union[MinkowskiValuation, RevolutionBody, ZonalFunction],
    kmax: Optional[int] = None,
    i: Optional[int] = None,
    c2plus: Optional[bool] = None,
) -> GapReport:
    """Gap margins for the generator of a valuation, a body L or a raw spectrum."""
    if isinstance(source, MinkowskiValuation):
        kmax = source.kmax if kmax is None else min(kmax, source.kmax)
        a = source.multipliers()[: kmax + 1] * source.scale
        n, i = source.n, source.i if i is None else i
        if c2plus is None:
            c2plus = source.source not in ("segment", "projection") and _is_c2plus(
                RevolutionBody.from_zonal(source.generator)
            )
    elif isinstance(source, RevolutionBody):
        kmax = DEFAULT_KMAX if kmax is None else kmax
        a = source.support_function(kmax).multipliers()
        n = source.n
        if c2plus is None:
            c2plus = _is_c2plus(source)
    else:
        kmax = source.kmax if kmax is None else min(kmax, source.kmax)
        a = source.multipliers()[: kmax + 1]
        n = source.n
        c2plus = bool(c2plus)
    if kmax < 2:
        raise DomainError(f"gap checks start at degree 2, kmax is {kmax}")
    a0 = float(a[0])
    if not a0 > 0:
        raise DomainError(f"gap checks need a_0 > 0, got {a0:.6g}")

    degrees = list(range(2, kmax + 1))
    k = np.array(degrees, dtype=float)
    body_bound = a0 / ((k - 1) * (n + k - 1))
    body_margin = body_bound - np.abs(a[2:])
    contraction_bound = contraction_margin = None
    if i is not None:
        bound = a0 * (n - 1) / (i * (k - 1) * (k + n - 1))
        contraction_bound = [float(b) for b in bound]
        contraction_margin = [float(b) for b in bound - np.abs(a[2:])]
    return GapReport(
        n=n,
        i=i,
        kmax=kmax,
        a0=a0,
        degrees=degrees,
        a=[float(x) for x in a[2:]],
        body_bound=[float(b) for b in body_bound],
        body_margin=[float(x) for x in body_margin],
        contraction_bound=contraction_bound,
        contraction_margin=contraction_margin,
        c2plus=c2plus,
    )


def contraction_equivalence(val: MinkowskiValuation, kmax: Optional[int] = None) -> list[dict]:
    """
    Degree by degree for k >= 2: whether the contraction margin is positive and
    whether |mu_k| < 1 for the m = 1 linearization multiplier. margin/bound
    equals 1 - |mu_k|, so both use the same relative tolerance.
    """
    report = gap_check(val, kmax, c2plus=False)
    mu = linearization_multipliers(val, 1, report.kmax)
    rows = []
    for j, k in enumerate(report.degrees):
        rows.append(
            {
                "k": k,
                "margin_positive": report.contraction_margin[j] > GAP_TOL * report.contraction_bound[j],
                "contracts": abs(mu[k]) < 1.0 - GAP_TOL,
            }
        )
    return rows


@dataclass(frozen=True)
class DecayReport:
    slope: float
    exponent: float
    passed: bool


def condition_decay_check(val: MinkowskiValuation, kmin: int = 8, kmax: int = 64) -> DecayReport:
    """a_k[f] = O(k^{-rho}) with rho > 2, estimated from a log-log fit; diagnostic only."""
    slope = decay_exponent(val.multipliers(), kmin=kmin, kmax=min(kmax, val.kmax), even_only=True)
    return DecayReport(slope, -slope, -slope > DECAY_THRESHOLD)
