"""
Fixed points of Phi_i^2: the mean-width normalized iteration, the maps

    F_m(h) = Phi_i^{2m}(h) - (pi_0 Phi_i^{2m}(h) / pi_0 h) h,    G_m = F_m + pi_0,

their derivative at the ball and the resolvent of (i box_n T_f)^{2m} - Id.
"""
import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from src.convex.body import RevolutionBody, classification_grid, classify_support, perturbed_ball
from src.spectral.zonal import ZonalFunction, l2_norm, multiply
from src.utils.errors import (
    DimensionMismatchError,
    DomainError,
    InvalidBodyError,
    NumericalError,
    SingularResolventError,
)
from src.valuation.valuation import MinkowskiValuation, apply, image, linearization_multipliers

logger = logging.getLogger(__name__)

MODES = ("phi", "phi2")
REPORT_KMAX = 12
FIT_SKIP = 3
FIT_FLOOR = 1e-12
SINGULAR_TOL = 1e-8
RESOLVENT_TOL = 1e-10
DISTANCE_POINTS = 1025
TRUNCATION_TOL = 1e-14


def _support(K: Union[RevolutionBody, ZonalFunction], kmax: int) -> ZonalFunction:
    """Spectrum of K at truncation kmax; an exact spectrum may not lose nonzero degrees."""
    exact = K if isinstance(K, ZonalFunction) else K.spectrum
    if exact is not None and exact.kmax > kmax:
        dropped = float(np.max(np.abs(exact.coeffs[kmax + 1 :])))
        if dropped > TRUNCATION_TOL * max(1.0, abs(float(exact.coeffs[0]))):
            raise DimensionMismatchError(
                f"spectrum has degree {exact.kmax} terms up to {dropped:.3e} above kmax={kmax}"
            )
    if isinstance(K, ZonalFunction):
        return K.with_kmax(kmax)
    return K.support_function(kmax)


def _default_kmax(val: MinkowskiValuation, h: Union[RevolutionBody, ZonalFunction], kmax: Optional[int]) -> int:
    if kmax is not None:
        return kmax
    if isinstance(h, ZonalFunction):
        return min(h.kmax, val.kmax)
    return val.kmax


def _distances(h: ZonalFunction, grid: np.ndarray) -> tuple[float, float]:
    """sup and L^2 distance of h from its constant part."""
    centered = np.array(h.coeffs)
    centered[0] = 0.0
    deviation = ZonalFunction(h.n, centered)
    return float(np.max(np.abs(deviation(grid)))), l2_norm(deviation)


def _fit_factor(series: np.ndarray) -> Optional[float]:
    """Geometric decay factor of a coefficient sequence, fitted after the transient."""
    steps = np.arange(len(series))
    usable = (steps >= FIT_SKIP) & (np.abs(series) > FIT_FLOOR)
    if np.count_nonzero(usable) < 3:
        return None
    # stop at the first step that drops under the floor
    last = FIT_SKIP
    while last + 1 < len(series) and usable[last + 1]:
        last += 1
    window = series[FIT_SKIP : last + 1]
    if len(window) < 3:
        return None
    slope, _ = np.polyfit(np.arange(len(window)), np.log(np.abs(window)), 1)
    ratios = window[1:] / window[:-1]
    sign = -1.0 if np.median(ratios) < 0 else 1.0
    return float(sign * np.exp(slope))


@dataclass
class IterationReport:
    n: int
    i: int
    mode: str
    kmax: int
    steps_requested: int
    sup_distance: list = field(default_factory=list)
    l2_distance: list = field(default_factory=list)
    normalization: list = field(default_factory=list)
    coefficients: list = field(default_factory=list)
    truncated: bool = False
    diagnostic: Optional[str] = None
    fitted_factors: dict = field(default_factory=dict)
    predicted_factors: dict = field(default_factory=dict)
    final: Optional[ZonalFunction] = field(default=None, repr=False)

    @property
    def steps_completed(self) -> int:
        return len(self.sup_distance) - 1

    def to_dict(self) -> dict:
        return {
            "schema": "v1",
            "report": "iterate",
            "n": self.n,
            "i": self.i,
            "mode": self.mode,
            "kmax": self.kmax,
            "steps_requested": self.steps_requested,
            "steps_completed": self.steps_completed,
            "truncated": self.truncated,
            "diagnostic": self.diagnostic,
            "steps": [
                {
                    "step": m,
                    "sup_distance": self.sup_distance[m],
                    "l2_distance": self.l2_distance[m],
                    "normalization": self.normalization[m - 1] if m > 0 else None,
                    "coefficients": self.coefficients[m],
                }
                for m in range(len(self.sup_distance))
            ],
            "fitted_factors": {str(k): v for k, v in self.fitted_factors.items()},
            "predicted_factors": {str(k): v for k, v in self.predicted_factors.items()},
        }


def iterate(
    val: MinkowskiValuation,
    K0: Union[RevolutionBody, ZonalFunction],
    steps: int,
    mode: str = "phi2",
    kmax: Optional[int] = None,
) -> IterationReport:
    """
    Iterate Phi_i (mode "phi") or Phi_i^2 (mode "phi2") from K0, rescaling
    every iterate to the mean width of the unit ball. The normalization entry
    of a step is the mean width of the image of the previous (normalized)
    iterate divided by 2. An iterate that is not a support function ends the
    run with truncated=True.
    """
    if mode not in MODES:
        raise DomainError(f"mode must be one of {MODES}, got {mode!r}")
    if int(steps) != steps or steps < 0:
        raise DomainError(f"steps must be a non-negative integer, got {steps}")
    kmax = val.kmax if kmax is None else kmax
    h = _support(K0, kmax)
    if h.n != val.n:
        raise DomainError(f"body dimension {h.n} differs from valuation dimension {val.n}")
    start = classify_support(RevolutionBody.from_zonal(h))
    if not start.valid:
        raise InvalidBodyError(f"starting body is not a support function (margin {start.margin:.3e})")
    if not h.coeffs[0] > 0:
        raise DomainError("starting body has non-positive mean width")
    h = h.scaled(1.0 / h.coeffs[0])

    report_kmax = min(REPORT_KMAX, kmax)
    applications = 1 if mode == "phi" else 2
    report = IterationReport(val.n, val.i, mode, kmax, steps)
    grid = classification_grid(DISTANCE_POINTS)

    def record(current: ZonalFunction):
        sup, l2 = _distances(current, grid)
        report.sup_distance.append(sup)
        report.l2_distance.append(l2)
        report.coefficients.append([float(c) for c in current.coeffs[: report_kmax + 1]])

    record(h)
    for step in range(1, steps + 1):
        current = h
        for _ in range(applications):
            result = image(val, current, kmax)
            if not result.classification.valid:
                report.truncated = True
                report.diagnostic = (
                    f"step {step}: iterate left the support-function cone "
                    f"(min g1 = {result.classification.min_g1:.3e}, min g2 = {result.classification.min_g2:.3e})"
                )
                logger.warning("iteration truncated at %s", report.diagnostic)
                break
            current = result.support
        if report.truncated:
            break
        c0 = float(current.coeffs[0])
        if not c0 > 0:
            report.truncated = True
            report.diagnostic = f"step {step}: mean width {2 * c0:.3e} is not positive"
            logger.warning("iteration truncated at %s", report.diagnostic)
            break
        report.normalization.append(c0)
        h = current.scaled(1.0 / c0)
        record(h)
        logger.debug("step %d: sup distance %.3e", step, report.sup_distance[-1])

    series = np.array(report.coefficients)
    predicted = linearization_multipliers(val, applications, report_kmax)
    for k in range(1, report_kmax + 1):
        report.fitted_factors[k] = _fit_factor(series[:, k])
        report.predicted_factors[k] = float(predicted[k])
    report.final = h
    return report


# F_m, G_m and the resolvent


def _power(val: MinkowskiValuation, h: ZonalFunction, count: int, kmax: int) -> ZonalFunction:
    for _ in range(count):
        h = apply(val, h, kmax, check=False)
    return h


def fm_residual(
    val: MinkowskiValuation, h: Union[RevolutionBody, ZonalFunction], m: int = 1, kmax: Optional[int] = None
) -> ZonalFunction:
    """F_m(h); vanishes on constants and on fixed points of Phi_i^2 up to scale."""
    if int(m) != m or m < 1:
        raise DomainError(f"m must be an integer >= 1, got {m}")
    kmax = _default_kmax(val, h, kmax)
    hz = _support(h, kmax)
    c0 = float(hz.coeffs[0])
    if abs(c0) <= 1e-300:
        raise DomainError("F_m is undefined for h with zero mean width")
    powered = _power(val, hz, 2 * m, kmax)
    return powered - hz.scaled(float(powered.coeffs[0]) / c0)


def g_map(
    val: MinkowskiValuation, h: Union[RevolutionBody, ZonalFunction], m: int = 1, kmax: Optional[int] = None
) -> ZonalFunction:
    """G_m(h) = F_m(h) + pi_0 h; its fixed points near the ball are constants."""
    kmax = _default_kmax(val, h, kmax)
    residual = fm_residual(val, h, m, kmax)
    coeffs = np.array(residual.coeffs)
    coeffs[0] += _support(h, kmax).coeffs[0]
    return ZonalFunction(residual.n, coeffs)


def fm_kernel_multipliers(val: MinkowskiValuation, m: int = 1, kmax: Optional[int] = None) -> np.ndarray:
    """Multipliers of dF_m at the ball: 0 at degree 0, mu_k^{2m} - 1 otherwise."""
    mu = linearization_multipliers(val, 1, kmax)
    out = mu ** (2 * m) - 1.0
    out[0] = 0.0
    return out


def resolvent(val: MinkowskiValuation, h: ZonalFunction, m: int = 1) -> ZonalFunction:
    """
    The unique g with pi_0 g = 0 and (i box_n T_f)^{2m} g - g = h, for h with
    pi_0 h = 0.
    """
    scale = max(1.0, float(np.max(np.abs(h.coeffs))))
    if abs(h.coeffs[0]) > 1e-12 * scale:
        raise DomainError(f"resolvent needs pi_0 h = 0, got c_0 = {h.coeffs[0]:.3e}")
    kmax = min(h.kmax, val.kmax)
    power = linearization_multipliers(val, 2 * m, kmax)
    denominators = power - 1.0
    singular = [k for k in range(1, kmax + 1) if abs(denominators[k]) < SINGULAR_TOL]
    if singular:
        k = singular[0]
        raise SingularResolventError(
            f"multiplier^{2 * m} at degree {k} is {power[k]:.12g}, within {SINGULAR_TOL} of 1"
        )
    coeffs = np.zeros(kmax + 1)
    coeffs[1:] = h.coeffs[1 : kmax + 1] / denominators[1:]
    g = ZonalFunction(h.n, coeffs)

    check = multiply(g, power) - g - h.with_kmax(kmax)
    error = float(np.max(np.abs(check.coeffs)))
    if error > RESOLVENT_TOL * scale:
        raise NumericalError(f"resolvent check failed: residual {error:.3e}")
    return g


# basin of attraction


@dataclass(frozen=True)
class SweepRow:
    amplitude: float
    valid_start: bool
    converged: bool
    truncated: bool
    initial_distance: Optional[float]
    final_distance: Optional[float]
    steps_completed: int

    def to_dict(self) -> dict:
        return {
            "amplitude": self.amplitude,
            "valid_start": self.valid_start,
            "converged": self.converged,
            "truncated": self.truncated,
            "initial_distance": self.initial_distance,
            "final_distance": self.final_distance,
            "steps_completed": self.steps_completed,
        }


def amplitude_sweep(
    val: MinkowskiValuation,
    k: int,
    amplitudes: Sequence[float],
    steps: int,
    mode: str = "phi2",
    kmax: Optional[int] = None,
) -> tuple[list[SweepRow], Optional[float]]:
    """
    Iterate from 1 + lam P_k^n for each amplitude. A run converges when it is
    not truncated and the final distance is below 1e-3 of the initial one.
    Returns the rows and the largest converging amplitude.
    """
    rows = []
    for amplitude in amplitudes:
        start = perturbed_ball(val.n, k, amplitude, check=False)
        if not classify_support(start).valid:
            rows.append(SweepRow(float(amplitude), False, False, False, None, None, 0))
            continue
        report = iterate(val, start, steps, mode, kmax)
        initial, final = report.sup_distance[0], report.sup_distance[-1]
        converged = not report.truncated and final <= max(1e-3 * initial, 1e-12)
        rows.append(
            SweepRow(float(amplitude), True, converged, report.truncated, initial, final, report.steps_completed)
        )
        logger.info("amplitude %g: converged=%s final distance %.3e", amplitude, converged, final)
    largest = max((row.amplitude for row in rows if row.converged), key=abs, default=None)
    return rows, largest
