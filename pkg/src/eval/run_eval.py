"""
Command-line front end for the experiments.

    python -m src.eval.run_eval multipliers --dim 4 --degree 2 --generator segment
    python -m src.eval.run_eval gap --dim 3 --degree 2
    python -m src.eval.run_eval iterate --experiment segment_n4_phi2
    python -m src.eval.run_eval petty --samples 100 --seed 7 --format csv --out petty.csv
    python -m src.eval.run_eval intervals --dim 4 --k 4

Exit codes: 0 pass, 1 a checked condition fails, 2 usage/config error,
3 numerical failure.
"""
import argparse
import logging
import sys
from pathlib import Path

import numpy as np

# Add parent directory to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent.parent))
from src.convex.body import (
    ball,
    body_from_spec,
    empirical_transitions,
    intervals,
    nonnegativity_witness,
    random_perturbed_ball,
)
from src.convex.geometry import class_reduction_check, degree1_check
from src.eval.config import COMMANDS, ExperimentConfig, build_config
from src.eval.reports import emit, run_tasks
from src.spectral.zonal import ZonalFunction, box_multipliers
from src.utils.errors import EXIT_CONDITION_FAILED, EXIT_OK, DomainError, MinkvalError, exit_code_for
from src.utils.logging_setup import configure_logging
from src.valuation.fixed_point import amplitude_sweep, fm_kernel_multipliers, fm_residual, iterate
from src.valuation.valuation import (
    condition_decay_check,
    contraction_equivalence,
    derivative_fd_check,
    gap_check,
    linearization_multipliers,
    valuation_from_spec,
)

logger = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-10
SHARP_TOL = 1e-9
INTERVAL_TOL = 1e-6
DEFAULT_START = {"kind": "perturbed_ball", "k": 2, "lambda": 0.05}


def _decay(val):
    try:
        check = condition_decay_check(val)
    except DomainError:
        return None
    return {"slope": check.slope, "exponent": check.exponent, "passed": check.passed}


def _header(config: ExperimentConfig, report: str) -> dict:
    return {"schema": "v1", "report": report, "config": config.to_dict()}


def cmd_multipliers(config: ExperimentConfig) -> int:
    """a_k[f], the box_n factors and the linearization multipliers, degree by degree."""
    val = valuation_from_spec(config.valuation_record())
    kmax = min(config.kmax, val.kmax)
    a = val.multipliers() * val.scale
    box = box_multipliers(val.n, kmax)
    mu = linearization_multipliers(val, config.m, kmax)
    rows = [
        {"k": k, "a_k": float(a[k]), "ratio": float(a[k] / a[0]), "box": float(box[k]), "linearization": float(mu[k])}
        for k in range(kmax + 1)
    ]
    report = _header(config, "multipliers")
    report.update({"valuation": val.to_dict(), "m": config.m, "decay": _decay(val)})
    if config.k <= kmax:
        # linearization at the ball, checked by central differences along P_k
        direction = ZonalFunction.legendre_mode(val.n, config.k, kmax)
        check = derivative_fd_check(val, ball(val.n), direction, config.eps, kmax)
        report["derivative_check"] = {"k": config.k, **check.to_dict()}
    report["rows"] = rows
    emit(report, rows, config.format, config.output_path)
    return EXIT_OK


def cmd_gap(config: ExperimentConfig) -> int:
    """Gap margins; passes when every contraction margin is positive."""
    val = valuation_from_spec(config.valuation_record())
    gap = gap_check(val, config.kmax)
    agreement = all(row["margin_positive"] == row["contracts"] for row in contraction_equivalence(val, config.kmax))
    report = _header(config, "gap")
    body = gap.to_dict()
    rows = body.pop("degrees")
    body.pop("schema")
    body.pop("report")
    report.update(body)
    report.update({"equivalence_agrees": agreement, "decay": _decay(val), "degrees": rows})
    emit(report, rows, config.format, config.output_path)
    if not gap.contraction_pass:
        logger.warning("contraction condition fails for n=%d, i=%d", val.n, val.i)
        return EXIT_CONDITION_FAILED
    return EXIT_OK


def _fm_rows(config: ExperimentConfig, val, final) -> list[dict]:
    rows = []
    last = config.mmax if config.mmax is not None else config.m
    for m in range(config.m, last + 1):
        residual = fm_residual(val, final, m, config.kmax)
        kernel = fm_kernel_multipliers(val, m, config.kmax)
        rows.append(
            {
                "m": m,
                "fm_residual_sup": float(np.max(np.abs(residual.coeffs))),
                "min_kernel_modulus": float(np.min(np.abs(kernel[2::2]))),
            }
        )
    return rows


def cmd_iterate(config: ExperimentConfig) -> int:
    """Normalized iteration of Phi_i or Phi_i^2, or an amplitude sweep with --amplitudes."""
    val = valuation_from_spec(config.valuation_record())
    if config.amplitudes:
        sweep, largest = amplitude_sweep(val, config.k, config.amplitudes, config.steps, config.mode, config.kmax)
        rows = [row.to_dict() for row in sweep]
        report = _header(config, "amplitude_sweep")
        report.update({"k": config.k, "largest_converging": largest, "rows": rows})
        emit(report, rows, config.format, config.output_path)
        return EXIT_OK

    start = body_from_spec(config.body_record(DEFAULT_START))
    result = iterate(val, start, config.steps, config.mode, config.kmax)
    report = _header(config, "iterate")
    body = result.to_dict()
    body.pop("schema")
    body.pop("report")
    report.update(body)
    report["fm"] = _fm_rows(config, val, result.final) if not result.truncated else []

    rows = []
    for step in body["steps"]:
        row = {k: step[k] for k in ("step", "sup_distance", "l2_distance", "normalization")}
        row.update({f"c{k}": c for k, c in enumerate(step["coefficients"])})
        rows.append(row)
    emit(report, rows, config.format, config.output_path)
    return EXIT_CONDITION_FAILED if result.truncated else EXIT_OK


def _petty_row(task: tuple) -> dict:
    index, val_record, body_record, seed = task
    val = valuation_from_spec(val_record)
    if body_record is None:
        body = random_perturbed_ball(val.n, np.random.default_rng(seed + index))
        kind = "random"
        coeffs = [float(c) for c in body.spectrum.coeffs]
    else:
        body = body_from_spec(body_record)
        kind = body.kind
        coeffs = None
    check = class_reduction_check(val, body)
    row = {"index": index, "kind": kind, "psi": check.lhs, **check.to_dict()}
    if val.i == 1:
        d1 = degree1_check(val, body)
        row.update(
            {
                "degree1_residual": d1.residual,
                "min_schneider_margin": d1.min_schneider_margin,
                "printed_residual": d1.printed_residual,
                "sharp_residual": d1.sharp_residual,
            }
        )
    row["coeffs"] = coeffs
    return row


def cmd_petty(config: ExperimentConfig) -> int:
    """
    Class-reduction sweep: the ball, a slightly elongated ellipsoid (or --body)
    and --samples seeded random C^2_+ bodies of revolution.
    """
    record = config.valuation_record()
    first = config.body_record({"kind": "ellipsoid", "a": 1.1, "b": 1.0})
    tasks = [(0, record, {"kind": "ball", "n": config.dim}, config.seed), (1, record, first, config.seed)]
    tasks += [(2 + j, record, None, config.seed) for j in range(config.samples)]
    rows = run_tasks(_petty_row, tasks, config.workers)

    min_residual = min(row["residual"] for row in rows)
    passed = min_residual >= -RESIDUAL_TOL
    summary = {
        "rows": len(rows),
        "min_residual": min_residual,
        "max_identity_residual": max(abs(row["identity_residual"]) for row in rows),
        "psi_ball": rows[0]["psi"],
        "psi_first_ge_ball": rows[1]["psi"] >= rows[0]["psi"] - RESIDUAL_TOL,
    }
    if config.degree == 1:
        summary["min_degree1_residual"] = min(row["degree1_residual"] for row in rows)
        sharp = [row["sharp_residual"] for row in rows if row["sharp_residual"] is not None]
        summary["min_sharp_residual"] = min(sharp) if sharp else None
        passed = passed and summary["min_degree1_residual"] >= -RESIDUAL_TOL
        passed = passed and (not sharp or min(sharp) >= -SHARP_TOL)
    summary["passed"] = passed

    report = _header(config, "petty")
    report.update({"summary": summary, "rows": rows})
    csv_rows = [{k: v for k, v in row.items() if k != "coeffs"} for row in rows]
    emit(report, csv_rows, config.format, config.output_path)
    return EXIT_OK if passed else EXIT_CONDITION_FAILED


def cmd_intervals(config: ExperimentConfig) -> int:
    """Bounds on I_k^n and J_k^n next to the classifier's empirical transitions."""
    bounds = intervals(config.dim, config.k)
    lower, upper = empirical_transitions(config.dim, config.k)
    contained = bounds.i_lower - INTERVAL_TOL <= lower and upper <= bounds.i_upper + INTERVAL_TOL
    row = {
        "n": config.dim,
        "k": config.k,
        "I_lower": bounds.i_lower,
        "I_upper": bounds.i_upper,
        "J_lower": bounds.j_lower,
        "J_upper": bounds.j_upper,
        "exact": bounds.exact,
        "empirical_lower": lower,
        "empirical_upper": upper,
        "contained": contained,
        "witness_min": nonnegativity_witness(config.dim, config.k),
    }
    report = _header(config, "intervals")
    report["rows"] = [row]
    emit(report, [row], config.format, config.output_path)
    return EXIT_OK if contained else EXIT_CONDITION_FAILED


HANDLERS = {
    "multipliers": cmd_multipliers,
    "gap": cmd_gap,
    "iterate": cmd_iterate,
    "petty": cmd_petty,
    "intervals": cmd_intervals,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="run_eval", description="Numerical experiments on Minkowski valuations of bodies of revolution"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=HANDLERS[name].__doc__.strip().splitlines()[0])
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--experiment", help="named entry of data/experiments.json")
        p.add_argument("--dim", type=int, help="ambient dimension n")
        p.add_argument("--degree", type=int, help="valuation degree i")
        p.add_argument("--generator", help="generator record (JSON or kind name)")
        p.add_argument("--body", help="body record (JSON or kind name)")
        p.add_argument("--kmax", type=int)
        p.add_argument("--steps", type=int)
        p.add_argument("--m", type=int)
        p.add_argument("--mmax", type=int)
        p.add_argument("--eps", type=float)
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output file; stdout when omitted")
        p.add_argument("--format", choices=("json", "csv"))
        p.add_argument("--workers", type=int)
        p.add_argument("--samples", type=int)
        p.add_argument("--k", type=int, help="perturbation / interval degree")
        p.add_argument("--amplitudes", help="comma-separated amplitudes for a basin-of-attraction sweep")
        p.add_argument("--mode", choices=("phi", "phi2"))
        p.add_argument("--log-level", dest="log_level")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config", "experiment", "log_level")}
    try:
        config = build_config(args.command, flags, args.config, args.experiment)
        logger.info("running %s", config.command)
        return HANDLERS[config.command](config)
    except MinkvalError as e:
        logger.error("%s: %s", type(e).__name__, e)
        return exit_code_for(e)


if __name__ == "__main__":
    sys.exit(main())
