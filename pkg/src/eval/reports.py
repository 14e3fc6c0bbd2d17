"""
Report emission and sweep fan-out.

JSON reports are written with indent=2 and insertion-ordered keys, CSV tables
through pandas with full float precision. Sweeps run on a process pool and
come back in task order, so output is byte-identical for a fixed seed.
"""
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Callable, Optional, Sequence

import pandas as pd

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"


def _target(path: Optional[str]):
    if path is None:
        return None
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    return path


def to_json_text(report: dict) -> str:
    return json.dumps(report, indent=2, allow_nan=True) + "\n"


def write_json(report: dict, path: Optional[str] = None) -> None:
    text = to_json_text(report)
    target = _target(path)
    if target is None:
        sys.stdout.write(text)
        return
    with open(target, "w") as f:
        f.write(text)
    logger.info("wrote %s", target)


def to_frame(rows: Sequence[dict]) -> pd.DataFrame:
    return pd.DataFrame(list(rows))


def write_csv(rows: Sequence[dict], path: Optional[str] = None) -> None:
    frame = to_frame(rows)
    target = _target(path)
    frame.to_csv(target if target is not None else sys.stdout, index=False, float_format=FLOAT_FORMAT)
    if target is not None:
        logger.info("wrote %s (%d rows)", target, len(frame))


def emit(report: dict, rows: Sequence[dict], fmt: str, path: Optional[str]) -> None:
    """Write the whole report as JSON, or its row table as CSV."""
    if fmt == "csv":
        write_csv(rows, path)
    else:
        write_json(report, path)


def run_tasks(fn: Callable, tasks: Sequence, workers: int = 1) -> list:
    """fn over tasks, in task order; fn and tasks must be picklable for workers > 1."""
    if workers <= 1 or len(tasks) <= 1:
        return [fn(task) for task in tasks]
    logger.info("running %d tasks on %d workers", len(tasks), workers)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))
