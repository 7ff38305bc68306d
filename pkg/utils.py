"""
Utility functions for the planner command line: exports, worker count and timing
"""
import json
import logging
import os
import time
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator, List, Optional, Tuple

import pandas as pd

from config import ENV_THREADS

logger = logging.getLogger(__name__)


def resolve_workers(requested: Optional[int] = None) -> int:
    """
    Worker count for the feasibility chart.

    The CLOPLAN_THREADS environment variable caps the count; unusable values
    fall back to a single worker.

    Args:
        requested: explicit worker count, defaults to the CPU count

    Returns:
        Number of worker processes (>= 1)
    """
    workers = requested or os.cpu_count() or 1
    raw = os.environ.get(ENV_THREADS)
    if raw is None:
        return max(1, workers)
    try:
        cap = int(raw)
    except ValueError:
        logger.warning(f"{ENV_THREADS}={raw!r} is not an integer; using 1 worker")
        return 1
    if cap < 1:
        logger.warning(f"{ENV_THREADS}={cap} is below 1; using 1 worker")
        return 1
    return max(1, min(workers, cap))


def write_frame_csv(df: pd.DataFrame, path, columns: Optional[List[str]] = None) -> Path:
    """
    Write a DataFrame as CSV without the index.

    Args:
        df: frame to write
        path: destination file
        columns: column order, defaults to the frame's own

    Returns:
        Path of the written file
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = df[columns] if columns else df
    frame.to_csv(path, index=False)
    logger.info(f"Wrote {len(frame)} rows to {path}")
    return path


def write_json(data: dict, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=2, ensure_ascii=False)
        f.write("\n")
    logger.info(f"Wrote {path}")
    return path


def read_json(path) -> Tuple[Optional[dict], str]:
    """
    Read a JSON document with error handling.

    Returns:
        (data, "ok") or (None, error message)
    """
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f), "ok"
    except OSError as e:
        logger.error(f"Error reading {path}: {e}")
        return None, f"file: {e.strerror or e}"
    except json.JSONDecodeError as e:
        logger.error(f"Invalid JSON in {path}: {e}")
        return None, f"json: line {e.lineno} column {e.colno}: {e.msg}"


class Stopwatch:
    elapsed: float = 0.0


@contextmanager
def stopwatch() -> Iterator[Stopwatch]:
    """Measure wall-clock time of a block; read `.elapsed` afterwards."""
    watch = Stopwatch()
    start = time.perf_counter()
    try:
        yield watch
    finally:
        watch.elapsed = time.perf_counter() - start
