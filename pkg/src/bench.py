import logging
import time
import tracemalloc

import numpy as np
import pandas as pd

from src.tensornet import feature_matmul, generalized_matmul

logger = logging.getLogger(__name__)

BENCH_OPS = ("feature-matmul", "generalized-matmul")
BENCH_COLUMNS = ["op", "n", "reps", "median_seconds", "peak_bytes"]


def _operands(op: str, n: int, channels: int, rng: np.random.Generator) -> tuple:
    if op == "feature-matmul":
        return rng.standard_normal((n, n, channels)), rng.standard_normal((n, n, channels))
    return tuple(rng.standard_normal((n, n, n)) for _ in range(3))


def _call(op: str, operands: tuple):
    return feature_matmul(*operands) if op == "feature-matmul" else generalized_matmul(*operands)


def run_benchmark(op: str, sizes, reps: int = 3, channels: int = 4, seed: int = 0) -> pd.DataFrame:
    """
    Times `op` on random inputs of each size.

    Args:
        op (str): "feature-matmul" (n x n x channels) or "generalized-matmul" (three n x n x n tensors).
        sizes (list): Ascending n values.
        reps (int): Timed repetitions per size; the median is reported.
        channels (int): Channel count for feature-matmul.
        seed (int): Seed for the random operands.

    Returns:
        pd.DataFrame: One row per size with BENCH_COLUMNS; peak_bytes is the tracemalloc high-water mark of one call.
    """
    if op not in BENCH_OPS:
        raise ValueError(f"op must be one of {BENCH_OPS}, got {op!r}")
    sizes = [int(n) for n in sizes]
    if sizes != sorted(sizes) or any(n < 1 for n in sizes):
        raise ValueError(f"sizes must be positive and ascending, got {sizes}")
    if reps < 1:
        raise ValueError("reps must be >= 1")
    rng = np.random.default_rng(seed)
    rows = []
    for n in sizes:
        operands = _operands(op, n, channels, rng)
        _call(op, operands)  # warm-up
        timings = []
        for _ in range(reps):
            start = time.perf_counter()
            _call(op, operands)
            timings.append(time.perf_counter() - start)
        tracemalloc.start()
        _call(op, operands)
        _, peak = tracemalloc.get_traced_memory()
        tracemalloc.stop()
        rows.append((op, n, reps, float(np.median(timings)), peak))
        logger.info("%s n=%d: %.6f s (median of %d), peak %d bytes", op, n, rows[-1][3], reps, peak)
    return pd.DataFrame(rows, columns=BENCH_COLUMNS)


def loglog_slope(df: pd.DataFrame, column: str = "median_seconds") -> float:
    """Least-squares slope of log(column) against log(n); nan with fewer than two sizes."""
    if len(df) < 2:
        return float("nan")
    slope, _ = np.polyfit(np.log(df["n"].to_numpy(float)), np.log(df[column].to_numpy(float)), 1)
    return float(slope)
