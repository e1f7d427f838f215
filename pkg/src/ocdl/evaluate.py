"""Dictionary evaluation, cost accounting and statistical harnesses."""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass

import numpy as np

from .csc import CscSettings, cbpdn_solve
from .signals import Dictionary, Signal

REAL_BYTES = 8
COMPLEX_BYTES = 16
COO_ENTRY_BYTES = 24

_SCHEMES = (
    "sgd-spatial-dense",
    "sgd-spatial-sparse",
    "sgd-frequency",
    "surrogate-spatial",
    "surrogate-frequency",
)


def test_objective(
    d: Dictionary,
    test_signals: list[Signal],
    penalty: float,
    settings: CscSettings | None = None,
) -> float:
    """Sum of sparse-coding optimal values over a test set.

    Evaluation runs at a tighter tolerance than training so that the
    measurement noise sits below the differences being compared.
    """
    if settings is None:
        settings = CscSettings(penalty=penalty, tol_residual=1e-4, max_iters=1000)
    return float(sum(cbpdn_solve(d, s, settings).objective for s in test_signals))


test_objective.__test__ = False  # keep pytest from collecting the name


def memory_estimate(
    num_filters: int,
    filter_length: int,
    num_pixels: int,
    density: float,
    scheme: str,
) -> int:
    """Bytes of learner working state for one scheme.

    Reals take 8 bytes, complex values 16, and one coordinate-list entry
    (row, column, value) 24.
    """
    if scheme not in _SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; expected one of {_SCHEMES}")
    m, length, n, rho = num_filters, filter_length, num_pixels, density
    if scheme == "sgd-spatial-dense":
        return int(n * m * length * REAL_BYTES)
    if scheme == "sgd-spatial-sparse":
        return int(round(n * m * length * rho)) * COO_ENTRY_BYTES
    if scheme == "sgd-frequency":
        return int(m * n * COMPLEX_BYTES)
    if scheme == "surrogate-spatial":
        dense = (m * length) ** 2 * REAL_BYTES
        return int(dense + round(n * m * length * rho) * COO_ENTRY_BYTES)
    return int(m * m * n * COMPLEX_BYTES)


def clt_harness(
    p: float, n: int, trials: int, rng: np.random.Generator, chunk: int = 200
) -> float:
    """Empirical dispersion of the weighted mean of uniform draws.

    Forms ``sum (i/n)^p Z_i / sum (i/n)^p`` over i.i.d. uniform[0, 1]
    samples and returns the standard deviation of ``sqrt(n) (mean - mu) /
    sigma`` across trials. The expected value is ``(p+1)/sqrt(2p+1)``.
    """
    if n < 1 or trials < 1:
        raise ValueError("need positive sample and trial counts")
    weights = ((np.arange(1, n + 1)) / n) ** p
    weights /= weights.sum()
    mu, sigma = 0.5, np.sqrt(1.0 / 12.0)
    scaled = np.empty(trials)
    done = 0
    while done < trials:
        take = min(chunk, trials - done)
        draws = rng.random((take, n))
        scaled[done : done + take] = np.sqrt(n) * (draws @ weights - mu) / sigma
        done += take
    return float(np.std(scaled))


@dataclass
class ConvergenceRecord:
    """One training-step log row."""

    t: int
    epoch: int
    wall_sec: float
    sample_obj: float
    test_obj: float | None = None
    inner_iters: int | None = None
    fpr: float | None = None
    step_or_tol: float | None = None
    mem_bytes: int | None = None


CSV_HEADER = (
    "t",
    "epoch",
    "wall_sec",
    "sample_obj",
    "test_obj",
    "inner_iters",
    "fpr",
    "step_or_tol",
    "mem_bytes",
)


def append_record(
    log: list[ConvergenceRecord],
    t: int,
    epoch: int,
    start_time: float,
    sample_obj: float,
    **extra,
) -> ConvergenceRecord:
    """Append a timed record to a log list and return it."""
    rec = ConvergenceRecord(
        t=t,
        epoch=epoch,
        wall_sec=time.perf_counter() - start_time,
        sample_obj=sample_obj,
        **extra,
    )
    log.append(rec)
    return rec


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_log_csv(path, records: list[ConvergenceRecord]):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for rec in records:
            writer.writerow(
                [
                    rec.t,
                    rec.epoch,
                    _cell(rec.wall_sec),
                    _cell(rec.sample_obj),
                    _cell(rec.test_obj),
                    _cell(rec.inner_iters),
                    _cell(rec.fpr),
                    _cell(rec.step_or_tol),
                    _cell(rec.mem_bytes),
                ]
            )


def read_log_csv(path) -> list[ConvergenceRecord]:
    records = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != CSV_HEADER:
            raise ValueError(f"unexpected log header: {header}")
        for row in reader:
            records.append(
                ConvergenceRecord(
                    t=int(row[0]),
                    epoch=int(row[1]),
                    wall_sec=float(row[2]),
                    sample_obj=float(row[3]),
                    test_obj=float(row[4]) if row[4] else None,
                    inner_iters=int(row[5]) if row[5] else None,
                    fpr=float(row[6]) if row[6] else None,
                    step_or_tol=float(row[7]) if row[7] else None,
                    mem_bytes=int(row[8]) if row[8] else None,
                )
            )
    return records
