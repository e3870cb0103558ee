"""Measurements over finished builds: pilot entropy, trial profiles, CSV output.

CSV schemas (one header line, then rows):

* entropy:      ``c, H_all, H_front, H_back, r``
* trials:       ``chunk_pct, load_factor, measured_mean, predicted_mean``
* buckets:      ``bucket_pct, bucket_size, load_factor``
* search time:  ``chunk_pct, trials, trials_share`` (+ ``seconds, seconds_share``
  when wall times are requested; those are not reproducible run to run)
"""

from __future__ import annotations

import csv
from dataclasses import astuple, dataclass, fields
from pathlib import Path

import numpy as np

from .builder import BucketedHashes, SearchStats


def empirical_entropy(values) -> float:
    """Zero-order empirical entropy in bits per symbol."""
    values = np.asarray(values)
    if values.size == 0:
        raise ValueError("entropy of an empty sequence is undefined")
    _, counts = np.unique(values, return_counts=True)
    p = counts / values.size
    return float(-(p * np.log2(p)).sum()) + 0.0


@dataclass(frozen=True)
class EntropyReport:
    c: float
    H_all: float
    H_front: float
    H_back: float
    r: int


def front_back_entropy(pilots, p2: int, c: float = float("nan")) -> EntropyReport:
    pilots = np.asarray(pilots)
    if not 0 < p2 < pilots.size:
        raise ValueError(f"split {p2} must lie strictly inside [0, {pilots.size}]")
    return EntropyReport(
        c=c,
        H_all=empirical_entropy(pilots),
        H_front=empirical_entropy(pilots[:p2]),
        H_back=empirical_entropy(pilots[p2:]),
        r=int(np.unique(pilots).size),
    )


@dataclass(frozen=True)
class TrialRow:
    chunk_pct: float
    load_factor: float
    measured_mean: float
    predicted_mean: float


def _chunk_bounds(m: int, step: float) -> np.ndarray:
    count = max(1, round(1 / step))
    bounds = (np.arange(count + 1) * m) // count
    bounds[-1] = m
    return bounds


def predicted_trials(loads: np.ndarray, sizes: np.ndarray) -> np.ndarray:
    """Expected trials per bucket: ``(1 / (1 - load)) ** size``, zero for empty buckets."""
    with np.errstate(divide="ignore", over="ignore"):
        expected = np.power(1.0 / (1.0 - loads), sizes)
    return np.where(sizes > 0, expected, 0.0)


def trial_profile(stats: SearchStats, b: BucketedHashes | None = None, step: float = 0.05) -> list[TrialRow]:
    """Mean measured vs. predicted trials over consecutive chunks of processed buckets.

    ``load_factor`` is the table load once the chunk is done.  Buckets keep
    their processing order; the last chunk absorbs any remainder.
    """
    sizes = stats.sizes if b is None else b.sizes[b.order]
    m = sizes.size
    load_after = stats.loads + sizes / stats.n_prime
    predicted = predicted_trials(stats.loads, sizes)
    rows = []
    bounds = _chunk_bounds(m, step)
    for i in range(bounds.size - 1):
        lo, hi = bounds[i], bounds[i + 1]
        if hi == lo:
            continue
        rows.append(TrialRow(
            chunk_pct=round(100 * int(hi) / m, 6),
            load_factor=float(load_after[hi - 1]),
            measured_mean=float(stats.trials[lo:hi].mean()),
            predicted_mean=float(predicted[lo:hi].mean()),
        ))
    return rows


@dataclass(frozen=True)
class BucketRow:
    bucket_pct: float
    bucket_size: int
    load_factor: float


def bucket_profile(stats: SearchStats, points: int = 1000) -> list[BucketRow]:
    """Bucket size and table load sampled along the processing order."""
    m = stats.sizes.size
    idx = np.unique(np.linspace(0, m - 1, min(points, m)).round().astype(np.int64))
    load_after = stats.loads + stats.sizes / stats.n_prime
    return [BucketRow(round(100 * (int(j) + 1) / m, 6), int(stats.sizes[j]), float(load_after[j])) for j in idx]


@dataclass(frozen=True)
class SearchTimeRow:
    chunk_pct: float
    trials: int
    trials_share: float


@dataclass(frozen=True)
class TimedSearchRow(SearchTimeRow):
    seconds: float
    seconds_share: float


def search_time_profile(stats: SearchStats, with_seconds: bool = False) -> list[SearchTimeRow]:
    """Share of search work spent on each timed chunk of processed buckets."""
    m = stats.sizes.size
    bounds = stats.chunk_bounds
    work = np.add.reduceat(stats.trials, bounds[:-1]) if m else np.zeros(0)
    total_work = max(1, int(work.sum()))
    total_time = float(stats.chunk_seconds.sum()) or 1.0
    rows = []
    for i in range(bounds.size - 1):
        pct = round(100 * int(bounds[i + 1]) / m, 6)
        base = (pct, int(work[i]), float(work[i]) / total_work)
        if with_seconds:
            secs = float(stats.chunk_seconds[i])
            rows.append(TimedSearchRow(*base, secs, secs / total_time))
        else:
            rows.append(SearchTimeRow(*base))
    return rows


def _cell(v) -> str:
    # repr of a Python float round-trips exactly; numpy scalars would print their type
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(int(v))


def emit_csv(rows, path) -> Path:
    """Write a list of report rows (dataclass instances) with a header line."""
    rows = list(rows)
    if not rows:
        raise ValueError("nothing to write")
    path = Path(path)
    names = [f.name for f in fields(rows[0])]
    try:
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(names)
            for row in rows:
                writer.writerow([_cell(v) for v in astuple(row)])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def read_csv(path, row_type) -> list:
    """Parse a file written by :func:`emit_csv` back into ``row_type`` rows."""
    types = [f.type for f in fields(row_type)]
    casts = [int if t in (int, "int") else float for t in types]
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        expected = [f.name for f in fields(row_type)]
        if header != expected:
            raise ValueError(f"{path}: header {header} does not match {expected}")
        return [row_type(*(cast(v) for cast, v in zip(casts, line))) for line in reader]
