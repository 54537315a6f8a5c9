"""Aiming-log ingestion: difficulty transform, unit conversion, truncation.

Input files are comma-delimited UTF-8 with a header row; column names are
matched case-insensitively and extra columns are ignored. Each row becomes
one (movement time in seconds, difficulty in bits) observation.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .data import Dataset

REQUIRED_COLUMNS = ("movement_time_ms", "distance", "target_width",
                    "target_height", "user_id")


class IngestError(RuntimeError):
    """Raised when an input file cannot be turned into datasets."""


@dataclass(frozen=True)
class AimingRecord:
    """One movement event from an aiming log."""

    movement_time_ms: float
    distance: float
    target_width: float
    target_height: float
    user_id: str

    def __post_init__(self):
        if not self.movement_time_ms > 0:
            raise ValueError("movement_time_ms must be positive")
        if not self.distance >= 0:
            raise ValueError("distance must be non-negative")
        if not (self.target_width > 0 and self.target_height > 0):
            raise ValueError("target dimensions must be positive")


class IngestResult(NamedTuple):
    datasets: dict[str, Dataset]
    skipped: int
    total_rows: int


class TruncationResult(NamedTuple):
    data: Dataset
    retained: int
    dropped: int


def difficulty(distance: float, width: float, height: float) -> float:
    """Index of difficulty log2(1 + distance / min(width, height)), in bits."""
    if not (width > 0 and height > 0):
        raise ValueError("target dimensions must be positive")
    if distance < 0:
        raise ValueError("distance must be non-negative")
    return math.log2(1.0 + distance / min(width, height))


def record_to_observation(rec: AimingRecord) -> tuple[float, float]:
    """(y, x) pair: movement time in seconds and difficulty in bits."""
    y = rec.movement_time_ms / 1000.0
    x = difficulty(rec.distance, rec.target_width, rec.target_height)
    return y, x


def ingest(path) -> IngestResult:
    """Read an aiming log into one Dataset per user.

    Malformed rows (missing values, non-numeric fields, violated positivity
    constraints) are skipped and counted, not fatal.
    """
    per_user: dict[str, list[tuple[float, float]]] = {}
    skipped = 0
    total = 0
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise IngestError(f"cannot read {path}: {exc}") from exc
    with fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise IngestError(f"{path}: empty file")
        colmap = {name.strip().lower(): name for name in reader.fieldnames}
        missing = [c for c in REQUIRED_COLUMNS if c not in colmap]
        if missing:
            raise IngestError(f"{path}: missing columns {missing}")
        for row in reader:
            total += 1
            try:
                rec = AimingRecord(
                    movement_time_ms=float(row[colmap["movement_time_ms"]]),
                    distance=float(row[colmap["distance"]]),
                    target_width=float(row[colmap["target_width"]]),
                    target_height=float(row[colmap["target_height"]]),
                    user_id=str(row[colmap["user_id"]]).strip(),
                )
            except (TypeError, ValueError):
                skipped += 1
                continue
            per_user.setdefault(rec.user_id, []).append(
                record_to_observation(rec)
            )

    datasets = {}
    for user, obs in per_user.items():
        arr = np.asarray(obs)
        X = np.column_stack([np.ones(arr.shape[0]), arr[:, 1]])
        datasets[user] = Dataset(X, arr[:, 0])
    return IngestResult(datasets=datasets, skipped=skipped, total_rows=total)


def truncate(data: Dataset, T: float) -> TruncationResult:
    """Keep rows with y <= T, preserving order."""
    if not T > 0:
        raise ValueError("truncation threshold must be positive")
    keep = data.y <= T
    retained = int(np.sum(keep))
    if retained == 0:
        raise IngestError(f"truncation at T={T} left no observations")
    return TruncationResult(
        data=data.subset(keep),
        retained=retained,
        dropped=int(data.n - retained),
    )
