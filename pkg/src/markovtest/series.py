"""Time-series container, lag embedding, chunking and CSV input/output."""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigurationError, InputError
from .mdn import BINARY, COLUMN_TYPES, CONTINUOUS

log = logging.getLogger(__name__)


@dataclass
class TimeSeries:
    """T x d observations; row ``t`` is X_t (0-indexed)."""

    values: np.ndarray
    column_types: Optional[list] = None
    names: Optional[list] = field(default=None, compare=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
            raise InputError("a time series needs shape (T, d) with T >= 1 and d >= 1")
        if not np.all(np.isfinite(values)):
            bad = np.argwhere(~np.isfinite(values))[0]
            raise InputError(f"non-finite value at row {bad[0]}, column {bad[1]}")
        self.values = values
        if self.column_types is None:
            self.column_types = [CONTINUOUS] * values.shape[1]
        self.column_types = list(self.column_types)
        if len(self.column_types) != values.shape[1]:
            raise InputError("column_types must have one entry per column")
        for j, kind in enumerate(self.column_types):
            if kind not in COLUMN_TYPES:
                raise InputError(f"column {j}: unknown column type {kind!r}")
            if kind == BINARY and not np.all(np.isin(values[:, j], (0.0, 1.0))):
                raise InputError(f"column {j} is binary but holds values other than 0/1")

    @property
    def T(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]


def embed(series: TimeSeries, k: int) -> TimeSeries:
    """Row ``t`` of the result is (X_t, ..., X_{t+k-1}) concatenated; length T - k + 1."""
    if k < 1:
        raise InputError("embedding order must be at least 1")
    if k > series.T:
        raise InputError(f"embedding order {k} exceeds series length {series.T}")
    T = series.T - k + 1
    values = np.hstack([series.values[i:i + T] for i in range(k)])
    return TimeSeries(values, series.column_types * k)


def chunk_indices(T: int, L: int, Q: Optional[int] = None):
    """Split ``range(T)`` into ``L`` equal contiguous chunks of ``n = T // L`` rows.

    Trailing rows beyond ``L * n`` are dropped with a warning.  Returns ``n``
    and a list of 0-based ``range`` objects.
    """
    if L < 2:
        raise ConfigurationError("L must be at least 2")
    if Q is not None and T < L * (Q + 2):
        raise ConfigurationError(
            f"series of length {T} is too short: need T >= L*(Q+2) = {L * (Q + 2)}"
        )
    n = T // L
    if n < 1:
        raise ConfigurationError(f"series of length {T} cannot be split into {L} chunks")
    if T - L * n:
        log.warning("discarding %d trailing rows so that T is a multiple of L", T - L * n)
    return n, [range(l * n, (l + 1) * n) for l in range(L)]


def deseasonalize(values, period: int) -> np.ndarray:
    """Subtract, per column, the mean over all rows sharing the same phase ``t mod period``."""
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    T = values.shape[0]
    if period <= 0 or period > T:
        raise ConfigurationError(f"period must lie in 1..{T}, got {period}")
    out = values.copy()
    phase = np.arange(T) % period
    for p in range(period):
        rows = phase == p
        out[rows] -= values[rows].mean(axis=0)
    return out


def _parse_float(text: str, row: int, col: int) -> float:
    cell = text.strip()
    if not cell:
        raise InputError(f"blank cell at row {row}, column {col}")
    try:
        value = float(cell)
    except ValueError:
        raise InputError(f"non-numeric cell {cell!r} at row {row}, column {col}") from None
    if not math.isfinite(value):
        raise InputError(f"non-finite cell {cell!r} at row {row}, column {col}")
    return value


def _is_numeric(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def parse_csv(text: str):
    """Parse comma-separated numeric data; a non-numeric first row is a header.

    Returns ``(values, header)`` where ``header`` is None when absent.  Row
    numbers in error messages are 1-based file lines.
    """
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if not rows:
        raise InputError("CSV input is empty")
    header = None
    first = rows[0]
    start = 0
    if any(c.strip() and not _is_numeric(c.strip()) for c in first):
        header = [c.strip() for c in first]
        start = 1
    width = len(rows[start]) if start < len(rows) else len(first)
    data = []
    for i, r in enumerate(rows[start:], start=start + 1):
        if len(r) != width:
            raise InputError(f"row {i} has {len(r)} columns, expected {width}")
        data.append([_parse_float(c, i, j + 1) for j, c in enumerate(r)])
    if not data:
        raise InputError("CSV input has a header but no data rows")
    return np.asarray(data, dtype=float), header


def read_csv(path) -> TimeSeries:
    with open(path, newline="") as fh:
        values, header = parse_csv(fh.read())
    return TimeSeries(values, names=header)


def format_csv(values, header=None) -> str:
    values = np.atleast_2d(np.asarray(values, dtype=float))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if header is not None:
        writer.writerow(header)
    for row in values:
        writer.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def write_csv(path, values, header=None) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(format_csv(values, header))
