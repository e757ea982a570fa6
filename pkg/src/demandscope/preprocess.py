"""IQR outlier filtering and leakage-safe standard normalization."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .data import CONTINUOUS, Dataset, EncodedMatrix
from .errors import EmptyInput, EmptySubset, LayoutMismatch, NotContinuous, TooFewValues, UnknownColumn

IQR_MULTIPLIER = 1.5


@dataclass(frozen=True)
class IqrBounds:
    q1: float
    q3: float
    iqr: float
    lo: float
    hi: float

    def contains(self, x: float) -> bool:
        return self.lo <= x <= self.hi


@dataclass(frozen=True)
class CleaningReport:
    bounds: dict[str, IqrBounds]
    dropped_row_indices: tuple[int, ...]
    kept: int

    def to_dict(self) -> dict:
        return {
            "columns": {
                name: {"q1": b.q1, "q3": b.q3, "iqr": b.iqr, "lo": b.lo, "hi": b.hi}
                for name, b in self.bounds.items()
            },
            "dropped": list(self.dropped_row_indices),
            "kept": self.kept,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


@dataclass(frozen=True)
class Standardizer:
    """Per-column mean and population std, fitted on a row subset only."""

    mean: np.ndarray
    std: np.ndarray
    continuous_mask: np.ndarray
    column_names: tuple[str, ...]
    fitted_on: int


def quantile(values, q: float) -> float:
    """Linear-interpolation quantile at position q*(n-1) ("type 7")."""
    xs = np.sort(np.asarray(values, dtype=float))
    if xs.size == 0:
        raise EmptyInput("quantile of empty input")
    pos = q * (xs.size - 1)
    lo = int(np.floor(pos))
    hi = min(lo + 1, xs.size - 1)
    frac = pos - lo
    return float(xs[lo] * (1.0 - frac) + xs[hi] * frac)


def iqr_bounds(values) -> IqrBounds:
    xs = np.asarray(values, dtype=float)
    if xs.size < 4:
        raise TooFewValues(f"need >= 4 values, got {xs.size}")
    q1 = quantile(xs, 0.25)
    q3 = quantile(xs, 0.75)
    iqr = q3 - q1
    return IqrBounds(q1, q3, iqr, q1 - IQR_MULTIPLIER * iqr, q3 + IQR_MULTIPLIER * iqr)


def filter_outliers(dataset: Dataset, columns=None) -> tuple[Dataset, CleaningReport]:
    """Drop any row with a value outside the 1.5*IQR fences of a selected column.

    Bounds are computed once on the full input, so repeated application may
    drop additional rows (not idempotent).
    """
    if columns is None:
        columns = dataset.schema.continuous_names
    bounds: dict[str, IqrBounds] = {}
    for name in columns:
        try:
            spec = dataset.schema.feature(name)
        except Exception:
            raise UnknownColumn(f"no column named {name!r}")
        if spec.kind != CONTINUOUS:
            raise NotContinuous(f"column {name!r} is not continuous")
        bounds[name] = iqr_bounds(dataset.column(name))
    dropped = []
    kept_idx = []
    for i, row in enumerate(dataset.rows):
        bad = any(
            not bounds[name].contains(row[dataset.schema.index_of(name)]) for name in bounds
        )
        (dropped if bad else kept_idx).append(i)
    cleaned = dataset.subset(kept_idx)
    return cleaned, CleaningReport(bounds, tuple(dropped), len(kept_idx))


def fit_standardizer(matrix: EncodedMatrix, rows=None) -> Standardizer:
    """Mean and population std of each continuous column over the given rows."""
    if rows is None:
        rows = np.arange(matrix.n)
    rows = np.asarray(list(rows), dtype=int)
    if rows.size == 0:
        raise EmptySubset("cannot fit a standardizer on an empty subset")
    sub = matrix.values[rows]
    mean = np.zeros(matrix.m)
    std = np.zeros(matrix.m)
    cont = matrix.continuous_mask
    mean[cont] = sub[:, cont].mean(axis=0)
    std[cont] = sub[:, cont].std(axis=0)  # population std
    return Standardizer(mean, std, cont.copy(), matrix.column_names, int(rows.size))


def apply_standardizer(std: Standardizer, matrix: EncodedMatrix) -> EncodedMatrix:
    """(x - mean)/std on continuous columns; constant columns map to 0."""
    if std.column_names != matrix.column_names:
        raise LayoutMismatch("matrix columns differ from the fitted layout")
    values = matrix.values.copy()
    cont = std.continuous_mask
    denom = np.where(std.std[cont] > 0.0, std.std[cont], 1.0)
    centered = (values[:, cont] - std.mean[cont]) / denom
    centered[:, std.std[cont] == 0.0] = 0.0
    values[:, cont] = centered
    return matrix.with_values(values)


def invert_standardizer(std: Standardizer, matrix: EncodedMatrix) -> EncodedMatrix:
    """Inverse affine map on non-constant continuous columns."""
    if std.column_names != matrix.column_names:
        raise LayoutMismatch("matrix columns differ from the fitted layout")
    values = matrix.values.copy()
    cont = std.continuous_mask
    restored = values[:, cont] * np.where(std.std[cont] > 0.0, std.std[cont], 0.0) + std.mean[cont]
    values[:, cont] = restored
    return matrix.with_values(values)
