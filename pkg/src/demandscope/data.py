"""Dataset representation, CSV ingestion, one-hot encoding, stratified folds."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from .errors import (
    InvalidConfig,
    LabelOutOfRange,
    MissingColumn,
    NonFiniteValue,
    TooFewSamplesForClass,
    UnknownCategory,
)


class TravelClass(IntEnum):
    NO_TRAVEL = 0
    MOON = 1
    SUBORBITAL = 2
    ORBITAL = 3


N_CLASSES = len(TravelClass)

CONTINUOUS = "continuous"
CATEGORICAL = "categorical"


@dataclass(frozen=True)
class FeatureSpec:
    name: str
    kind: str
    categories: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.name:
            raise InvalidConfig("feature name must be non-empty")
        if self.kind not in (CONTINUOUS, CATEGORICAL):
            raise InvalidConfig(f"unknown feature kind {self.kind!r}")
        if self.kind == CATEGORICAL and len(self.categories) < 2:
            raise InvalidConfig(f"categorical feature {self.name!r} needs >= 2 categories")
        if self.kind == CONTINUOUS and self.categories:
            raise InvalidConfig(f"continuous feature {self.name!r} must not list categories")
        object.__setattr__(self, "categories", tuple(self.categories))


@dataclass(frozen=True)
class Schema:
    features: tuple[FeatureSpec, ...]
    label_name: str = "travel_class"

    def __post_init__(self):
        object.__setattr__(self, "features", tuple(self.features))
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            raise InvalidConfig("feature names must be unique")
        if self.label_name in names:
            raise InvalidConfig("label name clashes with a feature name")

    @property
    def feature_names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.features)

    @property
    def continuous_names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.features if f.kind == CONTINUOUS)

    def feature(self, name: str) -> FeatureSpec:
        for f in self.features:
            if f.name == name:
                return f
        raise MissingColumn(f"no feature named {name!r}")

    def index_of(self, name: str) -> int:
        for i, f in enumerate(self.features):
            if f.name == name:
                return i
        raise MissingColumn(f"no feature named {name!r}")

    def to_dict(self) -> dict:
        return {
            "label_name": self.label_name,
            "features": [
                {"name": f.name, "kind": f.kind, "categories": list(f.categories)}
                for f in self.features
            ],
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "Schema":
        features = tuple(
            FeatureSpec(f["name"], f["kind"], tuple(f.get("categories", ())))
            for f in payload["features"]
        )
        return cls(features, payload["label_name"])


@dataclass(frozen=True)
class Dataset:
    """Validated raw table: one tuple of cells per row plus integer labels."""

    schema: Schema
    rows: tuple[tuple, ...]
    labels: tuple[TravelClass, ...]

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(tuple(r) for r in self.rows))
        object.__setattr__(self, "labels", tuple(TravelClass(l) for l in self.labels))
        if len(self.rows) != len(self.labels):
            raise InvalidConfig("rows and labels length mismatch")
        m = len(self.schema.features)
        for i, row in enumerate(self.rows):
            if len(row) != m:
                raise InvalidConfig(f"row {i} has {len(row)} cells, expected {m}")
            for spec, cell in zip(self.schema.features, row):
                if spec.kind == CONTINUOUS:
                    if not isinstance(cell, (int, float)) or not math.isfinite(cell):
                        raise NonFiniteValue(i, spec.name)
                else:
                    if cell not in spec.categories:
                        raise UnknownCategory(i, spec.name, cell)

    @property
    def n(self) -> int:
        return len(self.rows)

    def subset(self, indices) -> "Dataset":
        idx = list(indices)
        return Dataset(
            self.schema,
            tuple(self.rows[i] for i in idx),
            tuple(self.labels[i] for i in idx),
        )

    def column(self, name: str) -> np.ndarray:
        j = self.schema.index_of(name)
        return np.array([row[j] for row in self.rows], dtype=float)


@dataclass(frozen=True)
class EncodedMatrix:
    """Purely numeric view of a Dataset: continuous columns as-is, categoricals one-hot."""

    values: np.ndarray
    column_names: tuple[str, ...]
    origin: tuple[str, ...]  # source feature of each column
    continuous_mask: np.ndarray  # bool per column, False on one-hot columns

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        object.__setattr__(self, "column_names", tuple(self.column_names))
        object.__setattr__(self, "origin", tuple(self.origin))
        object.__setattr__(self, "continuous_mask", np.asarray(self.continuous_mask, dtype=bool))
        if self.values.ndim != 2 or self.values.shape[1] != len(self.column_names):
            raise InvalidConfig("encoded matrix shape does not match column names")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def m(self) -> int:
        return self.values.shape[1]

    @property
    def source_features(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for o in self.origin:
            seen.setdefault(o)
        return tuple(seen)

    def columns_of(self, feature: str) -> list[int]:
        return [j for j, o in enumerate(self.origin) if o == feature]

    def feature_groups(self) -> list[tuple[str, list[int]]]:
        return [(f, self.columns_of(f)) for f in self.source_features]

    def with_values(self, values: np.ndarray) -> "EncodedMatrix":
        return EncodedMatrix(values, self.column_names, self.origin, self.continuous_mask)

    def select_features(self, features) -> "EncodedMatrix":
        keep = set(features)
        cols = [j for j, o in enumerate(self.origin) if o in keep]
        return EncodedMatrix(
            self.values[:, cols],
            tuple(self.column_names[j] for j in cols),
            tuple(self.origin[j] for j in cols),
            self.continuous_mask[cols],
        )

    def take_rows(self, indices) -> "EncodedMatrix":
        return self.with_values(self.values[np.asarray(list(indices), dtype=int)])


@dataclass(frozen=True)
class FoldPlan:
    k: int
    assignments: tuple[int, ...]
    seed: int

    def test_indices(self, fold: int) -> np.ndarray:
        return np.array([i for i, f in enumerate(self.assignments) if f == fold], dtype=int)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.array([i for i, f in enumerate(self.assignments) if f != fold], dtype=int)


def encode(dataset: Dataset) -> EncodedMatrix:
    """Expand a Dataset into an n x m numeric matrix in schema order."""
    names: list[str] = []
    origin: list[str] = []
    cont: list[bool] = []
    for spec in dataset.schema.features:
        if spec.kind == CONTINUOUS:
            names.append(spec.name)
            origin.append(spec.name)
            cont.append(True)
        else:
            for cat in spec.categories:
                names.append(f"{spec.name}={cat}")
                origin.append(spec.name)
                cont.append(False)
    values = np.zeros((dataset.n, len(names)))
    col = 0
    for j, spec in enumerate(dataset.schema.features):
        if spec.kind == CONTINUOUS:
            values[:, col] = [row[j] for row in dataset.rows]
            col += 1
        else:
            cat_index = {c: t for t, c in enumerate(spec.categories)}
            for i, row in enumerate(dataset.rows):
                values[i, col + cat_index[row[j]]] = 1.0
            col += len(spec.categories)
    return EncodedMatrix(values, names, origin, np.array(cont))


def stratified_kfold(dataset: Dataset, k: int, seed: int) -> FoldPlan:
    """Assign rows to k folds with per-class counts differing by at most one."""
    if k < 2:
        raise InvalidConfig("k must be >= 2")
    labels = np.array([int(l) for l in dataset.labels])
    assignments = np.full(dataset.n, -1, dtype=int)
    rng = np.random.default_rng(seed)
    offset = 0
    for cls in sorted(set(labels.tolist())):
        idx = np.flatnonzero(labels == cls)
        if len(idx) < k:
            raise TooFewSamplesForClass(cls, len(idx))
        rng.shuffle(idx)
        for pos, i in enumerate(idx):
            assignments[i] = (offset + pos) % k
        # rotate the starting fold so remainders spread over folds
        offset = (offset + len(idx)) % k
    return FoldPlan(k, tuple(int(a) for a in assignments), seed)


def labels_array(dataset: Dataset) -> np.ndarray:
    return np.array([int(l) for l in dataset.labels], dtype=int)


def _parse_cell(token: str, spec: FeatureSpec, row_index: int):
    if spec.kind == CONTINUOUS:
        try:
            value = float(token)
        except ValueError:
            raise NonFiniteValue(row_index, spec.name)
        if not math.isfinite(value):
            raise NonFiniteValue(row_index, spec.name)
        return value
    if token not in spec.categories:
        raise UnknownCategory(row_index, spec.name, token)
    return token


def load_csv(path, schema: Schema) -> Dataset:
    """Read a UTF-8 comma-separated file whose header matches the schema names."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MissingColumn("empty file")
        positions = {}
        for name in list(schema.feature_names) + [schema.label_name]:
            if name not in header:
                raise MissingColumn(f"column {name!r} missing from header")
            positions[name] = header.index(name)
        rows = []
        labels = []
        for i, record in enumerate(reader):
            cells = []
            for spec in schema.features:
                cells.append(_parse_cell(record[positions[spec.name]], spec, i))
            token = record[positions[schema.label_name]]
            try:
                code = int(token)
            except ValueError:
                raise LabelOutOfRange(f"row {i}: label {token!r} is not an integer code")
            if code not in (int(c) for c in TravelClass):
                raise LabelOutOfRange(f"row {i}: label code {code} outside 0..{N_CLASSES - 1}")
            rows.append(tuple(cells))
            labels.append(TravelClass(code))
    return Dataset(schema, tuple(rows), tuple(labels))


def save_csv(dataset: Dataset, path) -> None:
    """Write the dataset so load_csv reproduces it exactly (floats via repr)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(dataset.schema.feature_names) + [dataset.schema.label_name])
        for row, label in zip(dataset.rows, dataset.labels):
            cells = []
            for spec, cell in zip(dataset.schema.features, row):
                cells.append(repr(float(cell)) if spec.kind == CONTINUOUS else cell)
            writer.writerow(cells + [int(label)])
