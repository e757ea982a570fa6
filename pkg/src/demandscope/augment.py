"""SMOTE oversampling on the encoded (and already standardized) training split."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import EncodedMatrix
from .errors import EmptyClass, InvalidConfig


@dataclass(frozen=True)
class SmoteParams:
    k_neighbors: int = 5
    target: dict[int, int] | None = None  # None -> majority class count for every class
    seed: int = 0

    def __post_init__(self):
        if self.k_neighbors < 1:
            raise InvalidConfig("k_neighbors must be >= 1")


@dataclass(frozen=True)
class SyntheticPoint:
    """Provenance of one synthetic row: x + lam * (neighbor - x)."""

    parent_index: int
    neighbor_index: int
    lam: float
    label: int


@dataclass(frozen=True)
class SmoteResult:
    matrix: EncodedMatrix
    labels: np.ndarray
    log: tuple[SyntheticPoint, ...]


def smote(matrix: EncodedMatrix, labels, params: SmoteParams) -> SmoteResult:
    """Balance class counts by interpolating between same-class nearest neighbors.

    Original rows come first, unchanged; synthetic rows follow in class-code
    order. Every synthetic point is logged with its parent, neighbor and
    interpolation coefficient so geometry can be audited afterwards.
    """
    X = matrix.values
    y = np.asarray([int(l) for l in labels], dtype=int)
    if y.size != X.shape[0]:
        raise InvalidConfig("labels length must match matrix rows")
    classes = sorted(set(y.tolist()))
    counts = {c: int(np.sum(y == c)) for c in classes}
    if params.target is None:
        majority = max(counts.values())
        target = {c: majority for c in classes}
    else:
        target = dict(params.target)
        for c, t in target.items():
            if counts.get(c, 0) == 0:
                raise EmptyClass(f"class {c} has no members")
            if t < counts[c]:
                raise InvalidConfig(f"target {t} below current count {counts[c]} for class {c}")
    rng = np.random.default_rng(params.seed)
    new_rows = []
    new_labels = []
    log = []
    for c in classes:
        need = target.get(c, counts[c]) - counts[c]
        if need <= 0:
            continue
        idx = np.flatnonzero(y == c)
        if idx.size == 1:
            # lone sample: duplicate itself
            for _ in range(need):
                new_rows.append(X[idx[0]].copy())
                new_labels.append(c)
                log.append(SyntheticPoint(int(idx[0]), int(idx[0]), 0.0, c))
            continue
        k = min(params.k_neighbors, idx.size - 1)
        # pairwise distances within the class, self excluded
        pts = X[idx]
        d2 = np.sum((pts[:, None, :] - pts[None, :, :]) ** 2, axis=-1)
        np.fill_diagonal(d2, np.inf)
        neighbor_ids = np.argsort(d2, axis=1, kind="stable")[:, :k]
        for _ in range(need):
            p = int(rng.integers(0, idx.size))
            nb = int(neighbor_ids[p, int(rng.integers(0, k))])
            lam = float(rng.uniform(0.0, 1.0))
            new_rows.append(pts[p] + lam * (pts[nb] - pts[p]))
            new_labels.append(c)
            log.append(SyntheticPoint(int(idx[p]), int(idx[nb]), lam, c))
    if new_rows:
        values = np.vstack([X, np.array(new_rows)])
        labels_out = np.concatenate([y, np.array(new_labels, dtype=int)])
    else:
        values = X.copy()
        labels_out = y.copy()
    return SmoteResult(matrix.with_values(values), labels_out, tuple(log))
