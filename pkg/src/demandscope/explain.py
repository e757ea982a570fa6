"""Shapley-value attributions: exact enumeration, permutation sampling, reports."""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyInput, InvalidConfig, TooManyFeaturesForExact

EXACT_FEATURE_LIMIT = 14  # 2^14 subset evaluations is the desk-scale budget


@dataclass(frozen=True)
class BackgroundSet:
    """Reference rows (training partition only) defining the base distribution."""

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", np.atleast_2d(np.asarray(self.values, dtype=float)))
        if self.values.shape[0] == 0:
            raise EmptyInput("background set must be non-empty")

    @classmethod
    def sample(cls, train_values: np.ndarray, size: int = 100, seed: int = 0) -> "BackgroundSet":
        train_values = np.atleast_2d(train_values)
        rng = np.random.default_rng(seed)
        n = train_values.shape[0]
        take = min(size, n)
        idx = rng.choice(n, size=take, replace=False)
        return cls(train_values[np.sort(idx)])


@dataclass(frozen=True)
class Explanation:
    index: int
    feature_names: tuple[str, ...]
    base: np.ndarray  # (C,) mean model output over background
    phi: np.ndarray  # (M, C)
    raw_values: tuple  # source-feature raw values of the instance
    class_probs: np.ndarray  # (C,) model output at the instance

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "class_probs": self.class_probs.tolist(),
            "base": self.base.tolist(),
            "phi": {name: self.phi[i].tolist() for i, name in enumerate(self.feature_names)},
            "raw_values": list(self.raw_values),
        }


@dataclass(frozen=True)
class GlobalSummary:
    feature_names: tuple[str, ...]
    mean_abs: np.ndarray  # (M, C)
    order: tuple[int, ...]  # feature indices by descending summed mean |phi|

    def ranked_features(self) -> list[str]:
        return [self.feature_names[i] for i in self.order]


@dataclass(frozen=True)
class ClassSummary:
    class_index: int
    feature_names: tuple[str, ...]  # ordered by mean |phi| for the class
    phi: np.ndarray  # (M, n_explanations), rows follow feature_names order
    values: np.ndarray  # same shape, per-instance feature values for color mapping


@dataclass(frozen=True)
class WaterfallStep:
    feature: str
    phi: float
    cumulative: float


@dataclass(frozen=True)
class WaterfallRecord:
    class_index: int
    base: float
    steps: tuple[WaterfallStep, ...]
    endpoint: float


def _exact_all_classes(model_fn, x, background: BackgroundSet, groups) -> np.ndarray:
    """Full subset enumeration, every class at once; returns phi of shape (M, C)."""
    x = np.asarray(x, dtype=float)
    M = len(groups)
    if M > EXACT_FEATURE_LIMIT:
        raise TooManyFeaturesForExact(f"{M} source features exceeds the 2^{EXACT_FEATURE_LIMIT} bound")
    B = background.values.shape[0]
    probe = np.atleast_2d(model_fn(background.values))
    n_classes = probe.shape[1]
    # value of every subset, indexed by bitmask
    values = np.empty((1 << M, n_classes))
    chunk = 64  # masks per stacked model call
    for start in range(0, 1 << M, chunk):
        masks = range(start, min(start + chunk, 1 << M))
        batch = np.tile(background.values, (len(masks), 1))
        for s, mask in enumerate(masks):
            for f in range(M):
                if (mask >> f) & 1:
                    for col in groups[f][1]:
                        batch[s * B : (s + 1) * B, col] = x[col]
        out = np.atleast_2d(model_fn(batch)).reshape(len(masks), B, n_classes)
        values[start : start + len(masks)] = out.mean(axis=1)
    fact = [math.factorial(i) for i in range(M + 1)]
    phi = np.zeros((M, n_classes))
    for f in range(M):
        bit = 1 << f
        for mask in range(1 << M):
            if mask & bit:
                continue
            size = bin(mask).count("1")
            weight = fact[size] * fact[M - size - 1] / fact[M]
            phi[f] += weight * (values[mask | bit] - values[mask])
    return phi


def exact_shapley(model_fn, x, background: BackgroundSet, class_index: int, groups) -> np.ndarray:
    """Shapley values by full subset enumeration over source features.

    groups is a list of (feature_name, column_indices); categorical one-hot
    blocks toggle atomically.
    """
    return _exact_all_classes(model_fn, x, background, groups)[:, class_index]


def _sampled_all_classes(model_fn, x, background, groups, n_permutations, seed, exhaustive):
    """Permutation sampling for every class at once.

    Each permutation becomes one stacked model call: block s holds the
    background with the first s+1 features of the ordering pinned to x,
    so the M prefix coalitions are scored together.
    """
    x = np.asarray(x, dtype=float)
    M = len(groups)
    if n_permutations < 1:
        raise InvalidConfig("n_permutations must be >= 1")
    if exhaustive:
        perms = list(itertools.permutations(range(M)))
    else:
        rng = np.random.default_rng(seed)
        perms = [rng.permutation(M) for _ in range(n_permutations)]
    B = background.values.shape[0]
    base = np.atleast_2d(model_fn(background.values)).mean(axis=0)  # (C,)
    fx = np.atleast_2d(model_fn(x[None, :]))[0]
    n_classes = base.size
    sums = np.zeros((M, n_classes))
    sq_sums = np.zeros((M, n_classes))
    for perm in perms:
        batch = np.tile(background.values, (M, 1))
        for s, f in enumerate(perm):
            for col in groups[f][1]:
                batch[s * B :, col] = x[col]  # present from block s onward
        out = np.atleast_2d(model_fn(batch)).reshape(M, B, n_classes)
        values = out.mean(axis=1)  # (M, C), prefix coalitions in order
        prev = base
        for s, f in enumerate(perm):
            marginal = values[s] - prev
            sums[f] += marginal
            sq_sums[f] += marginal * marginal
            prev = values[s]
    count = len(perms)
    phi = sums / count
    if count > 1:
        var = np.maximum(sq_sums / count - phi**2, 0.0)
        stderr = np.sqrt(var / count)
    else:
        stderr = np.zeros((M, n_classes))
    phi += (fx - base - phi.sum(axis=0)) / M
    return phi, stderr


def sampled_shapley(
    model_fn,
    x,
    background: BackgroundSet,
    class_index: int,
    groups,
    n_permutations: int = 200,
    seed: int = 0,
    exhaustive: bool = False,
) -> tuple[np.ndarray, np.ndarray]:
    """Permutation-sampling Shapley estimate with per-feature standard errors.

    The estimate is additively shifted so efficiency holds exactly:
    sum(phi) == f(x) - base.
    """
    phi, stderr = _sampled_all_classes(
        model_fn, x, background, groups, n_permutations, seed, exhaustive
    )
    return phi[:, class_index], stderr[:, class_index]


def explain_instance(
    model_fn,
    x,
    background: BackgroundSet,
    groups,
    index: int = 0,
    raw_values=None,
    mode: str = "exact",
    n_permutations: int = 200,
    seed: int = 0,
) -> Explanation:
    """Per-feature attribution for every class of a single instance."""
    x = np.asarray(x, dtype=float)
    base_out = np.atleast_2d(model_fn(background.values)).mean(axis=0)
    probs = np.atleast_2d(model_fn(x[None, :]))[0]
    if mode == "exact":
        phi = _exact_all_classes(model_fn, x, background, groups)
    elif mode == "sampled":
        phi, _ = _sampled_all_classes(
            model_fn, x, background, groups, n_permutations, seed, exhaustive=False
        )
    else:
        raise InvalidConfig(f"unknown explanation mode {mode!r}")
    names = tuple(name for name, _cols in groups)
    if raw_values is None:
        raw_values = tuple(float(x[cols[0]]) for _name, cols in groups)
    return Explanation(index, names, base_out, phi, tuple(raw_values), probs)


def global_summary(explanations) -> GlobalSummary:
    """Mean |phi| per feature per class, features ordered by total impact."""
    if not explanations:
        raise EmptyInput("need at least one explanation")
    names = explanations[0].feature_names
    stacked = np.stack([np.abs(e.phi) for e in explanations])
    mean_abs = stacked.mean(axis=0)
    order = tuple(int(i) for i in np.argsort(-mean_abs.sum(axis=1), kind="stable"))
    return GlobalSummary(names, mean_abs, order)


def class_summary(explanations, class_index: int) -> ClassSummary:
    """Beeswarm backing data: per-instance phi and feature values for one class."""
    if not explanations:
        raise EmptyInput("need at least one explanation")
    names = explanations[0].feature_names
    phi = np.stack([e.phi[:, class_index] for e in explanations], axis=1)  # (M, n)
    values = np.stack(
        [[float(v) if isinstance(v, (int, float)) else float("nan") for v in e.raw_values]
         for e in explanations],
        axis=1,
    )
    order = np.argsort(-np.abs(phi).mean(axis=1), kind="stable")
    return ClassSummary(
        class_index,
        tuple(names[i] for i in order),
        phi[order],
        values[order],
    )


def waterfall(explanation: Explanation, class_index: int | None = None) -> WaterfallRecord:
    """Signed contributions for the argmax class, sorted by |phi| descending."""
    if class_index is None:
        class_index = int(np.argmax(explanation.class_probs))
    base = float(explanation.base[class_index])
    phis = explanation.phi[:, class_index]
    order = np.argsort(-np.abs(phis), kind="stable")
    steps = []
    cum = base
    for i in order:
        cum += float(phis[i])
        steps.append(WaterfallStep(explanation.feature_names[i], float(phis[i]), cum))
    return WaterfallRecord(class_index, base, tuple(steps), cum)


def instance_report(explanation: Explanation, record: WaterfallRecord) -> dict:
    return {
        "class_index": record.class_index,
        "predicted_probability": float(explanation.class_probs[record.class_index]),
        "base": record.base,
        "steps": [
            {"feature": s.feature, "phi": s.phi, "cumulative": s.cumulative}
            for s in record.steps
        ],
        "endpoint": record.endpoint,
        "raw_values": {
            name: value
            for name, value in zip(explanation.feature_names, explanation.raw_values)
        },
    }
