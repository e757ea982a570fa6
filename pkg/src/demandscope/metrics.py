"""ROC curves, AUC, one-vs-rest multiclass extension, k-fold aggregation."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .data import N_CLASSES, Dataset, labels_array, stratified_kfold
from .errors import ChecksumMismatch, MissingClass, SingleClassOnly


@dataclass(frozen=True)
class RocCurve:
    thresholds: np.ndarray  # descending, +inf first
    fpr: np.ndarray
    tpr: np.ndarray
    tp: np.ndarray
    fp: np.ndarray
    tn: np.ndarray
    fn: np.ndarray

    def area(self) -> float:
        trapezoid = getattr(np, "trapezoid", np.trapz)
        return float(trapezoid(self.tpr, self.fpr))

    def points_csv(self) -> str:
        lines = ["threshold,fpr,tpr,tp,fp,tn,fn"]
        for i in range(self.thresholds.size):
            lines.append(
                f"{self.thresholds[i]!r},{self.fpr[i]!r},{self.tpr[i]!r},"
                f"{int(self.tp[i])},{int(self.fp[i])},{int(self.tn[i])},{int(self.fn[i])}"
            )
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class CvSummary:
    per_fold: tuple[float, ...]
    mean: float
    std: float  # population std over fold scores
    k: int
    per_class_auc: tuple[float, ...] | None = None

    def to_dict(self) -> dict:
        d = {
            "per_fold": list(self.per_fold),
            "mean": self.mean,
            "std": self.std,
            "k": self.k,
        }
        if self.per_class_auc is not None:
            d["per_class_auc"] = {str(c): a for c, a in enumerate(self.per_class_auc)}
        return d

    def format(self) -> str:
        return f"{self.mean:.2f} ± {self.std:.3f}"


def _check_binary(labels: np.ndarray):
    pos = int(labels.sum())
    if pos == 0 or pos == labels.size:
        raise SingleClassOnly("need both positive and negative labels")


def binary_auc(scores, labels) -> float:
    """Pairwise concordance P(s_pos > s_neg) + 0.5 * P(tie), via average ranks."""
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels, dtype=int)
    _check_binary(y)
    order = np.argsort(s, kind="stable")
    ranks = np.empty(s.size, dtype=float)
    sorted_s = s[order]
    i = 0
    while i < s.size:
        j = i
        while j + 1 < s.size and sorted_s[j + 1] == sorted_s[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0  # average 1-based rank
        i = j + 1
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    rank_sum = float(ranks[y == 1].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def roc_curve(scores, labels) -> RocCurve:
    """One point per distinct score threshold plus the (0,0) endpoint."""
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels, dtype=int)
    _check_binary(y)
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    order = np.argsort(-s, kind="stable")
    sorted_s = s[order]
    sorted_y = y[order]
    cum_tp = np.cumsum(sorted_y)
    cum_fp = np.cumsum(1 - sorted_y)
    # keep the last index of each distinct score
    distinct = np.flatnonzero(np.r_[sorted_s[1:] != sorted_s[:-1], True])
    tp = np.r_[0, cum_tp[distinct]]
    fp = np.r_[0, cum_fp[distinct]]
    thresholds = np.r_[np.inf, sorted_s[distinct]]
    return RocCurve(
        thresholds,
        fp / n_neg,
        tp / n_pos,
        tp,
        fp,
        n_neg - fp,
        n_pos - tp,
    )


def macro_ovr_auc(probs, labels) -> tuple[float, list[float]]:
    """Unweighted mean of per-class one-vs-rest AUCs."""
    p = np.atleast_2d(np.asarray(probs, dtype=float))
    y = np.asarray(labels, dtype=int)
    n_classes = p.shape[1]
    per_class = []
    for c in range(n_classes):
        binary = (y == c).astype(int)
        if binary.sum() == 0:
            raise MissingClass(c)
        per_class.append(binary_auc(p[:, c], binary))
    return float(np.mean(per_class)), per_class


def cross_validate(dataset: Dataset, pipeline, k: int = 5, seed: int = 0) -> CvSummary:
    """Stratified k-fold loop; `pipeline(dataset, train_idx, test_idx, fold_seed)`
    must return held-out class probabilities of shape (len(test_idx), C)."""
    plan = stratified_kfold(dataset, k, seed)
    labels = labels_array(dataset)
    fold_seeds = [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(k)]
    scores = []
    per_class_total = np.zeros(N_CLASSES)
    for fold in range(k):
        test_idx = plan.test_indices(fold)
        train_idx = plan.train_indices(fold)
        probs = pipeline(dataset, train_idx, test_idx, fold_seeds[fold])
        macro, per_class = macro_ovr_auc(probs, labels[test_idx])
        scores.append(macro)
        per_class_total += np.asarray(per_class)
    arr = np.array(scores)
    return CvSummary(
        tuple(float(x) for x in scores),
        float(arr.mean()),
        float(arr.std()),  # population std
        k,
        tuple(float(x) for x in per_class_total / k),
    )


@dataclass(frozen=True)
class RetestResult:
    ok: bool
    first_diff: tuple[int, int, float, float] | None = None  # row, col, expected, got

    def __bool__(self) -> bool:
        return self.ok


def test_retest(checkpoint_path, rows: np.ndarray, repeats: int = 3) -> RetestResult:
    """True iff repeated evaluations of the stored model are bitwise identical."""
    from .spacenet import load_checkpoint, predict_proba

    params, config, _ = load_checkpoint(checkpoint_path)
    reference = predict_proba(params, config, rows)
    for _ in range(repeats):
        params_r, config_r, _ = load_checkpoint(checkpoint_path)
        probs = predict_proba(params_r, config_r, rows)
        if not np.array_equal(reference, probs):
            diff = np.argwhere(reference != probs)[0]
            i, j = int(diff[0]), int(diff[1])
            return RetestResult(False, (i, j, float(reference[i, j]), float(probs[i, j])))
    return RetestResult(True)


def compare_checkpoint_outputs(checkpoint_path, rows: np.ndarray, expected: np.ndarray) -> None:
    from .spacenet import load_checkpoint, predict_proba

    params, config, _ = load_checkpoint(checkpoint_path)
    probs = predict_proba(params, config, rows)
    if not np.array_equal(expected, probs):
        diff = np.argwhere(expected != probs)[0]
        i, j = int(diff[0]), int(diff[1])
        raise ChecksumMismatch(
            f"first differing cell ({i}, {j}): expected {expected[i, j]!r}, got {probs[i, j]!r}"
        )
