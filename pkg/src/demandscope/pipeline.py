"""Pipeline configuration and the leakage-safe per-fold training routine."""

from __future__ import annotations

import hashlib
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields

import numpy as np

from .augment import SmoteParams, smote
from .data import Dataset, EncodedMatrix, encode, labels_array, stratified_kfold
from .errors import InvalidConfig
from .forest import ForestParams, feature_importance, fit_forest, select_top_k
from .metrics import CvSummary, macro_ovr_auc
from .preprocess import apply_standardizer, fit_standardizer
from .spacenet import ModelConfig, TrainConfig, predict_proba, train

THREADS_ENV = "DEMANDSCOPE_THREADS"


@dataclass
class PipelineConfig:
    """Flat dotted-key configuration covering every pipeline stage."""

    input_csv: str = "dataset.csv"
    out_dir: str = "out"
    seed: int = 0

    clean_enabled: bool = True
    clean_columns: str = "all"  # comma-separated continuous names, or "all"

    select_top_k: int = 25
    select_n_trees: int = 100
    select_max_depth: int = 5
    select_min_samples_split: int = 80

    smote_enabled: bool = True
    smote_k_neighbors: int = 5

    model_d_model: int = 64
    model_n_heads: int = 2
    model_n_layers: int = 2
    model_mlp_hidden: int = 32
    model_dropout_p: float = 0.1

    train_lr: float = 1e-3
    train_weight_decay: float = 1e-5
    train_batch_size: int = 64
    train_epochs: int = 50

    cv_k: int = 5

    explain_mode: str = "sampled"  # exact | sampled
    explain_n_permutations: int = 20
    explain_background: int = 100
    explain_instances: int = 40

    synth_n: int = 1860
    synth_noise_scale: float = 1.0
    synth_outlier_rate: float = 0.0

    @classmethod
    def _keymap(cls) -> dict[str, str]:
        mapping = {"seed": "seed", "data.input_csv": "input_csv", "data.out_dir": "out_dir"}
        for f in fields(cls):
            if f.name in mapping.values():
                continue
            head, _, tail = f.name.partition("_")
            mapping[f"{head}.{tail}"] = f.name
        return mapping

    def to_flat_dict(self) -> dict[str, str]:
        out = {}
        for dotted, attr in sorted(self._keymap().items()):
            out[dotted] = str(getattr(self, attr))
        return out

    @classmethod
    def from_flat_dict(cls, flat: dict[str, str]) -> "PipelineConfig":
        config = cls()
        config.apply_overrides(flat)
        return config

    def apply_overrides(self, flat: dict[str, str]) -> None:
        keymap = self._keymap()
        types = {f.name: f.type for f in fields(self)}
        for dotted, raw in flat.items():
            if dotted not in keymap:
                raise InvalidConfig(f"unknown config key {dotted!r}")
            attr = keymap[dotted]
            current = getattr(self, attr)
            if isinstance(current, bool):
                value = str(raw).strip().lower() in ("1", "true", "yes", "on")
            elif isinstance(current, int):
                value = int(raw)
            elif isinstance(current, float):
                value = float(raw)
            else:
                value = str(raw)
            setattr(self, attr, value)

    def digest(self) -> str:
        canon = "\n".join(f"{k}={v}" for k, v in sorted(self.to_flat_dict().items()))
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()

    def forest_params(self, seed: int) -> ForestParams:
        return ForestParams(
            n_trees=self.select_n_trees,
            max_depth=self.select_max_depth,
            min_samples_split=self.select_min_samples_split,
            seed=seed,
        )

    def model_config(self, seed: int) -> ModelConfig:
        return ModelConfig(
            d_model=self.model_d_model,
            n_heads=self.model_n_heads,
            n_layers=self.model_n_layers,
            mlp_hidden=self.model_mlp_hidden,
            dropout_p=self.model_dropout_p,
            seed=seed,
        )

    def train_config(self, seed: int) -> TrainConfig:
        return TrainConfig(
            lr=self.train_lr,
            weight_decay=self.train_weight_decay,
            batch_size=self.train_batch_size,
            epochs=self.train_epochs,
            seed=seed,
        )


def parse_config_file(path) -> dict[str, str]:
    """Flat `key = value` document; blank lines and # comments ignored."""
    flat = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise InvalidConfig(f"{path}:{lineno}: expected 'key = value'")
            key, _, value = line.partition("=")
            flat[key.strip()] = value.strip()
    return flat


def worker_count() -> int:
    env = os.environ.get(THREADS_ENV)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


@dataclass
class FittedPipeline:
    """Everything needed to score new rows: standardizer, feature set, model."""

    standardizer: object
    selected_features: tuple[str, ...] | None
    importance: object
    model_params: object
    model_config: ModelConfig
    history: object
    column_names: tuple[str, ...]

    def transform(self, matrix: EncodedMatrix) -> EncodedMatrix:
        std = apply_standardizer(self.standardizer, matrix)
        if self.selected_features is not None:
            std = std.select_features(self.selected_features)
        return std

    def predict_proba(self, matrix: EncodedMatrix) -> np.ndarray:
        return predict_proba(self.model_params, self.model_config, self.transform(matrix).values)


def fit_pipeline(
    matrix: EncodedMatrix,
    labels: np.ndarray,
    config: PipelineConfig,
    seed: int,
    use_top_k: bool = True,
) -> FittedPipeline:
    """Standardize, select features by forest importance, SMOTE, train the model.

    Every fitted component sees only the rows in `matrix` (callers pass the
    training partition), so fold evaluation is leakage-free.
    """
    seeds = np.random.SeedSequence(seed).generate_state(4)
    standardizer = fit_standardizer(matrix)
    std_matrix = apply_standardizer(standardizer, matrix)

    importance = None
    selected = None
    if use_top_k:
        forest = fit_forest(std_matrix, labels, config.forest_params(int(seeds[0])))
        importance = feature_importance(forest)
        selected = tuple(select_top_k(importance, min(config.select_top_k, len(importance.features))))
        std_matrix = std_matrix.select_features(selected)

    train_X = std_matrix.values
    train_y = labels
    if config.smote_enabled:
        result = smote(
            std_matrix,
            labels,
            SmoteParams(k_neighbors=config.smote_k_neighbors, seed=int(seeds[1])),
        )
        train_X = result.matrix.values
        train_y = result.labels

    model_config = config.model_config(int(seeds[2]))
    train_cfg = config.train_config(int(seeds[3]))
    params, history = train(train_X, train_y, model_config, train_cfg)
    return FittedPipeline(
        standardizer,
        selected,
        importance,
        params,
        model_config,
        history,
        matrix.column_names,
    )


def make_fold_pipeline(config: PipelineConfig, use_top_k: bool = True):
    """Adapter for metrics.cross_validate: fit on train rows, score test rows."""

    def run(dataset: Dataset, train_idx, test_idx, fold_seed: int) -> np.ndarray:
        matrix = encode(dataset)
        labels = labels_array(dataset)
        fitted = fit_pipeline(
            matrix.take_rows(train_idx), labels[train_idx], config, fold_seed, use_top_k
        )
        return fitted.predict_proba(matrix.take_rows(test_idx))

    return run


def cross_validate_with_probs(
    dataset: Dataset, config: PipelineConfig, use_top_k: bool = True
) -> tuple[CvSummary, list[tuple[np.ndarray, np.ndarray]]]:
    """Fold-parallel CV that also returns (labels, probs) per fold for ROC export."""
    plan = stratified_kfold(dataset, config.cv_k, config.seed)
    labels = labels_array(dataset)
    matrix = encode(dataset)
    fold_seeds = [
        int(s.generate_state(1)[0])
        for s in np.random.SeedSequence(config.seed).spawn(config.cv_k)
    ]

    def run_fold(fold: int):
        train_idx = plan.train_indices(fold)
        test_idx = plan.test_indices(fold)
        fitted = fit_pipeline(
            matrix.take_rows(train_idx), labels[train_idx], config, fold_seeds[fold], use_top_k
        )
        probs = fitted.predict_proba(matrix.take_rows(test_idx))
        return labels[test_idx], probs

    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        results = list(pool.map(run_fold, range(config.cv_k)))

    scores = []
    per_class_total = np.zeros(4)
    for fold_labels, probs in results:
        macro, per_class = macro_ovr_auc(probs, fold_labels)
        scores.append(macro)
        per_class_total += np.asarray(per_class)
    arr = np.array(scores)
    summary = CvSummary(
        tuple(float(x) for x in scores),
        float(arr.mean()),
        float(arr.std()),
        config.cv_k,
        tuple(float(x) for x in per_class_total / config.cv_k),
    )
    return summary, results
