"""Seeded synthetic survey generator with a documented causal structure.

Labels are drawn from a multinomial logit over linear per-class utilities, so
coefficient signs are directly checkable against downstream attributions. A
ground-truth log (coefficients, injected outliers) is emitted alongside the
data for oracle tests.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .data import CATEGORICAL, CONTINUOUS, Dataset, FeatureSpec, Schema, TravelClass
from .errors import InvalidConfig

N_FILLERS = 34

NAMED_FEATURES = (
    "average_price_dollars",
    "age",
    "delta_price_dollars_moon_trip",
    "annual_income",
    "gender",
    "fatality_probability",
    "children_at_home",
    "region",
    "generation",
    "education",
)

# class order: NO_TRAVEL, MOON, SUBORBITAL, ORBITAL
DEFAULT_COEFFICIENTS: dict[str, tuple[float, float, float, float]] = {
    "average_price_dollars": (4.85, -1.0, -1.75, -2.5),
    "age": (1.7, -0.45, -0.7, -0.55),
    "delta_price_dollars_moon_trip": (0.4, -0.65, 0.4, 0.4),
    "annual_income": (-2.2, 0.6, 0.7, 0.9),
    "gender": (-2.05, 0.7, 0.7, 0.55),
    "fatality_probability": (1.7, -0.45, -0.6, -0.7),
    "children_at_home": (2.3, -0.8, -0.8, -0.7),
    "region": (-3.45, 1.05, 1.25, 1.05),
    "generation": (-3.45, 1.15, 1.25, 1.05),
    "education": (-3.7, 1.25, 1.4, 1.05),
}

# per-category scores multiplying the feature's class coefficients
CATEGORY_SCORES: dict[str, dict[str, float]] = {
    "gender": {"male": 1.0, "female": -1.0},
    "region": {"West": 1.0, "South": 0.3, "Midwest": -0.8, "Northeast": 0.1},
    "generation": {"Baby Boomers": -1.0, "Gen X": -0.3, "Millennials": 0.6, "Gen Z": 1.0},
    "education": {"high_school": -1.0, "bachelor": 0.0, "master": 0.5, "doctorate": 1.0},
}

CATEGORY_PROBS: dict[str, tuple[float, ...]] = {
    "gender": (0.55, 0.45),
    "region": (0.25, 0.3, 0.22, 0.23),
    "generation": (0.2, 0.25, 0.4, 0.15),
    "education": (0.3, 0.4, 0.2, 0.1),
}

# intercepts calibrated so default shares land near 23.4 / 26.5 / 28.1 / 22.0
DEFAULT_INTERCEPTS = (-3.944, 1.461, 1.522, 0.961)


def default_schema() -> Schema:
    features = [
        FeatureSpec("average_price_dollars", CONTINUOUS),
        FeatureSpec("age", CONTINUOUS),
        FeatureSpec("delta_price_dollars_moon_trip", CONTINUOUS),
        FeatureSpec("annual_income", CONTINUOUS),
        FeatureSpec("gender", CATEGORICAL, ("male", "female")),
        FeatureSpec("fatality_probability", CONTINUOUS),
        FeatureSpec("children_at_home", CONTINUOUS),
        FeatureSpec("region", CATEGORICAL, ("West", "South", "Midwest", "Northeast")),
        FeatureSpec("generation", CATEGORICAL, ("Baby Boomers", "Gen X", "Millennials", "Gen Z")),
        FeatureSpec("education", CATEGORICAL, ("high_school", "bachelor", "master", "doctorate")),
    ]
    for i in range(1, N_FILLERS + 1):
        features.append(FeatureSpec(f"filler_{i:02d}", CONTINUOUS))
    return Schema(tuple(features))


@dataclass(frozen=True)
class GeneratorConfig:
    n: int = 1860
    seed: int = 0
    noise_scale: float = 1.0  # softmax temperature; larger means noisier labels
    outlier_rate: float = 0.0  # fraction of rows given an extreme price cell
    coefficients: dict[str, tuple[float, float, float, float]] = field(
        default_factory=lambda: dict(DEFAULT_COEFFICIENTS)
    )
    intercepts: tuple[float, float, float, float] = DEFAULT_INTERCEPTS

    def __post_init__(self):
        if self.n < 1:
            raise InvalidConfig("n must be >= 1")
        if self.noise_scale <= 0:
            raise InvalidConfig("noise_scale must be positive")
        if not 0.0 <= self.outlier_rate < 1.0:
            raise InvalidConfig("outlier_rate must be in [0, 1)")


@dataclass(frozen=True)
class GroundTruth:
    seed: int
    coefficients: dict[str, tuple[float, float, float, float]]
    intercepts: tuple[float, float, float, float]
    category_scores: dict[str, dict[str, float]]
    noise_scale: float
    outlier_indices: tuple[int, ...]

    def to_json(self) -> str:
        return json.dumps(
            {
                "seed": self.seed,
                "coefficients": {k: list(v) for k, v in self.coefficients.items()},
                "intercepts": list(self.intercepts),
                "category_scores": self.category_scores,
                "noise_scale": self.noise_scale,
                "outlier_indices": list(self.outlier_indices),
            },
            indent=2,
        )


@dataclass(frozen=True)
class GenerationResult:
    dataset: Dataset
    truth: GroundTruth


# marginal parameters used both to draw values and to standardize them for utilities
_UNIFORM_BANDS = {
    "average_price_dollars": (20_000.0, 450_000.0),
    "delta_price_dollars_moon_trip": (50_000.0, 600_000.0),
    "age": (18.0, 80.0),
    "fatality_probability": (0.5, 12.0),
}
_INCOME_LOG_MU = 11.0  # median ~ $60k
_INCOME_LOG_SIGMA = 0.6
_CHILDREN_TRIALS, _CHILDREN_P = 5, 0.3


def _z_uniform(x, band):
    a, b = band
    return (x - (a + b) / 2.0) / ((b - a) / math.sqrt(12.0))


def generate(config: GeneratorConfig) -> GenerationResult:
    """Draw a full synthetic survey; deterministic for a fixed seed."""
    schema = default_schema()
    rng = np.random.default_rng(config.seed)
    n = config.n

    raw: dict[str, np.ndarray] = {}
    score: dict[str, np.ndarray] = {}
    for name, band in _UNIFORM_BANDS.items():
        raw[name] = rng.uniform(band[0], band[1], size=n)
        score[name] = _z_uniform(raw[name], band)
    log_income = rng.normal(_INCOME_LOG_MU, _INCOME_LOG_SIGMA, size=n)
    raw["annual_income"] = np.round(np.exp(log_income), 2)
    score["annual_income"] = (np.log(raw["annual_income"]) - _INCOME_LOG_MU) / _INCOME_LOG_SIGMA
    children = rng.binomial(_CHILDREN_TRIALS, _CHILDREN_P, size=n).astype(float)
    raw["children_at_home"] = children
    mean_c = _CHILDREN_TRIALS * _CHILDREN_P
    std_c = math.sqrt(_CHILDREN_TRIALS * _CHILDREN_P * (1 - _CHILDREN_P))
    score["children_at_home"] = (children - mean_c) / std_c

    cats: dict[str, list[str]] = {}
    for name, probs in CATEGORY_PROBS.items():
        categories = schema.feature(name).categories
        draws = rng.choice(len(categories), size=n, p=probs)
        cats[name] = [categories[i] for i in draws]
        score[name] = np.array([CATEGORY_SCORES[name][c] for c in cats[name]])

    fillers = {
        f"filler_{i:02d}": rng.normal(0.0, 1.0, size=n) for i in range(1, N_FILLERS + 1)
    }

    utilities = np.tile(np.asarray(config.intercepts, dtype=float), (n, 1))
    for name, coef in config.coefficients.items():
        utilities += np.outer(score[name], np.asarray(coef, dtype=float))
    logits = utilities / config.noise_scale
    logits -= logits.max(axis=1, keepdims=True)
    probs = np.exp(logits)
    probs /= probs.sum(axis=1, keepdims=True)
    cum = np.cumsum(probs, axis=1)
    u = rng.random(n)
    labels = (u[:, None] > cum).sum(axis=1)

    outlier_indices: list[int] = []
    if config.outlier_rate > 0.0:
        flags = rng.random(n) < config.outlier_rate
        outlier_indices = [int(i) for i in np.flatnonzero(flags)]
        hi = _UNIFORM_BANDS["average_price_dollars"][1]
        raw["average_price_dollars"] = raw["average_price_dollars"].copy()
        raw["average_price_dollars"][flags] = hi * rng.uniform(5.0, 12.0, size=len(outlier_indices))

    rows = []
    for i in range(n):
        cells = []
        for spec in schema.features:
            if spec.name in raw:
                cells.append(float(raw[spec.name][i]))
            elif spec.name in cats:
                cells.append(cats[spec.name][i])
            else:
                cells.append(float(fillers[spec.name][i]))
        rows.append(tuple(cells))

    dataset = Dataset(schema, tuple(rows), tuple(TravelClass(int(l)) for l in labels))
    truth = GroundTruth(
        config.seed,
        {k: tuple(v) for k, v in config.coefficients.items()},
        tuple(config.intercepts),
        {k: dict(v) for k, v in CATEGORY_SCORES.items()},
        config.noise_scale,
        tuple(outlier_indices),
    )
    return GenerationResult(dataset, truth)
