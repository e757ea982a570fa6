import json

import numpy as np
import pytest

from demandscope.data import CATEGORICAL, TravelClass, labels_array
from demandscope.errors import InvalidConfig
from demandscope.preprocess import filter_outliers, iqr_bounds
from demandscope.synth import (
    DEFAULT_COEFFICIENTS,
    NAMED_FEATURES,
    GeneratorConfig,
    default_schema,
    generate,
)

TARGET_SHARES = {
    TravelClass.NO_TRAVEL: 0.234,
    TravelClass.MOON: 0.265,
    TravelClass.SUBORBITAL: 0.281,
    TravelClass.ORBITAL: 0.220,
}


def test_default_schema_has_44_features():
    schema = default_schema()
    assert len(schema.features) == 44
    names = [f.name for f in schema.features]
    for name in NAMED_FEATURES:
        assert name in names
    assert sum(1 for n in names if n.startswith("filler_")) == 34


def test_generate_deterministic():
    cfg = GeneratorConfig(n=200, seed=42)
    a = generate(cfg)
    b = generate(cfg)
    assert a.dataset.rows == b.dataset.rows
    assert a.dataset.labels == b.dataset.labels
    assert a.truth == b.truth


def test_different_seeds_differ():
    a = generate(GeneratorConfig(n=100, seed=0))
    b = generate(GeneratorConfig(n=100, seed=1))
    assert a.dataset.rows != b.dataset.rows


def test_default_class_shares_near_targets():
    result = generate(GeneratorConfig())
    labels = labels_array(result.dataset)
    assert labels.size == 1860
    for cls, target in TARGET_SHARES.items():
        share = float(np.mean(labels == cls.value))
        assert abs(share - target) < 0.04, (cls, share)


def test_all_classes_present_small_n():
    result = generate(GeneratorConfig(n=400, seed=3))
    assert len(set(result.dataset.labels)) == 4


def test_coefficient_signs_show_in_labels():
    # price pushes toward NO_TRAVEL, income away: check conditional means
    result = generate(GeneratorConfig(n=5000, seed=7))
    ds = result.dataset
    labels = labels_array(ds)
    names = [f.name for f in ds.schema.features]
    price = np.array([row[names.index("average_price_dollars")] for row in ds.rows])
    income = np.array([row[names.index("annual_income")] for row in ds.rows])
    no_travel = labels == TravelClass.NO_TRAVEL.value
    assert price[no_travel].mean() > price[~no_travel].mean()
    assert income[no_travel].mean() < income[~no_travel].mean()


def test_ground_truth_round_trips_to_json():
    result = generate(GeneratorConfig(n=50, seed=1, outlier_rate=0.1))
    payload = json.loads(result.truth.to_json())
    assert payload["seed"] == 1
    assert payload["noise_scale"] == 1.0
    assert payload["intercepts"] == list(result.truth.intercepts)
    assert payload["coefficients"]["average_price_dollars"] == list(
        DEFAULT_COEFFICIENTS["average_price_dollars"]
    )
    assert payload["outlier_indices"] == list(result.truth.outlier_indices)


def test_no_outliers_by_default():
    result = generate(GeneratorConfig(n=100, seed=2))
    assert result.truth.outlier_indices == ()


def test_outlier_injection_rate_and_magnitude():
    cfg = GeneratorConfig(n=2000, seed=4, outlier_rate=0.05)
    result = generate(cfg)
    idx = result.truth.outlier_indices
    assert 0.02 < len(idx) / cfg.n < 0.08
    names = [f.name for f in result.dataset.schema.features]
    col = names.index("average_price_dollars")
    prices = np.array([row[col] for row in result.dataset.rows])
    # injected cells sit far above the nominal band
    assert prices[list(idx)].min() > 450_000.0 * 5.0
    clean_mask = np.ones(cfg.n, dtype=bool)
    clean_mask[list(idx)] = False
    assert prices[clean_mask].max() <= 450_000.0


def test_injected_outliers_flagged_by_iqr_filter():
    cfg = GeneratorConfig(n=1000, seed=5, outlier_rate=0.03)
    result = generate(cfg)
    _, report = filter_outliers(result.dataset, columns=["average_price_dollars"])
    assert set(result.truth.outlier_indices) <= set(report.dropped_row_indices)


def test_categorical_values_from_schema():
    result = generate(GeneratorConfig(n=300, seed=6))
    schema = result.dataset.schema
    for j, spec in enumerate(schema.features):
        if spec.kind == CATEGORICAL:
            seen = {row[j] for row in result.dataset.rows}
            assert seen <= set(spec.categories)


def test_noise_scale_degrades_signal():
    crisp = generate(GeneratorConfig(n=3000, seed=8, noise_scale=0.2))
    noisy = generate(GeneratorConfig(n=3000, seed=8, noise_scale=8.0))

    def price_gap(result):
        labels = labels_array(result.dataset)
        names = [f.name for f in result.dataset.schema.features]
        price = np.array([row[names.index("average_price_dollars")] for row in result.dataset.rows])
        mask = labels == TravelClass.NO_TRAVEL.value
        return price[mask].mean() - price[~mask].mean()

    assert price_gap(crisp) > price_gap(noisy) > -50_000.0


def test_invalid_configs_rejected():
    with pytest.raises(InvalidConfig):
        GeneratorConfig(n=0)
    with pytest.raises(InvalidConfig):
        GeneratorConfig(noise_scale=0.0)
    with pytest.raises(InvalidConfig):
        GeneratorConfig(outlier_rate=1.0)
    with pytest.raises(InvalidConfig):
        GeneratorConfig(outlier_rate=-0.1)
