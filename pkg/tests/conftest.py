import numpy as np
import pytest

from demandscope.data import (
    CATEGORICAL,
    CONTINUOUS,
    Dataset,
    FeatureSpec,
    Schema,
    TravelClass,
)


def small_schema():
    return Schema(
        (
            FeatureSpec("price", CONTINUOUS),
            FeatureSpec("gender", CATEGORICAL, ("male", "female")),
            FeatureSpec("age", CONTINUOUS),
        )
    )


def small_dataset():
    schema = small_schema()
    rows = (
        (100.0, "male", 30.0),
        (200.0, "female", 40.0),
        (150.0, "male", 50.0),
        (120.0, "female", 25.0),
    )
    labels = (TravelClass.NO_TRAVEL, TravelClass.MOON, TravelClass.SUBORBITAL, TravelClass.ORBITAL)
    return Dataset(schema, rows, labels)


def random_dataset(rng, n=40, with_categorical=True):
    feats = [FeatureSpec("f0", CONTINUOUS), FeatureSpec("f1", CONTINUOUS)]
    if with_categorical:
        feats.append(FeatureSpec("color", CATEGORICAL, ("red", "green", "blue")))
    schema = Schema(tuple(feats))
    rows = []
    for _ in range(n):
        cells = [float(rng.normal()), float(rng.normal())]
        if with_categorical:
            cells.append(("red", "green", "blue")[int(rng.integers(0, 3))])
        rows.append(tuple(cells))
    labels = tuple(TravelClass(int(c)) for c in rng.integers(0, 4, size=n))
    return Dataset(schema, tuple(rows), labels)


@pytest.fixture
def rng():
    return np.random.default_rng(0)
