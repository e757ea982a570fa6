import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from demandscope.data import (
    CONTINUOUS,
    Dataset,
    FeatureSpec,
    Schema,
    TravelClass,
    encode,
)
from demandscope.errors import (
    EmptyInput,
    EmptySubset,
    LayoutMismatch,
    NotContinuous,
    TooFewValues,
    UnknownColumn,
)
from demandscope.preprocess import (
    apply_standardizer,
    filter_outliers,
    fit_standardizer,
    invert_standardizer,
    iqr_bounds,
    quantile,
)
from conftest import small_dataset


def one_column_dataset(values):
    schema = Schema((FeatureSpec("x", CONTINUOUS),))
    rows = tuple((float(v),) for v in values)
    labels = tuple(TravelClass.NO_TRAVEL for _ in values)
    return Dataset(schema, rows, labels)


def test_quantile_singleton():
    assert quantile([5], 0.5) == 5.0


def test_quantile_midpoint():
    assert abs(quantile([1, 2, 3, 4], 0.5) - 2.5) < 1e-12


def test_quantile_q1_of_five():
    assert abs(quantile([1, 2, 3, 4, 100], 0.25) - 2.0) < 1e-12


def test_quantile_empty():
    with pytest.raises(EmptyInput):
        quantile([], 0.5)


@settings(max_examples=50, deadline=None)
@given(
    values=st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=60),
    q=st.floats(0.0, 1.0),
)
def test_quantile_matches_numpy(values, q):
    ours = quantile(values, q)
    theirs = float(np.quantile(np.array(values), q))  # numpy default is linear interpolation
    assert math.isclose(ours, theirs, rel_tol=1e-9, abs_tol=1e-9)


def test_iqr_bounds_hand_case():
    b = iqr_bounds([1, 2, 3, 4, 100])
    assert b.q1 == 2.0
    assert b.q3 == 4.0
    assert b.iqr == 2.0
    assert b.lo == -1.0
    assert b.hi == 7.0


def test_iqr_bounds_constant():
    b = iqr_bounds([3, 3, 3, 3])
    assert b.iqr == 0.0
    assert b.lo == 3.0 == b.hi


def test_iqr_bounds_too_few():
    with pytest.raises(TooFewValues):
        iqr_bounds([1, 2, 3])


@settings(max_examples=50, deadline=None)
@given(values=st.lists(st.floats(-1e6, 1e6), min_size=4, max_size=50))
def test_iqr_bounds_ordering(values):
    b = iqr_bounds(values)
    assert b.lo <= b.q1 <= b.q3 <= b.hi


def test_filter_outliers_drops_extreme():
    ds = one_column_dataset([1, 2, 3, 4, 100])
    cleaned, report = filter_outliers(ds, ["x"])
    assert cleaned.n == 4
    assert report.dropped_row_indices == (4,)
    assert report.kept == 4


def test_filter_outliers_constant_keeps_all():
    ds = one_column_dataset([5, 5, 5, 5, 5])
    cleaned, report = filter_outliers(ds, ["x"])
    assert cleaned.n == 5
    assert report.dropped_row_indices == ()


def test_filter_outliers_not_idempotent():
    # second pass recomputes bounds on the cleaned data and may drop more
    ds = one_column_dataset([1, 2, 3, 4, 100, 40])
    once, first = filter_outliers(ds, ["x"])
    twice, second = filter_outliers(once, ["x"])
    assert len(first.dropped_row_indices) >= 1
    assert twice.n < once.n


def test_filter_outliers_unknown_column():
    ds = one_column_dataset([1, 2, 3, 4])
    with pytest.raises(UnknownColumn):
        filter_outliers(ds, ["nope"])


def test_filter_outliers_categorical_rejected():
    with pytest.raises(NotContinuous):
        filter_outliers(small_dataset(), ["gender"])


def test_filter_outliers_kept_rows_within_bounds():
    rng = np.random.default_rng(8)
    ds = one_column_dataset(rng.normal(size=300).tolist() + [25.0, -30.0])
    cleaned, report = filter_outliers(ds, ["x"])
    b = report.bounds["x"]
    for row in cleaned.rows:
        assert b.lo <= row[0] <= b.hi
    for i in report.dropped_row_indices:
        x = ds.rows[i][0]
        assert x < b.lo or x > b.hi


def test_standardizer_hand_case():
    ds = one_column_dataset([2, 4, 6])
    m = encode(ds)
    std = fit_standardizer(m)
    assert std.mean[0] == 4.0
    assert abs(std.std[0] - math.sqrt(8.0 / 3.0)) < 1e-9
    out = apply_standardizer(std, m)
    expect = [-1.2247448713915890, 0.0, 1.2247448713915890]
    assert np.allclose(out.values[:, 0], expect, atol=1e-9)


def test_standardizer_constant_column_maps_to_zero():
    ds = one_column_dataset([7, 7, 7])
    m = encode(ds)
    std = fit_standardizer(m)
    out = apply_standardizer(std, m)
    assert np.all(out.values[:, 0] == 0.0)


def test_standardizer_empty_subset():
    m = encode(one_column_dataset([1, 2]))
    with pytest.raises(EmptySubset):
        fit_standardizer(m, rows=[])


def test_standardized_fit_rows_have_unit_moments():
    rng = np.random.default_rng(4)
    ds = one_column_dataset(rng.normal(3.0, 2.0, size=100).tolist())
    m = encode(ds)
    std = fit_standardizer(m)
    out = apply_standardizer(std, m)
    assert abs(out.values[:, 0].mean()) < 1e-9
    assert abs(out.values[:, 0].std() - 1.0) < 1e-9


def test_one_hot_columns_untouched():
    m = encode(small_dataset())
    std = fit_standardizer(m)
    out = apply_standardizer(std, m)
    hot = ~m.continuous_mask
    assert np.array_equal(out.values[:, hot], m.values[:, hot])


def test_no_leakage():
    rng = np.random.default_rng(11)
    ds = one_column_dataset(rng.normal(size=50).tolist())
    m = encode(ds)
    train_rows = list(range(30))
    std = fit_standardizer(m, rows=train_rows)
    # perturb rows outside the training subset; parameters must not move
    perturbed = m.values.copy()
    perturbed[30:, 0] += 1000.0
    std2 = fit_standardizer(m.with_values(perturbed), rows=train_rows)
    assert np.array_equal(std.mean, std2.mean)
    assert np.array_equal(std.std, std2.std)


def test_invert_standardizer_roundtrip():
    rng = np.random.default_rng(12)
    ds = one_column_dataset(rng.normal(5.0, 3.0, size=80).tolist())
    m = encode(ds)
    std = fit_standardizer(m)
    back = invert_standardizer(std, apply_standardizer(std, m))
    assert np.allclose(back.values, m.values, rtol=1e-9)


def test_layout_mismatch():
    a = encode(small_dataset())
    b = encode(one_column_dataset([1, 2, 3]))
    std = fit_standardizer(a)
    with pytest.raises(LayoutMismatch):
        apply_standardizer(std, b)
