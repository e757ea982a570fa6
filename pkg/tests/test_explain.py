import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from demandscope.errors import EmptyInput, TooManyFeaturesForExact
from demandscope.explain import (
    BackgroundSet,
    class_summary,
    exact_shapley,
    explain_instance,
    global_summary,
    instance_report,
    sampled_shapley,
    waterfall,
)


def scalar_groups(m):
    return [(f"f{j}", [j]) for j in range(m)]


def linear_model(weights):
    w = np.asarray(weights, dtype=float)

    def fn(rows):
        rows = np.atleast_2d(rows)
        out = rows @ w
        return np.column_stack([out, -out])

    return fn


def test_additive_model_attributions():
    model = linear_model([1.0, 1.0])
    bg = BackgroundSet(np.zeros((1, 2)))
    phi = exact_shapley(model, np.array([3.0, 5.0]), bg, 0, scalar_groups(2))
    assert np.allclose(phi, [3.0, 5.0], atol=1e-12)


def test_constant_model_zero_phi():
    def const(rows):
        rows = np.atleast_2d(rows)
        return np.full((rows.shape[0], 2), 0.4)

    bg = BackgroundSet(np.zeros((3, 4)))
    phi = exact_shapley(const, np.ones(4), bg, 0, scalar_groups(4))
    assert np.allclose(phi, 0.0, atol=1e-12)


def test_symmetry_axiom():
    model = linear_model([2.0, 2.0])
    bg = BackgroundSet(np.zeros((2, 2)))
    phi = exact_shapley(model, np.array([1.5, 1.5]), bg, 0, scalar_groups(2))
    assert abs(phi[0] - phi[1]) < 1e-12


def test_dummy_axiom():
    # second feature has zero weight: its attribution is exactly zero
    model = linear_model([3.0, 0.0])
    bg = BackgroundSet(np.random.default_rng(0).normal(size=(5, 2)))
    phi = exact_shapley(model, np.array([1.0, 9.0]), bg, 0, scalar_groups(2))
    assert phi[1] == 0.0


def test_exact_efficiency():
    rng = np.random.default_rng(1)
    w1 = rng.normal(size=(4, 6))
    w2 = rng.normal(size=(6, 2))

    def mlp(rows):
        rows = np.atleast_2d(rows)
        return np.tanh(rows @ w1) @ w2

    bg = BackgroundSet(rng.normal(size=(8, 4)))
    x = rng.normal(size=4)
    groups = scalar_groups(4)
    for c in range(2):
        phi = exact_shapley(mlp, x, bg, c, groups)
        fx = mlp(x[None, :])[0, c]
        base = mlp(bg.values)[:, c].mean()
        assert abs(phi.sum() - (fx - base)) < 1e-9


def test_exact_feature_limit():
    model = linear_model(np.ones(15))
    bg = BackgroundSet(np.zeros((1, 15)))
    with pytest.raises(TooManyFeaturesForExact):
        exact_shapley(model, np.ones(15), bg, 0, scalar_groups(15))


def test_exhaustive_sampling_equals_exact():
    rng = np.random.default_rng(2)
    w = rng.normal(size=(3, 5))

    def model(rows):
        rows = np.atleast_2d(rows)
        h = np.maximum(rows @ w, 0.0)
        return np.column_stack([h.sum(axis=1), -h.sum(axis=1)])

    bg = BackgroundSet(rng.normal(size=(4, 3)))
    x = rng.normal(size=3)
    groups = scalar_groups(3)
    exact = exact_shapley(model, x, bg, 0, groups)
    sampled, stderr = sampled_shapley(model, x, bg, 0, groups, exhaustive=True)
    assert np.allclose(sampled, exact, atol=1e-12)


def test_sampled_within_stderr_of_exact():
    rng = np.random.default_rng(3)
    w1 = rng.normal(size=(5, 4))

    def model(rows):
        rows = np.atleast_2d(rows)
        out = np.tanh(rows @ w1).sum(axis=1)
        return np.column_stack([out, -out])

    bg = BackgroundSet(rng.normal(size=(6, 5)))
    x = rng.normal(size=5)
    groups = scalar_groups(5)
    exact = exact_shapley(model, x, bg, 0, groups)
    hits = 0
    total = 0
    for seed in range(30):
        phi, stderr = sampled_shapley(model, x, bg, 0, groups, n_permutations=400, seed=seed)
        for f in range(5):
            total += 1
            if abs(phi[f] - exact[f]) < 3 * max(stderr[f], 1e-12) + 1e-9:
                hits += 1
    assert hits / total >= 0.95


def test_sampled_efficiency_enforced():
    rng = np.random.default_rng(4)
    w = rng.normal(size=(6, 3))

    def model(rows):
        rows = np.atleast_2d(rows)
        return np.tanh(rows @ w)

    bg = BackgroundSet(rng.normal(size=(7, 6)))
    x = rng.normal(size=6)
    groups = scalar_groups(6)
    phi, _ = sampled_shapley(model, x, bg, 1, groups, n_permutations=5, seed=0)
    fx = model(x[None, :])[0, 1]
    base = model(bg.values)[:, 1].mean()
    assert abs(phi.sum() - (fx - base)) < 1e-9


def test_constant_model_sampled_zero_stderr():
    def const(rows):
        rows = np.atleast_2d(rows)
        return np.full((rows.shape[0], 2), 0.3)

    bg = BackgroundSet(np.zeros((2, 3)))
    phi, stderr = sampled_shapley(const, np.ones(3), bg, 0, scalar_groups(3), n_permutations=10, seed=0)
    assert np.allclose(phi, 0.0, atol=1e-12)
    assert np.allclose(stderr, 0.0, atol=1e-12)


def test_one_hot_block_toggles_atomically():
    # feature "g" spans columns 1-2; a model reading only column 2 still
    # credits the whole block as one feature
    def model(rows):
        rows = np.atleast_2d(rows)
        out = rows[:, 0] + 2.0 * rows[:, 2]
        return np.column_stack([out, -out])

    groups = [("x", [0]), ("g", [1, 2])]
    bg = BackgroundSet(np.array([[0.0, 1.0, 0.0]]))
    x = np.array([1.0, 0.0, 1.0])
    phi = exact_shapley(model, x, bg, 0, groups)
    assert abs(phi[0] - 1.0) < 1e-12
    assert abs(phi[1] - 2.0) < 1e-12


def make_explanations(n=4, seed=0):
    rng = np.random.default_rng(seed)
    w = rng.normal(size=(3, 4))

    def model(rows):
        rows = np.atleast_2d(rows)
        z = rows @ w
        e = np.exp(z - z.max(axis=1, keepdims=True))
        return e / e.sum(axis=1, keepdims=True)

    bg = BackgroundSet(rng.normal(size=(5, 3)))
    groups = scalar_groups(3)
    return [
        explain_instance(model, rng.normal(size=3), bg, groups, index=i)
        for i in range(n)
    ]


def test_explain_instance_shape_and_efficiency():
    exps = make_explanations(1)
    e = exps[0]
    assert e.phi.shape == (3, 4)
    for c in range(4):
        assert abs(e.phi[:, c].sum() - (e.class_probs[c] - e.base[c])) < 1e-9


def test_global_summary_single_explanation():
    exps = make_explanations(1)
    gs = global_summary(exps)
    assert np.allclose(gs.mean_abs, np.abs(exps[0].phi))
    assert sorted(gs.order) == [0, 1, 2]


def test_global_summary_empty_rejected():
    with pytest.raises(EmptyInput):
        global_summary([])


def test_class_summary_shapes():
    exps = make_explanations(6)
    cs = class_summary(exps, 2)
    assert cs.phi.shape == (3, 6)
    assert cs.values.shape == (3, 6)
    assert len(cs.feature_names) == 3


def test_waterfall_endpoint_matches_probability():
    exps = make_explanations(1)
    record = waterfall(exps[0])
    c = record.class_index
    assert c == int(np.argmax(exps[0].class_probs))
    assert abs(record.endpoint - exps[0].class_probs[c]) < 1e-9
    # steps are sorted by |phi| descending
    mags = [abs(s.phi) for s in record.steps]
    assert mags == sorted(mags, reverse=True)


def test_instance_report_fields():
    exps = make_explanations(1)
    record = waterfall(exps[0])
    payload = instance_report(exps[0], record)
    assert payload["endpoint"] == record.endpoint
    assert set(payload["raw_values"]) == {"f0", "f1", "f2"}


def test_background_sample_from_train_only():
    rng = np.random.default_rng(5)
    train = rng.normal(size=(50, 3))
    bg = BackgroundSet.sample(train, size=10, seed=1)
    assert bg.values.shape == (10, 3)
    # every background row is an actual training row
    for row in bg.values:
        assert any(np.array_equal(row, t) for t in train)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_exact_is_deterministic_and_efficient(seed):
    rng = np.random.default_rng(seed)
    w = rng.normal(size=(4, 2))

    def model(rows):
        rows = np.atleast_2d(rows)
        return np.tanh(rows @ w)

    bg = BackgroundSet(rng.normal(size=(3, 4)))
    x = rng.normal(size=4)
    groups = scalar_groups(4)
    a = exact_shapley(model, x, bg, 0, groups)
    b = exact_shapley(model, x, bg, 0, groups)
    assert np.array_equal(a, b)
    fx = model(x[None, :])[0, 0]
    base = model(bg.values)[:, 0].mean()
    assert abs(a.sum() - (fx - base)) < 1e-9
