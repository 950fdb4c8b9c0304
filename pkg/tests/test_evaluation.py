import logging
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from llmconfound.dataset import Dataset, Label, PatientRecord
from llmconfound.evaluation import (
    METRICS,
    ConfusionMatrix,
    InfeasibleSplit,
    MetricSummary,
    auc,
    confusion,
    make_splits,
    per_split_csv,
    percent_improvement,
    point_metrics,
    read_per_split_csv,
    run_experiment,
    summarize_splits,
)
from llmconfound.feature_config import FeatureConfig
from llmconfound.random_forest import ForestParams
from oracles import pairwise_auc
from table1 import TABLE1, exact_average_improvement, table_summary

# -- splits ----------------------------------------------------------------


def test_split_sizes_116():
    labels = np.array([1] * 64 + [0] * 52)
    plan = make_splits(116, 0.8, 20, 7, labels)
    assert len(plan) == 20
    for train, test in plan:
        assert (train.size, test.size) == (92, 24)
        assert np.array_equal(np.sort(np.concatenate([train, test])), np.arange(116))
        assert 0 < labels[test].sum() < 24


def test_split_determinism():
    a = make_splits(50, 0.8, 5, 3)
    b = make_splits(50, 0.8, 5, 3)
    c = make_splits(50, 0.8, 5, 4)
    assert all(np.array_equal(x[1], y[1]) for x, y in zip(a, b))
    assert not all(np.array_equal(x[1], y[1]) for x, y in zip(a, c))


def test_splits_are_distinct():
    plan = make_splits(116, 0.8, 20, 0)
    assert len({tuple(test) for _, test in plan}) == 20


def test_class_guard_resamples():
    # 2 positives in 20: many raw permutations put both in train
    labels = np.array([1, 1] + [0] * 18)
    plan = make_splits(20, 0.8, 30, 0, labels)
    for train, test in plan:
        assert labels[test].sum() == 1 and labels[train].sum() == 1


@pytest.mark.parametrize(
    "kwargs, exc",
    [
        (dict(n=4), ValueError),
        (dict(n=10, ratio=1.0), ValueError),
        (dict(n=10, ratio=0.0), ValueError),
        (dict(n=10, n_splits=0), ValueError),
        (dict(n=10, labels=[0] * 10), InfeasibleSplit),
        (dict(n=10, labels=[1] + [0] * 9), InfeasibleSplit),
    ],
)
def test_split_errors(kwargs, exc):
    with pytest.raises(exc):
        make_splits(**kwargs)


def test_stratified_split_proportions():
    labels = np.array([1] * 64 + [0] * 52)
    plan = make_splits(116, 0.8, 10, 1, labels, stratified=True)
    for train, test in plan:
        assert test.size == 24
        # 64*24/116 = 13.24 -> 13 positives, 11 negatives
        assert labels[test].sum() == 13


# -- confusion and point metrics ------------------------------------------


def test_confusion_examples():
    assert confusion([1, 1, 0, 0], [1, 1, 0, 0]) == ConfusionMatrix(tp=2, fp=0, tn=2, fn=0)
    assert confusion([1, 0], [0, 1]) == ConfusionMatrix(tp=0, fp=1, tn=0, fn=1)
    assert confusion([1, 1, 1, 0, 0, 0, 0, 0, 0, 0], [1, 1, 0, 1, 0, 0, 0, 0, 0, 0]) == ConfusionMatrix(
        tp=2, fp=1, tn=6, fn=1
    )


def test_confusion_length_mismatch():
    with pytest.raises(ValueError):
        confusion([1, 0], [1])


def test_point_metrics_hand_counted():
    m = point_metrics(ConfusionMatrix(tp=2, fp=1, tn=6, fn=1))
    assert m == {"accuracy": 0.8, "precision": 2 / 3, "recall": 2 / 3, "specificity": 6 / 7}


def test_point_metrics_perfect():
    assert set(point_metrics(ConfusionMatrix(3, 0, 4, 0)).values()) == {1.0}


def test_point_metrics_undefined_precision():
    m = point_metrics(ConfusionMatrix(tp=0, fp=0, tn=3, fn=2))
    assert m["precision"] is None
    assert m["recall"] == 0.0


def test_point_metrics_empty():
    with pytest.raises(ValueError):
        point_metrics(ConfusionMatrix(0, 0, 0, 0))


@given(st.integers(0, 30), st.integers(0, 30), st.integers(0, 30), st.integers(0, 30))
def test_accuracy_identity(tp, fp, tn, fn):
    n_pos, n_neg = tp + fn, tn + fp
    if n_pos == 0 or n_neg == 0:
        return
    m = point_metrics(ConfusionMatrix(tp, fp, tn, fn))
    assert m["accuracy"] == pytest.approx((m["recall"] * n_pos + m["specificity"] * n_neg) / (n_pos + n_neg))
    assert all(v is None or 0 <= v <= 1 for v in m.values())


# -- AUC -------------------------------------------------------------------


def test_auc_examples():
    assert auc([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0]) == 1.0
    assert auc([0.9, 0.8, 0.4, 0.3], [1, 0, 1, 0]) == 0.75
    assert auc([0.5] * 6, [1, 0, 1, 0, 1, 0]) == 0.5
    assert auc([0.1, 0.2], [1, 0]) == 0.0


def test_auc_single_class():
    with pytest.raises(ValueError):
        auc([0.1, 0.2], [1, 1])


@st.composite
def scored_labels(draw):
    n = draw(st.integers(2, 30))
    labels = draw(st.lists(st.integers(0, 1), min_size=n, max_size=n).filter(lambda ls: 0 < sum(ls) < len(ls)))
    scores = draw(st.lists(st.sampled_from([0.0, 0.1, 0.25, 0.5, 0.5, 0.75, 0.9, 1.0]) | st.floats(0, 1), min_size=n, max_size=n))
    return scores, labels


@settings(max_examples=200)
@given(scored_labels())
def test_auc_matches_pairwise(case):
    scores, labels = case
    assert abs(auc(scores, labels) - float(pairwise_auc(scores, labels))) <= 1e-12


@settings(max_examples=100)
@given(scored_labels())
def test_auc_monotone_invariance(case):
    scores, labels = case
    # snap to a grid so the transform stays strictly increasing in floating point
    scores = [round(s * 1000) / 1000 for s in scores]
    transformed = [math.exp(3 * s) + s**3 for s in scores]
    assert auc(transformed, labels) == pytest.approx(auc(scores, labels), abs=1e-12)


# -- experiments -----------------------------------------------------------


def separable_dataset(n=40):
    recs = []
    for i in range(n):
        cancer = i % 2 == 0
        recs.append(
            PatientRecord(i, 50, 30.0 if cancer else 20.0, 90, 5, 1.1, 10, 8, 10, 400,
                          Label.CANCER if cancer else Label.HEALTHY)
        )
    return Dataset(tuple(recs))


def test_degenerate_single_split_perfect():
    ds = separable_dataset()
    plan = make_splits(len(ds), 0.8, 1, 0, ds.labels())
    s = run_experiment(ds, None, None, FeatureConfig.BASELINE, ForestParams(n_trees=50), plan)
    assert s.n_splits == 1
    assert all(s.mean[m] == 1.0 for m in METRICS)
    assert all(s.stderr[m] == 0.0 for m in METRICS)


def test_run_experiment_deterministic_and_schedule_independent(cohort, mock_store):
    plan = make_splits(len(cohort), 0.8, 6, 5, cohort.labels())
    params = ForestParams(n_trees=15, seed=3)
    a = run_experiment(cohort, mock_store, "mock-logistic-v1", FeatureConfig.ALL_CONFOUNDERS, params, plan)
    b = run_experiment(cohort, mock_store, "mock-logistic-v1", FeatureConfig.ALL_CONFOUNDERS, params, plan, n_jobs=3)
    assert a == b
    assert per_split_csv([a]) == per_split_csv([b])
    for row in a.per_split:
        assert all(v is None or 0 <= v <= 1 for v in row.values())
    assert all(0 <= a.mean[m] <= 1 for m in METRICS)


def test_run_experiment_plan_mismatch(cohort):
    plan = make_splits(50, 0.8, 2, 0)
    with pytest.raises(ValueError):
        run_experiment(cohort, None, None, FeatureConfig.BASELINE, ForestParams(n_trees=2), plan)


def test_stderr_is_sample_sd_over_root_k():
    rows = [dict(accuracy=a, precision=0.5, recall=0.5, auc=0.5, specificity=0.5) for a in (0.6, 0.7, 0.8, 0.9)]
    s = summarize_splits(rows, FeatureConfig.BASELINE, None)
    sd = math.sqrt(sum((a - 0.75) ** 2 for a in (0.6, 0.7, 0.8, 0.9)) / 3)
    assert s.mean["accuracy"] == pytest.approx(0.75)
    assert s.stderr["accuracy"] == pytest.approx(sd / 2)
    assert s.stderr["auc"] == 0.0


def test_undefined_values_excluded(caplog):
    rows = [
        dict(accuracy=0.5, precision=None, recall=0.0, auc=0.5, specificity=1.0),
        dict(accuracy=0.7, precision=0.8, recall=0.6, auc=0.7, specificity=0.8),
        dict(accuracy=0.9, precision=0.6, recall=0.8, auc=0.9, specificity=1.0),
    ]
    with caplog.at_level(logging.WARNING):
        s = summarize_splits(rows, FeatureConfig.BASELINE, "m")
    assert s.mean["precision"] == pytest.approx(0.7)
    assert s.n_defined("precision") == 2
    assert "undefined precision" in caplog.text


def test_percent_improvement_self():
    base = table_summary("llama", "baseline")
    out = percent_improvement(base, base)
    assert all(v == 0.0 for v in out.values())


@pytest.mark.parametrize("model, expected", [("llama", 6.352), ("gemma", 4.115)])
def test_percent_improvement_table1(model, expected):
    out = percent_improvement(table_summary(model, "all"), table_summary(model, "baseline"))
    assert out["average"] == pytest.approx(exact_average_improvement(model), abs=1e-9)
    assert out["average"] == pytest.approx(expected, abs=5e-4)
    assert out["accuracy"] == pytest.approx(100 * (TABLE1[model]["all"]["accuracy"] / TABLE1[model]["baseline"]["accuracy"] - 1))


def test_percent_improvement_errors():
    base = table_summary("llama", "baseline")
    zero = MetricSummary(FeatureConfig.BASELINE, "m", 20, {**base.mean, "recall": 0.0}, base.stderr)
    with pytest.raises(ZeroDivisionError):
        percent_improvement(base, zero)
    other = MetricSummary(FeatureConfig.BASELINE, "m", 10, base.mean, base.stderr)
    with pytest.raises(ValueError):
        percent_improvement(other, base)


def test_per_split_csv_round_trip(cohort, mock_store):
    plan = make_splits(len(cohort), 0.8, 3, 0, cohort.labels())
    params = ForestParams(n_trees=5)
    summaries = [
        run_experiment(cohort, mock_store, "mock-logistic-v1", c, params, plan)
        for c in (FeatureConfig.BASELINE, FeatureConfig.WITH_CVD)
    ]
    text = per_split_csv(summaries)
    assert text.splitlines()[0] == "split_index,config,metric,value"
    assert len(text.splitlines()) == 1 + 2 * 3 * 5
    again = read_per_split_csv(text, "mock-logistic-v1")
    assert again == summaries


def test_per_split_csv_na():
    s = summarize_splits(
        [dict(accuracy=0.5, precision=None, recall=0.0, auc=0.5, specificity=1.0)] * 2, FeatureConfig.BASELINE, None
    )
    text = per_split_csv([s])
    assert "0,baseline,precision,NA" in text
    assert read_per_split_csv(text)[0].mean["precision"] is None
