"""Repeated-holdout evaluation.

A ``SplitPlan`` holds seeded random train/test partitions (20 at 80/20 by
default). For each split a forest is trained on the training rows of the
configuration's feature matrix and scored on the test rows. Per-metric
means and standard errors (sample SD / sqrt(k) over the k defined values)
summarise the splits.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .dataset import Dataset
from .feature_config import FeatureConfig, assemble
from .llm_features import ScoreStore
from .random_forest import ForestParams, fit, predict_proba

logger = logging.getLogger(__name__)

METRICS = ("accuracy", "precision", "recall", "auc", "specificity")

_SPLIT_STREAM = 0x5B1
_FOREST_STREAM = 0xF0E


class InfeasibleSplit(ValueError):
    pass


@dataclass(frozen=True)
class SplitPlan:
    pairs: tuple  # of (train_indices, test_indices)
    ratio: float
    master_seed: int
    stratified: bool = False

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)


def _split_stream(master_seed, k, attempt):
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(_SPLIT_STREAM, k, attempt)))


def make_splits(
    n: int,
    ratio: float = 0.8,
    n_splits: int = 20,
    master_seed: int = 0,
    labels=None,
    stratified: bool = False,
    max_attempts: int = 1000,
) -> SplitPlan:
    """Seeded random train/test partitions of ``range(n)``.

    Each split uses ``floor(ratio * n)`` training rows. With ``labels``
    given, a split whose test or training side lacks a class is redrawn
    (up to ``max_attempts`` times). ``stratified=True`` instead allocates
    test rows per class in proportion to class size.
    """
    if n < 5:
        raise ValueError("need at least 5 samples to split")
    if not 0 < ratio < 1:
        raise ValueError("ratio must lie strictly between 0 and 1")
    if n_splits < 1:
        raise ValueError("n_splits must be >= 1")
    n_train = int(math.floor(ratio * n))
    n_test = n - n_train
    if n_train < 1 or n_test < 1:
        raise InfeasibleSplit(f"ratio {ratio} leaves an empty side for n={n}")

    y = None
    if labels is not None:
        y = np.asarray(labels)
        if y.shape[0] != n:
            raise ValueError("labels length must equal n")
        counts = [int(np.count_nonzero(y == c)) for c in (0, 1)]
        if min(counts) < 2:
            raise InfeasibleSplit(f"each class needs >= 2 members to appear on both sides, got counts {counts}")
    elif stratified:
        raise ValueError("stratified splits require labels")

    pairs = []
    for k in range(n_splits):
        for attempt in range(max_attempts):
            rng = _split_stream(master_seed, k, attempt)
            if stratified:
                train, test = _stratified(y, n_test, rng)
            else:
                perm = rng.permutation(n)
                train, test = np.sort(perm[:n_train]), np.sort(perm[n_train:])
            if y is None or (_has_both(y[test]) and _has_both(y[train])):
                break
        else:
            raise InfeasibleSplit(f"split {k}: no draw with both classes on each side after {max_attempts} attempts")
        train.setflags(write=False)
        test.setflags(write=False)
        pairs.append((train, test))
    return SplitPlan(tuple(pairs), ratio, master_seed, stratified)


def _has_both(y):
    return 0 < int(np.count_nonzero(y)) < y.shape[0]


def _stratified(y, n_test, rng):
    classes = (0, 1)
    members = [np.flatnonzero(y == c) for c in classes]
    exact = [len(m) * n_test / len(y) for m in members]
    alloc = [int(math.floor(e)) for e in exact]
    # largest remainder, ties to the lower class
    for i in sorted(range(2), key=lambda i: (-(exact[i] - alloc[i]), i))[: n_test - sum(alloc)]:
        alloc[i] += 1
    test = np.sort(np.concatenate([rng.permutation(m)[:a] for m, a in zip(members, alloc)]))
    train = np.setdiff1d(np.arange(len(y)), test)
    return train, test


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self):
        return self.tp + self.fp + self.tn + self.fn


def confusion(labels, predictions) -> ConfusionMatrix:
    labels = np.asarray(labels).astype(bool)
    predictions = np.asarray(predictions).astype(bool)
    if labels.shape != predictions.shape:
        raise ValueError(f"length mismatch: {labels.shape} vs {predictions.shape}")
    if labels.size == 0:
        raise ValueError("empty label vector")
    return ConfusionMatrix(
        tp=int(np.sum(labels & predictions)),
        fp=int(np.sum(~labels & predictions)),
        tn=int(np.sum(~labels & ~predictions)),
        fn=int(np.sum(labels & ~predictions)),
    )


def _ratio(num, den):
    # None marks an undefined (zero-denominator) metric
    return num / den if den else None


def point_metrics(cm: ConfusionMatrix) -> dict:
    if cm.total == 0:
        raise ValueError("empty confusion matrix")
    return {
        "accuracy": (cm.tp + cm.tn) / cm.total,
        "precision": _ratio(cm.tp, cm.tp + cm.fp),
        "recall": _ratio(cm.tp, cm.tp + cm.fn),
        "specificity": _ratio(cm.tn, cm.tn + cm.fp),
    }


def auc(scores, labels) -> float:
    """Area under the ROC curve by the trapezoid rule over distinct thresholds."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels).astype(bool)
    if scores.shape != labels.shape:
        raise ValueError("scores and labels differ in length")
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs at least one positive and one negative")
    order = np.argsort(-scores, kind="stable")
    s, lab = scores[order], labels[order]
    # last index of each block of tied scores
    ends = np.r_[np.flatnonzero(s[1:] != s[:-1]), s.size - 1]
    tpr = np.r_[0, np.cumsum(lab)[ends]] / n_pos
    fpr = np.r_[0, np.cumsum(~lab)[ends]] / n_neg
    return float(np.sum((fpr[1:] - fpr[:-1]) * (tpr[1:] + tpr[:-1]) / 2.0))


@dataclass(frozen=True)
class MetricSummary:
    config: FeatureConfig
    model_id: str | None
    n_splits: int
    mean: dict
    stderr: dict
    per_split: tuple = field(default=(), compare=True)  # of dict metric -> value|None

    def n_defined(self, metric):
        return sum(v is not None for v in (row[metric] for row in self.per_split))


def summarize_splits(per_split, config, model_id) -> MetricSummary:
    means, errs = {}, {}
    for m in METRICS:
        values = [row[m] for row in per_split if row[m] is not None]
        skipped = len(per_split) - len(values)
        if skipped:
            logger.warning("%s/%s: %d split(s) with undefined %s excluded", model_id, config.slug, skipped, m)
        if not values:
            means[m], errs[m] = None, None
            continue
        means[m] = float(np.mean(values))
        errs[m] = float(np.std(values, ddof=1) / math.sqrt(len(values))) if len(values) > 1 else 0.0
    return MetricSummary(config, model_id, len(per_split), means, errs, tuple(per_split))


def split_forest_seed(seed: int, split_index: int) -> int:
    ss = np.random.SeedSequence(seed, spawn_key=(_FOREST_STREAM, split_index))
    return int(ss.generate_state(1, np.uint64)[0])


def evaluate_split(X, y, train, test, params: ForestParams, split_index: int) -> dict:
    forest = fit(X[train], y[train], replace(params, seed=split_forest_seed(params.seed, split_index)))
    proba = predict_proba(forest, X[test])
    pred = (proba > 0.5).astype(np.int64)
    metrics = point_metrics(confusion(y[test], pred))
    metrics["auc"] = auc(proba, y[test])
    for m in METRICS:
        if metrics[m] is None:
            logger.warning("split %d: %s undefined", split_index, m)
    return {m: metrics[m] for m in METRICS}


def run_experiment(
    dataset: Dataset,
    store: ScoreStore | None,
    model_id: str | None,
    config: FeatureConfig,
    params: ForestParams,
    plan: SplitPlan,
    n_jobs: int = 1,
    include_bc_likelihood: bool = False,
) -> MetricSummary:
    """Train and score one forest per split; summarise the five metrics.

    Each split's forest seed is derived from ``(params.seed, split_index)``,
    so the summary does not depend on ``n_jobs``.
    """
    matrix = assemble(dataset, store, model_id, config, include_bc_likelihood)
    X, y = matrix.rows, matrix.labels
    for train, test in plan:
        if train.size + test.size != len(dataset) or max(train.max(), test.max()) >= len(dataset):
            raise ValueError("split plan does not match dataset size")

    def job(k):
        train, test = plan.pairs[k]
        return evaluate_split(X, y, train, test, params, k)

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            per_split = list(pool.map(job, range(len(plan))))
    else:
        per_split = [job(k) for k in range(len(plan))]
    return summarize_splits(per_split, config, model_id)


def percent_improvement(candidate: MetricSummary, baseline: MetricSummary) -> dict:
    """Relative change per metric, 100 * (cand - base) / base, plus the unweighted average."""
    if candidate.n_splits != baseline.n_splits:
        raise ValueError("summaries come from different numbers of splits")
    out = {}
    for m in METRICS:
        base, cand = baseline.mean[m], candidate.mean[m]
        if not base:
            raise ZeroDivisionError(f"baseline mean for {m} is zero or undefined")
        out[m] = 100.0 * (cand - base) / base
    out["average"] = sum(out[m] for m in METRICS) / len(METRICS)
    return out


def per_split_csv(summaries) -> str:
    """Long-format CSV: split_index, config, metric, value ("NA" if undefined)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["split_index", "config", "metric", "value"])
    for s in summaries:
        for k, row in enumerate(s.per_split):
            for m in METRICS:
                v = row[m]
                writer.writerow([k, s.config.slug, m, "NA" if v is None else repr(float(v))])
    return buf.getvalue()


def read_per_split_csv(text: str, model_id: str | None = None) -> list[MetricSummary]:
    rows: dict[FeatureConfig, dict[int, dict]] = {}
    for rec in csv.DictReader(io.StringIO(text)):
        config = FeatureConfig.from_slug(rec["config"])
        if rec["metric"] not in METRICS:
            raise ValueError(f"unknown metric {rec['metric']!r}")
        value = None if rec["value"] == "NA" else float(rec["value"])
        rows.setdefault(config, {}).setdefault(int(rec["split_index"]), {})[rec["metric"]] = value
    summaries = []
    for config in FeatureConfig:
        if config not in rows:
            continue
        splits = rows[config]
        ordered = [splits[k] for k in sorted(splits)]
        for k, row in zip(sorted(splits), ordered):
            if set(row) != set(METRICS):
                raise ValueError(f"{config.slug} split {k}: incomplete metrics")
        summaries.append(summarize_splits(ordered, config, model_id))
    return summaries
