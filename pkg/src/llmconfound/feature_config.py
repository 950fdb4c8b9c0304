"""Per-configuration feature matrices.

Column layout (fixed, so results are comparable between runs):

=================  ==============================================
Baseline           age, bmi, glucose, insulin, homa, leptin,
                   adiponectin, resistin, mcp1
LlmOnly            llm_breast_cancer
WithDiabetes       nine clinical + llm_diabetes
WithCVD            nine clinical + llm_cvd
WithObesity        nine clinical + llm_obesity
AllConfounders     nine clinical + llm_diabetes, llm_cvd, llm_obesity
=================  ==============================================

No scaling is applied; tree ensembles do not need it.
"""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import FEATURES, Dataset
from .llm_features import Condition, ScoreStore


class FeatureConfig(enum.Enum):
    BASELINE = ("baseline", "Baseline", ())
    LLM_ONLY = ("llm-only", "LLM", (Condition.BREAST_CANCER,))
    WITH_DIABETES = ("diabetes", "wDiabetes", (Condition.DIABETES,))
    WITH_CVD = ("cvd", "wCVD", (Condition.CVD,))
    WITH_OBESITY = ("obesity", "wObesity", (Condition.OBESITY,))
    ALL_CONFOUNDERS = ("all-confounders", "wAllConfounders", (Condition.DIABETES, Condition.CVD, Condition.OBESITY))

    def __init__(self, slug, label, conditions):
        self.slug = slug
        self.label = label
        self.conditions = conditions

    @property
    def uses_clinical(self) -> bool:
        return self is not FeatureConfig.LLM_ONLY

    @classmethod
    def from_slug(cls, slug: str) -> "FeatureConfig":
        for member in cls:
            if member.slug == slug:
                return member
        raise ValueError(f"unknown configuration {slug!r}; expected one of {[m.slug for m in cls]}")

    def required_conditions(self, include_bc_likelihood: bool = False):
        if include_bc_likelihood and self is FeatureConfig.ALL_CONFOUNDERS:
            return self.conditions + (Condition.BREAST_CANCER,)
        return self.conditions


def likelihood_column(condition: Condition) -> str:
    return {
        Condition.DIABETES: "llm_diabetes",
        Condition.OBESITY: "llm_obesity",
        Condition.CVD: "llm_cvd",
        Condition.BREAST_CANCER: "llm_breast_cancer",
    }[condition]


class IncompleteStore(LookupError):
    def __init__(self, missing, model_id):
        self.missing = list(missing)
        self.model_id = model_id
        pairs = ", ".join(f"({pid}, {c.value})" for pid, c in self.missing)
        super().__init__(f"score store lacks {len(self.missing)} score(s) for model {model_id!r}: {pairs}")


@dataclass(frozen=True)
class FeatureMatrix:
    config: FeatureConfig
    column_names: tuple[str, ...]
    rows: np.ndarray
    labels: np.ndarray

    @property
    def shape(self):
        return self.rows.shape

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([*self.column_names, "label"])
        for row, y in zip(self.rows, self.labels):
            writer.writerow([repr(float(v)) for v in row] + [int(y)])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text


def assemble(
    dataset: Dataset,
    store: ScoreStore | None,
    model_id: str | None,
    config: FeatureConfig,
    include_bc_likelihood: bool = False,
) -> FeatureMatrix:
    """Build the matrix for ``config``; rows follow dataset record order.

    ``include_bc_likelihood`` appends the breast-cancer likelihood as a
    fourth synthetic column to AllConfounders (13 columns); it is off by
    default and ignored for other configurations.
    """
    conditions = config.required_conditions(include_bc_likelihood)
    n = len(dataset)
    if conditions:
        if store is None:
            raise IncompleteStore([(pid, c) for pid in range(n) for c in conditions], model_id)
        missing = store.missing(range(n), conditions, model_id)
        if missing:
            raise IncompleteStore(missing, model_id)

    blocks, names = [], []
    if config.uses_clinical:
        blocks.append(dataset.feature_array())
        names.extend(FEATURES)
    for c in conditions:
        col = np.array([store.value(pid, c, model_id) for pid in range(n)], dtype=float)
        blocks.append(col.reshape(n, 1))
        names.append(likelihood_column(c))
    rows = np.hstack(blocks) if blocks else np.empty((n, 0))
    rows.setflags(write=False)
    labels = dataset.labels()
    labels.setflags(write=False)
    return FeatureMatrix(config, tuple(names), rows, labels)
