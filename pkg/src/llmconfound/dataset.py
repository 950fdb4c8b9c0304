"""Loading and validation of the Breast Cancer Coimbra clinical table.

The loader expects the public UCI release layout::

    Age,BMI,Glucose,Insulin,HOMA,Leptin,Adiponectin,Resistin,MCP.1,Classification

Label encoding follows UCI: ``Classification`` 1 = healthy control,
2 = breast-cancer patient. A copy of the data encoded differently (for
example 0/1) is rejected rather than guessed at.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

FEATURES = (
    "age",
    "bmi",
    "glucose",
    "insulin",
    "homa",
    "leptin",
    "adiponectin",
    "resistin",
    "mcp1",
)

# canonical CSV header -> PatientRecord attribute
COLUMNS = {
    "Age": "age",
    "BMI": "bmi",
    "Glucose": "glucose",
    "Insulin": "insulin",
    "HOMA": "homa",
    "Leptin": "leptin",
    "Adiponectin": "adiponectin",
    "Resistin": "resistin",
    "MCP.1": "mcp1",
}
LABEL_COLUMN = "Classification"

DEFAULT_ALIASES = {"MCP-1": "MCP.1", "MCP1": "MCP.1", "MCP_1": "MCP.1"}

UNITS = {
    "age": "years",
    "bmi": "kg/m2",
    "glucose": "mg/dL",
    "insulin": "µU/mL",
    "homa": "",
    "leptin": "ng/mL",
    "adiponectin": "µg/mL",
    "resistin": "ng/mL",
    "mcp1": "pg/dL",
}


class Label(enum.IntEnum):
    HEALTHY = 1
    CANCER = 2

    @property
    def positive(self) -> int:
        return int(self is Label.CANCER)


class DatasetError(ValueError):
    """Raised for any malformed input; carries the file line and column."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = []
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column!r}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


@dataclass(frozen=True)
class PatientRecord:
    id: int
    age: float
    bmi: float
    glucose: float
    insulin: float
    homa: float
    leptin: float
    adiponectin: float
    resistin: float
    mcp1: float
    label: Label

    def __post_init__(self):
        for name in FEATURES:
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise DatasetError(f"{name} must be finite and > 0, got {value!r}")
        if not isinstance(self.label, Label):
            raise DatasetError(f"label must be a Label, got {self.label!r}")

    def features(self) -> tuple[float, ...]:
        return tuple(getattr(self, name) for name in FEATURES)


@dataclass(frozen=True)
class Dataset:
    records: tuple[PatientRecord, ...]

    def __post_init__(self):
        for i, rec in enumerate(self.records):
            if rec.id != i:
                raise DatasetError(f"record ids must be contiguous from 0; position {i} has id {rec.id}")

    def __len__(self):
        return len(self.records)

    @property
    def n_cancer(self) -> int:
        return sum(r.label is Label.CANCER for r in self.records)

    @property
    def n_healthy(self) -> int:
        return sum(r.label is Label.HEALTHY for r in self.records)

    def feature_array(self) -> np.ndarray:
        """(n, 9) float array in FEATURES order."""
        return np.array([r.features() for r in self.records], dtype=float).reshape(len(self), len(FEATURES))

    def labels(self) -> np.ndarray:
        """Binary labels, Cancer = 1."""
        return np.array([r.label.positive for r in self.records], dtype=np.int64)

    def to_csv(self, path=None) -> str:
        """Write in the UCI layout; returns the CSV text.

        Floats are written with ``repr`` so a reload is field-identical.
        """
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([*COLUMNS, LABEL_COLUMN])
        for rec in self.records:
            writer.writerow([repr(float(v)) for v in rec.features()] + [int(rec.label)])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text


def _resolve_header(header: Sequence[str], aliases: Mapping[str, str]) -> list[str]:
    resolved = []
    for col in header:
        name = aliases.get(col.strip(), col.strip())
        if name not in COLUMNS and name != LABEL_COLUMN:
            raise DatasetError("unknown header column", line=1, column=col)
        if name in resolved:
            raise DatasetError("duplicate header column", line=1, column=col)
        resolved.append(name)
    for required in [*COLUMNS, LABEL_COLUMN]:
        if required not in resolved:
            raise DatasetError("missing header column", line=1, column=required)
    return resolved


def parse_dataset(text: str, aliases: Mapping[str, str] | None = None) -> Dataset:
    """Parse CSV text into a validated Dataset. See ``load_dataset``."""
    aliases = DEFAULT_ALIASES if aliases is None else aliases
    text = text.lstrip("﻿")
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise DatasetError("missing header") from None
    if not any(cell.strip() for cell in header):
        raise DatasetError("missing header", line=1)
    columns = _resolve_header(header, aliases)

    records = []
    for row in reader:
        line = reader.line_num
        if not row or not any(cell.strip() for cell in row):
            continue
        if len(row) != len(columns):
            raise DatasetError(f"expected {len(columns)} cells, found {len(row)}", line=line)
        values = {}
        label = None
        for col, cell in zip(columns, row):
            cell = cell.strip()
            if cell == "":
                raise DatasetError("blank cell", line=line, column=col)
            try:
                number = float(cell)
            except ValueError:
                raise DatasetError(f"non-numeric cell {cell!r}", line=line, column=col) from None
            if col == LABEL_COLUMN:
                if number not in (1.0, 2.0):
                    raise DatasetError(f"label must be 1 (healthy) or 2 (cancer), got {cell!r}", line=line, column=col)
                label = Label(int(number))
            else:
                if not (math.isfinite(number) and number > 0):
                    raise DatasetError(f"measurement must be finite and > 0, got {cell!r}", line=line, column=col)
                values[COLUMNS[col]] = number
        records.append(PatientRecord(id=len(records), label=label, **values))
    return Dataset(tuple(records))


def load_dataset(path, aliases: Mapping[str, str] | None = None) -> Dataset:
    """Load the Coimbra CSV at ``path``.

    Records keep file order and receive 0-based ids. Raises
    ``FileNotFoundError`` for a missing file and ``DatasetError`` (with line
    number and column) for any schema or value problem.
    """
    path = Path(path)
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_dataset(fh.read(), aliases)


@dataclass(frozen=True)
class FeatureStats:
    min: float
    max: float
    mean: float


@dataclass(frozen=True)
class DatasetSummary:
    n_records: int
    n_cancer: int
    n_healthy: int
    features: dict[str, FeatureStats]

    def to_dict(self) -> dict:
        return {
            "n_records": self.n_records,
            "n_cancer": self.n_cancer,
            "n_healthy": self.n_healthy,
            "features": {
                name: {f.name: getattr(st, f.name) for f in fields(st)} for name, st in self.features.items()
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_text(self) -> str:
        lines = [
            f"records: {self.n_records}  cancer: {self.n_cancer}  healthy: {self.n_healthy}",
            f"{'feature':<12}{'min':>12}{'max':>12}{'mean':>12}",
        ]
        for name, st in self.features.items():
            lines.append(f"{name:<12}{st.min:>12.3f}{st.max:>12.3f}{st.mean:>12.3f}")
        return "\n".join(lines) + "\n"


def summarize(dataset: Dataset) -> DatasetSummary:
    if len(dataset) == 0:
        raise DatasetError("cannot summarize an empty dataset")
    X = dataset.feature_array()
    stats = {
        name: FeatureStats(float(X[:, j].min()), float(X[:, j].max()), float(X[:, j].mean()))
        for j, name in enumerate(FEATURES)
    }
    return DatasetSummary(len(dataset), dataset.n_cancer, dataset.n_healthy, stats)
