"""LLM-inferred condition likelihoods.

One chat-completions request is made per (patient, condition) pair. The
prompt lists the patient's nine clinical measurements and asks for a bare
probability. Responses are parsed strictly, never clamped, and persisted to
an append-only JSON-lines cache so an interrupted run resumes where it
stopped.

``MockProvider`` answers offline from fixed logistic rules on the patient's
own features; see ``mock_likelihood`` for the constants.
"""

from __future__ import annotations

import enum
import json
import logging
import math
import os
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import httpx

from .dataset import FEATURES, UNITS, Dataset, PatientRecord

logger = logging.getLogger(__name__)


class Condition(str, enum.Enum):
    DIABETES = "Diabetes"
    OBESITY = "Obesity"
    CVD = "CVD"
    BREAST_CANCER = "BreastCancer"

    @property
    def full_name(self) -> str:
        return _FULL_NAMES[self]

    @property
    def is_confounder(self) -> bool:
        return self is not Condition.BREAST_CANCER


_FULL_NAMES = {
    Condition.DIABETES: "Type-2 Diabetes",
    Condition.OBESITY: "Obesity",
    Condition.CVD: "Cardiovascular Disease (CVD)",
    Condition.BREAST_CANCER: "Breast Cancer",
}

CONFOUNDERS = (Condition.DIABETES, Condition.OBESITY, Condition.CVD)

_DISPLAY = {
    "age": "Age",
    "bmi": "BMI",
    "glucose": "Glucose",
    "insulin": "Insulin",
    "homa": "HOMA",
    "leptin": "Leptin",
    "adiponectin": "Adiponectin",
    "resistin": "Resistin",
    "mcp1": "MCP-1",
}


def build_prompt(patient: PatientRecord, condition: Condition) -> str:
    lines = [
        "You are a clinical risk assessment assistant.",
        "",
        "Patient clinical measurements:",
    ]
    for name in FEATURES:
        unit = UNITS[name]
        value = f"{getattr(patient, name):.10g}"
        lines.append(f"- {_DISPLAY[name]}: {value} {unit}".rstrip())
    lines += [
        "",
        f"Estimate the likelihood that this patient has {condition.full_name}.",
        "Respond with a single decimal number between 0 and 1 and no other text.",
    ]
    return "\n".join(lines)


class ScoreParseError(ValueError):
    def __init__(self, message, raw):
        self.raw = raw
        super().__init__(f"{message}: {raw!r}")


class NoNumberFound(ScoreParseError):
    pass


class OutOfRange(ScoreParseError):
    pass


# a sign only counts when it is not glued to a preceding word ("Type-2")
_NUMBER = re.compile(r"(?:(?<!\w)[-+])?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][-+]?\d+)?")


def parse_score(text: str) -> float:
    """Return the first decimal number in ``text`` if it lies in [0, 1]."""
    match = _NUMBER.search(text or "")
    if match is None:
        raise NoNumberFound("no number in response", text)
    value = float(match.group(0))
    if not (0.0 <= value <= 1.0):
        raise OutOfRange(f"likelihood {value} outside [0, 1]", text)
    return value


# Offline mock: logistic rules on the patient's own measurements.
# Each entry is (intercept-free centred terms) -> sigmoid(sum(coef * (x - centre))).
MOCK_RULES = {
    Condition.OBESITY: (("bmi", 0.4, 30.0),),
    Condition.DIABETES: (("glucose", 0.08, 100.0), ("homa", 0.5, 2.5)),
    Condition.CVD: (("age", 0.08, 55.0), ("bmi", 0.15, 27.0)),
    Condition.BREAST_CANCER: (
        ("glucose", 0.04, 95.0),
        ("resistin", 0.1, 14.0),
        ("bmi", -0.08, 27.0),
        ("age", 0.02, 57.0),
    ),
}


def _sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    ez = math.exp(z)
    return ez / (1.0 + ez)


def mock_likelihood(patient: PatientRecord, condition: Condition) -> float:
    z = sum(coef * (getattr(patient, name) - centre) for name, coef, centre in MOCK_RULES[condition])
    return _sigmoid(z)


def mock_provider(patient: PatientRecord, condition: Condition) -> str:
    """Response text the mock model would return for this pair."""
    return f"{mock_likelihood(patient, condition):.12f}"


@dataclass(frozen=True)
class LikelihoodScore:
    patient_id: int
    condition: Condition
    value: float
    model_id: str
    raw_response: str

    def __post_init__(self):
        if not (0.0 <= self.value <= 1.0):
            raise OutOfRange(f"stored likelihood {self.value} outside [0, 1]", self.raw_response)

    @property
    def key(self):
        return (self.patient_id, self.condition, self.model_id)

    def to_json(self) -> str:
        return json.dumps(
            {
                "patient_id": self.patient_id,
                "condition": self.condition.value,
                "value": self.value,
                "model_id": self.model_id,
                "raw_response": self.raw_response,
            },
            ensure_ascii=False,
        )

    @classmethod
    def from_json(cls, line: str) -> "LikelihoodScore":
        d = json.loads(line)
        return cls(
            patient_id=int(d["patient_id"]),
            condition=Condition(d["condition"]),
            value=float(d["value"]),
            model_id=str(d["model_id"]),
            raw_response=str(d["raw_response"]),
        )


class ScoreStoreError(ValueError):
    pass


class ScoreStore:
    """Likelihood scores keyed by (patient_id, condition, model_id).

    When backed by a file, every ``add`` appends one JSON line and flushes,
    so progress survives a crash. Loading rejects out-of-range values and
    conflicting duplicate keys.
    """

    def __init__(self, path=None):
        self.path = Path(path) if path is not None else None
        self._scores: dict[tuple, LikelihoodScore] = {}
        self._lock = threading.Lock()

    @classmethod
    def load(cls, path) -> "ScoreStore":
        store = cls(path)
        if store.path.exists():
            with open(store.path, encoding="utf-8") as fh:
                for lineno, line in enumerate(fh, 1):
                    if not line.strip():
                        continue
                    try:
                        score = LikelihoodScore.from_json(line)
                    except (ValueError, KeyError, TypeError) as exc:
                        raise ScoreStoreError(f"{store.path}:{lineno}: bad cache line ({exc})") from exc
                    prev = store._scores.get(score.key)
                    if prev is not None and prev.value != score.value:
                        raise ScoreStoreError(f"{store.path}:{lineno}: conflicting duplicate for {score.key}")
                    store._scores[score.key] = score
        return store

    def __len__(self):
        return len(self._scores)

    def __iter__(self):
        return iter(self._scores.values())

    def __contains__(self, key):
        return key in self._scores

    def get(self, patient_id: int, condition: Condition, model_id: str) -> LikelihoodScore | None:
        return self._scores.get((patient_id, Condition(condition), model_id))

    def value(self, patient_id: int, condition: Condition, model_id: str) -> float:
        return self._scores[(patient_id, Condition(condition), model_id)].value

    def add(self, score: LikelihoodScore) -> None:
        with self._lock:
            if score.key in self._scores:
                return
            self._scores[score.key] = score
            if self.path is not None:
                self.path.parent.mkdir(parents=True, exist_ok=True)
                with open(self.path, "a", encoding="utf-8") as fh:
                    fh.write(score.to_json() + "\n")
                    fh.flush()

    def missing(self, patient_ids: Iterable[int], conditions: Iterable[Condition], model_id: str):
        conditions = [Condition(c) for c in conditions]
        return [(pid, c) for pid in patient_ids for c in conditions if (pid, c, model_id) not in self._scores]

    def is_complete(self, dataset: Dataset, conditions, model_id: str) -> bool:
        return not self.missing(range(len(dataset)), conditions, model_id)


@dataclass
class ProviderConfig:
    endpoint: str
    model: str
    api_key_env: str = "LLM_API_KEY"
    temperature: float = 0.0
    max_retries: int = 3
    timeout: float = 60.0
    max_concurrent: int = 4
    backoff: float = 1.0

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.max_concurrent < 1:
            raise ValueError("max_concurrent must be >= 1")


class MissingApiKey(RuntimeError):
    pass


class ProviderResponseError(RuntimeError):
    """The endpoint answered, but not with a chat-completions body."""


class ChatCompletionsProvider:
    """Client for an OpenAI-compatible ``/chat/completions`` endpoint."""

    def __init__(self, config: ProviderConfig, transport: httpx.BaseTransport | None = None, api_key: str | None = None):
        self.config = config
        key = api_key if api_key is not None else os.environ.get(config.api_key_env)
        if not key:
            raise MissingApiKey(f"environment variable {config.api_key_env} is not set")
        self._client = httpx.Client(
            timeout=config.timeout,
            transport=transport,
            headers={"Authorization": f"Bearer {key}"},
        )
        self.url = config.endpoint.rstrip("/") + "/chat/completions"

    @property
    def model_id(self) -> str:
        return self.config.model

    def request_body(self, prompt: str) -> dict:
        return {
            "model": self.config.model,
            "temperature": self.config.temperature,
            "messages": [{"role": "user", "content": prompt}],
        }

    def complete(self, patient: PatientRecord, condition: Condition) -> str:
        response = self._client.post(self.url, json=self.request_body(build_prompt(patient, condition)))
        response.raise_for_status()
        try:
            return response.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise ProviderResponseError(f"unexpected response body: {response.text[:200]!r}") from exc

    def close(self):
        self._client.close()


@dataclass
class MockProvider:
    """Deterministic offline stand-in for a hosted model."""

    model_id: str = "mock-logistic-v1"
    max_retries: int = 0
    max_concurrent: int = 1
    backoff: float = 0.0
    config: ProviderConfig | None = field(default=None, repr=False)

    def complete(self, patient: PatientRecord, condition: Condition) -> str:
        return mock_provider(patient, condition)


@dataclass
class FetchStats:
    requests: int = 0
    retries: int = 0
    failures: list = field(default_factory=list)


class FetchError(RuntimeError):
    def __init__(self, patient_id, condition, cause, n_failed=1):
        self.patient_id = patient_id
        self.condition = condition
        self.cause = cause
        super().__init__(
            f"fetch failed for patient {patient_id}, condition {Condition(condition).value}"
            f" after retries: {cause} ({n_failed} pair(s) failed in total)"
        )


_RETRYABLE = (httpx.HTTPError, ScoreParseError, ProviderResponseError)


def _setting(provider, name):
    cfg = getattr(provider, "config", None)
    return getattr(cfg, name) if cfg is not None else getattr(provider, name)


def fetch_scores(dataset: Dataset, conditions, provider, store: ScoreStore, stats: FetchStats | None = None) -> ScoreStore:
    """Fill ``store`` with every missing (patient, condition) score for the provider's model.

    Cached pairs are never requested again. Each pair gets up to
    ``max_retries`` extra attempts on transport or parse failures, with
    exponential backoff. Successful scores are persisted as they arrive; if
    any pair still fails, the remaining work finishes first and then a
    ``FetchError`` is raised for the lowest failing pair.
    """
    if isinstance(provider, ProviderConfig):
        provider = ChatCompletionsProvider(provider)
    stats = stats if stats is not None else FetchStats()
    model_id = provider.model_id
    max_retries = _setting(provider, "max_retries")
    backoff = _setting(provider, "backoff")
    workers = _setting(provider, "max_concurrent")
    ordered = [c for c in Condition if c in {Condition(x) for x in conditions}]
    todo = store.missing(range(len(dataset)), ordered, model_id)
    counter_lock = threading.Lock()

    def one(pid, condition):
        patient = dataset.records[pid]
        for attempt in range(max_retries + 1):
            with counter_lock:
                stats.requests += 1
            try:
                text = provider.complete(patient, condition)
                return LikelihoodScore(pid, condition, parse_score(text), model_id, text)
            except _RETRYABLE as exc:
                if attempt == max_retries:
                    raise
                with counter_lock:
                    stats.retries += 1
                logger.warning("patient %d %s attempt %d failed: %s", pid, condition.value, attempt + 1, exc)
                if backoff:
                    time.sleep(backoff * 2**attempt)

    errors = []
    if todo:
        logger.info("fetching %d scores for model %s", len(todo), model_id)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = {pool.submit(one, pid, c): (pid, c) for pid, c in todo}
        for fut in as_completed(futures):
            try:
                store.add(fut.result())
            except _RETRYABLE as exc:
                errors.append((futures[fut], exc))
    if errors:
        errors.sort(key=lambda e: (e[0][0], list(Condition).index(e[0][1])))
        stats.failures = [pair for pair, _ in errors]
        (pid, cond), exc = errors[0]
        raise FetchError(pid, cond, exc, len(errors)) from exc
    return store
