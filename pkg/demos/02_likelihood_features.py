"""Condition likelihoods and feature configurations, offline.

The mock provider stands in for a hosted LLM: it answers each
(patient, condition) prompt from fixed logistic rules on the patient's own
measurements. Scores go to a JSON-lines cache exactly as live ones would.
"""
import tempfile
from pathlib import Path

from llmconfound import (
    Condition,
    FeatureConfig,
    MockProvider,
    ScoreStore,
    assemble,
    build_prompt,
    fetch_scores,
    parse_score,
    synthetic_cohort,
)

ds = synthetic_cohort(seed=0)
patient = ds.records[0]

# what a live model would be asked
print(build_prompt(patient, Condition.DIABETES))
print()

# strict parsing: first number in the reply, must lie in [0, 1]
print(parse_score("The likelihood is 0.85."))
for reply in ("1.2", "no idea"):
    try:
        parse_score(reply)
    except ValueError as err:
        print(type(err).__name__, err)

cache = Path(tempfile.mkdtemp()) / "scores.jsonl"
provider = MockProvider()
store = fetch_scores(ds, list(Condition), provider, ScoreStore(cache))
print(len(store), "scores cached in", cache)
print(cache.read_text().splitlines()[0])

# a second fetch finds everything cached
fetch_scores(ds, list(Condition), provider, ScoreStore.load(cache))

for config in FeatureConfig:
    m = assemble(ds, store, provider.model_id, config)
    print(f"{config.label:<16} {m.shape}  {', '.join(m.column_names[-3:])}")
