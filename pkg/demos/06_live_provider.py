"""Scores from a hosted OpenAI-compatible endpoint.

Needs network access and a key, e.g.

    export LLM_API_KEY=...
    LLM_URL=https://api.together.xyz/v1 LLM_MODEL=meta-llama/Llama-3.3-70B-Instruct-Turbo \
        COIMBRA_CSV=dataR2.csv python demos/06_live_provider.py

The equivalent CLI call is ``llmconfound fetch-scores``.
"""
import os
import sys

from llmconfound import Condition, ProviderConfig, ScoreStore, fetch_scores, load_dataset
from llmconfound.llm_features import ChatCompletionsProvider, FetchStats

if not all(os.environ.get(k) for k in ("LLM_URL", "LLM_MODEL", "LLM_API_KEY", "COIMBRA_CSV")):
    sys.exit(__doc__)

ds = load_dataset(os.environ["COIMBRA_CSV"])
config = ProviderConfig(endpoint=os.environ["LLM_URL"], model=os.environ["LLM_MODEL"], max_concurrent=4)
provider = ChatCompletionsProvider(config)
store = ScoreStore.load("scores.jsonl")

stats = FetchStats()
fetch_scores(ds, list(Condition), provider, store, stats)
print(f"{stats.requests} requests, {stats.retries} retries, {len(store)} scores cached")
