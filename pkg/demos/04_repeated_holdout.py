"""Twenty seeded 80/20 splits, every configuration, mean ± standard error."""
from llmconfound import (
    Condition,
    FeatureConfig,
    ForestParams,
    MockProvider,
    ScoreStore,
    fetch_scores,
    make_splits,
    percent_improvement,
    run_experiment,
    synthetic_cohort,
)
from llmconfound.evaluation import METRICS

ds = synthetic_cohort(seed=0)
provider = MockProvider()
store = fetch_scores(ds, list(Condition), provider, ScoreStore())

plan = make_splits(len(ds), ratio=0.8, n_splits=20, master_seed=0, labels=ds.labels())
print("train/test sizes:", plan.pairs[0][0].size, plan.pairs[0][1].size)

params = ForestParams(seed=0)
summaries = {c: run_experiment(ds, store, provider.model_id, c, params, plan) for c in FeatureConfig}

for c, s in summaries.items():
    cells = "  ".join(f"{m}={s.mean[m]:.3f}±{s.stderr[m]:.3f}" for m in METRICS)
    print(f"{c.label:<16} {cells}")

gain = percent_improvement(summaries[FeatureConfig.ALL_CONFOUNDERS], summaries[FeatureConfig.BASELINE])
print("relative improvement of wAllConfounders (%):", {k: round(v, 2) for k, v in gain.items()})
