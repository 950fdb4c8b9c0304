"""Random Forest breast-cancer classification augmented with LLM-inferred confounder likelihoods."""

__version__ = "0.1.0"

from .dataset import Dataset, DatasetError, Label, PatientRecord, load_dataset, summarize
from .evaluation import (
    METRICS,
    ConfusionMatrix,
    MetricSummary,
    SplitPlan,
    auc,
    confusion,
    make_splits,
    percent_improvement,
    point_metrics,
    run_experiment,
)
from .feature_config import FeatureConfig, FeatureMatrix, IncompleteStore, assemble
from .llm_features import (
    ChatCompletionsProvider,
    Condition,
    LikelihoodScore,
    MockProvider,
    ProviderConfig,
    ScoreStore,
    build_prompt,
    fetch_scores,
    mock_provider,
    parse_score,
)
from .random_forest import Forest, ForestParams, best_split, fit, gini, grow_tree, predict, predict_proba
from .reporting import RunManifest, render_figure_data, render_table
from .synthetic import synthetic_cohort
