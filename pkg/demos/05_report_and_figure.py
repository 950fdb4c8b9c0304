"""Table and figure output. Uses the published Llama columns as input so the
average improvement can be checked by eye (about +6.35%)."""
import tempfile
from pathlib import Path

from llmconfound import FeatureConfig, MetricSummary, render_figure_data, render_table
from llmconfound.evaluation import METRICS

baseline = MetricSummary(
    FeatureConfig.BASELINE, "llama-3.3-70b", 20,
    dict(zip(METRICS, [0.704, 0.692, 0.674, 0.711, 0.749])), dict.fromkeys(METRICS, 0.0),
)
everything = MetricSummary(
    FeatureConfig.ALL_CONFOUNDERS, "llama-3.3-70b", 20,
    dict(zip(METRICS, [0.750, 0.749, 0.683, 0.753, 0.822])), dict.fromkeys(METRICS, 0.0),
)

text, table_csv = render_table([baseline, everything])
print(text)

fig = render_figure_data(baseline, everything)
print(fig.csv)
print("average improvement: %.2f%%" % fig.improvement["average"])

out = Path(tempfile.mkdtemp()) / "figure.svg"
out.write_text(fig.svg)
print("SVG written to", out)
