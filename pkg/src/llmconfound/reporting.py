"""Text/CSV tables, figure data, a hand-written SVG bar chart, and run manifests."""

from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from decimal import ROUND_HALF_EVEN, Decimal
from xml.sax.saxutils import escape

from .evaluation import METRICS, MetricSummary, percent_improvement
from .feature_config import FeatureConfig

METRIC_LABELS = {
    "accuracy": "Accuracy",
    "precision": "Precision",
    "recall": "Recall",
    "auc": "AUC",
    "specificity": "Specificity",
}

_CONFIG_ORDER = list(FeatureConfig)


def fmt3(value) -> str:
    """Three decimals, round-half-even on the shortest decimal repr; ``NA`` for undefined."""
    if value is None:
        return "NA"
    return str(Decimal(repr(float(value))).quantize(Decimal("0.001"), rounding=ROUND_HALF_EVEN))


def _ordered(summaries):
    summaries = list(summaries)
    if not summaries:
        raise ValueError("no summaries to render")
    seen = set()
    for s in summaries:
        key = (s.config, s.model_id)
        if key in seen:
            raise ValueError(f"duplicate summary for config {s.config.slug!r}, model {s.model_id!r}")
        seen.add(key)
    models = list(dict.fromkeys(s.model_id for s in summaries))
    return models, sorted(summaries, key=lambda s: (models.index(s.model_id), _CONFIG_ORDER.index(s.config)))


def render_table(summaries) -> tuple[str, str]:
    """Table-1 layout: metrics as rows, configurations as columns, one block per model.

    Returns ``(text, csv_text)``; the CSV carries full-precision means and
    standard errors.
    """
    models, ordered = _ordered(summaries)
    blocks = []
    for model in models:
        group = [s for s in ordered if s.model_id == model]
        widths = [max(len(s.config.label), 5) for s in group]
        lines = [f"Model: {model if model is not None else '-'}"]
        lines.append("  ".join([f"{'Metric':<11}"] + [f"{s.config.label:>{w}}" for s, w in zip(group, widths)]))
        for m in METRICS:
            lines.append("  ".join([f"{METRIC_LABELS[m]:<11}"] + [f"{fmt3(s.mean[m]):>{w}}" for s, w in zip(group, widths)]))
        blocks.append("\n".join(lines))
    text = "\n\n".join(blocks) + "\n"

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = ["metric"]
    for s in ordered:
        name = f"{s.model_id}:{s.config.label}"
        header += [f"{name} mean", f"{name} stderr"]
    writer.writerow(header)
    for m in METRICS:
        row = [m]
        for s in ordered:
            row += [_num(s.mean[m]), _num(s.stderr[m])]
        writer.writerow(row)
    return text, buf.getvalue()


def _num(v):
    return "NA" if v is None else repr(float(v))


@dataclass
class FigureData:
    csv: str
    svg: str
    improvement: dict


def render_figure_data(baseline: MetricSummary, candidate: MetricSummary) -> FigureData:
    """Baseline vs AllConfounders comparison as CSV plus a grouped-bar SVG with ±1 SE whiskers."""
    if baseline.model_id != candidate.model_id:
        raise ValueError(f"model mismatch: {baseline.model_id!r} vs {candidate.model_id!r}")
    improvement = percent_improvement(candidate, baseline)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ["metric", "baseline_mean", "baseline_stderr", "candidate_mean", "candidate_stderr", "percent_improvement"]
    )
    for m in METRICS:
        writer.writerow(
            [m, _num(baseline.mean[m]), _num(baseline.stderr[m]), _num(candidate.mean[m]), _num(candidate.stderr[m]),
             _num(improvement[m])]
        )
    return FigureData(buf.getvalue(), _svg(baseline, candidate), improvement)


# chart geometry, in SVG user units
_W, _H = 640, 400
_LEFT, _RIGHT, _TOP, _BOTTOM = 60, 20, 50, 60
_COLORS = ("#8c8c8c", "#2b6cb0")


def _c(v: float) -> str:
    return f"{v:.2f}"


def _svg(baseline: MetricSummary, candidate: MetricSummary) -> str:
    plot_w = _W - _LEFT - _RIGHT
    plot_h = _H - _TOP - _BOTTOM
    y0 = _TOP + plot_h

    def ypos(v):
        return y0 - min(max(v, 0.0), 1.0) * plot_h

    group_w = plot_w / len(METRICS)
    bar_w = group_w * 0.32
    title = f"Baseline vs {candidate.config.label} ({candidate.model_id})"
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" viewBox="0 0 {_W} {_H}" '
        f'font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2:.2f}" y="24" text-anchor="middle" font-size="14">{escape(title)}</text>',
        '<g class="axis">',
        f'<line x1="{_LEFT}" y1="{_TOP}" x2="{_LEFT}" y2="{y0}" stroke="black"/>',
        f'<line x1="{_LEFT}" y1="{y0}" x2="{_W - _RIGHT}" y2="{y0}" stroke="black"/>',
    ]
    for i in range(6):
        v = i / 5
        y = ypos(v)
        out.append(f'<line x1="{_LEFT - 4}" y1="{_c(y)}" x2="{_LEFT}" y2="{_c(y)}" stroke="black"/>')
        out.append(f'<text x="{_LEFT - 8}" y="{_c(y + 4)}" text-anchor="end">{v:.1f}</text>')
    out.append("</g>")

    bars, whiskers = [], []
    for g, m in enumerate(METRICS):
        gx = _LEFT + g * group_w
        for b, s in enumerate((baseline, candidate)):
            mean = s.mean[m] if s.mean[m] is not None else 0.0
            se = s.stderr[m] or 0.0
            x = gx + group_w * 0.18 + b * bar_w
            top = ypos(mean)
            bars.append(
                f'<rect class="bar" x="{_c(x)}" y="{_c(top)}" width="{_c(bar_w)}" height="{_c(y0 - top)}" '
                f'fill="{_COLORS[b]}"><title>{escape(s.config.label)} {METRIC_LABELS[m]}: {fmt3(s.mean[m])}</title></rect>'
            )
            cx = x + bar_w / 2
            hi, lo = ypos(mean + se), ypos(mean - se)
            cap = bar_w / 4
            whiskers.append(
                f'<g class="whisker" stroke="black">'
                f'<line x1="{_c(cx)}" y1="{_c(hi)}" x2="{_c(cx)}" y2="{_c(lo)}"/>'
                f'<line x1="{_c(cx - cap)}" y1="{_c(hi)}" x2="{_c(cx + cap)}" y2="{_c(hi)}"/>'
                f'<line x1="{_c(cx - cap)}" y1="{_c(lo)}" x2="{_c(cx + cap)}" y2="{_c(lo)}"/>'
                f"</g>"
            )
        out.append(
            f'<text x="{_c(gx + group_w / 2)}" y="{_c(y0 + 18)}" text-anchor="middle">{METRIC_LABELS[m]}</text>'
        )
    out += bars + whiskers
    for b, s in enumerate((baseline, candidate)):
        lx = _LEFT + 10 + b * 170
        out.append(f'<rect class="legend-swatch" x="{lx}" y="{_H - 24}" width="12" height="12" fill="{_COLORS[b]}"/>')
        out.append(f'<text x="{lx + 18}" y="{_H - 14}">{escape(s.config.label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunManifest:
    dataset_path: str
    dataset_sha256: str
    model_id: str | None
    provider_endpoint: str | None
    forest_params: dict
    master_seed: int
    configurations: list
    n_splits: int
    ratio: float
    stratified: bool = False
    include_bc_likelihood: bool = False
    timestamp: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat(timespec="seconds"))
    version: str = ""

    def __post_init__(self):
        if not self.version:
            from . import __version__

            self.version = __version__

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        return cls(**json.loads(text))
