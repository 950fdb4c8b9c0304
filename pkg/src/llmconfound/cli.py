"""Command-line entry point: ``llmconfound <subcommand>``.

Subcommands
-----------
summarize     print dataset statistics (text or JSON)
fetch-scores  populate the likelihood cache from an OpenAI-compatible endpoint
run           repeated-holdout experiment over the selected configurations
report        re-render tables and figure from a finished run directory
mock-run      offline end-to-end run with the deterministic mock provider
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import asdict
from pathlib import Path

from .dataset import DatasetError, load_dataset, summarize
from .evaluation import InfeasibleSplit, make_splits, per_split_csv, read_per_split_csv, run_experiment
from .feature_config import FeatureConfig, IncompleteStore
from .llm_features import (
    ChatCompletionsProvider,
    Condition,
    FetchError,
    FetchStats,
    MissingApiKey,
    MockProvider,
    ProviderConfig,
    ScoreStore,
    ScoreStoreError,
    fetch_scores,
)
from .random_forest import ForestParams
from .reporting import RunManifest, render_figure_data, render_table, sha256_file
from .synthetic import synthetic_cohort

logger = logging.getLogger("llmconfound")

CONFIG_CHOICES = [c.slug for c in FeatureConfig] + ["all"]


class UsageError(Exception):
    pass


def _u64(text):
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _parse_configs(values):
    if not values:
        return list(FeatureConfig)
    slugs = [s for v in values for s in v.split(",") if s]
    if "all" in slugs:
        return list(FeatureConfig)
    bad = [s for s in slugs if s not in CONFIG_CHOICES]
    if bad:
        raise UsageError(f"unknown --config value(s): {', '.join(bad)}")
    chosen = {FeatureConfig.from_slug(s) for s in slugs}
    return [c for c in FeatureConfig if c in chosen]


def _provider_args(p, required=False):
    p.add_argument("--provider-url", required=required, help="base URL; requests go to <url>/chat/completions")
    p.add_argument("--model", help="model identifier sent to the provider and used as cache key")
    p.add_argument("--api-key-env", default="LLM_API_KEY", help="environment variable holding the API key")
    p.add_argument("--temperature", type=float, default=0.0)
    p.add_argument("--max-retries", type=int, default=3)
    p.add_argument("--timeout", type=float, default=60.0)
    p.add_argument("--concurrency", type=int, default=4)
    p.add_argument("--backoff", type=float, default=1.0, help="base backoff in seconds (doubles per retry)")


def _experiment_args(p):
    p.add_argument("--config", action="append", help=f"one of {CONFIG_CHOICES}; repeatable or comma-separated")
    p.add_argument("--splits", type=int, default=20)
    p.add_argument("--ratio", type=float, default=0.8)
    p.add_argument("--seed", type=_u64, default=0)
    p.add_argument("--trees", type=int, default=100)
    p.add_argument("--max-depth", type=int, default=None)
    p.add_argument("--min-samples-split", type=int, default=2)
    p.add_argument("--min-samples-leaf", type=int, default=1)
    p.add_argument("--mtry", type=int, default=None)
    p.add_argument("--jobs", type=int, default=1, help="worker threads for split evaluation")
    p.add_argument("--stratified", action="store_true", help="class-proportional test sets")
    p.add_argument("--include-bc-likelihood", action="store_true",
                   help="add the breast-cancer likelihood to all-confounders (13 columns)")
    p.add_argument("--out", required=True, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="llmconfound", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("summarize", help="dataset statistics")
    p.add_argument("--dataset", required=True)
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("fetch-scores", help="populate the likelihood cache")
    p.add_argument("--dataset", required=True)
    p.add_argument("--cache", required=True)
    p.add_argument("--conditions", default=",".join(c.value for c in Condition),
                   help="comma-separated subset of " + ",".join(c.value for c in Condition))
    _provider_args(p, required=True)

    p = sub.add_parser("run", help="repeated-holdout experiment")
    p.add_argument("--dataset", required=True)
    p.add_argument("--cache", help="likelihood cache (JSON lines)")
    _provider_args(p)
    _experiment_args(p)

    p = sub.add_parser("report", help="re-render outputs from a run directory")
    p.add_argument("--out", required=True, help="run directory holding per_split.csv and manifest.json")

    p = sub.add_parser("mock-run", help="offline end-to-end run with the mock provider")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--dataset")
    src.add_argument("--synthetic", type=int, metavar="SEED", help="generate a synthetic cohort with this seed")
    p.add_argument("--cache", help="defaults to <out>/scores.jsonl")
    _experiment_args(p)
    return parser


def _forest_params(args) -> ForestParams:
    return ForestParams(
        n_trees=args.trees,
        max_depth=args.max_depth,
        min_samples_split=args.min_samples_split,
        min_samples_leaf=args.min_samples_leaf,
        mtry=args.mtry,
        seed=args.seed,
    )


def _provider(args) -> ChatCompletionsProvider:
    if not args.model:
        raise UsageError("--model is required with --provider-url")
    cfg = ProviderConfig(
        endpoint=args.provider_url,
        model=args.model,
        api_key_env=args.api_key_env,
        temperature=args.temperature,
        max_retries=args.max_retries,
        timeout=args.timeout,
        max_concurrent=args.concurrency,
        backoff=args.backoff,
    )
    return ChatCompletionsProvider(cfg)


def _write(out: Path, name: str, text: str):
    (out / name).write_text(text, encoding="utf-8", newline="")


def _render_outputs(out: Path, summaries):
    text, table_csv = render_table(summaries)
    _write(out, "table.txt", text)
    _write(out, "table.csv", table_csv)
    by_config = {s.config: s for s in summaries}
    base, cand = by_config.get(FeatureConfig.BASELINE), by_config.get(FeatureConfig.ALL_CONFOUNDERS)
    if base is not None and cand is not None:
        fig = render_figure_data(base, cand)
        _write(out, "figure.csv", fig.csv)
        _write(out, "figure.svg", fig.svg)
        print(f"average improvement of {cand.config.label} over Baseline: {fig.improvement['average']:+.2f}%")
    else:
        logger.info("figure skipped: needs both baseline and all-confounders")
    print(text, end="")


def _experiment(args, dataset, dataset_path, store, model_id, endpoint):
    configs = _parse_configs(args.config)
    params = _forest_params(args)
    plan = make_splits(len(dataset), args.ratio, args.splits, args.seed, dataset.labels(), args.stratified)
    summaries = [
        run_experiment(dataset, store, model_id, c, params, plan, args.jobs, args.include_bc_likelihood)
        for c in configs
    ]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write(out, "per_split.csv", per_split_csv(summaries))
    manifest = RunManifest(
        dataset_path=str(dataset_path),
        dataset_sha256=sha256_file(dataset_path),
        model_id=model_id,
        provider_endpoint=endpoint,
        forest_params=asdict(params),
        master_seed=args.seed,
        configurations=[c.slug for c in configs],
        n_splits=args.splits,
        ratio=args.ratio,
        stratified=args.stratified,
        include_bc_likelihood=args.include_bc_likelihood,
    )
    _write(out, "manifest.json", manifest.to_json())
    _render_outputs(out, summaries)


def _needed_conditions(configs, include_bc):
    return sorted({c for cfg in configs for c in cfg.required_conditions(include_bc)}, key=list(Condition).index)


def cmd_summarize(args):
    summary = summarize(load_dataset(args.dataset))
    print(summary.to_json() if args.json else summary.to_text(), end="\n" if args.json else "")


def cmd_fetch(args):
    dataset = load_dataset(args.dataset)
    try:
        conditions = [Condition(c.strip()) for c in args.conditions.split(",") if c.strip()]
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    provider = _provider(args)
    store = ScoreStore.load(args.cache)
    stats = FetchStats()
    try:
        fetch_scores(dataset, conditions, provider, store, stats)
    finally:
        provider.close()
        print(f"requests: {stats.requests}  retries: {stats.retries}  cached scores: {len(store)}")


def cmd_run(args):
    configs = _parse_configs(args.config)
    dataset = load_dataset(args.dataset)
    needed = _needed_conditions(configs, args.include_bc_likelihood)
    store = ScoreStore.load(args.cache) if args.cache else ScoreStore()
    if needed and not args.model:
        raise UsageError("--model is required for configurations that use LLM likelihoods")
    if args.provider_url and needed:
        provider = _provider(args)
        try:
            fetch_scores(dataset, needed, provider, store)
        finally:
            provider.close()
    _experiment(args, dataset, args.dataset, store, args.model if needed else None, args.provider_url)


def cmd_mock_run(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.dataset:
        dataset_path = Path(args.dataset)
        dataset = load_dataset(dataset_path)
    else:
        dataset = synthetic_cohort(seed=args.synthetic or 0)
        dataset_path = out / "synthetic_cohort.csv"
        dataset.to_csv(dataset_path)
    provider = MockProvider()
    configs = _parse_configs(args.config)
    store = ScoreStore.load(args.cache or out / "scores.jsonl")
    fetch_scores(dataset, _needed_conditions(configs, args.include_bc_likelihood), provider, store)
    _experiment(args, dataset, dataset_path, store, provider.model_id, None)


def cmd_report(args):
    out = Path(args.out)
    manifest = RunManifest.from_json((out / "manifest.json").read_text(encoding="utf-8"))
    summaries = read_per_split_csv((out / "per_split.csv").read_text(encoding="utf-8"), manifest.model_id)
    _render_outputs(out, summaries)


COMMANDS = {
    "summarize": cmd_summarize,
    "fetch-scores": cmd_fetch,
    "run": cmd_run,
    "report": cmd_report,
    "mock-run": cmd_mock_run,
}


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"llmconfound: error: {exc}", file=sys.stderr)
        return 2
    except (
        IncompleteStore,
        FetchError,
        MissingApiKey,
        DatasetError,
        ScoreStoreError,
        InfeasibleSplit,
        FileNotFoundError,
        ValueError,
    ) as exc:
        print(f"llmconfound: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


def main():
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
