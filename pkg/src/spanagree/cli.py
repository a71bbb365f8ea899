"""Command-line entry points: annotate, evaluate, stats.

All behaviour is driven by a single JSON config file; flags only
override individual keys. Exit codes: 0 success (even with per-example
annotation failures), 2 for usage/config/validation problems, 3 for I/O
problems.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .annotator import (
    AnnotatorConfig,
    DecodingParams,
    MissingApiKey,
    MockAdapter,
    OpenAIChatAdapter,
    PromptVariant,
    SchemaMode,
    TemplateError,
    annotate_dataset,
    fewshot_from_config,
    trace_record,
)
from .gamma import DissimilarityConfig, GammaConfig
from .ingest import IngestError, export_campaign, load_campaign, load_dataset
from .metrics import (
    MetricError,
    aggregate,
    annotation_stats,
    confusion_matrix,
)
from .model import ModelError
from .report import (
    fmt3,
    report_to_dict,
    stats_lines,
    write_confusion_csv,
    write_per_example_csv,
    write_report_json,
    write_summary_csv,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3


class ConfigError(ValueError):
    pass


@dataclass
class ProviderSettings:
    kind: str = "openai"
    base_url: str = "https://api.openai.com/v1"
    api_key_env: str = "OPENAI_API_KEY"
    replies: Path | None = None  # mock only


@dataclass
class RunConfig:
    corpus: Path
    categories: Path
    output_dir: Path
    campaigns: dict[str, Path] = field(default_factory=dict)
    cache: Path | None = None
    annotator: AnnotatorConfig | None = None
    provider: ProviderSettings = field(default_factory=ProviderSettings)
    gamma: GammaConfig = field(default_factory=GammaConfig)
    config_hash: str = ""


def _reject_unknown(obj: dict, allowed: set[str], where: str) -> None:
    unknown = obj.keys() - allowed
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")


def _resolve(base: Path, value: str) -> Path:
    path = Path(value)
    return path if path.is_absolute() else base / path


def load_run_config(path: str | Path) -> RunConfig:
    """Parse and validate the run configuration; unknown keys are errors."""
    path = Path(path)
    raw_bytes = path.read_bytes()
    try:
        raw = json.loads(raw_bytes)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    _reject_unknown(
        raw,
        {"corpus", "categories", "campaigns", "output_dir", "cache",
         "annotator", "metrics"},
        str(path),
    )
    for key in ("corpus", "categories", "output_dir"):
        if key not in raw:
            raise ConfigError(f"{path}: missing required key {key!r}")
    base = path.parent

    campaigns = {}
    for name, campaign_path in raw.get("campaigns", {}).items():
        campaigns[name] = _resolve(base, campaign_path)

    annotator = None
    provider = ProviderSettings()
    if "annotator" in raw:
        section = raw["annotator"]
        _reject_unknown(
            section,
            {"annotator_id", "model_id", "variant", "schema_mode", "temperature",
             "seed", "max_retries", "concurrency", "provider", "fewshot"},
            f"{path}: annotator",
        )
        if "model_id" not in section:
            raise ConfigError(f"{path}: annotator.model_id is required")
        try:
            variant = PromptVariant(section.get("variant", "base"))
        except ValueError as exc:
            raise ConfigError(f"{path}: unknown prompt variant: {exc}") from exc
        try:
            schema_mode = SchemaMode(section.get("schema_mode", "freeform"))
        except ValueError as exc:
            raise ConfigError(f"{path}: unknown schema mode: {exc}") from exc
        try:
            fewshot = fewshot_from_config(section.get("fewshot", []))
        except TemplateError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        try:
            annotator = AnnotatorConfig(
                model_id=section["model_id"],
                variant=variant,
                decoding=DecodingParams(
                    temperature=section.get("temperature", 0.0),
                    seed=section.get("seed", 42),
                ),
                schema_mode=schema_mode,
                max_retries=section.get("max_retries", 3),
                concurrency_limit=section.get("concurrency", 1),
                annotator_id=section.get("annotator_id", ""),
                fewshot_examples=fewshot,
            )
        except ValueError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        provider_raw = section.get("provider", {})
        _reject_unknown(
            provider_raw,
            {"kind", "base_url", "api_key_env", "replies"},
            f"{path}: annotator.provider",
        )
        provider = ProviderSettings(
            kind=provider_raw.get("kind", "openai"),
            base_url=provider_raw.get("base_url", "https://api.openai.com/v1"),
            api_key_env=provider_raw.get("api_key_env", "OPENAI_API_KEY"),
            replies=(
                _resolve(base, provider_raw["replies"])
                if "replies" in provider_raw
                else None
            ),
        )
        if provider.kind not in ("openai", "mock"):
            raise ConfigError(f"{path}: unknown provider kind {provider.kind!r}")

    gamma = GammaConfig()
    if "metrics" in raw:
        metrics_raw = raw["metrics"]
        _reject_unknown(metrics_raw, {"gamma"}, f"{path}: metrics")
        gamma_raw = metrics_raw.get("gamma", {})
        _reject_unknown(
            gamma_raw,
            {"alpha", "beta", "delta_empty", "n_samples", "seed"},
            f"{path}: metrics.gamma",
        )
        try:
            gamma = GammaConfig(
                dissimilarity=DissimilarityConfig(
                    alpha=gamma_raw.get("alpha", 1.0),
                    beta=gamma_raw.get("beta", 1.0),
                    delta_empty=gamma_raw.get("delta_empty", 1.0),
                ),
                n_samples=gamma_raw.get("n_samples", 30),
                seed=gamma_raw.get("seed", 42),
            )
        except ValueError as exc:
            raise ConfigError(f"{path}: {exc}") from exc

    return RunConfig(
        corpus=_resolve(base, raw["corpus"]),
        categories=_resolve(base, raw["categories"]),
        output_dir=_resolve(base, raw["output_dir"]),
        campaigns=campaigns,
        cache=_resolve(base, raw["cache"]) if "cache" in raw else None,
        annotator=annotator,
        provider=provider,
        gamma=gamma,
        config_hash=hashlib.sha256(raw_bytes).hexdigest(),
    )


def _apply_overrides(config: RunConfig, args: argparse.Namespace) -> RunConfig:
    if args.output is not None:
        config.output_dir = Path(args.output)
    if args.seed is not None:
        config.gamma = GammaConfig(
            dissimilarity=config.gamma.dissimilarity,
            n_samples=config.gamma.n_samples,
            seed=args.seed,
        )
        if config.annotator is not None:
            config.annotator = AnnotatorConfig(
                model_id=config.annotator.model_id,
                variant=config.annotator.variant,
                decoding=DecodingParams(
                    temperature=config.annotator.decoding.temperature,
                    seed=args.seed,
                ),
                schema_mode=config.annotator.schema_mode,
                max_retries=config.annotator.max_retries,
                concurrency_limit=config.annotator.concurrency_limit,
                annotator_id=config.annotator.annotator_id,
                fewshot_examples=config.annotator.fewshot_examples,
            )
    if getattr(args, "mock", None) is not None:
        config.provider = ProviderSettings(kind="mock", replies=Path(args.mock))
    return config


def _make_adapter(config: RunConfig):
    if config.annotator is None:
        raise ConfigError("config has no annotator section")
    if config.provider.kind == "mock":
        if config.provider.replies is None:
            raise ConfigError("mock provider needs a replies file (--mock PATH)")
        return MockAdapter.from_jsonl(config.provider.replies)
    return OpenAIChatAdapter(
        model_id=config.annotator.model_id,
        base_url=config.provider.base_url,
        api_key_env=config.provider.api_key_env,
    )


def cmd_annotate(args: argparse.Namespace) -> int:
    config = _apply_overrides(load_run_config(args.config), args)
    dataset = load_dataset(config.corpus, config.categories)
    adapter = _make_adapter(config)
    campaign = annotate_dataset(
        dataset,
        config.annotator,
        adapter,
        cache_path=config.cache,
        dataset_ref=str(config.corpus),
    )
    config.output_dir.mkdir(parents=True, exist_ok=True)
    export_campaign(campaign, config.output_dir / "campaign.jsonl")
    with open(
        config.output_dir / "traces.jsonl", "w", encoding="utf-8", newline="\n"
    ) as handle:
        for example_id in campaign.example_ids():
            record = trace_record(campaign.traces[example_id], campaign.sets[example_id])
            handle.write(json.dumps(record, ensure_ascii=False) + "\n")

    failed = sorted(campaign.failed_ids())
    latencies = [t.latency_s for t in campaign.traces.values()]
    mean_latency = sum(latencies) / len(latencies) if latencies else 0.0
    print(f"annotated {len(campaign)} examples as {campaign.annotator_id!r}")
    print(f"failed: {len(failed)}" + (f" ({', '.join(failed)})" if failed else ""))
    print(f"mean latency: {mean_latency:.3f} s/output")
    print(f"wrote {config.output_dir / 'campaign.jsonl'}")
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace) -> int:
    config = _apply_overrides(load_run_config(args.config), args)
    dataset = load_dataset(config.corpus, config.categories)
    campaigns = {}
    for name in (args.reference, args.candidate):
        if name not in config.campaigns:
            raise ConfigError(
                f"campaign {name!r} not in config (have: {sorted(config.campaigns)})"
            )
        campaigns[name] = load_campaign(config.campaigns[name], dataset)
    reference = campaigns[args.reference]
    candidate = campaigns[args.candidate]

    score_report = aggregate(dataset, reference, candidate, config.gamma)
    confusion = confusion_matrix(reference, candidate, dataset.k)

    config.output_dir.mkdir(parents=True, exist_ok=True)
    payload = report_to_dict(
        score_report,
        confusion,
        dataset.categories,
        meta={"config_hash": config.config_hash},
    )
    write_report_json(config.output_dir / "report.json", payload)
    write_summary_csv(config.output_dir / "summary.csv", score_report)
    write_per_example_csv(config.output_dir / "per_example.csv", score_report)
    write_confusion_csv(config.output_dir / "confusion.csv", confusion, dataset.categories)

    print(
        f"{score_report.candidate_id} vs {score_report.reference_id}: "
        f"pearson={fmt3(score_report.pearson)} "
        f"F1(hard)={fmt3(score_report.f1_hard)} "
        f"F1(soft)={fmt3(score_report.f1_soft)} "
        f"gamma={fmt3(score_report.gamma)} "
        f"s_empty={fmt3(score_report.s_empty)}"
    )
    print(
        f"examples: {score_report.n_examples} "
        f"(scored {score_report.n_scored}, empty-routed {score_report.n_empty_scored}, "
        f"failed {score_report.n_failed}, gamma-skipped {score_report.n_gamma_skipped})"
    )
    print(f"wrote {config.output_dir / 'report.json'}")
    return EXIT_OK


def cmd_stats(args: argparse.Namespace) -> int:
    config = _apply_overrides(load_run_config(args.config), args)
    dataset = load_dataset(config.corpus, config.categories)
    if args.campaign not in config.campaigns:
        raise ConfigError(
            f"campaign {args.campaign!r} not in config (have: {sorted(config.campaigns)})"
        )
    campaign = load_campaign(config.campaigns[args.campaign], dataset)
    stats = annotation_stats(campaign)
    for line in stats_lines(campaign.annotator_id, stats):
        print(line)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spanagree",
        description="Collect LLM span annotations and score campaigns against "
        "each other.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="run configuration JSON")
    common.add_argument("--output", default=None, help="override the output directory")
    common.add_argument("--seed", type=int, default=None, help="override seeds")
    common.add_argument(
        "--mock", default=None, help="replay canned provider responses from a JSONL file"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_annotate = sub.add_parser(
        "annotate", parents=[common], help="collect annotations from a provider"
    )
    p_annotate.set_defaults(func=cmd_annotate)

    p_evaluate = sub.add_parser(
        "evaluate", parents=[common], help="score one campaign against another"
    )
    p_evaluate.add_argument("reference", help="reference campaign id from the config")
    p_evaluate.add_argument("candidate", help="candidate campaign id from the config")
    p_evaluate.set_defaults(func=cmd_evaluate)

    p_stats = sub.add_parser(
        "stats", parents=[common], help="descriptive statistics for one campaign"
    )
    p_stats.add_argument("campaign", help="campaign id from the config")
    p_stats.set_defaults(func=cmd_stats)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, IngestError, MetricError, ModelError, MissingApiKey,
            TemplateError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
