"""End-to-end annotation runs: render, request, ground, persist.

Runs are resumable: every completed example is appended to an on-disk
cache keyed by (model, variant, schema mode, decoding, rendered prompt),
and a rerun only issues requests for examples without a cached success.
Malformed model output is retried with the identical prompt; after the
retry budget the example is recorded as failed, which is kept distinct
from a genuine "nothing to annotate" answer.
"""

from __future__ import annotations

import hashlib
import json
import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any

from ..grounding import (
    GroundingError,
    extract_last_json_object,
    ground_annotations,
    parse_annotation_payload,
    split_reasoning,
)
from ..model import (
    AnnotationSet,
    Campaign,
    Dataset,
    Example,
    SpanAnnotation,
    Trace,
    normalize_annotation_set,
)
from .adapters import DecodingParams, ProviderAdapter, ProviderError
from .templates import (
    FewshotExample,
    PromptTemplate,
    PromptVariant,
    build_annotation_schema,
    build_template,
    render_prompt,
)

logger = logging.getLogger(__name__)


class SchemaMode(str, Enum):
    CONSTRAINED = "constrained"
    FREEFORM = "freeform"


@dataclass(frozen=True)
class AnnotatorConfig:
    """Everything that identifies one annotation run."""

    model_id: str
    variant: PromptVariant = PromptVariant.BASE
    decoding: DecodingParams = field(default_factory=DecodingParams)
    schema_mode: SchemaMode = SchemaMode.FREEFORM
    max_retries: int = 3
    concurrency_limit: int = 1
    annotator_id: str = ""
    fewshot_examples: tuple[FewshotExample, ...] = ()

    def __post_init__(self):
        if self.max_retries < 1:
            raise ValueError("max_retries must be at least 1")
        if self.concurrency_limit < 1:
            raise ValueError("concurrency_limit must be at least 1")

    @property
    def resolved_annotator_id(self) -> str:
        return self.annotator_id or f"{self.model_id}-{self.variant.value}"


def cache_key(config: AnnotatorConfig, prompt: str) -> str:
    material = "\x1f".join(
        [
            config.model_id,
            config.variant.value,
            config.schema_mode.value,
            repr(config.decoding.temperature),
            repr(config.decoding.seed),
            prompt,
        ]
    )
    return hashlib.sha256(material.encode("utf-8")).hexdigest()


def _annotation_payload(aset: AnnotationSet) -> list[dict]:
    out = []
    for a in aset:
        item: dict[str, Any] = {"start": a.start, "end": a.end, "type": a.category}
        if a.reason is not None:
            item["reason"] = a.reason
        if a.surface is not None:
            item["text"] = a.surface
        out.append(item)
    return out


def trace_record(trace: Trace, aset: AnnotationSet) -> dict:
    """Wire format for one trace line."""
    return {
        "example_id": trace.example_id,
        "model_id": trace.model_id,
        "variant": trace.variant,
        "raw_output": trace.raw_output,
        "reasoning": trace.reasoning,
        "annotations": _annotation_payload(aset),
        "latency_s": trace.latency_s,
        "usage": {
            "prompt_tokens": trace.prompt_tokens,
            "completion_tokens": trace.completion_tokens,
        },
        "retries": trace.retries,
        "failed": trace.failed,
    }


class TraceCache:
    """Append-only JSONL store of completed examples, keyed by prompt hash."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._records: dict[str, dict] = {}
        if self.path.exists():
            with open(self.path, encoding="utf-8") as handle:
                for line in handle:
                    if line.strip():
                        record = json.loads(line)
                        self._records[record["key"]] = record

    def get(self, key: str) -> dict | None:
        return self._records.get(key)

    def put(self, key: str, record: dict) -> None:
        record = {"key": key, **record}
        with self._lock:
            self._records[key] = record
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a", encoding="utf-8", newline="\n") as handle:
                handle.write(json.dumps(record, ensure_ascii=False) + "\n")
                handle.flush()


def _template_for(
    task: str, dataset: Dataset, config: AnnotatorConfig
) -> PromptTemplate:
    return build_template(
        task,
        config.variant,
        fewshot_examples=config.fewshot_examples,
        has_guidelines=bool(dataset.guidelines.strip()),
    )


def annotate_example(
    example: Example,
    dataset: Dataset,
    config: AnnotatorConfig,
    adapter: ProviderAdapter,
    template: PromptTemplate | None = None,
) -> tuple[AnnotationSet, Trace]:
    """Annotate one example: prompt, complete, ground, normalize.

    Malformed output (no JSON, wrong payload shape) is retried with the
    identical prompt up to config.max_retries attempts; exhaustion
    yields an empty set flagged failed. Raises ProviderError only when
    every attempt failed at the transport level.
    """
    template = template or _template_for(example.task, dataset, config)
    prompt = render_prompt(template, example, dataset.categories, dataset.guidelines)
    schema = (
        build_annotation_schema(config.variant is not PromptVariant.NOREASON)
        if config.schema_mode is SchemaMode.CONSTRAINED
        else None
    )

    failures = 0
    transport_failures = 0
    latency = 0.0
    prompt_tokens = 0
    completion_tokens = 0
    raw = ""
    reasoning = ""
    last_transport: ProviderError | None = None

    for _ in range(config.max_retries):
        try:
            result = adapter.complete(
                prompt, config.decoding, schema=schema, request_id=example.id
            )
        except ProviderError as exc:
            failures += 1
            transport_failures += 1
            last_transport = exc
            logger.warning("transport error for %s: %s", example.id, exc)
            continue
        latency += result.latency_s
        prompt_tokens += result.prompt_tokens
        completion_tokens += result.completion_tokens
        raw = result.text
        if config.schema_mode is SchemaMode.CONSTRAINED:
            reasoning = ""
            try:
                payload = json.loads(raw)
            except json.JSONDecodeError:
                failures += 1
                continue
        else:
            cleaned, reasoning = split_reasoning(raw)
            try:
                payload = extract_last_json_object(cleaned)
            except GroundingError:
                failures += 1
                continue
        try:
            raws, report = parse_annotation_payload(payload, dataset.k, example.id)
        except GroundingError:
            failures += 1
            continue
        spans, ground_report = ground_annotations(raws, example.text, example.id)
        report.merge(ground_report)
        if report.dropped:
            logger.debug(
                "example %s: %d grounded, %d dropped", example.id, report.grounded,
                report.dropped,
            )
        aset, _ = normalize_annotation_set(
            spans, example.text, dataset.no_overlap, example.id
        )
        trace = Trace(
            example_id=example.id,
            model_id=config.model_id,
            variant=config.variant.value,
            raw_output=raw,
            reasoning=reasoning,
            latency_s=latency,
            prompt_tokens=prompt_tokens,
            completion_tokens=completion_tokens,
            retries=failures,
            failed=False,
        )
        return aset, trace

    if transport_failures == config.max_retries and last_transport is not None:
        raise ProviderError(
            f"all {config.max_retries} attempts failed for {example.id}: "
            f"{last_transport}"
        )
    trace = Trace(
        example_id=example.id,
        model_id=config.model_id,
        variant=config.variant.value,
        raw_output=raw,
        reasoning=reasoning,
        latency_s=latency,
        prompt_tokens=prompt_tokens,
        completion_tokens=completion_tokens,
        retries=failures,
        failed=True,
    )
    return AnnotationSet(example.id), trace


def _set_from_record(example_id: str, record: dict) -> tuple[AnnotationSet, Trace]:
    annotations = tuple(
        SpanAnnotation(
            start=item["start"],
            end=item["end"],
            category=item["type"],
            reason=item.get("reason"),
            surface=item.get("text"),
        )
        for item in record["annotations"]
    )
    usage = record.get("usage", {})
    trace = Trace(
        example_id=example_id,
        model_id=record.get("model_id", ""),
        variant=record.get("variant", ""),
        raw_output=record.get("raw_output", ""),
        reasoning=record.get("reasoning", ""),
        latency_s=record.get("latency_s", 0.0),
        prompt_tokens=usage.get("prompt_tokens", 0),
        completion_tokens=usage.get("completion_tokens", 0),
        retries=record.get("retries", 0),
        failed=record.get("failed", False),
    )
    return AnnotationSet(example_id, annotations), trace


def annotate_dataset(
    dataset: Dataset,
    config: AnnotatorConfig,
    adapter: ProviderAdapter,
    cache_path: str | Path | None = None,
    dataset_ref: str = "",
) -> Campaign:
    """Annotate every example, reusing cached successes.

    Requests run under config.concurrency_limit; the resulting campaign
    is assembled in example-id order, so its content is independent of
    completion order. Transport-dead examples are flagged failed rather
    than aborting the run.
    """
    cache = TraceCache(cache_path) if cache_path is not None else None
    templates: dict[str, PromptTemplate] = {}
    results: dict[str, tuple[AnnotationSet, Trace]] = {}
    pending: list[tuple[Example, str, PromptTemplate]] = []

    for example in sorted(dataset.examples, key=lambda e: e.id):
        if example.task not in templates:
            templates[example.task] = _template_for(example.task, dataset, config)
        template = templates[example.task]
        prompt = render_prompt(
            template, example, dataset.categories, dataset.guidelines
        )
        key = cache_key(config, prompt)
        cached = cache.get(key) if cache is not None else None
        if cached is not None and not cached.get("failed"):
            results[example.id] = _set_from_record(example.id, cached)
        else:
            pending.append((example, key, template))

    def work(item: tuple[Example, str, PromptTemplate]) -> tuple[str, AnnotationSet, Trace, str]:
        example, key, template = item
        try:
            aset, trace = annotate_example(example, dataset, config, adapter, template)
        except ProviderError as exc:
            logger.warning("example %s failed: %s", example.id, exc)
            aset = AnnotationSet(example.id)
            trace = Trace(
                example_id=example.id,
                model_id=config.model_id,
                variant=config.variant.value,
                retries=config.max_retries,
                failed=True,
            )
        return example.id, aset, trace, key

    if pending:
        with ThreadPoolExecutor(max_workers=config.concurrency_limit) as pool:
            for example_id, aset, trace, key in pool.map(work, pending):
                results[example_id] = (aset, trace)
                if cache is not None:
                    cache.put(key, trace_record(trace, aset))

    sets = {example_id: aset for example_id, (aset, _) in results.items()}
    traces = {example_id: trace for example_id, (_, trace) in results.items()}
    return Campaign(
        annotator_id=config.resolved_annotator_id,
        dataset_ref=dataset_ref,
        sets=sets,
        traces=traces,
    )
