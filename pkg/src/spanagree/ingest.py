"""File I/O for corpora, category inventories, and campaigns.

One canonical JSONL interchange format covers every task; offsets in
files are 0-based half-open Unicode scalar positions, exactly as in
memory. Validation is strict: a bad line fails the whole file with its
line number, because silently dropped annotations corrupt agreement
statistics.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any

from .model import (
    AnnotationSet,
    Campaign,
    Category,
    CategorySet,
    Dataset,
    Example,
    ModelError,
    SpanAnnotation,
    Trace,
    validate_campaign,
)

BUNDLED_TASKS = ("d2t", "mt", "propaganda")


class IngestError(ValueError):
    pass


class ParseError(IngestError):
    def __init__(self, path: str | Path, line: int, message: str):
        super().__init__(f"{path}:{line}: {message}")
        self.line = line


class DuplicateId(IngestError):
    pass


class DanglingCategory(IngestError):
    pass


class DanglingExample(IngestError):
    pass


class UnknownTechnique(IngestError):
    pass


class OffsetOutOfBounds(IngestError):
    pass


@dataclass(frozen=True)
class CategoryFile:
    """Parsed category inventory: the task it belongs to, its overlap
    rule, the categories, and the guideline text rendered into prompts."""

    task: str
    no_overlap: bool
    categories: CategorySet
    guidelines: str


def _require_keys(obj: dict, required: set[str], optional: set[str], where: str) -> None:
    missing = required - obj.keys()
    if missing:
        raise IngestError(f"{where}: missing keys {sorted(missing)}")
    unknown = obj.keys() - required - optional
    if unknown:
        raise IngestError(f"{where}: unknown keys {sorted(unknown)}")


def load_category_file(path: str | Path) -> CategoryFile:
    """Load and validate a category JSON file."""
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(path, exc.lineno, f"invalid JSON: {exc.msg}") from exc
    if not isinstance(payload, dict):
        raise IngestError(f"{path}: category file must be a JSON object")
    _require_keys(
        payload, {"task", "no_overlap", "categories", "guidelines"}, set(), str(path)
    )
    entries = payload["categories"]
    if not isinstance(entries, list) or not entries:
        raise IngestError(f"{path}: categories must be a non-empty list")
    categories = []
    for pos, entry in enumerate(entries):
        if not isinstance(entry, dict):
            raise IngestError(f"{path}: category {pos} is not an object")
        _require_keys(entry, {"index", "name"}, {"description"}, f"{path}: category {pos}")
        categories.append(
            Category(
                index=entry["index"],
                name=entry["name"],
                description=entry.get("description", ""),
            )
        )
    try:
        category_set = CategorySet(tuple(categories))
    except ModelError as exc:
        raise IngestError(f"{path}: {exc}") from exc
    return CategoryFile(
        task=payload["task"],
        no_overlap=bool(payload["no_overlap"]),
        categories=category_set,
        guidelines=payload["guidelines"],
    )


def bundled_category_file(task: str) -> CategoryFile:
    """Load one of the shipped inventories: d2t (6 categories), mt (2),
    or propaganda (18)."""
    if task not in BUNDLED_TASKS:
        raise IngestError(f"no bundled categories for task {task!r}")
    with resources.as_file(resources.files("spanagree.data") / f"{task}.json") as path:
        return load_category_file(path)


def _read_jsonl(path: Path) -> list[tuple[int, Any]]:
    rows = []
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                rows.append((lineno, json.loads(line)))
            except json.JSONDecodeError as exc:
                raise ParseError(path, lineno, f"invalid JSON: {exc.msg}") from exc
    return rows


def load_dataset(corpus_path: str | Path, category_path: str | Path) -> Dataset:
    """Load a JSONL corpus against a category file and cross-validate.

    Corpus lines carry {id, text, source?, task?, metadata?}; a line's
    task, when present, must match the category file's task.
    """
    corpus_path = Path(corpus_path)
    schema = load_category_file(category_path)
    examples = []
    seen: dict[str, int] = {}
    for lineno, row in _read_jsonl(corpus_path):
        if not isinstance(row, dict):
            raise ParseError(corpus_path, lineno, "corpus line is not an object")
        try:
            _require_keys(row, {"id", "text"}, {"source", "task", "metadata"}, "line")
        except IngestError as exc:
            raise ParseError(corpus_path, lineno, str(exc)) from exc
        task = row.get("task", schema.task)
        if task != schema.task:
            raise ParseError(
                corpus_path,
                lineno,
                f"example task {task!r} does not match category file task {schema.task!r}",
            )
        example_id = row["id"]
        if example_id in seen:
            raise DuplicateId(
                f"{corpus_path}:{lineno}: duplicate id {example_id!r} "
                f"(first seen on line {seen[example_id]})"
            )
        seen[example_id] = lineno
        try:
            examples.append(
                Example(
                    id=example_id,
                    text=row["text"],
                    source=row.get("source"),
                    task=task,
                    metadata=row.get("metadata", {}),
                )
            )
        except ModelError as exc:
            raise ParseError(corpus_path, lineno, str(exc)) from exc
    # keyed by id, so permuting corpus lines yields an equal Dataset
    examples.sort(key=lambda ex: ex.id)
    try:
        return Dataset(
            examples=tuple(examples),
            categories=schema.categories,
            guidelines=schema.guidelines,
            no_overlap=schema.no_overlap,
        )
    except ModelError as exc:
        raise IngestError(f"{corpus_path}: {exc}") from exc


def _annotation_to_dict(a: SpanAnnotation) -> dict:
    out: dict[str, Any] = {"start": a.start, "end": a.end, "type": a.category}
    if a.reason is not None:
        out["reason"] = a.reason
    if a.surface is not None:
        out["text"] = a.surface
    return out


def _annotation_from_dict(obj: Any, where: str) -> SpanAnnotation:
    if not isinstance(obj, dict):
        raise IngestError(f"{where}: annotation is not an object")
    _require_keys(obj, {"start", "end", "type"}, {"reason", "text"}, where)
    try:
        return SpanAnnotation(
            start=obj["start"],
            end=obj["end"],
            category=obj["type"],
            reason=obj.get("reason"),
            surface=obj.get("text"),
        )
    except (ModelError, TypeError) as exc:
        raise IngestError(f"{where}: {exc}") from exc


def export_campaign(campaign: Campaign, path: str | Path) -> None:
    """Write one JSONL line per annotated example, sorted by id.

    Empty sets are written (annotated, nothing found); examples the
    annotator never reached are simply absent. Failed examples carry a
    "failed": true marker.
    """
    path = Path(path)
    failed = campaign.failed_ids()
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        for example_id in campaign.example_ids():
            record: dict[str, Any] = {
                "example_id": example_id,
                "annotator_id": campaign.annotator_id,
                "annotations": [
                    _annotation_to_dict(a) for a in campaign.sets[example_id]
                ],
            }
            if example_id in failed:
                record["failed"] = True
            handle.write(json.dumps(record, ensure_ascii=False) + "\n")


def load_campaign(path: str | Path, dataset: Dataset) -> Campaign:
    """Load a campaign JSONL file and validate it against the dataset."""
    path = Path(path)
    sets: dict[str, AnnotationSet] = {}
    traces: dict[str, Trace] = {}
    annotator_id = ""
    for lineno, row in _read_jsonl(path):
        if not isinstance(row, dict):
            raise ParseError(path, lineno, "campaign line is not an object")
        try:
            _require_keys(
                row, {"example_id", "annotator_id", "annotations"}, {"failed"}, "line"
            )
        except IngestError as exc:
            raise ParseError(path, lineno, str(exc)) from exc
        example_id = row["example_id"]
        if example_id in sets:
            raise DuplicateId(f"{path}:{lineno}: duplicate example {example_id!r}")
        if example_id not in dataset:
            raise DanglingExample(
                f"{path}:{lineno}: unknown example {example_id!r}"
            )
        if not annotator_id:
            annotator_id = row["annotator_id"]
        elif row["annotator_id"] != annotator_id:
            raise ParseError(
                path,
                lineno,
                f"mixed annotator ids: {row['annotator_id']!r} vs {annotator_id!r}",
            )
        text = dataset[example_id].text
        annotations = []
        for pos, obj in enumerate(row["annotations"]):
            try:
                ann = _annotation_from_dict(obj, f"annotation {pos}")
            except IngestError as exc:
                raise ParseError(path, lineno, str(exc)) from exc
            if ann.end > len(text):
                raise OffsetOutOfBounds(
                    f"{path}:{lineno}: span [{ann.start}, {ann.end}) exceeds "
                    f"text length {len(text)} of example {example_id!r}"
                )
            if ann.category >= dataset.k:
                raise DanglingCategory(
                    f"{path}:{lineno}: category {ann.category} out of range "
                    f"for k={dataset.k}"
                )
            annotations.append(ann)
        annotations.sort(key=lambda a: a.sort_key)
        if dataset.no_overlap:
            last_end = 0
            for ann in annotations:
                if ann.start < last_end:
                    raise ParseError(
                        path,
                        lineno,
                        f"overlapping annotations in a no-overlap task "
                        f"(example {example_id!r})",
                    )
                last_end = max(last_end, ann.end)
        sets[example_id] = AnnotationSet(example_id, tuple(annotations))
        if row.get("failed"):
            traces[example_id] = Trace(example_id=example_id, failed=True)
    campaign = Campaign(
        annotator_id=annotator_id or path.stem,
        dataset_ref=str(path),
        sets=sets,
        traces=traces,
    )
    validate_campaign(campaign, dataset)
    return campaign


def import_offset_tsv(
    path: str | Path, dataset: Dataset, annotator_id: str = "gold"
) -> Campaign:
    """Import tab-separated gold rows: article_id, technique, start, end.

    Offsets in the source files are already 0-based and end-exclusive,
    so no conversion is applied. Technique names map to category indices
    through the dataset's category names. Every dataset example gets a
    set; examples with no rows come out empty.
    """
    path = Path(path)
    spans: dict[str, list[SpanAnnotation]] = {ex.id: [] for ex in dataset.examples}
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) != 4:
                raise ParseError(path, lineno, f"expected 4 fields, got {len(fields)}")
            article_id, technique, start_str, end_str = fields
            if article_id not in dataset:
                raise DanglingExample(f"{path}:{lineno}: unknown article {article_id!r}")
            try:
                category = dataset.categories.by_name(technique)
            except ModelError as exc:
                raise UnknownTechnique(f"{path}:{lineno}: {exc}") from exc
            try:
                start, end = int(start_str), int(end_str)
            except ValueError as exc:
                raise ParseError(path, lineno, f"non-integer offsets: {exc}") from exc
            text = dataset[article_id].text
            if not (0 <= start < end <= len(text)):
                raise OffsetOutOfBounds(
                    f"{path}:{lineno}: span [{start}, {end}) invalid for text "
                    f"of length {len(text)}"
                )
            spans[article_id].append(SpanAnnotation(start, end, category.index))
    sets = {
        example_id: AnnotationSet(
            example_id, tuple(sorted(items, key=lambda a: a.sort_key))
        )
        for example_id, items in spans.items()
    }
    return Campaign(
        annotator_id=annotator_id, dataset_ref=str(path), sets=sets
    )
