"""Turn raw LLM output into grounded span annotations.

The pipeline is: strip reasoning markup, pull out the last valid JSON
object, validate the payload fields, then locate each emitted surface
string inside the target text. Surfaces that cannot be located are
dropped and reported; wrong offsets are worse than missing spans.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Any

from .model import SpanAnnotation

_THINK_RE = re.compile(r"<think>.*?</think>", re.DOTALL)

# Drop reason codes used in GroundingReport.notes.
NOTE_UNMATCHED = "unmatched-surface"
NOTE_BAD_CATEGORY = "bad-category"
NOTE_MALFORMED = "malformed-item"
NOTE_CASE_FALLBACK = "case-insensitive-match"


class GroundingError(ValueError):
    pass


class NoJsonFound(GroundingError):
    """No balanced, parseable top-level JSON object in the model output."""


class MissingAnnotationsKey(GroundingError):
    """The payload object has no "annotations" key."""


class NotAList(GroundingError):
    """The "annotations" value is not a list."""


@dataclass(frozen=True)
class RawAnnotation:
    """One annotation exactly as the model emitted it, before grounding."""

    reason: str
    text: str
    type: int


@dataclass
class GroundingReport:
    """Bookkeeping for one grounding pass; counts always add up to the
    number of raw items processed."""

    grounded: int = 0
    dropped_unmatched: int = 0
    dropped_bad_category: int = 0
    dropped_malformed: int = 0
    notes: list[tuple[str, str, str]] = field(default_factory=list)

    @property
    def dropped(self) -> int:
        return self.dropped_unmatched + self.dropped_bad_category + self.dropped_malformed

    def note(self, example_id: str, surface: str, code: str) -> None:
        self.notes.append((example_id, surface, code))

    def merge(self, other: "GroundingReport") -> None:
        self.grounded += other.grounded
        self.dropped_unmatched += other.dropped_unmatched
        self.dropped_bad_category += other.dropped_bad_category
        self.dropped_malformed += other.dropped_malformed
        self.notes.extend(other.notes)


def strip_reasoning_markup(raw: str) -> str:
    """Remove every balanced ``<think>...</think>`` region.

    Each opening tag pairs with the next closing tag; text outside the
    removed regions is preserved verbatim, so an unpaired trailing tag
    stays in place.
    """
    return _THINK_RE.sub("", raw)


def split_reasoning(raw: str) -> tuple[str, str]:
    """Like strip_reasoning_markup, but also return the removed reasoning
    text (tag contents concatenated with newlines)."""
    parts = [m.group(0)[len("<think>"):-len("</think>")] for m in _THINK_RE.finditer(raw)]
    return _THINK_RE.sub("", raw), "\n".join(parts)


def _scan_balanced(text: str, start: int) -> int | None:
    """Return the end offset (exclusive) of the brace-balanced region
    opening at ``text[start] == '{'``, or None if it never closes.
    Braces inside JSON strings are ignored, including escaped quotes."""
    depth = 0
    in_string = False
    escaped = False
    for i in range(start, len(text)):
        ch = text[i]
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
        elif ch == '"':
            in_string = True
        elif ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
            if depth == 0:
                return i + 1
    return None


def extract_last_json_object(text: str) -> Any:
    """Return the last substring of ``text`` that parses as a complete
    top-level JSON object.

    Scanning is brace-balance- and string-escape-aware, so braces inside
    string values do not terminate a candidate. Candidates that fail to
    parse are skipped (their interior is still searched). Raises
    NoJsonFound if nothing parses.
    """
    last: Any = None
    found = False
    i = 0
    while i < len(text):
        if text[i] == "{":
            end = _scan_balanced(text, i)
            if end is not None:
                try:
                    last = json.loads(text[i:end])
                except json.JSONDecodeError:
                    pass
                else:
                    found = True
                    i = end
                    continue
        i += 1
    if not found:
        raise NoJsonFound("no parseable top-level JSON object in model output")
    return last


def parse_annotation_payload(
    payload: Any,
    k: int,
    example_id: str = "",
) -> tuple[list[RawAnnotation], GroundingReport]:
    """Validate the ``{"annotations": [...]}`` payload into RawAnnotations.

    Items need a string ``text``, an integer ``type`` in [0, k) (the key
    ``annotation_type`` is accepted as an alias, matching the prompt
    wording), and optionally a string ``reason`` (missing means empty,
    which is the normal case for no-reason prompt runs). Anything else
    is dropped and counted.
    """
    report = GroundingReport()
    if not isinstance(payload, dict):
        raise MissingAnnotationsKey(f"payload is {type(payload).__name__}, not an object")
    if "annotations" not in payload:
        raise MissingAnnotationsKey('payload has no "annotations" key')
    items = payload["annotations"]
    if not isinstance(items, list):
        raise NotAList(f'"annotations" is {type(items).__name__}, not a list')

    raws: list[RawAnnotation] = []
    for item in items:
        if not isinstance(item, dict):
            report.dropped_malformed += 1
            report.note(example_id, "", NOTE_MALFORMED)
            continue
        surface = item.get("text")
        category = item.get("type", item.get("annotation_type"))
        reason = item.get("reason", "")
        if (
            not isinstance(surface, str)
            or not surface
            or not isinstance(reason, str)
            or isinstance(category, bool)
            or not isinstance(category, int)
        ):
            report.dropped_malformed += 1
            report.note(example_id, str(surface or ""), NOTE_MALFORMED)
            continue
        if not 0 <= category < k:
            report.dropped_bad_category += 1
            report.note(example_id, surface, NOTE_BAD_CATEGORY)
            continue
        raws.append(RawAnnotation(reason=reason, text=surface, type=category))
    return raws, report


def _find_case_insensitive(text: str, surface: str) -> int:
    # Only safe when lowercasing is length-preserving on both sides;
    # otherwise offsets would drift, and dropping beats wrong offsets.
    lowered = text.lower()
    lowered_surface = surface.lower()
    if len(lowered) != len(text) or len(lowered_surface) != len(surface):
        return -1
    return lowered.find(lowered_surface)


def ground_annotations(
    raws: list[RawAnnotation],
    text: str,
    example_id: str = "",
) -> tuple[list[SpanAnnotation], GroundingReport]:
    """Locate each emitted surface in ``text`` by exact string matching.

    A cursor follows the model's emission order: each surface is first
    searched at or after the cursor, then from the start of the text,
    then case-insensitively; on success the cursor moves to match start
    + 1. Surfaces that never match are dropped and reported.
    """
    report = GroundingReport()
    spans: list[SpanAnnotation] = []
    cursor = 0
    for raw in raws:
        exact = True
        idx = text.find(raw.text, cursor)
        if idx < 0:
            idx = text.find(raw.text)
        if idx < 0:
            exact = False
            idx = _find_case_insensitive(text, raw.text)
        if idx < 0:
            report.dropped_unmatched += 1
            report.note(example_id, raw.text, NOTE_UNMATCHED)
            continue
        if not exact:
            report.note(example_id, raw.text, NOTE_CASE_FALLBACK)
        spans.append(
            SpanAnnotation(
                start=idx,
                end=idx + len(raw.text),
                category=raw.type,
                reason=raw.reason or None,
                surface=raw.text,
            )
        )
        report.grounded += 1
        cursor = idx + 1
    return spans, report
