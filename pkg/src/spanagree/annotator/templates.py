"""Prompt construction for LLM span annotation.

Each task has a fixed base prompt: task intro, the JSON output
instructions, the category list, the guideline block, and the fenced
input/output blocks. Variants modify it: noguide drops the guideline
block, noreason drops the reason-field request, cot and fiveshot append
an addendum after the base body.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from ..model import CategorySet, Example


class PromptVariant(str, Enum):
    BASE = "base"
    COT = "cot"
    FIVESHOT = "fiveshot"
    NOGUIDE = "noguide"
    NOREASON = "noreason"


class TemplateError(ValueError):
    pass


class MissingField(TemplateError):
    """The example lacks a field the template needs (e.g. no source)."""


class UnresolvedPlaceholder(TemplateError):
    """A placeholder survived rendering."""


@dataclass(frozen=True)
class FewshotExample:
    """One worked example for the few-shot addendum: the input data, the
    target text, and the expected annotations as a JSON string."""

    text: str
    annotations_json: str
    data: str | None = None


@dataclass(frozen=True)
class PromptTemplate:
    variant: PromptVariant
    body: str
    fewshot_examples: tuple[FewshotExample, ...] = ()


_PLACEHOLDER_RE = re.compile(r"\{(categories|guidelines|data|source|text|fewshot)\}")

_FIELD_LISTS = {
    True: '"reason", "text", and "annotation_type"',
    False: '"text" and "annotation_type"',
}
_REASON_SENTENCE = (
    'The value of "reason" is the short sentence justifying the annotation. '
)

_COT_ADDENDUM = (
    "Think about it step-by-step. You should enclose your chain of thoughts "
    "between the <think> and </think> tags. Once you are ready, output the "
    "JSON object in the required format.\n"
    "\n"
    "Example:\n"
    "```\n"
    "<think> ... chain of thoughts ... </think> { ... JSON object ... }\n"
    "```"
)

_INTROS = {
    "d2t": "Your task is to identify errors in the text and classify them.",
    "mt": "Your task is to identify errors in the translation and classify them.",
    "propaganda": "Your task is to identify spans of text that employ propaganda techniques.",
    "generic": "Your task is to identify relevant spans in the text and classify them.",
}

_TAILS = {
    "d2t": (
        "Given the data:\n```\n{data}\n```\n"
        "annotate the errors in the corresponding text generated from the data:\n"
        "```\n{text}\n```"
    ),
    "mt": (
        "Given the source:\n```\n{source}\n```\n"
        "annotate its translation:\n```\n{text}\n```"
    ),
    "propaganda": "Now annotate the following text:\n```\n{text}\n```",
    "generic": "Now annotate the following text:\n```\n{text}\n```",
}

# Label of the input block in few-shot examples, per task.
_INPUT_LABELS = {"d2t": "data", "mt": "source"}

_NUMBER_WORDS = {3: "three", 5: "five"}


def _schema_paragraph(include_reason: bool) -> str:
    return (
        'Output the errors as a JSON object with a single key "annotations". '
        'The value of "annotations" is a list in which each object contains '
        f"fields {_FIELD_LISTS[include_reason]}. "
        + (_REASON_SENTENCE if include_reason else "")
        + 'The value of "text" is the literal value of the identified span '
        "(we will later identify the span using string matching). The value "
        'of "annotation_type" is an integer index of the error based on the '
        "following list:"
    )


def _fewshot_block(task: str, examples: Sequence[FewshotExample]) -> str:
    count = _NUMBER_WORDS.get(len(examples), str(len(examples)))
    parts = [
        f"In order to help you with the task, we provide you with {count} "
        "examples of inputs, outputs and annotations:"
    ]
    label = _INPUT_LABELS.get(task)
    for pos, shot in enumerate(examples, start=1):
        section = [f"Example #{pos}:"]
        if label is not None:
            if shot.data is None:
                raise MissingField(f"few-shot example {pos} needs a {label!r} field")
            section.append(f"{label}:\n```\n{shot.data}\n```")
        section.append(f"text:\n```\n{shot.text}\n```")
        section.append(f"output:\n```\n{shot.annotations_json}\n```")
        parts.append("\n".join(section))
    return "\n\n".join(parts)


def build_template(
    task: str,
    variant: PromptVariant = PromptVariant.BASE,
    fewshot_examples: Sequence[FewshotExample] = (),
    n_fewshot: int = 5,
    has_guidelines: bool = True,
) -> PromptTemplate:
    """Assemble the prompt body for one task and variant.

    ``has_guidelines`` controls whether the body reserves a guideline
    block; tasks shipping empty guidelines (propaganda) never get one.
    """
    if task not in _INTROS:
        raise TemplateError(f"no prompt defined for task {task!r}")
    if variant is PromptVariant.FIVESHOT:
        if len(fewshot_examples) != n_fewshot:
            raise TemplateError(
                f"fiveshot needs exactly {n_fewshot} examples, "
                f"got {len(fewshot_examples)}"
            )
    elif fewshot_examples:
        raise TemplateError(f"variant {variant.value} takes no few-shot examples")

    parts = [_INTROS[task], _schema_paragraph(variant is not PromptVariant.NOREASON)]
    parts.append("{categories}")
    if has_guidelines and variant is not PromptVariant.NOGUIDE:
        parts.append("{guidelines}")
    parts.append(_TAILS[task])
    if variant is PromptVariant.COT:
        parts.append(_COT_ADDENDUM)
    elif variant is PromptVariant.FIVESHOT:
        parts.append("{fewshot}")
    body = "\n\n".join(parts)
    return PromptTemplate(variant, body, tuple(fewshot_examples))


def format_categories(categories: CategorySet) -> str:
    return "\n".join(
        f"{c.index}: {c.name} — {c.description}" for c in categories
    )


def render_prompt(
    template: PromptTemplate,
    example: Example,
    categories: CategorySet,
    guidelines: str = "",
) -> str:
    """Fill the template's placeholders for one example.

    Substitution is a single pass, so placeholder-like strings inside
    the example's own text are left untouched.
    """
    values = {
        "categories": format_categories(categories),
        "guidelines": guidelines,
        "text": example.text,
    }
    if "{data}" in template.body or "{source}" in template.body:
        if not example.source:
            raise MissingField(
                f"example {example.id!r} has no source but the {example.task} "
                "prompt requires one"
            )
        values["data"] = example.source
        values["source"] = example.source
    if "{fewshot}" in template.body:
        values["fewshot"] = _fewshot_block(example.task, template.fewshot_examples)

    unresolved: list[str] = []

    def _substitute(match: re.Match) -> str:
        name = match.group(1)
        if name not in values:
            unresolved.append(name)
            return match.group(0)
        return values[name]

    prompt = _PLACEHOLDER_RE.sub(_substitute, template.body)
    if unresolved:
        raise UnresolvedPlaceholder(f"unresolved placeholders: {sorted(set(unresolved))}")
    return prompt


def build_annotation_schema(include_reason: bool = True) -> dict:
    """JSON schema for constrained decoding.

    Key order matters: the reason field comes first so the explanation
    is generated before the span it justifies.
    """
    properties: dict[str, dict] = {}
    if include_reason:
        properties["reason"] = {"type": "string"}
    properties["text"] = {"type": "string"}
    properties["type"] = {"type": "integer"}
    return {
        "type": "object",
        "properties": {
            "annotations": {
                "type": "array",
                "items": {
                    "type": "object",
                    "properties": properties,
                    "required": list(properties),
                    "additionalProperties": False,
                },
            }
        },
        "required": ["annotations"],
        "additionalProperties": False,
    }


def fewshot_from_config(entries: Sequence[dict]) -> tuple[FewshotExample, ...]:
    """Build few-shot examples from config records: {text, annotations,
    data?}, where annotations is the expected output payload."""
    shots = []
    for pos, entry in enumerate(entries):
        if "text" not in entry or "annotations" not in entry:
            raise TemplateError(f"few-shot entry {pos} needs 'text' and 'annotations'")
        shots.append(
            FewshotExample(
                text=entry["text"],
                annotations_json=json.dumps(
                    {"annotations": entry["annotations"]}, ensure_ascii=False
                ),
                data=entry.get("data"),
            )
        )
    return tuple(shots)
