"""Score-report serialization: JSON keeps full float precision for
programmatic use, CSV tables render 3 decimals for reading."""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Any

from .metrics import CampaignStats, ConfusionMatrix, ScoreReport
from .model import CategorySet

SUMMARY_COLUMNS = [
    "candidate",
    "reference",
    "pearson",
    "precision_hard",
    "precision_soft",
    "recall_hard",
    "recall_soft",
    "f1_hard",
    "f1_soft",
    "f1_delta",
    "gamma",
    "s_empty",
]

PER_EXAMPLE_COLUMNS = [
    "example_id",
    "status",
    "n_reference",
    "n_candidate",
    "precision_hard",
    "recall_hard",
    "f1_hard",
    "precision_soft",
    "recall_soft",
    "f1_soft",
    "s_empty",
    "gamma",
]


def fmt3(value: float | None) -> str:
    return "" if value is None else f"{value:.3f}"


def report_to_dict(
    report: ScoreReport,
    confusion: ConfusionMatrix | None = None,
    categories: CategorySet | None = None,
    meta: dict[str, Any] | None = None,
) -> dict:
    """Full-precision payload with everything needed to reproduce it."""
    payload: dict[str, Any] = {
        "tool": {"name": "spanagree", "version": _version()},
        **(meta or {}),
        "reference": report.reference_id,
        "candidate": report.candidate_id,
        "gamma_config": {
            "alpha": report.gamma_config.dissimilarity.alpha,
            "beta": report.gamma_config.dissimilarity.beta,
            "delta_empty": report.gamma_config.dissimilarity.delta_empty,
            "n_samples": report.gamma_config.n_samples,
            "seed": report.gamma_config.seed,
        },
        "counts": {
            "examples": report.n_examples,
            "scored": report.n_scored,
            "empty_scored": report.n_empty_scored,
            "failed": report.n_failed,
            "gamma_scored": report.n_gamma_scored,
            "gamma_skipped": report.n_gamma_skipped,
        },
        "metrics": {
            "pearson": report.pearson,
            "precision_hard": report.precision_hard,
            "precision_soft": report.precision_soft,
            "recall_hard": report.recall_hard,
            "recall_soft": report.recall_soft,
            "f1_hard": report.f1_hard,
            "f1_soft": report.f1_soft,
            "f1_delta": report.f1_delta,
            "gamma": report.gamma,
            "s_empty": report.s_empty,
        },
        "examples": [
            {
                "example_id": row.example_id,
                "status": row.status,
                "n_reference": row.n_reference,
                "n_candidate": row.n_candidate,
                "precision_hard": row.precision_hard,
                "recall_hard": row.recall_hard,
                "f1_hard": row.f1_hard,
                "precision_soft": row.precision_soft,
                "recall_soft": row.recall_soft,
                "f1_soft": row.f1_soft,
                "s_empty": row.s_empty,
                "gamma": row.gamma,
            }
            for row in report.examples
        ],
    }
    if confusion is not None:
        payload["confusion"] = {
            "categories": [c.name for c in categories] if categories else None,
            "counts": confusion.counts.tolist(),
            "row_normalized": confusion.normalized().tolist(),
        }
    return payload


def _version() -> str:
    from . import __version__

    return __version__


def write_report_json(path: str | Path, payload: dict) -> None:
    Path(path).write_text(
        json.dumps(payload, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )


def write_summary_csv(path: str | Path, report: ScoreReport) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(SUMMARY_COLUMNS)
        writer.writerow(
            [
                report.candidate_id,
                report.reference_id,
                fmt3(report.pearson),
                fmt3(report.precision_hard),
                fmt3(report.precision_soft),
                fmt3(report.recall_hard),
                fmt3(report.recall_soft),
                fmt3(report.f1_hard),
                fmt3(report.f1_soft),
                fmt3(report.f1_delta),
                fmt3(report.gamma),
                fmt3(report.s_empty),
            ]
        )


def write_per_example_csv(path: str | Path, report: ScoreReport) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(PER_EXAMPLE_COLUMNS)
        for row in report.examples:
            writer.writerow(
                [
                    row.example_id,
                    row.status,
                    row.n_reference,
                    row.n_candidate,
                    fmt3(row.precision_hard),
                    fmt3(row.recall_hard),
                    fmt3(row.f1_hard),
                    fmt3(row.precision_soft),
                    fmt3(row.recall_soft),
                    fmt3(row.f1_soft),
                    fmt3(row.s_empty),
                    fmt3(row.gamma),
                ]
            )


def write_confusion_csv(
    path: str | Path, confusion: ConfusionMatrix, categories: CategorySet
) -> None:
    names = [c.name for c in categories]
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["reference\\candidate", *names])
        for i, name in enumerate(names):
            writer.writerow([name, *confusion.counts[i].tolist()])


def stats_lines(annotator_id: str, stats: CampaignStats) -> list[str]:
    """Human-readable stats block used by the CLI."""
    chars = "" if stats.chars_per_annotation is None else f"{stats.chars_per_annotation:.3f}"
    lines = [
        f"annotator: {annotator_id}",
        f"Ann: {stats.annotations}",
        f"Ann/Ex: {stats.annotations_per_example:.3f}",
        f"w/o%: {stats.pct_examples_empty:.3f}",
        f"Char/Ann: {chars}",
    ]
    if stats.n_failed:
        lines.append(f"failed examples: {stats.n_failed}")
    return lines
