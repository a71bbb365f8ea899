"""Acceptance suite: one test per criterion, each printing a PASS line
with its runtime (run with -s to see them live)."""

from __future__ import annotations

import hashlib
import json
import os
import random
import string
import time

import pytest

from spanagree.cli import main
from spanagree.gamma import (
    DissimilarityConfig,
    GammaConfig,
    best_alignment,
    gamma_score,
    oracle_best_alignment,
)
from spanagree.grounding import RawAnnotation, ground_annotations
from spanagree.ingest import bundled_category_file, load_campaign, load_dataset
from spanagree.metrics import (
    MatchMode,
    aggregate,
    example_f1,
    example_precision,
    example_recall,
    pearson_counts,
    s_empty,
)
from spanagree.model import SpanAnnotation

from conftest import FIXTURES, as_set, make_campaign, make_dataset, random_spans, \
    write_bundled_categories


def S(start, end, category=0):
    return SpanAnnotation(start, end, category)


def _report(n: int, description: str, started: float, limit: float) -> None:
    elapsed = time.perf_counter() - started
    print(f"ACCEPTANCE {n}: PASS in {elapsed:.2f}s (limit {limit:.0f}s) - {description}")
    assert elapsed < limit, f"criterion {n} exceeded its {limit}s runtime limit"


def test_criterion_1_metric_identity_suite():
    started = time.perf_counter()
    rng = random.Random(1001)
    for _ in range(100):
        texts = {f"e{i}": "x" * rng.randint(30, 60) for i in range(3)}
        dataset = make_dataset(texts)
        sets = {}
        for i, eid in enumerate(sorted(texts)):
            n = i + 1  # counts 1, 2, 3: guaranteed variance for Pearson
            sets[eid] = as_set(eid, random_spans(rng, len(texts[eid]), n))
        campaign = make_campaign("self", sets)
        report = aggregate(dataset, campaign, campaign)
        assert report.precision_hard == 1.0 and report.precision_soft == 1.0
        assert report.recall_hard == 1.0 and report.recall_soft == 1.0
        assert report.f1_hard == 1.0 and report.f1_soft == 1.0
        assert report.gamma == 1.0
        assert report.pearson == pytest.approx(1.0, abs=1e-12)
    _report(1, "self-scored campaigns are perfect on every metric", started, 5.0)


def test_criterion_2_hand_computed_fixtures():
    started = time.perf_counter()
    tol = 1e-12
    assert example_precision([S(0, 10, 0)], [S(5, 15, 0)], MatchMode.HARD) == pytest.approx(0.5, abs=tol)
    assert example_precision([S(0, 10, 0)], [S(5, 15, 1)], MatchMode.HARD) == pytest.approx(0.0, abs=tol)
    assert example_precision([S(0, 10, 0)], [S(5, 15, 1)], MatchMode.SOFT) == pytest.approx(0.5, abs=tol)
    assert pearson_counts([1, 2, 3, 4], [1, 3, 2, 4]) == pytest.approx(0.8, abs=tol)
    assert s_empty([S(0, 1), S(2, 3), S(4, 5)], []) == pytest.approx(0.25, abs=tol)
    assert s_empty([], [S(0, 10, 0)]) == pytest.approx(0.5, abs=tol)
    _report(2, "derived metric fixtures reproduce to 1e-12", started, 1.0)


def test_criterion_3_soft_dominance_fuzz():
    started = time.perf_counter()
    rng = random.Random(3003)
    for _ in range(1000):
        text_len = rng.randint(10, 80)
        cand = random_spans(rng, text_len, rng.randint(1, 6))
        ref = random_spans(rng, text_len, rng.randint(1, 6))
        values = {}
        for mode in (MatchMode.HARD, MatchMode.SOFT):
            p = example_precision(cand, ref, mode)
            r = example_recall(cand, ref, mode)
            f = example_f1(cand, ref, mode)
            for v in (p, r, f):
                assert 0.0 <= v <= 1.0
            values[mode] = (p, r, f)
        assert values[MatchMode.SOFT][2] >= values[MatchMode.HARD][2]
    _report(3, "soft F1 dominates hard F1 on 1000 random pairs", started, 10.0)


def test_criterion_4_alignment_oracle_equivalence():
    started = time.perf_counter()
    cfg = DissimilarityConfig()
    # the two hand-enumerable 1x1 cases
    match = best_alignment([S(0, 10, 0)], [S(0, 10, 1)], cfg)
    assert match.pairs == ((0, 0),) and match.disorder == pytest.approx(1.0, abs=1e-12)
    nomatch = best_alignment([S(0, 10, 0)], [S(50, 60, 0)], cfg)
    assert nomatch.pairs == () and nomatch.disorder == pytest.approx(2.0, abs=1e-12)

    rng = random.Random(4004)
    for _ in range(200):
        text_len = rng.randint(10, 100)
        left = random_spans(rng, text_len, rng.randint(1, 4))
        right = random_spans(rng, text_len, rng.randint(1, 4))
        fast = best_alignment(left, right, cfg)
        slow = oracle_best_alignment(left, right, cfg)
        assert abs(fast.disorder - slow.disorder) <= 1e-9
    _report(4, "solver cost equals exhaustive oracle on 200 instances", started, 30.0)


def test_criterion_5_gamma_properties():
    started = time.perf_counter()
    rng = random.Random(5005)
    cfg = GammaConfig()

    # gamma == 1 iff the (start, end, category) multisets coincide
    for trial in range(500):
        text_len = rng.randint(20, 80)
        left = random_spans(rng, text_len, rng.randint(1, 5))
        if trial % 2 == 0:
            right = [SpanAnnotation(s.start, s.end, s.category, reason="copy") for s in left]
            rng.shuffle(right)
        else:
            right = random_spans(rng, text_len, rng.randint(1, 5))
        key = lambda spans: sorted((s.start, s.end, s.category) for s in spans)
        identical = key(left) == key(right)
        value = gamma_score(left, right, text_len, cfg, example_id=f"t{trial}")
        assert value is not None
        assert (value == 1.0) == identical

    # invariance under joint rescaling of (alpha, beta, delta_empty)
    for t in (0.5, 2.0, 10.0):
        scaled = GammaConfig(
            dissimilarity=DissimilarityConfig(alpha=t, beta=t, delta_empty=t)
        )
        for trial in range(25):
            text_len = rng.randint(20, 80)
            left = random_spans(rng, text_len, rng.randint(1, 4))
            right = random_spans(rng, text_len, rng.randint(1, 4))
            base_value = gamma_score(left, right, text_len, cfg, "r")
            scaled_value = gamma_score(left, right, text_len, scaled, "r")
            assert scaled_value == pytest.approx(base_value, abs=1e-9)

    # empty sides are skip signals, not scores
    assert gamma_score([], [S(0, 10, 0)], 50, cfg) is None
    assert gamma_score([S(0, 10, 0)], [], 50, cfg) is None
    assert gamma_score([], [], 50, cfg) is None
    _report(5, "gamma == 1 iff identical; weight-rescale invariant; empties skip", started, 60.0)


def test_criterion_6_grounding_round_trip():
    started = time.perf_counter()
    # the repeated-surface case
    spans, _ = ground_annotations(
        [RawAnnotation("", "cat", 0), RawAnnotation("", "cat", 0)],
        "the cat sat on the cat",
    )
    assert [(s.start, s.end) for s in spans] == [(4, 7), (19, 22)]

    rng = random.Random(6006)
    alphabet = string.ascii_lowercase + string.digits + " "
    recovered = 0
    total = 0
    for _ in range(500):
        text = "".join(rng.choice(alphabet) for _ in range(rng.randint(40, 120)))
        chosen: list[tuple[int, int]] = []
        surfaces: set[str] = set()
        for _ in range(rng.randint(1, 5)):
            length = rng.randint(4, 12)
            start = rng.randint(0, len(text) - length)
            surface = text[start : start + length]
            if text.count(surface) != 1 or surface in surfaces:
                continue
            surfaces.add(surface)
            chosen.append((start, start + length))
        chosen.sort()
        raws = [RawAnnotation("", text[s:e], 0) for s, e in chosen]
        spans, report = ground_annotations(raws, text)
        total += len(chosen)
        assert report.dropped == 0
        assert [(s.start, s.end) for s in spans] == chosen
        recovered += len(spans)
    assert recovered == total
    _report(6, f"{recovered}/{total} unique-surface offsets recovered", started, 5.0)


def test_criterion_7_hermetic_end_to_end(tmp_path, capsys):
    started = time.perf_counter()
    categories = write_bundled_categories(tmp_path, "d2t")
    out = tmp_path / "out"
    cache = tmp_path / "cache.jsonl"
    config = {
        "corpus": str(FIXTURES / "corpus10.jsonl"),
        "categories": str(categories),
        "campaigns": {
            "gold": str(FIXTURES / "gold10.jsonl"),
            "llm": str(out / "campaign.jsonl"),
        },
        "output_dir": str(out),
        "cache": str(cache),
        "annotator": {
            "annotator_id": "mock-base",
            "model_id": "mock-model",
            "provider": {"kind": "mock", "replies": str(FIXTURES / "replies10.jsonl")},
            "concurrency": 3,
        },
        "metrics": {"gamma": {"n_samples": 30, "seed": 42}},
    }
    config_path = tmp_path / "run.json"
    config_path.write_text(json.dumps(config, indent=2))

    tracked = ["campaign.jsonl", "traces.jsonl", "report.json", "summary.csv"]

    def run() -> dict[str, str]:
        assert main(["annotate", "--config", str(config_path)]) == 0
        assert main(["evaluate", "--config", str(config_path), "gold", "llm"]) == 0
        return {
            name: hashlib.sha256((out / name).read_bytes()).hexdigest()
            for name in tracked
        }

    first = run()
    resumed = run()  # warm cache: only the failed example re-runs
    for name in tracked:
        assert first[name] == resumed[name], f"{name} changed across resumed runs"

    cache.unlink()
    for name in tracked:
        (out / name).unlink()
    fresh = run()
    for name in tracked:
        assert first[name] == fresh[name], f"{name} changed across fresh runs"

    # the malformed-3x example is flagged failed and excluded from pools
    campaign_lines = {
        json.loads(line)["example_id"]: json.loads(line)
        for line in (out / "campaign.jsonl").read_text().splitlines()
    }
    assert campaign_lines["ex03"].get("failed") is True
    assert campaign_lines["ex03"]["annotations"] == []
    assert "failed" not in campaign_lines["ex04"]  # genuine empty answer
    report = json.loads((out / "report.json").read_text())
    assert report["counts"]["failed"] == 1
    assert report["counts"]["examples"] == 10
    row = next(r for r in report["examples"] if r["example_id"] == "ex03")
    assert row["status"] == "failed"
    assert row["f1_hard"] is None and row["s_empty"] is None
    capsys.readouterr()
    _report(7, "mock end-to-end run is byte-identical and excludes failures", started, 10.0)


def test_criterion_8_bundled_category_conformance():
    started = time.perf_counter()
    for task, k in (("d2t", 6), ("mt", 2), ("propaganda", 18)):
        schema = bundled_category_file(task)
        assert schema.categories.k == k
        assert schema.task == task
    _report(8, "bundled category files load with k = 6, 2, 18", started, 5.0)


RELEASED_DATA = os.environ.get("SPANAGREE_RELEASED_DATA", "")


@pytest.mark.skipif(
    not RELEASED_DATA,
    reason="needs the released annotation dataset; set SPANAGREE_RELEASED_DATA to "
    "a directory with corpus.jsonl, categories.json, gold_dev.jsonl and "
    "llama33_base.jsonl (converted to the interchange format; see README)",
)
def test_criterion_9_released_data_reproduction():
    started = time.perf_counter()
    root = RELEASED_DATA
    dataset = load_dataset(f"{root}/corpus.jsonl", f"{root}/categories.json")
    gold = load_campaign(f"{root}/gold_dev.jsonl", dataset)
    llama = load_campaign(f"{root}/llama33_base.jsonl", dataset)
    report = aggregate(dataset, gold, llama)
    assert report.f1_hard == pytest.approx(0.20, abs=0.02)
    # our expected-disorder sampler is a documented stand-in, so the
    # alignment score is only checked for sign
    assert report.gamma is not None and report.gamma > 0.0
    _report(9, "released dev-set rescoring reproduces the reported F1", started, 600.0)
