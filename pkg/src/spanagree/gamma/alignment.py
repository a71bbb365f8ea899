"""Alignment-based chance-corrected agreement between two annotation sets.

The score builds the cheapest alignment between the sets (a min-cost
matching where every unit may also stay unaligned at a fixed penalty),
divides its cost by the average unit count to get the observed
disorder, and normalizes by the expected disorder of randomly
repositioned annotations. 1 means perfect agreement; the score is
unbounded below.
"""

from __future__ import annotations

import hashlib
import logging
import random
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from ..model import SpanAnnotation
from .dissimilarity import DissimilarityConfig, pair_cost_matrix, unit_dissimilarity
from .solver import solve_assignment

logger = logging.getLogger(__name__)

# Candidate-acceptance slack when reconstructing the optimal alignment
# structure; ties in practice are exact, this only absorbs fp noise.
_COST_RTOL = 1e-9

ORACLE_LIMIT = 6


class EmptySide(ValueError):
    """Alignment requires both annotation sets to be non-empty."""


class TooLarge(ValueError):
    """The exhaustive oracle only handles tiny instances."""


class DegenerateText(ValueError):
    """A span is longer than the text it should be repositioned in."""


@dataclass(frozen=True)
class GammaConfig:
    """Settings for the chance-corrected score: dissimilarity weights
    plus the resampling budget and seed for expected disorder."""

    dissimilarity: DissimilarityConfig = field(default_factory=DissimilarityConfig)
    n_samples: int = 30
    seed: int = 42

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("n_samples must be at least 1")


@dataclass(frozen=True)
class Alignment:
    """A best alignment: matched index pairs, leftover units per side,
    and the total cost of the structure (pair costs plus one
    delta_empty penalty per unaligned unit)."""

    pairs: tuple[tuple[int, int], ...]
    unaligned_left: tuple[int, ...]
    unaligned_right: tuple[int, ...]
    disorder: float


def recompute_cost(
    alignment: Alignment,
    left: Sequence[SpanAnnotation],
    right: Sequence[SpanAnnotation],
    cfg: DissimilarityConfig,
) -> float:
    """Cost of an alignment's structure, recomputed from scratch."""
    total = 0.0
    for i, j in alignment.pairs:
        total += unit_dissimilarity(left[i], right[j], cfg)
    total += cfg.delta_empty * (len(alignment.unaligned_left) + len(alignment.unaligned_right))
    return total


def _build_alignment(
    pairs: Sequence[tuple[int, int]],
    unaligned_left: Sequence[int],
    unaligned_right: Sequence[int],
    left: Sequence[SpanAnnotation],
    right: Sequence[SpanAnnotation],
    cfg: DissimilarityConfig,
) -> Alignment:
    alignment = Alignment(
        tuple(sorted(pairs)), tuple(unaligned_left), tuple(unaligned_right), 0.0
    )
    return Alignment(
        alignment.pairs,
        alignment.unaligned_left,
        alignment.unaligned_right,
        recompute_cost(alignment, left, right, cfg),
    )


def _padded_matrix(pair: np.ndarray, penalty: float) -> np.ndarray:
    """Square matrix for the matching: real pairs top-left, one dummy
    partner per unit at ``penalty``, dummy-dummy free.

    Pair costs above 2 * penalty can never be chosen over leaving both
    units unaligned, so they are clamped to keep the matrix well
    conditioned; the optimum is unchanged.
    """
    n, m = pair.shape
    size = n + m
    big = penalty * size + 1.0
    mat = np.full((size, size), big, dtype=np.float64)
    mat[:n, :m] = np.minimum(pair, 2.0 * penalty + 1.0)
    for i in range(n):
        mat[i, m + i] = penalty
    for j in range(m):
        mat[n + j, j] = penalty
    mat[n:, m:] = 0.0
    return mat


def _matching(pair: np.ndarray, penalty: float) -> tuple[float, list[tuple[int, int]]]:
    """Optimal partial matching cost and its matched pairs."""
    n, m = pair.shape
    if n == 0 or m == 0:
        return penalty * (n + m), []
    cols, total = solve_assignment(_padded_matrix(pair, penalty))
    pairs = sorted((i, cols[i]) for i in range(n) if cols[i] < m)
    return total, pairs


def _matching_cost(pair: np.ndarray, penalty: float) -> float:
    return _matching(pair, penalty)[0]


def _as_units(annotations: Iterable[SpanAnnotation]) -> tuple[SpanAnnotation, ...]:
    return tuple(annotations)


def alignment_cost(
    left: Iterable[SpanAnnotation],
    right: Iterable[SpanAnnotation],
    cfg: DissimilarityConfig,
) -> float:
    """Cost of the best alignment, without materializing its structure."""
    a, b = _as_units(left), _as_units(right)
    if not a or not b:
        raise EmptySide("both annotation sets must be non-empty")
    return _matching_cost(pair_cost_matrix(a, b, cfg), cfg.delta_empty)


def best_alignment(
    left: Iterable[SpanAnnotation],
    right: Iterable[SpanAnnotation],
    cfg: DissimilarityConfig,
) -> Alignment:
    """Minimum-cost alignment between two non-empty annotation sets.

    Among cost ties the lexicographically smallest sorted pair-index
    list is returned (with "no further pairs" ordered before any pair),
    which makes the structure deterministic and input-order independent.
    """
    a, b = _as_units(left), _as_units(right)
    if not a or not b:
        raise EmptySide("both annotation sets must be non-empty")
    pair = pair_cost_matrix(a, b, cfg)
    penalty = cfg.delta_empty
    c_star = _matching_cost(pair, penalty)
    tol = _COST_RTOL * max(1.0, abs(c_star))

    rows = list(range(len(a)))
    cols = list(range(len(b)))
    chosen: list[tuple[int, int]] = []
    fixed = 0.0
    while True:
        # Leaving everything that remains unaligned is the lexicographic
        # minimum whenever it is still optimal.
        if fixed + penalty * (len(rows) + len(cols)) <= c_star + tol:
            break
        found = None
        for i in rows:
            for j in cols:
                rest = _matching_cost(
                    pair[np.ix_([r for r in rows if r != i], [c for c in cols if c != j])],
                    penalty,
                )
                if fixed + pair[i, j] + rest <= c_star + tol:
                    found = (i, j)
                    break
            if found:
                break
        if found is None:
            # fp safety net: adopt the solver's matching on the remainder
            _, sub_pairs = _matching(pair[np.ix_(rows, cols)], penalty)
            chosen.extend((rows[si], cols[sj]) for si, sj in sub_pairs)
            matched_l = {i for i, _ in chosen}
            matched_r = {j for _, j in chosen}
            rows = [r for r in rows if r not in matched_l]
            cols = [c for c in cols if c not in matched_r]
            break
        chosen.append(found)
        rows.remove(found[0])
        cols.remove(found[1])
        fixed += pair[found[0], found[1]]

    return _build_alignment(chosen, rows, cols, a, b, cfg)


def oracle_best_alignment(
    left: Iterable[SpanAnnotation],
    right: Iterable[SpanAnnotation],
    cfg: DissimilarityConfig,
) -> Alignment:
    """Exhaustive-enumeration reference for best_alignment.

    Enumerates every partial injective pairing (at most 6 units per
    side), applying the same objective and tie rule.
    """
    a, b = _as_units(left), _as_units(right)
    if not a or not b:
        raise EmptySide("both annotation sets must be non-empty")
    if len(a) > ORACLE_LIMIT or len(b) > ORACLE_LIMIT:
        raise TooLarge(f"oracle handles at most {ORACLE_LIMIT} annotations per side")

    pair = pair_cost_matrix(a, b, cfg)
    penalty = cfg.delta_empty
    n, m = len(a), len(b)

    best_cost = [float("inf")]
    best_pairs: list[tuple[tuple[int, int], ...]] = [()]
    used = [False] * m
    stack: list[tuple[int, int]] = []

    def visit(i: int, cost: float) -> None:
        if i == n:
            total = cost + penalty * (m - sum(used))
            if best_cost[0] == float("inf"):
                best_cost[0] = total
                best_pairs[0] = tuple(stack)
                return
            tol = _COST_RTOL * max(1.0, abs(best_cost[0]))
            if total < best_cost[0] - tol or (
                abs(total - best_cost[0]) <= tol and tuple(stack) < best_pairs[0]
            ):
                best_cost[0] = total
                best_pairs[0] = tuple(stack)
            return
        visit(i + 1, cost + penalty)
        for j in range(m):
            if not used[j]:
                used[j] = True
                stack.append((i, j))
                visit(i + 1, cost + pair[i, j])
                stack.pop()
                used[j] = False

    visit(0, 0.0)
    pairs = best_pairs[0]
    matched_l = {i for i, _ in pairs}
    matched_r = {j for _, j in pairs}
    return _build_alignment(
        pairs,
        [i for i in range(n) if i not in matched_l],
        [j for j in range(m) if j not in matched_r],
        a,
        b,
        cfg,
    )


def observed_disorder(
    left: Iterable[SpanAnnotation],
    right: Iterable[SpanAnnotation],
    cfg: DissimilarityConfig,
) -> float:
    """Best-alignment cost divided by the average unit count."""
    a, b = _as_units(left), _as_units(right)
    if not a or not b:
        raise EmptySide("both annotation sets must be non-empty")
    return alignment_cost(a, b, cfg) / ((len(a) + len(b)) / 2.0)


def _child_rng(seed: int, example_id: str) -> random.Random:
    digest = hashlib.sha256(f"{seed}:{example_id}".encode("utf-8")).digest()
    return random.Random(int.from_bytes(digest[:16], "big"))


def _resample(
    units: tuple[SpanAnnotation, ...], text_length: int, rng: random.Random
) -> tuple[SpanAnnotation, ...]:
    """Random repositioning that keeps the side's span-length multiset
    and category multiset: categories are shuffled over the units, each
    start is redrawn uniformly over the positions where the span fits."""
    categories = [u.category for u in units]
    rng.shuffle(categories)
    out = []
    for u, category in zip(units, categories):
        length = len(u)
        hi = text_length - length
        if hi < 0:
            raise DegenerateText(
                f"span of length {length} cannot fit in text of length {text_length}"
            )
        start = rng.randint(0, hi)
        out.append(SpanAnnotation(start, start + length, category))
    return tuple(out)


def expected_disorder(
    left: Iterable[SpanAnnotation],
    right: Iterable[SpanAnnotation],
    text_length: int,
    cfg: GammaConfig,
    example_id: str = "",
) -> float:
    """Mean disorder over seeded random repositionings of both sides.

    Deterministic given (inputs, cfg.seed, example_id); each example
    gets an independent child generator so parallel scoring order never
    changes results.
    """
    a, b = _as_units(left), _as_units(right)
    if not a or not b:
        raise EmptySide("both annotation sets must be non-empty")
    if text_length <= 0:
        raise DegenerateText("text_length must be positive")
    rng = _child_rng(cfg.seed, example_id)
    avg_count = (len(a) + len(b)) / 2.0
    total = 0.0
    for _ in range(cfg.n_samples):
        sample_a = _resample(a, text_length, rng)
        sample_b = _resample(b, text_length, rng)
        total += alignment_cost(sample_a, sample_b, cfg.dissimilarity) / avg_count
    return total / cfg.n_samples


def gamma_score(
    left: Iterable[SpanAnnotation],
    right: Iterable[SpanAnnotation],
    text_length: int,
    cfg: GammaConfig | None = None,
    example_id: str = "",
) -> float | None:
    """Chance-corrected agreement: 1 - observed/expected disorder.

    Returns None (skip) when either side is empty, since the score is
    undefined there, or in the degenerate case where the expected
    disorder is zero while the observed is not. Identical sets score
    exactly 1.0.
    """
    cfg = cfg or GammaConfig()
    a, b = _as_units(left), _as_units(right)
    if not a or not b:
        return None
    obs = observed_disorder(a, b, cfg.dissimilarity)
    if obs == 0.0:
        return 1.0
    exp = expected_disorder(a, b, text_length, cfg, example_id)
    if exp <= 0.0:
        logger.warning(
            "zero expected disorder for example %r; skipping gamma", example_id
        )
        return None
    return 1.0 - obs / exp
