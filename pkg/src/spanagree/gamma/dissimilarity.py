"""Dissimilarity between annotation units for alignment-based agreement.

A pair of units is compared on position (squared normalized offset
distance) and category (binary). The combined cost uses alpha/beta as
*relative* weights, normalized so that the default alpha = beta = 1 is
the identity and jointly rescaling (alpha, beta, delta_empty) rescales
every cost, including the unaligned-unit penalty, by the same factor.
That keeps the chance-corrected score invariant under rescaling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..model import SpanAnnotation


@dataclass(frozen=True)
class DissimilarityConfig:
    """Weights for the combined unit dissimilarity.

    ``delta_empty`` is both the overall cost scale and the penalty paid
    for every unit left out of the alignment.
    """

    alpha: float = 1.0
    beta: float = 1.0
    delta_empty: float = 1.0

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0 or self.delta_empty < 0:
            raise ValueError("dissimilarity weights must be non-negative")
        if self.alpha + self.beta <= 0:
            raise ValueError("alpha + beta must be positive")


def positional_dissimilarity(
    u: SpanAnnotation, v: SpanAnnotation, cfg: DissimilarityConfig
) -> float:
    """Squared offset distance normalized by the combined span length."""
    d = (abs(u.start - v.start) + abs(u.end - v.end)) / (len(u) + len(v))
    return cfg.delta_empty * (d * d)


def categorical_dissimilarity(
    u: SpanAnnotation, v: SpanAnnotation, cfg: DissimilarityConfig
) -> float:
    """Binary category distance: 0 on match, delta_empty otherwise."""
    return 0.0 if u.category == v.category else cfg.delta_empty


def unit_dissimilarity(
    u: SpanAnnotation, v: SpanAnnotation, cfg: DissimilarityConfig
) -> float:
    """Weighted combination of positional and categorical dissimilarity."""
    scale = 2.0 / (cfg.alpha + cfg.beta)
    return scale * (
        cfg.alpha * positional_dissimilarity(u, v, cfg)
        + cfg.beta * categorical_dissimilarity(u, v, cfg)
    )


def pair_cost_matrix(
    left: tuple[SpanAnnotation, ...],
    right: tuple[SpanAnnotation, ...],
    cfg: DissimilarityConfig,
) -> np.ndarray:
    """Unit dissimilarities for all pairs, as an (n, m) float64 matrix.

    Vectorized but arithmetically identical to unit_dissimilarity, so
    solver costs and per-pair recomputations agree exactly.
    """
    sl = np.array([a.start for a in left], dtype=np.float64)[:, None]
    el = np.array([a.end for a in left], dtype=np.float64)[:, None]
    cl = np.array([a.category for a in left], dtype=np.int64)[:, None]
    sr = np.array([a.start for a in right], dtype=np.float64)[None, :]
    er = np.array([a.end for a in right], dtype=np.float64)[None, :]
    cr = np.array([a.category for a in right], dtype=np.int64)[None, :]

    d = (np.abs(sl - sr) + np.abs(el - er)) / ((el - sl) + (er - sr))
    pos = cfg.delta_empty * (d * d)
    cat = np.where(cl == cr, 0.0, cfg.delta_empty)
    scale = 2.0 / (cfg.alpha + cfg.beta)
    return scale * (cfg.alpha * pos + cfg.beta * cat)
