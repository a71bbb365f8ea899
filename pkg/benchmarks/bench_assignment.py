#!/usr/bin/env python3
"""Benchmark the compiled assignment kernel against the pure-Python
fallback, both on raw solver calls and on end-to-end agreement scoring.

    python benchmarks/bench_assignment.py
    python benchmarks/bench_assignment.py --sizes 10 20 40 80 --repeats 30
"""

from __future__ import annotations

import argparse
import random
import time

import numpy as np

import spanagree.gamma.alignment as alignment_mod
from spanagree.gamma import GammaConfig, gamma_score, solver
from spanagree.model import SpanAnnotation


def time_solver(fn, matrices, repeats: int) -> float:
    started = time.perf_counter()
    for _ in range(repeats):
        for matrix in matrices:
            fn(matrix)
    return (time.perf_counter() - started) / repeats


def bench_solver(sizes: list[int], repeats: int, seed: int) -> None:
    rng = np.random.default_rng(seed)
    print(f"{'n':>5} {'python (ms)':>12} {'cython (ms)':>12} {'speedup':>8}")
    for n in sizes:
        matrices = [rng.uniform(0.0, 4.0, size=(n, n)) for _ in range(10)]
        pure = time_solver(solver.solve_assignment_python, matrices, repeats) * 1e3
        if solver.BACKEND == "cython":
            native = time_solver(solver.solve_assignment, matrices, repeats) * 1e3
            print(f"{n:>5} {pure:>12.3f} {native:>12.3f} {pure / native:>7.1f}x")
        else:
            print(f"{n:>5} {pure:>12.3f} {'n/a':>12} {'':>8}")


def random_units(rng: random.Random, text_len: int, n: int) -> list[SpanAnnotation]:
    units = []
    for _ in range(n):
        length = rng.randint(2, max(2, text_len // 4))
        start = rng.randint(0, text_len - length)
        units.append(SpanAnnotation(start, start + length, rng.randint(0, 5)))
    return units


def bench_gamma(n_examples: int, spans_per_side: int, seed: int) -> None:
    rng = random.Random(seed)
    text_len = 600
    pairs = [
        (random_units(rng, text_len, spans_per_side),
         random_units(rng, text_len, spans_per_side))
        for _ in range(n_examples)
    ]
    cfg = GammaConfig()

    def run() -> float:
        started = time.perf_counter()
        for i, (left, right) in enumerate(pairs):
            gamma_score(left, right, text_len, cfg, example_id=str(i))
        return time.perf_counter() - started

    original = alignment_mod.solve_assignment
    try:
        alignment_mod.solve_assignment = solver.solve_assignment_python
        pure = run()
        if solver.BACKEND == "cython":
            alignment_mod.solve_assignment = solver.solve_assignment
            native = run()
            print(
                f"gamma over {n_examples} examples x {spans_per_side} spans/side "
                f"({cfg.n_samples} resamples): python {pure:.2f}s, "
                f"cython {native:.2f}s, speedup {pure / native:.1f}x"
            )
        else:
            print(
                f"gamma over {n_examples} examples: python {pure:.2f}s "
                "(compiled kernel not built)"
            )
    finally:
        alignment_mod.solve_assignment = original


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", type=int, nargs="+", default=[5, 10, 20, 40, 80])
    parser.add_argument("--repeats", type=int, default=20)
    parser.add_argument("--gamma-examples", type=int, default=50)
    parser.add_argument("--spans-per-side", type=int, default=12)
    parser.add_argument("--seed", type=int, default=42)
    args = parser.parse_args()

    print(f"active backend: {solver.BACKEND}")
    bench_solver(args.sizes, args.repeats, args.seed)
    bench_gamma(args.gamma_examples, args.spans_per_side, args.seed)


if __name__ == "__main__":
    main()
