"""Assignment-kernel backend selection.

Prefers the compiled extension and falls back to the pure-Python
implementation when the extension was not built. Both produce identical
results; the compiled one is just much faster.
"""

from __future__ import annotations

import numpy as np

from . import _solver_py

try:
    from . import _solver as _native
except ImportError:
    _native = None

BACKEND = "cython" if _native is not None else "python"


def solve_assignment(cost: np.ndarray) -> tuple[list[int], float]:
    """Minimum-cost perfect matching on a square float64 matrix."""
    if _native is not None:
        return _native.solve_assignment(np.ascontiguousarray(cost, dtype=np.float64))
    return _solver_py.solve_assignment(cost.tolist())


def solve_assignment_python(cost: np.ndarray) -> tuple[list[int], float]:
    """Force the pure-Python solver (for benchmarks and cross-checks)."""
    return _solver_py.solve_assignment(cost.tolist())
