# cython: boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled square assignment solver (shortest augmenting path).

Same algorithm and operation order as _solver_py, so both backends
return identical assignments and costs.
"""

from libc.stdlib cimport malloc, free


def solve_assignment(double[:, ::1] cost):
    """Minimum-cost perfect matching on a square cost matrix.

    Returns (cols, total) where cols[i] is the column assigned to row i.
    """
    cdef Py_ssize_t n = cost.shape[0]
    if cost.shape[1] != n:
        raise ValueError("cost matrix must be square")
    if n == 0:
        return [], 0.0

    cdef double inf = float("inf")
    cdef double *u = <double *> malloc((n + 1) * sizeof(double))
    cdef double *v = <double *> malloc((n + 1) * sizeof(double))
    cdef double *minv = <double *> malloc((n + 1) * sizeof(double))
    cdef Py_ssize_t *p = <Py_ssize_t *> malloc((n + 1) * sizeof(Py_ssize_t))
    cdef Py_ssize_t *way = <Py_ssize_t *> malloc((n + 1) * sizeof(Py_ssize_t))
    cdef char *used = <char *> malloc(n + 1)
    if u == NULL or v == NULL or minv == NULL or p == NULL or way == NULL or used == NULL:
        free(u); free(v); free(minv); free(p); free(way); free(used)
        raise MemoryError()

    cdef Py_ssize_t i, j, i0, j0, j1
    cdef double cur, delta, total

    try:
        for j in range(n + 1):
            u[j] = 0.0
            v[j] = 0.0
            p[j] = 0
            way[j] = 0

        for i in range(1, n + 1):
            p[0] = i
            j0 = 0
            for j in range(n + 1):
                minv[j] = inf
                used[j] = 0
            while True:
                used[j0] = 1
                i0 = p[j0]
                delta = inf
                j1 = 0
                for j in range(1, n + 1):
                    if not used[j]:
                        cur = cost[i0 - 1, j - 1] - u[i0] - v[j]
                        if cur < minv[j]:
                            minv[j] = cur
                            way[j] = j0
                        if minv[j] < delta:
                            delta = minv[j]
                            j1 = j
                for j in range(n + 1):
                    if used[j]:
                        u[p[j]] += delta
                        v[j] -= delta
                    else:
                        minv[j] -= delta
                j0 = j1
                if p[j0] == 0:
                    break
            while j0 != 0:
                j1 = way[j0]
                p[j0] = p[j1]
                j0 = j1

        cols = [0] * n
        for j in range(1, n + 1):
            if p[j] != 0:
                cols[p[j] - 1] = j - 1
        total = 0.0
        for i in range(n):
            total += cost[i, cols[i]]
        return cols, total
    finally:
        free(u); free(v); free(minv); free(p); free(way); free(used)
