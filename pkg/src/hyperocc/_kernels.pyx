# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops: quorum propagation and top-H coverage."""
import numpy as np

from libc.math cimport sqrt
from libc.stdlib cimport calloc, free
from libc.string cimport memset

ctypedef unsigned char u8
ctypedef long long i64


def propagate_nodes(const u8[:, ::1] inputs, u8[:, ::1] nodes,
                    const i64[::1] input_index, const i64[::1] input_ptr,
                    const i64[::1] quorum):
    """Fill ``nodes[n]`` with the quorum output of node ``n``.

    Both blocks are (refs, rows) with one contiguous row per reference.
    Reference ``i`` reads ``inputs[i]`` when ``i < len(inputs)`` and
    ``nodes[i - len(inputs)]`` otherwise; node n reads
    ``input_index[input_ptr[n]:input_ptr[n + 1]]``, all of which must
    point at inputs or at nodes before n.
    """
    cdef Py_ssize_t n_nodes = quorum.shape[0]
    cdef Py_ssize_t n_in = inputs.shape[0]
    cdef Py_ssize_t n_rows = nodes.shape[1]
    cdef Py_ssize_t n, j, r, src
    cdef i64 q
    cdef int *counts
    if n_rows == 0:
        return
    counts = <int *> calloc(n_rows, sizeof(int))
    if counts == NULL:
        raise MemoryError()
    try:
        with nogil:
            for n in range(n_nodes):
                memset(counts, 0, n_rows * sizeof(int))
                for j in range(input_ptr[n], input_ptr[n + 1]):
                    src = input_index[j]
                    if src < n_in:
                        for r in range(n_rows):
                            counts[r] += inputs[src, r]
                    else:
                        src -= n_in
                        for r in range(n_rows):
                            counts[r] += nodes[src, r]
                q = quorum[n]
                for r in range(n_rows):
                    nodes[n, r] = 1 if counts[r] >= q else 0
    finally:
        free(counts)


def coverage_d(const u8[:, ::1] act, const double[::1] hoc_sorted,
               const i64[::1] order, Py_ssize_t top_h):
    """Per-example ``sqrt(sum of the top_h largest act*hoc / top_h)``.

    ``order`` lists node rows of ``act`` by non-increasing hoc and
    ``hoc_sorted`` holds the matching scores, all >= 0.
    """
    cdef Py_ssize_t n_rows = act.shape[1]
    cdef Py_ssize_t n_nodes = order.shape[0]
    cdef Py_ssize_t j, r, node
    cdef double h
    out = np.zeros(n_rows, dtype=np.float64)
    cdef double[::1] total = out
    cdef int *taken
    if n_rows == 0:
        return out
    taken = <int *> calloc(n_rows, sizeof(int))
    if taken == NULL:
        raise MemoryError()
    try:
        with nogil:
            for j in range(n_nodes):
                node = order[j]
                h = hoc_sorted[j]
                if h <= 0.0:
                    break
                for r in range(n_rows):
                    if act[node, r] and taken[r] < top_h:
                        total[r] += h
                        taken[r] += 1
            for r in range(n_rows):
                total[r] = sqrt(total[r] / top_h)
    finally:
        free(taken)
    return out
