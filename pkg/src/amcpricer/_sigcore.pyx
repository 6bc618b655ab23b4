# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled batched truncated-signature kernel.

Mirrors _sigpure.chen_extend with the identical accumulation order, so the
two backends agree bitwise (the build disables floating-point contraction).
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def sig_length(int dim, int order):
    cdef long total = 0
    cdef long p = 1
    cdef int k
    for k in range(order + 1):
        total += p
        p *= dim
    return total


def level_offsets(int dim, int order):
    offs = np.empty(order + 2, dtype=np.int64)
    cdef cnp.int64_t[::1] o = offs
    cdef long p = 1
    cdef int k
    o[0] = 0
    for k in range(order + 1):
        o[k + 1] = o[k] + p
        p *= dim
    return offs


def identity_state(int n_rows, int dim, int order):
    state = np.zeros((n_rows, sig_length(dim, order)), dtype=np.float64)
    state[:, 0] = 1.0
    return state


def chen_extend(double[:, ::1] state, double[:, ::1] inc, int dim, int order):
    """In place: state <- state (x) exp(inc), truncated at `order`."""
    cdef Py_ssize_t n_rows = state.shape[0]
    cdef int n_levels = order + 1
    cdef long[64] offs
    cdef long p = 1
    cdef int k, b, a
    cdef long ia, ib, la, lb, base_out, base_a, base_b, idx
    cdef Py_ssize_t row
    cdef double v0
    if order < 0 or order > 62:
        raise ValueError("order out of supported range")
    if inc.shape[0] != n_rows or inc.shape[1] != dim:
        raise ValueError("inc must have shape (n_rows, dim)")
    offs[0] = 0
    for k in range(n_levels):
        offs[k + 1] = offs[k] + p
        p *= dim
    if state.shape[1] != offs[n_levels]:
        raise ValueError("state width does not match (dim, order)")
    if order == 0:
        return
    # Flat scratch for the exponential pyramid, levels 1..order packed at
    # offsets offs[k]-1 (level 0 dropped).
    escratch = np.empty(offs[n_levels] - 1, dtype=np.float64)
    cdef double[::1] e = escratch
    cdef double[:, ::1] st = state
    cdef double[:, ::1] iv = inc
    with nogil:
        for row in range(n_rows):
            # e[1] = inc
            for ib in range(dim):
                e[ib] = iv[row, ib]
            # e[b] = e[b-1] (x) inc / b
            for b in range(2, n_levels):
                base_b = offs[b] - 1
                base_a = offs[b - 1] - 1
                lb = offs[b] - offs[b - 1]  # dim^(b-1)
                for ia in range(lb):
                    v0 = e[base_a + ia]
                    for ib in range(dim):
                        e[base_b + ia * dim + ib] = (v0 * iv[row, ib]) / (<double> b)
            # state levels high to low; per level: b = 0 is in place,
            # then b = 1..k-1 cross terms, then b = k (level-0 factor 1).
            for k in range(order, 0, -1):
                base_out = offs[k]
                for b in range(1, k):
                    a = k - b
                    base_a = offs[a]
                    base_b = offs[b] - 1
                    la = offs[a + 1] - offs[a]
                    lb = offs[b + 1] - offs[b]
                    for ia in range(la):
                        v0 = st[row, base_a + ia]
                        for ib in range(lb):
                            st[row, base_out + ia * lb + ib] += v0 * e[base_b + ib]
                base_b = offs[k] - 1
                lb = offs[k + 1] - offs[k]
                for ib in range(lb):
                    st[row, base_out + ib] += e[base_b + ib]
