"""Pure-numpy fallback for the batched truncated-signature kernel.

The compiled extension (_sigcore) implements the same operation with the same
accumulation order; results agree bitwise. Layout: a truncated signature of a
dim-d path at order n is a flat vector of length sum_{k=0..n} d^k, levels
stored consecutively (level 0 first, value 1), each level-k tensor flattened
row-major (first letter slowest).
"""

from __future__ import annotations

import numpy as np


def sig_length(dim: int, order: int) -> int:
    """Total flat length including the level-0 constant."""
    return sum(dim**k for k in range(order + 1))


def level_offsets(dim: int, order: int) -> np.ndarray:
    """Start index of each level in the flat vector; offs[k+1]-offs[k] = dim^k."""
    offs = np.empty(order + 2, dtype=np.int64)
    offs[0] = 0
    for k in range(order + 1):
        offs[k + 1] = offs[k] + dim**k
    return offs


def identity_state(n_rows: int, dim: int, order: int) -> np.ndarray:
    """The signature of the empty path: level 0 = 1, all else 0."""
    state = np.zeros((n_rows, sig_length(dim, order)), dtype=np.float64)
    state[:, 0] = 1.0
    return state


def chen_extend(state: np.ndarray, inc: np.ndarray, dim: int, order: int) -> None:
    """In place: state <- state (x) exp(inc), truncated at `order`.

    state: (P, sig_length) flat signatures; inc: (P, dim) segment increments.
    exp(inc) is the signature of one linear segment, level k = inc^(x)k / k!.
    """
    p = state.shape[0]
    offs = level_offsets(dim, order)
    # Segment-exponential pyramid e[b] = inc^(x)b / b!, shape (P, dim^b).
    e = [None] * (order + 1)
    if order >= 1:
        e[1] = inc
    for b in range(2, order + 1):
        e[b] = (e[b - 1][:, :, None] * inc[:, None, :]).reshape(p, -1) / b
    # Update levels high to low so lower levels stay untouched inputs.
    for k in range(order, 0, -1):
        out = state[:, offs[k] : offs[k + 1]]
        for b in range(1, k):
            a = k - b
            sa = state[:, offs[a] : offs[a + 1]]
            out += (sa[:, :, None] * e[b][:, None, :]).reshape(p, -1)
        out += e[k]  # b = k term; level-0 factor is 1
