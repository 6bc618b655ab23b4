"""Polynomial regression basis over standardized risk factors.

All monomials of total degree <= d in F features, constant included, in
graded lexicographic order (degree 0, then degree 1 in column order, then
degree 2 pairs, ...). Column count is C(F+d, d).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations_with_replacement
from math import comb
from typing import List, Tuple

import numpy as np

from .features import RiskSetSpec


class BasisTooLargeError(ValueError):
    """Raised when the requested design would exceed the configured cap."""


@dataclass(frozen=True)
class PolyBasisSpec:
    """Degree-d polynomial basis on a risk set; d = 2 by default."""

    risk_set: RiskSetSpec
    degree: int = 2
    max_columns: int = 5000

    def __post_init__(self) -> None:
        if self.degree < 1:
            raise ValueError(f"degree must be at least 1, got {self.degree}")

    @property
    def family(self) -> str:
        return "poly"

    def n_columns(self, n_features: int) -> int:
        return poly_count(n_features, self.degree)


def poly_count(n_features: int, degree: int) -> int:
    """Number of monomials of total degree <= degree in n_features variables."""
    return comb(n_features + degree, degree)


def monomial_exponents(n_features: int, degree: int) -> List[Tuple[int, ...]]:
    """Index multisets of the monomials in graded lexicographic order.

    Each entry lists the feature indices of one monomial (with repetition);
    the empty tuple is the constant.
    """
    monos: List[Tuple[int, ...]] = []
    for k in range(degree + 1):
        monos.extend(combinations_with_replacement(range(n_features), k))
    return monos


def poly_features(x: np.ndarray, degree: int, max_columns: int = 5000) -> np.ndarray:
    """Design matrix of all monomials of total degree <= degree.

    x is a standardized feature matrix (n_rows, F); the output has
    C(F+degree, degree) columns, the first being the constant 1.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("feature matrix must be 2-D")
    n_rows, n_feat = x.shape
    n_cols = poly_count(n_feat, degree)
    if n_cols > max_columns:
        raise BasisTooLargeError(
            f"polynomial design would have {n_cols} columns (cap {max_columns})"
        )
    out = np.empty((n_rows, n_cols), dtype=np.float64)
    out[:, 0] = 1.0
    col = 1
    for k in range(1, degree + 1):
        for idx in combinations_with_replacement(range(n_feat), k):
            np.prod(x[:, idx], axis=1, out=out[:, col])
            col += 1
    return out
