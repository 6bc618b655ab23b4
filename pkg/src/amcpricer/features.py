"""Risk-factor extraction (rho1..rho4) and log-standardization.

Every regression basis consumes standardized log risk factors
``X = (log F - mean) / std``. Statistics are always computed on the fitting
population and reused verbatim on evaluation paths; constant columns are
dropped (with a warning) instead of dividing by zero, so degenerate dates
such as T_0 fall back to a constant-only design downstream.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RiskSetSpec:
    """Risk-factor selector rho in {1,2,3,4} with window length M.

    rho1: the current spot. rho2: spot and moving-window average. rho3: the
    in-window spots S_{T_{i-M+2}}..S_{T_i}. rho4: all spots S_{T_1}..S_{T_i}.
    For M = 1, rho2 and rho3 collapse to rho1.
    """

    rho: int
    M: int = 1

    def __post_init__(self) -> None:
        if self.rho not in (1, 2, 3, 4):
            raise ValueError(f"rho must be in 1..4, got {self.rho}")
        if self.M < 1:
            raise ValueError(f"M must be at least 1, got {self.M}")

    def factor_count(self, i: int) -> int:
        """Number of raw factors F at date i."""
        self._check_date(i)
        if self.rho == 4:
            return i  # S_{T_1}..S_{T_i}; empty at inception
        if self.rho == 1 or self.M == 1:
            return 1
        if self.rho == 2:
            return 2
        return self.M - 1

    def _check_date(self, i: int) -> None:
        if i < self.M - 1:
            raise ValueError(
                f"window underflow: date index {i} < M-1 = {self.M - 1}"
            )


def extract_risk_factors(prices: np.ndarray, i: int, spec: RiskSetSpec) -> np.ndarray:
    """Raw (strictly positive) factor matrix at date i, shape (n_paths, F)."""
    prices = np.asarray(prices, dtype=np.float64)
    if prices.ndim != 2:
        raise ValueError("prices must be a 2-D batch")
    if i >= prices.shape[1]:
        raise IndexError(f"date index {i} out of range")
    spec._check_date(i)
    M = spec.M
    if spec.rho == 4:
        return prices[:, 1 : i + 1].copy()
    if spec.rho == 1 or M == 1:
        return prices[:, i : i + 1].copy()
    if spec.rho == 2:
        avg = prices[:, i - M + 1 : i + 1].mean(axis=1)
        return np.column_stack([prices[:, i], avg])
    return prices[:, i - M + 2 : i + 1].copy()  # rho3


@dataclass
class StandardizedFeatures:
    """Standardized feature block plus the statistics that produced it.

    values has one column per retained factor; kept marks which original
    columns survived the degenerate-column filter. means/stds refer to the
    retained columns of the log factors (population std convention).
    """

    values: np.ndarray
    means: np.ndarray
    stds: np.ndarray
    kept: np.ndarray

    def transform(self, raw: np.ndarray) -> np.ndarray:
        """Standardize a new raw matrix with the stored statistics."""
        raw = np.asarray(raw, dtype=np.float64)
        if raw.ndim != 2 or raw.shape[1] != self.kept.size:
            raise ValueError(
                f"expected {self.kept.size} columns, got {raw.shape}"
            )
        logs = np.log(raw[:, self.kept])
        return (logs - self.means) / self.stds


def standardize(raw: np.ndarray, std_floor: float = 1e-12) -> StandardizedFeatures:
    """Log-standardize a raw factor matrix on its own population.

    Columns with (population) standard deviation at or below std_floor are
    dropped with a warning rather than divided by.
    """
    raw = np.asarray(raw, dtype=np.float64)
    if raw.ndim != 2:
        raise ValueError("raw factor matrix must be 2-D")
    if raw.shape[0] < 2:
        raise ValueError("standardization needs at least 2 rows")
    if np.any(raw <= 0.0):
        raise ValueError("raw factors must be strictly positive")
    logs = np.log(raw)
    means = logs.mean(axis=0)
    stds = logs.std(axis=0)  # population convention (divide by P)
    kept = stds > std_floor
    if not np.all(kept):
        warnings.warn(
            f"dropping {int((~kept).sum())} constant feature column(s)",
            RuntimeWarning,
            stacklevel=2,
        )
    values = (logs[:, kept] - means[kept]) / stds[kept]
    return StandardizedFeatures(
        values=values, means=means[kept], stds=stds[kept], kept=kept
    )


@dataclass
class GlobalStandardization:
    """Per-date log-price statistics over a whole batch, for streamed bases.

    Column j holds the mean/std of log S_{T_j} over the fitting batch. Streamed
    bases (recurrent networks, signatures) need the standardized series to be
    the same at every regression date, so these statistics are computed once
    on the full training batch rather than per date.
    """

    means: np.ndarray
    stds: np.ndarray

    @classmethod
    def fit(cls, prices: np.ndarray, std_floor: float = 1e-12) -> "GlobalStandardization":
        logs = np.log(np.asarray(prices, dtype=np.float64))
        means = logs.mean(axis=0)
        stds = logs.std(axis=0)
        # A degenerate date (e.g. T_0, or sigma = 0) maps to the constant 0.
        stds = np.where(stds > std_floor, stds, 1.0)
        return cls(means=means, stds=stds)

    def column(self, prices: np.ndarray, j: int) -> np.ndarray:
        """Standardized log-price at date j for each path."""
        return (np.log(prices[:, j]) - self.means[j]) / self.stds[j]
