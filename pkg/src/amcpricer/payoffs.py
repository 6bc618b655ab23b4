"""Window statistics, option exercise values, certificate coupons and redemptions.

All operations accept either a single path (1-D array of prices over dates
T_0..T_N) or a batch (2-D, rows = paths) and are pure functions of their
inputs.

The moving-window statistics follow the engine's reference formulas exactly:
``A_avg_i(M)`` is the plain arithmetic mean of the last M observations, while
``A_min``/``A_max`` carry a literal 1/M prefactor on the extremum. Because the
prefactor on extrema is unusual, look-back exercise values consult the
``extrema_prefactor`` switch on the option spec: "paper" keeps the literal
1/M, "plain" uses the bare extremum.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

OPTION_KINDS = ("asian_fixed", "asian_floating", "lookback_fixed", "lookback_floating")
CERTIFICATE_KINDS = ("snowball", "lock_in")
COUPONS_PER_YEAR = 4


@dataclass(frozen=True)
class WindowSpec:
    """Moving window of M daily observations; payoffs exist for i >= M-1."""

    M: int

    def __post_init__(self) -> None:
        if self.M < 1:
            raise ValueError(f"window length M must be at least 1, got {self.M}")


@dataclass(frozen=True)
class OptionSpec:
    """Asian or look-back option on a moving window.

    strike is required for the fixed-strike kinds and ignored otherwise.
    """

    kind: str
    window: WindowSpec
    strike: Optional[float] = None
    extrema_prefactor: str = "paper"

    def __post_init__(self) -> None:
        if self.kind not in OPTION_KINDS:
            raise ValueError(f"unknown option kind {self.kind!r}")
        if self.kind in ("asian_fixed", "lookback_fixed"):
            if self.strike is None or self.strike <= 0.0:
                raise ValueError(f"{self.kind} requires a positive strike")
        if self.extrema_prefactor not in ("paper", "plain"):
            raise ValueError(
                f"extrema_prefactor must be 'paper' or 'plain', got {self.extrema_prefactor!r}"
            )

    @property
    def M(self) -> int:
        return self.window.M


@dataclass(frozen=True)
class CertificateSpec:
    """Callable snowball or lock-in certificate on quarterly coupon dates.

    Attributes:
        kind: "snowball" or "lock_in".
        coupons: cash flows c_1..c_N as fractions of notional, one per
            quarterly date; N = 4 x maturity in years.
        coupon_barrier: performance barrier K for coupon payment.
        capital_barrier: performance barrier H for principal protection.
        s0_ref: reference level defining performance P(s) = s / s0_ref.
    """

    kind: str
    coupons: Tuple[float, ...]
    coupon_barrier: float
    capital_barrier: float
    s0_ref: float = 100.0

    def __post_init__(self) -> None:
        if self.kind not in CERTIFICATE_KINDS:
            raise ValueError(f"unknown certificate kind {self.kind!r}")
        if len(self.coupons) < 1:
            raise ValueError("at least one coupon date is required")
        if any(c < 0.0 for c in self.coupons):
            raise ValueError("coupons must be non-negative")
        if not (0.0 < self.capital_barrier <= 1.0):
            raise ValueError("capital barrier H must lie in (0, 1]")
        if self.coupon_barrier <= 0.0:
            raise ValueError("coupon barrier K must be positive")
        if self.s0_ref <= 0.0:
            raise ValueError("reference level must be positive")

    @property
    def n_dates(self) -> int:
        """Number of coupon dates N."""
        return len(self.coupons)

    @property
    def maturity_years(self) -> float:
        return self.n_dates / COUPONS_PER_YEAR


# Reference term sheets, keyed by maturity in years. Coupons are chosen so
# the callable certificate prices near par under the default market model.
_STANDARD_CERTIFICATES = {
    "snowball": {
        1: (0.023, 1.0, 0.35),
        2: (0.024, 1.0, 0.30),
        5: (0.0285, 1.0, 0.30),
    },
    "lock_in": {
        1: (0.028, 1.0, 0.40),
        2: (0.024, 0.9, 0.30),
        5: (0.03, 0.9, 0.30),
    },
}


def standard_certificate(
    kind: str, maturity_years: int, s0_ref: float = 100.0
) -> CertificateSpec:
    """Reference snowball / lock-in certificate for maturities 1, 2 and 5 years."""
    try:
        coupon, k, h = _STANDARD_CERTIFICATES[kind][maturity_years]
    except KeyError:
        raise ValueError(
            f"no standard {kind!r} certificate with maturity {maturity_years}"
        ) from None
    n = COUPONS_PER_YEAR * maturity_years
    return CertificateSpec(
        kind=kind,
        coupons=(coupon,) * n,
        coupon_barrier=k,
        capital_barrier=h,
        s0_ref=s0_ref,
    )


def _as_batch(path: np.ndarray) -> Tuple[np.ndarray, bool]:
    arr = np.asarray(path, dtype=np.float64)
    if arr.ndim == 1:
        return arr[None, :], True
    if arr.ndim == 2:
        return arr, False
    raise ValueError("path must be 1-D or 2-D")


def _check_window(i: int, M: int, n_dates: int) -> None:
    if i < M - 1:
        raise ValueError(f"window underflow: date index {i} < M-1 = {M - 1}")
    if i >= n_dates:
        raise IndexError(f"date index {i} out of range for {n_dates} dates")


def window_stat(path: np.ndarray, i: int, M: int, stat: str):
    """Moving-window statistic at date i over observations T_{i-M+1}..T_i.

    avg is the arithmetic mean; min and max return the extremum scaled by the
    literal 1/M prefactor of the reference formulas.
    """
    batch, single = _as_batch(path)
    _check_window(i, M, batch.shape[1])
    window = batch[:, i - M + 1 : i + 1]
    if stat == "avg":
        out = window.mean(axis=1)
    elif stat == "min":
        out = window.min(axis=1) / M
    elif stat == "max":
        out = window.max(axis=1) / M
    else:
        raise ValueError(f"stat must be 'avg', 'min' or 'max', got {stat!r}")
    return float(out[0]) if single else out


def exercise_value(spec: OptionSpec, path: np.ndarray, i: int):
    """Exercise payoff Psi_i of an option at date i; non-negative."""
    batch, single = _as_batch(path)
    M = spec.M
    _check_window(i, M, batch.shape[1])
    window = batch[:, i - M + 1 : i + 1]
    spot = batch[:, i]
    if spec.kind == "asian_fixed":
        out = np.maximum(spec.strike - window.mean(axis=1), 0.0)
    elif spec.kind == "asian_floating":
        out = np.maximum(spot - window.mean(axis=1), 0.0)
    else:
        scale = 1.0 / M if spec.extrema_prefactor == "paper" else 1.0
        if spec.kind == "lookback_fixed":
            out = np.maximum(scale * window.max(axis=1) - spec.strike, 0.0)
        else:  # lookback_floating
            out = np.maximum(spot - scale * window.min(axis=1), 0.0)
    return float(out[0]) if single else out


def _performance(spec: CertificateSpec, batch: np.ndarray) -> np.ndarray:
    return batch / spec.s0_ref


def certificate_coupons(spec: CertificateSpec, path: np.ndarray) -> np.ndarray:
    """Coupon matrix gamma over all dates: shape (n_paths, N), column j-1 = gamma_j.

    Snowball: a coupon date pays the sum of all cash flows accrued since the
    last date whose performance exceeded the barrier (nothing pays while the
    performance stays below). Lock-in: once the performance has ever exceeded
    the barrier, every subsequent c_i pays.
    """
    batch, _ = _as_batch(path)
    n = spec.n_dates
    if batch.shape[1] != n + 1:
        raise ValueError(
            f"path must have N+1 = {n + 1} observations, got {batch.shape[1]}"
        )
    above = _performance(spec, batch[:, 1:]) > spec.coupon_barrier
    c = np.asarray(spec.coupons, dtype=np.float64)
    out = np.zeros_like(above, dtype=np.float64)
    if spec.kind == "snowball":
        accrued = np.zeros(batch.shape[0], dtype=np.float64)
        for j in range(n):
            accrued += c[j]
            out[:, j] = np.where(above[:, j], accrued, 0.0)
            accrued[above[:, j]] = 0.0
    else:  # lock_in
        unlocked = np.logical_or.accumulate(above, axis=1)
        out = unlocked * c[None, :]
    return out


def certificate_coupon(spec: CertificateSpec, path: np.ndarray, i: int):
    """Coupon gamma_i at date i (1 <= i <= N)."""
    if not (1 <= i <= spec.n_dates):
        raise IndexError(f"coupon index {i} outside 1..{spec.n_dates}")
    batch, single = _as_batch(path)
    out = certificate_coupons(spec, batch)[:, i - 1]
    return float(out[0]) if single else out


def certificate_redemption(spec: CertificateSpec, path: np.ndarray, i: int):
    """Redemption amount Psi^C_i: full principal before maturity, barrier-dependent at N."""
    n = spec.n_dates
    if not (1 <= i <= n):
        raise IndexError(f"date index {i} outside 1..{n}")
    batch, single = _as_batch(path)
    if i < n:
        out = np.ones(batch.shape[0], dtype=np.float64)
    else:
        perf = _performance(spec, batch[:, n])
        out = np.where(perf > spec.capital_barrier, 1.0, perf)
    return float(out[0]) if single else out
