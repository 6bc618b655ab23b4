"""Geometric Brownian motion market model on a daily observation grid.

Paths are sampled with the exact lognormal step
``S_{j+1} = S_j * exp((r - q - sigma^2/2) dt + sigma sqrt(dt) Z)``,
so the observation grid is the payoff grid and there is no discretization
error. Randomness comes from a counter-based Philox stream in which every
path owns a fixed range of counter blocks; generation is therefore
bit-identical whether paths are drawn in one call, in chunks, or in parallel.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.special import ndtri

SeedLike = Union[int, np.random.SeedSequence]

# Rows are generated in chunks of this many paths to bound transient memory.
_CHUNK_ROWS = 65536

_INV_2_53 = 2.0 ** -53
_HALF_ULP = 2.0 ** -54


@dataclass(frozen=True)
class ModelParams:
    """Black-Scholes model and grid parameters.

    Attributes:
        s0: initial spot price.
        r: risk-free rate, annualized, continuously compounded.
        q: dividend yield, annualized.
        sigma: volatility, annualized.
        T: maturity in years.
        N: number of time steps; observation dates are T_0=0, ..., T_N=T,
           equally spaced.
    """

    s0: float = 100.0
    r: float = 0.05
    q: float = 0.0
    sigma: float = 0.3
    T: float = 0.2
    N: int = 50

    def __post_init__(self) -> None:
        if self.s0 <= 0.0:
            raise ValueError(f"s0 must be positive, got {self.s0}")
        if self.sigma < 0.0:
            raise ValueError(f"sigma must be non-negative, got {self.sigma}")
        if self.T <= 0.0:
            raise ValueError(f"T must be positive, got {self.T}")
        if self.N < 1:
            raise ValueError(f"N must be at least 1, got {self.N}")

    @property
    def dt(self) -> float:
        return self.T / self.N

    def grid(self) -> np.ndarray:
        """Observation dates T_0..T_N in years."""
        return np.linspace(0.0, self.T, self.N + 1)


@dataclass(frozen=True)
class PathBatch:
    """Immutable batch of simulated price paths.

    Attributes:
        prices: (n_paths, N+1) array, column j holds S_{T_j}.
        seed: the seed the batch was generated from.
        params: the model that generated the batch.
    """

    prices: np.ndarray
    seed: SeedLike
    params: ModelParams

    def __post_init__(self) -> None:
        p = self.prices
        if p.ndim != 2 or p.shape[1] != self.params.N + 1:
            raise ValueError(
                f"prices must have shape (n_paths, N+1), got {p.shape}"
            )
        if not np.all(p > 0.0):
            raise ValueError("all prices must be strictly positive")
        p.setflags(write=False)

    @property
    def n_paths(self) -> int:
        return self.prices.shape[0]

    @property
    def n_dates(self) -> int:
        return self.prices.shape[1]


def _philox_key(seed: SeedLike) -> np.ndarray:
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return ss.generate_state(2, np.uint64)


def _standard_normals(key: np.ndarray, n_rows: int, n_cols: int, first_row: int) -> np.ndarray:
    """Standard normals where global row p consumes only its own counter blocks.

    Each row owns ceil(n_cols/4) Philox blocks (4 raw uint64 per block); one
    raw draw maps to one normal through the inverse CDF, so the layout is
    independent of how rows are grouped into calls.
    """
    bpp = max(1, (n_cols + 3) // 4)
    bg = np.random.Philox(key=key, counter=first_row * bpp)
    raw = bg.random_raw(n_rows * bpp * 4).reshape(n_rows, bpp * 4)[:, :n_cols]
    u = (raw >> np.uint64(11)).astype(np.float64) * _INV_2_53 + _HALF_ULP
    return ndtri(u)


def _draw_base_normals(key: np.ndarray, n_rows: int, n_cols: int) -> np.ndarray:
    z = np.empty((n_rows, n_cols), dtype=np.float64)
    for a in range(0, n_rows, _CHUNK_ROWS):
        b = min(a + _CHUNK_ROWS, n_rows)
        z[a:b] = _standard_normals(key, b - a, n_cols, first_row=a)
    return z


def _paths_from_normals(params: ModelParams, s0, z: np.ndarray) -> np.ndarray:
    """Exact lognormal stepping from per-path normals; s0 scalar or (P,)."""
    drift = (params.r - params.q - 0.5 * params.sigma**2) * params.dt
    vol = params.sigma * np.sqrt(params.dt)
    log_rel = np.empty((z.shape[0], params.N + 1), dtype=np.float64)
    log_rel[:, 0] = 0.0
    np.cumsum(drift + vol * z, axis=1, out=log_rel[:, 1:])
    s0 = np.asarray(s0, dtype=np.float64)
    if s0.ndim == 1:
        s0 = s0[:, None]
    return s0 * np.exp(log_rel)


def simulate_paths(
    params: ModelParams, n_paths: int, seed: SeedLike, antithetic: bool = False
) -> PathBatch:
    """Simulate GBM paths on the grid T_0..T_N.

    With ``antithetic`` the batch holds n_paths/2 pairs: path 2m+1 uses the
    negated normals of path 2m.
    """
    if n_paths < 1:
        raise ValueError("n_paths must be at least 1")
    if antithetic and n_paths % 2 != 0:
        raise ValueError("antithetic sampling requires an even n_paths")
    key = _philox_key(seed)
    n_base = n_paths // 2 if antithetic else n_paths
    z = _draw_base_normals(key, n_base, params.N)
    if antithetic:
        paired = np.empty((n_paths, params.N), dtype=np.float64)
        paired[0::2] = z
        paired[1::2] = -z
        z = paired
    prices = _paths_from_normals(params, params.s0, z)
    return PathBatch(prices=prices, seed=seed, params=params)


def simulate_paths_with_spots(
    params: ModelParams, spots: np.ndarray, seed: SeedLike
) -> PathBatch:
    """Simulate GBM paths whose initial values vary per path.

    Used by the randomized-spot sensitivity method; all paths share the
    common random numbers of ``simulate_paths`` with the same seed.
    """
    spots = np.asarray(spots, dtype=np.float64)
    if spots.ndim != 1 or spots.size < 1:
        raise ValueError("spots must be a non-empty 1-D array")
    if np.any(spots <= 0.0):
        raise ValueError("all spots must be strictly positive")
    key = _philox_key(seed)
    z = _draw_base_normals(key, spots.size, params.N)
    prices = _paths_from_normals(params, spots, z)
    return PathBatch(prices=prices, seed=seed, params=params)


def discount_factor(params: ModelParams, i: int, j: int) -> float:
    """e^{-r (T_j - T_i)}, the ratio B_{T_i}/B_{T_j} of the bank account."""
    if not (0 <= i <= j <= params.N):
        raise IndexError(f"need 0 <= i <= j <= N, got i={i}, j={j}, N={params.N}")
    return float(np.exp(-params.r * (j - i) * params.dt))


def write_paths_csv(batch: PathBatch, path: str) -> None:
    """Dump a batch as CSV: one row per path, header path_id,t0,...,tN."""
    n = batch.params.N
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["path_id"] + [f"t{j}" for j in range(n + 1)])
        for pid in range(batch.n_paths):
            writer.writerow(
                [pid] + [format(v, ".10g") for v in batch.prices[pid]]
            )
