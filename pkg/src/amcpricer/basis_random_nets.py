"""Randomized feed-forward and recurrent network bases.

Hidden weights are sampled once from a seeded stream and never trained; only
the linear readout on top of the features is fitted (by the regression in the
pricing engine). The feed-forward map is phi(x) = (sigma(Ax + b)^T, 1)^T with
leaky-ReLU sigma; the recurrent map streams one observation per date through
xi_j = tanh(A_x x_j + A_xi xi_{j-1} + b) with xi_{-1} = 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from .features import RiskSetSpec


@dataclass(frozen=True)
class RffnnSpec:
    """Randomized feed-forward basis: hidden width h-1, leaky-ReLU slope alpha.

    A fresh (A, b) pair is sampled per regression date (the weights depend on
    the date's feature width); weight_std scales the N(0,1) draws.
    """

    risk_set: RiskSetSpec
    hidden: int = 40
    alpha: float = 0.01
    weight_std: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.hidden < 1:
            raise ValueError(f"hidden width must be at least 1, got {self.hidden}")
        if self.weight_std <= 0.0:
            raise ValueError("weight_std must be positive")

    @property
    def family(self) -> str:
        return "rffnn"


@dataclass(frozen=True)
class RrnnSpec:
    """Randomized recurrent basis for streamed risk sets (rho3/rho4).

    One frozen (A_x, A_xi, b) triple serves every date; per-date input is the
    single standardized log-spot, so A_x has one column.
    """

    risk_set: RiskSetSpec
    hidden: int = 40
    std_ax: float = 1e-4
    std_axi: float = 0.3
    std_bias: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.hidden < 1:
            raise ValueError(f"hidden width must be at least 1, got {self.hidden}")
        if self.risk_set.rho not in (3, 4):
            raise ValueError("the recurrent basis is defined for rho3/rho4 only")

    @property
    def family(self) -> str:
        return "rrnn"


def sample_rffnn_weights(
    spec: RffnnSpec, n_features: int, date_index: int
) -> Tuple[np.ndarray, np.ndarray]:
    """Frozen (A, b) for one regression date, A: (hidden, F), b: (hidden,)."""
    ss = np.random.SeedSequence(spec.seed, spawn_key=(date_index,))
    rng = np.random.Generator(np.random.Philox(ss))
    a = spec.weight_std * rng.standard_normal((spec.hidden, n_features))
    b = spec.weight_std * rng.standard_normal(spec.hidden)
    return a, b


def leaky_relu(x: np.ndarray, alpha: float) -> np.ndarray:
    return np.where(x >= 0.0, x, alpha * x)


def rffnn_features(
    x: np.ndarray, a: np.ndarray, b: np.ndarray, alpha: float
) -> np.ndarray:
    """phi(x) rows: leaky-ReLU(A x + b) with a trailing constant-1 column."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != a.shape[1]:
        raise ValueError(
            f"feature width {x.shape} does not match weight shape {a.shape}"
        )
    hidden = leaky_relu(x @ a.T + b, alpha)
    out = np.empty((x.shape[0], a.shape[0] + 1), dtype=np.float64)
    out[:, :-1] = hidden
    out[:, -1] = 1.0
    return out


def sample_rrnn_weights(spec: RrnnSpec) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Frozen (A_x, A_xi, b) sampled once per run; A_x: (hidden, 1)."""
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(spec.seed)))
    a_x = spec.std_ax * rng.standard_normal((spec.hidden, 1))
    a_xi = spec.std_axi * rng.standard_normal((spec.hidden, spec.hidden))
    b = spec.std_bias * rng.standard_normal(spec.hidden)
    return a_x, a_xi, b


def rrnn_hidden_states(
    slices: Sequence[np.ndarray],
    a_x: np.ndarray,
    a_xi: np.ndarray,
    b: np.ndarray,
) -> np.ndarray:
    """Final hidden state xi_i after streaming the slices in order.

    Each slice is the (n_paths, 1) input of one date; states stay in (-1, 1)
    component-wise by construction.
    """
    if len(slices) == 0:
        raise ValueError("at least one time slice is required")
    xi = np.zeros((np.asarray(slices[0]).shape[0], a_xi.shape[0]))
    for x_j in slices:
        x_j = np.asarray(x_j, dtype=np.float64)
        if x_j.ndim != 2 or x_j.shape[1] != a_x.shape[1]:
            raise ValueError(f"slice shape {x_j.shape} does not match A_x {a_x.shape}")
        xi = np.tanh(x_j @ a_x.T + xi @ a_xi.T + b)
    return xi


def rrnn_features(
    slices: Sequence[np.ndarray],
    a_x: np.ndarray,
    a_xi: np.ndarray,
    b: np.ndarray,
) -> np.ndarray:
    """Design matrix (xi_i, 1) at the last supplied date."""
    xi = rrnn_hidden_states(slices, a_x, a_xi, b)
    out = np.empty((xi.shape[0], xi.shape[1] + 1), dtype=np.float64)
    out[:, :-1] = xi
    out[:, -1] = 1.0
    return out
