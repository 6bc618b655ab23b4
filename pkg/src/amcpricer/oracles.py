"""Independent reference pricers used by tests and sensitivity comparisons.

A Cox-Ross-Rubinstein binomial tree (American and European modes) and the
Black-Scholes closed forms. Nothing here touches the Monte Carlo engine.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .market_model import ModelParams


@dataclass(frozen=True)
class TreeSpec:
    """CRR tree specification: u = e^{sigma sqrt(dt)}, d = 1/u."""

    steps: int
    params: ModelParams
    option: str  # "put" or "call"
    strike: float

    def __post_init__(self) -> None:
        if self.steps < 1:
            raise ValueError("steps must be at least 1")
        if self.option not in ("put", "call"):
            raise ValueError(f"option must be 'put' or 'call', got {self.option!r}")
        if self.strike <= 0.0:
            raise ValueError("strike must be positive")


def _payoff(option: str, s: np.ndarray, k: float) -> np.ndarray:
    if option == "call":
        return np.maximum(s - k, 0.0)
    return np.maximum(k - s, 0.0)


def _tree_price(spec: TreeSpec, american: bool) -> float:
    p = spec.params
    dt = p.T / spec.steps
    if p.sigma == 0.0:
        # Deterministic path s0 e^{(r-q)t}; optimal exercise is the best
        # discounted intrinsic value over the grid (maturity only if European).
        t = np.linspace(0.0, p.T, spec.steps + 1)
        s = p.s0 * np.exp((p.r - p.q) * t)
        vals = np.exp(-p.r * t) * _payoff(spec.option, s, spec.strike)
        return float(vals.max() if american else vals[-1])
    u = np.exp(p.sigma * np.sqrt(dt))
    d = 1.0 / u
    prob = (np.exp((p.r - p.q) * dt) - d) / (u - d)
    if not (0.0 < prob < 1.0):
        raise ValueError(
            f"risk-neutral probability {prob:.6f} outside (0,1); increase steps"
        )
    disc = np.exp(-p.r * dt)
    j = np.arange(spec.steps + 1)
    s_level = p.s0 * u**j * d ** (spec.steps - j)
    values = _payoff(spec.option, s_level, spec.strike)
    for i in range(spec.steps - 1, -1, -1):
        values = disc * (prob * values[1 : i + 2] + (1.0 - prob) * values[: i + 1])
        if american:
            # node prices one level up: s0 u^k d^{i-k} = u * (level i+1 value at k)
            s_level = s_level[: i + 1] * u
            np.maximum(values, _payoff(spec.option, s_level, spec.strike), out=values)
    return float(values[0])


def tree_price_american(spec: TreeSpec) -> float:
    """American option price by CRR backward induction with exercise at every node."""
    return _tree_price(spec, american=True)


def tree_price_european(spec: TreeSpec) -> float:
    """European option price on the same lattice (no early exercise)."""
    return _tree_price(spec, american=False)


def bs_closed_form(params: ModelParams, strike: float, kind: str) -> float:
    """Black-Scholes European price with continuous rates r and q."""
    if kind not in ("call", "put"):
        raise ValueError(f"kind must be 'call' or 'put', got {kind!r}")
    if params.sigma <= 0.0 or params.T <= 0.0:
        raise ValueError("closed form requires sigma > 0 and T > 0")
    s0, r, q, sig, t = params.s0, params.r, params.q, params.sigma, params.T
    vol = sig * np.sqrt(t)
    d1 = (np.log(s0 / strike) + (r - q + 0.5 * sig**2) * t) / vol
    d2 = d1 - vol
    call = s0 * np.exp(-q * t) * ndtr(d1) - strike * np.exp(-r * t) * ndtr(d2)
    if kind == "call":
        return float(call)
    # put-call parity
    return float(call - s0 * np.exp(-q * t) + strike * np.exp(-r * t))


def tree_greeks(spec: TreeSpec, bump: float = 0.005) -> tuple[float, float]:
    """Delta and Gamma by central differences over a relative spot bump.

    Each bumped price rebuilds the tree from scratch; gamma comes from the
    second central difference.
    """
    p = spec.params
    h = bump * p.s0
    prices = []
    for s in (p.s0 - h, p.s0, p.s0 + h):
        bumped = ModelParams(s0=s, r=p.r, q=p.q, sigma=p.sigma, T=p.T, N=p.N)
        prices.append(
            tree_price_american(
                TreeSpec(steps=spec.steps, params=bumped, option=spec.option, strike=spec.strike)
            )
        )
    lo, mid, hi = prices
    delta = (hi - lo) / (2.0 * h)
    gamma = (hi - 2.0 * mid + lo) / (h * h)
    return float(delta), float(gamma)
