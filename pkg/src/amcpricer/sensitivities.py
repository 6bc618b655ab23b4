"""Delta and Gamma estimators.

Chebyshev method: price the product at the Chebyshev nodes of a spot
interval (width 10% of spot by default), fit the degree-(nodes-1)
interpolant and differentiate it analytically. When the exercise-at-inception
indicator flips inside the interval, the flip point is located by bisection
and the interval is shifted entirely to the side containing the spot, so the
fitted function never straddles the Gamma discontinuity (one-sided
derivatives).

Regression method: promote the initial spot to a uniform random variable on
[s0(1-eps), s0(1+eps)], run one LSMC pricing where every path carries its own
spot, regress the pathwise discounted payoffs on a quadratic in the spot and
differentiate the fit. Biased for finite eps, but a single simulation yields
both Greeks.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Dict, Optional, Union

import numpy as np

from .lsmc import (
    BasisSpec,
    PriceEstimate,
    RegressionConfig,
    exercise_fraction_at_first_date,
    fit_policy,
    run_experiment,
)
from .market_model import (
    ModelParams,
    discount_factor,
    simulate_paths,
    simulate_paths_with_spots,
    PathBatch,
)
from .payoffs import OptionSpec, exercise_value


@dataclass(frozen=True)
class ChebGreeksConfig:
    """Chebyshev estimator settings.

    n_paths is the per-node budget of one run (split into train/eval by the
    regression config); the exercise-at-inception probe uses the training
    fraction only.
    """

    n_nodes: int = 7
    rel_width: float = 0.10
    n_runs: int = 10
    n_paths: int = 25_000
    probe_threshold: float = 0.5
    bisect_tol_rel: float = 1e-3
    shift: bool = True

    def __post_init__(self) -> None:
        if self.n_nodes < 2:
            raise ValueError("need at least 2 nodes")
        if self.rel_width <= 0.0:
            raise ValueError("rel_width must be positive")


@dataclass
class ChebyshevInterpolant:
    """Fitted price-over-spot interpolant on [a, b]."""

    nodes: np.ndarray
    node_prices: np.ndarray
    node_errors: np.ndarray
    interval: tuple
    series: np.polynomial.Chebyshev

    def __call__(self, s: float) -> float:
        return float(self.series(s))

    def delta(self, s: float) -> float:
        return float(self.series.deriv(1)(s))

    def gamma(self, s: float) -> float:
        return float(self.series.deriv(2)(s))


@dataclass
class GreekReport:
    """Delta/Gamma result with method tag and diagnostics."""

    delta: float
    gamma: float
    method: str
    diagnostics: Dict[str, object] = field(default_factory=dict)


def cheb_nodes(a: float, b: float, n: int) -> np.ndarray:
    """Chebyshev points of the first kind mapped to [a, b], ascending."""
    k = np.arange(n)
    pts = np.cos((2.0 * k + 1.0) * np.pi / (2.0 * n))
    return (a + b) / 2.0 + (b - a) / 2.0 * np.sort(pts)


def _as_estimate(res: Union[PriceEstimate, float]) -> PriceEstimate:
    if isinstance(res, PriceEstimate):
        return res
    price = float(res)
    return PriceEstimate(price=price, std_error=0.0, n_runs=1, per_run=(price,), n_paths=0)


def _fit_interpolant(
    nodes: np.ndarray, prices: np.ndarray, errors: np.ndarray, a: float, b: float
) -> ChebyshevInterpolant:
    series = np.polynomial.Chebyshev.fit(nodes, prices, deg=len(nodes) - 1, domain=[a, b])
    return ChebyshevInterpolant(
        nodes=nodes,
        node_prices=prices,
        node_errors=errors,
        interval=(a, b),
        series=series,
    )


def _bisect_boundary(
    probe: Callable[[float], float], lo: float, hi: float, threshold: float, tol: float
) -> float:
    """Locate the exercise-at-inception flip between lo (exercising) and hi."""
    f_lo = probe(lo) > threshold
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if (probe(mid) > threshold) == f_lo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def chebyshev_greeks(
    pricer: Callable[[float], Union[PriceEstimate, float]],
    s0: float,
    cfg: ChebGreeksConfig = ChebGreeksConfig(),
    probe: Optional[Callable[[float], float]] = None,
) -> GreekReport:
    """Delta/Gamma from the analytic derivatives of a Chebyshev fit of price(spot).

    pricer(s) returns a PriceEstimate (or bare float); probe(s) returns the
    exercised-at-inception fraction and triggers the adaptive interval shift.
    """
    width = cfg.rel_width * s0
    a, b = s0 - width / 2.0, s0 + width / 2.0
    diagnostics: Dict[str, object] = {"shift_applied": False, "boundary": None}
    both_sided = False
    if probe is not None and cfg.shift:
        probe_pts = cheb_nodes(a, b, cfg.n_nodes)
        flags = np.array([probe(x) > cfg.probe_threshold for x in probe_pts])
        if flags.any() and not flags.all():
            flip = int(np.flatnonzero(flags[:-1] != flags[1:])[0])
            boundary = _bisect_boundary(
                probe,
                probe_pts[flip],
                probe_pts[flip + 1],
                cfg.probe_threshold,
                cfg.bisect_tol_rel * s0,
            )
            diagnostics["shift_applied"] = True
            diagnostics["boundary"] = boundary
            if abs(boundary - s0) <= cfg.bisect_tol_rel * s0:
                both_sided = True
                a, b = boundary - width, boundary
            elif s0 <= boundary:
                a, b = boundary - width, boundary
            else:
                a, b = boundary, boundary + width

    def _evaluate(lo: float, hi: float) -> Dict[str, object]:
        nodes = cheb_nodes(lo, hi, cfg.n_nodes)
        estimates = [_as_estimate(pricer(x)) for x in nodes]
        prices = np.array([e.price for e in estimates])
        errors = np.array([e.std_error for e in estimates])
        interp = _fit_interpolant(nodes, prices, errors, lo, hi)
        out: Dict[str, object] = {
            "interpolant": interp,
            "delta": interp.delta(s0),
            "gamma": interp.gamma(s0),
        }
        runs = min(e.n_runs for e in estimates)
        if runs > 1:
            d_runs, g_runs = [], []
            for j in range(runs):
                pj = np.array([e.per_run[j] for e in estimates])
                sj = _fit_interpolant(nodes, pj, errors, lo, hi)
                d_runs.append(sj.delta(s0))
                g_runs.append(sj.gamma(s0))
            out["delta_runs"] = d_runs
            out["gamma_runs"] = g_runs
        return out

    main = _evaluate(a, b)
    diagnostics["interval"] = (a, b)
    diagnostics["interpolant"] = main["interpolant"]
    if "delta_runs" in main:
        diagnostics["delta_runs"] = main["delta_runs"]
        diagnostics["gamma_runs"] = main["gamma_runs"]
    if both_sided:
        boundary = diagnostics["boundary"]
        right = _evaluate(boundary, boundary + width)
        diagnostics["right_side"] = {
            "interval": (boundary, boundary + width),
            "delta": right["delta"],
            "gamma": right["gamma"],
        }
    delta, gamma = float(main["delta"]), float(main["gamma"])
    if not (np.isfinite(delta) and np.isfinite(gamma)):
        raise ArithmeticError("non-finite Greeks from the Chebyshev fit")
    return GreekReport(delta=delta, gamma=gamma, method="chebyshev", diagnostics=diagnostics)


def make_lsmc_spot_pricer(
    product: OptionSpec,
    basis: BasisSpec,
    params: ModelParams,
    reg_cfg: RegressionConfig = RegressionConfig(),
    n_runs: int = 10,
    n_paths: int = 25_000,
    seed: int = 0,
    probe_paths: Optional[int] = None,
):
    """(pricer, probe) pair for chebyshev_greeks, with common random numbers.

    pricer(s) reprices the product with the initial spot replaced; every spot
    reuses the same per-run seeds, so node prices differ only through the
    spot. probe(s) fits one policy at spot s and returns the fraction of
    training paths exercised at the first admissible date.
    """
    n_train = max(2, round(reg_cfg.train_fraction * n_paths))
    n_eval = n_paths - n_train

    def pricer(s: float) -> PriceEstimate:
        p = replace(params, s0=s)
        return run_experiment(
            product,
            basis,
            p,
            reg_cfg,
            n_runs=n_runs,
            n_train=n_train,
            n_eval=n_eval,
            seed=seed,
        )

    probe_n = probe_paths if probe_paths is not None else n_train

    def probe(s: float) -> float:
        p = replace(params, s0=s)
        train = simulate_paths(p, probe_n, np.random.SeedSequence(seed, spawn_key=(0, 0)))
        policy = fit_policy(train, product, basis, reg_cfg)
        return exercise_fraction_at_first_date(policy, train)

    return pricer, probe


def _pathwise_option_values(
    batch: PathBatch, product: OptionSpec, policy
) -> np.ndarray:
    """Per-path discounted payoff under the frozen policy (forward pass)."""
    from .lsmc import _FeatureEngine  # engine reuse; forward pass mirrors pricing

    params = policy.params
    prices = batch.prices
    n = params.N
    engine = _FeatureEngine(policy.basis, prices, policy, fit_mode=False)
    value = np.zeros(prices.shape[0])
    alive = np.ones(prices.shape[0], dtype=bool)
    for i in range(policy.first_date, n):
        psi = exercise_value(product, prices, i)
        fit = policy.fits.get(i)
        if fit is None or fit.theta is None:
            continue
        rows = np.flatnonzero(alive & (psi > 0.0))
        if rows.size == 0:
            continue
        x, _ = engine.design(i, rows)
        exercised = rows[psi[rows] > x @ fit.theta]
        value[exercised] = psi[exercised] * discount_factor(params, 0, i)
        alive[exercised] = False
    psi_n = exercise_value(product, prices, n)
    value[alive] = psi_n[alive] * discount_factor(params, 0, n)
    return value


def regression_greeks(
    product: OptionSpec,
    basis: BasisSpec,
    params: ModelParams,
    reg_cfg: RegressionConfig = RegressionConfig(),
    epsilon: float = 0.05,
    n_paths: int = 175_000,
    n_runs: int = 1,
    seed: int = 0,
) -> GreekReport:
    """Randomized-spot Delta/Gamma from a quadratic fit of pathwise payoffs."""
    if epsilon <= 0.0:
        raise ValueError("epsilon must be positive")
    s0 = params.s0
    if s0 * (1.0 - epsilon) <= 0.0:
        raise ValueError("epsilon too large: the spot interval leaves (0, inf)")
    n_train = max(2, round(reg_cfg.train_fraction * n_paths))
    deltas, gammas, prices_at_s0 = [], [], []
    for k in range(n_runs):
        ss = np.random.SeedSequence(seed, spawn_key=(k, 2))
        rng = np.random.Generator(np.random.Philox(ss))
        spots = s0 * (1.0 - epsilon + 2.0 * epsilon * rng.random(n_paths))
        batch = simulate_paths_with_spots(
            params, spots, np.random.SeedSequence(seed, spawn_key=(k, 3))
        )
        train = PathBatch(
            prices=batch.prices[:n_train], seed=batch.seed, params=params
        )
        evaluation = PathBatch(
            prices=batch.prices[n_train:], seed=batch.seed, params=params
        )
        policy = fit_policy(train, product, basis, reg_cfg)
        values = _pathwise_option_values(evaluation, product, policy)
        x = spots[n_train:] - s0
        design = np.column_stack([np.ones_like(x), x, x * x])
        coef, *_ = np.linalg.lstsq(design, values, rcond=None)
        prices_at_s0.append(float(coef[0]))
        deltas.append(float(coef[1]))
        gammas.append(2.0 * float(coef[2]))
    delta = float(np.mean(deltas))
    gamma = float(np.mean(gammas))
    if not (np.isfinite(delta) and np.isfinite(gamma)):
        raise ArithmeticError("non-finite Greeks from the spot regression")
    diagnostics: Dict[str, object] = {
        "epsilon": epsilon,
        "n_paths": n_paths,
        "price_at_s0": float(np.mean(prices_at_s0)),
        "delta_runs": deltas,
        "gamma_runs": gammas,
    }
    return GreekReport(delta=delta, gamma=gamma, method="regression", diagnostics=diagnostics)
