"""Least-squares Monte Carlo engine.

Backward induction fits one linear regression per exercise date on the
pathwise realized discounted continuation value; the forward pass prices an
independent evaluation batch with the frozen policy. Options are
buyer-exercised (stop when the payoff beats the estimated continuation),
certificates are issuer-called (redeem when continuation exceeds the
principal). Regression bases are interchangeable: polynomials, randomized
feed-forward / recurrent networks, and truncated path signatures.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field
from math import isqrt
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
from scipy.linalg import lstsq as _scipy_lstsq

from .basis_poly import PolyBasisSpec, poly_features
from .basis_random_nets import (
    RffnnSpec,
    RrnnSpec,
    rffnn_features,
    rrnn_features,
    sample_rffnn_weights,
    sample_rrnn_weights,
)
from .basis_signature import SignatureBasisSpec, SignatureStream
from .features import (
    GlobalStandardization,
    StandardizedFeatures,
    extract_risk_factors,
    standardize,
)
from .market_model import (
    ModelParams,
    PathBatch,
    discount_factor,
    simulate_paths,
)
from .payoffs import (
    CertificateSpec,
    OptionSpec,
    certificate_coupons,
    certificate_redemption,
    exercise_value,
)

BasisSpec = Union[PolyBasisSpec, RffnnSpec, RrnnSpec, SignatureBasisSpec]
ProductSpec = Union[OptionSpec, CertificateSpec]


@dataclass(frozen=True)
class RegressionConfig:
    """Regression hyperparameters.

    ridge_lambda None means the default 1e-8 x mean diagonal of the Gram
    matrix of the design; 0 disables regularization (minimum-norm fallback
    with a conditioning warning when rank-deficient). itm_filter restricts
    the regression population to paths with strictly positive immediate
    payoff; exercise itself always requires a positive payoff.
    """

    ridge_lambda: Optional[float] = None
    itm_filter: bool = True
    train_fraction: float = 0.20
    min_regression_paths: int = 32

    def __post_init__(self) -> None:
        if self.ridge_lambda is not None and self.ridge_lambda < 0.0:
            raise ValueError("ridge_lambda must be non-negative")
        if not (0.0 < self.train_fraction < 1.0):
            raise ValueError("train_fraction must lie in (0, 1)")
        if self.min_regression_paths < 2:
            raise ValueError("min_regression_paths must be at least 2")


@dataclass
class DateFit:
    """Fitted state of one exercise date."""

    theta: Optional[np.ndarray] = None
    std: Optional[StandardizedFeatures] = None
    weights: Optional[Tuple[np.ndarray, np.ndarray]] = None  # R-FFNN (A, b)
    avg_stats: Optional[Tuple[float, float]] = None  # signature augment column
    rank_warning: bool = False


@dataclass
class ExercisePolicy:
    """Per-date regression coefficients plus everything needed to reuse them."""

    product: ProductSpec
    basis: BasisSpec
    params: ModelParams
    cfg: RegressionConfig
    first_date: int
    fits: Dict[int, DateFit] = field(default_factory=dict)
    global_std: Optional[GlobalStandardization] = None
    rrnn_weights: Optional[Tuple[np.ndarray, np.ndarray, np.ndarray]] = None


@dataclass(frozen=True)
class PriceEstimate:
    """Monte Carlo price with run breakdown.

    For a single run std_error is the path-level standard error; for several
    runs it is std(run means, ddof=1)/sqrt(n_runs). Times exclude path
    generation (time_paths_s reports it separately); both are medians across
    runs.
    """

    price: float
    std_error: float
    n_runs: int
    per_run: Tuple[float, ...]
    n_paths: int
    time_algo_s: float = 0.0
    time_paths_s: float = 0.0


def _solve_regression(
    x: np.ndarray, y: np.ndarray, cfg: RegressionConfig
) -> Tuple[np.ndarray, bool]:
    """Ridge via least squares on the augmented matrix [X; sqrt(lam) I]."""
    n = x.shape[1]
    if cfg.ridge_lambda is None:
        lam = 1e-8 * float(np.mean(np.sum(x * x, axis=0)))
    else:
        lam = cfg.ridge_lambda
    if lam > 0.0:
        a = np.vstack([x, np.sqrt(lam) * np.eye(n)])
        b = np.concatenate([y, np.zeros(n)])
    else:
        a, b = x, y
    theta, _, rank, _ = _scipy_lstsq(a, b, lapack_driver="gelsy")
    rank_warning = lam == 0.0 and rank < n
    if rank_warning:
        warnings.warn(
            f"rank-deficient regression ({rank}/{n}); minimum-norm solution used",
            RuntimeWarning,
            stacklevel=2,
        )
    return theta, rank_warning


def _first_exercise_date(product: ProductSpec) -> int:
    if isinstance(product, OptionSpec):
        return product.M - 1
    return 1


def _needs_global_std(basis: BasisSpec) -> bool:
    return isinstance(basis, (RrnnSpec, SignatureBasisSpec))


def _rho3_dates(i: int, m: int) -> List[int]:
    return list(range(max(i - m + 2, 0), i + 1))


class _FeatureEngine:
    """Produces per-date design matrices on one price batch.

    In fit mode, per-date standardization statistics (and R-FFNN weights) are
    captured into the policy's DateFit records; in eval mode the stored
    records are applied. Streamed bases (R-RNN on rho4, signatures) consume
    dates in order; the fit mode pre-plans a checkpoint/replay schedule so
    the backward induction can visit dates in reverse without storing every
    date's features at once.
    """

    def __init__(
        self,
        basis: BasisSpec,
        prices: np.ndarray,
        policy: ExercisePolicy,
        fit_mode: bool,
        rows_by_date: Optional[Dict[int, np.ndarray]] = None,
    ):
        self.basis = basis
        self.prices = prices
        self.policy = policy
        self.fit_mode = fit_mode
        self.n_paths = prices.shape[0]
        self._rows_by_date = rows_by_date or {}
        self._ones = np.ones((self.n_paths, 1))
        if isinstance(basis, SignatureBasisSpec) and basis.risk_set.rho == 4:
            self._init_sig_rho4()
        if isinstance(basis, RrnnSpec):
            if policy.rrnn_weights is None:
                raise ValueError("policy is missing the frozen recurrent weights")
            if basis.risk_set.rho == 4:
                self._init_rrnn_rho4()

    # ---- polynomial / feed-forward (per-date standardization) ----

    def _per_date_design(self, i: int, rows: np.ndarray) -> Tuple[np.ndarray, DateFit]:
        basis = self.basis
        raw = extract_risk_factors(self.prices, i, basis.risk_set)[rows]
        if self.fit_mode:
            fit = DateFit()
            std = standardize(raw)
            x = std.values
            fit.std = std
            if isinstance(basis, RffnnSpec):
                if x.shape[1] == 0:
                    return np.ones((rows.size, 1)), fit
                a, b = sample_rffnn_weights(basis, x.shape[1], i)
                fit.weights = (a, b)
                return rffnn_features(x, a, b, basis.alpha), fit
            if x.shape[1] == 0:
                return np.ones((rows.size, 1)), fit
            return poly_features(x, basis.degree, basis.max_columns), fit
        fit = self.policy.fits[i]
        x = fit.std.transform(raw)
        if isinstance(basis, RffnnSpec):
            if x.shape[1] == 0:
                return np.ones((rows.size, 1)), fit
            a, b = fit.weights
            return rffnn_features(x, a, b, basis.alpha), fit
        if x.shape[1] == 0:
            return np.ones((rows.size, 1)), fit
        return poly_features(x, basis.degree, basis.max_columns), fit

    # ---- signature on rho4: incremental stream with checkpoint/replay ----

    def _init_sig_rho4(self) -> None:
        basis = self.basis
        self._stream = SignatureStream(self.n_paths, basis.order)
        self._sig_cache: Dict[int, np.ndarray] = {}
        if self.fit_mode:
            n = self.policy.params.N
            block = max(2, isqrt(n))
            self._snaps: Dict[int, tuple] = {}
            for j in range(1, n):
                self._stream.append(self.policy.global_std.column(self.prices, j))
                if j == 1 or j % block == 0:
                    self._snaps[j] = self._stream.snapshot()
            self._snap_dates = sorted(self._snaps)

    def _sig_rho4_features(self, i: int, rows: np.ndarray) -> np.ndarray:
        if i < 2:
            # series x_1..x_i has fewer than 2 points: no signature columns
            return np.empty((rows.size, 0))
        if self.fit_mode:
            if i not in self._sig_cache:
                self._sig_load_block(i)
            return self._sig_cache[i]
        while self._stream.count < i:
            self._stream.append(
                self.policy.global_std.column(self.prices, self._stream.count + 1)
            )
        return self._stream.features(rows)

    def _sig_load_block(self, i: int) -> None:
        """Replay forward from the nearest checkpoint at or below date i."""
        self._sig_cache.clear()
        start = max(d for d in self._snap_dates if d <= i)
        self._stream.restore(self._snaps[start])
        self._sig_store(start)
        for j in range(start + 1, i + 1):
            self._stream.append(self.policy.global_std.column(self.prices, j))
            self._sig_store(j)

    def _sig_store(self, j: int) -> None:
        if j < 2:
            return
        rows = self._rows_by_date.get(j)
        if rows is not None and rows.size > 0:
            self._sig_cache[j] = self._stream.features(rows)

    def _sig_design(self, i: int, rows: np.ndarray) -> Tuple[np.ndarray, DateFit]:
        basis = self.basis
        if basis.risk_set.rho == 4:
            feats = self._sig_rho4_features(i, rows)
        else:  # rho3: recompute the short window per date
            dates = _rho3_dates(i, basis.risk_set.M)
            if len(dates) < 2:
                feats = np.empty((rows.size, 0))
            else:
                stream = SignatureStream(rows.size, basis.order)
                for j in dates:
                    stream.append(self.policy.global_std.column(self.prices[rows], j))
                feats = stream.features()
        fit = DateFit() if self.fit_mode else self.policy.fits[i]
        cols = [feats, np.ones((rows.size, 1))]
        if basis.augment:
            m = basis.risk_set.M
            avg = self.prices[rows, i - m + 1 : i + 1].mean(axis=1)
            log_avg = np.log(avg)
            if self.fit_mode:
                mu = float(log_avg.mean())
                sd = float(log_avg.std())
                sd = sd if sd > 1e-12 else 1.0
                fit.avg_stats = (mu, sd)
            else:
                mu, sd = fit.avg_stats
            cols.append(((log_avg - mu) / sd)[:, None])
        return np.hstack(cols), fit

    # ---- recurrent network ----

    def _init_rrnn_rho4(self) -> None:
        a_x, a_xi, b = self.policy.rrnn_weights
        if self.fit_mode:
            # The backward sweep needs dates in reverse; hidden states are
            # cheap (width h), so store one (n_paths, h) slab per date.
            xi = np.zeros((self.n_paths, a_xi.shape[0]))
            self._rrnn_states: Dict[int, np.ndarray] = {}
            for j in range(1, self.policy.params.N):
                x_j = self.policy.global_std.column(self.prices, j)[:, None]
                xi = np.tanh(x_j @ a_x.T + xi @ a_xi.T + b)
                self._rrnn_states[j] = xi
        else:
            # The forward pass only ever needs the current state.
            self._rrnn_xi = np.zeros((self.n_paths, a_xi.shape[0]))
            self._rrnn_date = 0

    def _rrnn_state_at(self, i: int) -> np.ndarray:
        if self.fit_mode:
            return self._rrnn_states[i]
        a_x, a_xi, b = self.policy.rrnn_weights
        while self._rrnn_date < i:
            j = self._rrnn_date + 1
            x_j = self.policy.global_std.column(self.prices, j)[:, None]
            self._rrnn_xi = np.tanh(x_j @ a_x.T + self._rrnn_xi @ a_xi.T + b)
            self._rrnn_date = j
        return self._rrnn_xi

    def _rrnn_design(self, i: int, rows: np.ndarray) -> Tuple[np.ndarray, DateFit]:
        basis = self.basis
        a_x, a_xi, b = self.policy.rrnn_weights
        if basis.risk_set.rho == 4:
            if i < 1:
                xi = np.zeros((rows.size, 0))
            else:
                xi = self._rrnn_state_at(i)[rows]
        else:  # rho3 window restarts per date
            dates = _rho3_dates(i, basis.risk_set.M)
            slices = [
                self.policy.global_std.column(self.prices[rows], j)[:, None]
                for j in dates
            ]
            return (
                rrnn_features(slices, a_x, a_xi, b),
                DateFit() if self.fit_mode else self.policy.fits[i],
            )
        fit = DateFit() if self.fit_mode else self.policy.fits[i]
        out = np.hstack([xi, np.ones((rows.size, 1))])
        return out, fit

    # ---- dispatch ----

    def design(self, i: int, rows: np.ndarray) -> Tuple[np.ndarray, DateFit]:
        """Design matrix at date i for the given row subset."""
        if isinstance(self.basis, (PolyBasisSpec, RffnnSpec)):
            return self._per_date_design(i, rows)
        if isinstance(self.basis, SignatureBasisSpec):
            return self._sig_design(i, rows)
        return self._rrnn_design(i, rows)


def _prepare_policy(
    train: PathBatch, product: ProductSpec, basis: BasisSpec, cfg: RegressionConfig
) -> ExercisePolicy:
    params = train.params
    policy = ExercisePolicy(
        product=product,
        basis=basis,
        params=params,
        cfg=cfg,
        first_date=_first_exercise_date(product),
    )
    if _needs_global_std(basis):
        policy.global_std = GlobalStandardization.fit(train.prices)
    if isinstance(basis, RrnnSpec):
        policy.rrnn_weights = sample_rrnn_weights(basis)
    return policy


def _validate_certificate_grid(params: ModelParams, spec: CertificateSpec) -> None:
    if params.N != spec.n_dates:
        raise ValueError(
            f"certificate has {spec.n_dates} coupon dates but the grid has N={params.N}"
        )
    if not np.isclose(params.T, spec.maturity_years):
        raise ValueError(
            f"grid maturity {params.T} does not match certificate maturity "
            f"{spec.maturity_years}"
        )


def fit_policy(
    train: PathBatch,
    product: ProductSpec,
    basis: BasisSpec,
    cfg: RegressionConfig = RegressionConfig(),
) -> ExercisePolicy:
    """Backward induction over the training batch; returns the frozen policy."""
    if isinstance(product, CertificateSpec):
        return _fit_policy_certificate(train, product, basis, cfg)
    params = train.params
    prices = train.prices
    n = params.N
    first = _first_exercise_date(product)
    if first > n:
        raise ValueError(f"window M={product.M} exceeds the grid (N={n})")
    policy = _prepare_policy(train, product, basis, cfg)
    disc1 = float(np.exp(-params.r * params.dt))

    psi_by_date = {i: exercise_value(product, prices, i) for i in range(first, n + 1)}
    rows_by_date: Dict[int, np.ndarray] = {}
    for i in range(first, n):
        psi = psi_by_date[i]
        rows_by_date[i] = (
            np.flatnonzero(psi > 0.0) if cfg.itm_filter else np.arange(prices.shape[0])
        )
    engine = _FeatureEngine(basis, prices, policy, fit_mode=True, rows_by_date=rows_by_date)

    v = psi_by_date[n].copy()
    for i in range(n - 1, first - 1, -1):
        v *= disc1
        psi = psi_by_date[i]
        rows = rows_by_date[i]
        if rows.size < cfg.min_regression_paths:
            policy.fits[i] = DateFit()
            continue
        x, fit = engine.design(i, rows)
        theta, fit.rank_warning = _solve_regression(x, v[rows], cfg)
        fit.theta = theta
        cont = x @ theta
        psi_rows = psi[rows]
        exercised = rows[(psi_rows > cont) & (psi_rows > 0.0)]
        v[exercised] = psi[exercised]
        policy.fits[i] = fit
    return policy


def price_with_policy(
    batch: PathBatch, product: ProductSpec, policy: ExercisePolicy
) -> PriceEstimate:
    """Forward pass: stop at the first date the frozen policy exercises.

    When the batch starts from a common spot and date 0 is admissible, the
    returned price is the inception value of the dynamic program,
    max(Psi_0, mean of stopped payoffs): exercising immediately is always
    available to the holder, so a noisy date-0 continuation estimate is never
    allowed to discard a known-deterministic exercise value. The clamp is a
    no-op whenever Psi_0 = 0 (at or out of the money at inception).
    """
    if isinstance(product, CertificateSpec):
        return _price_certificate_with_policy(batch, product, policy)
    if not isinstance(policy.product, OptionSpec) or policy.product != product:
        raise ValueError("policy was fitted for a different product")
    params = policy.params
    prices = batch.prices
    if prices.shape[1] != params.N + 1:
        raise ValueError("batch grid does not match the policy's model")
    n = params.N
    first = policy.first_date
    engine = _FeatureEngine(policy.basis, prices, policy, fit_mode=False)
    value = np.zeros(prices.shape[0])
    alive = np.ones(prices.shape[0], dtype=bool)
    for i in range(first, n):
        psi = exercise_value(product, prices, i)
        fit = policy.fits.get(i)
        if fit is None or fit.theta is None:
            continue
        rows = np.flatnonzero(alive & (psi > 0.0))
        if rows.size == 0:
            continue
        x, _ = engine.design(i, rows)
        cont = x @ fit.theta
        exercised = rows[psi[rows] > cont]
        value[exercised] = psi[exercised] * discount_factor(params, 0, i)
        alive[exercised] = False
    psi_n = exercise_value(product, prices, n)
    value[alive] = psi_n[alive] * discount_factor(params, 0, n)
    price = float(value.mean())
    n_paths = value.size
    se = float(value.std(ddof=1) / np.sqrt(n_paths)) if n_paths > 1 else 0.0
    if first == 0 and np.ptp(prices[:, 0]) == 0.0:
        psi0 = float(exercise_value(product, prices[:1], 0)[0])
        if psi0 > price:
            price, se = psi0, 0.0
    return PriceEstimate(
        price=price, std_error=se, n_runs=1, per_run=(price,), n_paths=n_paths
    )


def _fit_policy_certificate(
    train: PathBatch, spec: CertificateSpec, basis: BasisSpec, cfg: RegressionConfig
) -> ExercisePolicy:
    """Issuer recursion V_i = gamma_i + min(1, continuation); no ITM filter."""
    params = train.params
    _validate_certificate_grid(params, spec)
    prices = train.prices
    n = params.N
    policy = _prepare_policy(train, spec, basis, cfg)
    disc1 = float(np.exp(-params.r * params.dt))
    all_rows = np.arange(prices.shape[0])
    rows_by_date = {i: all_rows for i in range(1, n)}
    engine = _FeatureEngine(basis, prices, policy, fit_mode=True, rows_by_date=rows_by_date)
    gamma = certificate_coupons(spec, prices)
    v = gamma[:, n - 1] + certificate_redemption(spec, prices, n)
    for i in range(n - 1, 0, -1):
        v *= disc1
        if prices.shape[0] < cfg.min_regression_paths:
            policy.fits[i] = DateFit()
            v += gamma[:, i - 1]
            continue
        x, fit = engine.design(i, all_rows)
        theta, fit.rank_warning = _solve_regression(x, v, cfg)
        fit.theta = theta
        cont = x @ theta
        called = cont > 1.0  # issuer redeems the principal when continuing costs more
        v = np.where(called, 1.0, v)
        v += gamma[:, i - 1]
        policy.fits[i] = fit
    return policy


def _price_certificate_with_policy(
    batch: PathBatch, spec: CertificateSpec, policy: ExercisePolicy
) -> PriceEstimate:
    if policy.product != spec:
        raise ValueError("policy was fitted for a different certificate")
    params = policy.params
    prices = batch.prices
    _validate_certificate_grid(params, spec)
    n = params.N
    engine = _FeatureEngine(policy.basis, prices, policy, fit_mode=False)
    gamma = certificate_coupons(spec, prices)
    value = np.zeros(prices.shape[0])
    alive = np.ones(prices.shape[0], dtype=bool)
    for i in range(1, n):
        df = discount_factor(params, 0, i)
        value[alive] += gamma[alive, i - 1] * df
        fit = policy.fits.get(i)
        if fit is None or fit.theta is None:
            continue
        rows = np.flatnonzero(alive)
        if rows.size == 0:
            break
        x, _ = engine.design(i, rows)
        called = rows[x @ fit.theta > 1.0]
        value[called] += discount_factor(params, 0, i)
        alive[called] = False
    df_n = discount_factor(params, 0, n)
    terminal = gamma[:, n - 1] + certificate_redemption(spec, prices, n)
    value[alive] += terminal[alive] * df_n
    price = float(value.mean())
    n_paths = value.size
    se = float(value.std(ddof=1) / np.sqrt(n_paths)) if n_paths > 1 else 0.0
    return PriceEstimate(
        price=price, std_error=se, n_runs=1, per_run=(price,), n_paths=n_paths
    )


def price_certificate_non_callable(batch: PathBatch, spec: CertificateSpec) -> PriceEstimate:
    """Hold-to-maturity value of the same coupon stream (no issuer call)."""
    params = batch.params
    _validate_certificate_grid(params, spec)
    prices = batch.prices
    n = params.N
    gamma = certificate_coupons(spec, prices)
    value = np.zeros(prices.shape[0])
    for i in range(1, n):
        value += gamma[:, i - 1] * discount_factor(params, 0, i)
    value += (gamma[:, n - 1] + certificate_redemption(spec, prices, n)) * discount_factor(
        params, 0, n
    )
    price = float(value.mean())
    se = float(value.std(ddof=1) / np.sqrt(value.size)) if value.size > 1 else 0.0
    return PriceEstimate(
        price=price, std_error=se, n_runs=1, per_run=(price,), n_paths=value.size
    )


def exercise_fraction_at_first_date(policy: ExercisePolicy, batch: PathBatch) -> float:
    """Fraction of paths the policy exercises at the first admissible date.

    Used by the sensitivity module to detect exercise at inception; the
    denominator is the whole batch.
    """
    product = policy.product
    if not isinstance(product, OptionSpec):
        raise ValueError("the inception probe is defined for options")
    prices = batch.prices
    i = policy.first_date
    psi = exercise_value(product, prices, i)
    fit = policy.fits.get(i)
    if fit is None or fit.theta is None:
        return 0.0
    rows = np.flatnonzero(psi > 0.0)
    if rows.size == 0:
        return 0.0
    engine = _FeatureEngine(policy.basis, prices, policy, fit_mode=False)
    x, _ = engine.design(i, rows)
    cont = x @ fit.theta
    return float(np.count_nonzero(psi[rows] > cont) / prices.shape[0])


def _thread_limiter():
    try:
        from threadpoolctl import threadpool_limits

        return threadpool_limits(limits=1)
    except ImportError:  # pragma: no cover
        import contextlib

        return contextlib.nullcontext()


def run_experiment(
    product: ProductSpec,
    basis: BasisSpec,
    params: ModelParams,
    cfg: RegressionConfig = RegressionConfig(),
    n_runs: int = 10,
    n_train: int = 80_000,
    n_eval: int = 320_000,
    seed: int = 0,
    antithetic: bool = False,
) -> PriceEstimate:
    """n_runs independent fit+price cycles with seeds derived from `seed`.

    BLAS thread pools are pinned to one thread for bitwise reproducibility
    independent of the ambient thread count.
    """
    if n_runs < 1:
        raise ValueError("n_runs must be at least 1")
    run_prices: List[float] = []
    path_ses: List[float] = []
    algo_times: List[float] = []
    path_times: List[float] = []
    with _thread_limiter():
        for k in range(n_runs):
            t0 = time.perf_counter()
            train = simulate_paths(
                params, n_train, np.random.SeedSequence(seed, spawn_key=(k, 0)), antithetic
            )
            ev = simulate_paths(
                params, n_eval, np.random.SeedSequence(seed, spawn_key=(k, 1)), antithetic
            )
            t1 = time.perf_counter()
            policy = fit_policy(train, product, basis, cfg)
            est = price_with_policy(ev, product, policy)
            t2 = time.perf_counter()
            run_prices.append(est.price)
            path_ses.append(est.std_error)
            path_times.append(t1 - t0)
            algo_times.append(t2 - t1)
    price = float(np.mean(run_prices))
    if n_runs > 1:
        se = float(np.std(run_prices, ddof=1) / np.sqrt(n_runs))
    else:
        se = path_ses[0]
    return PriceEstimate(
        price=price,
        std_error=se,
        n_runs=n_runs,
        per_run=tuple(run_prices),
        n_paths=n_eval,
        time_algo_s=float(np.median(algo_times)),
        time_paths_s=float(np.median(path_times)),
    )
