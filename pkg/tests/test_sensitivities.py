"""Chebyshev and randomized-spot Delta/Gamma estimators."""

import numpy as np
import pytest

from amcpricer import (
    ChebGreeksConfig,
    ModelParams,
    OptionSpec,
    PolyBasisSpec,
    PriceEstimate,
    RiskSetSpec,
    WindowSpec,
    chebyshev_greeks,
    make_lsmc_spot_pricer,
    regression_greeks,
    run_experiment,
)
from amcpricer.sensitivities import cheb_nodes


def put(M, strike):
    return OptionSpec(kind="asian_fixed", window=WindowSpec(M=M), strike=strike)


def poly(rho, M):
    return PolyBasisSpec(risk_set=RiskSetSpec(rho=rho, M=M), degree=2)


def test_cheb_nodes_layout():
    pts = cheb_nodes(90.0, 110.0, 7)
    assert pts.shape == (7,)
    assert np.all(np.diff(pts) > 0)
    assert pts[0] > 90.0 and pts[-1] < 110.0
    # first-kind points are symmetric about the midpoint
    assert np.allclose(pts + pts[::-1], 200.0)
    two = cheb_nodes(-1.0, 1.0, 2)
    assert np.allclose(two, [-np.sqrt(2) / 2, np.sqrt(2) / 2])


def test_exact_on_polynomial_pricers():
    # a 7-node fit reproduces any cubic exactly, so the analytic
    # derivatives must match to rounding
    def cubic(s):
        return 0.5 * s**3 - 2.0 * s**2 + 3.0 * s - 7.0

    rep = chebyshev_greeks(cubic, 100.0, ChebGreeksConfig(rel_width=0.10))
    assert rep.delta == pytest.approx(1.5 * 100.0**2 - 4.0 * 100.0 + 3.0, rel=1e-9)
    assert rep.gamma == pytest.approx(3.0 * 100.0 - 4.0, rel=1e-9)

    linear = chebyshev_greeks(lambda s: s, 100.0)
    assert linear.delta == pytest.approx(1.0, abs=1e-9)
    assert linear.gamma == pytest.approx(0.0, abs=1e-9)

    quad = chebyshev_greeks(lambda s: (s - 100.0) ** 2, 100.0)
    assert quad.delta == pytest.approx(0.0, abs=1e-7)
    assert quad.gamma == pytest.approx(2.0, rel=1e-9)
    assert quad.method == "chebyshev"


def test_interval_shifts_right_of_boundary():
    # the probe flips at 95, the expansion point 100 sits right of it, so
    # the fit interval becomes [boundary, boundary + width]
    probe = lambda s: 1.0 if s < 95.0 else 0.0
    cfg = ChebGreeksConfig(rel_width=0.20)
    rep = chebyshev_greeks(lambda s: s * s, 100.0, cfg, probe=probe)
    assert rep.diagnostics["shift_applied"] is True
    assert rep.diagnostics["boundary"] == pytest.approx(95.0, abs=0.2)
    a, b = rep.diagnostics["interval"]
    assert a == pytest.approx(95.0, abs=0.2)
    assert b == pytest.approx(a + 20.0, abs=1e-9)
    # the quadratic is global, so the shifted fit still nails the Greeks
    assert rep.delta == pytest.approx(200.0, rel=1e-9)
    assert rep.gamma == pytest.approx(2.0, rel=1e-9)


def test_interval_splits_on_boundary_at_spot():
    probe = lambda s: 1.0 if s < 100.0 else 0.0
    cfg = ChebGreeksConfig(rel_width=0.20)
    rep = chebyshev_greeks(lambda s: abs(s - 100.0), 100.0, cfg, probe=probe)
    a, b = rep.diagnostics["interval"]
    assert b == pytest.approx(100.0, abs=0.2)
    assert a == pytest.approx(b - 20.0, abs=1e-9)
    right = rep.diagnostics["right_side"]
    lo, hi = right["interval"]
    assert lo == pytest.approx(100.0, abs=0.2)
    # each one-sided fit sees a straight line: slopes -1 and +1
    assert rep.delta == pytest.approx(-1.0, abs=1e-6)
    assert right["delta"] == pytest.approx(1.0, abs=1e-6)


def test_no_shift_when_probe_is_uniform():
    rep = chebyshev_greeks(
        lambda s: s, 100.0, ChebGreeksConfig(rel_width=0.10), probe=lambda s: 1.0
    )
    assert rep.diagnostics["shift_applied"] is False
    a, b = rep.diagnostics["interval"]
    assert (a, b) == (pytest.approx(95.0), pytest.approx(105.0))


def test_per_run_replay_of_the_fit():
    # per-run prices carry constant offsets; derivatives kill the offsets,
    # so each replayed fit reports the same Greeks as the mean fit
    def pricer(s):
        f = 0.01 * (s - 100.0) ** 2 + 0.5 * s
        return PriceEstimate(
            price=f, std_error=0.1, n_runs=2, per_run=(f + 0.3, f - 0.3), n_paths=100
        )

    rep = chebyshev_greeks(pricer, 100.0, ChebGreeksConfig(rel_width=0.10))
    d_runs = rep.diagnostics["delta_runs"]
    g_runs = rep.diagnostics["gamma_runs"]
    assert len(d_runs) == len(g_runs) == 2
    assert d_runs[0] == pytest.approx(rep.delta, rel=1e-9)
    assert g_runs[1] == pytest.approx(rep.gamma, rel=1e-6)
    interp = rep.diagnostics["interpolant"]
    assert np.allclose(interp.node_errors, 0.1)


def test_spot_pricer_reuses_seeds():
    pricer, probe = make_lsmc_spot_pricer(
        put(1, 100.0), poly(2, 1), ModelParams(), n_runs=2, n_paths=4000, seed=21
    )
    a = pricer(100.0)
    b = pricer(100.0)
    assert a.per_run == b.per_run
    frac = probe(100.0)
    assert 0.0 <= frac <= 1.0
    # moving the spot under common random numbers moves the price smoothly
    up = pricer(101.0)
    assert abs(up.price - a.price) < 1.0


def test_spot_pricer_agrees_with_run_experiment():
    params = ModelParams()
    pricer, _ = make_lsmc_spot_pricer(
        put(2, 100.0), poly(2, 2), params, n_runs=2, n_paths=5000, seed=13
    )
    direct = run_experiment(
        put(2, 100.0), poly(2, 2), params, n_runs=2, n_train=1000, n_eval=4000, seed=13
    )
    assert pricer(params.s0).per_run == direct.per_run


def test_regression_greeks_near_european_values():
    # short-dated M=1 put: the American Delta/Gamma sit close to the
    # European ones, good enough for a one-run sanity band
    params = ModelParams()
    rep = regression_greeks(
        put(1, 100.0), poly(2, 1), params, epsilon=0.05, n_paths=80_000, n_runs=1, seed=2
    )
    assert rep.method == "regression"
    assert rep.delta == pytest.approx(-0.46, abs=0.06)
    assert rep.gamma == pytest.approx(0.030, abs=0.015)
    assert rep.diagnostics["price_at_s0"] > 0.0
    assert len(rep.diagnostics["delta_runs"]) == 1


def test_regression_greeks_validation():
    with pytest.raises(ValueError):
        regression_greeks(put(1, 100.0), poly(2, 1), ModelParams(), epsilon=0.0)
    with pytest.raises(ValueError):
        regression_greeks(put(1, 100.0), poly(2, 1), ModelParams(), epsilon=1.5)


def test_config_validation():
    with pytest.raises(ValueError):
        ChebGreeksConfig(n_nodes=1)
    with pytest.raises(ValueError):
        ChebGreeksConfig(rel_width=0.0)
