"""Reference pricers: tree vs closed forms, Greeks, degenerate settings."""

import numpy as np
import pytest

from amcpricer import (
    ModelParams,
    TreeSpec,
    bs_closed_form,
    tree_greeks,
    tree_price_american,
    tree_price_european,
)


def test_put_call_parity(params):
    call = bs_closed_form(params, 100.0, "call")
    put = bs_closed_form(params, 100.0, "put")
    fwd = params.s0 * np.exp(-params.q * params.T) - 100.0 * np.exp(
        -params.r * params.T
    )
    assert call - put == pytest.approx(fwd, abs=1e-12)


def test_bs_known_value():
    p = ModelParams(s0=100.0, r=0.05, q=0.0, sigma=0.2, T=1.0, N=1)
    # classic textbook configuration
    assert bs_closed_form(p, 100.0, "call") == pytest.approx(10.4506, abs=2e-4)


def test_tree_converges_to_european(params):
    spec = TreeSpec(steps=4000, params=params, option="put", strike=100.0)
    assert tree_price_european(spec) == pytest.approx(
        bs_closed_form(params, 100.0, "put"), abs=2e-3
    )


def test_american_dominates_european(params):
    spec = TreeSpec(steps=1000, params=params, option="put", strike=100.0)
    eu = tree_price_european(spec)
    am = tree_price_american(spec)
    assert am >= eu
    assert am > eu + 1e-4  # r > 0 makes early exercise on a put valuable


def test_american_call_no_dividends_equals_european(params):
    spec = TreeSpec(steps=2000, params=params, option="call", strike=100.0)
    assert tree_price_american(spec) == pytest.approx(
        tree_price_european(spec), rel=1e-12
    )


def test_intrinsic_floor(params):
    spec = TreeSpec(steps=500, params=params, option="put", strike=140.0)
    assert tree_price_american(spec) >= 40.0


def test_zero_vol_put():
    p = ModelParams(s0=80.0, r=0.05, q=0.0, sigma=0.0, T=1.0, N=1)
    spec = TreeSpec(steps=100, params=p, option="put", strike=100.0)
    # immediate exercise beats any waiting on the deterministic path
    assert tree_price_american(spec) == pytest.approx(20.0)


def test_tree_greeks_match_bs_for_european_call(params):
    # American call with q = 0 never exercises early, so BS Greeks apply
    from scipy.special import ndtr

    spec = TreeSpec(steps=2000, params=params, option="call", strike=100.0)
    delta, gamma = tree_greeks(spec, bump=0.02)
    s0, r, sig, t = params.s0, params.r, params.sigma, params.T
    d1 = (np.log(s0 / 100.0) + (r + 0.5 * sig**2) * t) / (sig * np.sqrt(t))
    bs_delta = float(ndtr(d1))
    bs_gamma = float(
        np.exp(-0.5 * d1 * d1) / np.sqrt(2 * np.pi) / (s0 * sig * np.sqrt(t))
    )
    assert delta == pytest.approx(bs_delta, abs=2e-3)
    assert gamma == pytest.approx(bs_gamma, abs=1e-3)


def test_tree_spec_validation(params):
    with pytest.raises(ValueError):
        TreeSpec(steps=0, params=params, option="put", strike=100.0)
    with pytest.raises(ValueError):
        TreeSpec(steps=10, params=params, option="straddle", strike=100.0)
    with pytest.raises(ValueError):
        TreeSpec(steps=10, params=params, option="put", strike=-1.0)
    with pytest.raises(ValueError):
        bs_closed_form(params, 100.0, "digital")


def test_monotone_in_strike(params):
    prices = [
        tree_price_american(
            TreeSpec(steps=400, params=params, option="put", strike=k)
        )
        for k in (90.0, 100.0, 110.0)
    ]
    assert prices[0] < prices[1] < prices[2]
