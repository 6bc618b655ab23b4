"""Randomized feed-forward / recurrent bases: frozen weights, feature maps."""

import numpy as np
import pytest

from amcpricer import RffnnSpec, RiskSetSpec, RrnnSpec, rffnn_features, rrnn_features
from amcpricer.basis_random_nets import (
    leaky_relu,
    rrnn_hidden_states,
    sample_rffnn_weights,
    sample_rrnn_weights,
)


def test_leaky_relu():
    x = np.array([-2.0, 0.0, 3.0])
    assert np.allclose(leaky_relu(x, 0.01), [-0.02, 0.0, 3.0])


def test_rffnn_weights_deterministic():
    spec = RffnnSpec(risk_set=RiskSetSpec(rho=2, M=2), hidden=8, seed=5)
    a1, b1 = sample_rffnn_weights(spec, 3, date_index=7)
    a2, b2 = sample_rffnn_weights(spec, 3, date_index=7)
    assert np.array_equal(a1, a2) and np.array_equal(b1, b2)
    a3, _ = sample_rffnn_weights(spec, 3, date_index=8)
    assert not np.array_equal(a1, a3)


def test_rffnn_feature_map(rng):
    spec = RffnnSpec(risk_set=RiskSetSpec(rho=2, M=2), hidden=5, alpha=0.01)
    a, b = sample_rffnn_weights(spec, 2, date_index=0)
    x = rng.normal(size=(20, 2))
    out = rffnn_features(x, a, b, spec.alpha)
    assert out.shape == (20, 6)
    assert np.all(out[:, -1] == 1.0)
    assert np.allclose(out[:, :-1], leaky_relu(x @ a.T + b, spec.alpha))


def test_rffnn_width_mismatch(rng):
    spec = RffnnSpec(risk_set=RiskSetSpec(rho=2, M=2), hidden=5)
    a, b = sample_rffnn_weights(spec, 2, date_index=0)
    with pytest.raises(ValueError):
        rffnn_features(rng.normal(size=(4, 3)), a, b, 0.01)


def test_rrnn_requires_streamed_risk_set():
    with pytest.raises(ValueError):
        RrnnSpec(risk_set=RiskSetSpec(rho=2, M=2))


def test_rrnn_weights_shapes_and_determinism():
    spec = RrnnSpec(risk_set=RiskSetSpec(rho=3, M=5), hidden=6, seed=3)
    a_x, a_xi, b = sample_rrnn_weights(spec)
    assert a_x.shape == (6, 1)
    assert a_xi.shape == (6, 6)
    assert b.shape == (6,)
    a_x2, _, _ = sample_rrnn_weights(spec)
    assert np.array_equal(a_x, a_x2)


def test_rrnn_recursion_matches_manual_loop(rng):
    spec = RrnnSpec(risk_set=RiskSetSpec(rho=3, M=4), hidden=4, seed=1)
    a_x, a_xi, b = sample_rrnn_weights(spec)
    slices = [rng.normal(size=(7, 1)) for _ in range(3)]
    xi = np.zeros((7, 4))
    for x_j in slices:
        xi = np.tanh(x_j @ a_x.T + xi @ a_xi.T + b)
    assert np.allclose(rrnn_hidden_states(slices, a_x, a_xi, b), xi)


def test_rrnn_states_bounded(rng):
    spec = RrnnSpec(risk_set=RiskSetSpec(rho=4, M=1), hidden=10, seed=2)
    a_x, a_xi, b = sample_rrnn_weights(spec)
    slices = [rng.normal(size=(50, 1)) for _ in range(30)]
    xi = rrnn_hidden_states(slices, a_x, a_xi, b)
    assert np.all(np.abs(xi) < 1.0)


def test_rrnn_feature_matrix_has_constant(rng):
    spec = RrnnSpec(risk_set=RiskSetSpec(rho=3, M=3), hidden=4)
    a_x, a_xi, b = sample_rrnn_weights(spec)
    out = rrnn_features([rng.normal(size=(9, 1))], a_x, a_xi, b)
    assert out.shape == (9, 5)
    assert np.all(out[:, -1] == 1.0)


def test_rrnn_empty_stream_rejected():
    spec = RrnnSpec(risk_set=RiskSetSpec(rho=3, M=3), hidden=4)
    a_x, a_xi, b = sample_rrnn_weights(spec)
    with pytest.raises(ValueError):
        rrnn_hidden_states([], a_x, a_xi, b)


def test_spec_validation():
    with pytest.raises(ValueError):
        RffnnSpec(risk_set=RiskSetSpec(rho=2, M=2), hidden=0)
    with pytest.raises(ValueError):
        RffnnSpec(risk_set=RiskSetSpec(rho=2, M=2), weight_std=0.0)
    with pytest.raises(ValueError):
        RrnnSpec(risk_set=RiskSetSpec(rho=3, M=3), hidden=0)
