"""Truncated signatures: algebraic identities, closed forms, streaming."""

import math

import numpy as np
import pytest

from amcpricer import (
    GlobalStandardization,
    PiecewiseLinearPath,
    RiskSetSpec,
    SignatureBasisSpec,
    SignatureStream,
    TruncatedSignature,
    lead_lag,
    sig_feature_dim,
    signature,
    signature_features,
    time_join,
)
from amcpricer.basis_signature import backend_name, chen_product, get_kernel


def random_path(rng, n_vertices=8, dim=3):
    return PiecewiseLinearPath(rng.normal(size=(n_vertices, dim)))


@pytest.mark.parametrize("order,expected", [(1, 3), (2, 12), (3, 39), (4, 120), (5, 363)])
def test_feature_dimensions(order, expected):
    assert sig_feature_dim(3, order) == expected


def test_linear_path_closed_form():
    """One segment: level k equals increment^(x)k / k!."""
    a = np.array([0.3, -1.1, 0.7])
    path = PiecewiseLinearPath(np.vstack([np.zeros(3), a]))
    sig = signature(path, 4)
    tensor = np.array([1.0])
    for k in range(1, 5):
        tensor = np.multiply.outer(tensor, a).ravel()
        assert np.allclose(sig.levels[k - 1], tensor / math.factorial(k), atol=1e-12)


def test_level1_is_total_increment(rng):
    path = random_path(rng)
    sig = signature(path, 3)
    assert np.allclose(sig.levels[0], path.vertices[-1] - path.vertices[0], atol=1e-12)


def test_chen_identity(rng):
    left = random_path(rng, 6)
    right = random_path(rng, 5)
    whole = left.concat(right)
    glued = chen_product(signature(left, 5), signature(right, 5))
    direct = signature(whole, 5)
    for a, b in zip(glued.levels, direct.levels):
        assert np.allclose(a, b, atol=1e-10)


def test_reversal_inverse(rng):
    """Signature of path followed by its reversal is the identity."""
    path = random_path(rng, 7)
    prod = chen_product(signature(path, 5), signature(path.reversed(), 5))
    for k, level in enumerate(prod.levels, start=1):
        assert np.max(np.abs(level)) < 1e-10, f"level {k} not annihilated"


def test_flat_round_trip(rng):
    sig = signature(random_path(rng), 4)
    again = TruncatedSignature.from_flat(sig.flat(), sig.dim, sig.order)
    for a, b in zip(sig.levels, again.levels):
        assert np.array_equal(a, b)
    assert sig.features().size == sig_feature_dim(3, 4)


def test_lead_lag_shape_and_vertices():
    series = np.array([1.0, 3.0, 2.0])
    path = lead_lag(series)
    expected = np.array(
        [[1.0, 1.0], [3.0, 1.0], [3.0, 3.0], [2.0, 3.0], [2.0, 2.0]]
    )
    assert np.allclose(path.vertices, expected)


def test_lead_lag_quadratic_variation(rng):
    """The lead-lag signature area encodes the realized quadratic variation."""
    series = rng.normal(size=20)
    sig = signature(lead_lag(series), 2)
    lev2 = sig.levels[1].reshape(2, 2)
    qv = float(np.sum(np.diff(series) ** 2))
    assert np.isclose(lev2[0, 1] - lev2[1, 0], qv, atol=1e-10)


def test_time_join_structure():
    path = lead_lag(np.array([2.0, 5.0]))
    tj = time_join(path)
    assert tj.dim == 3
    assert np.allclose(tj.vertices[0], 0.0)
    assert np.allclose(tj.vertices[1], [0.0, 2.0, 2.0])
    assert np.allclose(tj.vertices[-1][0], 1.0)
    assert np.all(np.diff(tj.vertices[:, 0]) >= 0.0)


def test_stream_matches_batch_signature(rng):
    """Incremental stream equals signature(time_join(lead_lag(series)))."""
    series = rng.normal(size=(4, 6))
    order = 4
    stream = SignatureStream(4, order)
    for j in range(6):
        stream.append(series[:, j])
    feats = stream.features()
    for p in range(4):
        direct = signature(time_join(lead_lag(series[p])), order).features()
        assert np.allclose(feats[p], direct, atol=1e-10)


def test_stream_row_subset(rng):
    series = rng.normal(size=(5, 4))
    stream = SignatureStream(5, 3)
    for j in range(4):
        stream.append(series[:, j])
    rows = np.array([0, 3])
    assert np.allclose(stream.features(rows), stream.features()[rows])


def test_stream_snapshot_restore(rng):
    series = rng.normal(size=(3, 5))
    stream = SignatureStream(3, 3)
    for j in range(3):
        stream.append(series[:, j])
    snap = stream.snapshot()
    ref = stream.features().copy()
    stream.append(series[:, 3])
    stream.restore(snap)
    assert np.allclose(stream.features(), ref)
    assert stream.count == 3


def test_backends_agree(rng):
    if backend_name() != "compiled":
        pytest.skip("compiled kernel not built")
    path = random_path(rng, 9)
    pure = signature(path, 5, backend="pure")
    comp = signature(path, 5, backend="compiled")
    for a, b in zip(pure.levels, comp.levels):
        assert np.allclose(a, b, atol=1e-12)


def test_get_kernel_unknown():
    with pytest.raises(ValueError):
        get_kernel("tensorflow")


def test_signature_features_design(rng):
    prices = 100.0 * np.exp(np.cumsum(rng.normal(0, 0.02, size=(40, 8)), axis=1))
    stats = GlobalStandardization.fit(prices)
    spec = RiskSetSpec(rho=3, M=4)
    out = signature_features(prices, 5, spec, order=3, stats=stats)
    assert out.shape == (40, sig_feature_dim(3, 3) + 1)
    assert np.all(out[:, -1] == 1.0)
    aug = signature_features(prices, 5, spec, order=3, stats=stats, augment=True)
    assert aug.shape == (40, sig_feature_dim(3, 3) + 2)


def test_signature_spec_validation():
    with pytest.raises(ValueError):
        SignatureBasisSpec(risk_set=RiskSetSpec(rho=2, M=3))
    with pytest.raises(ValueError):
        SignatureBasisSpec(risk_set=RiskSetSpec(rho=3, M=3), order=0)
