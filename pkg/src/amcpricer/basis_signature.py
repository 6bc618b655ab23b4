"""Lead-lag / time-join path transforms and truncated-signature bases.

The signature of a piecewise-linear path is computed exactly: a linear
segment with increment v has truncated signature (1, v, v(x)v/2!, ...,
v^(x)n/n!) and segments combine by Chen's identity (truncated tensor
product). A batched incremental form (SignatureStream) feeds the pricing
engine; the hot kernel is the compiled extension _sigcore when available,
with a bitwise-identical numpy fallback (_sigpure). Set AMCPRICER_PURE_SIG=1
to force the fallback.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from itertools import product as _iterproduct
from typing import List, Optional

import numpy as np

from .features import GlobalStandardization, RiskSetSpec

from . import _sigpure

try:  # pragma: no cover - exercised implicitly by backend tests
    from . import _sigcore
except ImportError:  # pragma: no cover
    _sigcore = None

_FORCE_PURE = os.environ.get("AMCPRICER_PURE_SIG", "") not in ("", "0")
_kernel = _sigpure if (_FORCE_PURE or _sigcore is None) else _sigcore

SIG_ORDER_CAP = 6
TIME_JOIN_DIM = 3


def backend_name() -> str:
    """'compiled' when the Cython kernel is active, else 'pure'."""
    return "pure" if _kernel is _sigpure else "compiled"


def get_kernel(backend: Optional[str] = None):
    """Kernel module by name; None picks the import-time selection."""
    if backend is None:
        return _kernel
    if backend == "pure":
        return _sigpure
    if backend == "compiled":
        if _sigcore is None:
            raise RuntimeError("compiled signature kernel is not available")
        return _sigcore
    raise ValueError(f"unknown backend {backend!r}")


def sig_feature_dim(dim: int, order: int) -> int:
    """Length of the emitted feature vector: sum_{k=1..n} dim^k (constant dropped)."""
    return _sigpure.sig_length(dim, order) - 1


@dataclass(frozen=True)
class SignatureBasisSpec:
    """Truncated-signature basis on a streamed risk set (rho3 or rho4).

    order is the truncation level n; augment appends the standardized log
    moving-window average as one extra column.
    """

    risk_set: RiskSetSpec
    order: int = 5
    augment: bool = False

    def __post_init__(self) -> None:
        if self.order < 1 or self.order > SIG_ORDER_CAP:
            raise ValueError(f"order must be in 1..{SIG_ORDER_CAP}")
        if self.risk_set.rho not in (3, 4):
            raise ValueError("signature bases are defined for rho3/rho4 only")

    @property
    def family(self) -> str:
        return "signature"


@dataclass(frozen=True)
class PiecewiseLinearPath:
    """Ordered vertices in R^dim; consecutive vertices define the segments."""

    vertices: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.vertices, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] < 2:
            raise ValueError("a path needs at least 2 vertices in R^dim")
        object.__setattr__(self, "vertices", v)

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    @property
    def n_segments(self) -> int:
        return self.vertices.shape[0] - 1

    def reversed(self) -> "PiecewiseLinearPath":
        return PiecewiseLinearPath(self.vertices[::-1].copy())

    def concat(self, other: "PiecewiseLinearPath") -> "PiecewiseLinearPath":
        """Concatenation after translating `other` to start at this path's end."""
        if other.dim != self.dim:
            raise ValueError("dimension mismatch")
        shifted = other.vertices - other.vertices[0] + self.vertices[-1]
        return PiecewiseLinearPath(np.vstack([self.vertices, shifted[1:]]))


@dataclass
class TruncatedSignature:
    """Truncated signature: levels[k-1] is the flat level-k tensor (dim^k,)."""

    levels: List[np.ndarray]
    dim: int
    order: int

    def features(self) -> np.ndarray:
        """Concatenated levels 1..n (the constant level 0 is dropped)."""
        return np.concatenate(self.levels)

    @classmethod
    def from_flat(cls, flat: np.ndarray, dim: int, order: int) -> "TruncatedSignature":
        offs = _sigpure.level_offsets(dim, order)
        levels = [flat[offs[k] : offs[k + 1]].copy() for k in range(1, order + 1)]
        return cls(levels=levels, dim=dim, order=order)

    def flat(self) -> np.ndarray:
        """Flat vector including the level-0 constant 1."""
        return np.concatenate([np.array([1.0])] + self.levels)


def lead_lag(series: np.ndarray) -> PiecewiseLinearPath:
    """Standard 2-D lead-lag embedding of a scalar series.

    Vertices: (s_0,s_0), then for each new observation first the lead moves,
    (s_{j+1}, s_j), then the lag catches up, (s_{j+1}, s_{j+1});
    2(len-1)+1 vertices in total.
    """
    s = np.asarray(series, dtype=np.float64)
    if s.ndim != 1 or s.size < 2:
        raise ValueError("lead-lag needs a 1-D series with at least 2 points")
    n = s.size
    verts = np.empty((2 * n - 1, 2), dtype=np.float64)
    verts[0] = s[0], s[0]
    verts[1::2, 0] = s[1:]
    verts[1::2, 1] = s[:-1]
    verts[2::2, 0] = s[1:]
    verts[2::2, 1] = s[1:]
    return PiecewiseLinearPath(verts)


def time_join(path2d: PiecewiseLinearPath) -> PiecewiseLinearPath:
    """Prepend a monotone time coordinate plus an initial stub segment.

    Vertex k of the input receives time tau_k = k/(V-1), and the output opens
    with the stub (0,0,0) -> (0, lead_0, lag_0) so the signature determines
    the path uniquely.
    """
    if path2d.dim != 2:
        raise ValueError("time_join expects a 2-D path")
    v = path2d.vertices
    n = v.shape[0]
    out = np.empty((n + 1, 3), dtype=np.float64)
    out[0] = 0.0
    out[1:, 0] = np.arange(n) / (n - 1)
    out[1:, 1:] = v
    return PiecewiseLinearPath(out)


def signature(path: PiecewiseLinearPath, order: int, backend: Optional[str] = None) -> TruncatedSignature:
    """Truncated signature of a piecewise-linear path, exact by construction."""
    if order < 1:
        raise ValueError("signature order must be at least 1")
    if order > SIG_ORDER_CAP:
        raise ValueError(f"signature order {order} exceeds cap {SIG_ORDER_CAP}")
    kern = get_kernel(backend)
    dim = path.dim
    state = kern.identity_state(1, dim, order)
    incs = np.diff(path.vertices, axis=0)
    for j in range(incs.shape[0]):
        kern.chen_extend(state, np.ascontiguousarray(incs[j : j + 1]), dim, order)
    return TruncatedSignature.from_flat(state[0], dim, order)


def chen_product(a: TruncatedSignature, b: TruncatedSignature) -> TruncatedSignature:
    """Truncated tensor-algebra product; equals the signature of the concatenation."""
    if a.dim != b.dim or a.order != b.order:
        raise ValueError("signatures must share dim and order")
    dim, order = a.dim, a.order
    fa = a.flat()
    fb = b.flat()
    offs = _sigpure.level_offsets(dim, order)
    out = np.zeros_like(fa)
    out[0] = 1.0
    for k in range(1, order + 1):
        acc = np.zeros(dim**k)
        for s in range(k + 1):
            left = fa[offs[s] : offs[s + 1]]
            right = fb[offs[k - s] : offs[k - s + 1]]
            acc += np.multiply.outer(left, right).ravel()
        out[offs[k] : offs[k + 1]] = acc
    return TruncatedSignature.from_flat(out, dim, order)


def time_letter_counts(dim: int, order: int) -> np.ndarray:
    """Number of occurrences of letter 0 in each word, over the flat layout."""
    counts = [np.zeros(1, dtype=np.int64)]
    for k in range(1, order + 1):
        counts.append(
            np.array(
                [w.count(0) for w in _iterproduct(range(dim), repeat=k)],
                dtype=np.int64,
            )
        )
    return np.concatenate(counts)


class SignatureStream:
    """Incremental batched signature of the time-joined lead-lag path.

    Feed standardized observations one date at a time with append(); the
    internal state lives in unnormalized vertex time (u_k = k) and
    features() rescales exactly to the per-date [0,1] time normalization
    using the word-wise scaling (1/u_max)^{#time letters}.
    """

    def __init__(self, n_paths: int, order: int, backend: Optional[str] = None):
        if order < 1 or order > SIG_ORDER_CAP:
            raise ValueError(f"order must be in 1..{SIG_ORDER_CAP}")
        self.n_paths = n_paths
        self.order = order
        self._kern = get_kernel(backend)
        self._state = self._kern.identity_state(n_paths, TIME_JOIN_DIM, order)
        self._m = time_letter_counts(TIME_JOIN_DIM, order)
        self._count = 0
        self._last: Optional[np.ndarray] = None
        self._zeros = np.zeros(n_paths)
        self._ones = np.ones(n_paths)

    @property
    def count(self) -> int:
        """Number of observations consumed."""
        return self._count

    def append(self, x: np.ndarray) -> None:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.n_paths,):
            raise ValueError(f"expected shape ({self.n_paths},), got {x.shape}")
        if self._count == 0:
            self._last = x.copy()
            self._count = 1
            return
        if self._count == 1:
            # Stub segment (0,0,0) -> (0, lead_0, lag_0).
            stub = np.column_stack([self._zeros, self._last, self._last])
            self._kern.chen_extend(self._state, np.ascontiguousarray(stub), TIME_JOIN_DIM, self.order)
        d = x - self._last
        lead = np.column_stack([self._ones, d, self._zeros])
        self._kern.chen_extend(self._state, np.ascontiguousarray(lead), TIME_JOIN_DIM, self.order)
        lag = np.column_stack([self._ones, self._zeros, d])
        self._kern.chen_extend(self._state, np.ascontiguousarray(lag), TIME_JOIN_DIM, self.order)
        self._last = x.copy()
        self._count += 1

    def features(self, rows: Optional[np.ndarray] = None) -> np.ndarray:
        """Normalized signature features (levels 1..n) for the current date."""
        if self._count < 2:
            raise ValueError("need at least 2 observations for signature features")
        u_max = float(2 * self._count - 2)
        scale = u_max ** (-self._m.astype(np.float64))
        state = self._state if rows is None else self._state[rows]
        return state[:, 1:] * scale[1:]

    def snapshot(self) -> tuple:
        return self._state.copy(), self._count, None if self._last is None else self._last.copy()

    def restore(self, snap: tuple) -> None:
        state, count, last = snap
        self._state = state.copy()
        self._count = count
        self._last = None if last is None else last.copy()


def signature_features(
    prices: np.ndarray,
    i: int,
    spec: RiskSetSpec,
    order: int,
    stats: GlobalStandardization,
    augment: bool = False,
    backend: Optional[str] = None,
) -> np.ndarray:
    """Design matrix at date i: signature features, constant 1, optional average.

    The scalar series is the standardized log-price over the risk set's date
    range (rho3: the current window, rho4: everything since T_1). A series
    shorter than 2 observations yields the constant-only design.
    """
    if spec.rho not in (3, 4):
        raise ValueError("signature bases are defined for streamed risk sets (rho3/rho4)")
    prices = np.asarray(prices, dtype=np.float64)
    spec._check_date(i)
    if spec.rho == 3:
        dates = range(max(i - spec.M + 2, 0), i + 1)
    else:
        dates = range(1, i + 1)
    dates = list(dates)
    n_paths = prices.shape[0]
    cols: List[np.ndarray] = []
    if len(dates) >= 2:
        stream = SignatureStream(n_paths, order, backend=backend)
        for j in dates:
            stream.append(stats.column(prices, j))
        cols.append(stream.features())
    cols.append(np.ones((n_paths, 1)))
    if augment:
        avg = prices[:, i - spec.M + 1 : i + 1].mean(axis=1)
        log_avg = np.log(avg)
        std = log_avg.std()
        centered = (log_avg - log_avg.mean()) / (std if std > 1e-12 else 1.0)
        cols.append(centered[:, None])
    return np.hstack(cols)
