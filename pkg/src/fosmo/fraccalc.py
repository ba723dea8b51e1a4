"""Fixed-step Grunwald-Letnikov fractional differintegration.

The order-``a`` derivative (0 < a < 1) of a uniformly sampled signal x is
approximated by the truncated binomial convolution

    D^a x(t_k)  ~=  h^(-a) * sum_{j=0..k} w_j * (x[k-j] - x[0])

with weights w_0 = 1 and w_j = w_{j-1} * (1 - (a + 1) / j), the stable
recurrence form of (-1)^j * binomial(a, j).  Subtracting the initial sample
gives Caputo-style semantics: the derivative of a constant history is exactly
zero and initial conditions are plain function values.

Systems D^a x = g(x, t) are advanced by the explicit scheme obtained by
solving that sum for the newest sample:

    x[k+1] = x[0] + h^a * g(x[k], t_k) - sum_{j=1..k+1} w_j * (x[k+1-j] - x[0])

An optional window (``memory_length``) truncates the convolutions to the most
recent samples, trading a small accuracy loss for bounded per-step cost.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "FractionalOrder",
    "GLWeights",
    "GLHistory",
    "gl_weights",
    "gl_derivative",
    "gl_derivative_trace",
    "gl_step",
    "solve_fde",
]


@dataclass(frozen=True)
class FractionalOrder:
    """Differintegration order, restricted to the open interval (0, 1)."""

    value: float

    def __post_init__(self) -> None:
        v = self.value
        if not isinstance(v, (int, float)) or not math.isfinite(v) or not 0.0 < v < 1.0:
            raise ValueError(f"fractional order must lie in (0, 1), got {v!r}")


def order_value(alpha: "float | FractionalOrder") -> float:
    """Validate an order given as a float or FractionalOrder, return the float."""
    if isinstance(alpha, FractionalOrder):
        return alpha.value
    return FractionalOrder(float(alpha)).value


class GLWeights:
    """Convolution weights w_j = (-1)^j * binomial(alpha, j) for one order.

    Weights are computed by the recurrence w_j = w_{j-1} * (1 - (alpha + 1)/j)
    rather than gamma ratios, which overflow long before the weights decay.
    The buffer grows on demand and existing entries are never rewritten.
    """

    def __init__(self, alpha: "float | FractionalOrder", count: int = 0):
        self.alpha = order_value(alpha)
        self._w = np.ones(1)
        if count > 0:
            self.extend_to(count)

    def extend_to(self, count: int) -> None:
        """Ensure w_0 .. w_count are available."""
        have = self._w.size - 1
        if count <= have:
            return
        j = np.arange(have + 1, count + 1, dtype=float)
        tail = self._w[have] * np.cumprod(1.0 - (self.alpha + 1.0) / j)
        self._w = np.concatenate([self._w, tail])

    def __len__(self) -> int:
        return self._w.size

    @property
    def weights(self) -> np.ndarray:
        """Copy of the computed weights w_0 .. w_N."""
        return self._w.copy()


def gl_weights(alpha: "float | FractionalOrder", count: int) -> GLWeights:
    """Weights w_0 .. w_count for the GL convolution at the given order."""
    if count < 0:
        raise ValueError(f"weight count must be non-negative, got {count}")
    return GLWeights(alpha, count)


# One growable weight buffer per order, shared by the stepping and trace
# routines.  Extension replaces the array, so concurrent readers keep a
# consistent (shorter) snapshot.
_cache_lock = threading.Lock()
_weight_cache: "dict[float, GLWeights]" = {}


def _cached_weights(alpha: float, count: int) -> np.ndarray:
    with _cache_lock:
        entry = _weight_cache.get(alpha)
        if entry is None:
            entry = _weight_cache.setdefault(alpha, GLWeights(alpha))
        entry.extend_to(count)
        return entry._w


class GLHistory:
    """Uniformly sampled scalar signal laid out for fast GL convolutions.

    Raw samples are kept in arrival order; the initial-sample-shifted copy is
    kept reversed so that every convolution below runs over two contiguous
    slices (a plain BLAS dot).  ``memory_length`` caps how far back the
    convolutions read (the short-memory principle); None means unbounded.
    """

    __slots__ = ("step_h", "memory_length", "_n", "_raw", "_rev")

    def __init__(
        self,
        step_h: float,
        memory_length: "int | None" = None,
        capacity: int = 256,
    ):
        if not (step_h > 0.0 and math.isfinite(step_h)):
            raise ValueError(f"step_h must be positive and finite, got {step_h!r}")
        if memory_length is not None and memory_length < 1:
            raise ValueError(f"memory_length must be >= 1 or None, got {memory_length}")
        self.step_h = float(step_h)
        self.memory_length = memory_length
        self._n = 0
        cap = max(int(capacity), 4)
        self._raw = np.empty(cap)
        self._rev = np.empty(cap)

    @classmethod
    def from_samples(
        cls,
        step_h: float,
        values: Sequence[float],
        memory_length: "int | None" = None,
    ) -> "GLHistory":
        hist = cls(step_h, memory_length, capacity=max(len(values), 4))
        for v in values:
            hist.append(v)
        return hist

    def __len__(self) -> int:
        return self._n

    @property
    def samples(self) -> np.ndarray:
        """Copy of the raw samples in arrival order."""
        return self._raw[: self._n].copy()

    @property
    def initial(self) -> float:
        if self._n == 0:
            raise ValueError("history is empty")
        return float(self._raw[0])

    @property
    def latest(self) -> float:
        if self._n == 0:
            raise ValueError("history is empty")
        return float(self._raw[self._n - 1])

    def append(self, value: float) -> None:
        if self._n == self._raw.size:
            self._grow()
        v = float(value)
        self._raw[self._n] = v
        x0 = self._raw[0] if self._n else v
        self._rev[self._rev.size - 1 - self._n] = v - x0
        self._n += 1

    def _grow(self) -> None:
        cap = self._raw.size
        raw = np.empty(2 * cap)
        raw[:cap] = self._raw
        rev = np.empty(2 * cap)
        rev[cap:] = self._rev
        self._raw, self._rev = raw, rev

    def _shifted_latest(self) -> float:
        return float(self._rev[self._rev.size - self._n])

    def _window_dot(self, w: np.ndarray, m: int, end: int) -> float:
        """sum_{j=1..m} w_j * shifted[end - j] over the reversed layout."""
        if m == 0:
            return 0.0
        lo = self._rev.size - end
        return float(np.dot(w[1 : m + 1], self._rev[lo : lo + m]))

    def window(self, end: "int | None" = None) -> int:
        """Number of past samples a convolution ending at ``end`` may read."""
        end = self._n if end is None else end
        if self.memory_length is None:
            return end
        return min(end, self.memory_length)


def gl_derivative(signal: GLHistory, alpha: "float | FractionalOrder") -> float:
    """GL estimate of D^alpha at the latest sample of ``signal``.

    The signal is shifted by its initial sample, so a constant history has
    derivative exactly zero (Caputo-compatible initial conditions).
    """
    a = order_value(alpha)
    if len(signal) == 0:
        raise ValueError("gl_derivative requires at least one sample")
    k = len(signal) - 1
    m = signal.window(k)
    w = _cached_weights(a, m)
    acc = signal._shifted_latest() + signal._window_dot(w, m, k)
    return acc * signal.step_h ** (-a)


def gl_derivative_trace(
    values: Sequence[float],
    alpha: "float | FractionalOrder",
    h: float,
    memory_length: "int | None" = None,
) -> np.ndarray:
    """GL derivative estimate at every prefix of a sampled signal.

    Equivalent to calling :func:`gl_derivative` once per sample, batched as a
    single convolution.
    """
    a = order_value(alpha)
    if not (h > 0.0 and math.isfinite(h)):
        raise ValueError(f"h must be positive and finite, got {h!r}")
    v = np.asarray(values, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("values must be a non-empty 1-D sequence")
    shifted = v - v[0]
    m = v.size - 1 if memory_length is None else min(memory_length, v.size - 1)
    w = _cached_weights(a, m)[: m + 1]
    conv = np.convolve(shifted, w)[: v.size]
    return conv * h ** (-a)


def gl_step(
    histories: Sequence[GLHistory],
    rhs_values: Sequence[float],
    alpha: "float | FractionalOrder",
) -> np.ndarray:
    """Advance D^alpha x_i = g_i one explicit step; nothing is appended.

    ``rhs_values[i]`` must be g_i evaluated at the current state and time.
    Returns the next sample of every component; committing it to the
    histories is the caller's job.
    """
    a = order_value(alpha)
    hists = list(histories)
    rhs = np.asarray(rhs_values, dtype=float)
    if rhs.ndim != 1 or rhs.size != len(hists):
        raise ValueError(
            f"rhs has {rhs.size} entries for {len(hists)} histories"
        )
    if not hists:
        return np.empty(0)
    h = hists[0].step_h
    k1 = len(hists[0])
    for s in hists[1:]:
        if s.step_h != h or len(s) != k1:
            raise ValueError("histories disagree on step size or length")
    if k1 == 0:
        raise ValueError("histories need their initial sample before stepping")
    ha = h**a
    out = np.empty(len(hists))
    for i, s in enumerate(hists):
        m = s.window(k1)
        w = _cached_weights(a, m)
        out[i] = s.initial + ha * rhs[i] - s._window_dot(w, m, k1)
    return out


def solve_fde(
    rhs: Callable[[np.ndarray, float], Sequence[float]],
    x0: Sequence[float],
    alpha: "float | FractionalOrder",
    h: float,
    n_steps: int,
    memory_length: "int | None" = None,
) -> "tuple[np.ndarray, np.ndarray]":
    """Integrate D^alpha x = rhs(x, t) on a uniform grid.

    Returns ``(t, x)`` with ``x[k]`` the state at ``t[k] = k * h``; the
    initial row is included, so both have ``n_steps + 1`` entries.
    """
    start = np.atleast_1d(np.asarray(x0, dtype=float))
    n = start.size
    hists = [
        GLHistory(h, memory_length, capacity=n_steps + 1) for _ in range(n)
    ]
    for i in range(n):
        hists[i].append(start[i])
    out = np.empty((n_steps + 1, n))
    out[0] = start
    for k in range(n_steps):
        g = rhs(out[k], k * h)
        nxt = gl_step(hists, np.asarray(g, dtype=float), alpha)
        for i in range(n):
            hists[i].append(nxt[i])
        out[k + 1] = nxt
    return np.arange(n_steps + 1) * h, out
