"""Step-by-step second-order sliding mode observer.

The observer runs n + 1 super-twisting channels of commensurate order a,
driven only by the plant output y = x_1:

    channel 1      (xhat_1, xtilde_2)   always active
    channel i      (xhat_i, xtilde_{i+1})   gated by E_{i-1},  2 <= i < n
    channel n      (xhat_n, ftilde)     gated by E_{n-1}
    fault channel  (fhat, thetatilde)   gated by E_n

Each channel applies the pair  lam * |e|^0.5 * sign(e)  and  alpha_gain *
sign(e)  to its error; channel n feeds the model nonlinearities evaluated at
the auxiliary estimate (y, xtilde_2, ..., xtilde_n).  Activation flags follow
the cumulative rule E_i = 1 iff |e_j| <= epsilon for every j <= i, recomputed
every step from the current internal errors (non-latching).  A gated channel
holds its variables bit-exactly for that step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .expr import Expr, evaluate
from .fraccalc import GLHistory, gl_step, order_value

__all__ = [
    "GainSet",
    "ObserverState",
    "ErrorRecord",
    "update_flags",
    "advance_flags",
    "observer_rhs",
    "observer_step",
]


@dataclass(frozen=True)
class GainSet:
    """Per-channel gains plus the activation threshold.

    ``lam`` scales the |e|^0.5 corrective terms, ``alpha_gain`` the
    integrated sign terms; both carry one entry per channel (n + 1 in
    total).  ``flag_dwell_steps`` requires the activation condition to hold
    for that many consecutive steps before a flag raises; 1 reproduces the
    plain non-latching rule.
    """

    lam: np.ndarray
    alpha_gain: np.ndarray
    epsilon: float
    flag_dwell_steps: int = 1

    def __post_init__(self) -> None:
        lam = np.asarray(self.lam, dtype=float)
        gain = np.asarray(self.alpha_gain, dtype=float)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "alpha_gain", gain)
        if lam.ndim != 1 or lam.shape != gain.shape or lam.size < 3:
            raise ValueError(
                "lam and alpha_gain must be equal-length vectors with n + 1 >= 3 entries"
            )
        if not (np.all(lam > 0.0) and np.all(gain > 0.0)):
            raise ValueError("all gains must be strictly positive")
        if not (self.epsilon > 0.0 and math.isfinite(self.epsilon)):
            raise ValueError(f"epsilon must be positive, got {self.epsilon!r}")
        if self.flag_dwell_steps < 1:
            raise ValueError("flag_dwell_steps must be at least 1")

    @property
    def n(self) -> int:
        """Plant dimension implied by the gain vectors."""
        return self.lam.size - 1


@dataclass(frozen=True)
class ErrorRecord:
    """Internal estimation errors: e_1 = y - xhat_1, e_i = xtilde_i - xhat_i,
    e_f = ftilde - fhat."""

    e: np.ndarray
    e_f: float


@dataclass(frozen=True)
class ObserverState:
    """All 2n + 2 observer variables plus activation bookkeeping.

    ``flags`` are the activation flags used by the step that produced this
    state; ``dwell_counts`` track how many consecutive steps each flag's
    condition has held.
    """

    xhat: np.ndarray
    xtilde: np.ndarray  # auxiliary estimates for x_2 .. x_n
    ftilde: float
    fhat: float
    thetatilde: float
    flags: np.ndarray
    dwell_counts: np.ndarray

    def __post_init__(self) -> None:
        xhat = np.asarray(self.xhat, dtype=float)
        xtilde = np.asarray(self.xtilde, dtype=float)
        object.__setattr__(self, "xhat", xhat)
        object.__setattr__(self, "xtilde", xtilde)
        object.__setattr__(self, "flags", np.asarray(self.flags, dtype=np.int8))
        object.__setattr__(
            self, "dwell_counts", np.asarray(self.dwell_counts, dtype=np.int64)
        )
        n = xhat.size
        if n < 2 or xtilde.size != n - 1:
            raise ValueError("xhat needs n >= 2 entries and xtilde n - 1")
        if self.flags.size != n or self.dwell_counts.size != n:
            raise ValueError("flags and dwell_counts need one entry per state")

    @classmethod
    def zeros(cls, n: int) -> "ObserverState":
        return cls(
            xhat=np.zeros(n),
            xtilde=np.zeros(n - 1),
            ftilde=0.0,
            fhat=0.0,
            thetatilde=0.0,
            flags=np.zeros(n, dtype=np.int8),
            dwell_counts=np.zeros(n, dtype=np.int64),
        )

    @property
    def n(self) -> int:
        return self.xhat.size

    def errors(self, y: float) -> ErrorRecord:
        e = np.empty(self.n)
        e[0] = y - self.xhat[0]
        e[1:] = self.xtilde - self.xhat[1:]
        return ErrorRecord(e=e, e_f=self.ftilde - self.fhat)

    def as_vector(self) -> np.ndarray:
        """Canonical packing [xhat, xtilde, ftilde, fhat, thetatilde]."""
        return np.concatenate(
            [self.xhat, self.xtilde, [self.ftilde, self.fhat, self.thetatilde]]
        )

    def with_vector(self, vec: np.ndarray) -> "ObserverState":
        n = self.n
        return replace(
            self,
            xhat=vec[:n].copy(),
            xtilde=vec[n : 2 * n - 1].copy(),
            ftilde=float(vec[2 * n - 1]),
            fhat=float(vec[2 * n]),
            thetatilde=float(vec[2 * n + 1]),
        )


def update_flags(errors: "ErrorRecord | Sequence[float]", epsilon: float) -> np.ndarray:
    """Activation flags from current state errors: E_i = 1 iff |e_j| <= eps
    for all j <= i.

    The cumulative AND makes the flags monotone in the channel index, so a
    later error inside the band never activates past an earlier one outside
    it.
    """
    if not epsilon > 0.0:
        raise ValueError(f"epsilon must be positive, got {epsilon!r}")
    e = errors.e if isinstance(errors, ErrorRecord) else np.asarray(errors, dtype=float)
    in_band = np.abs(e) <= epsilon
    return np.logical_and.accumulate(in_band).astype(np.int8)


def advance_flags(
    dwell_counts: np.ndarray,
    errors: "ErrorRecord | Sequence[float]",
    epsilon: float,
    dwell: int,
) -> "tuple[np.ndarray, np.ndarray]":
    """One dwell-counter update; returns (new_counts, flags).

    With dwell = 1 the flags equal :func:`update_flags` exactly.  Larger
    dwell requires the activation condition to survive that many consecutive
    steps, an opt-in damper against flag chatter.
    """
    raw = update_flags(errors, epsilon)
    counts = np.where(raw > 0, dwell_counts + 1, 0)
    return counts, (counts >= dwell).astype(np.int8)


def _channel_var_indices(n: int, channel: int) -> "tuple[int, int]":
    """Vector indices (canonical packing) of a channel's variable pair."""
    if channel < n:
        return channel - 1, n + channel - 1  # xhat_c, xtilde_{c+1}
    if channel == n:
        return n - 1, 2 * n - 1  # xhat_n, ftilde
    return 2 * n, 2 * n + 1  # fhat, thetatilde


def observer_rhs(
    state: ObserverState,
    y: float,
    f1: Expr,
    f2: Expr,
    gains: GainSet,
) -> np.ndarray:
    """Order-a right-hand sides for all 2n + 2 variables, gating applied.

    Channel i >= 2 is multiplied by E_{i-1} as a whole, feedforward terms
    included; gated channels therefore return exactly zero, and the model
    expressions are only evaluated once channel n's gate is up.  Flags must
    already reflect the current errors.
    """
    n = state.n
    if gains.n != n:
        raise ValueError(f"gain set is for n = {gains.n}, observer has n = {n}")
    rec = state.errors(y)
    e, e_f = rec.e, rec.e_f
    flags = state.flags
    out = np.zeros(2 * n + 2)

    def st_pair(err: float, channel: int) -> "tuple[float, float]":
        err = float(err)
        lam = gains.lam[channel - 1]
        gain = gains.alpha_gain[channel - 1]
        sgn = float((err > 0.0) - (err < 0.0))
        return lam * math.sqrt(abs(err)) * sgn, gain * sgn

    for channel in range(1, n):
        gate = 1 if channel == 1 else int(flags[channel - 2])
        if not gate:
            continue
        corr, integ = st_pair(e[channel - 1], channel)
        i_hat, i_aux = _channel_var_indices(n, channel)
        out[i_hat] = state.xtilde[channel - 1] + corr
        out[i_aux] = integ

    if flags[n - 2]:
        xt_full = np.empty(n)
        xt_full[0] = y
        xt_full[1:] = state.xtilde
        corr, integ = st_pair(e[n - 1], n)
        i_hat, i_aux = _channel_var_indices(n, n)
        out[i_hat] = (
            evaluate(f1, xt_full, 0.0)
            + evaluate(f2, xt_full, 0.0) * state.ftilde
            + corr
        )
        out[i_aux] = integ

    if flags[n - 1]:
        corr, integ = st_pair(e_f, n + 1)
        i_hat, i_aux = _channel_var_indices(n, n + 1)
        out[i_hat] = state.thetatilde + corr
        out[i_aux] = integ

    return out


def observer_step(
    state: ObserverState,
    histories: Sequence[GLHistory],
    y: float,
    f1: Expr,
    f2: Expr,
    gains: GainSet,
    alpha: float,
) -> ObserverState:
    """Advance the observer one step from the current output sample.

    Flags are recomputed from the pre-step errors first and gate the update;
    variables of a gated channel are carried over bit-exactly.  Nothing is
    appended to the histories; the caller commits the returned state.  The
    returned ``flags`` are the ones that gated this step.
    """
    a = order_value(alpha)
    n = state.n
    if len(histories) != 2 * n + 2:
        raise ValueError(f"expected {2 * n + 2} histories, got {len(histories)}")
    counts, flags = advance_flags(
        state.dwell_counts, state.errors(y), gains.epsilon, gains.flag_dwell_steps
    )
    gated = replace(state, flags=flags, dwell_counts=counts)
    rhs = observer_rhs(gated, y, f1, f2, gains)
    nxt = gl_step(histories, rhs, a)
    current = state.as_vector()
    for channel in range(2, n + 2):
        if not flags[channel - 2]:
            i_hat, i_aux = _channel_var_indices(n, channel)
            nxt[i_hat] = current[i_hat]
            nxt[i_aux] = current[i_aux]
    return gated.with_vector(nxt)
