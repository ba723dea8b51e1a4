"""Stability-condition checks and trajectory metrics.

Three tools live here: an advisory gain-condition checker for the
super-twisting channels, a numerical verifier for the fractional Lyapunov
inequality  (1/2) D^a (e' P e) <= e' P D^a e  along sampled trajectories,
and convergence metrics that quantify error decay and fault tracking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .fraccalc import gl_derivative_trace, order_value
from .observer import GainSet
from .plant import Bounds

if TYPE_CHECKING:
    from .simulate import Trajectory

__all__ = [
    "ChannelCheck",
    "GainReport",
    "LemmaCheck",
    "SignalMetrics",
    "Metrics",
    "check_gains",
    "verify_lemma1",
    "default_lemma_tolerance",
    "signal_metrics",
    "compute_metrics",
]


@dataclass(frozen=True)
class ChannelCheck:
    """Conditions for one observer channel against its disturbance bound.

    Condition 1 requires the integrated-sign gain to exceed the bound;
    condition 2 requires lam^2 > 4 b (g + b) / (g - b), undefined (and
    reported as skipped) whenever condition 1 fails.
    """

    channel: int
    basis: str
    bound: float
    alpha_gain: float
    lam: float
    condition1_holds: bool
    alpha_margin: float
    lambda_threshold: "float | None"
    condition2_holds: "bool | None"
    lambda_margin: "float | None"


@dataclass(frozen=True)
class GainReport:
    """Advisory per-channel condition results.

    Failing conditions do not abort anything; tuned-by-hand gains routinely
    violate the sufficient conditions yet converge in simulation.
    """

    channels: "tuple[ChannelCheck, ...]"
    bounds: Bounds

    @property
    def all_hold(self) -> bool:
        return all(
            c.condition1_holds and bool(c.condition2_holds) for c in self.channels
        )

    def to_kv(self) -> "list[tuple[str, str]]":
        pairs: "list[tuple[str, str]]" = []
        for c in self.channels:
            prefix = f"channel{c.channel}"
            pairs.append((f"{prefix}.bound", f"{c.bound:.17g}"))
            pairs.append((f"{prefix}.condition1", "pass" if c.condition1_holds else "fail"))
            pairs.append((f"{prefix}.alpha_margin", f"{c.alpha_margin:.17g}"))
            if c.lambda_threshold is None:
                pairs.append((f"{prefix}.condition2", "skipped"))
            else:
                pairs.append((f"{prefix}.lambda_threshold", f"{c.lambda_threshold:.17g}"))
                pairs.append(
                    (f"{prefix}.condition2", "pass" if c.condition2_holds else "fail")
                )
                pairs.append((f"{prefix}.lambda_margin", f"{c.lambda_margin:.17g}"))
        pairs.append(("all_conditions_hold", "yes" if self.all_hold else "no"))
        return pairs

    def to_text(self) -> str:
        lines = ["gain condition report (advisory)"]
        for c in self.channels:
            lines.append(
                f"  channel {c.channel} [{c.basis}]: disturbance bound {c.bound:.6g}"
            )
            verdict = "holds" if c.condition1_holds else "FAILS"
            lines.append(
                f"    condition 1: alpha_gain {c.alpha_gain:.6g} > {c.bound:.6g} "
                f"-> {verdict} (margin {c.alpha_margin:.6g})"
            )
            if c.lambda_threshold is None:
                lines.append("    condition 2: skipped (condition 1 failed)")
            else:
                verdict = "holds" if c.condition2_holds else "FAILS"
                lines.append(
                    f"    condition 2: lam {c.lam:.6g} > {c.lambda_threshold:.6g} "
                    f"-> {verdict} (margin {c.lambda_margin:.6g})"
                )
        lines.append(
            "  overall: all conditions hold"
            if self.all_hold
            else "  overall: some conditions fail (informational only)"
        )
        return "\n".join(lines)


def check_gains(gains: GainSet, bounds: Bounds) -> GainReport:
    """Evaluate the per-channel sufficient conditions against the bounds.

    Channel i < n - 1 is perturbed by state x_{i+2}; channel n - 1 by the
    full nonlinearity f1 + f2 f; channels n and n + 1 by the aggregate rate
    bound of the fault path, which folds in the integrated-sign gain of
    channel n and is heuristic by construction.
    """
    n = gains.n
    if bounds.state_sup.size != n:
        raise ValueError(
            f"bounds cover {bounds.state_sup.size} states, gains imply n = {n}"
        )
    nonlinearity_bound = bounds.f1_sup + bounds.f2_sup * bounds.fault_sup
    aggregate = (
        bounds.f1_rate_sup
        + bounds.f2_rate_sup * bounds.fault_sup
        + bounds.f2_sup * bounds.fault_rate_sup
        + bounds.f2_sup * gains.alpha_gain[n - 1]
    )
    checks = []
    for channel in range(1, n + 2):
        if channel + 2 <= n:
            b = float(bounds.state_sup[channel + 1])
            basis = (
                "base error dynamics"
                if channel == 1
                else "extrapolated from the first-channel analysis"
            )
        elif channel == n - 1:
            b = nonlinearity_bound
            basis = (
                "base error dynamics"
                if channel == 1
                else "extrapolated from the first-channel analysis"
            )
        elif channel == n:
            b = aggregate
            basis = "extrapolated, aggregate fault-path bound"
        else:
            b = aggregate
            basis = "fault channel, heuristic"
        g = float(gains.alpha_gain[channel - 1])
        lam = float(gains.lam[channel - 1])
        cond1 = g > b
        if cond1:
            threshold = math.sqrt(4.0 * b * (g + b) / (g - b))
            cond2 = lam * lam > 4.0 * b * (g + b) / (g - b)
            lam_margin = lam - threshold
        else:
            threshold = None
            cond2 = None
            lam_margin = None
        checks.append(
            ChannelCheck(
                channel=channel,
                basis=basis,
                bound=b,
                alpha_gain=g,
                lam=lam,
                condition1_holds=cond1,
                alpha_margin=g - b,
                lambda_threshold=threshold,
                condition2_holds=cond2,
                lambda_margin=lam_margin,
            )
        )
    return GainReport(channels=tuple(checks), bounds=bounds)


@dataclass(frozen=True)
class LemmaCheck:
    """Result of the fractional Lyapunov inequality scan.

    ``max_violation`` is the largest value of lhs - rhs over the trajectory
    (negative when the inequality holds everywhere with slack);
    ``violation_times`` lists the sample times where it exceeds the
    tolerance.
    """

    P: np.ndarray
    tolerance: float
    max_violation: float
    violation_times: "tuple[float, ...]"

    @property
    def passed(self) -> bool:
        return len(self.violation_times) == 0


def default_lemma_tolerance(alpha: float, h: float) -> float:
    """Discretization-aware tolerance: 10 h^min(a, 1 - a).

    The inequality is exact in continuous time; the tolerance only has to
    absorb the GL estimator's truncation error on sampled data.
    """
    a = order_value(alpha)
    return 10.0 * h ** min(a, 1.0 - a)


def verify_lemma1(
    error_trajectory: Sequence[Sequence[float]],
    P: "np.ndarray | None",
    alpha: float,
    h: float,
    tolerance: "float | None" = None,
) -> LemmaCheck:
    """Check (1/2) D^a (e' P e) <= e' P D^a e at every sample.

    Both sides use the same shifted GL estimator, under which the inequality
    holds to round-off in exact arithmetic for any SPD P (the j >= 1 weights
    are negative and their partial sums stay positive), so any real
    violation indicates a bug rather than discretization noise.
    """
    a = order_value(alpha)
    e = np.asarray(error_trajectory, dtype=float)
    if e.ndim == 1:
        e = e[:, None]
    if e.ndim != 2 or e.shape[0] < 3:
        # a two-sample record has no step beyond the trivial initial one
        raise ValueError("error trajectory needs at least 3 samples")
    m = e.shape[1]
    if P is None:
        P = np.eye(m)
    P = np.asarray(P, dtype=float)
    if P.shape != (m, m):
        raise ValueError(f"P must be {m} x {m}, got {P.shape}")
    if not np.allclose(P, P.T, rtol=1e-12, atol=1e-12):
        raise ValueError("P must be symmetric")
    eigenvalues = np.linalg.eigvalsh(0.5 * (P + P.T))
    if np.min(eigenvalues) <= 0.0:
        raise ValueError("P must be positive definite")
    if tolerance is None:
        tolerance = default_lemma_tolerance(a, h)

    V = np.einsum("ki,ij,kj->k", e, P, e)
    lhs = 0.5 * gl_derivative_trace(V, a, h)
    de = np.column_stack([gl_derivative_trace(e[:, i], a, h) for i in range(m)])
    rhs = np.einsum("ki,ij,kj->k", e, P, de)
    gap = lhs - rhs
    bad = np.flatnonzero(gap > tolerance)
    return LemmaCheck(
        P=P,
        tolerance=float(tolerance),
        max_violation=float(np.max(gap)),
        violation_times=tuple((bad * h).tolist()),
    )


@dataclass(frozen=True)
class SignalMetrics:
    """Decay summary for one error signal.

    ``convergence_time`` is the first instant the signal enters the band and
    never leaves again, None if that never happens; the tail statistics
    cover the final half of the horizon.
    """

    convergence_time: "float | None"
    rmse_tail: float
    sup_tail: float


@dataclass(frozen=True)
class Metrics:
    band: float
    signals: "dict[str, SignalMetrics]" = field(default_factory=dict)

    def to_kv(self) -> "list[tuple[str, str]]":
        pairs = [("band", f"{self.band:.17g}")]
        for name, sm in self.signals.items():
            ct = "never" if sm.convergence_time is None else f"{sm.convergence_time:.17g}"
            pairs.append((f"{name}.convergence_time", ct))
            pairs.append((f"{name}.rmse_tail", f"{sm.rmse_tail:.17g}"))
            pairs.append((f"{name}.sup_tail", f"{sm.sup_tail:.17g}"))
        return pairs


def signal_metrics(
    t: np.ndarray, values: np.ndarray, band: float, horizon: "float | None" = None
) -> SignalMetrics:
    """Metrics for one sampled signal against an absolute band."""
    if band <= 0.0:
        raise ValueError(f"band must be positive, got {band!r}")
    v = np.abs(np.asarray(values, dtype=float))
    outside = np.flatnonzero(v > band)
    if outside.size == 0:
        convergence_time = 0.0
    elif outside[-1] == v.size - 1:
        convergence_time = None
    else:
        convergence_time = float(t[outside[-1] + 1])
    T = float(horizon) if horizon is not None else float(t[-1])
    tail = np.asarray(values, dtype=float)[t >= T / 2.0]
    if tail.size == 0:
        tail = np.asarray(values, dtype=float)[-1:]
    return SignalMetrics(
        convergence_time=convergence_time,
        rmse_tail=float(np.sqrt(np.mean(tail**2))),
        sup_tail=float(np.max(np.abs(tail))),
    )


def compute_metrics(trajectory: "Trajectory", band: float) -> Metrics:
    """Metrics for every state error plus the true fault-tracking error.

    The fault entry compares the fault estimate against the actual fault
    signal (f - fhat), not the observer-internal error.
    """
    signals: "dict[str, SignalMetrics]" = {}
    T = trajectory.horizon
    for i in range(trajectory.n):
        signals[f"e{i + 1}"] = signal_metrics(
            trajectory.t, trajectory.e[:, i], band, horizon=T
        )
    signals["fault_error"] = signal_metrics(
        trajectory.t, trajectory.fault - trajectory.fhat, band, horizon=T
    )
    return Metrics(band=band, signals=signals)
