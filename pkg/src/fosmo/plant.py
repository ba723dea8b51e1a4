"""Integrator-chain plant with a fault-driven last channel.

The model is the commensurate-order chain

    D^a x_i = x_{i+1}            (i < n)
    D^a x_n = f1(x) + f2(x) * f(t)

with output y = x_1.  ``f1`` and ``f2`` are expressions over the state,
the fault ``f`` an expression over time only.  Alongside simulation, the
module estimates the boundedness constants (state sup-norms, magnitudes and
GL-derivative rates of f, f1, f2) that the gain-condition checker consumes
when no analytic bounds are supplied.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .expr import Expr, ExprEvalError, evaluate, max_var_index, uses_time
from .fraccalc import GLHistory, gl_derivative_trace, gl_step, order_value

__all__ = [
    "PlantModel",
    "Bounds",
    "PlantRun",
    "DivergenceError",
    "DIVERGENCE_GUARD",
    "plant_rhs",
    "plant_step",
    "simulate_plant",
    "estimate_bounds",
]

# Any state beyond this magnitude is treated as a blown-up trajectory.
DIVERGENCE_GUARD = 1e9


class DivergenceError(RuntimeError):
    """A simulated trajectory exceeded the overflow guard."""

    def __init__(self, time: float, what: str):
        super().__init__(
            f"trajectory diverged at t = {time:.6g} ({what} exceeded {DIVERGENCE_GUARD:g})"
        )
        self.time = time


@dataclass(frozen=True)
class PlantModel:
    """Immutable description of the chain system."""

    n: int
    alpha: float
    f1: Expr
    f2: Expr
    fault: Expr
    x0: np.ndarray

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ValueError(f"dimension must be at least 2, got {self.n}")
        order_value(self.alpha)
        x0 = np.asarray(self.x0, dtype=float)
        if x0.shape != (self.n,):
            raise ValueError(f"x0 must have {self.n} entries, got shape {x0.shape}")
        object.__setattr__(self, "x0", x0)
        for label, e in (("f1", self.f1), ("f2", self.f2)):
            idx = max_var_index(e)
            if idx > self.n:
                raise ValueError(
                    f"{label} references x{idx} but the plant has {self.n} states"
                )
            if uses_time(e):
                raise ValueError(f"{label} must depend on the state only, not t")
        if max_var_index(self.fault) > 0:
            raise ValueError("the fault expression may reference t only")


@dataclass(frozen=True)
class Bounds:
    """Positive boundedness constants along a trajectory.

    ``state_sup[i]`` bounds |x_{i+1}|; the remaining fields bound the
    magnitudes and GL-derivative magnitudes of the fault and of f1, f2
    evaluated along the trajectory.
    """

    state_sup: np.ndarray
    fault_sup: float
    f1_sup: float
    f2_sup: float
    fault_rate_sup: float
    f1_rate_sup: float
    f2_rate_sup: float

    def __post_init__(self) -> None:
        state = np.asarray(self.state_sup, dtype=float)
        object.__setattr__(self, "state_sup", state)
        values = [
            self.fault_sup,
            self.f1_sup,
            self.f2_sup,
            self.fault_rate_sup,
            self.f1_rate_sup,
            self.f2_rate_sup,
        ]
        if not (
            np.all(np.isfinite(state))
            and np.all(state > 0.0)
            and all(math.isfinite(v) and v > 0.0 for v in values)
        ):
            raise ValueError("all bounds must be strictly positive and finite")


@dataclass
class PlantRun:
    """Sampled open-loop trajectory plus the signals bound estimation needs."""

    t: np.ndarray
    x: np.ndarray
    fault: np.ndarray
    f1_values: np.ndarray
    f2_values: np.ndarray


def plant_rhs(model: PlantModel, x: np.ndarray, time: float) -> "tuple[np.ndarray, float]":
    """Right-hand side of the chain at one state and time.

    Returns ``(rhs, fault_value)``; the fault value is surfaced so callers
    can log it without re-evaluating the expression.
    """
    try:
        fault_value = evaluate(model.fault, (), time)
        f1v = evaluate(model.f1, x, time)
        f2v = evaluate(model.f2, x, time)
    except ExprEvalError as exc:
        raise ExprEvalError(
            f"{exc.args[0]}; at t = {time:.6g}, state = {np.asarray(x)}", exc.subexpr
        ) from exc
    rhs = np.empty(model.n)
    rhs[: model.n - 1] = x[1:]
    rhs[model.n - 1] = f1v + f2v * fault_value
    return rhs, fault_value


def plant_step(
    model: PlantModel, histories: Sequence[GLHistory], time: float
) -> "tuple[np.ndarray, float]":
    """One explicit GL step of the plant; nothing is appended.

    The current state is read from the histories' latest samples.  Returns
    the next state vector and the fault value at ``time``.
    """
    if len(histories) != model.n:
        raise ValueError(f"expected {model.n} histories, got {len(histories)}")
    x = np.array([hist.latest for hist in histories])
    rhs, fault_value = plant_rhs(model, x, time)
    return gl_step(histories, rhs, model.alpha), fault_value


def simulate_plant(
    model: PlantModel,
    horizon: float,
    h: float,
    memory_length: "int | None" = None,
) -> PlantRun:
    """Integrate the plant alone over ``n = round(horizon / h)`` samples.

    Samples sit at t = 0, h, ..., (n - 1) h.  Raises
    :class:`DivergenceError` if any state exceeds the overflow guard.
    """
    if h <= 0.0 or horizon <= 0.0:
        raise ValueError("h and horizon must be positive")
    n_samples = max(2, round(horizon / h))
    hists = [
        GLHistory(h, memory_length, capacity=n_samples) for _ in range(model.n)
    ]
    x = np.empty((n_samples, model.n))
    fault = np.empty(n_samples)
    f1_values = np.empty(n_samples)
    f2_values = np.empty(n_samples)
    x[0] = model.x0
    for i in range(model.n):
        hists[i].append(model.x0[i])
    for k in range(n_samples):
        t_k = k * h
        try:
            f1_values[k] = evaluate(model.f1, x[k], t_k)
            f2_values[k] = evaluate(model.f2, x[k], t_k)
        except ExprEvalError as exc:
            raise ExprEvalError(
                f"{exc.args[0]}; at t = {t_k:.6g}, state = {x[k]}", exc.subexpr
            ) from exc
        if k == n_samples - 1:
            fault[k] = evaluate(model.fault, (), t_k)
            break
        nxt, fault[k] = plant_step(model, hists, t_k)
        if np.any(np.abs(nxt) > DIVERGENCE_GUARD):
            worst = int(np.argmax(np.abs(nxt)))
            raise DivergenceError(t_k + h, f"|x{worst + 1}|")
        for i in range(model.n):
            hists[i].append(nxt[i])
        x[k + 1] = nxt
    return PlantRun(np.arange(n_samples) * h, x, fault, f1_values, f2_values)


def estimate_bounds(
    model: PlantModel,
    horizon: float,
    h: float,
    memory_length: "int | None" = None,
    margin: float = 1.2,
    floor: float = 1e-6,
) -> Bounds:
    """Empirical boundedness constants from a simulated trajectory.

    Sup norms over the run get a safety margin (default 20%) and a small
    floor so identically-zero signals still yield usable positive bounds.
    Rate bounds are sup norms of the GL-derivative traces of the fault, f1
    and f2 signals along the trajectory.
    """
    run = simulate_plant(model, horizon, h, memory_length)

    def bound(values: np.ndarray) -> float:
        return max(margin * float(np.max(np.abs(values))), floor)

    def rate_bound(values: np.ndarray) -> float:
        return bound(gl_derivative_trace(values, model.alpha, h))

    return Bounds(
        state_sup=np.array([bound(run.x[:, i]) for i in range(model.n)]),
        fault_sup=bound(run.fault),
        f1_sup=bound(run.f1_values),
        f2_sup=bound(run.f2_values),
        fault_rate_sup=rate_bound(run.fault),
        f1_rate_sup=rate_bound(run.f1_values),
        f2_rate_sup=rate_bound(run.f2_values),
    )
