"""Plant and observer co-simulation on a shared fixed-step grid.

Within each step the plant advances first and its freshly computed output
sample is handed to the observer, which then advances; this is why the
plant-first ordering matters.  Recorded rows are synchronous: state,
estimates, errors and fault values all refer to the same instant, and the
flag columns hold the activation flags that gated the step leaving that
row.  A run of horizon T at step h covers round(T / h) samples at
t = 0, h, ..., T - h.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .expr import evaluate
from .fraccalc import GLHistory
from .observer import advance_flags, observer_step
from .plant import DIVERGENCE_GUARD, plant_step

if TYPE_CHECKING:
    from .analysis import Metrics
    from .config import ScenarioConfig

__all__ = ["Trajectory", "SimulationResult", "run_simulation"]


@dataclass
class Trajectory:
    """Time-indexed co-simulation record.

    Columns, in CSV order: t, x1..xn, xhat1..xhatn, xtilde2..xtilden,
    f, fhat, ftilde, thetatilde, e1..en, ef, E1..En.
    """

    n: int
    h: float
    t: np.ndarray
    x: np.ndarray
    xhat: np.ndarray
    xtilde: np.ndarray
    fault: np.ndarray
    fhat: np.ndarray
    ftilde: np.ndarray
    thetatilde: np.ndarray
    e: np.ndarray
    e_f: np.ndarray
    flags: np.ndarray

    @property
    def n_samples(self) -> int:
        return self.t.size

    @property
    def horizon(self) -> float:
        """Nominal covered horizon (exclusive end of the sample grid)."""
        return self.n_samples * self.h

    @property
    def column_names(self) -> "list[str]":
        n = self.n
        names = ["t"]
        names += [f"x{i}" for i in range(1, n + 1)]
        names += [f"xhat{i}" for i in range(1, n + 1)]
        names += [f"xtilde{i}" for i in range(2, n + 1)]
        names += ["f", "fhat", "ftilde", "thetatilde"]
        names += [f"e{i}" for i in range(1, n + 1)]
        names += ["ef"]
        names += [f"E{i}" for i in range(1, n + 1)]
        return names

    def column(self, name: str) -> np.ndarray:
        """Column values by CSV header name."""
        table = self.as_matrix()
        try:
            idx = self.column_names.index(name)
        except ValueError:
            raise KeyError(f"no column named {name!r}") from None
        return table[:, idx]

    def as_matrix(self) -> np.ndarray:
        """All columns, time included, as one float matrix in CSV order."""
        return np.column_stack(
            [
                self.t,
                self.x,
                self.xhat,
                self.xtilde,
                self.fault,
                self.fhat,
                self.ftilde,
                self.thetatilde,
                self.e,
                self.e_f,
                self.flags.astype(float),
            ]
        )

    def truncated(self, n_rows: int) -> "Trajectory":
        return Trajectory(
            n=self.n,
            h=self.h,
            t=self.t[:n_rows],
            x=self.x[:n_rows],
            xhat=self.xhat[:n_rows],
            xtilde=self.xtilde[:n_rows],
            fault=self.fault[:n_rows],
            fhat=self.fhat[:n_rows],
            ftilde=self.ftilde[:n_rows],
            thetatilde=self.thetatilde[:n_rows],
            e=self.e[:n_rows],
            e_f=self.e_f[:n_rows],
            flags=self.flags[:n_rows],
        )


@dataclass
class SimulationResult:
    trajectory: Trajectory
    metrics: "Metrics | None"
    diverged: bool = False
    divergence_time: "float | None" = None
    divergence_what: str = ""


def run_simulation(config: "ScenarioConfig") -> SimulationResult:
    """Co-simulate a scenario; on divergence return the partial trajectory.

    Metrics are computed only for completed runs.  Non-convergence is a
    result, not an error; only the overflow guard marks a run as diverged.
    """
    from .analysis import compute_metrics

    model = config.plant
    gains = config.gains
    n = model.n
    h = config.h
    n_samples = max(2, round(config.horizon / h))
    memory = config.memory_length

    plant_hists = [GLHistory(h, memory, capacity=n_samples) for _ in range(n)]
    obs_hists = [GLHistory(h, memory, capacity=n_samples) for _ in range(2 * n + 2)]

    obs = config.initial_observer_state()
    for i in range(n):
        plant_hists[i].append(model.x0[i])
    for i, v in enumerate(obs.as_vector()):
        obs_hists[i].append(v)

    traj = Trajectory(
        n=n,
        h=h,
        t=np.arange(n_samples) * h,
        x=np.empty((n_samples, n)),
        xhat=np.empty((n_samples, n)),
        xtilde=np.empty((n_samples, n - 1)),
        fault=np.empty(n_samples),
        fhat=np.empty(n_samples),
        ftilde=np.empty(n_samples),
        thetatilde=np.empty(n_samples),
        e=np.empty((n_samples, n)),
        e_f=np.empty(n_samples),
        flags=np.empty((n_samples, n), dtype=np.int8),
    )

    x_now = model.x0.copy()
    diverged = False
    divergence_time = None
    divergence_what = ""
    rows = n_samples

    for k in range(n_samples):
        t_k = k * h
        y = x_now[0]
        rec = obs.errors(y)
        traj.x[k] = x_now
        traj.xhat[k] = obs.xhat
        traj.xtilde[k] = obs.xtilde
        traj.fhat[k] = obs.fhat
        traj.ftilde[k] = obs.ftilde
        traj.thetatilde[k] = obs.thetatilde
        traj.e[k] = rec.e
        traj.e_f[k] = rec.e_f

        if k == n_samples - 1:
            traj.fault[k] = evaluate(model.fault, (), t_k)
            _, traj.flags[k] = advance_flags(
                obs.dwell_counts, rec, gains.epsilon, gains.flag_dwell_steps
            )
            break

        x_next, traj.fault[k] = plant_step(model, plant_hists, t_k)
        if np.any(np.abs(x_next) > DIVERGENCE_GUARD):
            worst = int(np.argmax(np.abs(x_next)))
            _, traj.flags[k] = advance_flags(
                obs.dwell_counts, rec, gains.epsilon, gains.flag_dwell_steps
            )
            diverged, divergence_time = True, t_k + h
            divergence_what = f"plant state |x{worst + 1}|"
            rows = k + 1
            break

        obs_next = observer_step(
            obs, obs_hists, x_next[0], model.f1, model.f2, gains, model.alpha
        )
        traj.flags[k] = obs_next.flags
        vec = obs_next.as_vector()
        if np.any(np.abs(vec) > DIVERGENCE_GUARD):
            diverged, divergence_time = True, t_k + h
            divergence_what = "an observer variable"
            rows = k + 1
            break

        for i in range(n):
            plant_hists[i].append(x_next[i])
        for i, v in enumerate(vec):
            obs_hists[i].append(v)
        x_now = x_next
        obs = obs_next

    if diverged:
        traj = traj.truncated(rows)
        return SimulationResult(
            trajectory=traj,
            metrics=None,
            diverged=True,
            divergence_time=divergence_time,
            divergence_what=divergence_what,
        )
    return SimulationResult(
        trajectory=traj, metrics=compute_metrics(traj, config.metrics_band)
    )
