"""Fractional-order sliding mode observation toolkit.

Simulates commensurate-order integrator-chain systems with an unknown
additive fault, runs a step-by-step super-twisting observer against them,
and ships the supporting analysis: gain-condition checks, a numerical
verifier for the fractional Lyapunov inequality, and convergence metrics.
"""

from .analysis import (
    GainReport,
    LemmaCheck,
    Metrics,
    check_gains,
    compute_metrics,
    verify_lemma1,
)
from .config import ConfigError, ScenarioConfig, config_to_text, load_config
from .expr import ExprError, evaluate, parse, to_text
from .fraccalc import (
    FractionalOrder,
    GLHistory,
    GLWeights,
    gl_derivative,
    gl_derivative_trace,
    gl_step,
    gl_weights,
    solve_fde,
)
from .observer import GainSet, ObserverState, observer_rhs, observer_step, update_flags
from .plant import Bounds, DivergenceError, PlantModel, estimate_bounds, plant_step
from .simulate import SimulationResult, Trajectory, run_simulation

__all__ = [
    "Bounds",
    "ConfigError",
    "DivergenceError",
    "ExprError",
    "FractionalOrder",
    "GainReport",
    "GainSet",
    "GLHistory",
    "GLWeights",
    "LemmaCheck",
    "Metrics",
    "ObserverState",
    "PlantModel",
    "ScenarioConfig",
    "SimulationResult",
    "Trajectory",
    "check_gains",
    "compute_metrics",
    "config_to_text",
    "estimate_bounds",
    "evaluate",
    "gl_derivative",
    "gl_derivative_trace",
    "gl_step",
    "gl_weights",
    "load_config",
    "observer_rhs",
    "observer_step",
    "parse",
    "plant_step",
    "run_simulation",
    "solve_fde",
    "to_text",
    "update_flags",
    "verify_lemma1",
]

__version__ = "0.1.0"
