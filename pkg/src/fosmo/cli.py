"""Command-line front end.

Subcommands:
    simulate     co-simulate a scenario, write CSV and SVG figures, print metrics
    check-gains  evaluate the observer gain conditions against bounds
    verify       run a scenario and scan the fractional Lyapunov inequality
    gl-test      run the analytic oracle suite for the GL engine

Exit codes: 0 success (non-convergence included), 1 configuration error,
2 divergence, 3 internal error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .analysis import check_gains, verify_lemma1
from .config import PRESETS, ConfigError, ScenarioConfig, load_config
from .csvio import write_trajectory_csv
from .fraccalc import GLHistory, gl_derivative, solve_fde
from .oracles import caputo_power_derivative, mittag_leffler
from .plant import DivergenceError, estimate_bounds
from .simulate import run_simulation
from .svgplot import write_trajectory_figures

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DIVERGED = 2
EXIT_INTERNAL = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fosmo",
        description="Fractional-order sliding mode observer simulation toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_scenario_command(name: str, help_text: str) -> argparse.ArgumentParser:
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("config", nargs="?", help="path to a scenario config file")
        cmd.add_argument(
            "--preset",
            choices=sorted(PRESETS),
            help="use a built-in scenario instead of a config file",
        )
        cmd.add_argument("--h", type=float, help="override the step size")
        cmd.add_argument("--horizon", type=float, help="override the horizon")
        cmd.add_argument(
            "--out-dir", default=".", help="directory for output files"
        )
        return cmd

    add_scenario_command("simulate", "run a scenario and write CSV/SVG outputs")
    add_scenario_command("check-gains", "evaluate gain stability conditions")
    add_scenario_command("verify", "verify the fractional Lyapunov inequality")
    gl = sub.add_parser("gl-test", help="run the GL analytic oracle suite")
    gl.add_argument("--h", type=float, default=1e-3, help="step size for the checks")
    return parser


def _load_scenario(args: argparse.Namespace) -> ScenarioConfig:
    if args.config and args.preset:
        raise ConfigError("give either a config file or --preset, not both")
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        text = path.read_text(encoding="utf-8")
    elif args.preset:
        text = f'preset = "{args.preset}"\n'
    else:
        raise ConfigError("a config file or --preset is required")
    config = load_config(text)
    overrides = []
    if args.h is not None:
        overrides.append(("h", args.h))
    if args.horizon is not None:
        overrides.append(("horizon", args.horizon))
    if overrides:
        from dataclasses import replace

        config = replace(config, **dict(overrides))
        if config.h <= 0.0 or config.horizon <= config.h:
            raise ConfigError("overrides must keep h > 0 and horizon > h")
    return config


def _print_kv(pairs) -> None:
    for key, value in pairs:
        print(f"{key} = {value}")


def cmd_simulate(args: argparse.Namespace) -> int:
    config = _load_scenario(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    result = run_simulation(config)
    csv_path = out_dir / config.csv_path
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    write_trajectory_csv(result.trajectory, csv_path)
    print(f"wrote {csv_path}")
    if result.diverged:
        print(
            f"simulation diverged at t = {result.divergence_time:.6g} "
            f"({result.divergence_what}); partial trajectory flushed",
            file=sys.stderr,
        )
        return EXIT_DIVERGED
    svg_dir = out_dir / config.svg_dir
    for path in write_trajectory_figures(result.trajectory, svg_dir):
        print(f"wrote {path}")
    _print_kv(result.metrics.to_kv())
    return EXIT_OK


def cmd_check_gains(args: argparse.Namespace) -> int:
    config = _load_scenario(args)
    if config.bounds is not None:
        bounds = config.bounds
        print("using bounds from the config file")
    else:
        bounds = estimate_bounds(
            config.plant, config.horizon, config.h, config.memory_length
        )
        print(
            f"using empirical bounds from a {config.horizon:g} s simulation "
            "(x1.2 safety margin)"
        )
    report = check_gains(config.gains, bounds)
    print(report.to_text())
    _print_kv(report.to_kv())
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    config = _load_scenario(args)
    result = run_simulation(config)
    if result.diverged:
        print(
            f"simulation diverged at t = {result.divergence_time:.6g}; "
            "cannot verify",
            file=sys.stderr,
        )
        return EXIT_DIVERGED
    traj = result.trajectory
    errors = np.column_stack([traj.e, traj.e_f])
    check = verify_lemma1(
        errors,
        config.p_matrix,
        config.plant.alpha,
        config.h,
        config.lemma_tolerance,
    )
    _print_kv(
        [
            ("samples", str(traj.n_samples)),
            ("tolerance", f"{check.tolerance:.17g}"),
            ("max_violation", f"{check.max_violation:.17g}"),
            ("violations", str(len(check.violation_times))),
            ("passed", "yes" if check.passed else "no"),
        ]
    )
    if not check.passed:
        first = ", ".join(f"{t:.6g}" for t in check.violation_times[:10])
        print(f"violation times (first 10): {first}")
    return EXIT_OK


def cmd_gl_test(args: argparse.Namespace) -> int:
    """Analytic oracle suite: prints max errors, fails on any miss."""
    h = args.h
    failures = []

    t = np.arange(0, 1.0 + h / 2, h)
    hist = GLHistory.from_samples(h, np.full(t.size, 2.5))
    const_err = abs(gl_derivative(hist, 0.7))
    _print_kv([("constant_signal_error", f"{const_err:.3e}")])
    if const_err > 1e-8:
        failures.append("constant signal")

    hist = GLHistory.from_samples(h, t**1.5)
    exact = caputo_power_derivative(0.7, 1.5, 1.0)
    power_err = abs(gl_derivative(hist, 0.7) - exact) / exact
    _print_kv([("power_function_rel_error", f"{power_err:.3e}")])
    if power_err > 0.01:
        failures.append("power function")

    hist = GLHistory.from_samples(h, 2.0 * t)
    backward = (2.0 * t[-1] - 2.0 * t[-2]) / h
    limit_err = abs(gl_derivative(hist, 1 - 1e-9) - backward) / abs(backward)
    _print_kv([("near_integer_limit_rel_error", f"{limit_err:.3e}")])
    if limit_err > 0.001:
        failures.append("near-integer limit")

    n_steps = round(2.0 / h)
    tt, x = solve_fde(lambda state, time: -state, [1.0], 0.7, h, n_steps)
    exact_ml = np.array(
        [mittag_leffler(0.7, -(ti**0.7)) if ti > 0 else 1.0 for ti in tt]
    )
    ml_err = float(np.max(np.abs(x[:, 0] - exact_ml) / np.abs(exact_ml)))
    _print_kv([("mittag_leffler_rel_error", f"{ml_err:.3e}")])
    if ml_err > 0.01:
        failures.append("Mittag-Leffler relaxation")

    if failures:
        print(f"oracle suite FAILED: {', '.join(failures)}", file=sys.stderr)
        return EXIT_INTERNAL
    print("oracle suite passed")
    return EXIT_OK


def main(argv: "list[str] | None" = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "simulate": cmd_simulate,
        "check-gains": cmd_check_gains,
        "verify": cmd_verify,
        "gl-test": cmd_gl_test,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DivergenceError as exc:
        print(f"divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
