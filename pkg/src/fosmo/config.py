"""Scenario configuration: a line-based `key = value` format with sections.

Example::

    # comment
    preset = "paper-example"      # optional; loads the bundled scenario first

    [plant]
    n = 3
    alpha = 0.7
    f1 = "-0.5*x1 - sin(x2) - x3*abs(x3)"
    f2 = "1"
    fault = "0.5*cos(0.5*pi*t)"
    x0 = 0.1, 0.1, -0.1

    [observer]
    lambda = 0.1, 0.1, 0.1, 0.1   # n + 1 entries
    alpha_gain = 1, 2, 5, 10      # n + 1 entries
    epsilon = 0.02
    flag_dwell_steps = 1          # optional, default 1
    xhat0 = 0, 0, 0               # optional initial values, default zeros
    xtilde0 = 0, 0
    ftilde0 = 0
    fhat0 = 0
    thetatilde0 = 0

    [sim]
    h = 0.001
    horizon = 30
    memory_length = 5000          # optional, omit for unbounded memory

    [output]
    csv = "trajectory.csv"
    svg = "."                     # directory for the figure files
    band = 0.04                   # metrics band, default 2 * epsilon

    [bounds]                      # optional; overrides empirical estimation
    state = 0.5, 0.8, 1.1
    fault = 0.6
    f1 = 1.0
    f2 = 1.2
    fault_rate = 1.0
    f1_rate = 2.0
    f2_rate = 0.1

    [analysis]                    # optional
    p_matrix = 1, 0, 0, 0, 1, 0, 0, 0, 1    # row-major (n + 1)^2 entries
    lemma_tolerance = 0.5

Values after a preset line override the preset's.  Keys take a value once
per file; strings are double-quoted, lists comma-separated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import expr
from .observer import GainSet, ObserverState
from .plant import Bounds, PlantModel

__all__ = ["ConfigError", "ScenarioConfig", "load_config", "config_to_text", "PRESETS"]


class ConfigError(ValueError):
    def __init__(self, message: str, line: "int | None" = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


PAPER_EXAMPLE = """\
# Bundled three-state benchmark scenario: a cubic-damped chain of order 0.7
# driven by a 0.25 Hz cosine fault, observed from x1 alone.
[plant]
n = 3
alpha = 0.7
f1 = "-0.5*x1 - sin(x2) - x3*abs(x3)"
f2 = "1"
fault = "0.5*cos(0.5*pi*t)"
x0 = 0.1, 0.1, -0.1

[observer]
lambda = 0.1, 0.1, 0.1, 0.1
alpha_gain = 1, 2, 5, 10
epsilon = 0.06
flag_dwell_steps = 1

[sim]
h = 0.001
horizon = 30

[output]
csv = "trajectory.csv"
svg = "."
band = 0.2
"""

PRESETS = {"paper-example": PAPER_EXAMPLE}


@dataclass(frozen=True)
class ScenarioConfig:
    """Fully validated scenario: plant, observer, grid and output choices."""

    plant: PlantModel
    gains: GainSet
    xhat0: np.ndarray
    xtilde0: np.ndarray
    ftilde0: float
    fhat0: float
    thetatilde0: float
    h: float
    horizon: float
    memory_length: "int | None"
    csv_path: str
    svg_dir: str
    metrics_band: float
    bounds: "Bounds | None" = None
    p_matrix: "np.ndarray | None" = None
    lemma_tolerance: "float | None" = None

    def initial_observer_state(self) -> ObserverState:
        n = self.plant.n
        state = ObserverState.zeros(n)
        return replace(
            state,
            xhat=self.xhat0.copy(),
            xtilde=self.xtilde0.copy(),
            ftilde=self.ftilde0,
            fhat=self.fhat0,
            thetatilde=self.thetatilde0,
        )


class _Raw:
    """Parsed but unvalidated file content: section -> key -> (text, line)."""

    def __init__(self) -> None:
        self.preset: "str | None" = None
        self.preset_line: "int | None" = None
        self.sections: "dict[str, dict[str, tuple[str, int]]]" = {}
        self.section_lines: "dict[str, int]" = {}

    def merge_over(self, base: "_Raw") -> "_Raw":
        merged = _Raw()
        merged.sections = {k: dict(v) for k, v in base.sections.items()}
        merged.section_lines = dict(base.section_lines)
        for name, entries in self.sections.items():
            merged.sections.setdefault(name, {}).update(entries)
            merged.section_lines.setdefault(name, self.section_lines[name])
        return merged


_KNOWN_KEYS = {
    "plant": {"n", "alpha", "f1", "f2", "fault", "x0"},
    "observer": {
        "lambda",
        "alpha_gain",
        "epsilon",
        "flag_dwell_steps",
        "xhat0",
        "xtilde0",
        "ftilde0",
        "fhat0",
        "thetatilde0",
    },
    "sim": {"h", "horizon", "memory_length"},
    "output": {"csv", "svg", "band"},
    "bounds": {"state", "fault", "f1", "f2", "fault_rate", "f1_rate", "f2_rate"},
    "analysis": {"p_matrix", "lemma_tolerance"},
}


def _strip_comment(line: str) -> str:
    # '#' inside double quotes does not start a comment
    out = []
    in_string = False
    for ch in line:
        if ch == '"':
            in_string = not in_string
        elif ch == "#" and not in_string:
            break
        out.append(ch)
    return "".join(out)


def _parse_raw(text: str) -> _Raw:
    raw = _Raw()
    section: "str | None" = None
    for lineno, original in enumerate(text.splitlines(), start=1):
        line = _strip_comment(original).strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError("malformed section header", lineno)
            section = line[1:-1].strip()
            if section not in _KNOWN_KEYS:
                raise ConfigError(f"unknown section [{section}]", lineno)
            raw.sections.setdefault(section, {})
            raw.section_lines.setdefault(section, lineno)
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", lineno)
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key or not value:
            raise ConfigError("expected 'key = value'", lineno)
        if section is None:
            if key != "preset":
                raise ConfigError(f"key {key!r} appears before any [section]", lineno)
            raw.preset = _string(value, lineno)
            raw.preset_line = lineno
            continue
        if key not in _KNOWN_KEYS[section]:
            raise ConfigError(f"unknown key {key!r} in [{section}]", lineno)
        if key in raw.sections[section]:
            raise ConfigError(f"duplicate key {key!r} in [{section}]", lineno)
        raw.sections[section][key] = (value, lineno)
    return raw


def _string(value: str, line: int) -> str:
    if len(value) >= 2 and value[0] == '"' and value[-1] == '"':
        return value[1:-1]
    raise ConfigError(f"expected a double-quoted string, got {value!r}", line)


def _number(value: str, line: int) -> float:
    try:
        out = float(value)
    except ValueError:
        raise ConfigError(f"malformed number {value!r}", line) from None
    if not math.isfinite(out):
        raise ConfigError(f"number must be finite, got {value!r}", line)
    return out


def _integer(value: str, line: int) -> int:
    out = _number(value, line)
    if out != int(out):
        raise ConfigError(f"expected an integer, got {value!r}", line)
    return int(out)


def _number_list(value: str, line: int) -> np.ndarray:
    parts = [p.strip() for p in value.split(",")]
    if any(not p for p in parts):
        raise ConfigError(f"malformed number list {value!r}", line)
    return np.array([_number(p, line) for p in parts])


def _expression(value: str, line: int, label: str) -> "expr.Expr":
    text = _string(value, line)
    try:
        return expr.parse(text)
    except expr.ExprSyntaxError as exc:
        raise ConfigError(f"bad {label} expression: {exc}", line) from exc


class _Section:
    def __init__(self, raw: _Raw, name: str):
        self.name = name
        self.entries = raw.sections.get(name, {})
        self.line = raw.section_lines.get(name)

    def require(self, key: str) -> "tuple[str, int]":
        if key not in self.entries:
            where = self.line if self.line is not None else 0
            raise ConfigError(f"missing key {key!r} in [{self.name}]", where)
        return self.entries[key]

    def optional(self, key: str) -> "tuple[str, int] | None":
        return self.entries.get(key)


def load_config(text: str) -> ScenarioConfig:
    """Parse and validate configuration text into a scenario.

    A ``preset = "<name>"`` line expands the named built-in scenario first;
    any keys in the file then override the preset's values.
    """
    raw = _parse_raw(text)
    if raw.preset is not None:
        if raw.preset not in PRESETS:
            raise ConfigError(
                f"unknown preset {raw.preset!r} (available: {', '.join(sorted(PRESETS))})",
                raw.preset_line,
            )
        raw = raw.merge_over(_parse_raw(PRESETS[raw.preset]))

    plant_sec = _Section(raw, "plant")
    if not plant_sec.entries and "plant" not in raw.sections:
        raise ConfigError("missing [plant] section")

    value, line = plant_sec.require("n")
    n = _integer(value, line)
    if n < 2:
        raise ConfigError(f"n must be at least 2, got {n}", line)
    value, line = plant_sec.require("alpha")
    alpha = _number(value, line)
    if not 0.0 < alpha < 1.0:
        raise ConfigError(f"alpha must lie in (0, 1), got {value}", line)
    f1 = _expression(*plant_sec.require("f1"), label="f1")
    f2 = _expression(*plant_sec.require("f2"), label="f2")
    fault = _expression(*plant_sec.require("fault"), label="fault")
    value, line = plant_sec.require("x0")
    x0 = _number_list(value, line)
    if x0.size != n:
        raise ConfigError(f"x0 needs {n} entries, got {x0.size}", line)
    try:
        plant = PlantModel(n=n, alpha=alpha, f1=f1, f2=f2, fault=fault, x0=x0)
    except ValueError as exc:
        raise ConfigError(str(exc), plant_sec.line) from exc

    obs_sec = _Section(raw, "observer")
    value, line = obs_sec.require("lambda")
    lam = _number_list(value, line)
    if lam.size != n + 1:
        raise ConfigError(f"lambda needs n + 1 = {n + 1} entries, got {lam.size}", line)
    value, line = obs_sec.require("alpha_gain")
    alpha_gain = _number_list(value, line)
    if alpha_gain.size != n + 1:
        raise ConfigError(
            f"alpha_gain needs n + 1 = {n + 1} entries, got {alpha_gain.size}", line
        )
    value, line = obs_sec.require("epsilon")
    epsilon = _number(value, line)
    dwell_entry = obs_sec.optional("flag_dwell_steps")
    dwell = _integer(*dwell_entry) if dwell_entry else 1
    try:
        gains = GainSet(
            lam=lam, alpha_gain=alpha_gain, epsilon=epsilon, flag_dwell_steps=dwell
        )
    except ValueError as exc:
        raise ConfigError(str(exc), obs_sec.line) from exc

    def observer_vector(key: str, size: int) -> np.ndarray:
        entry = obs_sec.optional(key)
        if entry is None:
            return np.zeros(size)
        vec = _number_list(*entry)
        if vec.size != size:
            raise ConfigError(f"{key} needs {size} entries, got {vec.size}", entry[1])
        return vec

    def observer_scalar(key: str) -> float:
        entry = obs_sec.optional(key)
        return _number(*entry) if entry else 0.0

    sim_sec = _Section(raw, "sim")
    value, line = sim_sec.require("h")
    h = _number(value, line)
    if h <= 0.0:
        raise ConfigError(f"h must be positive, got {value}", line)
    value, line = sim_sec.require("horizon")
    horizon = _number(value, line)
    if horizon <= h:
        raise ConfigError(f"horizon must exceed h, got {value}", line)
    memory_entry = sim_sec.optional("memory_length")
    memory: "int | None" = None
    if memory_entry is not None:
        memory = _integer(*memory_entry)
        if memory < 1:
            raise ConfigError(
                f"memory_length must be at least 1, got {memory}", memory_entry[1]
            )

    out_sec = _Section(raw, "output")
    csv_entry = out_sec.optional("csv")
    csv_path = _string(*csv_entry) if csv_entry else "trajectory.csv"
    svg_entry = out_sec.optional("svg")
    svg_dir = _string(*svg_entry) if svg_entry else "."
    band_entry = out_sec.optional("band")
    band = _number(*band_entry) if band_entry else 2.0 * epsilon
    if band <= 0.0:
        raise ConfigError("band must be positive", band_entry[1] if band_entry else 0)

    bounds = None
    if "bounds" in raw.sections:
        b_sec = _Section(raw, "bounds")
        value, line = b_sec.require("state")
        state = _number_list(value, line)
        if state.size != n:
            raise ConfigError(f"state needs {n} entries, got {state.size}", line)
        try:
            bounds = Bounds(
                state_sup=state,
                fault_sup=_number(*b_sec.require("fault")),
                f1_sup=_number(*b_sec.require("f1")),
                f2_sup=_number(*b_sec.require("f2")),
                fault_rate_sup=_number(*b_sec.require("fault_rate")),
                f1_rate_sup=_number(*b_sec.require("f1_rate")),
                f2_rate_sup=_number(*b_sec.require("f2_rate")),
            )
        except ValueError as exc:
            raise ConfigError(str(exc), b_sec.line) from exc

    p_matrix = None
    lemma_tolerance = None
    if "analysis" in raw.sections:
        a_sec = _Section(raw, "analysis")
        p_entry = a_sec.optional("p_matrix")
        if p_entry is not None:
            flat = _number_list(*p_entry)
            side = n + 1
            if flat.size != side * side:
                raise ConfigError(
                    f"p_matrix needs (n + 1)^2 = {side * side} entries, got {flat.size}",
                    p_entry[1],
                )
            p_matrix = flat.reshape(side, side)
        tol_entry = a_sec.optional("lemma_tolerance")
        if tol_entry is not None:
            lemma_tolerance = _number(*tol_entry)
            if lemma_tolerance <= 0.0:
                raise ConfigError("lemma_tolerance must be positive", tol_entry[1])

    return ScenarioConfig(
        plant=plant,
        gains=gains,
        xhat0=observer_vector("xhat0", n),
        xtilde0=observer_vector("xtilde0", n - 1),
        ftilde0=observer_scalar("ftilde0"),
        fhat0=observer_scalar("fhat0"),
        thetatilde0=observer_scalar("thetatilde0"),
        h=h,
        horizon=horizon,
        memory_length=memory,
        csv_path=csv_path,
        svg_dir=svg_dir,
        metrics_band=band,
        bounds=bounds,
        p_matrix=p_matrix,
        lemma_tolerance=lemma_tolerance,
    )


def _format_number(v: float) -> str:
    return repr(float(v))


def config_to_text(config: ScenarioConfig) -> str:
    """Canonical rendering of a scenario, parseable by :func:`load_config`."""
    from .expr import to_text

    lines = ["[plant]"]
    lines.append(f"n = {config.plant.n}")
    lines.append(f"alpha = {_format_number(config.plant.alpha)}")
    lines.append(f'f1 = "{to_text(config.plant.f1)}"')
    lines.append(f'f2 = "{to_text(config.plant.f2)}"')
    lines.append(f'fault = "{to_text(config.plant.fault)}"')
    lines.append("x0 = " + ", ".join(_format_number(v) for v in config.plant.x0))
    lines.append("")
    lines.append("[observer]")
    lines.append("lambda = " + ", ".join(_format_number(v) for v in config.gains.lam))
    lines.append(
        "alpha_gain = " + ", ".join(_format_number(v) for v in config.gains.alpha_gain)
    )
    lines.append(f"epsilon = {_format_number(config.gains.epsilon)}")
    lines.append(f"flag_dwell_steps = {config.gains.flag_dwell_steps}")
    lines.append("xhat0 = " + ", ".join(_format_number(v) for v in config.xhat0))
    lines.append("xtilde0 = " + ", ".join(_format_number(v) for v in config.xtilde0))
    lines.append(f"ftilde0 = {_format_number(config.ftilde0)}")
    lines.append(f"fhat0 = {_format_number(config.fhat0)}")
    lines.append(f"thetatilde0 = {_format_number(config.thetatilde0)}")
    lines.append("")
    lines.append("[sim]")
    lines.append(f"h = {_format_number(config.h)}")
    lines.append(f"horizon = {_format_number(config.horizon)}")
    if config.memory_length is not None:
        lines.append(f"memory_length = {config.memory_length}")
    lines.append("")
    lines.append("[output]")
    lines.append(f'csv = "{config.csv_path}"')
    lines.append(f'svg = "{config.svg_dir}"')
    lines.append(f"band = {_format_number(config.metrics_band)}")
    if config.bounds is not None:
        b = config.bounds
        lines.append("")
        lines.append("[bounds]")
        lines.append("state = " + ", ".join(_format_number(v) for v in b.state_sup))
        lines.append(f"fault = {_format_number(b.fault_sup)}")
        lines.append(f"f1 = {_format_number(b.f1_sup)}")
        lines.append(f"f2 = {_format_number(b.f2_sup)}")
        lines.append(f"fault_rate = {_format_number(b.fault_rate_sup)}")
        lines.append(f"f1_rate = {_format_number(b.f1_rate_sup)}")
        lines.append(f"f2_rate = {_format_number(b.f2_rate_sup)}")
    if config.p_matrix is not None or config.lemma_tolerance is not None:
        lines.append("")
        lines.append("[analysis]")
        if config.p_matrix is not None:
            lines.append(
                "p_matrix = "
                + ", ".join(_format_number(v) for v in config.p_matrix.ravel())
            )
        if config.lemma_tolerance is not None:
            lines.append(f"lemma_tolerance = {_format_number(config.lemma_tolerance)}")
    return "\n".join(lines) + "\n"
