import xml.etree.ElementTree as ET

import numpy as np
import pytest

from fosmo.config import load_config
from fosmo.csvio import read_trajectory_csv, trajectory_csv_bytes, write_trajectory_csv
from fosmo.simulate import run_simulation
from fosmo.svgplot import render_line_chart, trajectory_figures, write_trajectory_figures

CFG = """\
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

[sim]
h = 0.001
horizon = 0.4
"""


@pytest.fixture(scope="module")
def short_traj():
    return run_simulation(load_config(CFG)).trajectory


def test_csv_round_trip_is_bit_exact(short_traj, tmp_path):
    path = tmp_path / "traj.csv"
    write_trajectory_csv(short_traj, path)
    back = read_trajectory_csv(path)
    assert back.n == short_traj.n
    assert back.h == short_traj.h
    for name in ("t", "x", "xhat", "xtilde", "fault", "fhat", "ftilde",
                 "thetatilde", "e", "e_f"):
        assert np.array_equal(getattr(back, name), getattr(short_traj, name)), name
    assert np.array_equal(back.flags, short_traj.flags)
    # re-serializing the reread trajectory reproduces the same bytes
    assert trajectory_csv_bytes(back) == path.read_bytes()


def test_csv_values_use_full_precision(short_traj):
    text = trajectory_csv_bytes(short_traj).decode()
    row = text.splitlines()[5].split(",")
    assert float(row[1]) == short_traj.x[4, 0]
    # flags are plain integers
    assert row[-1] in ("0", "1")


def test_csv_reader_rejects_foreign_files(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n3,4\n")
    with pytest.raises(ValueError):
        read_trajectory_csv(bad)
    short = tmp_path / "short.csv"
    short.write_text("t,x1,x2\n")
    with pytest.raises(ValueError):
        read_trajectory_csv(short)


def test_figures_cover_states_and_fault(short_traj):
    figures = trajectory_figures(short_traj)
    assert len(figures) == 2 * short_traj.n + 2
    names = [name for name, _, _ in figures]
    assert names[0] == "fig1_state1_estimate.svg"
    assert names[1] == "fig2_state1_error.svg"
    assert names[-2] == "fig7_fault_estimate.svg"
    assert names[-1] == "fig8_fault_error.svg"


def test_written_figures_are_valid_svg(short_traj, tmp_path):
    written = write_trajectory_figures(short_traj, tmp_path)
    assert len(written) == 8
    for path in written:
        root = ET.parse(path).getroot()
        assert root.tag.endswith("svg")
        polylines = [el for el in root.iter() if el.tag.endswith("polyline")]
        assert polylines
        texts = [el.text for el in root.iter() if el.tag.endswith("text")]
        assert any("t [s]" in (t or "") for t in texts)


def test_chart_decimation_and_constant_series(tmp_path):
    t = np.linspace(0, 1, 50_000)
    target = tmp_path / "big.svg"
    render_line_chart(
        target,
        "decimated",
        "t",
        "y",
        [("flat", t, np.ones_like(t)), ("ramp", t, t)],
        max_points=500,
    )
    content = target.read_text()
    # decimation keeps the polylines bounded
    longest = max(
        content.count(",", s, content.index('"', s))
        for s in (i + len('points="') for i in _find_all(content, 'points="'))
    )
    assert longest <= 1002
    ET.fromstring(content)


def _find_all(haystack, needle):
    start = 0
    while True:
        idx = haystack.find(needle, start)
        if idx < 0:
            return
        yield idx
        start = idx + 1
