import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fosmo.expr import parse
from fosmo.fraccalc import GLHistory
from fosmo.observer import (
    ErrorRecord,
    GainSet,
    ObserverState,
    advance_flags,
    observer_rhs,
    observer_step,
    update_flags,
)


def gains_for(n, lam=0.1, gain=1.0, epsilon=0.01, dwell=1):
    return GainSet(
        lam=np.full(n + 1, lam),
        alpha_gain=np.full(n + 1, gain),
        epsilon=epsilon,
        flag_dwell_steps=dwell,
    )


BENCH_GAINS = GainSet(
    lam=np.array([0.1, 0.1, 0.1, 0.1]),
    alpha_gain=np.array([1.0, 2.0, 5.0, 10.0]),
    epsilon=0.06,
)


def test_gainset_validation():
    with pytest.raises(ValueError):
        GainSet(np.array([0.1, 0.1]), np.array([1.0, 1.0]), 0.01)  # n + 1 < 3
    with pytest.raises(ValueError):
        GainSet(np.array([0.1, 0.1, 0.0]), np.ones(3), 0.01)
    with pytest.raises(ValueError):
        GainSet(np.ones(3), np.ones(3), 0.0)
    with pytest.raises(ValueError):
        GainSet(np.ones(3), np.ones(3), 0.01, flag_dwell_steps=0)
    with pytest.raises(ValueError):
        GainSet(np.ones(3), np.ones(4), 0.01)


def test_update_flags_examples():
    assert update_flags(np.array([0.0, 0.0, 0.0]), 0.01).tolist() == [1, 1, 1]
    # the cumulative clause forces E3 = 0 despite |e3| <= eps
    assert update_flags(np.array([0.005, 0.02, 0.001]), 0.01).tolist() == [1, 0, 0]
    assert update_flags(np.array([0.02, 0.0, 0.0]), 0.01).tolist() == [0, 0, 0]
    with pytest.raises(ValueError):
        update_flags(np.zeros(3), 0.0)


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.floats(-1, 1), min_size=2, max_size=6),
    st.floats(min_value=1e-6, max_value=1.0),
)
def test_update_flags_monotone_in_index(errors, epsilon):
    flags = update_flags(np.array(errors), epsilon)
    assert np.all(np.diff(flags.astype(int)) <= 0)


def test_advance_flags_dwell():
    counts = np.zeros(2, dtype=np.int64)
    errors = ErrorRecord(e=np.zeros(2), e_f=0.0)
    counts, flags = advance_flags(counts, errors, 0.01, dwell=3)
    assert flags.tolist() == [0, 0]
    counts, flags = advance_flags(counts, errors, 0.01, dwell=3)
    assert flags.tolist() == [0, 0]
    counts, flags = advance_flags(counts, errors, 0.01, dwell=3)
    assert flags.tolist() == [1, 1]
    # an out-of-band e1 resets both counters: the cumulative condition for
    # flag 2 includes |e1| as well
    bad = ErrorRecord(e=np.array([0.02, 0.0]), e_f=0.0)
    counts, flags = advance_flags(counts, bad, 0.01, dwell=3)
    assert flags.tolist() == [0, 0]
    assert counts.tolist() == [0, 0]


def test_rhs_on_sliding_surface():
    n = 3
    state = replace(
        ObserverState.zeros(n),
        xtilde=np.array([0.37, -0.2]),
        thetatilde=0.81,
        flags=np.ones(n, dtype=np.int8),
    )
    # all internal errors are zero when xhat matches the auxiliary estimates
    state = replace(state, xhat=np.array([0.0, 0.37, -0.2]))
    rhs = observer_rhs(state, 0.0, parse("0"), parse("1"), gains_for(n))
    assert rhs[0] == 0.37  # feedforward only
    assert rhs[2 * n] == 0.81  # fault channel passes thetatilde through
    # corrective and integral terms vanish everywhere
    assert rhs[n] == 0.0
    assert rhs[2 * n + 1] == 0.0


def test_rhs_manufactured_first_channel():
    n = 3
    state = ObserverState.zeros(n)  # flags all zero
    gains = GainSet(
        lam=np.array([0.1, 0.1, 0.1, 0.1]),
        alpha_gain=np.array([1.0, 2.0, 5.0, 10.0]),
        epsilon=0.01,
    )
    rhs = observer_rhs(state, 0.04, parse("0"), parse("1"), gains)
    # e1 = 0.04: sqrt term 0.1 * 0.2 = 0.02 plus xtilde2 = 0
    assert rhs[0] == pytest.approx(0.02, abs=1e-15)
    assert rhs[n] == 1.0
    assert np.all(rhs[1:n] == 0.0)
    assert np.all(rhs[n + 1 :] == 0.0)


def test_rhs_matches_hand_coded_benchmark_structure():
    # Independent transcription of the three-state observer equations.
    def reference(state, y, gains, ftilde, thetatilde):
        lam, ag = gains.lam, gains.alpha_gain
        e1 = y - state.xhat[0]
        e2 = state.xtilde[0] - state.xhat[1]
        e3 = state.xtilde[1] - state.xhat[2]
        ef = ftilde - state.fhat
        E1, E2, E3 = (int(v) for v in state.flags)
        sgn = lambda v: (0.0 if v == 0 else math.copysign(1.0, v))
        xt = np.array([y, state.xtilde[0], state.xtilde[1]])
        f1v = -0.5 * xt[0] - math.sin(xt[1]) - xt[2] * abs(xt[2])
        return np.array(
            [
                state.xtilde[0] + lam[0] * math.sqrt(abs(e1)) * sgn(e1),
                E1 * (state.xtilde[1] + lam[1] * math.sqrt(abs(e2)) * sgn(e2)),
                E2 * (f1v + ftilde + lam[2] * math.sqrt(abs(e3)) * sgn(e3)),
                ag[0] * sgn(e1),
                E1 * ag[1] * sgn(e2),
                E2 * ag[2] * sgn(e3),
                E3 * (thetatilde + lam[3] * math.sqrt(abs(ef)) * sgn(ef)),
                E3 * ag[3] * sgn(ef),
            ]
        )

    rng = np.random.default_rng(7)
    f1 = parse("-0.5*x1 - sin(x2) - x3*abs(x3)")
    f2 = parse("1")
    for flags in ([0, 0, 0], [1, 0, 0], [1, 1, 0], [1, 1, 1]):
        state = ObserverState(
            xhat=rng.normal(size=3),
            xtilde=rng.normal(size=2),
            ftilde=rng.normal(),
            fhat=rng.normal(),
            thetatilde=rng.normal(),
            flags=np.array(flags, dtype=np.int8),
            dwell_counts=np.zeros(3, dtype=np.int64),
        )
        y = rng.normal()
        got = observer_rhs(state, y, f1, f2, BENCH_GAINS)
        want = reference(state, y, BENCH_GAINS, state.ftilde, state.thetatilde)
        # packing: [xhat1..3, xtilde2..3, ftilde, fhat, thetatilde]
        assert got[0] == pytest.approx(want[0], rel=1e-14, abs=1e-14)
        assert got[1] == pytest.approx(want[1], rel=1e-14, abs=1e-14)
        assert got[2] == pytest.approx(want[2], rel=1e-14, abs=1e-14)
        assert got[3] == pytest.approx(want[3], rel=1e-14, abs=1e-14)
        assert got[4] == pytest.approx(want[4], rel=1e-14, abs=1e-14)
        assert got[5] == pytest.approx(want[5], rel=1e-14, abs=1e-14)
        assert got[6] == pytest.approx(want[6], rel=1e-14, abs=1e-14)
        assert got[7] == pytest.approx(want[7], rel=1e-14, abs=1e-14)


def make_histories(state, h=1e-3, count=1):
    hists = [GLHistory(h) for _ in range(2 * state.n + 2)]
    for _ in range(count):
        for hist, value in zip(hists, state.as_vector()):
            hist.append(value)
    return hists


def test_zero_observer_stays_at_zero():
    n = 3
    state = ObserverState.zeros(n)
    hists = make_histories(state)
    for _ in range(50):
        state = observer_step(
            state, hists, 0.0, parse("0"), parse("1"), gains_for(n), 0.7
        )
        for hist, value in zip(hists, state.as_vector()):
            hist.append(value)
    assert np.all(state.as_vector() == 0.0)
    assert state.flags.tolist() == [1, 1, 1]


def test_gated_channels_hold_bit_exactly():
    n = 3
    state = ObserverState(
        xhat=np.array([0.0, 0.123456789, -0.5]),
        xtilde=np.array([0.7, 0.25]),
        ftilde=0.33,
        fhat=0.1,
        thetatilde=-0.9,
        flags=np.zeros(n, dtype=np.int8),
        dwell_counts=np.zeros(n, dtype=np.int64),
    )
    hists = make_histories(state)
    y = 5.0  # |e1| far outside the band, so every flag stays down
    nxt = observer_step(state, hists, y, parse("0"), parse("1"), gains_for(n), 0.7)
    assert nxt.flags.tolist() == [0, 0, 0]
    assert nxt.xhat[0] != state.xhat[0]
    assert nxt.xtilde[0] != state.xtilde[0]
    # channels 2..4 frozen: identical bit patterns
    assert nxt.xhat[1] == state.xhat[1]
    assert nxt.xhat[2] == state.xhat[2]
    assert nxt.xtilde[1] == state.xtilde[1]
    assert nxt.ftilde == state.ftilde
    assert nxt.fhat == state.fhat
    assert nxt.thetatilde == state.thetatilde


def test_dwell_high_freezes_everything_but_first_pair():
    n = 3
    gains = gains_for(n, epsilon=100.0, dwell=10**9)
    state = ObserverState.zeros(n)
    hists = make_histories(state)
    rng = np.random.default_rng(0)
    for k in range(100):
        state = observer_step(
            state, hists, rng.normal(), parse("0"), parse("1"), gains, 0.7
        )
        for hist, value in zip(hists, state.as_vector()):
            hist.append(value)
    vec = state.as_vector()
    assert np.all(vec[1:n] == 0.0)  # xhat2, xhat3 untouched
    assert np.all(vec[n + 1 :] == 0.0)  # xtilde3, ftilde, fhat, thetatilde
    assert vec[0] != 0.0 and vec[n] != 0.0  # first pair moved


def test_observer_step_requires_matching_histories():
    state = ObserverState.zeros(2)
    hists = make_histories(state)
    with pytest.raises(ValueError):
        observer_step(state, hists[:-1], 0.0, parse("0"), parse("1"), gains_for(2), 0.7)


def test_equivalent_injection_against_classical_super_twisting():
    # Constant unknown rate: plant x1 grows at rate d, the auxiliary estimate
    # must recover d.  At order ~1 the GL scheme reduces to forward Euler, so
    # a hand-rolled classical super-twisting run is an independent oracle.
    d = 0.3
    h = 1e-3
    steps = 4000
    alpha = 1 - 1e-9
    lam1, a1 = 1.0, 1.0
    n = 2
    gains = GainSet(
        lam=np.array([lam1, 0.1, 0.1]),
        alpha_gain=np.array([a1, 0.1, 0.1]),
        epsilon=0.01,
        flag_dwell_steps=10**9,  # keep later channels out of the picture
    )
    state = ObserverState.zeros(n)
    hists = make_histories(state, h=h)
    xhat_hist = []
    for k in range(steps):
        y = d * k * h
        state = observer_step(state, hists, y, parse("0"), parse("1"), gains, alpha)
        for hist, value in zip(hists, state.as_vector()):
            hist.append(value)
        xhat_hist.append((state.xhat[0], state.xtilde[0]))

    # classical super-twisting differentiator, forward Euler
    z1, z2 = 0.0, 0.0
    for k in range(steps):
        y = d * k * h
        e = y - z1
        sgn = (e > 0) - (e < 0)
        z1, z2 = z1 + h * (z2 + lam1 * math.sqrt(abs(e)) * sgn), z2 + h * a1 * sgn

    assert state.xtilde[0] == pytest.approx(z2, abs=2e-3)
    assert state.xtilde[0] == pytest.approx(d, abs=0.02)
    final_e1 = d * (steps - 1) * h - state.xhat[0]
    assert abs(final_e1) < 0.01
