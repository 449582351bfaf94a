import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import haar_unitary
from pointcouple import (
    DimensionMismatch,
    GridOverflow,
    PropagationWindow,
    UnitaryScatteringMatrix,
    Wavepacket,
    beam_splitter,
    phase_shifter,
    propagate,
)

DX = 0.01
X_MIN = -10.0
N_PTS = 2001


def gaussian(center, width=0.3):
    x = X_MIN + DX * np.arange(N_PTS)
    return np.exp(-((x - center) ** 2) / (2 * width**2)).astype(complex)


def packet(envs, offsets=None):
    return Wavepacket(X_MIN, DX, np.array(envs), offsets)


def test_identity_is_pure_shift():
    w = packet([gaussian(-5)])
    out = propagate(w, UnitaryScatteringMatrix([[1]]), PropagationWindow(0, 3.0))
    np.testing.assert_allclose(out.envelopes[0, 300:], w.envelopes[0, :-300], atol=1e-15)
    np.testing.assert_allclose(out.envelopes[0, :300], 0)


def test_phase_shifter_after_crossing():
    phi = 0.7
    w = packet([gaussian(-3)])
    out = propagate(w, phase_shifter(phi), PropagationWindow(0, 6.0))
    expected = np.roll(w.envelopes[0], 600) * np.exp(1j * phi)
    np.testing.assert_allclose(out.envelopes[0], expected, atol=1e-12)


def test_beam_splitter_full_window():
    w = packet([gaussian(-3), np.zeros(N_PTS)])
    out = propagate(w, beam_splitter(math.pi / 4, 0), PropagationWindow(0, 6.0))
    shifted = np.roll(w.envelopes[0], 600)
    np.testing.assert_allclose(out.envelopes[0], shifted / math.sqrt(2), atol=1e-12)
    np.testing.assert_allclose(out.envelopes[1], -shifted / math.sqrt(2), atol=1e-12)


def test_causality_outside_window():
    # entirely downstream, and entirely upstream of where the window can reach
    s = beam_splitter(0.9, 0.2)
    w = packet([gaussian(4), gaussian(-8)])
    out = propagate(w, s, PropagationWindow(0, 1.0))
    np.testing.assert_allclose(out.envelopes, np.roll(w.envelopes, 100, axis=1), atol=1e-12)


def test_edge_samples_use_half_sum():
    env = np.zeros(N_PTS, dtype=complex)
    i0 = 1000  # x = 0
    env[i0] = 1.0
    env[i0 - 50] = 1.0
    w = packet([env])
    out = propagate(w, phase_shifter(1.0), PropagationWindow(0, 0.5))
    half = 0.5 * (1 + np.exp(1j))
    assert out.envelopes[0, i0 + 50] == pytest.approx(half)  # started at x0, ends at x0 + tau
    assert out.envelopes[0, i0] == pytest.approx(half)  # arrives exactly at x0


def test_overflow_and_mismatch():
    w = packet([gaussian(8)])
    with pytest.raises(GridOverflow):
        propagate(w, phase_shifter(0.1), PropagationWindow(0, 5.0))
    with pytest.raises(DimensionMismatch):
        propagate(w, beam_splitter(0.1, 0), PropagationWindow(0, 1.0))


def test_tau_rounding_warns():
    w = packet([gaussian(-5)])
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        propagate(w, phase_shifter(0.1), PropagationWindow(0, 1.0037))
    assert any("not a multiple" in str(c.message) for c in caught)


def test_negative_tau_rejected():
    with pytest.raises(ValueError):
        PropagationWindow(0, -1.0)


@given(st.integers(0, 2**32 - 1), st.integers(1, 4), st.floats(6.5, 8.0))
def test_norm_conserved_full_crossing(seed, n, tau):
    rng = np.random.default_rng(seed)
    s = UnitaryScatteringMatrix(haar_unitary(rng, n))
    offsets = rng.uniform(-0.5, 0.5, n).round(2)
    envs = [gaussian(-3.5 + rng.uniform(-0.3, 0.3)) * np.exp(1j * rng.uniform(0, 6)) * rng.uniform(0.2, 1)
            for _ in range(n)]
    w = packet(envs, offsets)
    out = propagate(w, s, PropagationWindow(0, round(tau, 2)))
    assert abs(out.norm_squared() - w.norm_squared()) <= 1e-10 * w.norm_squared()


@given(st.integers(0, 2**32 - 1), st.integers(1, 3), st.integers(100, 400), st.integers(100, 400))
def test_composition(seed, n, k1, k2):
    rng = np.random.default_rng(seed)
    s = UnitaryScatteringMatrix(haar_unitary(rng, n))
    w = packet([gaussian(-2.5) * rng.uniform(0.5, 1) for _ in range(n)])
    one = propagate(propagate(w, s, PropagationWindow(0, k1 * DX)), s, PropagationWindow(0, k2 * DX))
    both = propagate(w, s, PropagationWindow(0, (k1 + k2) * DX))
    # The sample parked exactly on x0 between the legs gets the half-value rule
    # twice; every other sample must agree.
    parked = 1000 + k2
    diff = np.abs(one.envelopes - both.envelopes)
    diff[:, parked] = 0
    assert np.max(diff) <= 1e-9
    half = 0.5 * (np.eye(n) + s.entries)
    source = w.envelopes[:, 1000 - k1]
    np.testing.assert_allclose(one.envelopes[:, parked], half @ half @ source, atol=1e-12)
