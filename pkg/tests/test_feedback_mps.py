import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import dense_feedback_pop
from pointcouple import (
    BondExplosion,
    ConfigError,
    ExponentialDrive,
    FeedbackConfig,
    TableDrive,
    build_gate,
    rotating_frame_coupling,
    run,
    step,
)
from pointcouple.feedback_mps import (
    EMITTER,
    GateCoefficients,
    bin_operators,
    config_from_dict,
    initial_state,
)


def test_default_config_is_valid():
    c = FeedbackConfig()
    assert c.n_d == 40 and c.n_steps == 200
    assert c.delay_residual == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize(
    "kwargs, field",
    [
        ({"gamma_plus": 0.7}, "gamma_minus"),
        ({"dt": 0.0}, "dt"),
        ({"dt": 3.0}, "dt"),
        ({"schmidt_tol": 1.5}, "schmidt_tol"),
        ({"bin_dim": 1}, "bin_dim"),
        ({"phi": 1j}, "phi"),
        ({"t_end": float("nan")}, "t_end"),
        ({"initial": "dark"}, "initial"),
        ({"mirror_order": "sideways"}, "mirror_order"),
    ],
)
def test_config_validation_names_field(kwargs, field):
    with pytest.raises(ConfigError) as err:
        FeedbackConfig(**kwargs)
    assert err.value.field == field


def test_drive_validation():
    with pytest.raises(ConfigError):
        TableDrive((0.0, 1.0), (1 + 1j, 0.0))
    with pytest.raises(ConfigError):
        TableDrive((1.0, 0.0), (0.0, 0.0))
    with pytest.raises(ConfigError) as err:
        config_from_dict({"drive": {"kind": "exponential", "alpha": 1.0}})
    assert err.value.field == "drive.omega0"
    with pytest.raises(ConfigError) as err:
        config_from_dict({"dtt": 0.1})
    assert err.value.field == "dtt"


def test_bond_cap_from_environment(monkeypatch):
    monkeypatch.setenv("POINTCOUPLE_BOND_CAP", "7")
    assert config_from_dict({}).bond_cap == 7
    assert config_from_dict({"bond_cap": 3}).bond_cap == 3
    monkeypatch.setenv("POINTCOUPLE_BOND_CAP", "seven")
    with pytest.raises(ConfigError):
        config_from_dict({})


def test_config_dict_roundtrip():
    c = FeedbackConfig(drive=ExponentialDrive(0.5, 0.2), phi=0.3)
    assert config_from_dict(c.to_dict()) == c


def test_coupling_before_feedback():
    c = FeedbackConfig(dt=0.05)
    g = rotating_frame_coupling(c, 0)
    assert g.delayed is None
    assert g.forward == pytest.approx(math.sqrt(0.025) * np.exp(1j * math.pi))
    assert g.backward == pytest.approx(math.sqrt(0.025) * np.exp(-1j * math.pi))
    assert rotating_frame_coupling(c, c.n_d).delayed is None


def test_coupling_perfect_mirror():
    c = FeedbackConfig(dt=0.05, phi=0.4)
    g = rotating_frame_coupling(c, c.n_d + 1)
    assert abs(g.forward) <= 1e-15  # cos(pi/2) leaves nothing transmitted
    expected = math.sqrt(0.025) * np.exp(1j * math.pi) * (-np.exp(-0.4j))
    assert g.delayed == pytest.approx(expected)


def test_coupling_without_mirror_has_no_delayed_term():
    c = FeedbackConfig(theta=0.0)
    g = rotating_frame_coupling(c, c.n_d + 5)
    assert g.delayed == 0
    assert g.forward == pytest.approx(rotating_frame_coupling(c, 0).forward)


def test_zero_coupling_gate_is_identity():
    c = FeedbackConfig()
    for delayed in (None, 0.0):
        gate = build_gate(c, 0, GateCoefficients(0.0, 0.0, 0.0, 0.0, delayed))
        np.testing.assert_allclose(gate.unitary, np.eye(gate.unitary.shape[0]), atol=1e-15)


def _excitation_number(bin_dim, n_sites):
    a_f, a_b = bin_operators(bin_dim)
    n_bin = a_f.conj().T @ a_f + a_b.conj().T @ a_b
    n_e = np.diag([0.0, 1.0])
    legs = [np.eye(bin_dim**2), np.eye(2), np.eye(bin_dim**2)]
    total = 0
    for i, op in enumerate([n_bin, n_e, n_bin][:n_sites]):
        parts = [op if j == i else legs[j] for j in range(n_sites)]
        term = parts[0]
        for p in parts[1:]:
            term = np.kron(term, p)
        total = total + term
    return total


@pytest.mark.parametrize("bin_dim", [2, 3])
@pytest.mark.parametrize("k", [0, 45])
def test_gate_unitary_and_conserves_excitations(bin_dim, k):
    c = FeedbackConfig(bin_dim=bin_dim, phi=0.7, theta=1.1, gamma_plus=0.3, gamma_minus=0.7)
    u = build_gate(c, k).unitary
    assert np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) <= 1e-12
    n = _excitation_number(bin_dim, 3 if k > c.n_d else 2)
    assert np.max(np.abs(u @ n - n @ u)) <= 1e-12


def test_ground_state_is_invariant():
    c = FeedbackConfig(initial="ground", t_end=3.0)
    r = run(c)
    assert np.max(r.pop) <= 1e-30
    assert np.all(r.max_bond == 1)


def test_first_step_decay():
    c = FeedbackConfig(dt=0.01)
    mps = initial_state(c)
    step(mps, c, 0)
    pop = mps.expect_local(mps.position(EMITTER), np.diag([0.0, 1.0])).real
    assert 1 - pop == pytest.approx(c.dt, rel=0.01)


def test_steps_between_delay_and_twice_delay_use_padding():
    c = FeedbackConfig(dt=0.25, gamma_td=1.0, t_end=2.5)
    mps = initial_state(c)
    for k in range(c.n_steps):
        step(mps, c, k)
    assert len(mps) == 1 + 2 * c.n_d + c.n_steps
    assert mps.norm() == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=15)
@given(
    # the dense vector holds 2 * 4^(1 + 2 n_d + n_steps) amplitudes; dt = 0.5 keeps
    # it small while the last step still couples to a genuinely emitted bin
    st.just(0.5),
    st.floats(0, 2 * math.pi),
    st.floats(0.2, math.pi / 2),
    st.floats(0.1, 0.9),
    st.sampled_from(["backward_forward", "forward_backward"]),
)
def test_matches_dense_oracle(dt, phi, theta, gamma_plus, order):
    c = FeedbackConfig(
        dt=dt, gamma_td=1.0, t_end=3.0, phi=phi, theta=theta, gamma_plus=gamma_plus,
        gamma_minus=1 - gamma_plus, schmidt_tol=1e-12, mirror_order=order,
    )
    ref = dense_feedback_pop(1.0, dt, c.n_steps, phi, theta, c.omega0_td, gamma_plus,
                             mirror_port_backward_first=order == "backward_forward")
    assert np.max(np.abs(run(c).pop - ref)) <= 1e-10


def test_deterministic_csv():
    c = FeedbackConfig(t_end=3.0)
    assert run(c).to_csv() == run(c).to_csv()


def test_short_times_follow_free_decay():
    r = run(FeedbackConfig())
    early = r.t < 2.0 + 1e-9
    assert np.max(np.abs(r.abs_eps[early] - np.exp(-r.t[early] / 2))) <= 0.005


def test_norm_deficit_bounded_by_discarded_weight():
    r = run(FeedbackConfig(schmidt_tol=0.05, t_end=6.0, phi=1.0))
    assert np.all(r.norm_deficit >= -1e-12)
    assert np.cumsum(r.norm_deficit)[-1] <= r.discarded_weight[-1] + 1e-12


def test_excitation_bookkeeping():
    r = run(FeedbackConfig(schmidt_tol=1e-10, t_end=6.0, phi=0.5), track_photons=True)
    assert np.max(np.abs(r.pop + r.photon_number - 1.0)) <= 1e-9


def test_bond_cap_raises():
    with pytest.raises(BondExplosion):
        run(FeedbackConfig(bond_cap=1, schmidt_tol=1e-10, t_end=1.0))


def test_driven_runs():
    c = FeedbackConfig(initial="ground", drive=ExponentialDrive(2.0, 0.5), t_end=4.0)
    r = run(c)
    assert r.pop[0] == 0 and np.max(r.pop) > 0.1
    table = TableDrive((0.0, 4.0), (2.0, 2.0 * math.exp(-2.0)))
    r2 = run(FeedbackConfig(initial="ground", drive=table, t_end=4.0))
    assert np.max(r2.pop) > 0.1
    assert np.all(r2.pop <= 1 + 1e-12)


def test_progress_and_metadata():
    calls = []
    c = FeedbackConfig(dt=0.1, gamma_td=0.95, t_end=1.0)
    r = run(c, progress=lambda k, n: calls.append((k, n)))
    assert calls[-1] == (10, 10)
    assert r.metadata["n_d"] == 9
    assert r.metadata["delay_residual"] == pytest.approx(0.05)
