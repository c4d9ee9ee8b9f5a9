"""Truncated-Fock collision oracle: operators, unitaries, moments, homodyne."""

import math

import numpy as np
import pytest
import scipy.linalg

from doublepass.errors import ConfigError
from doublepass.fock import (LEAK_TOL, OracleConfig, PHASE_P, PHASE_X,
                             TruncationLeakError, annihilation, ccr_defect,
                             homodyne_monte_carlo, homodyne_series, momentum,
                             position, simulate_atom_moments, step_unitaries,
                             vacuum_state)
from doublepass.gaussian import closed_form_covariances


def test_truncated_operators():
    d = 12
    a = annihilation(d)
    n = a.conj().T @ a
    assert np.allclose(np.diag(n).real[:d - 1], np.arange(d - 1))
    assert ccr_defect(position(d), momentum(d)) < 1e-12
    psi = vacuum_state(d)
    x = position(d)
    assert (psi.conj() @ x @ x @ psi).real == pytest.approx(0.5)


def test_step_unitaries_unitary_on_lower_block():
    for alpha in (0.0, 0.3, 0.9):
        u1, u2, uc = step_unitaries(alpha, 1e-3, 24, 3)
        d = 24 * 3
        for u in (u1, u2, uc):
            defect = np.linalg.norm(
                (u.conj().T @ u - np.eye(d))[:d - 2, :d - 2])
            assert defect < 1e-10


def test_step_unitaries_composition_order():
    u1, u2, uc = step_unitaries(0.5, 1e-3, 16, 3)
    assert np.allclose(uc, u2 @ u1)
    assert not np.allclose(uc, u1 @ u2)


def test_step_unitaries_reject_large_step():
    with pytest.raises(ConfigError):
        step_unitaries(2.0, 1e-2, 16, 3)


def test_composite_log_recovers_coupling_and_hamiltonian():
    # <0_anc| log U |0_anc> / dt -> -iH, <1_anc| log U |0_anc> / sqrt(dt) -> L
    alpha, dt, d_at, d_anc = 0.7, 1e-6, 18, 3
    _, _, u = step_unitaries(alpha, dt, d_at, d_anc)
    k = scipy.linalg.logm(u).reshape(d_at, d_anc, d_at, d_anc)
    x, p = position(d_at), momentum(d_at)
    h_block = 1j * k[:, 0, :, 0] / dt
    h_expected = 0.25 * alpha ** 2 * (p @ x + x @ p)
    l_block = k[:, 1, :, 0] / math.sqrt(dt)
    l_expected = alpha * (p - 1j * x) / math.sqrt(2)
    sl = np.s_[:d_at - 2, :d_at - 2]
    assert np.linalg.norm((h_block - h_expected)[sl]) < \
        1e-4 * np.linalg.norm(h_expected[sl])
    assert np.linalg.norm((l_block - l_expected)[sl]) < \
        1e-4 * np.linalg.norm(l_expected[sl])


def test_config_validation():
    with pytest.raises(ConfigError):
        OracleConfig(alpha=-1.0, dt=1e-3, t_max=1.0)
    with pytest.raises(ConfigError):
        OracleConfig(alpha=0.5, dt=0.1, t_max=0.05)
    with pytest.raises(ConfigError):
        OracleConfig(alpha=4.0, dt=1e-2, t_max=1.0)   # alpha^2 dt too big
    with pytest.raises(ConfigError):
        OracleConfig(alpha=0.5, dt=1e-3, t_max=1.0, phase=0.3)
    cfg = OracleConfig(alpha=0.5, dt=1e-3, t_max=1.0)
    assert cfg.n_steps == 1000


# -- deterministic atomic moments ------------------------------------------------


def test_atom_moments_alpha_zero():
    cfg = OracleConfig(alpha=0.0, dt=5e-3, t_max=0.5, d_at=10, d_anc=2)
    series = simulate_atom_moments(cfg)
    assert np.allclose(series.var_x, 0.5, atol=1e-12)
    assert np.allclose(series.var_p, 0.5, atol=1e-12)
    assert np.allclose(series.mean_x, 0.0, atol=1e-12)


def test_atom_moments_match_closed_forms():
    cfg = OracleConfig(alpha=0.3, dt=2e-3, t_max=0.5, d_at=25, d_anc=3)
    series = simulate_atom_moments(cfg)
    closed = closed_form_covariances(0.3, 0.5)
    assert series.var_p[-1] == pytest.approx(closed.entry("p_at", "p_at"),
                                             rel=0.02)
    assert series.var_x[-1] == pytest.approx(closed.entry("x_at", "x_at"),
                                             rel=0.02)
    assert series.max_leak < LEAK_TOL
    # unconditional means stay zero and the state stays physical
    assert np.abs(series.mean_x).max() < 1e-10
    assert np.abs(series.mean_p).max() < 1e-10
    assert (series.var_x * series.var_p >= 0.25 - 1e-10).all()


def test_atom_moments_truncation_converged():
    # growing the atom space does not move the answer
    kw = dict(alpha=0.3, dt=2e-3, t_max=0.5, d_anc=3)
    v30 = simulate_atom_moments(OracleConfig(d_at=30, **kw)).var_p[-1]
    v40 = simulate_atom_moments(OracleConfig(d_at=40, **kw)).var_p[-1]
    assert abs(v30 - v40) / v40 < 1e-3


def test_atom_moments_leak_detection():
    # a tiny atom space cannot hold the x-quadrature growth
    cfg = OracleConfig(alpha=0.9, dt=5e-3, t_max=2.0, d_at=4, d_anc=3)
    with pytest.raises(TruncationLeakError):
        simulate_atom_moments(cfg)


# -- homodyne Monte Carlo -----------------------------------------------------------


def test_homodyne_requires_enough_trajectories():
    cfg = OracleConfig(alpha=0.3, dt=5e-3, t_max=0.1, d_at=10, n_traj=10)
    with pytest.raises(ConfigError):
        homodyne_monte_carlo(cfg)


def test_homodyne_deterministic_from_seed():
    kw = dict(alpha=0.5, dt=2e-3, t_max=0.2, d_at=16, d_anc=3, n_traj=120,
              seed=42)
    a = homodyne_monte_carlo(OracleConfig(**kw))
    b = homodyne_monte_carlo(OracleConfig(**kw))
    assert a == b


def test_homodyne_seed_changes_samples():
    kw = dict(alpha=0.5, dt=2e-3, t_max=0.2, d_at=16, d_anc=3, n_traj=120)
    a = homodyne_monte_carlo(OracleConfig(seed=1, **kw))
    b = homodyne_monte_carlo(OracleConfig(seed=2, **kw))
    assert a.variance != b.variance


def test_homodyne_vacuum_statistics():
    cfg = OracleConfig(alpha=0.0, dt=2e-3, t_max=0.5, d_at=8, d_anc=3,
                       n_traj=600, seed=5)
    st = homodyne_monte_carlo(cfg)
    assert st.time == pytest.approx(0.5)
    assert abs(st.mean) < 5 * st.stderr_mean
    assert abs(st.variance - 0.5) < 5 * st.stderr_var
    assert st.stderr_mean == pytest.approx(
        math.sqrt(st.variance / st.n), rel=1e-12)


def test_homodyne_phase_x_tracks_output_variance():
    cfg = OracleConfig(alpha=0.5, dt=2e-3, t_max=0.5, d_at=25, d_anc=3,
                       n_traj=800, seed=11, phase=PHASE_X)
    st = homodyne_monte_carlo(cfg)
    ref = closed_form_covariances(0.5, 0.5).entry("X_ph", "X_ph")
    assert abs(st.variance / 2 - ref) < 5 * st.stderr_var / 2


def test_homodyne_phase_p_tracks_output_variance():
    cfg = OracleConfig(alpha=0.5, dt=2e-3, t_max=0.5, d_at=25, d_anc=3,
                       n_traj=800, seed=12, phase=PHASE_P)
    st = homodyne_monte_carlo(cfg)
    ref = closed_form_covariances(0.5, 0.5).entry("P_ph", "P_ph")
    assert abs(st.variance / 2 - ref) < 5 * st.stderr_var / 2


def test_homodyne_disjoint_seed_batches_consistent():
    kw = dict(alpha=0.5, dt=2e-3, t_max=0.3, d_at=20, d_anc=3, n_traj=400)
    a = homodyne_monte_carlo(OracleConfig(seed=100, **kw))
    b = homodyne_monte_carlo(OracleConfig(seed=200, **kw))
    combined = math.hypot(a.stderr_var, b.stderr_var)
    assert abs(a.variance - b.variance) < 5 * combined


def test_homodyne_series_sampling():
    cfg = OracleConfig(alpha=0.3, dt=2e-3, t_max=0.2, d_at=16, d_anc=3,
                       n_traj=120, seed=3)
    series = homodyne_series(cfg, 4)
    times = [st.time for st in series]
    assert times[-1] == pytest.approx(0.2)
    assert all(t1 < t2 for t1, t2 in zip(times, times[1:]))
    # the final-time entry agrees with the single-shot API at the same seed
    final = homodyne_monte_carlo(cfg)
    assert series[-1] == final
