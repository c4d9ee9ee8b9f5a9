"""Closed-form, characteristics, and finite-difference transport routes."""

import io
import math

import numpy as np
import pytest

from doublepass.charfn import (BoundaryLeakError, GridSpec,
                               closed_form_char, closed_form_surface,
                               fd_solve, moc_solve, pde_residual)
from doublepass.errors import ConfigError
from doublepass.gaussian import closed_form_covariances

FAMILIES = ("F", "G")


def closed_sampler(family, alpha):
    return lambda t, k, l: closed_form_char(family, alpha, t, k, l)


# -- closed form -----------------------------------------------------------------


def test_initial_condition():
    for family in FAMILIES:
        for l in (-2.0, 0.0, 1.5):
            assert closed_form_char(family, 1.0, 0.0, 0.7, l) == \
                pytest.approx(math.exp(-l * l / 4))


def test_normalization_at_origin():
    for family in FAMILIES:
        for t in (0.0, 0.5, 3.0):
            assert closed_form_char(family, 1.0, t, 0.0, 0.0) == 1.0


def test_g_slice_at_k_zero():
    alpha, t, l = 1.2, 0.8, 1.1
    expected = math.exp(-0.25 * l * l * (1 + alpha * alpha * t))
    assert closed_form_char("G", alpha, t, 0.0, l) == pytest.approx(expected)


def test_surface_invariants():
    surf = closed_form_surface("F", 1.0, 0.7, GridSpec(6.0, 0.1, 2.0, 0.5))
    surf.validate()
    assert 0.0 < surf.values.min()
    assert surf.value_at(0.0, 0.0) == 1.0


def test_log_derivatives_reproduce_covariances():
    # second derivatives of log F at the origin give the covariance entries
    alpha, t, h = 1.0, 1.3, 1e-3
    snap = closed_form_covariances(alpha, t)
    f = closed_sampler("F", alpha)

    def logf(k, l):
        return math.log(f(t, k, l))

    d_ll = (logf(0, h) - 2 * logf(0, 0) + logf(0, -h)) / h ** 2
    d_kk = (logf(h, 0) - 2 * logf(0, 0) + logf(-h, 0)) / h ** 2
    d_kl = (logf(h, h) - logf(h, -h) - logf(-h, h) + logf(-h, -h)) / (4 * h * h)
    assert -d_ll == pytest.approx(snap.entry("p_at", "p_at"), abs=1e-6)
    assert -d_kk == pytest.approx(snap.entry("X_ph", "X_ph"), abs=1e-6)
    assert -d_kl == pytest.approx(snap.entry("p_at", "X_ph"), abs=1e-6)


# -- method of characteristics ------------------------------------------------------


def test_moc_matches_closed_form_grid():
    worst = 0.0
    for family in FAMILIES:
        for alpha in (0.5, 1.0, 2.0):
            for t in (0.1, 1.0, 3.0):
                for k in np.linspace(-3, 3, 7):
                    for l in np.linspace(-3, 3, 7):
                        m = moc_solve(family, alpha, t, float(k), float(l))
                        c = closed_form_char(family, alpha, t, float(k),
                                             float(l))
                        worst = max(worst, abs(m - c))
    assert worst < 1e-10


def test_moc_initial_time():
    assert moc_solve("F", 1.0, 0.0, 2.0, 1.0) == \
        pytest.approx(math.exp(-0.25))


def test_moc_alpha_zero():
    val = moc_solve("F", 0.0, 2.0, 1.5, 0.5)
    assert val == pytest.approx(math.exp(-0.5 ** 2 / 4 - 1.5 ** 2 * 2 / 4),
                                rel=1e-12)


def test_moc_f_slice_at_k_zero():
    # pure decay along expanding characteristics reproduces var_p_at
    alpha, t, l = 0.8, 1.2, 1.4
    var_p = 0.25 * (1 + math.exp(-2 * alpha * alpha * t))
    assert moc_solve("F", alpha, t, 0.0, l) == \
        pytest.approx(math.exp(-0.5 * var_p * l * l), rel=1e-12)


# -- finite differences ---------------------------------------------------------------


def test_fd_alpha_zero_is_exact():
    grid = GridSpec(l_max=8.0, dl=0.05, k_max=2.0, dk=1.0)
    surf = fd_solve("F", 0.0, grid, 0.3, 1e-3)
    kk, ll = np.meshgrid(grid.k_values(), grid.l_values(), indexing="ij")
    exact = np.exp(-ll ** 2 / 4) * np.exp(-kk ** 2 * 0.3 / 4)
    assert np.abs(surf.values - exact).max() < 1e-12


def test_fd_matches_closed_form():
    grid = GridSpec(l_max=12.0, dl=0.02, k_max=3.0, dk=1.0)
    for family in FAMILIES:
        surf = fd_solve(family, 1.0, grid, 0.5, 4e-4)
        ref = closed_form_surface(family, 1.0, 0.5, grid)
        assert np.abs(surf.values - ref.values).max() < 5e-4
        surf.validate(atol=1e-5)


def test_fd_convergence_order_two():
    errs = []
    for dl in (0.08, 0.04):
        grid = GridSpec(l_max=12.0, dl=dl, k_max=2.0, dk=1.0)
        dt = dl * dl / 4.0
        n = math.ceil(0.4 / dt)
        surf = fd_solve("F", 1.0, grid, 0.4, 0.4 / n)
        ref = closed_form_surface("F", 1.0, 0.4, grid)
        errs.append(np.abs(surf.values - ref.values).max())
    order = math.log2(errs[0] / errs[1])
    assert 1.5 < order < 2.5


def test_fd_origin_stays_normalized():
    grid = GridSpec(l_max=10.0, dl=0.05, k_max=1.0, dk=0.5)
    surf = fd_solve("G", 1.0, grid, 0.5, 1e-3)
    assert surf.value_at(0.0, 0.0) == pytest.approx(1.0, abs=1e-9)


def test_grid_spec_validation():
    with pytest.raises(ConfigError):
        GridSpec(l_max=8.0, dl=0.03)       # does not divide the extent
    with pytest.raises(ConfigError):
        GridSpec(l_max=-1.0, dl=0.02)


def test_fd_cfl_violation_rejected():
    grid = GridSpec(l_max=8.0, dl=0.1, k_max=2.0, dk=1.0)
    with pytest.raises(ConfigError):
        fd_solve("F", 1.0, grid, 0.5, 0.05)


def test_fd_boundary_leak_detected():
    grid = GridSpec(l_max=2.0, dl=0.05, k_max=1.0, dk=0.5)
    with pytest.raises(BoundaryLeakError):
        fd_solve("F", 1.0, grid, 0.5, 1e-3)


def test_surface_csv_dump():
    grid = GridSpec(l_max=1.0, dl=0.5, k_max=0.5, dk=0.5)
    surf = closed_form_surface("F", 1.0, 0.5, grid)
    buf = io.StringIO()
    surf.to_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0].startswith("# family=F alpha=1 t=0.5")
    assert lines[1] == "k,l,value"
    assert len(lines) == 2 + 3 * 5


# -- residual --------------------------------------------------------------------------


def test_residual_of_closed_form_small():
    worst = 0.0
    for family in FAMILIES:
        sampler = closed_sampler(family, 1.0)
        for t in (0.5, 1.0, 2.0):
            for k in (-2.0, 0.0, 1.0):
                for l in (-1.0, 0.5, 2.0):
                    worst = max(worst, abs(pde_residual(
                        family, 1.0, sampler, t, k, l, h=1e-4)))
    assert worst < 1e-6


def test_residual_negative_control():
    # doubling var_p_at must leave a visible residual somewhere
    alpha = 1.0

    def tampered(t, k, l):
        snap = closed_form_covariances(alpha, t)
        s_ll = 2.0 * snap.entry("p_at", "p_at")
        s_kl = snap.entry("p_at", "X_ph")
        s_kk = snap.entry("X_ph", "X_ph")
        return math.exp(-0.5 * (s_ll * l * l + 2 * s_kl * k * l
                                + s_kk * k * k))

    worst = max(abs(pde_residual("F", alpha, tampered, t, k, l))
                for t in (0.5, 1.0)
                for k in (-1.0, 0.0, 1.0)
                for l in (-1.0, 0.5, 1.5))
    assert worst > 1e-2


def test_residual_zero_at_origin():
    sampler = closed_sampler("F", 1.0)
    assert abs(pde_residual("F", 1.0, sampler, 1.0, 0.0, 0.0)) < 1e-12
