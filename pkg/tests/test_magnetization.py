import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spinldp.duality import duality_gap
from spinldp.errors import PathLeavesDomain
from spinldp.magnetization import (
    mag_constrained_pressure,
    mag_exact_log_prob,
    mag_extremal,
    mag_hamilton_rhs,
    mag_hamiltonian,
    mag_hamiltonian_dp,
    mag_lagrangian,
    mag_lagrangian_vec,
    mag_mc_pressure,
    mag_model,
    mag_momentum,
    mag_value_and_partials,
)


def test_hamiltonian_basics():
    for m in (-1.0, -0.3, 0.0, 0.8, 1.0):
        assert mag_hamiltonian(m, 0.0) == 0.0
    for p in (-1.2, 0.4, 2.0):
        assert abs(mag_hamiltonian(0.0, p) - (math.cosh(2 * p) - 1.0)) <= 1e-12


def test_hamiltonian_p_derivative_is_minus_2m_at_zero():
    for m in (-0.9, -0.2, 0.0, 0.5, 1.0):
        assert abs(mag_hamiltonian_dp(m, 0.0) + 2.0 * m) <= 1e-14


def test_lagrangian_zero_on_drift():
    for m in (-0.9, 0.0, 0.9):
        assert abs(mag_lagrangian(m, -2.0 * m)) <= 1e-12


def test_lagrangian_reference_values():
    assert abs(mag_lagrangian(0.0, 2.0) - (math.log(1 + math.sqrt(2)) - math.sqrt(2) + 1)) <= 1e-14
    assert abs(mag_lagrangian(0.5, 0.0) - (1.0 - math.sqrt(0.75))) <= 1e-14


def test_lagrangian_boundary_feasibility():
    assert mag_lagrangian(1.0, 0.5) == math.inf
    assert mag_lagrangian(-1.0, -0.5) == math.inf
    assert abs(mag_lagrangian(1.0, -2.0)) <= 1e-12  # drift at the boundary
    assert mag_lagrangian(1.2, 0.0) == math.inf  # outside the state interval


def test_lagrangian_matches_numeric_conjugation_grid():
    gap = duality_gap(
        mag_hamiltonian, lambda m, q: mag_lagrangian(m, q),
        np.linspace(-0.9, 0.9, 7), np.linspace(-3, 3, 13),
        l_deriv=lambda m, q: float(mag_momentum(m, q)),
    )
    assert gap <= 1e-9


@settings(max_examples=80, deadline=None)
@given(m=st.floats(-0.99, 0.99), q=st.floats(-5, 5))
def test_lagrangian_nonnegative_zero_only_at_drift(m, q):
    val = mag_lagrangian(m, q)
    assert val >= -1e-12
    if abs(q + 2 * m) > 1e-3:
        assert val > 0.0


def test_value_and_partials_consistent():
    m = np.linspace(-0.95, 0.95, 21)
    q = np.linspace(-3, 3, 21)
    val, lx, lv = mag_value_and_partials(m, q)
    assert np.allclose(val, mag_lagrangian_vec(m, q))
    h = 1e-6
    fd_x = (mag_lagrangian_vec(m + h, q) - mag_lagrangian_vec(m - h, q)) / (2 * h)
    fd_v = (mag_lagrangian_vec(m, q + h) - mag_lagrangian_vec(m, q - h)) / (2 * h)
    assert np.max(np.abs(lx - fd_x)) <= 1e-6
    assert np.max(np.abs(lv - fd_v)) <= 1e-6


def test_hamilton_rhs_reference():
    for m in (-0.5, 0.0, 0.7):
        dm, dp = mag_hamilton_rhs(m, 0.0)
        assert abs(dm + 2.0 * m) <= 1e-14
        assert dp == 0.0
    dm, dp = mag_hamilton_rhs(0.0, 0.4)
    assert abs(dm - 2.0 * math.sinh(0.8)) <= 1e-12
    assert abs(dp - math.sinh(0.8)) <= 1e-12


def test_extremal_pure_modes():
    c1, c2, path = mag_extremal(0.5, 0.5 * math.exp(-2.0), 1.0)
    assert abs(c1) <= 1e-15
    assert abs(c2 - 0.5) <= 1e-15
    c1, c2, path = mag_extremal(0.4 * math.exp(-2.0), 0.4, 1.0)
    assert abs(c2) <= 1e-15
    assert abs(c1 - 0.4 * math.exp(-2.0)) <= 1e-15


def test_extremal_linear_solve_oracle():
    T = 1.0
    A = np.array([[1.0, 1.0], [math.exp(2 * T), math.exp(-2 * T)]])
    expect = np.linalg.solve(A, np.array([0.5, 0.0]))
    c1, c2, _ = mag_extremal(0.5, 0.0, T)
    assert abs(c1 - expect[0]) <= 1e-14
    assert abs(c2 - expect[1]) <= 1e-14
    assert abs(c1 + 0.00933) <= 2e-5


def test_extremal_domain_validation():
    with pytest.raises(PathLeavesDomain):
        mag_extremal(1.1, 0.0, 1.0)
    # valid endpoints never escape: holding 0.9 at both ends dips toward 0
    _, _, path = mag_extremal(0.9, 0.9, 4.0)
    t = np.linspace(0, 4, 401)
    vals = path(t)
    assert np.max(np.abs(vals)) <= 0.9 + 1e-12
    assert np.min(vals) < 0.1


def test_exact_log_prob_small_cases():
    # two spins both up staying up: independent sign-preservation squared
    for T in (0.2, 0.7, 2.0):
        expect = 2.0 * math.log(0.5 * (1 + math.exp(-2 * T)))
        assert abs(mag_exact_log_prob(2, 1.0, T, 1.0) - expect) <= 1e-13
    # short horizon, unchanged magnetization: probability -> 1
    assert abs(mag_exact_log_prob(100, 0.5, 1e-9, 0.5)) <= 1e-5


def test_exact_log_prob_sums_to_one():
    n, m0, T = 40, 0.5, 0.8
    total = 0.0
    for up in range(n + 1):
        mT = 2.0 * up / n - 1.0
        total += math.exp(mag_exact_log_prob(n, m0, T, mT))
    assert abs(total - 1.0) <= 1e-12


def test_exact_log_prob_validates_endpoints():
    with pytest.raises(ValueError):
        mag_exact_log_prob(10, 0.55, 1.0, 0.0)


def test_constrained_pressure_endpoints():
    assert abs(mag_constrained_pressure(1.3, 0.4, 0.0) - 1.3 * 0.4) <= 1e-12
    assert abs(mag_constrained_pressure(1.3, 0.4, 50.0) - math.log(math.cosh(1.3))) <= 1e-12
    assert mag_constrained_pressure(0.0, 0.3, 0.7) == 0.0


def test_constrained_pressure_time_derivative_is_hamiltonian():
    h = 1e-4
    for lam in (-1.5, -0.3, 0.6, 2.0):
        for m in (-0.8, 0.0, 0.5):
            f = lambda t: mag_constrained_pressure(lam, m, t)
            fd = (-f(2 * h) + 8 * f(h) - 8 * f(-h) + f(-2 * h)) / (12 * h)
            assert abs(fd - mag_hamiltonian(m, lam)) <= 1e-6


def test_mc_pressure_within_bootstrap_errors():
    est, se = mag_mc_pressure(100, 0.5, 0.5, 0.2, 4000, seed=5)
    closed = mag_constrained_pressure(0.2, 0.5, 0.5)
    assert abs(est - closed) <= 3.0 * se
    # deterministic given the seed
    est2, se2 = mag_mc_pressure(100, 0.5, 0.5, 0.2, 4000, seed=5)
    assert est == est2 and se == se2


def test_oracle_rate_decreases_toward_action():
    # -(1/N) log P approaches the minimized action from above as N grows
    from spinldp.trajectory import TrajectoryGrid, action_integral

    _, _, path = mag_extremal(0.5, 0.0, 0.5)
    t = np.linspace(0, 0.5, 801)
    action = action_integral(mag_model(), TrajectoryGrid(T=0.5, steps=800, values=path(t)))
    gaps = []
    for n in (200, 500, 1000, 2000):
        rate = -mag_exact_log_prob(n, 0.5, 0.5, 0.0) / n
        gaps.append(abs(rate - action))
    assert gaps[-1] < gaps[0]
    assert gaps[-1] <= 0.05
