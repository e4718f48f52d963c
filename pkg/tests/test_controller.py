import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pdgmres.controller import (
    PRESETS,
    ControllerState,
    PdParams,
    derivative_term,
    next_restart,
    pdgmres_solve,
    preset,
    proportional_term,
    replay_restarts,
)
from pdgmres.matio import identity
from pdgmres.problems import laplacian_2d


def state_at(j, m, norms, counter=0, carry=0.0):
    return ControllerState(m_current=m, reset_counter=counter, carry=carry, recent_norms=tuple(norms), restart_index=j)


def test_proportional_examples():
    assert proportional_term(-3, 2.0, 2.0) == -3
    assert proportional_term(-0.625, 1.0, 2.0) == -0.3125
    assert proportional_term(0.0, 5.0, 1.0) == 0.0
    with pytest.raises(ZeroDivisionError):
        proportional_term(-1.0, 1.0, 0.0)


def test_derivative_examples():
    assert derivative_term(9.0, 3.0, 2.0, 3.0) == 0.0
    assert derivative_term(9.0, 1.0, 2.0, 5.0) == -9.0
    assert derivative_term(0.0, 1.0, 2.0, 5.0) == 0.0
    with pytest.raises(ZeroDivisionError):
        derivative_term(1.0, 1.0, 0.0, 1.0)


def test_next_restart_stagnation_default():
    m, _ = next_restart(state_at(2, 30, (1.0, 1.0, 1.0)), preset("default"))
    assert m == 27


def test_next_restart_reset_branch():
    p = PdParams(10, 3, 5, -3.0, 0.0)
    m, s = next_restart(state_at(2, 3, (1.0, 1.0, 1.0)), p)
    assert (m, s.reset_counter, s.total_resets) == (15, 1, 1)


def test_next_restart_m_max():
    p = PdParams(30, 1, 3, 1.0, 0.0, m_max=250)
    # carry free: alpha_p * 1 = 1, so 259 + 1 = 260 > 250
    m, s = next_restart(state_at(2, 259, (1.0, 1.0, 1.0), counter=4), p)
    assert m == 30 and s.reset_counter == 0


def test_next_restart_j0_and_j1():
    p = preset("optimized")
    m, s = next_restart(ControllerState(recent_norms=(1.0,)), p)
    assert m == 10 and s.reset_counter == 0
    # j = 1 uses only the proportional term
    s = s.observe(0.5)
    m, s = next_restart(s, p)
    assert m == 10 + math.floor(-0.625 * 0.5)


def test_reset_fires_at_j0_when_m_min_exceeds_m_init():
    p = preset("specialized")
    m, s = next_restart(ControllerState(recent_norms=(1.0,)), p)
    assert m == 30 + 39 and s.reset_counter == 1


def test_carry_sequence():
    p = PdParams(10, 1, 1, 22.5, 0.0)
    # ratio chosen so that P = 0.6 exactly enough
    r = 0.6 / 22.5
    s = state_at(1, 10, (r, 1.0))
    m1, s = next_restart(s, p)
    assert m1 == 10 and s.carry == pytest.approx(0.6)
    s = s.observe(r * r)  # norms (r^2, r): ratio r again, j = 2 with alpha_d = 0
    m2, s = next_restart(s, p)
    assert m2 == 11 and s.carry == pytest.approx(0.2)


def test_carry_zero_for_nonpositive_alpha_p():
    p = PdParams(30, 1, 3, -2.7, 5.3)
    s = ControllerState(recent_norms=(1.0,))
    rng = np.random.default_rng(0)
    for _ in range(50):
        m, s = next_restart(s, p)
        assert s.carry == 0.0
        s = s.observe(float(rng.uniform(0.1, 1.0)))


def test_next_restart_needs_norms():
    with pytest.raises(ValueError):
        next_restart(state_at(2, 10, (1.0, 1.0)), preset("default"))


def test_presets():
    assert preset("default") == PdParams(30, 1, 3, -3, 9)
    assert preset("optimized") == PdParams(10, 3, 10, -0.625, 4.375)
    assert preset("specialized") == PdParams(30, 33, 39, -42.5, 0)
    assert preset("problematic-test") == PdParams(50, 51, 76, -41.25, 29.375)
    assert preset("problematic_test") is PRESETS["problematic_test"]
    with pytest.raises(ValueError):
        preset("fastest")


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(m_init=0, m_min=1, m_step=1, alpha_p=0, alpha_d=0),
        dict(m_init=5, m_min=0, m_step=1, alpha_p=0, alpha_d=0),
        dict(m_init=5, m_min=1, m_step=1.5, alpha_p=0, alpha_d=0),
        dict(m_init=5, m_min=1, m_step=1, alpha_p=0, alpha_d=0, m_max=4),
    ],
)
def test_params_validation(kwargs):
    with pytest.raises(ValueError):
        PdParams(**kwargs)


def test_solve_identity():
    tr = pdgmres_solve(identity(7), np.ones(7), preset("optimized"), 1e-9)
    assert tr.converged and tr.restart_params == [7]  # m_init 10 clamped to n
    tr = pdgmres_solve(identity(40), np.ones(40), preset("default"), 1e-9)
    assert tr.restart_params == [30]


def test_solve_laplacian_replay():
    m = laplacian_2d(10)
    tr = pdgmres_solve(m, np.ones(100), preset("optimized"), 1e-9)
    assert tr.converged
    assert tr.final_residual_norm <= 1e-9
    assert replay_restarts(tr.restart_residual_norms, preset("optimized"), 100) == tr.restart_params
    assert tr.total_inner_iterations == sum(tr.cycle_lengths)


def test_zigzag_pattern():
    # slow convergence: stagnation-like cycles force the decrease-then-jump pattern
    m = laplacian_2d(12)
    p = PdParams(12, 2, 2, -1.0, 1.0)
    tr = pdgmres_solve(m, np.ones(144), p, 1e-12, budget=600)
    ms = tr.restart_params
    jumps = [k for k in range(1, len(ms)) if ms[k] > ms[k - 1]]
    assert jumps, ms
    for k in jumps:
        c = tr.reset_history[k]
        assert ms[k] == p.m_init + c * p.m_step
    # reset targets increase strictly
    targets = [ms[k] for k in jumps]
    assert all(b > a for a, b in zip(targets, targets[1:]))
    # strictly decreasing between jumps
    for k in range(1, len(ms)):
        if k not in jumps:
            assert ms[k] < ms[k - 1]


def test_solve_m_max_bounds():
    m = laplacian_2d(8)
    p = PdParams(10, 1, 30, -1.0, 1.0, m_max=20)
    tr = pdgmres_solve(m, np.ones(64), p, 1e-12)
    assert all(1 <= k <= 20 for k in tr.restart_params)


@settings(max_examples=200, deadline=None)
@given(
    alpha_p=st.floats(-50, -1e-3),
    alpha_d=st.floats(0, 50),
    m0=st.integers(1, 200),
    norms=st.lists(st.floats(1e-12, 1e3), min_size=3, max_size=3),
)
def test_decrease_off_reset(alpha_p, alpha_d, m0, norms):
    # residual norms are non-increasing for GMRES, so norms are sorted
    n0, n1, n2 = sorted(norms)
    p = PdParams(30, 1, 3, alpha_p, alpha_d)
    m, s = next_restart(state_at(2, m0, (n0, n1, n2)), p)
    if s.reset_counter == 0:
        assert m <= m0 - 1


def test_clamps_to_n():
    tr = pdgmres_solve(laplacian_2d(3), np.ones(9), preset("problematic_test"), 1e-12)
    assert all(k <= 9 for k in tr.restart_params)
    assert tr.converged
