import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nspcouette.dynamics import (IntegrationError, ModeState, QuadratureError, Trajectory,
                                 duhamel_F, integrate_mode, integrate_modes,
                                 oracle_zero_inviscid, oscillator_frequency, rhs_nonzero,
                                 rhs_zero_electron, rhs_zero_ion)
from nspcouette.symbols import Mode, PhysParams, ZeroModeError, symbol_Lnu

ONE_PLUS_4PI = 13.5663706143591729539
ION_SQUARED_FREQUENCY = 1.92628831775083888643
ELECTRON_FREQUENCY = 3.68325543702295686353

INVISCID_E = PhysParams(delta=0, nu=0.0, lam=0.0, mach=1.0)
INVISCID_I = PhysParams(delta=1, nu=0.0, lam=0.0, mach=1.0)

complexes = st.complex_numbers(max_magnitude=1e3, allow_nan=False, allow_infinity=False)
states = st.tuples(complexes, complexes, complexes).map(np.array)


def test_rhs_nonzero_electron_example():
    d = rhs_nonzero(0.0, ModeState(1.0, 0.0, 0.0), Mode(1, 0.0), INVISCID_E)
    assert d[0] == 0 and d[2] == 0
    assert d[1].real == pytest.approx(ONE_PLUS_4PI, rel=1e-15)


def test_rhs_zero_examples():
    ion = rhs_zero_ion(ModeState(1.0, 0.0, 0.0), 1.0, INVISCID_I)
    assert ion[1].real == pytest.approx(ION_SQUARED_FREQUENCY, rel=1e-15)
    ele = rhs_zero_electron(ModeState(1.0, 0.0, 0.0), 1.0, INVISCID_E)
    assert ele[1].real == pytest.approx(ONE_PLUS_4PI, rel=1e-15)


def test_rhs_of_zero_state_is_zero():
    p = PhysParams(delta=1, nu=1e-2, lam=0.3)
    assert not np.any(rhs_nonzero(2.0, ModeState(), Mode(3, -1.0), p))
    assert not np.any(rhs_zero_ion(ModeState(), 2.0, p))
    assert not np.any(rhs_zero_electron(ModeState(), 2.0, PhysParams(delta=0)))


def test_rhs_rejections():
    with pytest.raises(ZeroModeError):
        rhs_nonzero(0.0, ModeState(1.0), Mode(0, 1.0), INVISCID_I)
    with pytest.raises(ValueError):
        rhs_nonzero(0.0, np.array([np.nan, 0, 0]), Mode(1, 1.0), INVISCID_I)
    with pytest.raises(ValueError):
        rhs_zero_ion(ModeState(1.0), 0.0, INVISCID_I)
    with pytest.raises(ValueError):
        rhs_zero_ion(ModeState(1.0), 1.0, INVISCID_E)
    with pytest.raises(ValueError):
        rhs_zero_electron(ModeState(1.0), 1.0, INVISCID_I)
    with pytest.raises(ValueError):
        ModeState(float("inf"))


@given(states, states, complexes, st.floats(0, 50), st.integers(-4, 4).filter(bool),
       st.floats(-20, 20), st.sampled_from([0, 1]))
def test_rhs_linearity(a, b, c, t, k, xi, delta):
    p = PhysParams(delta=delta, nu=1e-2, lam=0.1, mach=0.7)
    mode = Mode(k, xi)
    lhs = rhs_nonzero(t, a + c * b, mode, p)
    rhs = rhs_nonzero(t, a, mode, p) + c * rhs_nonzero(t, b, mode, p)
    scale = np.max(np.abs(rhs_nonzero(t, a, mode, p))) + abs(c) * np.max(
        np.abs(rhs_nonzero(t, b, mode, p))) + 1.0
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * scale
    zfn = rhs_zero_ion if delta else rhs_zero_electron
    xi0 = xi if xi != 0 else 1.0
    lz = zfn(a + c * b, xi0, p)
    rz = zfn(a, xi0, p) + c * zfn(b, xi0, p)
    zscale = np.max(np.abs(zfn(a, xi0, p))) + abs(c) * np.max(np.abs(zfn(b, xi0, p))) + 1.0
    assert np.max(np.abs(lz - rz)) <= 1e-12 * zscale


@given(states, st.floats(0, 50), st.integers(-4, 4).filter(bool), st.floats(-20, 20))
def test_inviscid_rhs_conserves_F(y, t, k, xi):
    d = rhs_nonzero(t, y, Mode(k, xi), INVISCID_I)
    assert abs(d[0] + d[2]) <= 1e-12 * (np.max(np.abs(y)) + 1)
    dz = rhs_zero_ion(y, xi if xi else 1.0, INVISCID_I)
    assert abs(dz[0] + dz[2]) == 0


def test_zero_initial_gives_zero_trajectory():
    tr = integrate_mode(ModeState(), Mode(2, 3.0), PhysParams(), 10.0,
                        sample_times=np.linspace(0, 10, 11))
    assert not np.any(tr.states)


def test_electron_returns_after_one_period():
    period = 2 * math.pi / ELECTRON_FREQUENCY
    tr = integrate_mode(ModeState(1.0, 0.0, 0.0), Mode(0, 1.0), INVISCID_E, period,
                        rtol=1e-11, atol=1e-14)
    assert abs(tr.Pi[-1] - 1.0) <= 1e-8


def test_trajectory_always_contains_endpoints():
    tr = integrate_mode(ModeState(1.0), Mode(1, 1.0), PhysParams(), 5.0,
                        sample_times=[1.0, 2.0])
    assert list(tr.times) == [0.0, 1.0, 2.0, 5.0]
    assert tr.state(0) == ModeState(1.0)
    assert tr.steps > 0


def test_integration_failure_names_mode_and_time():
    with pytest.raises(IntegrationError) as info:
        integrate_mode(ModeState(1.0), Mode(3, -2.0), PhysParams(), 100.0, max_steps=5)
    err = info.value
    assert err.k == 3 and err.xi == -2.0 and 0 < err.t < 100.0
    assert "k=3" in str(err)


def test_integrate_mode_rejections():
    with pytest.raises(ValueError):
        integrate_mode(ModeState(1.0), Mode(1, 0.0), PhysParams(), 0.0)
    with pytest.raises(ValueError):
        integrate_mode(ModeState(1.0), Mode(1, 0.0), PhysParams(), 1.0, rtol=0.0)
    with pytest.raises(ValueError):
        integrate_mode(ModeState(1.0), Mode(0, 0.0), PhysParams(), 1.0)
    with pytest.raises(ValueError):
        integrate_mode(ModeState(1.0), Mode(1, 0.0), PhysParams(), 1.0, sample_times=[0.5, 0.2])


def test_trajectory_invariants():
    with pytest.raises(ValueError):
        Trajectory(Mode(1, 0.0), PhysParams(), np.array([0.0, 0.0]), np.zeros((2, 3)), 1e-9,
                   1e-12)
    with pytest.raises(ValueError):
        Trajectory(Mode(1, 0.0), PhysParams(), np.array([0.0, 1.0]), np.zeros((3, 3)), 1e-9,
                   1e-12)


def test_oracle_examples():
    assert oracle_zero_inviscid("electron", 1.0, 1.0, ModeState(1.0), 0.0) == pytest.approx(
        [1.0, 0.0, 0.0])
    assert oscillator_frequency("electron", 1.0, 1.0) == pytest.approx(ELECTRON_FREQUENCY,
                                                                      rel=1e-15)
    assert oscillator_frequency("ion", 1.0, 1.0) ** 2 == pytest.approx(ION_SQUARED_FREQUENCY,
                                                                      rel=1e-15)
    with pytest.raises(ValueError):
        oracle_zero_inviscid("ion", 0.0, 1.0, ModeState(1.0), 1.0)


@pytest.mark.parametrize("species", ["ion", "electron"])
def test_oracle_matches_integration_with_general_data(species):
    p = INVISCID_I if species == "ion" else INVISCID_E
    y0 = ModeState(0.3 - 0.2j, 1.1 + 0.4j, -0.7j)
    t = np.linspace(0.0, 20.0, 401)
    tr = integrate_mode(y0, Mode(0, -1.7), p, 20.0, rtol=1e-11, atol=1e-14, sample_times=t)
    exact = oracle_zero_inviscid(species, -1.7, 1.0, y0, t)
    assert np.max(np.abs(tr.states - exact)) <= 1e-8
    # eta + omega is conserved
    s = exact[:, 0] + exact[:, 2]
    assert np.max(np.abs(s - s[0])) <= 1e-14


def _oscillator_error(rtol):
    t = np.linspace(0.0, 50.0, 2001)
    tr = integrate_mode(ModeState(1.0), Mode(0, 1.0), INVISCID_E, 50.0, rtol=rtol,
                        atol=1e-300, sample_times=t)
    return np.max(np.abs(tr.Pi - np.cos(ELECTRON_FREQUENCY * t)))


def test_convergence_order_step_halving():
    # the error tracks rtol; rtol / 2^5 halves the fifth-order step size
    coarse, fine = _oscillator_error(1e-7), _oscillator_error(1e-7 / 32)
    assert coarse / fine >= 4.0


@pytest.mark.xfail(strict=True, reason="a tolerance-proportional controller gains ~2x per "
                                       "halving of rtol, not 4x")
def test_convergence_order_literal_rtol_halving():
    assert _oscillator_error(1e-9) / _oscillator_error(5e-10) >= 4.0


def test_batch_matches_single_and_is_thread_independent():
    p = PhysParams(delta=1, nu=1e-3)
    ks = np.array([1.0, -1.0, 2.0, -3.0, 4.0, 1.0])
    xis = np.array([0.5, -0.5, 7.0, 2.0, -9.0, 30.0])
    y0 = np.array([[1.0, 0.2j, 0.5]] * ks.size, dtype=complex)
    t = np.linspace(0.0, 60.0, 61)
    one = integrate_modes(y0, ks, xis, p, t, threads=1)
    many = integrate_modes(y0, ks, xis, p, t, threads=4)
    assert np.array_equal(one, many)
    single = integrate_mode(y0[2], Mode(2, 7.0), p, 60.0, sample_times=t)
    assert np.array_equal(single.states, one[2])


def test_hermitian_partner_evolves_as_conjugate():
    p = PhysParams(delta=0, nu=1e-2, lam=0.05)
    y0 = np.array([0.4 + 0.3j, -0.1j, 1.0 - 0.5j])
    t = np.linspace(0.0, 30.0, 31)
    a = integrate_mode(y0, Mode(2, 3.5), p, 30.0, sample_times=t)
    b = integrate_mode(np.conj(y0), Mode(-2, -3.5), p, 30.0, sample_times=t)
    assert np.max(np.abs(b.states - np.conj(a.states))) <= 1e-12


@settings(max_examples=10, deadline=None)
@given(st.floats(-3, 3), st.floats(0.5, 2.0))
def test_inviscid_F_conservation(xi, mach):
    p = PhysParams(delta=1, nu=0.0, lam=0.0, mach=mach)
    tr = integrate_mode(ModeState(1.0, 0.5, 0.25), Mode(1, xi), p, 100.0, rtol=1e-10,
                        atol=1e-14, sample_times=np.linspace(0, 100, 201))
    assert np.max(np.abs(tr.F - tr.F[0])) <= 1e-8


def test_duhamel_inviscid_is_constant():
    tr = integrate_mode(ModeState(1.0, 0.3, -0.2), Mode(1, 1.0), INVISCID_I, 10.0,
                        sample_times=np.linspace(0, 10, 201))
    assert np.allclose(duhamel_F(tr), tr.F[0], rtol=0, atol=1e-15)


def test_duhamel_homogeneous_solution():
    p = PhysParams(delta=0, nu=1e-2)
    mode = Mode(1, 2.0)
    t = np.linspace(0.0, 10.0, 401)
    # hand-built data with Pi = 0: only the free decay remains
    F0 = 0.8 - 0.1j
    states = np.zeros((t.size, 3), dtype=complex)
    states[:, 2] = F0 * np.exp(symbol_Lnu(t, mode, p))
    tr = Trajectory(mode, p, t, states, 1e-9, 1e-12)
    assert np.max(np.abs(duhamel_F(tr) - states[:, 2])) <= 1e-15


def test_duhamel_matches_integration():
    p = PhysParams(delta=0, nu=1e-2, mach=1.0)
    t = np.linspace(0.0, 20.0, 8001)
    tr = integrate_mode(ModeState(1.0, 0.0, 0.5), Mode(1, 0.0), p, 20.0, rtol=1e-11,
                        atol=1e-300, sample_times=t)
    gap = np.abs(duhamel_F(tr) - tr.F) / np.max(np.abs(tr.states), axis=1)
    assert np.max(gap) <= 1e-6


def test_duhamel_reports_required_samples():
    p = PhysParams(delta=0, nu=1e-2)
    tr = integrate_mode(ModeState(1.0, 0.0, 0.5), Mode(1, 0.0), p, 20.0,
                        sample_times=np.linspace(0, 20, 41))
    with pytest.raises(QuadratureError) as info:
        duhamel_F(tr)
    assert info.value.required > 41
    assert str(info.value.required) in str(info.value)
