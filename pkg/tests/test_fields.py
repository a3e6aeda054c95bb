import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import erfc

from nspcouette.fields import (GeneratorSpec, GridSpec, Observables, SpectralEnsemble,
                               make_initial_ensemble, observables, poincare_gap, sobolev_norm,
                               velocity_norm_squared)
from nspcouette.symbols import PhysParams

SMALL = GridSpec(8.0, 0.25, (-2, -1, 0, 1, 2))


def test_grid_is_offset_and_weights_cover_the_interval():
    grid = GridSpec(4.0, 0.5, (0,))
    xi = grid.xi_nodes()
    assert not np.any(xi == 0)
    assert np.array_equal(xi, -xi[::-1])
    assert xi[len(xi) // 2] == 0.25
    assert grid.xi_weights().sum() == pytest.approx(8.0)
    with pytest.raises(ValueError):
        GridSpec(1.0, 0.3).xi_nodes()


def test_zero_amplitude_gives_zero_ensemble():
    ens = make_initial_ensemble(GeneratorSpec(amplitude=0.0), SMALL)
    assert not np.any(ens.states)


@pytest.mark.parametrize("random_phase", [False, True])
def test_initial_ensemble_is_hermitian(random_phase):
    gen = GeneratorSpec(zero_line=True, random_phase=random_phase, psi=0.4, seed=7)
    ens = make_initial_ensemble(gen, SMALL)
    assert ens.hermitian_asymmetry() == 0.0
    assert np.any(ens.states[ens.zero_row()])


def test_generator_line_switches_and_band_gap():
    ens = make_initial_ensemble(GeneratorSpec(zero_line=True, nonzero_lines=False, xi_min=1.0),
                                SMALL)
    assert not np.any(ens.states[ens.nonzero_rows()])
    zero = ens.states[ens.zero_row()]
    assert not np.any(zero[np.abs(ens.xi) < 1.0])
    assert np.all(zero[np.abs(ens.xi) >= 1.0, 0] > 0)


def test_gaussian_truncation_mass():
    sigma = 2.0
    # mass of exp(-xi^2 / sigma^2) beyond 8 sigma relative to the whole line
    assert erfc(8.0) < 1e-12
    grid = GridSpec(8 * sigma, sigma / 16, (1,))
    ens = make_initial_ensemble(GeneratorSpec(sigma=sigma, eta=1.0, omega=0.0), grid)
    total = sobolev_norm(ens, "Pi") ** 2
    assert total == pytest.approx(sigma * math.sqrt(math.pi), rel=1e-12)


def test_sobolev_norm_basics():
    ens = make_initial_ensemble(GeneratorSpec(psi=0.5), SMALL)
    zero = ens.with_states(np.zeros_like(ens.states), 0.0)
    assert sobolev_norm(zero, "Psi", s=3.0) == 0
    plain = math.sqrt(np.sum(np.abs(ens.Pi) ** 2 * ens.weights))
    assert sobolev_norm(ens, "Pi", s=0.0) == pytest.approx(plain, rel=1e-15)
    assert sobolev_norm(ens, "Pi") == pytest.approx(plain, rel=1e-15)
    assert sobolev_norm(ens, "Pi", s=1.0) > sobolev_norm(ens, "Pi", s1=1.0)
    with pytest.raises(ValueError):
        sobolev_norm(ens, "rho")
    with pytest.raises(ValueError):
        sobolev_norm(ens, "F_minus_viscous_Psi")
    p = PhysParams(nu=0.1, mach=2.0)
    direct = sobolev_norm(ens, ens.F - 0.4 * ens.Psi)
    assert sobolev_norm(ens, "F_minus_viscous_Psi", params=p) == pytest.approx(direct)


def test_norm_converges_under_refinement():
    gen = GeneratorSpec(psi=0.3)
    coarse = make_initial_ensemble(gen, GridSpec(32.0, 1.0 / 8.0, (-2, -1, 1, 2)))
    fine = make_initial_ensemble(gen, GridSpec(32.0, 1.0 / 16.0, (-2, -1, 1, 2)))
    for sel, s in (("Pi", 0.0), ("Psi", 1.5), ("F", 2.0)):
        a, b = sobolev_norm(coarse, sel, s=s), sobolev_norm(fine, sel, s=s)
        assert abs(a - b) / b < 1e-6


def test_observables_without_velocity():
    ens = make_initial_ensemble(GeneratorSpec(eta=1.0, psi=0.0, omega=0.0),
                                GridSpec(8.0, 0.25, (-1, 1)))
    obs = observables(ens, PhysParams(mach=2.0))
    assert obs.q_norm == 0 and obs.px_norm == 0 and obs.py_norm == 0
    assert obs.eta_norm_over_M == pytest.approx(sobolev_norm(ens, "Pi") / 2.0)
    assert obs.raw_norms == (obs.psi_norm, obs.grad_eta_norm_over_M, obs.omega_norm)
    assert set(Observables.FIELDS) <= set(vars(obs))


def test_py_weight_at_critical_time():
    ens = SpectralEnsemble(np.array([1]), np.array([0.5]), np.array([1.0]),
                           np.array([[[0.0, 0.0, 1.0]]], dtype=complex), 0.5)
    assert observables(ens, PhysParams()).py_norm == pytest.approx(1.0, rel=1e-15)


def test_frozen_states_change_only_through_alpha():
    ens = make_initial_ensemble(GeneratorSpec(psi=1.0), GridSpec(8.0, 0.5, (-1, 1)))
    later = ens.with_states(ens.states, 3.0)
    kk = ens.k[:, None].astype(float)
    alpha = kk**2 + (ens.xi[None, :] - kk * 3.0) ** 2
    expected = math.sqrt(np.sum(np.abs(ens.Psi) ** 2 / alpha * ens.weights))
    assert observables(later, PhysParams()).q_norm == pytest.approx(expected, rel=1e-14)


def test_observables_reject_zero_line_data():
    ens = make_initial_ensemble(GeneratorSpec(zero_line=True), SMALL)
    with pytest.raises(ValueError):
        observables(ens, PhysParams())


@settings(max_examples=30)
@given(st.integers(0, 2**31), st.floats(0, 40))
def test_parseval_and_poincare(seed, t):
    rng = np.random.default_rng(seed)
    ens = make_initial_ensemble(GeneratorSpec(), GridSpec(8.0, 0.5, (-3, -1, 0, 2)))
    states = rng.normal(size=ens.states.shape) + 1j * rng.normal(size=ens.states.shape)
    states[ens.zero_row()] = 0
    ens = ens.with_states(states, t)
    a, b = velocity_norm_squared(ens)
    assert abs(a - b) <= 1e-12 * b
    assert poincare_gap(ens) >= 0
