"""Weighted variables, mode energies, zero-mode functionals and the initial constant.

Mode-level functions broadcast over any shape: ``states[..., 0:3]`` together
with ``t`` and the wavenumbers of ``mode``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import SpectralEnsemble, sobolev_norm
from .symbols import (FOUR_PI, Mode, PhysParams, ZeroModeError, multiplier_m, multiplier_w,
                      sobolev_weight, symbol_alpha)

PLAIN = "plain"
W_WEIGHTED = "w"


@dataclass(frozen=True)
class WeightedVars:
    Z1: np.ndarray
    Z2: np.ndarray
    Z3: np.ndarray
    variant: str
    s: float


def _components(states):
    if hasattr(states, "as_array"):
        states = states.as_array()
    y = np.asarray(states, dtype=complex)
    return y[..., 0], y[..., 1], y[..., 2]


def weighted_vars(states, t, mode: Mode, params: PhysParams, s: float = 0.0,
                  variant: str = PLAIN) -> WeightedVars:
    """Multiplier-weighted variables of a nonzero mode.

    plain: (1/M) a^-1/4 Pi, a^-3/4 Psi, a^-3/4 (F - nu M^2 Psi);
    w:     (1/M) w^-3/4 a^1/2 Pi, w^-3/4 Psi, w^-3/4 (F - nu M^2 Psi);
    each further multiplied by <k, xi>^s / m.
    """
    if np.any(np.asarray(mode.k) == 0):
        raise ZeroModeError("weighted variables need k != 0")
    Pi, Psi, Gam = _components(states)
    alpha, _ = symbol_alpha(t, mode)
    m, _ = multiplier_m(t, mode, params)
    common = sobolev_weight(s, mode) / m
    M = params.mach
    G = Pi + Gam - params.nu * M * M * Psi
    if variant == PLAIN:
        a34 = alpha ** -0.75
        return WeightedVars(common * alpha ** -0.25 * Pi / M, common * a34 * Psi,
                            common * a34 * G, PLAIN, s)
    if variant == W_WEIGHTED:
        w, _ = multiplier_w(t, mode, params)
        cw = common * w ** -0.75
        return WeightedVars(cw * np.sqrt(alpha) * Pi / M, cw * Psi, cw * G, W_WEIGHTED, s)
    raise ValueError(f"unknown variant {variant!r}")


def _z1_weight(t, mode, params):
    alpha, dt_alpha = symbol_alpha(t, mode)
    M2 = params.mach**2
    return (1.0 + M2 * dt_alpha**2 / alpha**3
            + FOUR_PI * M2 / (alpha + FOUR_PI * M2 * params.delta)), alpha, dt_alpha


def _energy(zv, t, mode, params, gamma):
    W, alpha, dt_alpha = _z1_weight(t, mode, params)
    g = params.gamma if gamma is None else gamma
    cross = np.real(np.conj(zv.Z1) * zv.Z2)
    coef = 0.5 * params.mach * dt_alpha / alpha**1.5 - 2.0 * g / np.sqrt(alpha)
    return 0.5 * (W * np.abs(zv.Z1) ** 2 + np.abs(zv.Z2) ** 2 + np.abs(zv.Z3) ** 2
                  + coef * cross)


def energy_E_delta(zv: WeightedVars, t, mode: Mode, params: PhysParams, gamma=None):
    """Mode energy built from the plain weighted variables.

    ``gamma`` overrides the coupling constant M nu^(1/3) / 4 (negative controls).
    """
    if zv.variant != PLAIN:
        raise ValueError("energy_E_delta needs plain weighted variables")
    return _energy(zv, t, mode, params, gamma)


def energy_E_delta_w(zv: WeightedVars, t, mode: Mode, params: PhysParams, gamma=None):
    """Mode energy built from the w-weighted variables."""
    if zv.variant != W_WEIGHTED:
        raise ValueError("energy_E_delta_w needs w-weighted variables")
    return _energy(zv, t, mode, params, gamma)


def energy_sandwich(zv: WeightedVars, t, mode: Mode, params: PhysParams):
    """Lower and upper coercivity bounds for either mode energy."""
    W, _, _ = _z1_weight(t, mode, params)
    a, b, c = np.abs(zv.Z1) ** 2, np.abs(zv.Z2) ** 2, np.abs(zv.Z3) ** 2
    return 0.25 * (W * a + b + 2.0 * c), W * a + b + c


# Zero-mode functionals --------------------------------------------------------

def _zero_parts(states, xi, weights, l, min_power):
    eta, psi, om = _components(states)
    xi = np.asarray(xi, dtype=float)
    if l + min_power < 0 and np.any(xi == 0):
        raise ValueError("grid contains xi = 0 where negative powers are needed")
    ax = np.abs(xi)
    pw = lambda p: ax ** (2.0 * p)  # noqa: E731
    return eta, psi, om, pw, np.asarray(weights, dtype=float)


def _cross(eta, psi, pw, p, weights):
    return float(np.sum(pw(p) * np.real(eta * np.conj(psi)) * weights))


def zero_mode_calE(states, xi, weights, l: int, params: PhysParams) -> float:
    """Ion zero-line functional of order ``l`` (spectral quadrature over xi)."""
    if params.delta != 1:
        raise ValueError("ion functional needs delta = 1")
    eta, psi, om, pw, wq = _zero_parts(states, xi, weights, l, -1)
    M2 = params.mach**2
    screen = 1.0 / (np.asarray(xi) ** 2 + FOUR_PI * M2)
    e2, p2 = np.abs(eta) ** 2, np.abs(psi) ** 2
    dens = (pw(l) + pw(l - 1)) * p2 \
        + (pw(l + 1) + pw(l)) * e2 / M2 \
        + FOUR_PI * (pw(l + 1) + pw(l)) * screen * e2 \
        + pw(l) * np.abs(om + eta - params.nu * M2 * psi) ** 2
    return float(np.sum(dens * wq))


def zero_mode_E_l(states, xi, weights, l: int, params: PhysParams) -> float:
    """Ion energy: half of the functional minus a quarter-viscosity cross term."""
    eta, psi, _, pw, wq = _zero_parts(states, xi, weights, l, -1)
    big = zero_mode_calE(states, xi, weights, l, params)
    return 0.5 * (big - 0.5 * params.mu * _cross(eta, psi, pw, l, wq))


def zero_mode_calF(states, xi, weights, l: int, params: PhysParams) -> float:
    """Electron zero-line functional of order ``l``."""
    if params.delta != 0:
        raise ValueError("electron functional needs delta = 0")
    eta, psi, om, pw, wq = _zero_parts(states, xi, weights, l, -2)
    M2 = params.mach**2
    e2, p2 = np.abs(eta) ** 2, np.abs(psi) ** 2
    dens = (pw(l) + pw(l - 1) + pw(l - 2)) * p2 \
        + (pw(l + 1) + pw(l) + pw(l - 1)) * e2 / M2 \
        + FOUR_PI * (pw(l) + pw(l - 1) + pw(l - 2)) * e2 \
        + pw(l) * np.abs(om + eta - params.nu * M2 * psi) ** 2
    return float(np.sum(dens * wq))


def zero_mode_F_l(states, xi, weights, l: int, params: PhysParams) -> float:
    """Electron energy with cross terms at orders l and l - 1."""
    eta, psi, _, pw, wq = _zero_parts(states, xi, weights, l, -2)
    big = zero_mode_calF(states, xi, weights, l, params)
    cross = _cross(eta, psi, pw, l, wq) + _cross(eta, psi, pw, l - 1, wq)
    return 0.5 * (big - 0.5 * params.mu * cross)


def initial_constant_C_in(ens: SpectralEnsemble, s: float, params: PhysParams) -> float:
    """(1/M)||Pi||_{H^{s+1}} + ||Psi||_{H^s} + ||F - nu M^2 Psi||_{H^s}."""
    return (sobolev_norm(ens, "Pi", s=s + 1.0) / params.mach
            + sobolev_norm(ens, "Psi", s=s)
            + sobolev_norm(ens, "F_minus_viscous_Psi", s=s, params=params))


@dataclass
class EnergyReport:
    """Per-mode and aggregated time series of one functional."""

    name: str
    times: np.ndarray
    per_mode: np.ndarray | None
    aggregate: np.ndarray
    fitted_rate: float | None = None
    fitted_constant: float | None = None
    fit: object = None

    def __post_init__(self):
        if np.any(self.aggregate < 0):
            raise ValueError("aggregate energies must be non-negative")


def aggregate_modes(per_mode, weights) -> np.ndarray:
    """Quadrature over xi (last grid axis) and sum over k; time is axis -1 of output.

    ``per_mode`` has shape ``(n_k, n_xi, n_t)``.
    """
    return np.sum(np.sum(per_mode * np.asarray(weights)[None, :, None], axis=1), axis=0)


def plain_energy_reference(ens: SpectralEnsemble, params: PhysParams, s: float = 0.0):
    """Multiplier-free comparison quantity for the plain energy at time ``ens.t``."""
    rows = ens.nonzero_rows()
    sub = SpectralEnsemble(ens.k[rows], ens.xi, ens.weights, ens.states[rows], ens.t)
    mode = sub.mode_grid
    alpha, _ = symbol_alpha(ens.t, mode)
    M = params.mach
    return (sobolev_norm(sub, "Pi", s=s, multiplier=alpha ** -0.25) ** 2 / M**2
            + sobolev_norm(sub, "Psi", s=s, multiplier=alpha ** -0.75) ** 2
            + sobolev_norm(sub, "F_minus_viscous_Psi", s=s, params=params,
                           multiplier=alpha ** -0.75) ** 2)

