"""Spectral ensembles over a (k, xi) grid, Sobolev norms and velocity observables.

Norms are taken directly on spectral coefficients (Plancherel constant 1):
sum over k, quadrature over xi.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .symbols import Mode, PhysParams, symbol_alpha


@dataclass(frozen=True)
class GridSpec:
    """Cell-centred xi grid on [-xi_max, xi_max] and a set of x-wavenumbers."""

    xi_max: float = 32.0
    xi_step: float = 1.0 / 16.0
    k_set: tuple = (-4, -3, -2, -1, 0, 1, 2, 3, 4)

    def xi_nodes(self) -> np.ndarray:
        n = self.xi_max / self.xi_step
        if abs(n - round(n)) > 1e-9 or n < 1:
            raise ValueError("xi_max must be a positive multiple of xi_step")
        n = int(round(n))
        half = (np.arange(n) + 0.5) * self.xi_step
        return np.concatenate([-half[::-1], half])

    def xi_weights(self) -> np.ndarray:
        # Cell-centred trapezoid: every node owns a full cell, total 2 * xi_max.
        return np.full(2 * int(round(self.xi_max / self.xi_step)), self.xi_step)


@dataclass(frozen=True)
class GeneratorSpec:
    """Initial-data descriptor.

    Each component is ``amplitude * |k|^(-k_decay) * profile(xi) * weight``,
    where ``profile`` is the Gaussian ``exp(-xi^2 / (2 sigma^2))`` zeroed on
    ``|xi| < xi_min``.  ``zero_line`` chooses whether k = 0 carries data.
    """

    amplitude: float = 1.0
    sigma: float = 4.0
    eta: float = 1.0
    psi: float = 0.0
    omega: float = 1.0
    k_decay: float = 0.0
    xi_min: float = 0.0
    zero_line: bool = False
    nonzero_lines: bool = True
    random_phase: bool = False
    seed: int = 0

    def profile(self, xi):
        g = np.exp(-np.asarray(xi) ** 2 / (2.0 * self.sigma**2))
        return np.where(np.abs(xi) >= self.xi_min, g, 0.0)


@dataclass
class SpectralEnsemble:
    """States on a (k, xi) grid: ``states[i, j]`` belongs to ``(k[i], xi[j])``."""

    k: np.ndarray
    xi: np.ndarray
    weights: np.ndarray
    states: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        if np.any(self.xi == 0):
            raise ValueError("xi grid must exclude xi = 0")
        if np.any(self.weights <= 0):
            raise ValueError("quadrature weights must be positive")
        if self.states.shape != (self.k.size, self.xi.size, 3):
            raise ValueError("states must have shape (len(k), len(xi), 3)")

    @property
    def mode_grid(self) -> Mode:
        return Mode(self.k[:, None].astype(float), self.xi[None, :])

    @property
    def Pi(self):
        return self.states[..., 0]

    @property
    def Psi(self):
        return self.states[..., 1]

    @property
    def Gamma(self):
        return self.states[..., 2]

    @property
    def F(self):
        return self.states[..., 0] + self.states[..., 2]

    def zero_row(self):
        hit = np.nonzero(self.k == 0)[0]
        return int(hit[0]) if hit.size else None

    def nonzero_rows(self) -> np.ndarray:
        return np.nonzero(self.k != 0)[0]

    def with_states(self, states, t) -> "SpectralEnsemble":
        return replace(self, states=states, t=t)

    def hermitian_asymmetry(self) -> float:
        """Max of |state(-k,-xi) - conj(state(k,xi))| over pairs on the grid."""
        kpos = {int(k): i for i, k in enumerate(self.k)}
        worst = 0.0
        for i, k in enumerate(self.k):
            j = kpos.get(-int(k))
            if j is None:
                continue
            # the xi grid is symmetric, so -xi is the reversed axis
            diff = self.states[j, ::-1] - np.conj(self.states[i])
            worst = max(worst, float(np.max(np.abs(diff), initial=0.0)))
        return worst


def make_initial_ensemble(gen: GeneratorSpec, grid: GridSpec) -> SpectralEnsemble:
    """Build a Hermitian-symmetric initial ensemble.

    Hermitian symmetry holds by construction: data for k < 0 (and for xi < 0
    on the k = 0 line) is the conjugate of its mirror partner.
    """
    xi = grid.xi_nodes()
    if np.any(xi == 0):
        raise ValueError("xi grid must exclude xi = 0")
    k = np.array(sorted(set(int(v) for v in grid.k_set)), dtype=int)
    weights = grid.xi_weights()
    comp = np.array([gen.eta, gen.psi, gen.omega], dtype=complex)
    prof = gen.profile(xi)
    states = np.zeros((k.size, xi.size, 3), dtype=complex)
    rng = np.random.default_rng(gen.seed)
    phases = {}
    for i, kk in enumerate(k):
        if kk == 0 and not gen.zero_line:
            continue
        if kk != 0 and not gen.nonzero_lines:
            continue
        amp = gen.amplitude * (1.0 if kk == 0 else abs(kk) ** (-gen.k_decay))
        base = amp * prof[:, None] * comp[None, :]
        if gen.random_phase:
            key = abs(int(kk))
            if key not in phases:
                phases[key] = np.exp(2j * math.pi * rng.random((xi.size, 3)))
            ph = phases[key]
            if kk == 0:
                # conjugate-symmetric in xi on the zero line
                half = xi.size // 2
                ph = ph.copy()
                ph[:half] = np.conj(ph[::-1][:half])
            elif kk < 0:
                ph = np.conj(ph[::-1])
            base = base * ph
        states[i] = base
    return SpectralEnsemble(k, xi, weights, states, 0.0)


def _quad(values, weights):
    """Deterministic reduction: quadrature over xi, then sum over k (pairwise)."""
    return float(np.sum(np.sum(values * weights, axis=-1)))


SELECTORS = ("Pi", "Psi", "Gamma", "F", "F_minus_viscous_Psi")


def select_field(ens: SpectralEnsemble, selector: str, params: PhysParams | None = None):
    if selector == "F_minus_viscous_Psi":
        if params is None:
            raise ValueError("selector needs params")
        return ens.F - params.nu * params.mach**2 * ens.Psi
    if selector in ("Pi", "Psi", "Gamma", "F"):
        return getattr(ens, selector)
    raise ValueError(f"unknown field selector {selector!r}; expected one of {SELECTORS}")


def sobolev_norm(ens: SpectralEnsemble, selector, s1: float = 0.0, s2: float = 0.0,
                 s: float | None = None, params: PhysParams | None = None,
                 multiplier=None) -> float:
    """Spectral Sobolev norm of a field.

    With ``s`` given the isotropic weight <k, xi>^s is used, otherwise the
    anisotropic <k>^s1 <xi>^s2.  ``selector`` is a field name or an array of
    coefficients; ``multiplier`` (array broadcastable to the grid) weights the
    coefficients before squaring.
    """
    f = select_field(ens, selector, params) if isinstance(selector, str) else selector
    kk = ens.k[:, None].astype(float)
    xx = ens.xi[None, :]
    if s is not None:
        wt = (1.0 + kk * kk + xx * xx) ** s
    else:
        wt = (1.0 + kk * kk) ** s1 * (1.0 + xx * xx) ** s2
    if multiplier is not None:
        f = f * multiplier
    return math.sqrt(_quad(wt * np.abs(f) ** 2, ens.weights))


@dataclass(frozen=True)
class Observables:
    """Velocity and density norms of the nonzero-mode sector at one time."""

    q_norm: float
    px_norm: float
    py_norm: float
    eta_norm_over_M: float
    psi_norm: float
    grad_eta_norm_over_M: float
    omega_norm: float
    raw_norms: tuple = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "raw_norms",
                           (self.psi_norm, self.grad_eta_norm_over_M, self.omega_norm))

    FIELDS = ("q_norm", "px_norm", "py_norm", "eta_norm_over_M", "psi_norm",
              "grad_eta_norm_over_M", "omega_norm")


def _nonzero_sector(ens: SpectralEnsemble):
    z = ens.zero_row()
    if z is not None and np.any(ens.states[z] != 0):
        raise ValueError("k = 0 line carries data; nonzero-mode observables need it zeroed")
    rows = ens.nonzero_rows()
    return rows, Mode(ens.k[rows, None].astype(float), ens.xi[None, :])


def observables(ens: SpectralEnsemble, params: PhysParams) -> Observables:
    """Helmholtz-projected velocity norms and density norms at ``ens.t``."""
    rows, mode = _nonzero_sector(ens)
    alpha, _ = symbol_alpha(ens.t, mode)
    st = ens.states[rows]
    Pi, Psi, Gam = st[..., 0], st[..., 1], st[..., 2]
    kk = np.asarray(mode.k)
    d = mode.xi - kk * ens.t
    w = ens.weights
    q = lambda v: math.sqrt(_quad(v, w))  # noqa: E731
    M = params.mach
    return Observables(
        q_norm=q(np.abs(Psi) ** 2 / alpha),
        px_norm=q((d / alpha) ** 2 * np.abs(Gam) ** 2),
        py_norm=q((kk / alpha) ** 2 * np.abs(Gam) ** 2),
        eta_norm_over_M=q(np.abs(Pi) ** 2) / M,
        psi_norm=q(np.abs(Psi) ** 2),
        grad_eta_norm_over_M=q(alpha * np.abs(Pi) ** 2) / M,
        omega_norm=q(np.abs(Gam) ** 2),
    )


def velocity_norm_squared(ens: SpectralEnsemble):
    """||u||^2 two ways: ``(|Q|^2 + |P^x|^2 + |P^y|^2, |a^-1/2 Psi|^2 + |a^-1/2 Gamma|^2)``."""
    obs = observables(ens, PhysParams(mach=1.0))
    rows, mode = _nonzero_sector(ens)
    alpha, _ = symbol_alpha(ens.t, mode)
    st = ens.states[rows]
    direct = _quad((np.abs(st[..., 1]) ** 2 + np.abs(st[..., 2]) ** 2) / alpha, ens.weights)
    return obs.q_norm**2 + obs.px_norm**2 + obs.py_norm**2, direct


def poincare_gap(ens: SpectralEnsemble) -> float:
    """``||grad eta|| - ||eta||`` on the nonzero sector (non-negative when k != 0)."""
    rows, mode = _nonzero_sector(ens)
    alpha, _ = symbol_alpha(ens.t, mode)
    Pi = ens.states[rows][..., 0]
    grad = math.sqrt(_quad(alpha * np.abs(Pi) ** 2, ens.weights))
    return grad - math.sqrt(_quad(np.abs(Pi) ** 2, ens.weights))
