"""Physical parameters and the time-dependent Fourier symbols of the sheared frame.

Every symbol is a pure function of ``(t, mode, params)``.  A :class:`Mode` may
carry scalar or array wavenumbers; all functions broadcast with numpy, so the
same code evaluates one mode or a whole ``(k, xi)`` grid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

FOUR_PI = 4.0 * math.pi


class ZeroSymbolError(ValueError):
    """Raised when a symbol would vanish where it is used as a divisor."""


class ZeroModeError(ValueError):
    """Raised when an operation defined only for k != 0 receives k = 0."""


@dataclass(frozen=True)
class Mode:
    """One Fourier mode ``(k, xi)`` of the sheared frame.

    ``k`` and ``xi`` may also be broadcastable arrays describing a family of
    modes; integrality of ``k`` is checked elementwise.
    """

    k: float | np.ndarray
    xi: float | np.ndarray

    def __post_init__(self):
        k = np.asarray(self.k, dtype=float)
        xi = np.asarray(self.xi, dtype=float)
        if not (np.all(np.isfinite(k)) and np.all(np.isfinite(xi))):
            raise ValueError("mode wavenumbers must be finite")
        if np.any(k != np.round(k)):
            raise ValueError("k must be an integer wavenumber")

    @property
    def is_zero(self) -> bool:
        return bool(np.all(np.asarray(self.k) == 0))


def _require_nonzero_k(mode: Mode) -> None:
    if np.any(np.asarray(mode.k) == 0):
        raise ZeroModeError("operation undefined for the k = 0 mode")


# Validation tiers.  Each maps to a list of (description, holds) pairs so that
# callers can report exactly which condition fails.
TIERS = ("enhanced", "weighted", "zero_ion", "zero_electron")


@dataclass(frozen=True)
class PhysParams:
    """Physical and multiplier parameters.

    ``delta`` is 1 for ions and 0 for electrons.  ``mu`` and ``gamma`` are
    derived and cannot be set directly.
    """

    delta: int = 1
    nu: float = 1e-3
    lam: float = 0.0
    mach: float = 1.0
    beta: float = 50.0
    delta_beta: float = 1.0 / 12.0
    mu: float = field(init=False)
    gamma: float = field(init=False)

    def __post_init__(self):
        if self.delta not in (0, 1):
            raise ValueError(f"species flag delta must be 0 or 1, got {self.delta!r}")
        for name in ("nu", "lam", "mach", "beta", "delta_beta"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite")
        if self.nu < 0 or self.lam < 0:
            raise ValueError("viscosities must be non-negative")
        if self.mach <= 0:
            raise ValueError("Mach number must be positive")
        if self.beta <= 48:
            raise ValueError("beta must exceed 48")
        lo = max(2.0 / (self.beta * (self.beta**2 - 1.0)), 4.0 / self.beta)
        if not lo < self.delta_beta < 1.0:
            raise ValueError(f"delta_beta must lie in ({lo:.6g}, 1)")
        object.__setattr__(self, "mu", self.nu + self.lam)
        object.__setattr__(self, "gamma", self.mach * self.nu ** (1.0 / 3.0) / 4.0)

    @property
    def species(self) -> str:
        return "ion" if self.delta == 1 else "electron"

    def tier_conditions(self, tier: str) -> list[tuple[str, bool]]:
        """Conditions of a validation tier as ``(description, holds)`` pairs."""
        nu, lam, mu, M = self.nu, self.lam, self.mu, self.mach
        inv = lambda x, p: math.inf if x == 0 else x ** (-p)  # noqa: E731
        if tier == "enhanced":
            return [
                ("nu+lambda <= 1/2", mu <= 0.5),
                ("M <= 1/(nu+lambda)", M <= inv(mu, 1.0)),
                ("M <= lambda^(-1/2)", M <= inv(lam, 0.5)),
                ("M <= nu^(-1/3)", M <= inv(nu, 1.0 / 3.0)),
                ("M^2 <= 1/(nu+lambda)", M * M <= inv(mu, 1.0)),
                ("M^2 <= (nu+lambda)/(16 nu)", 16.0 * nu * M * M <= mu),
                ("M^2 <= ((nu+lambda)/(32 pi nu))^(1/2)",
                 (M * M) ** 2 * 32.0 * math.pi * nu <= mu),
            ]
        if tier == "weighted":
            return [
                ("M <= (nu+lambda)^(-1/2)", M <= inv(mu, 0.5)),
                ("M <= lambda^(-1/2)", M <= inv(lam, 0.5)),
                ("M <= nu^(-1/3)", M <= inv(nu, 1.0 / 3.0)),
            ]
        if tier == "zero_ion":
            return [
                ("0 < nu+lambda <= 1", 0.0 < mu <= 1.0),
                ("M^2 (nu+lambda) <= 1", M * M * mu <= 1.0),
                ("16 nu M^2/(nu+lambda) <= 1", mu > 0 and 16.0 * nu * M * M <= mu),
            ]
        if tier == "zero_electron":
            return [
                ("0 <= 32 pi nu M^4/(nu+lambda) <= 1",
                 mu > 0 and 32.0 * math.pi * nu * M**4 <= mu),
            ]
        raise ValueError(f"unknown validation tier {tier!r}; expected one of {TIERS}")

    def violations(self, tiers) -> list[str]:
        """Descriptions of every failed condition across ``tiers``."""
        return [f"{tier}: {desc}" for tier in tiers
                for desc, ok in self.tier_conditions(tier) if not ok]

    def check(self, tiers) -> None:
        bad = self.violations(tiers)
        if bad:
            raise ValueError("parameter regime violated: " + "; ".join(bad))


def symbol_alpha(t, mode: Mode):
    """Return ``(alpha, dt_alpha)`` with alpha = k^2 + (xi - k t)^2."""
    k = np.asarray(mode.k, dtype=float)
    d = np.asarray(mode.xi, dtype=float) - k * t
    alpha = k * k + d * d
    if np.any(alpha == 0):
        raise ZeroSymbolError("zero symbol: alpha vanishes at k = 0, xi = 0")
    return alpha, -2.0 * k * d


def multiplier_m(t, mode: Mode, params: PhysParams):
    """Return ``(m, dt m / m)`` for m = exp(2 arctan(nu^(1/3) (t - xi/k)))."""
    _require_nonzero_k(mode)
    c = params.nu ** (1.0 / 3.0)
    s = t - np.asarray(mode.xi, dtype=float) / np.asarray(mode.k, dtype=float)
    m = np.exp(2.0 * np.arctan(c * s))
    return m, 2.0 * c / (c * c * s * s + 1.0)


def w_window(mode: Mode, params: PhysParams):
    """Entry and exit times of the window on which w follows alpha."""
    _require_nonzero_k(mode)
    tc = np.asarray(mode.xi, dtype=float) / np.asarray(mode.k, dtype=float)
    return np.maximum(tc, 0.0), tc + params.beta * params.nu ** (-1.0 / 3.0)


def multiplier_w(t, mode: Mode, params: PhysParams):
    """Return ``(w, dt w / w)``.

    w solves dt w / w = (dt alpha / alpha) on the window
    [xi/k, xi/k + beta nu^(-1/3)] intersected with [0, inf), and 0 elsewhere,
    with w(0) = 1.  Closed form: 1 before the window, alpha(t)/alpha(t_enter)
    inside, frozen at the exit value afterwards.
    """
    t_in, t_out = w_window(mode, params)
    t = np.asarray(t, dtype=float)
    alpha, dt_alpha = symbol_alpha(t, mode)
    alpha_in, _ = symbol_alpha(t_in, mode)
    alpha_out, _ = symbol_alpha(np.maximum(t_out, 0.0), mode)
    inside = (t >= t_in) & (t <= t_out)
    after = t > t_out
    w = np.where(inside, alpha / alpha_in, np.where(after, alpha_out / alpha_in, 1.0))
    dtw = np.where(inside, dt_alpha / alpha, 0.0)
    # A window ending before t = 0 leaves w identically 1.
    w = np.where(t_out < 0, 1.0, w)
    return w, dtw


def symbol_Lnu(t, mode: Mode, params: PhysParams):
    """Closed form of -nu * integral_0^t alpha(tau) d tau."""
    k = np.asarray(mode.k, dtype=float)
    xi = np.asarray(mode.xi, dtype=float)
    return -params.nu * t * (k * k * t * t / 3.0 + k * k + xi * xi - xi * k * t)


def sobolev_weight(s, mode: Mode):
    """Japanese bracket <k, xi>^s = (1 + k^2 + xi^2)^(s/2)."""
    k = np.asarray(mode.k, dtype=float)
    xi = np.asarray(mode.xi, dtype=float)
    return (1.0 + k * k + xi * xi) ** (0.5 * s)
