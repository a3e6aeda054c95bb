"""Per-mode linear dynamics in the sheared frame, their integration, and oracles.

States are complex triples ``(Pi, Psi, Gamma)``: density, divergence and
vorticity transforms.  For k = 0 the same slots hold ``(eta, psi, omega)``.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernel
from .symbols import FOUR_PI, Mode, PhysParams, ZeroModeError, symbol_alpha, symbol_Lnu

DEFAULT_RTOL = 1e-9
DEFAULT_ATOL = 1e-12
DEFAULT_MAX_STEPS = 20_000_000


@dataclass(frozen=True)
class ModeState:
    """Complex state of one mode at one time."""

    Pi: complex = 0j
    Psi: complex = 0j
    Gamma: complex = 0j

    def __post_init__(self):
        if not all(np.isfinite(complex(v)) for v in (self.Pi, self.Psi, self.Gamma)):
            raise ValueError("mode state must be finite")

    @property
    def F(self) -> complex:
        return self.Pi + self.Gamma

    def as_array(self) -> np.ndarray:
        return np.array([self.Pi, self.Psi, self.Gamma], dtype=complex)

    @classmethod
    def from_array(cls, y) -> "ModeState":
        return cls(complex(y[0]), complex(y[1]), complex(y[2]))


class IntegrationError(RuntimeError):
    """A mode integration failed; carries the mode and the time reached."""

    def __init__(self, reason: str, k: float, xi: float, t: float):
        super().__init__(f"{reason} at k={k:g}, xi={xi:.17g}, t={t:.17g}")
        self.reason, self.k, self.xi, self.t = reason, k, xi, t


_FAILURE_REASONS = {
    _kernel.STEP_UNDERFLOW: "step-size underflow (stiffness beyond budget)",
    _kernel.MAX_STEPS: "step budget exhausted (stiffness beyond budget)",
    _kernel.NON_FINITE: "non-finite state",
}


@dataclass
class Trajectory:
    """Dense samples of one mode.  ``states`` has shape ``(len(times), 3)``."""

    mode: Mode
    params: PhysParams
    times: np.ndarray
    states: np.ndarray
    rtol: float
    atol: float
    steps: int = 0

    def __post_init__(self):
        if self.times.ndim != 1 or self.times[0] != 0.0 or np.any(np.diff(self.times) <= 0):
            raise ValueError("trajectory times must start at 0 and increase strictly")
        if self.states.shape != (self.times.size, 3):
            raise ValueError("states must align with times")

    @property
    def Pi(self):
        return self.states[:, 0]

    @property
    def Psi(self):
        return self.states[:, 1]

    @property
    def Gamma(self):
        return self.states[:, 2]

    @property
    def F(self):
        return self.states[:, 0] + self.states[:, 2]

    def state(self, i: int) -> ModeState:
        return ModeState.from_array(self.states[i])


def _check_state(y):
    y = np.asarray(y, dtype=complex)
    if not np.all(np.isfinite(y)):
        raise ValueError("non-finite state")
    return y


def rhs_nonzero(t: float, state, mode: Mode, params: PhysParams) -> np.ndarray:
    """Time derivative of ``(Pi, Psi, Gamma)`` for a mode with k != 0."""
    if mode.k == 0:
        raise ZeroModeError("the unified system needs k != 0")
    y = _check_state(state.as_array() if isinstance(state, ModeState) else state)
    alpha, dt_alpha = symbol_alpha(t, mode)
    M2 = params.mach**2
    if params.delta == 0:
        poisson = FOUR_PI
    else:
        poisson = FOUR_PI * alpha / (alpha + FOUR_PI * M2)
    k2 = float(mode.k) ** 2
    return np.array([
        -y[1],
        (dt_alpha / alpha - params.mu * alpha) * y[1] + (alpha / M2 + poisson) * y[0]
        - (2.0 * k2 / alpha) * y[2],
        y[1] - params.nu * alpha * y[2],
    ])


def _zero_rhs(state, xi, params, coupling):
    if xi == 0:
        raise ValueError("zero-mode dynamics exclude xi = 0")
    y = _check_state(state.as_array() if isinstance(state, ModeState) else state)
    xi2 = xi * xi
    return np.array([
        -y[1],
        (xi2 / params.mach**2 + coupling) * y[0] - params.mu * xi2 * y[1],
        y[1] - params.nu * xi2 * y[2],
    ])


def rhs_zero_ion(state, xi: float, params: PhysParams) -> np.ndarray:
    """Time derivative of ``(eta, psi, omega)`` on the ion k = 0 line."""
    if params.delta != 1:
        raise ValueError("ion zero-mode system needs delta = 1")
    xi2 = xi * xi
    return _zero_rhs(state, xi, params, FOUR_PI * xi2 / (xi2 + FOUR_PI * params.mach**2))


def rhs_zero_electron(state, xi: float, params: PhysParams) -> np.ndarray:
    """Time derivative of ``(eta, psi, omega)`` on the electron k = 0 line."""
    if params.delta != 0:
        raise ValueError("electron zero-mode system needs delta = 0")
    return _zero_rhs(state, xi, params, FOUR_PI)


def _sample_grid(t_end, sample_times):
    if sample_times is None:
        sample_times = np.array([0.0, t_end])
    s = np.asarray(sample_times, dtype=float)
    if s.ndim != 1 or s.size == 0 or np.any(np.diff(s) <= 0) or s[0] < 0:
        raise ValueError("sample times must be non-negative and strictly increasing")
    if s[0] != 0.0:
        s = np.concatenate([[0.0], s])
    if t_end is not None and s[-1] != t_end:
        if s[-1] > t_end:
            raise ValueError("sample times exceed t_end")
        s = np.concatenate([s, [t_end]])
    return s


def _validate(params, rtol, atol):
    if not (rtol > 0 and atol > 0):
        raise ValueError("tolerances must be positive")


def integrate_mode(initial, mode: Mode, params: PhysParams, t_end: float,
                   rtol: float = DEFAULT_RTOL, atol: float = DEFAULT_ATOL,
                   sample_times=None, max_steps: int = DEFAULT_MAX_STEPS) -> Trajectory:
    """Integrate one mode from t = 0 and sample it densely.

    Uses an adaptive Dormand-Prince 5(4) pair with PI step control; the local
    error is measured against ``atol + rtol * |y|`` where ``|y|`` is the max
    modulus of the state.  The sample grid always contains 0 and ``t_end``.
    """
    if not t_end > 0:
        raise ValueError("t_end must be positive")
    _validate(params, rtol, atol)
    if mode.k == 0 and mode.xi == 0:
        raise ValueError("zero-mode dynamics exclude xi = 0")
    y0 = _check_state(initial.as_array() if isinstance(initial, ModeState) else initial)
    samples = _sample_grid(t_end, sample_times)
    out = np.empty((samples.size, 3), dtype=complex)
    code, t_reached, acc, _ = _kernel.integrate(
        y0, float(mode.k), float(mode.xi), params.nu, params.mu, params.mach,
        params.delta, samples, rtol, atol, max_steps, out)
    if code != _kernel.OK:
        raise IntegrationError(_FAILURE_REASONS[code], float(mode.k), float(mode.xi), t_reached)
    return Trajectory(mode, params, samples, out, rtol, atol, int(acc))


def integrate_modes(initial: np.ndarray, ks, xis, params: PhysParams, sample_times,
                    rtol: float = DEFAULT_RTOL, atol: float = DEFAULT_ATOL,
                    threads: int = 1, max_steps: int = DEFAULT_MAX_STEPS) -> np.ndarray:
    """Integrate many modes; returns states of shape ``(n_modes, n_samples, 3)``.

    ``sample_times`` must start at 0.  Each mode is integrated independently by
    the same compiled routine, so results do not depend on ``threads``.
    """
    _validate(params, rtol, atol)
    samples = np.asarray(sample_times, dtype=float)
    if samples[0] != 0.0 or np.any(np.diff(samples) <= 0):
        raise ValueError("sample times must start at 0 and increase strictly")
    y0s = np.ascontiguousarray(initial, dtype=complex).reshape(-1, 3)
    ks = np.ascontiguousarray(np.broadcast_to(ks, (y0s.shape[0],)), dtype=float)
    xis = np.ascontiguousarray(np.broadcast_to(xis, (y0s.shape[0],)), dtype=float)
    if np.any((ks == 0) & (xis == 0)):
        raise ValueError("zero-mode dynamics exclude xi = 0")
    n = y0s.shape[0]
    out = np.empty((n, samples.size, 3), dtype=complex)
    status = np.zeros((n, 4))

    def run(sl):
        _kernel.integrate_batch(y0s[sl], ks[sl], xis[sl], params.nu, params.mu, params.mach,
                                params.delta, samples, rtol, atol, max_steps,
                                out[sl], status[sl])

    threads = max(1, int(threads))
    if threads == 1 or n < 2:
        run(slice(0, n))
    else:
        bounds = np.linspace(0, n, min(threads * 4, n) + 1).astype(int)
        with ThreadPoolExecutor(threads) as pool:
            list(pool.map(run, [slice(a, b) for a, b in zip(bounds[:-1], bounds[1:])]))
    bad = np.nonzero(status[:, 0] != _kernel.OK)[0]
    if bad.size:
        j = bad[0]
        raise IntegrationError(_FAILURE_REASONS[int(status[j, 0])], ks[j], xis[j], status[j, 1])
    return out


class QuadratureError(ValueError):
    """The stored samples are too coarse for the requested quadrature accuracy."""

    def __init__(self, required: int, estimate: float):
        super().__init__(f"Simpson quadrature too coarse (error estimate {estimate:.3g}); "
                         f"about {required} samples are required")
        self.required = required


def _cumulative_simpson(f, h):
    """Cumulative composite Simpson integral of uniformly spaced samples.

    Even-indexed points use pure composite Simpson; odd-indexed points add a
    three-point partial-panel rule to the preceding even point.
    """
    n = f.size
    out = np.zeros(n, dtype=f.dtype)
    if n < 3:
        if n == 2:
            out[1] = 0.5 * h * (f[0] + f[1])
        return out
    panels = h / 3.0 * (f[0:-2:2] + 4.0 * f[1:-1:2] + f[2::2])
    out[2::2] = np.cumsum(panels)
    # integral over [x_{2j}, x_{2j+1}] from the quadratic through 2j, 2j+1, 2j+2
    m = (n - 1) // 2
    left = h / 12.0 * (5.0 * f[0:2 * m:2] + 8.0 * f[1:2 * m:2] - f[2:2 * m + 1:2])
    out[1:2 * m:2] = out[0:2 * m - 1:2] + left
    if n % 2 == 0:
        # trailing odd point: quadratic through the last three points
        out[-1] = out[-2] + h / 12.0 * (-f[-3] + 8.0 * f[-2] + 5.0 * f[-1])
    return out


def duhamel_F(traj: Trajectory, tol: float = 1e-7) -> np.ndarray:
    """Recompute F = Pi + Gamma at the sample times from Pi alone.

    F(t) = e^{L(t)} F(0) + nu * int_0^t e^{L(t) - L(tau)} alpha(tau) Pi(tau) d tau,
    with the integral done by composite Simpson on the stored (uniform) grid.
    The quadrature error is estimated by comparing against the same rule on
    every other sample; :class:`QuadratureError` reports the sample count
    needed when the estimate exceeds ``tol`` relative to the state magnitude.
    """
    mode, params = traj.mode, traj.params
    if mode.k == 0:
        raise ZeroModeError("Duhamel representation is for k != 0 modes")
    t = traj.times
    F0 = traj.F[0]
    if params.nu == 0:
        return np.full(t.size, F0, dtype=complex)
    h = t[1] - t[0]
    if not np.allclose(np.diff(t), h, rtol=1e-9, atol=0):
        raise ValueError("Duhamel quadrature needs uniformly spaced samples")
    L = symbol_Lnu(t, mode, params)
    alpha, _ = symbol_alpha(t, mode)
    # e^{L(t)-L(tau)} factorises; shift by the final exponent to avoid overflow.
    shift = L[-1]
    g = np.exp(shift - L) * alpha * traj.Pi
    integral = _cumulative_simpson(g, h)
    F = np.exp(L) * F0 + params.nu * np.exp(L - shift) * integral
    if t.size >= 5:
        coarse = _cumulative_simpson(g[::2], 2 * h)
        fine = F[::2]
        rough = np.exp(L[::2]) * F0 + params.nu * np.exp(L[::2] - shift) * coarse
        # F is real for real data and crosses zero; measure against the state size
        scale = np.maximum(np.max(np.abs(traj.states[::2]), axis=1), np.finfo(float).tiny)
        err = np.max(np.abs(fine - rough) / scale) / 15.0
        if err > tol:
            required = int(math.ceil(t.size * (err / tol) ** 0.25)) + 1
            raise QuadratureError(required, err)
    return F


def oracle_zero_inviscid(species: str, xi: float, mach: float, initial, t) -> np.ndarray:
    """Exact inviscid k = 0 solution; returns states of shape ``t.shape + (3,)``.

    ``(eta, psi)`` is a harmonic oscillator with d eta/dt = -psi and
    d psi/dt = Omega^2 eta, and eta + omega is conserved.
    """
    if xi == 0:
        raise ValueError("zero-mode oracle excludes xi = 0")
    xi2 = xi * xi
    omega2 = xi2 / mach**2
    if species == "ion":
        omega2 += FOUR_PI * xi2 / (xi2 + FOUR_PI * mach**2)
    elif species == "electron":
        omega2 += FOUR_PI
    else:
        raise ValueError(f"unknown species {species!r}")
    freq = math.sqrt(omega2)
    y0 = initial.as_array() if isinstance(initial, ModeState) else np.asarray(initial, complex)
    t = np.asarray(t, dtype=float)
    c, s = np.cos(freq * t), np.sin(freq * t)
    eta = y0[0] * c - y0[1] / freq * s
    psi = y0[1] * c + y0[0] * freq * s
    omega = y0[2] + y0[0] - eta
    return np.stack([eta, psi, omega], axis=-1)


def oscillator_frequency(species: str, xi: float, mach: float) -> float:
    """Inviscid oscillation frequency Omega of the k = 0 line."""
    xi2 = xi * xi
    omega2 = xi2 / mach**2 + (FOUR_PI * xi2 / (xi2 + FOUR_PI * mach**2)
                              if species == "ion" else FOUR_PI)
    return math.sqrt(omega2)
