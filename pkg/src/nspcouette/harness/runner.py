"""Scenario orchestration: integrate an ensemble, evaluate functionals, fit, export."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..dynamics import integrate_modes
from ..energy import (EnergyReport, aggregate_modes, energy_E_delta, energy_E_delta_w,
                      initial_constant_C_in, weighted_vars, zero_mode_calE, zero_mode_calF,
                      zero_mode_E_l, zero_mode_F_l)
from ..fields import SpectralEnsemble, make_initial_ensemble, observables
from ..symbols import Mode, PhysParams, multiplier_m, symbol_alpha
from .config import ENERGY_SELECTORS, ConfigError, ScenarioConfig, config_metadata
from .fitting import FitResult, fit_decay, loglog_slope

NONZERO_OBSERVABLES = ("q_norm", "px_norm", "py_norm", "eta_norm_over_M", "psi_norm",
                       "grad_eta_norm_over_M", "omega_norm")
ZERO_OBSERVABLES = {"zero_eta_norm": 0, "zero_psi_norm": 1, "zero_omega_norm": 2}
ZERO_ENERGIES = {"calE_l": (zero_mode_calE, 1), "E_l": (zero_mode_E_l, 1),
                 "calF_l": (zero_mode_calF, 0), "F_l": (zero_mode_F_l, 0)}


@dataclass
class Stencil:
    """States at ``t -/+ h`` around the interior sample times."""

    h: float
    index: np.ndarray
    minus: np.ndarray
    plus: np.ndarray


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    params: PhysParams
    ensemble: SpectralEnsemble
    times: np.ndarray
    states: np.ndarray                      # (n_k, n_xi, n_t, 3)
    energies: dict = field(default_factory=dict)
    observables: dict = field(default_factory=dict)
    stencil: Stencil | None = None

    def ensemble_at(self, i: int) -> SpectralEnsemble:
        return self.ensemble.with_states(self.states[:, :, i], float(self.times[i]))

    def nonzero_mode_grid(self, rows=None) -> tuple[np.ndarray, Mode]:
        rows = self.ensemble.nonzero_rows() if rows is None else rows
        k = self.ensemble.k[rows].astype(float)[:, None, None]
        return rows, Mode(k, self.ensemble.xi[None, :, None])


def _check_outputs(cfg: ScenarioConfig, ens: SpectralEnsemble):
    zero = ens.zero_row()
    zero_has_data = zero is not None and np.any(ens.states[zero] != 0)
    for sel in cfg.outputs:
        if sel in NONZERO_OBSERVABLES and zero_has_data:
            raise ConfigError(f"{sel} is a nonzero-mode observable but the k = 0 line "
                              "carries data")
        if sel in ZERO_ENERGIES or sel in ZERO_OBSERVABLES:
            if zero is None:
                raise ConfigError(f"{sel} needs k = 0 in grid.k_set")
            if sel in ZERO_ENERGIES and ZERO_ENERGIES[sel][1] != (1 if cfg.species == "ion"
                                                                  else 0):
                raise ConfigError(f"{sel} does not match species {cfg.species}")
        if sel in ("E_delta", "E_delta_w") and cfg.nu <= 0:
            raise ConfigError(f"{sel} needs nu > 0 (the multiplier m is undefined at nu = 0)")


def sample_times(cfg: ScenarioConfig) -> np.ndarray:
    return np.linspace(0.0, cfg.t_final(), cfg.sample_count)


def run_scenario(cfg: ScenarioConfig, out_dir=None, threads: int = 1,
                 stencil: bool = False) -> ScenarioResult:
    """Integrate every mode of the configured ensemble and evaluate the outputs.

    With ``stencil`` the states at ``t -/+ h``, h = min(1e-3, dt/10), are also
    recorded at the interior sample times for finite-difference checks.
    """
    params = cfg.params()
    ens = make_initial_ensemble(cfg.initial, cfg.grid)
    _check_outputs(cfg, ens)
    times = sample_times(cfg)
    grid_t = times
    h = None
    if stencil:
        h = min(1e-3, (times[1] - times[0]) / 10.0)
        inner = times[1:-1]
        grid_t = np.sort(np.concatenate([times, inner - h, inner + h]))
    nk, nx = ens.k.size, ens.xi.size
    ks = np.repeat(ens.k.astype(float), nx)
    xis = np.tile(ens.xi, nk)
    y0 = ens.states.reshape(-1, 3)
    raw = integrate_modes(y0, ks, xis, params, grid_t, cfg.rtol, cfg.atol, threads=threads)
    raw = raw.reshape(nk, nx, grid_t.size, 3)
    res = ScenarioResult(cfg, params, ens, times, raw)
    if stencil:
        pos = np.searchsorted(grid_t, times)
        res.states = raw[:, :, pos]
        res.stencil = Stencil(h, np.arange(1, times.size - 1), raw[:, :, pos[1:-1] - 1],
                              raw[:, :, pos[1:-1] + 1])
    _evaluate(res)
    if out_dir is not None:
        write_reports(res, out_dir)
    return res


def _window(cfg: ScenarioConfig):
    unit = cfg.time_unit if cfg.t_end_units == "nu13" else 1.0
    return cfg.fit_start * unit, min(cfg.t_final(), cfg.fit_stop * unit)


def fit_series(cfg: ScenarioConfig, times, series) -> FitResult | None:
    """Fit ``series`` with the configured model, or None when the window is unusable."""
    t0, t1 = _window(cfg)
    n = int(np.count_nonzero((times >= t0) & (times <= t1)))
    if n < 10:
        return None
    if cfg.fit_model != "algebraic" and cfg.nu > 0 and t1 - t0 < 5.0 * cfg.time_unit - 1e-9:
        return None
    try:
        return fit_decay(times, series, (t0, t1), cfg.fit_model, order=cfg.order_l)
    except ValueError:
        return None


def mode_energies(res: ScenarioResult, variant: str, states=None, times=None):
    """Per-mode E_delta (variant ``plain``) or E^w_delta (``w``), shape (n_k', n_xi, n_t)."""
    rows, mode = res.nonzero_mode_grid()
    st = res.states[rows] if states is None else states
    t = (res.times if times is None else times)[None, None, :]
    p, s = res.params, res.config.sobolev_s
    zv = weighted_vars(st, t, mode, p, s, variant)
    gamma = res.config.gamma
    fn = energy_E_delta if variant == "plain" else energy_E_delta_w
    return fn(zv, t, mode, p, gamma=gamma)


def _evaluate(res: ScenarioResult):
    cfg, p, ens = res.config, res.params, res.ensemble
    times = res.times
    for sel in cfg.outputs:
        if sel in ("E_delta", "E_delta_w"):
            per = mode_energies(res, "plain" if sel == "E_delta" else "w")
            agg = aggregate_modes(per, ens.weights)
        elif sel in ZERO_ENERGIES:
            fn = ZERO_ENERGIES[sel][0]
            z = ens.zero_row()
            per = None
            agg = np.array([fn(res.states[z, :, i], ens.xi, ens.weights, cfg.order_l, p)
                            for i in range(times.size)])
        else:
            continue
        fit = fit_series(cfg, times, agg)
        res.energies[sel] = EnergyReport(sel, times, per, agg,
                                         None if fit is None else fit.rate,
                                         None if fit is None else fit.prefactor, fit)
    wanted = [s for s in cfg.outputs if s in NONZERO_OBSERVABLES]
    if wanted:
        series = {s: np.empty(times.size) for s in wanted}
        for i in range(times.size):
            obs = observables(res.ensemble_at(i), p)
            for s in wanted:
                series[s][i] = getattr(obs, s)
        res.observables.update(series)
    z = ens.zero_row()
    for sel in cfg.outputs:
        if sel in ZERO_OBSERVABLES:
            comp = res.states[z, :, :, ZERO_OBSERVABLES[sel]]
            res.observables[sel] = np.sqrt(np.sum(np.abs(comp) ** 2 * ens.weights[:, None],
                                                  axis=0))


# CSV ---------------------------------------------------------------------------

def format_value(v: float) -> str:
    return "nan" if not math.isfinite(v) else f"{v:.16e}"


def write_csv(path, columns, rows, metadata=()):
    lines = [f"# {k}={v}" for k, v in metadata]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(format_value(float(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def write_reports(res: ScenarioResult, out_dir) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    meta = config_metadata(res.config)
    written = []
    e_cols = [s for s in res.config.outputs if s in ENERGY_SELECTORS]
    o_cols = [s for s in res.config.outputs if s not in ENERGY_SELECTORS]
    if e_cols:
        fits = []
        for s in e_cols:
            fr = res.energies[s].fit
            fits.append((f"fit.{s}", "none" if fr is None else
                         f"model={fr.model} rate={fr.rate!r} prefactor={fr.prefactor!r} "
                         f"window={fr.window[0]!r}:{fr.window[1]!r} residual={fr.residual!r}"))
        data = np.column_stack([res.times] + [res.energies[s].aggregate for s in e_cols])
        write_csv(out / "energy.csv", ["t"] + e_cols, data, meta + fits)
        written.append(out / "energy.csv")
    if o_cols:
        data = np.column_stack([res.times] + [res.observables[s] for s in o_cols])
        write_csv(out / "observables.csv", ["t"] + o_cols, data, meta)
        written.append(out / "observables.csv")
    return written


# Sweeps ------------------------------------------------------------------------

SWEEP_OUTPUTS = ("q_norm", "eta_norm_over_M", "psi_norm", "grad_eta_norm_over_M", "omega_norm")


@dataclass(frozen=True)
class SweepRow:
    nu: float
    amplification: float
    envelope_amplification: float
    decay_rate: float
    prefactor: float
    fit_residual: float


@dataclass
class SweepResult:
    rows: list
    slope: float
    envelope_slope: float


def sweep_summary(nus, amplification, envelope) -> tuple[float, float]:
    """Log-log slopes of the two amplification measures against nu."""
    return loglog_slope(nus, amplification), loglog_slope(nus, envelope)


def sweep_nu(base: ScenarioConfig, nu_list, out_dir=None, threads: int = 1) -> SweepResult:
    """Transient amplification and tail decay across viscosities.

    amplification = max_t (||Q[u]|| + ||eta||/M) / C_in;
    envelope_amplification = max_t e^{nu^(1/3) t / 32} (||psi|| + ||grad eta||/M + ||omega||)
    divided by its value at t = 0.
    """
    rows = []
    for nu in nu_list:
        cfg = base.with_updates(nu=float(nu), outputs=SWEEP_OUTPUTS)
        res = run_scenario(cfg, threads=threads)
        obs = res.observables
        cin = initial_constant_C_in(res.ensemble, cfg.cin_s, res.params)
        transient = obs["q_norm"] + obs["eta_norm_over_M"]
        triple = obs["psi_norm"] + obs["grad_eta_norm_over_M"] + obs["omega_norm"]
        weighted = np.exp(nu ** (1.0 / 3.0) * res.times / 32.0) * triple
        fit = fit_series(cfg.with_updates(fit_model="exp_sqrt_growth"), res.times, transient)
        rows.append(SweepRow(
            float(nu), float(np.max(transient) / cin), float(np.max(weighted) / triple[0]),
            math.nan if fit is None else fit.rate, math.nan if fit is None else fit.prefactor,
            math.nan if fit is None else fit.residual))
    slope, env_slope = sweep_summary([r.nu for r in rows], [r.amplification for r in rows],
                                     [r.envelope_amplification for r in rows]) \
        if len(rows) >= 2 else (math.nan, math.nan)
    result = SweepResult(rows, slope, env_slope)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        cols = ["nu", "amplification", "envelope_amplification", "decay_rate", "prefactor",
                "fit_residual"]
        data = [[getattr(r, c) for c in cols] for r in rows]
        meta = config_metadata(base) + [("slope.amplification", repr(slope)),
                                        ("slope.envelope_amplification", repr(env_slope))]
        write_csv(out / "sweep.csv", cols, data, meta)
    return result


# Finite-difference premise check -------------------------------------------------

@dataclass
class GronwallReport:
    """Outcome of checking dE^w/dt <= (-nu^(1/3)/16 + 4C(1+M^6)k^2/alpha + 2(M+1)m'/m) E^w."""

    constant: float
    constant_holdout: float
    stable: bool
    fraction: float
    points: int
    unresolved: int
    violations: list

    @property
    def passed(self) -> bool:
        return self.stable and self.fraction >= 0.99


def gronwall_check(res: ScenarioResult, max_witnesses: int = 20) -> GronwallReport:
    """Fit C on half of the modes and test the premise at every resolved point.

    Modes are ordered by (k, xi); even positions fit C (the smallest constant
    making the premise hold there), odd positions provide a hold-out constant
    for the stability comparison.  Samples whose state magnitude is below
    atol/rtol are outside relative error control and are counted as unresolved.
    """
    if res.stencil is None:
        raise ValueError("scenario was run without the finite-difference stencil")
    cfg, p = res.config, res.params
    st = res.stencil
    rows, mode = res.nonzero_mode_grid()
    idx = st.index
    t = res.times[idx]
    centre = res.states[rows][:, :, idx]
    scale = np.max(np.abs(centre), axis=-1)
    resolved = cfg.rtol * scale > cfg.atol
    safe = np.where(scale > 0, scale, 1.0)[..., None]
    # energies are quadratic, so normalising all three stencil states by the
    # centre magnitude leaves dE/E unchanged and avoids underflow
    e_mid = mode_energies(res, "w", centre / safe, t)
    e_lo = mode_energies(res, "w", st.minus[rows] / safe, t - st.h)
    e_hi = mode_energies(res, "w", st.plus[rows] / safe, t + st.h)
    growth = (e_hi - e_lo) / (2.0 * st.h) / e_mid
    alpha, _ = symbol_alpha(t[None, None, :], mode)
    _, dm = multiplier_m(t[None, None, :], mode, p)
    M = p.mach
    excess = growth + p.nu ** (1.0 / 3.0) / 16.0 - 2.0 * (M + 1.0) * dm
    coef = 4.0 * (1.0 + M**6) * np.asarray(mode.k) ** 2 / alpha
    need = np.where(resolved, excess / coef, -np.inf)
    flat = need.reshape(-1, need.shape[-1])
    c_fit = max(0.0, float(np.max(flat[0::2])))
    c_hold = max(0.0, float(np.max(flat[1::2]))) if flat.shape[0] > 1 else c_fit
    hi, lo = max(c_fit, c_hold), min(c_fit, c_hold)
    stable = hi == 0.0 or (lo > 0 and hi / lo <= 2.0)
    n_res = int(np.count_nonzero(resolved))
    bad = resolved & (need > c_fit * (1.0 + 1e-12) + 1e-15)
    fraction = 1.0 - np.count_nonzero(bad) / max(n_res, 1)
    witnesses = []
    ks = np.broadcast_to(np.asarray(mode.k), need.shape)
    xs = np.broadcast_to(np.asarray(mode.xi), need.shape)
    ts = np.broadcast_to(t[None, None, :], need.shape)
    for j in np.argsort(-np.where(bad, need, -np.inf), axis=None)[:max_witnesses]:
        if not bad.flat[j]:
            break
        witnesses.append({"k": float(ks.flat[j]), "xi": float(xs.flat[j]),
                          "t": float(ts.flat[j]),
                          "excess": float((need.flat[j] - c_fit) * coef.flat[j])})
    return GronwallReport(c_fit, c_hold, bool(stable), float(fraction), n_res,
                          int(resolved.size - n_res), witnesses)
