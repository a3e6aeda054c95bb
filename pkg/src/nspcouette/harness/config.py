"""Scenario configuration: flat ``key=value`` text with dotted keys.

Blank lines and ``#`` comments are ignored; unknown keys are errors.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from ..fields import GeneratorSpec, GridSpec
from ..symbols import TIERS, PhysParams


class ConfigError(ValueError):
    """Invalid configuration (CLI exit status 1)."""


ENERGY_SELECTORS = ("E_delta", "E_delta_w", "calE_l", "E_l", "calF_l", "F_l")
OBSERVABLE_SELECTORS = ("q_norm", "px_norm", "py_norm", "eta_norm_over_M", "psi_norm",
                        "grad_eta_norm_over_M", "omega_norm",
                        "zero_eta_norm", "zero_psi_norm", "zero_omega_norm")
FIT_MODELS = ("exp", "exp_sqrt_growth", "exp_sqrt_decay", "algebraic")


def _bool(text: str) -> bool:
    v = text.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _list(text: str) -> tuple:
    v = text.strip()
    if v in ("", "none"):
        return ()
    return tuple(p.strip() for p in v.split(",") if p.strip())


def _kset(text: str) -> tuple:
    """``-4..4`` or a comma list of integers."""
    v = text.strip()
    if ".." in v:
        lo, hi = (int(p) for p in v.split(".."))
        return tuple(range(lo, hi + 1))
    return tuple(int(p) for p in _list(v))


@dataclass
class ScenarioConfig:
    species: str = "ion"
    nu: float = 1e-3
    lam: float = 0.0
    mach: float = 1.0
    beta: float = 50.0
    delta_beta: float = 1.0 / 12.0
    gamma: float | None = None
    regime_checks: tuple = ("weighted",)
    grid: GridSpec = field(default_factory=GridSpec)
    initial: GeneratorSpec = field(default_factory=GeneratorSpec)
    t_end: float = 12.0
    t_end_units: str = "nu13"
    sample_count: int = 241
    rtol: float = 1e-9
    atol: float = 1e-12
    outputs: tuple = ("E_delta_w", "q_norm", "eta_norm_over_M")
    sobolev_s: float = 0.0
    order_l: int = 1
    cin_s: float = 0.5
    fit_model: str = "exp"
    fit_start: float = 2.0
    fit_stop: float = 12.0
    seed: int = 0
    verify_samples: int = 100_000
    verify_states: int = 10_000

    def __post_init__(self):
        self.validate()

    # -- derived -------------------------------------------------------------
    def params(self) -> PhysParams:
        return PhysParams(delta=1 if self.species == "ion" else 0, nu=self.nu, lam=self.lam,
                          mach=self.mach, beta=self.beta, delta_beta=self.delta_beta)

    @property
    def time_unit(self) -> float:
        """nu^(-1/3), the enhanced-dissipation time scale."""
        return self.nu ** (-1.0 / 3.0) if self.nu > 0 else 1.0

    def t_final(self) -> float:
        return self.t_end * (self.time_unit if self.t_end_units == "nu13" else 1.0)

    def with_updates(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    def validate(self) -> None:
        if self.species not in ("ion", "electron"):
            raise ConfigError(f"species must be ion or electron, got {self.species!r}")
        try:
            p = self.params()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        for tier in self.regime_checks:
            if tier not in TIERS:
                raise ConfigError(f"unknown regime check {tier!r}; expected one of {TIERS}")
        bad = p.violations(self.regime_checks)
        if bad:
            raise ConfigError("parameter regime violated: " + "; ".join(bad))
        if self.t_end_units not in ("absolute", "nu13"):
            raise ConfigError("time.t_end_units must be absolute or nu13")
        if not self.t_end > 0 or self.sample_count < 2:
            raise ConfigError("need t_end > 0 and at least 2 samples")
        if not (self.rtol > 0 and self.atol > 0):
            raise ConfigError("tolerances must be positive")
        for sel in self.outputs:
            if sel not in ENERGY_SELECTORS + OBSERVABLE_SELECTORS:
                raise ConfigError(f"unknown output selector {sel!r}")
        if self.fit_model not in FIT_MODELS:
            raise ConfigError(f"unknown fit model {self.fit_model!r}")
        try:
            xi = self.grid.xi_nodes()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if (xi == 0).any():
            raise ConfigError("xi grid must exclude 0")
        if not self.grid.k_set:
            raise ConfigError("grid.k_set is empty")


# key -> (attribute, parser); grid.* and initial.* route into the nested specs
_TOP = {
    "species": ("species", str.strip),
    "nu": ("nu", float),
    "lambda": ("lam", float),
    "mach": ("mach", float),
    "multiplier.beta": ("beta", float),
    "multiplier.delta_beta": ("delta_beta", float),
    "multiplier.gamma": ("gamma", float),
    "regime_checks": ("regime_checks", _list),
    "time.t_end": ("t_end", float),
    "time.t_end_units": ("t_end_units", str.strip),
    "time.samples": ("sample_count", int),
    "tol.rtol": ("rtol", float),
    "tol.atol": ("atol", float),
    "outputs": ("outputs", _list),
    "energy.s": ("sobolev_s", float),
    "energy.l": ("order_l", int),
    "cin.s": ("cin_s", float),
    "fit.model": ("fit_model", str.strip),
    "fit.start": ("fit_start", float),
    "fit.stop": ("fit_stop", float),
    "seed": ("seed", int),
    "verify.samples": ("verify_samples", int),
    "verify.states": ("verify_states", int),
}
_GRID = {"grid.xi_max": ("xi_max", float), "grid.xi_step": ("xi_step", float),
         "grid.k_set": ("k_set", _kset)}
_INITIAL = {f"initial.{name}": (name, conv) for name, conv in (
    ("amplitude", float), ("sigma", float), ("eta", float), ("psi", float),
    ("omega", float), ("k_decay", float), ("xi_min", float), ("zero_line", _bool),
    ("nonzero_lines", _bool), ("random_phase", _bool), ("seed", int))}

KNOWN_KEYS = tuple(_TOP) + tuple(_GRID) + tuple(_INITIAL)


def parse_config_text(text: str, base: ScenarioConfig | None = None) -> ScenarioConfig:
    """Parse config text, applying it on top of ``base`` (defaults if None)."""
    top, grid, init = {}, {}, {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value")
        key, value = (p.strip() for p in line.split("=", 1))
        try:
            if key in _TOP:
                attr, conv = _TOP[key]
                top[attr] = conv(value)
            elif key in _GRID:
                attr, conv = _GRID[key]
                grid[attr] = conv(value)
            elif key in _INITIAL:
                attr, conv = _INITIAL[key]
                init[attr] = conv(value)
            else:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from exc
    base = base or ScenarioConfig()
    try:
        return dataclasses.replace(
            base,
            grid=dataclasses.replace(base.grid, **grid),
            initial=dataclasses.replace(base.initial, **init),
            **top)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


def load_config(path) -> ScenarioConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    return parse_config_text(text)


def config_metadata(cfg: ScenarioConfig) -> list[tuple[str, str]]:
    """Ordered ``(key, value)`` pairs describing the scenario, for CSV headers."""
    g, ini = cfg.grid, cfg.initial
    items = [("species", cfg.species), ("nu", repr(cfg.nu)), ("lambda", repr(cfg.lam)),
             ("mach", repr(cfg.mach)), ("multiplier.beta", repr(cfg.beta)),
             ("multiplier.delta_beta", repr(cfg.delta_beta)),
             ("grid.xi_max", repr(g.xi_max)), ("grid.xi_step", repr(g.xi_step)),
             ("grid.k_set", ",".join(str(k) for k in g.k_set)),
             ("initial.profile", "gaussian")]
    items += [(f"initial.{f.name}", repr(getattr(ini, f.name)))
              for f in dataclasses.fields(ini)]
    items += [("time.t_end", repr(cfg.t_end)), ("time.t_end_units", cfg.t_end_units),
              ("time.samples", str(cfg.sample_count)), ("tol.rtol", repr(cfg.rtol)),
              ("tol.atol", repr(cfg.atol)), ("energy.s", repr(cfg.sobolev_s)),
              ("energy.l", str(cfg.order_l)), ("seed", str(cfg.seed))]
    return items
