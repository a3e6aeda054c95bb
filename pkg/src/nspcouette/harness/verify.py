"""Property suites: every violated assertion is reported with a witness."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..dynamics import ModeState, duhamel_F, integrate_mode, oscillator_frequency
from ..energy import (energy_E_delta, energy_E_delta_w, energy_sandwich, weighted_vars,
                      zero_mode_calE, zero_mode_calF, zero_mode_E_l, zero_mode_F_l)
from ..fields import poincare_gap, velocity_norm_squared
from ..symbols import Mode, PhysParams, multiplier_m, multiplier_w, symbol_alpha, w_window
from .config import ScenarioConfig
from .runner import gronwall_check, run_scenario

SUITES = ("multiplier", "coercivity", "conservation", "duhamel", "fields", "dissipation",
          "gronwall")

MAX_WITNESSES = 10


@dataclass
class Check:
    name: str
    evaluated: int = 0
    violations: int = 0
    witnesses: list = field(default_factory=list)

    def record(self, mask, **columns):
        """Count violations in ``mask`` and keep the first few as witnesses."""
        mask = np.asarray(mask, dtype=bool)
        self.evaluated += mask.size
        bad = np.flatnonzero(mask)
        self.violations += bad.size
        for j in bad[:max(0, MAX_WITNESSES - len(self.witnesses))]:
            self.witnesses.append({k: float(np.broadcast_to(v, mask.shape).flat[j])
                                   for k, v in columns.items()})

    @property
    def passed(self) -> bool:
        return self.violations == 0


@dataclass
class VerifyReport:
    suite: str
    checks: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def lines(self) -> list[str]:
        out = []
        for c in self.checks:
            status = "ok" if c.passed else "FAIL"
            out.append(f"[{status}] {self.suite}/{c.name}: {c.violations} violations "
                       f"in {c.evaluated} evaluations")
            for w in c.witnesses:
                out.append("    witness " + " ".join(f"{k}={v:.17g}" for k, v in w.items()))
        out += [f"    note: {n}" for n in self.notes]
        return out


def _round_off(*terms):
    return 1e-12 * sum(np.abs(t) for t in terms) + 1e-300


def random_symbol_samples(n: int, seed: int):
    """t in [0, 10 nu^(-1/3)], k in [-8, 8] minus 0, xi in [-50, 50], nu in {1e-2, 1e-3, 1e-4}."""
    rng = np.random.default_rng(seed)
    nu = rng.choice([1e-2, 1e-3, 1e-4], size=n)
    t = rng.random(n) * 10.0 * nu ** (-1.0 / 3.0)
    k = rng.choice([v for v in range(-8, 9) if v != 0], size=n).astype(float)
    xi = rng.uniform(-50.0, 50.0, size=n)
    return t, k, xi, nu


def suite_multiplier(cfg: ScenarioConfig) -> VerifyReport:
    rep = VerifyReport("multiplier")
    t, k, xi, nu = random_symbol_samples(cfg.verify_samples, cfg.seed)
    mode = Mode(k, xi)
    crucial = Check("nu*alpha + m'/m >= nu^(1/3)")
    b1 = Check("1 <= w <= 1 + beta^2 nu^(-2/3)")
    b2 = Check("w/alpha <= 1/k^2")
    b3 = Check("db(m'/m + nu alpha) + w'/w - alpha'/alpha >= db nu^(1/3)")
    b4 = Check("db(m'/m + nu^(1/3)) + w'/w - alpha'/alpha >= (db/2) nu^(1/3)")
    cont = Check("w continuous across window boundaries")
    mfd = Check("d/dt log m matches m'/m to O(h^2), h = 1e-4")
    for v in np.unique(nu):
        sel = nu == v
        p = PhysParams(delta=1, nu=float(v), beta=cfg.beta, delta_beta=cfg.delta_beta)
        md = Mode(k[sel], xi[sel])
        ts = t[sel]
        a, da = symbol_alpha(ts, md)
        _, dm = multiplier_m(ts, md, p)
        w, dw = multiplier_w(ts, md, p)
        c = v ** (1.0 / 3.0)
        db = p.delta_beta
        cols = dict(t=ts, k=md.k, xi=md.xi, nu=v)
        lhs = v * a + dm
        crucial.record(lhs < c - _round_off(v * a, dm, c), lhs=lhs, **cols)
        top = 1.0 + p.beta**2 * v ** (-2.0 / 3.0)
        b1.record((w < 1.0 - 1e-12) | (w > top * (1 + 1e-12)), w=w, **cols)
        b2.record(w / a > (1.0 / md.k**2) * (1 + 1e-12), w_over_alpha=w / a, **cols)
        g3 = db * (dm + v * a) + dw - da / a
        b3.record(g3 < db * c - _round_off(db * dm, db * v * a, dw, da / a), lhs=g3, **cols)
        g4 = db * (dm + c) + dw - da / a
        b4.record(g4 < 0.5 * db * c - _round_off(db * dm, db * c, dw, da / a), lhs=g4, **cols)
        # continuity: compare w just inside and just outside each window edge
        t_in, t_out = w_window(md, p)
        for edge in (t_in, t_out):
            ok = edge > 1e-6
            e = edge[ok]
            m2 = Mode(md.k[ok], md.xi[ok])
            eps = 1e-9 * np.maximum(1.0, e)
            wl, _ = multiplier_w(e - eps, m2, p)
            wr, _ = multiplier_w(e + eps, m2, p)
            # w' / w <= |alpha'|/alpha bounds the honest change over 2 eps
            a_e, da_e = symbol_alpha(e, m2)
            allowed = 2.0 * eps * np.abs(da_e) / a_e * 1.01 + 1e-10
            jump = np.abs(wr - wl) / wl
            cont.record(jump > allowed, t=e, k=m2.k, xi=m2.xi, nu=v, jump=jump)
        # m consistency on a subset
        sub = slice(0, 2000)
        h = 1e-4
        tm = ts[sub] + h
        mm = Mode(md.k[sub], md.xi[sub])
        lp = np.log(multiplier_m(tm + h, mm, p)[0])
        lm = np.log(multiplier_m(tm - h, mm, p)[0])
        fd = (lp - lm) / (2 * h)
        exact = multiplier_m(tm, mm, p)[1]
        # third derivative of log m is at most 4 nu (= 4 c^3); O(h^2) bound with margin
        mfd.record(np.abs(fd - exact) > 4.0 * c**3 * h * h + 1e-10, t=tm, k=mm.k, xi=mm.xi,
                   nu=v, fd=fd, exact=exact)
    rep.checks += [crucial, b1, b2, b3, b4, cont, mfd]
    return rep


def _random_states(rng, n):
    # independent log-normal magnitudes per component exercise every balance
    # between the terms of a quadratic form
    phase = np.exp(2j * np.pi * rng.random((n, 3)))
    return rng.lognormal(0.0, 3.0, size=(n, 3)) * phase


def suite_coercivity(cfg: ScenarioConfig) -> VerifyReport:
    rep = VerifyReport("coercivity")
    p = cfg.params()
    rng = np.random.default_rng(cfg.seed + 1)
    n = cfg.verify_states
    if p.violations(("weighted",)):
        rep.notes.append("parameters outside the weighted tier: " +
                         "; ".join(p.violations(("weighted",))))
    if p.nu > 0:
        t = rng.random(n) * 10.0 * p.nu ** (-1.0 / 3.0)
        k = rng.choice([v for v in range(-8, 9) if v != 0], size=n).astype(float)
        xi = rng.uniform(-50.0, 50.0, size=n)
        mode = Mode(k, xi)
        y = _random_states(rng, n)
        for variant, fn, name in (("plain", energy_E_delta, "E_delta"),
                                  ("w", energy_E_delta_w, "E_delta_w")):
            zv = weighted_vars(y, t, mode, p, cfg.sobolev_s, variant)
            e = fn(zv, t, mode, p, gamma=cfg.gamma)
            lo, hi = energy_sandwich(zv, t, mode, p)
            chk = Check(f"{name} sandwich")
            tol = 1e-12 * hi
            chk.record((e < lo - tol) | (e > hi + tol), t=t, k=k, xi=xi, energy=e, lower=lo,
                       upper=hi)
            rep.checks.append(chk)
    else:
        rep.notes.append("mode energies skipped: nu = 0 leaves the multiplier undefined")
    # zero-line functionals on single-point grids
    xi = rng.uniform(0.05, 20.0, size=n) * rng.choice([-1.0, 1.0], size=n)
    y = _random_states(rng, n)
    l = cfg.order_l
    if p.delta == 1:
        tier, pair = "zero_ion", (zero_mode_calE, zero_mode_E_l, "E_l")
    else:
        tier, pair = "zero_electron", (zero_mode_calF, zero_mode_F_l, "F_l")
    if p.violations((tier,)):
        rep.notes.append(f"parameters outside the {tier} tier: " +
                         "; ".join(p.violations((tier,))))
    big = np.array([pair[0](y[i:i + 1], xi[i:i + 1], [1.0], l, p) for i in range(n)])
    small = np.array([pair[1](y[i:i + 1], xi[i:i + 1], [1.0], l, p) for i in range(n)])
    chk = Check(f"{pair[2]} sandwich (l={l})")
    tol = 1e-12 * big
    chk.record((small < 0.25 * big - tol) | (small > big + tol), xi=xi, energy=small,
               functional=big)
    rep.checks.append(chk)
    return rep


def suite_conservation(cfg: ScenarioConfig) -> VerifyReport:
    rep = VerifyReport("conservation")
    p = cfg.params()
    if p.nu != 0 or p.lam != 0:
        chk = Check("inviscid parameters")
        chk.record([True], nu=p.nu, lam=p.lam)
        rep.checks.append(chk)
        rep.notes.append("conservation laws hold only for nu = lambda = 0")
        return rep
    rng = np.random.default_rng(cfg.seed + 2)
    tol = 10.0 * cfg.rtol
    t = np.linspace(0.0, 100.0, 1001)
    fchk = Check("F conserved (k != 0)")
    for k, xi in ((1.0, 0.0), (1.0, 3.0), (-2.0, 5.0), (3.0, -4.0)):
        y0 = _random_states(rng, 1)[0]
        tr = integrate_mode(y0, Mode(k, xi), p, 100.0, cfg.rtol, cfg.atol, t)
        drift = np.abs(tr.F - tr.F[0]) / abs(tr.F[0])
        fchk.record(drift > tol, t=t, k=k, xi=xi, drift=drift)
    # Runge-Kutta steps keep linear invariants exactly but let quadratic ones
    # drift by a fixed multiple of rtol per period, so the bar grows per period
    echk = Check("oscillator energy conserved (k = 0, 10 rtol per period)")
    schk = Check("eta + omega conserved (k = 0)")
    for xi in (0.5, 1.0, 3.0):
        y0 = np.array([1.0, 0.3, 0.2], dtype=complex)
        tr = integrate_mode(y0, Mode(0, xi), p, 100.0, cfg.rtol, cfg.atol, t)
        om2 = oscillator_frequency(p.species, xi, p.mach) ** 2
        energy = np.abs(tr.Psi) ** 2 + om2 * np.abs(tr.Pi) ** 2
        drift = np.abs(energy - energy[0]) / energy[0]
        periods = np.maximum(1.0, t * math.sqrt(om2) / (2.0 * math.pi))
        echk.record(drift > tol * periods, t=t, xi=xi, drift=drift)
        s = tr.Pi + tr.Gamma
        sd = np.abs(s - s[0]) / abs(s[0])
        schk.record(sd > tol, t=t, xi=xi, drift=sd)
    rep.checks += [fchk, echk, schk]
    return rep


def duhamel_comparison(params: PhysParams, k: float, xi: float, t_end: float,
                       rtol: float, atol: float, samples: int = 8001):
    """Gap between the Duhamel reconstruction and the integrated F, relative to |state|."""
    t = np.linspace(0.0, t_end, samples)
    tr = integrate_mode(ModeState(1.0, 0.0, 0.5), Mode(k, xi), params, t_end, rtol, atol, t)
    dF = duhamel_F(tr)
    return t, np.abs(dF - tr.F) / np.max(np.abs(tr.states), axis=1)


def suite_duhamel(cfg: ScenarioConfig) -> VerifyReport:
    rep = VerifyReport("duhamel")
    p = cfg.params()
    tol = max(1e-6, 100.0 * cfg.rtol)
    chk = Check(f"Duhamel F agrees with integrated F (rel <= {tol:g})")
    for xi in (0.0, 2.0, -2.0):
        t, rel = duhamel_comparison(p, 1.0, xi, 20.0, min(cfg.rtol, 1e-11), 1e-300)
        chk.record(rel > tol, t=t, k=1.0, xi=xi, rel=rel)
    rep.checks.append(chk)
    return rep


def suite_fields(cfg: ScenarioConfig, threads: int = 1) -> VerifyReport:
    rep = VerifyReport("fields")
    res = run_scenario(cfg.with_updates(outputs=()), threads=threads)
    pchk = Check("Poincare: ||eta|| <= ||grad eta||")
    hchk = Check("Hermitian symmetry preserved (<= 10 rtol)")
    vchk = Check("Parseval: |Q|^2 + |P|^2 matches direct quadrature (1e-12)")
    zero = res.ensemble.zero_row()
    for i, t in enumerate(res.times):
        ens = res.ensemble_at(i)
        scale = float(np.max(np.abs(ens.states), initial=0.0))
        asym = ens.hermitian_asymmetry()
        hchk.record([asym > 10.0 * cfg.rtol * max(scale, 1e-300) + 1e-300], t=t, asym=asym)
        if zero is None or not np.any(ens.states[zero] != 0):
            gap = poincare_gap(ens)
            pchk.record([gap < -1e-12 * scale], t=t, gap=gap)
            a, b = velocity_norm_squared(ens)
            vchk.record([abs(a - b) > 1e-12 * max(abs(b), 1e-300)], t=t, lhs=a, rhs=b)
    rep.checks += [pchk, hchk, vchk]
    return rep


def suite_dissipation(cfg: ScenarioConfig, threads: int = 1) -> VerifyReport:
    """Zero-line energies must not increase along the run."""
    rep = VerifyReport("dissipation")
    p = cfg.params()
    tier = "zero_ion" if p.delta == 1 else "zero_electron"
    if p.violations((tier,)):
        rep.notes.append(f"parameters outside the {tier} tier")
    sel = "E_l" if p.delta == 1 else "F_l"
    res = run_scenario(cfg.with_updates(outputs=(sel,)), threads=threads)
    e = res.energies[sel].aggregate
    chk = Check(f"{sel} non-increasing")
    chk.record(e[1:] > e[:-1] * (1 + 1e-8), t=res.times[1:], before=e[:-1], after=e[1:])
    rep.checks.append(chk)
    return rep


def suite_gronwall(cfg: ScenarioConfig, threads: int = 1) -> VerifyReport:
    rep = VerifyReport("gronwall")
    res = run_scenario(cfg.with_updates(outputs=()), threads=threads, stencil=True)
    g = gronwall_check(res)
    chk = Check("premise holds at >= 99% of resolved points with a stable constant")
    chk.evaluated = g.points
    chk.violations = 0 if g.passed else max(1, int(round((1 - g.fraction) * g.points)))
    chk.witnesses = g.violations[:MAX_WITNESSES]
    rep.checks.append(chk)
    rep.notes.append(f"C={g.constant:.6g} holdout C={g.constant_holdout:.6g} "
                     f"satisfied={g.fraction:.6f} unresolved={g.unresolved}")
    return rep


def verify_suite(cfg: ScenarioConfig, suite: str, threads: int = 1) -> list[VerifyReport]:
    names = SUITES if suite == "all" else (suite,)
    out = []
    for name in names:
        if name not in SUITES:
            raise ValueError(f"unknown suite {name!r}; expected one of {SUITES} or all")
        fn = globals()[f"suite_{name}"]
        out.append(fn(cfg, threads) if name in ("fields", "dissipation", "gronwall")
                   else fn(cfg))
    return out

