"""Least-squares decay fits in log coordinates."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares


@dataclass(frozen=True)
class FitResult:
    """Fitted decay law on ``window``.

    For exponential models ``rate`` is the exponential rate; for the algebraic
    model it is the fitted ``c`` of (1 + c t)^(-l).  ``residual`` is the RMS
    of the log-coordinate misfit.
    """

    rate: float
    prefactor: float
    window: tuple
    residual: float
    model: str
    samples: int


# log of the algebraic time prefactor for each exponential model
_TIME_FACTOR = {
    "exp": lambda t: np.zeros_like(t),
    "exp_sqrt_growth": lambda t: 0.25 * np.log1p(t * t),    # <t>^(1/2)
    "exp_sqrt_decay": lambda t: -0.25 * np.log1p(t * t),    # <t>^(-1/2)
}


def fit_decay(times, values, window=None, model: str = "exp", order: float = 1.0) -> FitResult:
    """Fit ``values(times)`` on ``window = (t0, t1)`` by least squares in log space.

    Raises ValueError when a sample in the window is non-positive or fewer
    than three samples fall inside it.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    t0, t1 = (t[0], t[-1]) if window is None else window
    sel = (t >= t0) & (t <= t1)
    ts, ys = t[sel], y[sel]
    if ts.size < 3:
        raise ValueError("fewer than three samples in the fit window")
    if np.any(~(ys > 0)):
        raise ValueError("non-positive samples in the fit window")
    ly = np.log(ys)
    if model in _TIME_FACTOR:
        target = ly - _TIME_FACTOR[model](ts)
        design = np.column_stack([np.ones_like(ts), -ts])
        coef, *_ = np.linalg.lstsq(design, target, rcond=None)
        resid = design @ coef - target
        return FitResult(float(coef[1]), math.exp(coef[0]), (float(t0), float(t1)),
                         float(np.sqrt(np.mean(resid**2))), model, int(ts.size))
    if model == "algebraic":
        return _fit_algebraic(ts, ly, order, (float(t0), float(t1)))
    raise ValueError(f"unknown decay model {model!r}")


def _fit_algebraic(ts, ly, order, window):
    # log y = log A - l log(1 + c t); for fixed c, log A is a mean.
    def resid(p):
        g = -order * np.log1p(math.exp(p[0]) * ts)
        return g - ly + np.mean(ly - g)

    span = max(ts[-1] - ts[0], 1e-300)
    starts = [math.log(v / span) for v in (1e-3, 1e-1, 1e1, 1e3)]
    best = min((least_squares(resid, [s], xtol=1e-15, ftol=1e-15, gtol=1e-15)
                for s in starts), key=lambda r: r.cost)
    c = math.exp(best.x[0])
    g = -order * np.log1p(c * ts)
    loga = float(np.mean(ly - g))
    return FitResult(c, math.exp(loga), window, float(np.sqrt(np.mean(best.fun**2))),
                     "algebraic", int(ts.size))


def loglog_slope(xs, ys) -> float:
    """Least-squares slope of log y against log x."""
    lx, ly = np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float))
    return float(np.polyfit(lx, ly, 1)[0])
