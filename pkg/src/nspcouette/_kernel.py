"""Compiled Dormand-Prince 5(4) integrator for the per-mode linear systems.

A single right-hand side covers every case: with k = 0 the unified system
reduces exactly to the zero-mode systems, and ``delta = 0`` replaces the
screened Poisson coupling by the constant 4 pi.
"""
import math

import numba as nb
import numpy as np

OK = 0
STEP_UNDERFLOW = 1
MAX_STEPS = 2
NON_FINITE = 3

# Dormand-Prince tableau.
C2, C3, C4, C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0
A21 = 1.0 / 5.0
A31, A32 = 3.0 / 40.0, 9.0 / 40.0
A41, A42, A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
A51, A52, A53, A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
A61, A62, A63, A64, A65 = (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0,
                           49.0 / 176.0, -5103.0 / 18656.0)
A71, A73, A74, A75, A76 = (35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0,
                           -2187.0 / 6784.0, 11.0 / 84.0)
E1, E3, E4, E5, E6, E7 = (71.0 / 57600.0, -71.0 / 16695.0, 71.0 / 1920.0,
                          -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0)
# Continuous extension (4th order dense output).
D1, D3, D4, D5, D6, D7 = (-12715105075.0 / 11282082432.0, 87487479700.0 / 32700410799.0,
                          -10690763975.0 / 1880347072.0, 701980252875.0 / 199316789632.0,
                          -1453857185.0 / 822651844.0, 69997945.0 / 29380423.0)

FOUR_PI = 4.0 * math.pi


@nb.njit(cache=True, nogil=True)
def rhs(t, y, k, xi, nu, mu, mach, delta, out):
    d = xi - k * t
    a = k * k + d * d
    da = -2.0 * k * d
    if delta == 0:
        poisson = FOUR_PI
    else:
        poisson = FOUR_PI * a / (a + FOUR_PI * mach * mach)
    pi_, psi, gam = y[0], y[1], y[2]
    out[0] = -psi
    out[1] = (da / a - mu * a) * psi + (a / (mach * mach) + poisson) * pi_ - (2.0 * k * k / a) * gam
    out[2] = psi - nu * a * gam


@nb.njit(cache=True, nogil=True)
def _norm(y):
    r = 0.0
    for i in range(3):
        v = abs(y[i])
        if v > r:
            r = v
    return r


@nb.njit(cache=True, nogil=True)
def integrate(y0, k, xi, nu, mu, mach, delta, samples, rtol, atol, max_steps, out):
    """Integrate from t = 0 and write the state at each (sorted) sample time.

    Returns ``(status, t_reached, accepted, rejected)``.
    """
    n = samples.shape[0]
    y = y0.copy()
    ynew = np.empty(3, np.complex128)
    ytmp = np.empty(3, np.complex128)
    k1 = np.empty(3, np.complex128)
    k2 = np.empty(3, np.complex128)
    k3 = np.empty(3, np.complex128)
    k4 = np.empty(3, np.complex128)
    k5 = np.empty(3, np.complex128)
    k6 = np.empty(3, np.complex128)
    k7 = np.empty(3, np.complex128)
    r1 = np.empty(3, np.complex128)
    r2 = np.empty(3, np.complex128)
    r3 = np.empty(3, np.complex128)
    r4 = np.empty(3, np.complex128)
    r5 = np.empty(3, np.complex128)

    idx = 0
    t = 0.0
    while idx < n and samples[idx] <= 0.0:
        for i in range(3):
            out[idx, i] = y[i]
        idx += 1
    if idx == n:
        return OK, 0.0, 0, 0
    t_end = samples[n - 1]

    if _norm(y) == 0.0:
        for j in range(idx, n):
            for i in range(3):
                out[j, i] = 0.0
        return OK, t_end, 0, 0

    rhs(t, y, k, xi, nu, mu, mach, delta, k1)
    d0 = _norm(y)
    d1 = _norm(k1)
    h = 1e-6
    if d1 > 0.0:
        h = 0.01 * d0 / d1
    if h > t_end:
        h = t_end

    expo1 = 0.2 - 0.04 * 0.75
    fac_old = 1e-4
    accepted = 0
    rejected = 0
    reject_prev = False
    while True:
        if accepted + rejected >= max_steps:
            return MAX_STEPS, t, accepted, rejected
        if h < 1e-14 * max(1.0, abs(t)):
            return STEP_UNDERFLOW, t, accepted, rejected
        if t + h > t_end:
            h = t_end - t
        for i in range(3):
            ytmp[i] = y[i] + h * A21 * k1[i]
        rhs(t + C2 * h, ytmp, k, xi, nu, mu, mach, delta, k2)
        for i in range(3):
            ytmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i])
        rhs(t + C3 * h, ytmp, k, xi, nu, mu, mach, delta, k3)
        for i in range(3):
            ytmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])
        rhs(t + C4 * h, ytmp, k, xi, nu, mu, mach, delta, k4)
        for i in range(3):
            ytmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i])
        rhs(t + C5 * h, ytmp, k, xi, nu, mu, mach, delta, k5)
        for i in range(3):
            ytmp[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i]
                                  + A65 * k5[i])
        rhs(t + h, ytmp, k, xi, nu, mu, mach, delta, k6)
        for i in range(3):
            ynew[i] = y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i]
                                  + A76 * k6[i])
        rhs(t + h, ynew, k, xi, nu, mu, mach, delta, k7)

        sc = atol + rtol * max(_norm(y), _norm(ynew))
        err = 0.0
        for i in range(3):
            e = abs(h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i]
                         + E6 * k6[i] + E7 * k7[i])) / sc
            if e > err:
                err = e
        if not math.isfinite(err):
            if not (math.isfinite(_norm(ynew))):
                return NON_FINITE, t, accepted, rejected
            err = 1e10

        # PI step-size control.
        fac11 = err ** expo1 if err > 0.0 else 0.0
        fac = fac11 / fac_old ** 0.04 if err > 0.0 else 0.0
        fac = max(0.1, min(5.0, fac / 0.9))
        hnew = h / fac if fac > 0.0 else 5.0 * h

        if err <= 1.0:
            fac_old = max(err, 1e-4)
            accepted += 1
            tnew = t + h
            if idx < n and samples[idx] <= tnew:
                for i in range(3):
                    ydiff = ynew[i] - y[i]
                    bspl = h * k1[i] - ydiff
                    r1[i] = y[i]
                    r2[i] = ydiff
                    r3[i] = bspl
                    r4[i] = ydiff - h * k7[i] - bspl
                    r5[i] = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i]
                                 + D6 * k6[i] + D7 * k7[i])
                while idx < n and samples[idx] <= tnew:
                    if samples[idx] == tnew:
                        for i in range(3):
                            out[idx, i] = ynew[i]
                    else:
                        th = (samples[idx] - t) / h
                        th1 = 1.0 - th
                        for i in range(3):
                            out[idx, i] = r1[i] + th * (r2[i] + th1 * (r3[i] + th * (
                                r4[i] + th1 * r5[i])))
                    idx += 1
            for i in range(3):
                y[i] = ynew[i]
                k1[i] = k7[i]
            t = tnew
            if not math.isfinite(_norm(y)):
                return NON_FINITE, t, accepted, rejected
            if idx >= n:
                return OK, t, accepted, rejected
            if reject_prev and hnew > h:
                hnew = h
            reject_prev = False
            h = hnew
        else:
            rejected += 1
            reject_prev = True
            h = h / min(5.0, fac11 / 0.9) if fac11 > 0.0 else 0.2 * h


@nb.njit(cache=True, nogil=True)
def integrate_batch(y0s, ks, xis, nu, mu, mach, delta, samples, rtol, atol, max_steps,
                    out, status):
    """Integrate modes independently; ``status[j] = (code, t, accepted, rejected)``."""
    for j in range(ks.shape[0]):
        code, tr, acc, rej = integrate(y0s[j], ks[j], xis[j], nu, mu, mach, delta, samples,
                                       rtol, atol, max_steps, out[j])
        status[j, 0] = code
        status[j, 1] = tr
        status[j, 2] = acc
        status[j, 3] = rej
