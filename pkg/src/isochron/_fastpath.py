"""Compiled strobe integrator for long boundedness sweeps.

Long sweeps (64 orbits x 1e4 forcing periods) spend their time crossing the
narrow transition layer of the bounded perturbation, which forces small
steps; a jitted adaptive Dormand-Prince 5(4) loop removes the per-step
interpreter overhead that dominates the general-purpose route.  Scope is
deliberately narrow: smooth built-in vector fields only (piecewise-linear
well with equal slopes, harmonic, or the smooth isochronous family is NOT
included because its derivative evaluation is expensive; in practice sweeps
target the piecewise-linear/harmonic families).  The general route in
``flow`` remains the reference; tests cross-validate the two.

Status codes from run_orbit: -1 completed, -2 step-size underflow, k >= 0
overflow guard tripped while heading to strobe k.
"""

import math

import numpy as np

try:
    from numba import njit
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a soft dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn
        if args and callable(args[0]):
            return args[0]
        return wrap


@njit(cache=True)
def _force(t, x, a, b, gscale, cosc, sinc):
    f = 0.0
    for k in range(cosc.size):
        if cosc[k] != 0.0:
            f += cosc[k] * math.cos(k * t)
    for k in range(sinc.size):
        if sinc[k] != 0.0:
            f += sinc[k] * math.sin((k + 1) * t)
    vp = a * x if x >= 0.0 else b * x
    if gscale != 0.0:
        f -= gscale * math.atan(x)
    return f - vp


@njit(cache=True)
def run_orbit(x0, y0, t0, n_strobes, a, b, gscale, cosc, sinc,
              rtol, atol, hmax, guard):
    """Adaptive DP5(4) with FSAL, landing exactly on strobe times
    t0 + 2*pi*k; returns (xs, ys, status)."""
    xs = np.full(n_strobes, np.nan)
    ys = np.full(n_strobes, np.nan)
    two_pi = 2.0 * math.pi
    t = t0
    x = x0
    y = y0
    target = 0
    t_next = t0 + two_pi
    h = min(1e-3, hmax)
    k1x = y
    k1y = _force(t, x, a, b, gscale, cosc, sinc)
    while target < n_strobes:
        if abs(x) + abs(y) >= guard:
            return xs, ys, target
        if h < 1e-13 * max(1.0, abs(t)):
            return xs, ys, -2
        clamped = False
        if t + h >= t_next:
            h = t_next - t
            clamped = True

        k2x = y + h * 0.2 * k1y
        k2y = _force(t + 0.2 * h, x + h * 0.2 * k1x, a, b, gscale, cosc, sinc)
        x3 = x + h * (0.075 * k1x + 0.225 * k2x)
        k3x = y + h * (0.075 * k1y + 0.225 * k2y)
        k3y = _force(t + 0.3 * h, x3, a, b, gscale, cosc, sinc)
        x4 = x + h * (44.0 / 45.0 * k1x - 56.0 / 15.0 * k2x + 32.0 / 9.0 * k3x)
        k4x = y + h * (44.0 / 45.0 * k1y - 56.0 / 15.0 * k2y + 32.0 / 9.0 * k3y)
        k4y = _force(t + 0.8 * h, x4, a, b, gscale, cosc, sinc)
        x5 = x + h * (19372.0 / 6561.0 * k1x - 25360.0 / 2187.0 * k2x
                      + 64448.0 / 6561.0 * k3x - 212.0 / 729.0 * k4x)
        k5x = y + h * (19372.0 / 6561.0 * k1y - 25360.0 / 2187.0 * k2y
                       + 64448.0 / 6561.0 * k3y - 212.0 / 729.0 * k4y)
        k5y = _force(t + 8.0 / 9.0 * h, x5, a, b, gscale, cosc, sinc)
        x6 = x + h * (9017.0 / 3168.0 * k1x - 355.0 / 33.0 * k2x
                      + 46732.0 / 5247.0 * k3x + 49.0 / 176.0 * k4x
                      - 5103.0 / 18656.0 * k5x)
        k6x = y + h * (9017.0 / 3168.0 * k1y - 355.0 / 33.0 * k2y
                       + 46732.0 / 5247.0 * k3y + 49.0 / 176.0 * k4y
                       - 5103.0 / 18656.0 * k5y)
        k6y = _force(t + h, x6, a, b, gscale, cosc, sinc)
        xn = x + h * (35.0 / 384.0 * k1x + 500.0 / 1113.0 * k3x
                      + 125.0 / 192.0 * k4x - 2187.0 / 6784.0 * k5x
                      + 11.0 / 84.0 * k6x)
        yn = y + h * (35.0 / 384.0 * k1y + 500.0 / 1113.0 * k3y
                      + 125.0 / 192.0 * k4y - 2187.0 / 6784.0 * k5y
                      + 11.0 / 84.0 * k6y)
        k7x = yn
        k7y = _force(t + h, xn, a, b, gscale, cosc, sinc)
        # embedded 4th-order difference
        ex = h * (71.0 / 57600.0 * k1x - 71.0 / 16695.0 * k3x
                  + 71.0 / 1920.0 * k4x - 17253.0 / 339200.0 * k5x
                  + 22.0 / 525.0 * k6x - 1.0 / 40.0 * k7x)
        ey = h * (71.0 / 57600.0 * k1y - 71.0 / 16695.0 * k3y
                  + 71.0 / 1920.0 * k4y - 17253.0 / 339200.0 * k5y
                  + 22.0 / 525.0 * k6y - 1.0 / 40.0 * k7y)
        sx = atol + rtol * max(abs(x), abs(xn))
        sy = atol + rtol * max(abs(y), abs(yn))
        err = math.sqrt(0.5 * ((ex / sx) ** 2 + (ey / sy) ** 2))
        if err <= 1.0:
            t = t_next if clamped else t + h
            x = xn
            y = yn
            k1x = k7x
            k1y = k7y
            if clamped:
                xs[target] = x
                ys[target] = y
                target += 1
                t_next = t0 + two_pi * (target + 1)
        if err == 0.0:
            factor = 5.0
        else:
            factor = min(5.0, max(0.2, 0.9 * err ** -0.2))
        h = min(h * factor, hmax)
    return xs, ys, -1
