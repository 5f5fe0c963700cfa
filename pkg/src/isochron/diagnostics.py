"""Empirical boundedness laboratory: long-horizon strobe sweeps with a
three-way verdict per orbit, growth-exponent fitting, and rotation-number
estimation.

Boundedness is undecidable from finite data; the verdict thresholds
(1.05 plateau factor, escape bar, horizon) are explicit policy knobs on
SweepConfig.  Verdict lists are deterministic for a fixed config.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp

from . import action_angle, flow, model
from .errors import BlowUp, IsochronError, OriginApproach
from .flow import BLOWUP_GUARD, FlowSpec, PhaseState
from .model import (ArctanPerturbation, AsymmetricLinear, BonheureFabry,
                    Harmonic, OscillatorSystem, ZeroPerturbation)

__all__ = [
    "SweepConfig",
    "OrbitVerdict",
    "default_grid",
    "sweep",
    "rotation_number",
    "growth_fit",
    "verdicts_to_csv",
]

_SWEEP_FLOW = FlowSpec(rel_tol=1e-9, abs_tol=1e-10, max_step=1.0)


@dataclass(frozen=True)
class SweepConfig:
    initial_grid: tuple = ()
    n_periods: int = 10_000
    escape_threshold: float = 1e6
    flow: FlowSpec = _SWEEP_FLOW

    def __post_init__(self):
        if self.n_periods < 10:
            raise ValueError("n_periods must be >= 10")
        if self.initial_grid:
            biggest = max(abs(s.x) + abs(s.y) for s in self.initial_grid)
            if self.escape_threshold <= biggest:
                raise ValueError("escape_threshold must exceed the largest "
                                 "initial amplitude")


@dataclass(frozen=True)
class OrbitVerdict:
    initial: PhaseState
    sup_amplitude: float
    classification: str        # "bounded_like" | "escaped" | "undecided"
    growth_exponent: float
    rotation_number: float
    note: str = ""


def default_grid(sys: OscillatorSystem, energies: int = 8, angles: int = 8,
                 action_lo: float = 10.0, action_hi: float = 1e5):
    """Log-spaced actions crossed with equispaced angles, mapped to phase
    points through the unforced chart; covers the high-energy regime where
    the twist machinery operates."""
    period = 2.0 * math.pi / sys.omega
    states = []
    for level in np.geomspace(action_lo, action_hi, energies):
        for j in range(angles):
            theta = j * period / angles
            x, y = action_angle.from_action_angle(
                sys.potential, action_angle.ActionAngle(theta, float(level)))
            states.append(PhaseState(x, y, 0.0))
    return states


def growth_fit(amplitudes):
    """Least-squares slope of log amplitude against log period index over the
    tail half of the sequence; returns (exponent, r_squared).

    Zero-variance data (a flat amplitude plateau) reports exponent 0.
    """
    amps = [float(a) for a in amplitudes]
    if len(amps) < 10:
        raise ValueError("growth_fit needs at least 10 samples")
    if any(a <= 0.0 for a in amps):
        raise ValueError("amplitudes must be positive")
    tail = amps[len(amps) // 2:]
    k0 = len(amps) - len(tail) + 1
    logk = np.log(np.arange(k0, k0 + len(tail), dtype=float))
    loga = np.log(np.asarray(tail))
    var_a = float(np.var(loga))
    if var_a < 1e-24:
        return (0.0, 0.0)
    slope, intercept = np.polyfit(logk, loga, 1)
    pred = slope * logk + intercept
    ss_res = float(np.sum((loga - pred) ** 2))
    ss_tot = float(np.sum((loga - np.mean(loga)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0.0 else 0.0
    return (float(slope), r2)


def _vectorizable(sys: OscillatorSystem) -> bool:
    """Smooth built-in vector fields can be integrated as one batched system
    (no x = 0 corner events to localize per orbit)."""
    p, g = sys.potential, sys.perturbation
    smooth_p = isinstance(p, (Harmonic, BonheureFabry)) or (
        isinstance(p, AsymmetricLinear) and p.a == p.b)
    return smooth_p and isinstance(g, (ZeroPerturbation, ArctanPerturbation))


def _jit_eligible(sys: OscillatorSystem) -> bool:
    """The compiled strobe loop covers linear-restoring built-ins with an
    (optional) arctan perturbation; everything else keeps the general route."""
    from . import _fastpath
    if not _fastpath.HAVE_NUMBA:
        return False
    p, g = sys.potential, sys.perturbation
    ok_p = isinstance(p, Harmonic) or (
        isinstance(p, AsymmetricLinear) and p.a == p.b)
    return ok_p and isinstance(g, (ZeroPerturbation, ArctanPerturbation))


def _jit_strobes(sys: OscillatorSystem, s0: PhaseState, n_periods: int,
                 spec: FlowSpec):
    """Per-orbit compiled strobe samples; returns (samples, escaped, note)."""
    from . import _fastpath
    a, b = sys.potential.slopes
    g = sys.perturbation
    gscale = g.scale if isinstance(g, ArctanPerturbation) else 0.0
    cosc = np.asarray(sys.forcing.fourier_cos, dtype=float)
    sinc = np.asarray(sys.forcing.fourier_sin, dtype=float)
    xs, ys, status = _fastpath.run_orbit(
        s0.x, s0.y, s0.t, n_periods, a, b, gscale, cosc, sinc,
        spec.rel_tol, spec.abs_tol, max(spec.max_step, 1.0), BLOWUP_GUARD)
    if status == -2:
        return None, False, "step-size underflow in compiled integrator"
    if status >= 0:
        good = np.stack([xs[:status], ys[:status]], axis=-1)
        return good, True, f"overflow guard near strobe {status}"
    return np.stack([xs, ys], axis=-1), False, ""


def _batch_strobes(sys: OscillatorSystem, states, n_periods: int, spec: FlowSpec):
    """One stacked integration of all orbits; returns arrays of shape
    (n_orbits, n_periods, 2) sampled at t = 2 pi k, or None on failure."""
    p, g, f = sys.potential, sys.perturbation, sys.forcing
    n = len(states)
    y0 = np.empty(2 * n)
    y0[:n] = [s.x for s in states]
    y0[n:] = [s.y for s in states]

    def rhs(t, s):
        x, v = s[:n], s[n:]
        return np.concatenate((v, float(f.value(t)) - p.value(x, 1) - g.value(x)))

    times = 2.0 * math.pi * np.arange(1, n_periods + 1)
    sol = solve_ivp(rhs, (0.0, times[-1]), y0, method="DOP853", t_eval=times,
                    rtol=spec.rel_tol, atol=spec.abs_tol, max_step=spec.max_step)
    if sol.status != 0 or not np.all(np.isfinite(sol.y)):
        return None
    xs = sol.y[:n, :].T     # (n_periods, n_orbits)
    ys = sol.y[n:, :].T
    return np.stack([xs.T, ys.T], axis=-1)   # (n_orbits, n_periods, 2)


def _coarse_rotation(sys: OscillatorSystem, s0: PhaseState, strobes) -> float:
    """Rotation estimate from strobe samples alone: per-step winding is
    reconstructed assuming the drift from the unperturbed rate stays below
    half a revolution per forcing period (coarse policy for sweep reports)."""
    a, b = sys.slopes
    period = action_angle.c_period(a, b)
    try:
        angles = [action_angle.piecewise_linear_angle(a, b, s0.x, s0.y)]
        angles += [action_angle.piecewise_linear_angle(a, b, s.x, s.y)
                   for s in strobes]
    except IsochronError:
        return float("nan")
    if len(angles) < 2:
        return float("nan")
    total = 0.0
    for prev, cur in zip(angles, angles[1:]):
        raw = cur - prev
        # true per-strobe drop is near -2 pi; pick that branch of the wrap
        winds = round((raw + 2.0 * math.pi) / period)
        total += raw - winds * period
    revolutions = -total / period
    if revolutions <= 0.0:
        return float("nan")
    return len(angles[1:]) / revolutions


def _classify(amplitudes, threshold: float):
    sup_amp = float(np.max(amplitudes))
    if sup_amp >= threshold:
        return "escaped", sup_amp
    n = len(amplitudes)
    mid = amplitudes[int(0.4 * n):int(0.6 * n)]
    late = amplitudes[int(0.8 * n):]
    if len(mid) and len(late) and float(np.max(late)) <= 1.05 * float(np.max(mid)):
        return "bounded_like", sup_amp
    return "undecided", sup_amp


def _verdict_from_samples(sys, s0, xs_ys, threshold, escaped_early, note=""):
    amp0 = abs(s0.x) + abs(s0.y)
    if xs_ys is None or len(xs_ys) == 0:
        return OrbitVerdict(s0, amp0, "escaped" if escaped_early else "undecided",
                            float("nan"), float("nan"), note)
    amps = np.abs(xs_ys[:, 0]) + np.abs(xs_ys[:, 1])
    running = np.maximum.accumulate(np.maximum(amps, 1e-300))
    classification, sup_amp = _classify(amps, threshold)
    if escaped_early:
        classification, sup_amp = "escaped", max(sup_amp, BLOWUP_GUARD)
    exponent, _ = growth_fit(running) if len(running) >= 10 else (float("nan"), 0.0)
    strobes = [PhaseState(float(x), float(y), 2.0 * math.pi * (k + 1))
               for k, (x, y) in enumerate(xs_ys)]
    rot = _coarse_rotation(sys, s0, strobes)
    return OrbitVerdict(s0, sup_amp, classification, exponent, rot, note)


def sweep(sys: OscillatorSystem, cfg: SweepConfig):
    """Strobe every initial state for the configured horizon and classify.

    Smooth built-in systems are integrated as one batched system (identical
    verdict semantics, order-of-magnitude faster); systems with a slope
    corner fall back to per-orbit integration with event handling.  Per-orbit
    integrator failures yield 'undecided' verdicts with the reason attached.
    """
    states = list(cfg.initial_grid) or default_grid(sys)
    verdicts = []
    if _jit_eligible(sys):
        for s0 in states:
            samples, escaped, note = _jit_strobes(sys, s0, cfg.n_periods, cfg.flow)
            if samples is None:
                verdicts.append(OrbitVerdict(s0, abs(s0.x) + abs(s0.y),
                                             "undecided", float("nan"),
                                             float("nan"), note))
            else:
                verdicts.append(_verdict_from_samples(
                    sys, s0, samples, cfg.escape_threshold,
                    escaped_early=escaped, note=note))
        return verdicts
    batch = _batch_strobes(sys, states, cfg.n_periods, cfg.flow) \
        if _vectorizable(sys) else None
    if batch is not None:
        for s0, orbit in zip(states, batch):
            verdicts.append(_verdict_from_samples(
                sys, s0, orbit, cfg.escape_threshold, escaped_early=False))
        return verdicts
    for s0 in states:
        try:
            res = flow.strobe_orbit(sys, s0, cfg.n_periods, cfg.flow)
            samples = np.array([[s.x, s.y] for s in res.states]) \
                if res.states else None
            verdicts.append(_verdict_from_samples(
                sys, s0, samples, cfg.escape_threshold,
                escaped_early=res.escaped, note=res.note))
        except IsochronError as exc:
            verdicts.append(OrbitVerdict(s0, abs(s0.x) + abs(s0.y), "undecided",
                                         float("nan"), float("nan"),
                                         f"integrator failure: {exc}"))
    return verdicts


def rotation_number(sys: OscillatorSystem, s0: PhaseState, n_periods: int,
                    spec: Optional[FlowSpec] = None) -> float:
    """Forcing periods per angle revolution, averaged over n_periods strobes.

    Winding is counted on a finely sub-sampled orbit (so the count is exact)
    and the fractional part is anchored by the true chart angle at the two
    endpoints; the unperturbed value is 1/omega independent of energy.
    """
    if n_periods < 1:
        raise ValueError("n_periods must be >= 1")
    spec = spec or FlowSpec(rel_tol=1e-10, abs_tol=1e-11, max_step=0.5)
    a, b = sys.slopes
    period = action_angle.c_period(a, b)
    n_sub = max(16, int(math.ceil(16.0 * sys.omega)))
    times = [s0.t + 2.0 * math.pi * k / n_sub
             for k in range(1, n_periods * n_sub + 1)]
    res = flow._run(sys, s0, times[-1], spec, sample_times=times)
    if res.blown is not None or len(res.samples) < len(times):
        raise OriginApproach("orbit left the trackable region")
    amp0 = abs(s0.x) + abs(s0.y)
    pts = [(s0.x, s0.y)] + [(x, y) for (_, x, y) in res.samples]
    lift = 0.0
    prev = action_angle.piecewise_linear_angle(a, b, *pts[0])
    for x, y in pts[1:]:
        if abs(x) + abs(y) < 1e-9 * max(amp0, 1.0):
            raise OriginApproach("orbit passed too close to the origin")
        cur = action_angle.piecewise_linear_angle(a, b, x, y)
        d = cur - prev
        d -= period * round(d / period)   # nearest image; |true d| << period/2
        lift += d
        prev = cur
    theta_start = action_angle.angle_of_state(sys.potential, s0.x, s0.y)
    theta_end = action_angle.angle_of_state(sys.potential, *pts[-1])
    frac = theta_end - theta_start
    total = frac + period * round((lift - frac) / period)
    revolutions = -total / period
    if revolutions <= 0.0:
        raise OriginApproach("no net winding measured")
    return n_periods / revolutions


_CSV_COLUMNS = ("x0", "y0", "sup_amplitude", "classification",
                "growth_exponent", "rotation_number")


def verdicts_to_csv(verdicts, path: str):
    from .poincare import write_csv
    rows = [[v.initial.x, v.initial.y, v.sup_amplitude, v.classification,
             v.growth_exponent, v.rotation_number] for v in verdicts]
    write_csv(path, _CSV_COLUMNS, rows)
