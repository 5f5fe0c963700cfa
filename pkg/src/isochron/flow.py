"""High-accuracy time integration of x' = y, y' = -V'(x) - g(x) + f(t).

One adaptive explicit scheme (DOP853) with dense output serves every
consumer; for piecewise-linear potentials each crossing of x = 0 is
located on the dense output and the step restarts on the correct side,
so a step never straddles the slope jump.  Stateless given (sys, spec).
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .errors import AngleNotMonotone, BlowUp, NonConvergent, OriginState
from .model import AsymmetricLinear, OscillatorSystem

__all__ = [
    "PhaseState",
    "FlowSpec",
    "StrobeResult",
    "BLOWUP_GUARD",
    "integrate_to",
    "strobe_orbit",
    "angle_return",
]

BLOWUP_GUARD = 1e12


@dataclass(frozen=True)
class PhaseState:
    x: float
    y: float
    t: float = 0.0

    def __post_init__(self):
        if not all(map(math.isfinite, (self.x, self.y, self.t))):
            raise ValueError("phase state components must be finite")


@dataclass(frozen=True)
class FlowSpec:
    rel_tol: float = 1e-11
    abs_tol: float = 1e-12
    max_step: float = 0.1
    event_tol: float = 1e-12

    def __post_init__(self):
        if min(self.rel_tol, self.abs_tol, self.max_step, self.event_tol) <= 0.0:
            raise ValueError("flow tolerances must be positive")


@dataclass(frozen=True)
class StrobeResult:
    states: tuple
    escaped: bool = False
    note: str = ""


def _rhs(sys: OscillatorSystem):
    p, g, f = sys.potential, sys.perturbation, sys.forcing

    def rhs(t, s):
        x, y = s
        return (y, float(f.value(t)) - float(p.value(x, 1)) - float(g.value(x)))
    return rhs


def _has_corner(sys: OscillatorSystem) -> bool:
    p = sys.potential
    return isinstance(p, AsymmetricLinear) and p.a != p.b


class _Dense:
    """Piecewise dense output across event-separated segments."""

    def __init__(self):
        self.pieces = []  # (t_lo, t_hi, interpolant)

    def add(self, t_lo, t_hi, interp):
        self.pieces.append((t_lo, t_hi, interp))

    def __call__(self, t):
        for t_lo, t_hi, interp in self.pieces:
            if t_lo - 1e-12 <= t <= t_hi + 1e-12:
                return interp(min(max(t, t_lo), t_hi))
        raise ValueError(f"t={t} outside stored dense range")


class _RunResult:
    __slots__ = ("state", "samples", "blown", "events", "dense")

    def __init__(self, state, samples, blown, events, dense):
        self.state = state          # PhaseState at t_end (None if blown up first)
        self.samples = samples      # list of (t, x, y) at requested times
        self.blown = blown          # PhaseState at guard crossing, or None
        self.events = events        # list of (t, x_before_snap) at x=0 crossings
        self.dense = dense          # _Dense over the integrated span


def _run(sys, s0: PhaseState, t_end: float, spec: FlowSpec,
         sample_times=None, keep_dense=False) -> _RunResult:
    """Integrate from s0 to t_end in event-free segments, sampling the dense
    output at sample_times along the way."""
    rhs = _rhs(sys)
    track_corner = _has_corner(sys)
    samples = []
    events = []
    dense = _Dense() if keep_dense else None
    pending = sorted(sample_times) if sample_times is not None else []
    next_i = 0

    def guard(t, s):
        return abs(s[0]) + abs(s[1]) - BLOWUP_GUARD
    guard.terminal = True

    def crossing(t, s):
        return s[0]
    crossing.terminal = True

    evts = [guard, crossing] if track_corner else [guard]

    t = s0.t
    y = np.array([s0.x, s0.y], dtype=float)
    if t_end < t:
        raise ValueError("t_end must be >= start time")
    while True:
        if t == t_end:
            return _RunResult(PhaseState(y[0], y[1], t), samples, None, events, dense)
        sol = solve_ivp(rhs, (t, t_end), y, method="DOP853", dense_output=True,
                        events=evts, rtol=spec.rel_tol, atol=spec.abs_tol,
                        max_step=spec.max_step)
        if sol.status == -1:
            raise NonConvergent(f"integrator failed at t={sol.t[-1]}: {sol.message}")
        seg_end = sol.t[-1]
        if dense is not None:
            dense.add(t, seg_end, sol.sol)
        while next_i < len(pending) and pending[next_i] <= seg_end + 1e-14:
            ts = min(pending[next_i], seg_end)
            xs, ys = sol.sol(ts)
            samples.append((ts, float(xs), float(ys)))
            next_i += 1
        if sol.status == 0:
            xe, ye = sol.y[:, -1]
            return _RunResult(PhaseState(float(xe), float(ye), t_end),
                              samples, None, events, dense)
        # terminal event: guard first, then corner crossing
        if len(sol.t_events[0]) > 0:
            te = float(sol.t_events[0][0])
            xe, ye = sol.y_events[0][0]
            return _RunResult(None, samples,
                              PhaseState(float(xe), float(ye), te), events, dense)
        te = float(sol.t_events[1][0])
        xe, ye = sol.y_events[1][0]
        if abs(ye) < 1e-300:
            raise NonConvergent("degenerate tangential crossing of x = 0")
        events.append((te, float(xe)))
        # restart flush on the crossing: snap x to the boundary, offset by one
        # representable hair on the outgoing side so the event does not retrigger
        y = np.array([math.copysign(1e-30, ye), float(ye)])
        t = te


def integrate_to(sys: OscillatorSystem, s0: PhaseState, t_end: float,
                 spec: Optional[FlowSpec] = None,
                 events_out: Optional[list] = None) -> PhaseState:
    """State at t_end.  Raises BlowUp if |x| + |y| exceeds the overflow guard."""
    spec = spec or FlowSpec()
    res = _run(sys, s0, t_end, spec)
    if events_out is not None:
        events_out.extend(res.events)
    if res.blown is not None:
        raise BlowUp(res.blown)
    return res.state


def strobe_orbit(sys: OscillatorSystem, s0: PhaseState, n_periods: int,
                 spec: Optional[FlowSpec] = None) -> StrobeResult:
    """States at t = s0.t + 2*pi*k for k = 1..n_periods.

    Stops early when the overflow guard trips and marks the orbit escaped;
    other integrator failures propagate.
    """
    if n_periods < 1:
        raise ValueError("n_periods must be >= 1")
    spec = spec or FlowSpec()
    times = [s0.t + 2.0 * math.pi * k for k in range(1, n_periods + 1)]
    res = _run(sys, s0, times[-1], spec, sample_times=times)
    states = tuple(PhaseState(x, y, t) for (t, x, y) in res.samples)
    if res.blown is not None:
        return StrobeResult(states, escaped=True,
                            note=f"overflow guard at t={res.blown.t:.6g}")
    return StrobeResult(states)


def _instant_angle(sys, x, y):
    from . import action_angle  # deferred: action_angle builds on this module
    return action_angle.angle_of_state(sys.potential, x, y)


def angle_return(sys: OscillatorSystem, s0: PhaseState, revolutions: int,
                 spec: Optional[FlowSpec] = None):
    """Integrate until the running angle of the instantaneous state has swept
    exactly ``revolutions`` full turns; returns (state, elapsed).

    The angle decreases along the flow at unit rate to leading order.  It is
    evaluated lazily at chunk endpoints (one angle evaluation per accepted
    chunk) and the final crossing is refined on the chunk's dense output.
    Raises AngleNotMonotone if a chunk shows non-negative angle progress.
    """
    if revolutions < 1:
        raise ValueError("revolutions must be >= 1")
    spec = spec or FlowSpec()
    p = sys.potential
    h0 = 0.5 * s0.y**2 + float(p.value(s0.x, 0))
    if h0 <= 0.0:
        raise OriginState("angle_return needs positive energy")
    a, b = p.slopes
    period = math.pi / math.sqrt(a) + math.pi / math.sqrt(b)
    target = -revolutions * period
    chunk = period / 8.0

    theta_prev = _instant_angle(sys, s0.x, s0.y)
    lift = 0.0
    t = s0.t
    state = s0
    # generous cap: perturbed revolutions stay within ~12.5% of the unperturbed rate
    max_chunks = int(math.ceil(revolutions * 9.0)) + 8
    for _ in range(max_chunks):
        res = _run(sys, state, t + chunk, spec, keep_dense=True)
        if res.blown is not None:
            raise BlowUp(res.blown)
        seg = res.state

        def drop(theta):
            d = theta - theta_prev
            if d > 0.0:
                d -= period
            return d

        theta_end = _instant_angle(sys, seg.x, seg.y)
        d_end = drop(theta_end)
        if d_end >= 0.0 or d_end <= -0.9 * period:
            raise AngleNotMonotone(
                f"angle progress {d_end:+.3e} over one chunk at t={seg.t:.6g}")
        if lift + d_end <= target:
            # crossing inside this chunk; refine on the dense output
            def overshoot(tt):
                xx, yy = res.dense(tt)
                return lift + drop(_instant_angle(sys, float(xx), float(yy))) - target

            t_star = brentq(overshoot, t, t + chunk,
                            xtol=1e-12 * max(1.0, abs(t + chunk)), rtol=8.9e-16)
            xx, yy = res.dense(t_star)
            return PhaseState(float(xx), float(yy), t_star), t_star - s0.t
        lift += d_end
        theta_prev = theta_end
        t = seg.t
        state = seg
    raise NonConvergent("angle target not reached within the chunk budget")
