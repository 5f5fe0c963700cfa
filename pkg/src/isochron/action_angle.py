"""Canonical action-angle chart of the unforced oscillator: turning points,
periods, (theta, I) from (x, y), the inverse chart, the piecewise reference
solution, and the high-energy remainder.

Conventions: theta is the quadrature time-to-the-right-turning-point along
the upper branch, extended to [0, T) via the lower branch; the action is
the full enclosed area.  Along the physical flow theta decreases at unit
rate.  h(I) = omega*I/(2*pi) is exact for isochronous wells and is used
directly (no numerical inversion).
"""

import math
from dataclasses import dataclass

import numpy as np

from . import flow, model, numerics
from .errors import NoBracket, OriginState
from .model import AsymmetricLinear, CustomPotential, Harmonic, OscillatorSystem

__all__ = [
    "ActionAngle",
    "EnergyLevel",
    "turning_points",
    "period_parts",
    "to_action_angle",
    "from_action_angle",
    "angle_of_state",
    "piecewise_linear_angle",
    "reference_C",
    "xbar",
    "remainder_X",
]


@dataclass(frozen=True)
class ActionAngle:
    theta: float
    action: float

    def __post_init__(self):
        if not self.action > 0.0:
            raise ValueError("action must be positive")


@dataclass(frozen=True)
class EnergyLevel:
    h: float
    alpha: float   # magnitude of the left turning point (position -alpha)
    beta: float    # right turning point

    @property
    def left(self):
        return -self.alpha


def _polished_root(p, h, side):
    """Positive r with V(side * r) = h, bracketed then Newton-polished."""
    a, b = p.slopes
    guess = math.sqrt(2.0 * h / (a if side > 0 else b))

    def fn(r):
        return float(model.eval_potential(p, side * r, 0)) - h

    lo, hi = 0.0, guess
    grow = 0
    while fn(hi) < 0.0:
        hi *= 2.0
        grow += 1
        if grow > 200:
            raise NoBracket(f"no turning point below {hi} on side {side:+d}")
    r = numerics.find_root(fn, lo, hi, numerics.RootSpec(abs_tol=1e-14))
    for _ in range(2):  # Newton polish pushes |V - h| to rounding level
        slope = side * float(model.eval_potential(p, side * r, 1))
        if slope == 0.0:
            break
        r -= fn(r) / slope
    return r


def turning_points(p, h: float) -> EnergyLevel:
    """Positions -alpha < 0 < beta with V = h on both sides."""
    if not h > 0.0:
        raise ValueError("energy must be positive")
    if isinstance(p, (AsymmetricLinear, Harmonic)):
        a, b = p.slopes
        return EnergyLevel(h, math.sqrt(2.0 * h / b), math.sqrt(2.0 * h / a))
    return EnergyLevel(h, _polished_root(p, h, -1), _polished_root(p, h, +1))


def period_parts(p, h: float):
    """(T_minus, T_plus, T): time in x<0, in x>0, and the full period."""
    level = turning_points(p, h)

    def under_sqrt(s):
        return 2.0 * (h - float(model.eval_potential(p, s, 0)))

    t_plus = 2.0 * numerics.integrate_turning(under_sqrt, 0.0, level.beta, "hi")
    t_minus = 2.0 * numerics.integrate_turning(under_sqrt, level.left, 0.0, "lo")
    return (t_minus, t_plus, t_minus + t_plus)


def _time_to_beta(p, h, level, x):
    """Quadrature time from x to beta along the upper branch (y >= 0)."""
    beta, alpha = level.beta, level.alpha
    spec = numerics.QuadratureSpec()

    def f_of(s):
        v = 2.0 * (h - float(model.eval_potential(p, s, 0)))
        return abs(v) + 5e-324  # roundoff guard right at the turning points

    def from_beta(u):      # s = beta - u^2
        return 2.0 * u / math.sqrt(f_of(beta - u * u))

    def from_left(u):      # s = -alpha + u^2
        return 2.0 * u / math.sqrt(f_of(u * u - alpha))

    if x >= 0.0:
        span = max(beta - x, 0.0)
        return numerics.integrate(from_beta, 0.0, math.sqrt(span), spec).value
    upper = numerics.integrate(from_beta, 0.0, math.sqrt(beta), spec).value
    u_lo = math.sqrt(max(x + alpha, 0.0))
    left = numerics.integrate(from_left, u_lo, math.sqrt(alpha), spec).value
    return upper + left


def piecewise_linear_angle(a: float, b: float, x: float, y: float) -> float:
    """Closed-form angle of the piecewise-linear well with slopes (a, b),
    in [0, T) with T = pi/sqrt(a) + pi/sqrt(b).

    Exact for AsymmetricLinear/Harmonic states; for other wells it is a
    degree-one circle chart (winds once per revolution), which is all that
    winding counts require.  Written with atan2 so the angle keeps full
    precision near the section (arccos of a near-unit ratio would not).
    """
    if x == 0.0 and y == 0.0:
        raise OriginState("angle undefined at the origin")
    ra, rb = math.sqrt(a), math.sqrt(b)
    period = math.pi / ra + math.pi / rb
    half_right = 0.5 * math.pi / ra
    if x >= 0.0:
        # physical-time phase around the crossing of (beta, 0)
        chi = math.atan2(-y / ra, x)
        theta = -chi / ra
        return theta % period if theta != 0.0 else 0.0
    xi = math.atan2(-x * rb, -y)       # in (0, pi) throughout x < 0
    return period - half_right - xi / rb


def angle_of_state(p, x: float, y: float) -> float:
    """Wrapped angle of a phase point; closed form when the well is
    piecewise linear, quadrature otherwise."""
    if isinstance(p, (AsymmetricLinear, Harmonic)):
        a, b = p.slopes
        return piecewise_linear_angle(a, b, x, y)
    h = 0.5 * y * y + float(model.eval_potential(p, x, 0))
    if h <= 0.0:
        raise OriginState("angle undefined at the origin")
    level = turning_points(p, h)
    tau = _time_to_beta(p, h, level, x)
    if y >= 0.0:
        return tau
    half = _time_to_beta(p, h, level, level.left)  # = T/2
    return 2.0 * half - tau


def to_action_angle(p, state) -> ActionAngle:
    """(theta, I) of a phase point by direct quadrature of the defining
    integrals; I equals 2*pi*h/omega for isochronous wells (tested, not
    assumed here)."""
    x, y = (state.x, state.y) if hasattr(state, "x") else (float(state[0]), float(state[1]))
    h = 0.5 * y * y + float(model.eval_potential(p, x, 0))
    if h <= 0.0:
        raise OriginState("action-angle chart undefined at the origin")
    level = turning_points(p, h)
    beta, alpha = level.beta, level.alpha
    spec = numerics.QuadratureSpec()

    def f_of(s):
        return abs(2.0 * (h - float(model.eval_potential(p, s, 0)))) + 5e-324

    def area_right(u):     # s = beta - u^2
        return 2.0 * u * math.sqrt(f_of(beta - u * u))

    def area_left(u):      # s = -alpha + u^2
        return 2.0 * u * math.sqrt(f_of(u * u - alpha))

    action = 2.0 * (numerics.integrate(area_right, 0.0, math.sqrt(beta), spec).value
                    + numerics.integrate(area_left, 0.0, math.sqrt(alpha), spec).value)
    tau = _time_to_beta(p, h, level, x)
    if y >= 0.0:
        theta = tau
    else:
        theta = 2.0 * _time_to_beta(p, h, level, level.left) - tau
    period = 2.0 * math.pi / model.omega_from_slopes(*p.slopes)
    theta = theta % period
    return ActionAngle(theta, action)


def from_action_angle(p, aa: ActionAngle):
    """Phase point (x, y) of (theta, I), realized by integrating the
    autonomous flow from (beta, 0) for angle-time theta and flipping the
    velocity sign (the chart angle runs against physical time)."""
    if not aa.action > 0.0:
        raise ValueError("action must be positive")
    omega = model.omega_from_slopes(*p.slopes)
    h = omega * aa.action / (2.0 * math.pi)
    level = turning_points(p, h)
    period = 2.0 * math.pi / omega
    theta = aa.theta % period
    if theta == 0.0:
        return (level.beta, 0.0)
    unforced = OscillatorSystem(p)
    end = flow.integrate_to(unforced, flow.PhaseState(level.beta, 0.0, 0.0), theta)
    return (end.x, -end.y)


def reference_C(a: float, b: float, theta):
    """Unit-amplitude solution of u'' + a u+ - b u- = 0 with u(0)=1, u'(0)=0,
    reduced modulo its period."""
    ra, rb = math.sqrt(a), math.sqrt(b)
    period = math.pi / ra + math.pi / rb
    s = 0.5 * math.pi / ra
    phi = np.mod(np.asarray(theta, dtype=float) + s, period) - s
    out = np.where(phi <= s,
                   np.cos(ra * phi),
                   -math.sqrt(a / b) * np.sin(rb * (phi - s)))
    return out if out.ndim else float(out)


def c_period(a: float, b: float) -> float:
    return math.pi / math.sqrt(a) + math.pi / math.sqrt(b)


def xbar(sys: OscillatorSystem, aa: ActionAngle) -> float:
    """Leading high-energy profile sqrt(omega I / (pi a)) * C(theta)."""
    a, _ = sys.slopes
    amp = math.sqrt(sys.omega * aa.action / (math.pi * a))
    return amp * reference_C(*sys.slopes, aa.theta)


def remainder_X(sys: OscillatorSystem, aa: ActionAngle) -> float:
    """Exact chart position minus the leading profile; decays like o(sqrt(I))."""
    x, _ = from_action_angle(sys.potential, aa)
    return x - xbar(sys, aa)
