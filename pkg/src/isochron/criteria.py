"""Decision layer: rational/irrational frequency classification, the forcing
resonance functional, the resonant and non-resonant boundedness conditions,
and the instability zero set.

Rationality of a floating-point frequency is undecidable; classification is
an explicit policy: a convergent p/q counts as the true value only when it
approximates omega far better than generic convergents do (error below
tol/q), which accepts exact machine rationals and rejects quadratic
irrationals whose convergents merely satisfy |omega - p/q| ~ 1/q^2.
"""

import math
from dataclasses import dataclass
from typing import Optional

from . import action_angle, numerics, poincare
from .model import ForcingSpec, OscillatorSystem, exact_frequency

__all__ = [
    "RationalFrequency",
    "IrrationalFrequency",
    "ConditionReport",
    "classify_frequency",
    "classify_system",
    "phi_f",
    "phi_f_prime",
    "check_resonant",
    "check_nonresonant",
    "zero_set_A",
]


@dataclass(frozen=True)
class RationalFrequency:
    m: int     # omega = n / m in lowest terms
    n: int

    @property
    def value(self):
        return self.n / self.m


@dataclass(frozen=True)
class IrrationalFrequency:
    convergents: tuple   # ((p, q), ...) best rational approximations tried


FrequencyClass = RationalFrequency | IrrationalFrequency


def classify_frequency(omega: float, tol: float = 1e-9,
                       q_max: int = 10**6) -> FrequencyClass:
    """Continued-fraction classification of omega > 0 under the policy above."""
    if not omega > 0.0:
        raise ValueError("omega must be positive")
    if q_max < 1:
        raise ValueError("q_max must be >= 1")
    convergents = []
    p_prev, q_prev = 1, 0
    p_cur, q_cur = int(math.floor(omega)), 1
    rest = omega - math.floor(omega)
    while True:
        convergents.append((p_cur, q_cur))
        if abs(omega - p_cur / q_cur) < tol / q_cur:
            return RationalFrequency(m=q_cur, n=p_cur)
        if rest == 0.0:
            return IrrationalFrequency(tuple(convergents))
        value = 1.0 / rest
        digit = int(math.floor(value))
        rest = value - digit
        p_cur, p_prev = digit * p_cur + p_prev, p_cur
        q_cur, q_prev = digit * q_cur + q_prev, q_cur
        if q_cur > q_max:
            return IrrationalFrequency(tuple(convergents))


def classify_system(sys: OscillatorSystem, tol: float = 1e-9,
                    q_max: int = 10**6) -> FrequencyClass:
    """Classify a system's frequency, using the exact symbolic value when the
    built-in carries one (perfect-square slopes) so the verdict is exact."""
    exact = exact_frequency(sys)
    if exact is not None:
        return RationalFrequency(m=exact.denominator, n=exact.numerator)
    return classify_frequency(sys.omega, tol, q_max)


def _c_corner_cuts(m: int, a: float, b: float):
    """Breakpoints of t -> C(m t) inside (0, 2 pi)."""
    per = action_angle.c_period(a, b)
    s = 0.5 * math.pi / math.sqrt(a)
    cuts = []
    k = 0
    while True:
        base = s + k * per
        for corner in (base, base + math.pi / math.sqrt(b)):
            t = corner / m
            if 0.0 < t < 2.0 * math.pi:
                cuts.append(t)
        if base / m >= 2.0 * math.pi:
            break
        k += 1
    return cuts


def phi_f(f: ForcingSpec, m: int, a: float, b: float, theta: float,
          spec: Optional[numerics.QuadratureSpec] = None) -> float:
    """Resonance functional int_0^{2 pi} f(theta + m t) C(m t) dt."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if f.is_zero():
        return 0.0
    spec = spec or numerics.QuadratureSpec()
    cuts = sorted({0.0, 2.0 * math.pi, *_c_corner_cuts(m, a, b)})
    total = 0.0
    for lo, hi in zip(cuts, cuts[1:]):
        total += numerics.integrate(
            lambda t: float(f.value(theta + m * t))
            * action_angle.reference_C(a, b, m * t),
            lo, hi, spec).value
    return total


def phi_f_prime(f: ForcingSpec, m: int, a: float, b: float, theta: float,
                spec: Optional[numerics.QuadratureSpec] = None) -> float:
    """Derivative of the resonance functional, via the forcing's derivative."""
    return phi_f(f.derivative(), m, a, b, theta, spec)


@dataclass(frozen=True)
class ConditionReport:
    frequency: FrequencyClass
    phi_min: Optional[float] = None
    phi_max: Optional[float] = None
    rc_lhs_range: Optional[tuple] = None
    rc_rhs: Optional[float] = None
    rc_holds: Optional[str] = None          # "yes" | "no" | "equality_within_tol"
    nrc_lhs: Optional[float] = None
    nrc_rhs: Optional[float] = None
    nrc_holds: Optional[str] = None
    zero_set: tuple = ()
    phi_identically_zero: bool = False

    @property
    def verdict(self) -> str:
        return self.rc_holds if self.rc_holds is not None else self.nrc_holds

    def to_text(self) -> str:
        lines = []
        if isinstance(self.frequency, RationalFrequency):
            lines.append(f"frequency: rational, omega = {self.frequency.n}/{self.frequency.m}")
        else:
            lines.append("frequency: irrational "
                         f"(no convergent accepted up to q={self.frequency.convergents[-1][1]})")
        if self.rc_holds is not None:
            lo, hi = self.rc_lhs_range
            lines.append(f"resonant condition: lhs range [{lo:.9g}, {hi:.9g}], "
                         f"rhs {self.rc_rhs:.9g} -> {self.rc_holds}")
            lines.append(f"phi range: [{self.phi_min:.9g}, {self.phi_max:.9g}]")
            if self.phi_identically_zero:
                lines.append("phi is identically zero (degenerate zero set)")
            elif self.zero_set:
                for theta, dphi in self.zero_set:
                    lines.append(f"  phi zero at theta={theta:.9g}, phi'={dphi:.9g}")
            else:
                lines.append("  phi has no zeros (zero set empty)")
        if self.nrc_holds is not None:
            lines.append(f"non-resonant condition: lhs {self.nrc_lhs:.9g}, "
                         f"rhs {self.nrc_rhs:.9g} -> {self.nrc_holds}")
        return "\n".join(lines)

    def zero_set_rows(self):
        return [[theta, dphi] for theta, dphi in self.zero_set]


def _range_with_refinement(fn, dfn, n_grid: int = 512):
    """Extreme values of a smooth 2 pi periodic function: coarse grid plus
    root-refined critical points of the derivative."""
    import numpy as np
    grid = np.linspace(0.0, 2.0 * math.pi, n_grid, endpoint=False)
    vals = [fn(t) for t in grid]
    dvals = [dfn(t) for t in grid]
    candidates = list(vals)
    for i in range(n_grid):
        j = (i + 1) % n_grid
        lo, hi = grid[i], grid[i] + 2.0 * math.pi / n_grid
        if dvals[i] == 0.0:
            continue
        if dvals[i] * dvals[j] < 0.0:
            t_star = numerics.find_root(dfn, lo, hi)
            candidates.append(fn(t_star))
    return min(candidates), max(candidates), list(zip(grid, vals))


def check_resonant(sys: OscillatorSystem, mq, tol: float = 1e-8,
                   n_grid: int = 512) -> ConditionReport:
    """Resonant boundedness condition: the constant 4(b g+ - a g-) must avoid
    the closed range of sqrt(b)(sqrt(a)+sqrt(b)) Phi_f.

    Verdict is three-way: yes (outside by more than tol), no (strictly
    inside by more than tol), equality_within_tol otherwise.
    """
    m, n = mq
    a, b = sys.slopes
    gp, gm = sys.perturbation.limits
    scale = math.sqrt(b) * (math.sqrt(a) + math.sqrt(b))
    f = sys.forcing

    phi_lo, phi_hi, _ = _range_with_refinement(
        lambda t: phi_f(f, m, a, b, t),
        lambda t: phi_f_prime(f, m, a, b, t),
        n_grid)
    lhs_lo, lhs_hi = scale * phi_lo, scale * phi_hi
    if lhs_lo > lhs_hi:
        lhs_lo, lhs_hi = lhs_hi, lhs_lo
    rhs = 4.0 * (b * gp - a * gm)

    outside = max(lhs_lo - rhs, rhs - lhs_hi)   # > 0 when rhs outside the range
    if outside > tol:
        verdict = "yes"
    elif outside < -tol:
        verdict = "no"
    else:
        verdict = "equality_within_tol"

    zeros, identically_zero = zero_set_A(f, m, a, b, tol=tol)
    return ConditionReport(
        frequency=RationalFrequency(m=m, n=n),
        phi_min=phi_lo, phi_max=phi_hi,
        rc_lhs_range=(lhs_lo, lhs_hi), rc_rhs=rhs, rc_holds=verdict,
        zero_set=tuple(zeros), phi_identically_zero=identically_zero)


def check_nonresonant(sys: OscillatorSystem, tol: float = 1e-8) -> ConditionReport:
    """Non-resonant boundedness condition (b - a)[f] != b g+ - a g-."""
    freq = classify_system(sys)
    if not isinstance(freq, IrrationalFrequency):
        raise ValueError("non-resonant check requires an irrational frequency")
    a, b = sys.slopes
    gp, gm = sys.perturbation.limits
    lhs = (b - a) * sys.forcing.mean
    rhs = b * gp - a * gm
    diff = abs(lhs - rhs)
    if diff > tol:
        verdict = "yes"
    elif diff == 0.0:
        verdict = "no"
    else:
        verdict = "equality_within_tol"
    return ConditionReport(frequency=freq, nrc_lhs=lhs, nrc_rhs=rhs,
                           nrc_holds=verdict)


def zero_set_A(f: ForcingSpec, m: int, a: float, b: float, tol: float = 1e-8,
               n_grid: int = 512):
    """All zeros of Phi_f in [0, 2 pi), each with Phi_f' there; returns
    (zeros, identically_zero).  A forcing whose functional vanishes on the
    whole grid is reported as degenerate rather than as 512 zeros."""
    import numpy as np
    grid = np.linspace(0.0, 2.0 * math.pi, n_grid, endpoint=False)
    vals = [phi_f(f, m, a, b, t) for t in grid]
    if all(abs(v) <= tol for v in vals):
        return [], True
    zeros = []
    for i in range(n_grid):
        j = (i + 1) % n_grid
        lo = grid[i]
        hi = grid[i] + 2.0 * math.pi / n_grid
        vi, vj = vals[i], vals[j]
        if vi == 0.0:
            zeros.append(lo)
        elif vi * vj < 0.0:
            zeros.append(numerics.find_root(lambda t: phi_f(f, m, a, b, t), lo, hi))
    return [(t, phi_f_prime(f, m, a, b, t)) for t in zeros], False
