"""Oscillator model: the triple (V, g, f), built-in families, and numerical
verification of the standing hypotheses (convexity, slope limits, decay).

Potential evaluators are written with numpy ufuncs so they accept both
scalars and arrays; all specs are immutable after construction.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from . import numerics
from .errors import DomainError, NonConvergent

__all__ = [
    "AsymmetricLinear",
    "BonheureFabry",
    "Harmonic",
    "CustomPotential",
    "ZeroPerturbation",
    "ArctanPerturbation",
    "BoundedCustom",
    "ForcingSpec",
    "OscillatorSystem",
    "eval_potential",
    "asymptotic_slopes",
    "probe_slopes",
    "eval_W",
    "eval_Phi_split",
    "eval_G",
    "check_hypotheses",
    "HypothesisCheck",
    "HypothesisReport",
    "omega_from_slopes",
    "exact_frequency",
]


def omega_from_slopes(a: float, b: float) -> float:
    """Frequency of the oscillator with asymptotic slopes (a, b)."""
    return 2.0 / (1.0 / math.sqrt(a) + 1.0 / math.sqrt(b))


# ---------------------------------------------------------------------------
# Potentials
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AsymmetricLinear:
    """Piecewise-quadratic well: V(x) = (a/2)x^2 for x >= 0, (b/2)x^2 for x < 0.

    The restoring force jumps in slope at 0, so V is only C^1 there; all
    higher derivatives exist away from 0.
    """
    a: float
    b: float

    def __post_init__(self):
        if not (self.a > 0.0 and self.b > 0.0):
            raise ValueError("slopes a, b must be positive")

    @property
    def slopes(self):
        return (self.a, self.b)

    def value(self, x, deriv=0):
        if not isinstance(x, np.ndarray):
            k = self.a if x >= 0.0 else self.b
            if deriv == 0:
                return 0.5 * k * x * x
            if deriv == 1:
                return k * x
            if deriv == 2:
                return k
            raise ValueError("deriv must be 0, 1 or 2")
        k = np.where(x >= 0.0, self.a, self.b)
        if deriv == 0:
            return 0.5 * k * x * x
        if deriv == 1:
            return k * x
        if deriv == 2:
            return k * np.ones_like(x, dtype=float)
        raise ValueError("deriv must be 0, 1 or 2")


def _bf_right(x, sig, deriv, sqrt):
    """Quotient form of the smooth isochronous well, stable for x > -1."""
    P = x * x + 2.0 * x
    S = sqrt(1.0 + sig * P)
    N = P * P
    D = 4.0 + 2.0 * (1.0 + sig) * P + 4.0 * (x + 1.0) * S
    V = N / D
    if deriv == 0:
        return V
    Pp = 2.0 * (x + 1.0)
    Sp = 0.5 * sig * Pp / S
    Np = 2.0 * P * Pp
    Dp = 2.0 * (1.0 + sig) * Pp + 4.0 * S + 4.0 * (x + 1.0) * Sp
    Vp = (Np - V * Dp) / D
    if deriv == 1:
        return Vp
    Spp = sig / S - (sig * (x + 1.0)) ** 2 / S**3
    Npp = 2.0 * Pp * Pp + 4.0 * P
    Dpp = 4.0 * (1.0 + sig) + 8.0 * Sp + 4.0 * (x + 1.0) * Spp
    return (Npp - 2.0 * Vp * Dp - V * Dpp) / D


def _bf_left(x, sig, deriv, sqrt):
    """Rationalized form for x <= -1.

    The quotient form is 0/0 at x = -2 (numerator and denominator both
    vanish to second order) and cancels catastrophically nearby; after
    rationalizing twice it collapses to V = W*M / (c*T) with
    W = 1 - v*S, M = (1 - sig + 2 sig v^2) - (1 + sig) v S, T = 1 + sig v^2,
    v = x + 1, whose terms all carry one sign on v <= 0.
    """
    v = x + 1.0
    S = sqrt(1.0 - sig + sig * v * v)
    c = 2.0 * (1.0 - sig) ** 2
    q = 1.0 - sig + 2.0 * sig * v * v
    W = 1.0 - v * S
    M = q - (1.0 + sig) * v * S
    T = 1.0 + sig * v * v
    if deriv == 0:
        return W * M / (c * T)
    Wp = -q / S
    Mp = 4.0 * sig * v - (1.0 + sig) * q / S
    Tp = 2.0 * sig * v
    U = W * M
    Up = Wp * M + W * Mp
    if deriv == 1:
        return Up / (c * T) - U * Tp / (c * T * T)
    r = 3.0 * (1.0 - sig) + 2.0 * sig * v * v
    Wpp = -sig * v * r / S**3
    Mpp = 4.0 * sig - (1.0 + sig) * sig * v * r / S**3
    Upp = Wpp * M + 2.0 * Wp * Mp + W * Mpp
    return (Upp / (c * T) - 2.0 * Up * Tp / (c * T * T)
            - U * 2.0 * sig / (c * T * T) + 2.0 * U * Tp * Tp / (c * T**3))


@dataclass(frozen=True)
class BonheureFabry:
    """Smooth isochronous family with period 2*pi and slope limits
    a = (1+sqrt(sigma))**-2, b = (1-sqrt(sigma))**-2 for sigma in [0, 1).

    sigma = 0 collapses to the unit harmonic well x^2/2.
    """
    sigma: float

    def __post_init__(self):
        if not 0.0 <= self.sigma < 1.0:
            raise ValueError("sigma must lie in [0, 1)")

    @property
    def slopes(self):
        r = math.sqrt(self.sigma)
        return (1.0 / (1.0 + r) ** 2, 1.0 / (1.0 - r) ** 2)

    def value(self, x, deriv=0):
        if deriv not in (0, 1, 2):
            raise ValueError("deriv must be 0, 1 or 2")
        if not isinstance(x, np.ndarray):
            branch = _bf_right if x > -1.0 else _bf_left
            return branch(float(x), self.sigma, deriv, math.sqrt)
        x = np.asarray(x, dtype=float)
        out = np.empty_like(x)
        right = x > -1.0
        if np.any(right):
            out[right] = _bf_right(x[right], self.sigma, deriv, np.sqrt)
        if not np.all(right):
            out[~right] = _bf_left(x[~right], self.sigma, deriv, np.sqrt)
        return out


@dataclass(frozen=True)
class Harmonic:
    """V(x) = (k/2) x^2 with frequency sqrt(k)."""
    k: float

    def __post_init__(self):
        if not self.k > 0.0:
            raise ValueError("k must be positive")

    @property
    def slopes(self):
        return (self.k, self.k)

    def value(self, x, deriv=0):
        if deriv == 0:
            return 0.5 * self.k * x * x
        if deriv == 1:
            return self.k * x
        if deriv == 2:
            return self.k if not isinstance(x, np.ndarray) \
                else self.k * np.ones_like(x, dtype=float)
        raise ValueError("deriv must be 0, 1 or 2")


@dataclass(frozen=True)
class CustomPotential:
    """User-supplied evaluators for V, V', V'' plus declared slope limits."""
    v: Callable[[float], float]
    dv: Callable[[float], float]
    d2v: Callable[[float], float]
    a_inf: float
    b_inf: float

    @property
    def slopes(self):
        return (self.a_inf, self.b_inf)

    def value(self, x, deriv=0):
        fn = (self.v, self.dv, self.d2v)[deriv]
        try:
            return fn(x)
        except Exception as exc:
            raise DomainError(f"custom potential evaluator failed at x={x}: {exc}") from exc


PotentialSpec = AsymmetricLinear | BonheureFabry | Harmonic | CustomPotential


def eval_potential(p: PotentialSpec, x, deriv: int = 0):
    """V(x) or one of its first two derivatives."""
    return p.value(x, deriv)


def probe_slopes(p: PotentialSpec, scales=(1e4, 1e5, 1e6), rel_tol=1e-3):
    """Numerical slope limits of V'' probed at three scales each side.

    The probes must agree to rel_tol or the limit is declared non-convergent.
    """
    out = []
    for sign in (+1.0, -1.0):
        vals = [float(eval_potential(p, sign * s, 2)) for s in scales]
        ref = vals[-1]
        if ref <= 0.0 or any(abs(v - ref) > rel_tol * max(abs(ref), 1e-12) for v in vals):
            raise NonConvergent(
                f"V'' probes at x={sign:+.0f}*{scales} do not settle: {vals}")
        out.append(ref)
    return (out[0], out[1])


def asymptotic_slopes(p: PotentialSpec):
    """Slope limits (a, b) of V'' at +/- infinity.

    Built-ins return their exact declared values; custom potentials are
    probed numerically with an agreement check across scales.
    """
    if isinstance(p, CustomPotential):
        probed = probe_slopes(p)
        for declared, got, side in zip(p.slopes, probed, "ab"):
            if abs(declared - got) > 1e-3 * max(abs(declared), 1.0):
                raise NonConvergent(
                    f"declared slope {side}={declared} disagrees with probe {got}")
        return probed
    return p.slopes


def eval_W(p: PotentialSpec, x: float) -> float:
    """W(x) = V(x)/V'(x), extended by W(0) = 0."""
    if x == 0.0:
        return 0.0
    return float(eval_potential(p, x, 0)) / float(eval_potential(p, x, 1))


def eval_Phi_split(p: PotentialSpec, x, deriv: int = 0):
    """Deviation of V from its asymptotic parabola, split at 0:
    V - (a/2)x^2 for x >= 0 and V - (b/2)x^2 for x < 0 (and derivatives).
    """
    a, b = asymptotic_slopes(p)
    k = np.where(np.asarray(x) >= 0.0, a, b)
    v = eval_potential(p, x, deriv)
    if deriv == 0:
        return v - 0.5 * k * np.asarray(x, dtype=float) ** 2
    if deriv == 1:
        return v - k * np.asarray(x, dtype=float)
    return v - k


# ---------------------------------------------------------------------------
# Bounded perturbations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ZeroPerturbation:
    @property
    def limits(self):
        return (0.0, 0.0)

    def value(self, x):
        return 0.0 if not isinstance(x, np.ndarray) else np.zeros_like(x, dtype=float)

    def primitive(self, x):
        return self.value(x)


@dataclass(frozen=True)
class ArctanPerturbation:
    """g(x) = scale * arctan(x); limits +/- scale*pi/2."""
    scale: float

    @property
    def limits(self):
        return (0.5 * math.pi * self.scale, -0.5 * math.pi * self.scale)

    def value(self, x):
        if not isinstance(x, np.ndarray):
            return self.scale * math.atan(x)
        return self.scale * np.arctan(x)

    def primitive(self, x):
        if not isinstance(x, np.ndarray):
            return self.scale * (x * math.atan(x) - 0.5 * math.log1p(x * x))
        return self.scale * (x * np.arctan(x) - 0.5 * np.log1p(x * x))


@dataclass(frozen=True)
class BoundedCustom:
    """User-supplied bounded perturbation with declared limits at +/- infinity."""
    fn: Callable[[float], float]
    g_plus: float
    g_minus: float

    @property
    def limits(self):
        return (self.g_plus, self.g_minus)

    def value(self, x):
        return self.fn(x)

    def primitive(self, x):
        lo, hi = (x, 0.0) if x < 0.0 else (0.0, x)
        val = numerics.integrate(self.fn, lo, hi).value
        return -val if x < 0.0 else val


PerturbationSpec = ZeroPerturbation | ArctanPerturbation | BoundedCustom


def eval_G(g: PerturbationSpec, x: float) -> float:
    """Primitive G(x), the integral of g from 0 to x (analytic for built-ins)."""
    return float(g.primitive(x))


# ---------------------------------------------------------------------------
# Forcing
# ---------------------------------------------------------------------------

_MAX_FORCING_DEGREE = 64


@dataclass(frozen=True)
class ForcingSpec:
    """Finite trigonometric polynomial f(t) = c0 + sum_k ck cos kt + sk sin kt.

    Exactly 2*pi periodic and infinitely smooth by construction; the mean
    over one period is c0.
    """
    fourier_cos: tuple = (0.0,)
    fourier_sin: tuple = ()

    def __post_init__(self):
        cos = tuple(float(c) for c in self.fourier_cos) or (0.0,)
        sin = tuple(float(s) for s in self.fourier_sin)
        if any(not math.isfinite(c) for c in cos + sin):
            raise ValueError("forcing coefficients must be finite")
        if max(len(cos) - 1, len(sin)) > _MAX_FORCING_DEGREE:
            raise ValueError(f"forcing degree capped at {_MAX_FORCING_DEGREE}")
        object.__setattr__(self, "fourier_cos", cos)
        object.__setattr__(self, "fourier_sin", sin)

    @property
    def mean(self) -> float:
        return self.fourier_cos[0]

    @property
    def degree(self) -> int:
        return max(len(self.fourier_cos) - 1, len(self.fourier_sin))

    def is_zero(self) -> bool:
        return all(c == 0.0 for c in self.fourier_cos) and \
            all(s == 0.0 for s in self.fourier_sin)

    def value(self, t):
        if not isinstance(t, np.ndarray):
            out = self.fourier_cos[0]
            for k, c in enumerate(self.fourier_cos[1:], start=1):
                if c != 0.0:
                    out += c * math.cos(k * t)
            for k, s in enumerate(self.fourier_sin, start=1):
                if s != 0.0:
                    out += s * math.sin(k * t)
            return out
        out = self.fourier_cos[0] * np.ones_like(t)
        for k, c in enumerate(self.fourier_cos[1:], start=1):
            if c != 0.0:
                out = out + c * np.cos(k * t)
        for k, s in enumerate(self.fourier_sin, start=1):
            if s != 0.0:
                out = out + s * np.sin(k * t)
        return out

    def derivative(self) -> "ForcingSpec":
        """f' as another trigonometric polynomial."""
        K = self.degree
        cos = [0.0] * (K + 1)
        sin = [0.0] * K
        for k, c in enumerate(self.fourier_cos[1:], start=1):
            sin[k - 1] += -k * c
        for k, s in enumerate(self.fourier_sin, start=1):
            cos[k] += k * s
        return ForcingSpec(tuple(cos), tuple(sin))


# ---------------------------------------------------------------------------
# Assembled system
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OscillatorSystem:
    """The forced oscillator x'' + V'(x) + g(x) = f(t)."""
    potential: PotentialSpec
    perturbation: PerturbationSpec = ZeroPerturbation()
    forcing: ForcingSpec = ForcingSpec()
    omega: float = field(default=0.0)

    def __post_init__(self):
        if self.omega == 0.0:
            a, b = self.potential.slopes
            object.__setattr__(self, "omega", omega_from_slopes(a, b))

    @property
    def slopes(self):
        return self.potential.slopes


def _sqrt_fraction(q: Fraction) -> Optional[Fraction]:
    num = math.isqrt(q.numerator)
    den = math.isqrt(q.denominator)
    if num * num == q.numerator and den * den == q.denominator:
        return Fraction(num, den)
    return None


def exact_frequency(sys: OscillatorSystem) -> Optional[Fraction]:
    """Exact frequency as a fraction when the slope square roots are rational.

    The isochronous family with parameter sigma always has frequency 1;
    piecewise-linear and harmonic wells qualify when their slopes are
    perfect squares of rationals.  Returns None when no exact value exists.
    """
    if isinstance(sys.potential, BonheureFabry):
        return Fraction(1)
    a, b = sys.potential.slopes
    try:
        ra = _sqrt_fraction(Fraction(a).limit_denominator(10**9))
        rb = _sqrt_fraction(Fraction(b).limit_denominator(10**9))
    except (ValueError, OverflowError):
        return None
    if ra is None or rb is None:
        return None
    # only trust the algebra if the float slopes are exactly representable
    if float(ra * ra) != a or float(rb * rb) != b:
        return None
    return 2 / (1 / ra + 1 / rb)


# ---------------------------------------------------------------------------
# Hypothesis verification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HypothesisCheck:
    name: str
    passed: bool
    detail: str


@dataclass(frozen=True)
class HypothesisReport:
    checks: tuple

    @property
    def all_pass(self) -> bool:
        return all(c.passed for c in self.checks)

    def __str__(self):
        lines = [f"[{'PASS' if c.passed else 'FAIL'}] {c.name}: {c.detail}"
                 for c in self.checks]
        return "\n".join(lines)


def _decay_trend(fn, power, order, scales=(1e2, 1e3, 1e4)):
    """|x^power * fn^(order)(x)| sampled at increasing scales; returns
    (ok, values).  Finite-difference order-6 estimates at these scales sit
    on a rounding floor ~ eps * |fn| * (2/h)^order, so the trend check only
    flags increases that clear that floor; values below it count as zero
    (documented heuristic, not a limit computation).
    """
    ok = True
    vals = {}
    for sign in (+1.0, -1.0):
        seq = []
        floors = []
        for s in scales:
            x = sign * s
            h = s / 20.0
            d = numerics.fd_derivative(fn, x, order, base_step=h)
            seq.append(abs(x**power * d.value))
            span = abs(fn(x * (1.0 + 0.2 * sign))) + abs(fn(x))
            floors.append(2.0**order * 64.0 * 2.3e-16 * span
                          * (2.0 / h)**order * s**power + 1e-9)
        vals[sign] = seq
        for (prev, nxt, floor_nxt) in zip(seq, seq[1:], floors[1:]):
            if nxt > 1.05 * prev + floor_nxt:
                ok = False
    return ok, vals


def check_hypotheses(sys: OscillatorSystem) -> HypothesisReport:
    """Numerically verify the standing assumptions on (V, g).

    Produces a report and never raises; each failed probe becomes a failed
    check with the offending values in the detail string.  Decay conditions
    are verified as trends over three scales rather than true limits, and
    the near-zero derivative check is heuristic (one-sided limit existence
    cannot be decided from samples).
    """
    p = sys.potential
    g = sys.perturbation
    checks = []

    def run(name, fn):
        try:
            passed, detail = fn()
        except Exception as exc:
            passed, detail = False, f"probe failed: {exc}"
        checks.append(HypothesisCheck(name, passed, detail))

    def convexity():
        grid = np.concatenate([-np.logspace(-3, 3, 25), np.logspace(-3, 3, 25)])
        v = np.asarray(eval_potential(p, grid, 0), dtype=float)
        dv = np.asarray(eval_potential(p, grid, 1), dtype=float)
        d2v = np.asarray(eval_potential(p, grid, 2), dtype=float)
        ok = bool(np.all(v > 0.0) and np.all(dv * grid > 0.0) and np.all(d2v > 0.0))
        return ok, "V>0, x*V'>0, V''>0 on log grid |x| in [1e-3, 1e3]"

    def slope_limits():
        a, b = probe_slopes(p)
        da, db = p.slopes
        ok = abs(a - da) <= 1e-3 * max(abs(da), 1.0) and \
            abs(b - db) <= 1e-3 * max(abs(db), 1.0)
        return ok, f"V'' probes ({a:.6g}, {b:.6g}) vs declared ({da:.6g}, {db:.6g})"

    def v6_decay():
        ok, vals = _decay_trend(lambda x: float(eval_potential(p, x, 0)), 4, 6)
        return ok, f"|x^4 V(6)| at 1e2/1e3/1e4: +side {vals[1.0]}, -side {vals[-1.0]}"

    def g6_decay():
        if isinstance(g, ZeroPerturbation):
            return True, "g identically zero"
        ok, vals = _decay_trend(lambda x: float(g.value(x)), 6, 6)
        return ok, f"|x^6 g(6)| at 1e2/1e3/1e4: +side {vals[1.0]}, -side {vals[-1.0]}"

    def g_limits():
        gp, gm = g.limits
        got_p = float(g.value(1e6))
        got_m = float(g.value(-1e6))
        ok = abs(got_p - gp) < 1e-3 and abs(got_m - gm) < 1e-3
        return ok, f"g(+/-1e6) = ({got_p:.6g}, {got_m:.6g}) vs declared ({gp:.6g}, {gm:.6g})"

    def near_zero():
        # Heuristic: boundedness of low-order derivatives just off the origin.
        # The piecewise-linear well is only C^1 at 0, so probe outside |x| < 1e-6.
        bound = 1e6
        worst = 0.0
        for sign in (+1.0, -1.0):
            for x0 in (1e-2, 1e-1):
                d = numerics.fd_derivative(
                    lambda x: float(eval_potential(p, x, 2)), sign * x0, 1,
                    base_step=x0 / 4.0)
                worst = max(worst, abs(d.value))
        return worst < bound, (
            f"max |V'''| near 0 = {worst:.3g} (heuristic boundedness probe; "
            "existence of one-sided limits is not decidable from samples)")

    run("convexity", convexity)
    run("slope_limits", slope_limits)
    run("potential_decay", v6_decay)
    run("perturbation_decay", g6_decay)
    run("perturbation_limits", g_limits)
    run("near_zero_regularity", near_zero)
    return HypothesisReport(tuple(checks))
