"""Return maps on the section theta = 0 and their high-energy asymptotics:
numerical returns in scaled (t0, rho) coordinates, the resonant first-order
coefficients l1/l2, the non-resonant coefficients Sigma1/Sigma2, and the
averaged twist integral.

Scaling convention: eps is pinned to H0**-1/2 so rho0 = eps**2 * H0 = 1 at
the start of every measured return; H is the full Hamiltonian value (action
plus the potential/forcing correction at the section point), which kills
the leading bookkeeping error between action and energy coordinates.
"""

import csv
import math
import os
import tempfile
from dataclasses import dataclass
from typing import Optional

from . import action_angle, model, numerics
from .errors import IsochronError
from .flow import FlowSpec, PhaseState, angle_return
from .model import OscillatorSystem

__all__ = [
    "ScaledCoords",
    "ReturnRecord",
    "VerifyRow",
    "ConvergenceTable",
    "resonant_return",
    "asymptotic_l1l2",
    "nonresonant_sigma",
    "averaged_twist",
    "verify_map_asymptotics",
]


@dataclass(frozen=True)
class ScaledCoords:
    t0: float
    rho: float
    eps: float

    def __post_init__(self):
        if not (self.rho > 0.0 and self.eps > 0.0):
            raise ValueError("rho and eps must be positive")


@dataclass(frozen=True)
class ReturnRecord:
    t0: float
    t1: float
    rho0: float
    rho1: float
    elapsed: float
    eps: float


def _hamiltonian_value(sys: OscillatorSystem, action: float, x: float, t: float) -> float:
    """Full Hamiltonian I + (2 pi / omega) (G(x) - x f(t)) at a chart point."""
    corr = model.eval_G(sys.perturbation, x) - x * float(sys.forcing.value(t))
    return action + 2.0 * math.pi / sys.omega * corr


def _return_record(sys: OscillatorSystem, revolutions: int, t0: float, I0: float,
                   spec: Optional[FlowSpec] = None) -> ReturnRecord:
    p = sys.potential
    h0 = sys.omega * I0 / (2.0 * math.pi)
    level = action_angle.turning_points(p, h0)
    H0 = _hamiltonian_value(sys, I0, level.beta, t0)
    eps = H0 ** -0.5
    start = PhaseState(level.beta, 0.0, t0)
    end, elapsed = angle_return(sys, start, revolutions, spec)
    h1 = 0.5 * end.y**2 + float(model.eval_potential(p, end.x, 0))
    I1 = 2.0 * math.pi * h1 / sys.omega   # exact for isochronous wells
    H1 = _hamiltonian_value(sys, I1, end.x, end.t)
    return ReturnRecord(t0=t0, t1=end.t, rho0=eps * eps * H0, rho1=eps * eps * H1,
                        elapsed=elapsed, eps=eps)


def resonant_return(sys: OscillatorSystem, mq, t0: float, I0: float,
                    spec: Optional[FlowSpec] = None) -> ReturnRecord:
    """Measured return over n angle revolutions (about 2*pi*m in time) from
    the section point (beta, 0) at time t0, in scaled coordinates."""
    m, n = mq
    if m < 1 or n < 1 or math.gcd(m, n) != 1:
        raise ValueError("resonance (m, n) must be coprime positive integers")
    if abs(sys.omega - n / m) > 1e-6:
        raise ValueError(f"omega={sys.omega} is not n/m={n}/{m} within tolerance")
    if I0 < 1e2:
        raise ValueError("resonant returns are measured at I0 >= 100")
    return _return_record(sys, n, t0, I0, spec)


def _c_weighted(fn, m: int, a: float, b: float,
                spec: Optional[numerics.QuadratureSpec] = None) -> float:
    """(1/m) * integral over one map period of fn(time) * C(time), i.e.
    int_0^{2 pi} fn(t0 + m v) C(m v) dv after u = m v.  Split at the corner
    set of C so every panel sees a smooth integrand."""
    spec = spec or numerics.QuadratureSpec()
    per = action_angle.c_period(a, b)
    s = 0.5 * math.pi / math.sqrt(a)
    hi = 2.0 * math.pi * m
    cuts = [0.0]
    k = 0
    while True:
        for corner in (s + k * per, s + math.pi / math.sqrt(b) + k * per):
            if 0.0 < corner < hi:
                cuts.append(corner)
        if s + k * per >= hi:
            break
        k += 1
    cuts.append(hi)
    cuts = sorted(set(cuts))
    total = 0.0
    for lo_u, hi_u in zip(cuts, cuts[1:]):
        total += numerics.integrate(
            lambda u: fn(u) * action_angle.reference_C(a, b, u), lo_u, hi_u, spec).value
    return total / m


def asymptotic_l1l2(sys: OscillatorSystem, mq, t0: float):
    """First-order resonant map coefficients:
    l1 = 2 omega (g+/a - g-/b) - (1/sqrt(a)) * conv(f, C),
    l2 = conv(f', C), with conv the period integral against C."""
    m, _ = mq
    a, b = sys.slopes
    gp, gm = sys.perturbation.limits
    f = sys.forcing
    conv_f = 0.0 if f.is_zero() else _c_weighted(lambda u: float(f.value(t0 + u)), m, a, b)
    fprime = f.derivative()
    conv_fp = 0.0 if fprime.is_zero() else _c_weighted(
        lambda u: float(fprime.value(t0 + u)), m, a, b)
    l1 = 2.0 * sys.omega * (gp / a - gm / b) - conv_f / math.sqrt(a)
    l2 = conv_fp
    return (l1, l2)


def _c_weighted_one_rev(fn, sys: OscillatorSystem,
                        spec: Optional[numerics.QuadratureSpec] = None) -> float:
    """int_0^{2 pi} C(theta/omega) fn(t0 + theta/omega) dtheta as
    omega * integral over one angle period (substituting phi = theta/omega)."""
    spec = spec or numerics.QuadratureSpec()
    a, b = sys.slopes
    s = 0.5 * math.pi / math.sqrt(a)
    per = action_angle.c_period(a, b)
    cuts = [0.0, s, s + math.pi / math.sqrt(b), per]
    total = 0.0
    for lo_u, hi_u in zip(cuts, cuts[1:]):
        total += numerics.integrate(
            lambda u: fn(u) * action_angle.reference_C(a, b, u), lo_u, hi_u, spec).value
    return sys.omega * total


def nonresonant_sigma(sys: OscillatorSystem, t0: float, rho0: float):
    """First-order non-resonant map coefficients (Sigma1, Sigma2)."""
    if not rho0 > 0.0:
        raise ValueError("rho0 must be positive")
    a, b = sys.slopes
    omega = sys.omega
    gp, gm = sys.perturbation.limits
    f = sys.forcing
    conv_f = 0.0 if f.is_zero() else _c_weighted_one_rev(
        lambda u: float(f.value(t0 + u)), sys)
    fprime = f.derivative()
    conv_fp = 0.0 if fprime.is_zero() else _c_weighted_one_rev(
        lambda u: float(fprime.value(t0 + u)), sys)
    sigma1 = omega ** -1.5 * math.sqrt(math.pi / rho0) * (
        2.0 * omega * gp / a - 2.0 * omega * gm / b - conv_f / math.sqrt(a))
    sigma2 = 2.0 * omega ** -1.5 * math.sqrt(math.pi * rho0 / a) * conv_fp
    return (sigma1, sigma2)


def averaged_twist(sys: OscillatorSystem, rho0: float) -> float:
    """t0-averaged twist integral of the non-resonant map (closed form):
    -2 pi^{3/2} omega^{-1/2} rho0^{-3/2} [(g+/a - g-/b) - [f](1/a - 1/b)]."""
    if not rho0 > 0.0:
        raise ValueError("rho0 must be positive")
    a, b = sys.slopes
    gp, gm = sys.perturbation.limits
    bracket = (gp / a - gm / b) - sys.forcing.mean * (1.0 / a - 1.0 / b)
    return -2.0 * math.pi**1.5 * sys.omega**-0.5 * rho0**-1.5 * bracket


@dataclass(frozen=True)
class VerifyRow:
    t0: float
    I0: float
    eps: float
    measured_dt: float
    predicted_dt: float
    measured_drho: float
    predicted_drho: float
    residual: float


_CSV_COLUMNS = ("t0", "I0", "eps", "measured_dt", "predicted_dt",
                "measured_drho", "predicted_drho", "residual")


@dataclass(frozen=True)
class ConvergenceTable:
    mode: str
    rows: tuple

    def residual_ladder(self):
        """Per-t0 residual sequences ordered by increasing I0."""
        by_t0 = {}
        for r in sorted(self.rows, key=lambda r: (r.t0, r.I0)):
            by_t0.setdefault(r.t0, []).append(r.residual)
        return by_t0

    def trend_ok(self, floor: float = 1e-6) -> bool:
        """True when every t0's residual decreases along the I0 ladder
        (pairs below the noise floor are not required to order)."""
        for seq in self.residual_ladder().values():
            for prev, nxt in zip(seq, seq[1:]):
                if nxt >= prev and not (prev < floor and nxt < floor):
                    return False
        return True

    def to_csv(self, path: str):
        write_csv(path, _CSV_COLUMNS,
                  [[getattr(r, c) for c in _CSV_COLUMNS] for r in self.rows])


def write_csv(path: str, header, rows):
    """Write a CSV atomically (temp file in the target directory, then rename)."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for row in rows:
                writer.writerow([f"{v:.17g}" if isinstance(v, float) else v
                                 for v in row])
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def verify_map_asymptotics(sys: OscillatorSystem, mode: str, t0_grid, I0_ladder,
                           mq=None, spec: Optional[FlowSpec] = None) -> ConvergenceTable:
    """Measure returns along an increasing I0 ladder and compare against the
    first-order map prediction; the per-row residual is the worst channel
    mismatch divided by eps, which must shrink along the ladder.
    """
    if mode not in ("resonant", "nonresonant"):
        raise ValueError("mode must be 'resonant' or 'nonresonant'")
    ladder = sorted(I0_ladder)
    if len(ladder) < 3:
        raise ValueError("the I0 ladder needs at least 3 rungs")
    if mode == "resonant":
        if mq is None:
            exact = model.exact_frequency(sys)
            if exact is None:
                raise ValueError("resonant mode needs (m, n); none supplied or derivable")
            mq = (exact.denominator, exact.numerator)
        m, n = mq
    rows = []
    for t0 in t0_grid:
        for I0 in ladder:
            if mode == "resonant":
                rec = resonant_return(sys, mq, t0, I0, spec)
                l1, l2 = asymptotic_l1l2(sys, mq, t0)
                a, _ = sys.slopes
                pred_dt = -rec.eps * m * math.sqrt(math.pi / sys.omega) * l1 / math.sqrt(rec.rho0)
                pred_drho = -2.0 * rec.eps * m * math.sqrt(math.pi / (a * sys.omega)) \
                    * l2 * math.sqrt(rec.rho0)
                base = 2.0 * math.pi * m
            else:
                rec = _return_record(sys, 1, t0, I0, spec)
                s1, s2 = nonresonant_sigma(sys, t0, rec.rho0)
                pred_dt = -rec.eps * s1
                pred_drho = -rec.eps * s2
                base = 2.0 * math.pi / sys.omega
            m_dt = rec.elapsed - base
            m_drho = rec.rho1 - rec.rho0
            residual = max(abs(m_dt - pred_dt), abs(m_drho - pred_drho)) / rec.eps
            rows.append(VerifyRow(t0, I0, rec.eps, m_dt, pred_dt,
                                  m_drho, pred_drho, residual))
    return ConvergenceTable(mode, tuple(rows))
