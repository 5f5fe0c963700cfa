"""Shared numerical kernel: adaptive quadrature, turning-point integrals,
bracketed root finding, and finite-difference derivatives.

All routines are pure functions of their inputs and deterministic
run-to-run (panel subdivision order is fixed by a sequence counter,
never by float ties).
"""

import heapq
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

from scipy.optimize import brentq

from .errors import DomainError, NoBracket, NonConvergent, StencilOutOfDomain

__all__ = [
    "QuadratureSpec",
    "RootSpec",
    "QuadResult",
    "DerivativeResult",
    "integrate",
    "integrate_turning",
    "find_root",
    "fd_derivative",
]


@dataclass(frozen=True)
class QuadratureSpec:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    max_subdivisions: int = 2000

    def __post_init__(self):
        if not (self.abs_tol > 0.0 and self.rel_tol > 0.0):
            raise ValueError("quadrature tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")


@dataclass(frozen=True)
class RootSpec:
    abs_tol: float = 1e-12
    max_iters: int = 200

    def __post_init__(self):
        if not self.abs_tol > 0.0:
            raise ValueError("abs_tol must be positive")


class QuadResult(NamedTuple):
    value: float
    error: float


class DerivativeResult(NamedTuple):
    value: float
    error: float


# 15-point Kronrod extension of 7-point Gauss (abscissae on [-1, 1]).
_XGK = (
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.0,
)
_WGK = (
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
)
# Gauss weights for the odd-index Kronrod nodes.
_WG = (
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
)


def _eval(fn, s):
    v = fn(s)
    v = float(v)
    if not math.isfinite(v):
        raise DomainError(f"integrand returned non-finite value {v} at s={s}")
    return v


def _gk15(fn, a, b):
    """One Gauss-Kronrod panel; returns (kronrod, |kronrod - gauss|)."""
    c = 0.5 * (a + b)
    half = 0.5 * (b - a)
    fc = _eval(fn, c)
    kron = _WGK[7] * fc
    gauss = _WG[3] * fc
    for j in range(7):
        x = half * _XGK[j]
        f1 = _eval(fn, c - x)
        f2 = _eval(fn, c + x)
        kron += _WGK[j] * (f1 + f2)
        if j % 2 == 1:
            gauss += _WG[j // 2] * (f1 + f2)
    kron *= half
    gauss *= half
    return kron, abs(kron - gauss)


def integrate(fn: Callable[[float], float], lo: float, hi: float,
              spec: QuadratureSpec | None = None) -> QuadResult:
    """Adaptive quadrature of ``fn`` over [lo, hi].

    Panels are bisected worst-error-first with a fixed nested rule per
    panel; ordering is bit-stable across runs.  Raises NonConvergent if
    the subdivision budget is exhausted before the tolerance is met.
    """
    spec = spec or QuadratureSpec()
    if lo > hi:
        raise ValueError("integrate requires lo <= hi")
    if lo == hi:
        return QuadResult(0.0, 0.0)

    val, err = _gk15(fn, lo, hi)
    heap = [(-err, 0, lo, hi, val, err)]
    seq = 1
    total_val, total_err = val, err
    for _ in range(spec.max_subdivisions):
        if total_err <= max(spec.abs_tol, spec.rel_tol * abs(total_val)):
            return QuadResult(total_val, total_err)
        neg_err, _, a, b, v, e = heapq.heappop(heap)
        m = 0.5 * (a + b)
        if m == a or m == b:  # interval at float resolution; keep as is
            heapq.heappush(heap, (0.0, seq, a, b, v, e))
            seq += 1
            continue
        v1, e1 = _gk15(fn, a, m)
        v2, e2 = _gk15(fn, m, b)
        total_val += (v1 + v2) - v
        total_err += (e1 + e2) - e
        heapq.heappush(heap, (-e1, seq, a, m, v1, e1))
        heapq.heappush(heap, (-e2, seq + 1, m, b, v2, e2))
        seq += 2
    if total_err <= max(spec.abs_tol, spec.rel_tol * abs(total_val)):
        return QuadResult(total_val, total_err)
    raise NonConvergent(
        f"quadrature error {total_err:.3e} above tolerance after "
        f"{spec.max_subdivisions} subdivisions")


def _sqrt_recip(fn_under_sqrt, s, anchor, scale):
    v = float(fn_under_sqrt(s))
    if v <= 0.0:
        # Tolerate roundoff right at the flagged simple zero; anything
        # deeper inside the interval is a genuine domain violation.
        if abs(s - anchor) <= 1e-10 * scale:
            v = abs(v)
            if v == 0.0:
                v = 5e-324
        else:
            raise DomainError(
                f"fn_under_sqrt non-positive ({v}) strictly inside interval at s={s}")
    return v


def integrate_turning(fn_under_sqrt: Callable[[float], float], lo: float, hi: float,
                      singular_at: str, spec: QuadratureSpec | None = None) -> float:
    """Integrate 1/sqrt(fn_under_sqrt) over [lo, hi] where the argument has a
    simple zero at the flagged endpoint(s).

    The substitution s = endpoint -/+ u**2 regularizes a simple zero, so the
    transformed integrand is smooth and plain adaptive quadrature applies.
    ``singular_at`` is one of "lo", "hi", "both".
    """
    spec = spec or QuadratureSpec()
    if singular_at not in ("lo", "hi", "both"):
        raise ValueError("singular_at must be 'lo', 'hi' or 'both'")
    if lo > hi:
        raise ValueError("integrate_turning requires lo <= hi")
    if lo == hi:
        return 0.0
    scale = max(hi - lo, 1.0)

    def from_hi(a, b):
        # s = hi - u^2, u in [sqrt(hi-b), sqrt(hi-a)]
        def g(u):
            s = hi - u * u
            return 2.0 * u / math.sqrt(_sqrt_recip(fn_under_sqrt, s, hi, scale))
        return integrate(g, math.sqrt(hi - b), math.sqrt(hi - a), spec).value

    def from_lo(a, b):
        # s = lo + u^2, u in [sqrt(a-lo), sqrt(b-lo)]
        def g(u):
            s = lo + u * u
            return 2.0 * u / math.sqrt(_sqrt_recip(fn_under_sqrt, s, lo, scale))
        return integrate(g, math.sqrt(a - lo), math.sqrt(b - lo), spec).value

    if singular_at == "hi":
        return from_hi(lo, hi)
    if singular_at == "lo":
        return from_lo(lo, hi)
    mid = 0.5 * (lo + hi)
    return from_lo(lo, mid) + from_hi(mid, hi)


def find_root(fn: Callable[[float], float], lo: float, hi: float,
              spec: RootSpec | None = None) -> float:
    """Locate a root of ``fn`` bracketed by [lo, hi].

    Delegates to a bracketing bisection/secant hybrid that never leaves
    the bracket.  Raises NoBracket when fn(lo) * fn(hi) > 0.
    """
    spec = spec or RootSpec()
    f_lo = float(fn(lo))
    f_hi = float(fn(hi))
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if f_lo * f_hi > 0.0:
        raise NoBracket(f"no sign change on [{lo}, {hi}]: f(lo)={f_lo}, f(hi)={f_hi}")
    try:
        return float(brentq(fn, lo, hi, xtol=spec.abs_tol, rtol=8.9e-16,
                            maxiter=spec.max_iters))
    except RuntimeError as exc:  # scipy signals iteration-budget exhaustion this way
        raise NonConvergent(str(exc)) from exc


def _central_diff(fn, x, order, h):
    total = 0.0
    coef = 1.0
    for i in range(order + 1):
        offset = (0.5 * order - i) * h
        s = x + offset
        try:
            v = float(fn(s))
        except Exception as exc:
            raise StencilOutOfDomain(f"stencil point {s} failed: {exc}") from exc
        if not math.isfinite(v):
            raise StencilOutOfDomain(f"stencil point {s} returned non-finite value")
        total += coef * v
        coef *= -(order - i) / (i + 1.0)
    return total / h**order


def fd_derivative(fn: Callable[[float], float], x: float, order: int,
                  base_step: float | None = None) -> DerivativeResult:
    """Central finite-difference estimate of the order-th derivative at x,
    with one Richardson refinement.  Intended for hypothesis spot checks
    only; never used inside the dynamics.
    """
    if not 1 <= order <= 6:
        raise ValueError("order must be in 1..6")
    h = base_step if base_step is not None else 0.02 * max(1.0, abs(x))
    if h <= 0.0:
        raise ValueError("base_step must be positive")
    d1 = _central_diff(fn, x, order, h)
    d2 = _central_diff(fn, x, order, 0.5 * h)
    value = (4.0 * d2 - d1) / 3.0
    return DerivativeResult(value, abs(value - d2))
