import math

import numpy as np
import pytest

from isochron import numerics as nm
from isochron.errors import DomainError, NoBracket, NonConvergent, StencilOutOfDomain


def test_integrate_quarter_circle():
    res = nm.integrate(lambda s: math.sqrt(max(1.0 - s * s, 0.0)), -1.0, 1.0)
    assert abs(res.value - math.pi / 2) < 1e-8


def test_integrate_constant():
    res = nm.integrate(lambda s: 1.0, 0.0, 2 * math.pi)
    assert abs(res.value - 2 * math.pi) < 1e-12


def test_integrate_cos_squared():
    res = nm.integrate(lambda s: math.cos(s) ** 2, 0.0, 2 * math.pi)
    assert abs(res.value - math.pi) < 1e-10


def test_integrate_empty_and_invalid():
    assert nm.integrate(math.sin, 1.0, 1.0).value == 0.0
    with pytest.raises(ValueError):
        nm.integrate(math.sin, 1.0, 0.0)


def test_integrate_additivity():
    rng = np.random.default_rng(42)
    fn = lambda s: math.exp(-s * s) * math.cos(3 * s)
    for _ in range(10):
        a, b, c = np.sort(rng.uniform(-3, 3, size=3))
        whole = nm.integrate(fn, a, c)
        parts = nm.integrate(fn, a, b).value + nm.integrate(fn, b, c).value
        assert abs(whole.value - parts) < 2e-10


def test_integrate_error_estimate_attached():
    res = nm.integrate(lambda s: math.sin(s), 0.0, math.pi)
    assert res.error >= 0.0
    assert abs(res.value - 2.0) < max(res.error, 1e-10)


def test_integrate_budget_exhaustion():
    spec = nm.QuadratureSpec(abs_tol=1e-14, rel_tol=1e-14, max_subdivisions=1)
    with pytest.raises(NonConvergent):
        nm.integrate(lambda s: 1.0 / (1e-4 + s * s), -1.0, 1.0, spec)


def test_integrate_rejects_non_finite_integrand():
    with pytest.raises(DomainError):
        nm.integrate(lambda s: float("inf") if s > 0.5 else 1.0, 0.0, 1.0)


def test_turning_arcsin():
    val = nm.integrate_turning(lambda s: 1.0 - s * s, 0.0, 1.0, "hi")
    assert abs(val - math.pi / 2) < 1e-10


def test_turning_harmonic_half_period():
    # oracle: half period of u'' + u = 0 is pi, independent of energy
    h = 0.5
    val = nm.integrate_turning(lambda s: 2.0 * (h - 0.5 * s * s), -1.0, 1.0, "both")
    assert abs(val - math.pi) < 1e-10


def test_turning_linear_zero():
    val = nm.integrate_turning(lambda s: 1.0 - s, 0.0, 1.0, "hi")
    assert abs(val - 2.0) < 1e-10


def test_turning_lo_flag():
    val = nm.integrate_turning(lambda s: s, 0.0, 1.0, "lo")
    assert abs(val - 2.0) < 1e-10


def test_turning_agrees_with_plain_quadrature():
    # harmonic family: truncated plain quadrature plus analytic arcsin tails
    for h in (0.5, 1.0, 2.0):
        beta = math.sqrt(2.0 * h)
        fn = lambda s: 2.0 * (h - 0.5 * s * s)
        full = nm.integrate_turning(fn, -beta, beta, "both")
        delta = 1e-6 * beta
        inner = nm.integrate(lambda s: 1.0 / math.sqrt(fn(s)),
                             -beta + delta, beta - delta).value
        tail = 2.0 * (math.pi / 2 - math.asin((beta - delta) / beta))
        assert abs(full - (inner + tail)) < 1e-6


def test_turning_detects_interior_zero():
    with pytest.raises(DomainError):
        nm.integrate_turning(lambda s: (1.0 - s) * (0.1 - s), 0.0, 1.0, "hi")


def test_turning_bad_flag():
    with pytest.raises(ValueError):
        nm.integrate_turning(lambda s: 1.0 - s, 0.0, 1.0, "middle")


def test_find_root_examples():
    assert abs(nm.find_root(lambda s: s * s - 4.0, 0.0, 10.0) - 2.0) < 1e-10
    assert abs(nm.find_root(math.cos, 0.0, 3.0) - math.pi / 2) < 1e-10
    # turning point of the harmonic well at energy 2
    assert abs(nm.find_root(lambda s: 0.5 * s * s - 2.0, 0.0, 10.0) - 2.0) < 1e-10


def test_find_root_rebracket():
    spec = nm.RootSpec(abs_tol=1e-12)
    for fn, lo, hi in ((lambda s: s * s - 4.0, 0.0, 10.0),
                       (math.cos, 0.0, 3.0),
                       (lambda s: math.expm1(s) - 1.0, 0.0, 2.0)):
        x = nm.find_root(fn, lo, hi, spec)
        assert fn(x - 1e-10) * fn(x + 1e-10) <= 0.0


def test_find_root_endpoint_roots():
    assert nm.find_root(lambda s: s, 0.0, 1.0) == 0.0
    assert nm.find_root(lambda s: s - 1.0, 0.0, 1.0) == 1.0


def test_find_root_no_bracket():
    with pytest.raises(NoBracket):
        nm.find_root(lambda s: s * s + 1.0, -1.0, 1.0)


def test_fd_examples():
    assert abs(nm.fd_derivative(lambda s: s ** 3, 1.0, 2).value - 6.0) < 1e-8
    assert abs(nm.fd_derivative(math.sin, 0.0, 1).value - 1.0) < 1e-8
    assert abs(nm.fd_derivative(math.exp, 0.0, 4).value - 1.0) < 1e-4


def test_fd_error_estimate():
    res = nm.fd_derivative(math.exp, 0.0, 2)
    assert abs(res.value - 1.0) < 10 * max(res.error, 1e-10)


def test_fd_validations():
    with pytest.raises(ValueError):
        nm.fd_derivative(math.sin, 0.0, 7)
    with pytest.raises(ValueError):
        nm.fd_derivative(math.sin, 0.0, 1, base_step=0.0)
    with pytest.raises(StencilOutOfDomain):
        nm.fd_derivative(math.sqrt, 0.01, 2, base_step=0.5)


def test_spec_validation():
    with pytest.raises(ValueError):
        nm.QuadratureSpec(abs_tol=0.0)
    with pytest.raises(ValueError):
        nm.QuadratureSpec(max_subdivisions=0)
    with pytest.raises(ValueError):
        nm.RootSpec(abs_tol=-1.0)
