import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate as sint

from normlab.errors import DomainError, NonConvergent, NonIntegrable, NoBracket
from normlab.numerics import (DEFAULT_TOL, Tolerances, find_root_monotone, gamma, integrate, log_gamma,
                              optimize_1d)


def test_integrate_spec_examples():
    assert integrate(lambda t: t ** -0.5, 0, 1).value == pytest.approx(2.0, abs=1e-8)
    assert integrate(lambda t: np.log(1 / t) ** 2, 0, 1).value == pytest.approx(2.0, abs=1e-8)
    with pytest.raises(NonIntegrable):
        integrate(lambda t: 1 / t, 0, 1)


@pytest.mark.parametrize("a", [0.5, 1.0, 2.0, 3.7, 10.0, 40.0])
def test_log_moment_identity_against_mpmath(a):
    exact = float(mpmath.gamma(a + 1))
    r = integrate(lambda t: np.abs(np.log(t)) ** a, 0, 1)
    assert r.value == pytest.approx(exact, rel=1e-8)
    assert r.abs_error_estimate <= 1e-6 * exact


@pytest.mark.parametrize("f, lo, hi", [
    (lambda t: np.exp(-t) * np.sin(t) ** 2, 0.0, math.inf),
    (lambda t: 1 / (1 + t * t), 0.0, math.inf),
    (lambda t: t ** -0.9, 0.0, 1.0),
    (lambda t: np.abs(np.log(t)) * t ** -0.3, 0.0, 1.0),
    (lambda t: np.sqrt(np.abs(t - 0.3)), 0.0, 1.0),
    (lambda t: np.cos(30 * t), 0.0, 2.0),
])
def test_integrate_against_scipy(f, lo, hi):
    ref, _ = sint.quad(f, lo, hi, limit=500, epsabs=1e-13, epsrel=1e-12)
    assert integrate(f, lo, hi).value == pytest.approx(ref, rel=1e-7, abs=1e-10)


def test_divergence_and_reversed_limits():
    with pytest.raises(NonIntegrable):
        integrate(lambda t: 1 / t, 1, math.inf)
    with pytest.raises(NonIntegrable):
        integrate(lambda t: t ** -1.5, 0, 1)
    assert integrate(lambda t: t, 1, 0).value == pytest.approx(-0.5)
    assert integrate(lambda t: t, 2, 2).value == 0.0
    with pytest.raises(DomainError):
        integrate(lambda t: t, -math.inf, 0)


def test_budget_exhaustion_is_nonconvergent():
    with pytest.raises(NonConvergent):
        integrate(lambda t: np.sin(1 / t), 0, 1, Tolerances(1e-14, 1e-14, 20))


def test_large_exponent_underflow_does_not_fake_convergence():
    # t^1000 has almost all mass next to t = 1
    assert integrate(lambda t: t ** 1000, 0, 1).value == pytest.approx(1 / 1001, rel=1e-8)
    assert integrate(lambda t: np.maximum(0, t - 0.5) ** 2, 0, 1).value == pytest.approx(1 / 24, rel=1e-9)


@given(st.lists(st.floats(-3, 3), min_size=1, max_size=6), st.lists(st.floats(-3, 3), min_size=1, max_size=6),
       st.floats(-2, 2), st.floats(-2, 2))
@settings(max_examples=60, deadline=None)
def test_integrate_is_linear_on_polynomials(c1, c2, a, b):
    f = np.polynomial.Polynomial(c1)
    g = np.polynomial.Polynomial(c2)
    If, Ig = integrate(f, 0, 1), integrate(g, 0, 1)
    Ih = integrate(lambda t: a * f(t) + b * g(t), 0, 1)
    budget = Ih.abs_error_estimate + abs(a) * If.abs_error_estimate + abs(b) * Ig.abs_error_estimate
    assert abs(Ih.value - a * If.value - b * Ig.value) <= budget + 1e-12
    exact = f.integ()(1) - f.integ()(0)
    # the reported error estimate covers the true error
    assert abs(If.value - exact) <= If.abs_error_estimate + 1e-13


def test_gamma_examples():
    assert gamma(1) == pytest.approx(1.0, rel=1e-14)
    assert gamma(3) == pytest.approx(2.0, rel=1e-14)
    assert gamma(5) == pytest.approx(24.0, rel=1e-14)
    with pytest.raises(DomainError):
        gamma(0)


@given(st.floats(0.01, 160))
@settings(max_examples=200)
def test_gamma_against_math(x):
    assert gamma(x) == pytest.approx(math.gamma(x), rel=1e-12)
    assert log_gamma(x) == pytest.approx(math.lgamma(x), rel=1e-12, abs=1e-12)


def test_gamma_recurrence():
    for x in np.arange(1.0, 20.01, 0.5):
        assert abs(gamma(x + 1) - x * gamma(x)) <= 1e-10 * gamma(x + 1)


def test_log_gamma_beyond_overflow():
    assert log_gamma(500.0) == pytest.approx(math.lgamma(500.0), rel=1e-13)


@pytest.mark.parametrize("g, lo, hi", [(lambda x: x - 2, 0, 10), (lambda x: x ** 3 - 8, 0, 10),
                                       (math.log, 0.1, 10)])
def test_root_examples(g, lo, hi):
    root = find_root_monotone(g, lo, hi)
    assert root == pytest.approx(2.0 if g(2.0) == 0 else 1.0, rel=1e-10)


def test_root_bracket_expansion_and_failure():
    assert find_root_monotone(lambda x: x - 50.0, 1.0, 2.0) == pytest.approx(50.0)
    with pytest.raises(NoBracket):
        find_root_monotone(lambda x: 1.0 + 0 * x, 1.0, 2.0)


def test_optimize_examples():
    x, v = optimize_1d(lambda p: p * p / (p - 1), 1, 4, "min")
    assert (x, v) == (pytest.approx(2.0, abs=1e-6), pytest.approx(4.0, rel=1e-10))
    x, v = optimize_1d(lambda p: (p - 2) ** 2, 1, 3, "min")
    assert x == pytest.approx(2.0, abs=1e-6) and v == pytest.approx(0.0, abs=1e-12)
    x, v = optimize_1d(lambda p: -(p - 2) ** 2, 1, 3, "max")
    assert x == pytest.approx(2.0, abs=1e-6) and v == pytest.approx(0.0, abs=1e-12)


def test_determinism():
    h = lambda p: math.sin(3 * p) + 0.1 * p
    assert optimize_1d(h, 0, 5, "min") == optimize_1d(h, 0, 5, "min")
    g = lambda x: x ** 3 - 2
    assert find_root_monotone(g, 0, 3) == find_root_monotone(g, 0, 3)


def test_tolerances_validation():
    with pytest.raises(DomainError):
        Tolerances(abs_tol=0)
    t = Tolerances().tightened(10)
    assert t.rel_tol == pytest.approx(1e-9)


@pytest.mark.parametrize("f, lo, hi", [
    (np.sin, -3.0, 3.0),
    (np.polynomial.Polynomial([-1.125, 0.75, 2.25]), 0.0, 1.0),
    (lambda t: np.log(t) + 1.0, 0.0, 1.0),
])
def test_integrals_that_cancel_to_zero(f, lo, hi):
    r = integrate(f, lo, hi)
    assert abs(r.value) <= DEFAULT_TOL.abs_tol
    assert abs(r.value) <= r.abs_error_estimate + 1e-15
