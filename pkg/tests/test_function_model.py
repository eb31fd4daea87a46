import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate as sint

from corpus import corpus
from normlab.errors import DomainError, EvaluationError, NormInfinite
from normlab.function_model import (Expression, PrescribedTail, Tabulated, TailFunction,
                                    anti_distribution, is_non_increasing, lp_norm, read_csv,
                                    rearrangement, sample_from_tail, tail_of, unit_grid)
from normlab.orlicz import YoungOrlicz, delta_envelope


def test_anti_distribution_examples():
    f = Tabulated([5, 5, 5, 0, 0, 0, 0, 0, 0, 0])
    assert anti_distribution(f, 3) == pytest.approx(0.3, abs=1e-15)
    assert anti_distribution(Expression("sin(7*t)"), 0) == 1.0
    assert anti_distribution(f, 0) == 1.0
    assert anti_distribution(Expression("t"), 0.25) == pytest.approx(0.75, abs=1e-12)


def test_anti_distribution_against_level_set_oracle():
    # |sin(6t)| >= 1/2 on [pi/36, 5pi/36] and [7pi/36, 11pi/36] intersected with (0,1)
    lo1, hi1 = math.pi / 36, 5 * math.pi / 36
    lo2, hi2 = 7 * math.pi / 36, min(11 * math.pi / 36, 1.0)
    exact = (hi1 - lo1) + (hi2 - lo2)
    assert anti_distribution(Expression("sin(6*t)"), 0.5) == pytest.approx(exact, abs=1e-10)


def test_rearrangement_examples():
    np.testing.assert_array_equal(rearrangement(Tabulated([1, 3, 2])).values, [3, 2, 1])
    f = Expression("1/(t+1)")
    star = rearrangement(f)
    grid = np.linspace(0.001, 0.999, 200)
    assert np.max(np.abs(star(grid) - f(grid))) <= 1e-6
    star = rearrangement(Expression("t"))
    assert np.max(np.abs(star(grid) - (1 - grid))) <= 1e-3


def test_rearrangement_of_non_monotone_expression():
    # (2t - 1)^2 has d(s) = 1 - sqrt(s), so f*(u) = (1 - u)^2
    star = rearrangement(Expression("(2*t - 1)^2"))
    grid = np.linspace(0.01, 0.99, 99)
    assert np.max(np.abs(star(grid) - (1 - grid) ** 2)) <= 1e-3


def test_lp_norm_examples():
    assert lp_norm(Expression("t^(-0.25)"), 2) == pytest.approx(math.sqrt(2), abs=1e-6)
    for p in (1, 2.5, 7, math.inf):
        assert lp_norm(Expression("3"), p) == pytest.approx(3.0, rel=1e-10)
    with pytest.raises(NormInfinite):
        lp_norm(Expression("t^(-0.5)"), 2)
    with pytest.raises(DomainError):
        lp_norm(Expression("t"), 0.5)


def test_lp_norm_against_scipy():
    for src, p in (("abs(ln(t))", 3.0), ("sin(6*t)", 1.5), ("t^(-0.2)", 4.0)):
        f = Expression(src)
        ref = sint.quad(lambda t: abs(float(f(t))) ** p, 0, 1, limit=400)[0] ** (1 / p)
        assert lp_norm(f, p) == pytest.approx(ref, rel=1e-7)


def test_lp_norm_large_exponent_does_not_overflow():
    # ||ln t||_p = Gamma(p+1)^(1/p)
    p = 300.0
    assert lp_norm(Expression("abs(ln(t))"), p) == pytest.approx(math.exp(math.lgamma(p + 1) / p), rel=1e-7)


def test_ess_sup():
    assert lp_norm(Expression("sin(6*t)"), math.inf) == pytest.approx(1.0, abs=1e-9)
    assert lp_norm(Tabulated([1, -4, 2]), math.inf) == 4.0
    with pytest.raises(NormInfinite):
        lp_norm(Expression("abs(ln(t))"), math.inf)


def test_tail_of_examples():
    T = tail_of(Expression("2"))
    np.testing.assert_array_equal(T(np.array([0.0, 1.0, 1.999, 2.0, 3.0])), [1, 1, 1, 0, 0])
    T = tail_of(Expression("t"))
    s = np.linspace(0, 1, 11)
    assert np.max(np.abs(T(s) - (1 - s))) <= 1e-12
    T0 = delta_envelope(YoungOrlicz(2.0, 0.0))
    assert tail_of(PrescribedTail(T0)) is T0


def test_tail_of_tabulated_counts_cells():
    T = tail_of(Tabulated([5, 5, 5, 0, 0, 0, 0, 0, 0, 0]))
    assert T(np.array([0.0]))[0] == pytest.approx(0.3)
    assert T(np.array([5.0]))[0] == 0.0


def test_sample_examples():
    s = sample_from_tail(tail_of(Expression("2")), 5, 0)
    np.testing.assert_array_equal(s.values, [2, 2, 2, 2, 2])
    T = TailFunction(lambda t: np.clip(1 - t, 0, 1), support_hint=1.0)
    s = sample_from_tail(T, 10_000, 1)
    x = np.sort(s.values)
    ecdf_hi = np.arange(1, x.size + 1) / x.size
    ecdf_lo = np.arange(0, x.size) / x.size
    dev = max(np.max(np.abs(ecdf_hi - x)), np.max(np.abs(ecdf_lo - x)))
    assert dev <= math.sqrt(math.log(2 / 0.01) / (2 * 10_000))
    eta = sample_from_tail(delta_envelope(YoungOrlicz(2.0, 0.0)), 100_000, 3)
    assert 0.008 <= np.mean(eta.values > 10) <= 0.012


def test_sample_reproducible():
    T = delta_envelope(YoungOrlicz(3.0, 1.0))
    a, b = sample_from_tail(T, 1000, 42), sample_from_tail(T, 1000, 42)
    assert a.values.tobytes() == b.values.tobytes()
    assert sample_from_tail(T, 1000, 43).values.tobytes() != a.values.tobytes()


def test_tail_function_validation():
    with pytest.raises(DomainError):
        TailFunction(lambda t: np.minimum(1.0, t))
    with pytest.raises(DomainError):
        TailFunction(lambda t: 2.0 + 0 * t)


def test_model_validation(tmp_path):
    with pytest.raises(EvaluationError):
        Tabulated([1.0, math.nan])
    with pytest.raises(DomainError):
        Tabulated([])
    path = tmp_path / "f.csv"
    path.write_text("value\n3\n1\n2\n", encoding="utf-8")
    f = read_csv(path)
    np.testing.assert_array_equal(f.values, [3, 1, 2])
    assert f(np.array([0.1, 0.5, 0.9])).tolist() == [3, 1, 2]


CORPUS = corpus()


@pytest.mark.parametrize("f", CORPUS, ids=repr)
@pytest.mark.parametrize("p", [1.0, 2.0, 3.5])
def test_equimeasurability(f, p):
    a = lp_norm(f, p)
    assert lp_norm(rearrangement(f), p) == pytest.approx(a, rel=1e-4)


@pytest.mark.parametrize("f", CORPUS, ids=repr)
def test_rearrangement_non_increasing_and_jensen(f):
    star = rearrangement(f)
    assert is_non_increasing(star)
    v = star(unit_grid())
    assert np.all(np.diff(v) <= 1e-12)
    norms = [lp_norm(f, p) for p in (1.0, 1.5, 2.0, 3.0)]
    assert all(a <= b * (1 + 1e-8) for a, b in zip(norms, norms[1:]))


@pytest.mark.parametrize("f", CORPUS[:6], ids=repr)
def test_anti_distribution_non_increasing(f):
    sig = np.linspace(0, 5, 40)
    d = [anti_distribution(f, s) for s in sig]
    assert all(b <= a + 1e-12 for a, b in zip(d, d[1:]))


@given(st.lists(st.floats(-100, 100, allow_nan=False), min_size=1, max_size=40), st.randoms())
@settings(max_examples=100, deadline=None)
def test_tabulated_shuffle_is_exact(values, rnd):
    f = Tabulated(values)
    shuffled = list(values)
    rnd.shuffle(shuffled)
    g = Tabulated(shuffled)
    np.testing.assert_array_equal(rearrangement(f).values, rearrangement(g).values)
    for p in (1.0, 2.0, 3.5):
        assert lp_norm(f, p) == lp_norm(g, p)
    star = rearrangement(f).values
    assert np.all(np.diff(star) <= 0)
    assert np.all(star >= 0)
