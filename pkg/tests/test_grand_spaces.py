import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate as sint
from scipy.optimize import brentq

from normlab.errors import DomainError, NormInfinite
from normlab.function_model import Expression, Tabulated, lp_norm, tail_of
from normlab.grand_spaces import (GeneratingFunction, GrandZygmundSpace, coincidence_check, gls_detail,
                                  gls_norm, gzs_norm, gzs_tail_envelope)
from normlab.orlicz import YoungOrlicz, luxemburg_norm, scaled_tail_bound
from normlab.report import Status

G = GeneratingFunction


def constant_norm_oracle(c, p, gamma):
    return brentq(lambda mu: (c / mu) ** p * math.log(math.e + c / mu) ** gamma - 1.0,
                  1e-6 * c, 1e6 * c, xtol=1e-15, rtol=1e-14)


def test_degenerate_short_circuits():
    f = Expression("t^(-0.25)")
    assert gls_norm(f, G.degenerate(2)) == pytest.approx(math.sqrt(2), abs=1e-6)
    assert gls_norm(f, G.degenerate(3)) == lp_norm(f, 3)


def test_power_root_on_constant():
    assert gls_norm(Expression("1"), G.power_root(1)) == pytest.approx(1.0, rel=1e-6)


def test_double_singular_against_dense_grid():
    psi = G.double_singular(1, 4, 0, 0.25)
    ps = np.linspace(1, 4, 10_001)[1:-1]
    grid = np.max((4 / (4 - ps)) ** (1 / ps) * (4 - ps) ** 0.25)
    # the objective increases toward p = 1, so the sup is the limit there
    edge = (4 / 3) * 3 ** 0.25
    got = gls_detail(Expression("t^(-0.25)"), psi)
    assert got.value >= grid * (1 - 1e-9)
    assert got.value == pytest.approx(max(grid, edge), rel=1e-6)


def test_gls_infinite():
    with pytest.raises(NormInfinite) as exc:
        gls_norm(Expression("t^(-0.5)"), G.power_root(1, 1, 4))
    assert exc.value.endpoint is not None
    with pytest.raises(NormInfinite):
        gls_norm(Expression("t^(-0.5)"), G.degenerate(2))


def test_gls_lp_family_dual_oracle():
    # ||t^(-1/4)||_p = (4/(4-p))^(1/p) on (1,4); psi_m with m = 2 on that interval
    psi = G.power_root(2, 1, 4)
    ps = np.linspace(1, 4, 20_001)[1:-1]
    oracle = np.max((4 / (4 - ps)) ** (1 / ps) / np.sqrt(ps))
    # diverges at p -> 4 only when psi stays bounded there, which it does
    with pytest.raises(NormInfinite):
        gls_norm(Expression("t^(-0.25)"), psi)
    assert np.isfinite(oracle)


@pytest.mark.parametrize("src", ["1 + abs(ln(t))", "exp(-t)", "sin(6*t)", "t^(-0.1)"])
@pytest.mark.parametrize("psi", [G.power_root(1, 1, 9), G.power_root(2, 1, 9),
                                 G.double_singular(1, 6, 0.5, 0.5)], ids=["m1", "m2", "ds"])
def test_gls_dominates_random_slices(src, psi):
    f = Expression(src)
    v = gls_norm(f, psi)
    rng = np.random.default_rng(11)
    hi = psi.b if math.isfinite(psi.b) else 60.0
    for p in rng.uniform(psi.a, hi, 16):
        assert lp_norm(f, p) / psi(p) <= v * (1 + 1e-8)


def test_unbounded_domain_divergence_detected():
    # t^(-0.1) leaves L^p at p = 10
    with pytest.raises(NormInfinite):
        gls_norm(Expression("t^(-0.1)"), G.power_root(1))
    # ||1 + |ln t| ||_p grows linearly in p, faster than sqrt(p)
    with pytest.raises(NormInfinite):
        gls_norm(Expression("1 + abs(ln(t))"), G.power_root(2))
    assert math.isfinite(gls_norm(Expression("1 + abs(ln(t))"), G.power_root(1)))


def test_coincidence_monotone_input():
    rep = coincidence_check(Expression("1/(t+1)"), G.power_root(2, 1, 10))
    assert rep.status is Status.PASS
    assert rep.lhs == pytest.approx(rep.rhs, rel=1e-6)


def test_coincidence_shuffled_table():
    base = np.sort(np.random.default_rng(3).exponential(size=200))[::-1]
    shuffled = np.random.default_rng(4).permutation(base)
    psi = G.power_root(1, 1, 8)
    assert gls_norm(Tabulated(shuffled), psi) == gls_norm(Tabulated(base), psi)
    assert coincidence_check(Tabulated(shuffled), psi).status is Status.PASS


def test_coincidence_oscillating():
    f = Expression("abs(sin(20*t))*t^(-0.1)")
    rep = coincidence_check(f, G.degenerate(2))
    assert rep.status is Status.PASS
    ref = math.sqrt(sint.quad(lambda t: math.sin(20 * t) ** 2 * t ** -0.2, 0, 1, limit=400)[0])
    assert rep.rhs == pytest.approx(ref, rel=1e-7)
    assert rep.lhs == pytest.approx(ref, rel=1e-3)


def test_generating_function_validation():
    with pytest.raises(DomainError):
        G.custom("p - 2", 1, 5)
    with pytest.raises(DomainError):
        G.power_root(0)
    with pytest.raises(DomainError):
        G.double_singular(1, math.inf, 0, 0.5)
    with pytest.raises(DomainError):
        G.power_root(1, 3, 2)
    psi = G.custom("p^2", 1, 5)
    assert psi(2) == 4 and psi(6) == math.inf
    assert G.from_json(psi.to_dict()) == psi
    assert G.from_json({"kind": "power_root", "m": 2, "b": "inf"}) == G.power_root(2)


def test_gzs_singleton_is_luxemburg():
    f = Expression("t^(-0.2)")
    Z = GrandZygmundSpace.from_points([[2, 1]])
    assert gzs_norm(f, Z) == luxemburg_norm(f, YoungOrlicz(2, 1))


def test_gzs_constant_oracle():
    Z = GrandZygmundSpace.from_points([[1.5, 0.5], [2, 1], [4, 2], [3, 0.25]])
    want = max(constant_norm_oracle(1.7, p, g) for p, g in Z.points)
    assert gzs_norm(Expression("1.7"), Z) == pytest.approx(want, rel=1e-9)


@pytest.mark.parametrize("lam", [0.5, 2.0, 7.0])
def test_gzs_rho_homogeneity(lam):
    f = Expression("1 + abs(ln(t))")
    Z = GrandZygmundSpace.from_points([[2, 1], [3, 0.5]], rho="p")
    assert gzs_norm(f, Z.scaled(lam)) == pytest.approx(gzs_norm(f, Z) / lam, rel=1e-12)


def test_gzs_line_reproduces_one_dimensional_sup():
    f = Expression("1 + abs(ln(t))")
    ps = np.linspace(1.5, 5, 12)
    Z = GrandZygmundSpace.from_points([[p, 1.0] for p in ps], rho="sqrt(p)")
    want = max(luxemburg_norm(f, YoungOrlicz(p, 1.0)) / math.sqrt(p) for p in ps)
    assert gzs_norm(f, Z) == pytest.approx(want, rel=1e-12)


def test_gzs_rectangle_refines_above_grid():
    f = Expression("1 + abs(ln(t))")
    Z = GrandZygmundSpace.rectangle((1.5, 6, 5), (0.5, 2, 4), rho="p")
    from normlab.grand_spaces import gzs_detail
    d = gzs_detail(f, Z)
    assert d.value >= d.grid_value


def test_gzs_infinite():
    with pytest.raises(NormInfinite):
        gzs_norm(Expression("t^(-0.5)"), GrandZygmundSpace.from_points([[2, 1]]))


def test_gzs_validation():
    for pts in ([[1, 1]], [[2, 0]], []):
        with pytest.raises(DomainError):
            GrandZygmundSpace.from_points(pts)
    with pytest.raises(DomainError):
        GrandZygmundSpace.from_points([[2, 1]], rho="gamma - 1")


def test_tail_envelope_examples():
    single = GrandZygmundSpace.from_points([[2, 1]])
    t = np.array([0.0, 0.5, 3.0, 10.0])
    assert np.array_equal(gzs_tail_envelope(single, 2.0, t), scaled_tail_bound(YoungOrlicz(2, 1), 2.0, t))
    assert gzs_tail_envelope(single, 1.0, 0.0) == 1.0
    two = GrandZygmundSpace.from_points([[2, 1], [4, 1]])
    d4 = 1 / (1e4 * math.log(math.e + 10))
    d2 = 1 / (100 * math.log(math.e + 10))
    assert d4 < d2
    assert gzs_tail_envelope(two, 1.0, 10.0) == pytest.approx(d4, rel=1e-14)
    with pytest.raises(DomainError):
        gzs_tail_envelope(two, 0.0, 1.0)


@pytest.mark.parametrize("src", ["1 + abs(ln(t))", "t^(-0.2)", "exp(-t)", "abs(ln(t))^2"])
def test_gzs_tail_envelope_dominates(src):
    f = Expression(src)
    Z = GrandZygmundSpace.from_points([[1.5, 0.5], [2, 1], [3, 2]], rho="p")
    V = gzs_norm(f, Z)
    T = tail_of(f)
    t = V * np.geomspace(1e-2, 1e3, 64)
    assert np.all(T(t) <= gzs_tail_envelope(Z, V, t) + 1e-6)


@given(st.lists(st.tuples(st.floats(1.1, 6), st.floats(0.1, 3)), min_size=1, max_size=4),
       st.tuples(st.floats(1.1, 6), st.floats(0.1, 3)))
@settings(max_examples=15, deadline=None)
def test_enlarging_q_is_monotone(points, extra):
    f = Expression("1 + abs(ln(t))")
    small = GrandZygmundSpace.from_points(points)
    big = GrandZygmundSpace.from_points(points + [extra])
    assert gzs_norm(f, big) >= gzs_norm(f, small)
    t = np.geomspace(0.1, 100, 32)
    assert np.all(gzs_tail_envelope(big, 2.0, t) <= gzs_tail_envelope(small, 2.0, t))


@given(st.floats(0.0, 1e3))
def test_envelope_non_increasing_and_bounded(t):
    Z = GrandZygmundSpace.from_points([[2, 1], [4, 0.5]])
    a, b = gzs_tail_envelope(Z, 1.3, t), gzs_tail_envelope(Z, 1.3, t * 1.5 + 1e-3)
    assert 0 <= b <= a <= 1
