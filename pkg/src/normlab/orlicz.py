"""Young-Orlicz functions N(u) = |Cu|^p ln^alpha(e + |Cu|), Luxemburg norms,
the tail envelopes min(1, 1/N) and the moment integral they generate."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .errors import (DomainError, ModularNonMonotone, NoBracket, NonIntegrable,
                     NormInfinite, PreconditionUnmet)
from .function_model import (FunctionModel, TailFunction, expectation, lp_norm, tail_of,
                             tail_quantile)
from .numerics import DEFAULT_TOL, OVERFLOW_GUARD, Tolerances, find_root_monotone, integrate
from .report import VerificationReport


@dataclass(frozen=True)
class YoungOrlicz:
    p: float
    alpha: float = 0.0
    dilation: float = 1.0

    def __post_init__(self):
        if not self.p >= 1:
            raise DomainError("p must be >= 1")
        if not (self.dilation > 0 and math.isfinite(self.dilation)):
            raise DomainError("dilation must be a positive finite number")
        if not math.isfinite(self.alpha):
            raise DomainError("alpha must be finite")

    def __call__(self, u):
        x = np.abs(self.dilation * np.asarray(u, dtype=float))
        with np.errstate(all="ignore"):
            out = x ** self.p * np.log(np.e + x) ** self.alpha
        out = np.where(x == 0, 0.0, out)
        out = np.where(out > OVERFLOW_GUARD, math.inf, out)
        return out if out.ndim else float(out)

    def dilated(self, c):
        return replace(self, dilation=self.dilation * c)

    def describe(self):
        d = {"p": self.p, "alpha": self.alpha}
        if self.dilation != 1.0:
            d["dilation"] = self.dilation
        return d


def young_eval(N: YoungOrlicz, u):
    return N(u)


def _log_slope_max():
    # sup over u > 0 of u / ((e + u) ln(e + u)); N_{p,alpha} with alpha < 0 is
    # increasing in |u| (so the modular is monotone in mu) when
    # p > |alpha| times this number
    u = np.geomspace(1e-6, 1e12, 20001)
    return float(np.max(u / ((np.e + u) * np.log(np.e + u)))) * (1 + 1e-6)


_LOG_SLOPE_MAX = _log_slope_max()


# --------------------------------------------------------------------------
# Luxemburg norm

def _modular(f, N, mu, tol):
    return expectation(f, lambda v: N(v / mu), tol)


def _is_zero(f, tol):
    try:
        return lp_norm(f, 1, tol) == 0.0
    except NormInfinite:
        return False


@lru_cache(maxsize=4096)
def luxemburg_with_error(f: FunctionModel, N: YoungOrlicz, tol: Tolerances = DEFAULT_TOL):
    """(||f||_N, error estimate) where ||f||_N = inf{mu > 0 : E N(f/mu) <= 1}."""
    if _is_zero(f, tol):
        return 0.0, 0.0
    inner = tol.tightened(10.0)
    try:
        mu0 = N.dilation * lp_norm(f, N.p, inner)
    except NormInfinite:
        if N.alpha >= 0:
            raise NormInfinite(f"Luxemburg norm for N{N.describe()} is infinite: "
                               f"L^{N.p} norm already diverges") from None
        mu0 = N.dilation * lp_norm(f, 1, inner)
    if not mu0 > 0:
        mu0 = 1.0

    def G(mu):
        try:
            return _modular(f, N, mu, inner)[0] - 1.0
        except NonIntegrable:
            return math.inf

    # N satisfies the doubling condition, so a divergent modular at one scale
    # diverges at every scale.
    try:
        _modular(f, N, mu0, inner)
    except NonIntegrable as exc:
        raise NormInfinite(f"modular E N(f/mu) diverges for N{N.describe()}",
                           diagnosis=str(exc), endpoint=exc.endpoint) from None

    if N.alpha < 0 and not N.p > -N.alpha * _LOG_SLOPE_MAX:
        mus = mu0 * np.geomspace(1e-3, 1e3, 25)
        g = np.array([G(m) for m in mus])
        if np.any(np.diff(g) > 1e-9 * np.maximum(1.0, np.abs(g[:-1]))):
            raise ModularNonMonotone(f"mu -> E N(f/mu) is not decreasing for N{N.describe()}")

    try:
        mu = find_root_monotone(G, mu0 / 2.0, mu0 * 2.0,
                                Tolerances(abs_tol=min(tol.abs_tol, 1e-3 * tol.rel_tol * mu0),
                                           rel_tol=tol.rel_tol,
                                           max_subdivisions=tol.max_subdivisions))
    except NoBracket as exc:
        raise NormInfinite(f"no finite mu makes the modular <= 1 for N{N.describe()}",
                           diagnosis=str(exc)) from None
    value, qerr = _modular(f, N, mu, inner)
    h = 1e-4 * mu
    slope = abs((G(mu + h) - G(mu - h)) / (2 * h))
    err = (qerr + abs(value - 1.0)) / slope if slope > 0 else math.inf
    return float(mu), float(err + 4 * np.finfo(float).eps * mu)


def luxemburg_norm(f: FunctionModel, N: YoungOrlicz, tol: Tolerances = DEFAULT_TOL) -> float:
    return luxemburg_with_error(f, N, tol)[0]


def modular(f: FunctionModel, N: YoungOrlicz, mu: float, tol: Tolerances = DEFAULT_TOL) -> float:
    """E N(f/mu)."""
    return _modular(f, N, mu, tol)[0]


# --------------------------------------------------------------------------
# tail envelopes

def delta_tail_bound(N: YoungOrlicz, t):
    """min(1, 1/N(t))."""
    n = np.asarray(N(t), dtype=float)
    out = np.where(n <= 1.0, 1.0, 1.0 / np.where(n > 1.0, n, 1.0))
    return out if out.ndim else float(out)


def scaled_tail_bound(N: YoungOrlicz, K: float, t):
    """min(1, 1/N(t/K))."""
    if not K > 0:
        raise DomainError("K must be positive")
    return delta_tail_bound(N, np.asarray(t, dtype=float) / K)


def delta_envelope(N: YoungOrlicz, K: float = 1.0) -> TailFunction:
    """The tail function t -> min(1, 1/N(t/K))."""
    if not K > 0:
        raise DomainError("K must be positive")

    def T(t):
        return np.asarray(scaled_tail_bound(N, K, t), dtype=float)

    def q(u):
        # inf{t : T(t) < u} = K * inf{x : N(x) > 1/u}; exact via bit bisection
        return tail_quantile(T, u)

    return TailFunction(T, support_hint=math.inf, quantile=q,
                        label=f"Delta envelope p={N.p} alpha={N.alpha} K={K}")


def tail_bound_check(f: FunctionModel, N: YoungOrlicz, tol: Tolerances = DEFAULT_TOL,
                     n_grid: int = 64, slack: float = 1e-6) -> VerificationReport:
    """P(|f| > t) <= min(1, 1/N(t/K)) + slack with K the Luxemburg norm of f.

    The grid is t = K x for 64 log-spaced x in [1e-2, 1e3]; ``lhs`` is the
    largest excess of the tail over the envelope.  The budget is the envelope
    movement when K is perturbed by its error estimate.
    """
    K, eK = luxemburg_with_error(f, N, tol)
    if K == 0:
        return VerificationReport(name="tail", relation="le", lhs=0.0, rhs=slack,
                                  params={**N.describe(), "f": repr(f)}, extras={"K": 0.0})
    t = K * np.geomspace(1e-2, 1e3, n_grid)
    T = np.asarray(tail_of(f)(t), dtype=float)
    env = np.asarray(scaled_tail_bound(N, K, t), dtype=float)
    wide = np.asarray(scaled_tail_bound(N, K + eK, t), dtype=float)
    excess = T - env
    k = int(np.argmax(excess))
    return VerificationReport(
        name="tail", relation="le", lhs=float(excess[k]), rhs=slack,
        error_budget=float(np.max(np.abs(wide - env))),
        params={**N.describe(), "f": repr(f), "n_grid": n_grid},
        extras={"K": K, "K_error": eK, "worst_t": float(t[k]),
                "t_grid": t.tolist(), "tail": T.tolist(), "envelope": env.tolist()})


# --------------------------------------------------------------------------
# moment integral J(alpha, p, s) = s * int_0^inf t^(s-1) min(1, 1/N(t)) dt

class Regime(str, enum.Enum):
    ALPHA_BELOW_1 = "AlphaBelow1"
    ALPHA_EQ_1 = "AlphaEq1"
    ALPHA_ABOVE_1 = "AlphaAbove1"

    @classmethod
    def of(cls, alpha):
        if alpha < 1:
            return cls.ALPHA_BELOW_1
        if alpha == 1:
            return cls.ALPHA_EQ_1
        return cls.ALPHA_ABOVE_1


@dataclass(frozen=True)
class MomentBoundReport:
    s: float
    p: float
    alpha: float
    delta: float
    j_value: float
    abs_error_estimate: float
    t_star: float
    regime: Regime
    # filled in by regime_fit; a single J value carries no rate information
    fitted_exponent_or_slope: float = math.nan

    def to_dict(self):
        return {"s": self.s, "p": self.p, "alpha": self.alpha, "delta": self.delta,
                "j_value": self.j_value, "abs_error_estimate": self.abs_error_estimate,
                "t_star": self.t_star, "regime": self.regime.value,
                "fitted_exponent_or_slope": None if math.isnan(self.fitted_exponent_or_slope)
                else self.fitted_exponent_or_slope}


def _log_young(p, alpha, x):
    """ln N(e^x) with L = ln(e + e^x) computed without overflow."""
    return p * x + alpha * np.log(np.logaddexp(1.0, x))


def split_point(p, alpha, tol=DEFAULT_TOL):
    """t* with N_{p,alpha}(t*) = 1."""
    x = find_root_monotone(lambda x: float(_log_young(p, alpha, x)), -1.0, 1.0, tol.tightened(100.0))
    return math.exp(x)


@lru_cache(maxsize=1024)
def moment_bound_j(alpha: float, p: float, s: float, tol: Tolerances = DEFAULT_TOL) -> MomentBoundReport:
    """J = s int_0^inf t^(s-1) min(1, 1/N_{p,alpha}(t)) dt, split at N(t*) = 1.

    On (0, t*) the integrand is s t^(s-1), giving t*^s.  Beyond t* the
    substitution t = e^x turns it into s e^(-delta x) L(x)^(-alpha) with
    delta = p - s and L(x) = ln(e + e^x), which stays well scaled for small delta.
    """
    if not p >= 1:
        raise DomainError("p must be >= 1")
    if not s > 0:
        raise DomainError("s must be positive")
    if not s < p:
        raise DomainError("the moment bound requires s < p")
    delta = p - s
    t_star = split_point(p, alpha, tol)
    x_star = math.log(t_star)

    def h(x):
        x = np.asarray(x, dtype=float)
        with np.errstate(all="ignore"):
            return np.exp(-delta * (x - x_star) - alpha * np.log(np.logaddexp(1.0, x)))

    # factor e^(-delta x*) is pulled out so the integrand is O(1) at the split
    r = integrate(h, x_star, math.inf, tol)
    scale = s * math.exp(-delta * x_star)
    value = t_star ** s + scale * r.value
    err = scale * r.abs_error_estimate
    return MomentBoundReport(s=s, p=p, alpha=alpha, delta=delta, j_value=value,
                             abs_error_estimate=err, t_star=t_star, regime=Regime.of(alpha))


@dataclass(frozen=True)
class RegimeFit:
    """Rate of J(alpha, p, p - delta) as delta -> 0.

    ``value`` is the fitted exponent of J - c against delta (alpha < 1), the
    slope of J against |ln delta| (alpha = 1), or max J / min J (alpha > 1).
    """

    alpha: float
    p: float
    regime: Regime
    value: float
    r_squared: float
    deltas: tuple
    j_values: tuple
    offset: float = 0.0
    normalized_ratio: float = math.nan

    def to_dict(self):
        return {"alpha": self.alpha, "p": self.p, "regime": self.regime.value,
                "value": self.value, "r_squared": self.r_squared,
                "deltas": list(self.deltas), "j_values": list(self.j_values),
                "offset": self.offset, "normalized_ratio": self.normalized_ratio}


def _linfit(x, y):
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return float(coef[0]), float(coef[1]), r2


def _power_fit(deltas, j):
    """Fit J = c + A delta^b; returns (b, c, R^2 of the log-log fit)."""
    ld = np.log(deltas)
    jmin = float(np.min(j))
    span = float(np.max(j) - jmin) or abs(jmin) or 1.0

    # 1 - R^2 rather than the raw residual: the latter shrinks trivially as
    # c -> -inf because log(J - c) flattens out
    def sse(c):
        return 1.0 - _linfit(ld, np.log(j - c))[2]

    # search the offset on a log scale below min J
    zs = np.linspace(math.log(1e-9 * span), math.log(1e4 * span), 400)
    cs = jmin - np.exp(zs)
    errs = np.array([sse(c) for c in cs])
    k = int(np.argmin(errs))
    from .numerics import _golden
    za = zs[max(k - 1, 0)]
    zb = zs[min(k + 1, len(zs) - 1)]
    z, _ = _golden(lambda z: sse(jmin - math.exp(z)), za, zb, False, Tolerances(1e-12, 1e-12))
    c = jmin - math.exp(z)
    if sse(c) > errs[k]:
        c = cs[k]
    b, _, r2 = _linfit(ld, np.log(j - c))
    return b, c, r2


def regime_fit(alpha: float, p: float, deltas, tol: Tolerances = DEFAULT_TOL) -> RegimeFit:
    """Estimate the small-delta behaviour of J(alpha, p, p - delta).

    ``deltas`` must hold at least four geometrically spaced values in (0, p - 1).
    """
    d = np.sort(np.asarray(deltas, dtype=float))[::-1]
    if d.size < 4:
        raise DomainError("regime_fit needs at least 4 delta values")
    if not (np.all(d > 0) and np.all(d < p - 1)):
        raise DomainError("delta values must lie in (0, p - 1)")
    ratios = d[1:] / d[:-1]
    if np.max(np.abs(ratios / ratios[0] - 1.0)) > 1e-6:
        raise DomainError("delta values must be geometrically spaced")
    j = np.array([moment_bound_j(alpha, p, p - x, tol).j_value for x in d])
    regime = Regime.of(alpha)
    norm = j / (p - d)
    nratio = float(norm.max() / norm.min())
    if regime is Regime.ALPHA_BELOW_1:
        b, c, r2 = _power_fit(d, j)
        return RegimeFit(alpha, p, regime, b, r2, tuple(d), tuple(j), offset=c, normalized_ratio=nratio)
    if regime is Regime.ALPHA_EQ_1:
        slope, icpt, r2 = _linfit(np.abs(np.log(d)), j)
        return RegimeFit(alpha, p, regime, slope, r2, tuple(d), tuple(j), offset=icpt,
                         normalized_ratio=nratio)
    return RegimeFit(alpha, p, regime, float(j.max() / j.min()), math.nan, tuple(d), tuple(j),
                     normalized_ratio=nratio)


# --------------------------------------------------------------------------
# auxiliary facts

def dilation_check(f: FunctionModel, N: YoungOrlicz, C: float,
                   tol: Tolerances = DEFAULT_TOL) -> VerificationReport:
    """||f|| under u -> N(Cu) equals C ||f||_N."""
    if not C > 0:
        raise DomainError("C must be positive")
    lhs, el = luxemburg_with_error(f, N.dilated(C), tol)
    base, eb = luxemburg_with_error(f, N, tol)
    return VerificationReport(
        name="dilation", relation="eq", lhs=lhs, rhs=C * base, rel_slack=1e-6,
        error_budget=el + C * eb,
        params={"C": C, **N.describe(), "f": repr(f)},
        extras={"norm": base})


def _ordered_on_grid(N1, N2):
    u = np.logspace(-8, 8, 257)
    a, b = N1(u), N2(u)
    bad = a > b * (1 + 1e-12)
    return u[bad]


def monotonicity_check(f: FunctionModel, N1: YoungOrlicz, N2: YoungOrlicz,
                       tol: Tolerances = DEFAULT_TOL) -> VerificationReport:
    """N1 <= N2 pointwise implies ||f||_{N1} <= ||f||_{N2}."""
    bad = _ordered_on_grid(N1, N2)
    if bad.size:
        raise PreconditionUnmet(f"N1 > N2 at u = {bad[0]:.3g} (and {bad.size - 1} more grid points)")
    lhs, e1 = luxemburg_with_error(f, N1, tol)
    rhs, e2 = luxemburg_with_error(f, N2, tol)
    return VerificationReport(
        name="monotonicity", relation="le", lhs=lhs, rhs=rhs, rel_slack=1e-8,
        error_budget=e1 + e2,
        params={"N1": N1.describe(), "N2": N2.describe(), "f": repr(f)})
