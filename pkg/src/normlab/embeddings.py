"""Weighted rearrangement norms, Hoelder-type bounds between Grand Lebesgue
norms, the embedding constant Theta(r, p, gamma) with a sharpness harness,
and the lower/inverse estimates built on the (p, -beta) scale."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import expression as ex
from .errors import (AllSingular, DomainError, EvaluationError, NonConvergent, NonIntegrable,
                     NormInfinite)
from .function_model import (Expression, FunctionModel, Tabulated, lp_norm, lp_norm_with_error,
                             rearrangement, unit_grid)
from .grand_spaces import GeneratingFunction, gls_detail
from .numerics import (DEFAULT_TOL, Tolerances, _golden, _gk15, gamma as gamma_fn, integrate,
                       optimize_1d)
from .orlicz import YoungOrlicz, luxemburg_with_error
from .report import VerificationReport


class WeightFunction:
    """Non-negative integrable weight S on (0, 1)."""

    def __init__(self, S: FunctionModel):
        if isinstance(S, str):
            S = Expression(S)
        if isinstance(S, Tabulated):
            ok = bool(np.all(S.values >= 0))
        else:
            with np.errstate(all="ignore"):
                v = np.asarray(S(unit_grid()[600:-60]), dtype=float)
            ok = bool(np.all(v >= 0))
        if not ok:
            raise DomainError(f"weight {S!r} takes negative values")
        try:
            self.l1 = lp_norm(S, 1)
        except NormInfinite as exc:
            raise DomainError(f"weight {S!r} is not integrable: {exc}") from None
        self.S = S

    def __repr__(self):
        return f"WeightFunction({self.S!r})"


def theta(r: float, p: float, gamma: float) -> float:
    """Gamma(gamma p / (p - r) + 1) ** ((p - r) / (p r))."""
    if not 1 <= r < p < math.inf:
        raise DomainError("theta needs 1 <= r < p < inf")
    if gamma < 0:
        raise DomainError("gamma must be non-negative")
    if gamma == 0:
        return 1.0
    return gamma_fn(gamma * p / (p - r) + 1.0) ** ((p - r) / (p * r))


# --------------------------------------------------------------------------
# integral of a non-increasing step or smooth function against a weight

def _cell_integrals(S, edges, tol):
    """int of S over each cell (edges[i], edges[i+1])."""
    a, b = edges[:-1], edges[1:]
    out = np.zeros(len(a))
    errs = np.zeros(len(a))
    live = b > a
    va, ea = _gk15(S, a[live], b[live])
    out[live], errs[live] = va, ea
    # cells touching a singular endpoint or poorly resolved: adaptive quadrature
    rough = np.flatnonzero(live & (~np.isfinite(out) | (errs > 1e-3 * tol.rel_tol * np.abs(out) + 1e-300)
                                   | (a == 0) | (b == 1)))
    for i in rough:
        try:
            r = integrate(S, float(a[i]), float(b[i]), tol)
        except NonConvergent:
            # cells at the 1e-300 scale are below the adaptive resolution;
            # keep the GK value when the cell cannot matter
            if np.isfinite(out[i]) and abs(out[i]) + errs[i] < 1e-3 * tol.abs_tol:
                continue
            raise
        out[i], errs[i] = r.value, r.abs_error_estimate
    return out, errs


def _as_callable(m):
    if isinstance(m, FunctionModel):
        return lambda t: np.abs(m(t))
    return m


def _integral_against(fstar, S, tol: Tolerances):
    """(int_0^1 fstar * S dt, error estimate).  Step functions are integrated
    cell by cell so no quadrature panel ever straddles a jump."""
    try:
        if isinstance(fstar, Tabulated) and isinstance(S, Tabulated):
            edges = np.union1d(fstar.edges, S.edges)
            mid = 0.5 * (edges[:-1] + edges[1:])
            terms = np.diff(edges) * np.abs(fstar(mid)) * np.abs(S(mid))
            return math.fsum(terms.tolist()), 0.0
        if isinstance(fstar, Tabulated):
            w, e = _cell_integrals(_as_callable(S), fstar.edges, tol)
            v = np.abs(fstar.values)
            return math.fsum((v * w).tolist()), float(np.sum(v * e))
        if isinstance(S, Tabulated):
            w, e = _cell_integrals(_as_callable(fstar), S.edges, tol)
            v = np.abs(S.values)
            return math.fsum((v * w).tolist()), float(np.sum(v * e))
        fs, ss = _as_callable(fstar), _as_callable(S)
        r = integrate(lambda t: fs(t) * ss(t), 0.0, 1.0, tol)
        return r.value, r.abs_error_estimate
    except NonIntegrable as exc:
        raise NormInfinite("weighted integral diverges", diagnosis=str(exc), endpoint=exc.endpoint) from None


def weighted_norm_with_error(f: FunctionModel, S: WeightFunction, tol: Tolerances = DEFAULT_TOL):
    if not isinstance(S, WeightFunction):
        S = WeightFunction(S)
    return _integral_against(rearrangement(f), S.S, tol)


def weighted_norm(f: FunctionModel, S: WeightFunction, tol: Tolerances = DEFAULT_TOL) -> float:
    """||f||_[S] = int_0^1 f*(t) S(t) dt."""
    return weighted_norm_with_error(f, S, tol)[0]


def _log_power(gamma):
    """t -> |ln t|^gamma as a model (exact expression)."""
    if gamma == 0:
        return Expression("1")
    return Expression(f"abs(ln(t))^({gamma!r})")


def _power_of(fstar, r):
    if r == 1:
        return fstar
    if isinstance(fstar, Tabulated):
        return Tabulated(np.abs(fstar.values) ** r, edges=None if fstar.equal_mass else fstar.edges)
    return lambda t: np.abs(fstar(t)) ** r


def lz_functional_with_error(g: FunctionModel, r: float, gamma: float, tol: Tolerances = DEFAULT_TOL):
    """(int_0^1 g*(t)^r |ln t|^gamma dt)^(1/r) and its error estimate."""
    star = rearrangement(g)
    v, e = _integral_against(_power_of(star, r), _log_power(gamma), tol)
    if v == 0:
        return 0.0, 0.0
    value = v ** (1.0 / r)
    return value, value * (e / v) / r


# --------------------------------------------------------------------------
# Hoelder and Grand Lebesgue bounds

def conjugate(p):
    if p == 1:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1.0)


def holder_bound_check(f: FunctionModel, S: WeightFunction, p: float,
                       tol: Tolerances = DEFAULT_TOL) -> VerificationReport:
    """||f||_[S] <= ||f||_p ||S||_p'."""
    if not p > 1:
        raise DomainError("p must exceed 1")
    if not isinstance(S, WeightFunction):
        S = WeightFunction(S)
    q = conjugate(p)
    lhs, el = weighted_norm_with_error(f, S, tol)
    a, ea = lp_norm_with_error(f, p, tol)
    b, eb = lp_norm_with_error(S.S, q, tol)
    return VerificationReport(
        name="holder", relation="le", lhs=lhs, rhs=a * b, rel_slack=1e-6,
        error_budget=el + ea * b + a * eb,
        params={"p": p, "p_conjugate": q, "f": repr(f), "S": repr(S.S)},
        extras={"lp_f": a, "lq_S": b})


def feasible_interval(psi: GeneratingFunction, nu: GeneratingFunction):
    """{p in (a,b) : p/(p-1) in (c,d)} as an open interval, or None if empty.

    The conjugation map is decreasing, so (c, d) pulls back to
    (d/(d-1), c/(c-1)) with 1/0 read as +inf and inf/inf as 1.
    """
    lo = max(psi.a, conjugate(nu.b))
    hi = min(psi.b, conjugate(nu.a))
    if not lo < hi:
        return None
    return lo, hi


def zeta_constant(psi: GeneratingFunction, nu: GeneratingFunction, tol: Tolerances = DEFAULT_TOL) -> float:
    """inf over feasible p of psi(p) nu(p'), p' = p/(p-1); +inf if infeasible."""
    if psi.kind == "degenerate" or nu.kind == "degenerate":
        if psi.kind == "degenerate":
            p = psi.p_dict["r"]
            return psi(p) * nu(conjugate(p)) if p > 1 else math.inf
        q = nu.p_dict["r"]
        return psi(conjugate(q)) * nu(q) if q > 1 else math.inf
    iv = feasible_interval(psi, nu)
    if iv is None:
        return math.inf
    try:
        _, value = optimize_1d(lambda p: psi(p) * nu(conjugate(p)), iv[0], iv[1], "min", tol)
    except AllSingular:
        return math.inf
    return value


def gls_weighted_bound_check(f: FunctionModel, S: WeightFunction, psi: GeneratingFunction,
                             nu: GeneratingFunction, tol: Tolerances = DEFAULT_TOL) -> VerificationReport:
    """||f||_[S] <= zeta * ||f||_{G psi} * ||S||_{G nu}."""
    if not isinstance(S, WeightFunction):
        S = WeightFunction(S)
    lhs, el = weighted_norm_with_error(f, S, tol)
    z = zeta_constant(psi, nu, tol)
    extras = {"zeta": z}
    try:
        gf = gls_detail(f, psi, tol)
        gs = gls_detail(S.S, nu, tol)
    except NormInfinite as exc:
        extras["infinite"] = str(exc)
        rhs, budget = math.inf, math.inf
    else:
        rhs = z * gf.value * gs.value
        budget = el + z * (gf.abs_error_estimate * gs.value + gf.value * gs.abs_error_estimate)
        extras.update({"gls_f": gf.value, "gls_S": gs.value,
                       "argmax_f": gf.argmax, "argmax_S": gs.argmax})
    return VerificationReport(
        name="gls-weighted", relation="le", lhs=lhs, rhs=rhs, rel_slack=1e-5,
        error_budget=budget if math.isfinite(rhs) else 0.0,
        params={"psi": psi.to_dict(), "nu": nu.to_dict(), "f": repr(f), "S": repr(S.S)},
        extras=extras)


# --------------------------------------------------------------------------
# embedding constant and its sharpness

FUNCTIONALS = ("luxemburg", "lorentz_zygmund")


def embedding_check(g: FunctionModel, r: float, p: float, gamma: float,
                    tol: Tolerances = DEFAULT_TOL, functional: str = "luxemburg",
                    constant_factor: float = 1.0) -> VerificationReport:
    """||g||_{r,gamma} <= constant_factor * Theta(r, p, gamma) * ||g||_p.

    ``functional`` selects the left side: the Luxemburg norm of N_{r,gamma}
    (default) or the integral (int g*^r |ln t|^gamma)^(1/r); the other one is
    always reported in ``extras``.
    """
    if functional not in FUNCTIONALS:
        raise DomainError(f"functional must be one of {FUNCTIONALS}")
    th = theta(r, p, gamma)
    norm_p, ep = lp_norm_with_error(g, p, tol)
    lux, elux = luxemburg_with_error(g, YoungOrlicz(r, gamma), tol)
    lz, elz = lz_functional_with_error(g, r, gamma, tol)
    lhs, el = (lux, elux) if functional == "luxemburg" else (lz, elz)
    rhs = constant_factor * th * norm_p
    return VerificationReport(
        name="embedding", relation="le", lhs=lhs, rhs=rhs, rel_slack=1e-5,
        error_budget=el + constant_factor * th * ep,
        params={"r": r, "p": p, "gamma": gamma, "functional": functional,
                "constant_factor": constant_factor, "g": repr(g)},
        extras={"theta": th, "lp_norm": norm_p, "luxemburg": lux, "lorentz_zygmund": lz})


@dataclass
class SharpnessReport:
    gamma: float
    r: float
    p: float
    theta: float
    best_ratio_found: float
    maximizer_label: str
    gap: float
    best_kappa: float
    holder_kappa: float
    printed_kappa: float
    ratio_at_holder_kappa: float
    ratio_at_printed_kappa: float
    exploratory: bool
    candidates: list = field(default_factory=list)

    def to_dict(self):
        d = {k: getattr(self, k) for k in (
            "gamma", "r", "p", "theta", "best_ratio_found", "maximizer_label", "gap",
            "best_kappa", "holder_kappa", "printed_kappa", "ratio_at_holder_kappa",
            "ratio_at_printed_kappa", "exploratory")}
        d["candidates"] = [{"kappa": k, "ratio": v} for k, v in self.candidates]
        return d


def sharpness_ratio(kappa: float, r: float, p: float, gamma: float, tol: Tolerances = DEFAULT_TOL) -> float:
    """(int f^r |ln t|^gamma)^(1/r) / ||f||_p for f = |ln t|^kappa."""
    f = _log_power(kappa)
    num = lz_functional_with_error(f, r, gamma, tol)[0]
    return num / lp_norm(f, p, tol)


def sharpness_search(r: float, p: float, gamma: float, tol: Tolerances = DEFAULT_TOL,
                     n_kappa: int = 41) -> SharpnessReport:
    """Scan f = |ln t|^kappa for the largest ratio against Theta(r, p, gamma).

    The grid always contains the Hoelder-equality exponent gamma/(p - r) and
    gamma p/(p - 1).  For r > 1 the numerator is the r-th power integral and
    the result is exploratory.
    """
    th = theta(r, p, gamma)
    k_holder = gamma / (p - r)
    k_printed = gamma * p / (p - 1.0)
    top = max(2.0 * k_holder, 1.25 * k_printed, 1.0)
    kappas = np.unique(np.concatenate([np.linspace(0.0, top, n_kappa), [k_holder, k_printed]]))

    def ratio(k):
        try:
            return sharpness_ratio(float(k), r, p, gamma, tol)
        except (NormInfinite, EvaluationError):
            return -math.inf

    vals = np.array([ratio(k) for k in kappas])
    i = int(np.argmax(vals))
    best_k, best = float(kappas[i]), float(vals[i])
    a = kappas[max(i - 1, 0)]
    b = kappas[min(i + 1, len(kappas) - 1)]
    if b > a:
        k, v = _golden(ratio, a, b, True, Tolerances(1e-9, 1e-9))
        # gains below the quadrature tolerance are noise, keep the grid point
        if v > best * (1 + tol.rel_tol):
            best_k, best = k, v
    r_h = float(vals[np.flatnonzero(kappas == k_holder)[0]])
    r_p = float(vals[np.flatnonzero(kappas == k_printed)[0]])
    if best_k == 0.0:
        label = "f = 1"
    else:
        label = f"f = |ln t|^{best_k:.6g}"
    return SharpnessReport(
        gamma=gamma, r=r, p=p, theta=th, best_ratio_found=best, maximizer_label=label,
        gap=th - best, best_kappa=best_k, holder_kappa=k_holder, printed_kappa=k_printed,
        ratio_at_holder_kappa=r_h, ratio_at_printed_kappa=r_p, exploratory=r != 1,
        candidates=list(zip(kappas.tolist(), vals.tolist())))


# --------------------------------------------------------------------------
# lower and inverse estimates on the (p, -beta) scale

def _neg_norm(g, p, beta, tol):
    return luxemburg_with_error(g, YoungOrlicz(p, -beta), tol)


def lower_estimate_check(g: FunctionModel, beta: float, s: float, p_grid,
                         tol: Tolerances = DEFAULT_TOL) -> VerificationReport:
    """Empirical constant min_p ||g||_{p,-beta} / ([s/(p-s)]^(-beta/s) ||g||_s).

    Passes when the minimum is positive beyond its error budget.
    """
    if not beta > 0:
        raise DomainError("beta must be positive")
    if not s >= 1:
        raise DomainError("s must be >= 1")
    ps = np.asarray(p_grid, dtype=float)
    if ps.size == 0 or np.any(ps <= s):
        raise DomainError("every grid p must exceed s")
    ns, es = lp_norm_with_error(g, s, tol)
    ratios, errs = [], []
    for p in ps:
        mu, em = _neg_norm(g, float(p), beta, tol)
        w = (s / (p - s)) ** (-beta / s)
        ratios.append(mu / (w * ns))
        errs.append(ratios[-1] * (em / mu + es / ns) if mu > 0 else math.inf)
    k = int(np.argmin(ratios))
    return VerificationReport(
        name="lower", relation="ge", lhs=float(ratios[k]), rhs=0.0, error_budget=float(errs[k]),
        params={"beta": beta, "s": s, "p_grid": ps.tolist(), "g": repr(g)},
        extras={"ratios": ratios, "argmin_p": float(ps[k]), "empirical_C": float(ratios[k])})


VARIANTS = ("plain", "exponent")


def _bracket_weight(s, p, beta, variant):
    w = s / (p - s)
    return w if variant == "plain" else w ** (beta / s)


def kappa_detail(g: FunctionModel, s: float, beta: float, p_domain, variant: str = "plain",
                 tol: Tolerances = DEFAULT_TOL, n_grid: int = 64):
    """(kappa, argmin p) for inf over p in p_domain of w(p) ||g||_{p,-beta}."""
    if variant not in VARIANTS:
        raise DomainError(f"variant must be one of {VARIANTS}")
    lo, hi = float(p_domain[0]), float(p_domain[1])
    if not lo >= s:
        raise DomainError("p_domain must lie in (s, inf)")
    if not lo < hi:
        raise DomainError("p_domain must be a non-empty interval")

    def h(p):
        return _bracket_weight(s, p, beta, variant) * _neg_norm(g, p, beta, tol)[0]

    try:
        p_opt, value = optimize_1d(h, lo, hi, "min", tol, n_grid=n_grid, inf_cap=min(hi, 1e3))
    except AllSingular:
        return math.inf, math.nan
    return value, p_opt


def kappa(g: FunctionModel, s: float, beta: float, p_domain, variant: str = "plain",
          tol: Tolerances = DEFAULT_TOL, n_grid: int = 64) -> float:
    """inf_{p in p_domain} w(p) ||g||_{p,-beta}; w = s/(p-s) or (s/(p-s))^(beta/s)."""
    return kappa_detail(g, s, beta, p_domain, variant, tol, n_grid)[0]


def inverse_embedding_check(g: FunctionModel, beta: float, s_grid, p_domain,
                            tol: Tolerances = DEFAULT_TOL, variants=VARIANTS,
                            n_grid: int = 64) -> VerificationReport:
    """sup over s of ||g||_s / kappa[g](s) for each variant.

    The supremum is the Grand Lebesgue norm of g with generating function
    kappa[g]; the check passes when it is finite for every variant.  ``lhs``
    is the largest supremum over the variants.
    """
    if isinstance(variants, str):
        variants = (variants,)
    ss = np.asarray(s_grid, dtype=float)
    per = {}
    for variant in variants:
        rows = []
        for s in ss:
            lo = max(float(p_domain[0]), float(s))
            hi = float(p_domain[1])
            k, p_opt = kappa_detail(g, float(s), beta, (lo, hi), variant, tol, n_grid) if lo < hi \
                else (math.inf, math.nan)
            ns = lp_norm(g, float(s), tol)
            rows.append({"s": float(s), "kappa": k, "argmin_p": p_opt, "lp": ns,
                         "ratio": ns / k if k > 0 else math.inf})
        sup = max(r["ratio"] for r in rows)
        per[variant] = {"sup": sup, "rows": rows}
    lhs = max(v["sup"] for v in per.values())
    return VerificationReport(
        name="inverse", relation="finite", lhs=lhs, rhs=math.nan,
        params={"beta": beta, "s_grid": ss.tolist(), "p_domain": [float(x) for x in p_domain],
                "variants": list(variants), "g": repr(g)},
        extras={"empirical_C": {v: per[v]["sup"] for v in per}, "detail": per})
