"""Grand Lebesgue norms sup_p ||f||_p / psi(p) and Grand Zygmund norms
sup_{(p,gamma) in Q} ||f||_{p,gamma} / rho(p,gamma)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import expression as ex
from .errors import DomainError, NormInfinite
from .function_model import FunctionModel, lp_norm_with_error, rearrangement
from .numerics import DEFAULT_TOL, Tolerances, _golden, grid_points, refine_optimum, scan
from .orlicz import YoungOrlicz, luxemburg_with_error, scaled_tail_bound
from .report import VerificationReport

# Largest exponent scanned on unbounded p-domains.  The L^p integrand of a
# log-singular function peaks near t = e^{-p}, which doubles stop resolving
# beyond p ~ 700.
P_CAP = 500.0


def _parse_bound(v, default):
    if v is None:
        return default
    if isinstance(v, str):
        if v.strip().lower() in ("inf", "infinity", "+inf"):
            return math.inf
        return float(v)
    return float(v)


@dataclass(frozen=True)
class GeneratingFunction:
    """psi(p) > 0 on (a, b), 1 <= a < b <= inf."""

    kind: str
    a: float
    b: float
    params: tuple = ()
    expr: Optional[str] = field(default=None, compare=True)

    def __post_init__(self):
        if not (1.0 <= self.a < self.b):
            raise DomainError("generating function domain must satisfy 1 <= a < b")
        if self.kind == "degenerate":
            return
        if self.kind == "custom":
            object.__setattr__(self, "_node", ex.parse(self.expr, ("p",)))
        pts = grid_points(self.a, self.b, 256, inf_cap=min(P_CAP, 1e4))
        v = np.array([self(x) for x in pts])
        if np.any(np.isnan(v)) or np.any(v <= 0):
            raise DomainError(f"psi must be positive on ({self.a}, {self.b})")
        if not np.min(v) > 0:
            raise DomainError("psi must have a positive infimum")

    @property
    def p_dict(self):
        return dict(self.params)

    def __call__(self, p):
        p = float(p)
        k = self.kind
        d = self.p_dict
        if k == "degenerate":
            return 1.0 if p == d["r"] else math.inf
        if not self.a < p < self.b:
            return math.inf
        if k == "power_root":
            return p ** (1.0 / d["m"])
        if k == "double_singular":
            left = (p - self.a) ** (-d["alpha"]) if d["alpha"] else 1.0
            right = (self.b - p) ** (-d["beta"]) if d["beta"] else 1.0
            return left * right
        return float(ex.evaluate(self._node, p=p))

    # factories -----------------------------------------------------------

    @classmethod
    def power_root(cls, m, a=1.0, b=math.inf):
        if not m > 0:
            raise DomainError("m must be positive")
        return cls("power_root", float(a), float(b), (("m", float(m)),))

    @classmethod
    def double_singular(cls, a, b, alpha, beta):
        if alpha < 0 or beta < 0:
            raise DomainError("alpha and beta must be non-negative")
        if math.isinf(b) and beta != 0:
            raise DomainError("beta must vanish when b is infinite")
        return cls("double_singular", float(a), float(b), (("alpha", float(alpha)), ("beta", float(beta))))

    @classmethod
    def degenerate(cls, r):
        if not r >= 1:
            raise DomainError("r must be >= 1")
        return cls("degenerate", 1.0, math.inf, (("r", float(r)),))

    @classmethod
    def custom(cls, src, a=1.0, b=math.inf):
        return cls("custom", float(a), float(b), (), expr=src)

    @classmethod
    def from_json(cls, spec: dict):
        kind = spec.get("kind")
        a = _parse_bound(spec.get("a"), 1.0)
        b = _parse_bound(spec.get("b"), math.inf)
        if kind == "power_root":
            return cls.power_root(spec["m"], a, b)
        if kind == "double_singular":
            return cls.double_singular(a, b, spec.get("alpha", 0.0), spec.get("beta", 0.0))
        if kind == "degenerate":
            return cls.degenerate(spec["r"])
        if kind == "custom":
            return cls.custom(spec["expr"], a, b)
        raise DomainError(f"unknown generating function kind {kind!r}")

    def to_dict(self):
        d = {"kind": self.kind, **self.p_dict}
        if self.kind != "degenerate":
            d["a"] = self.a
            d["b"] = "inf" if math.isinf(self.b) else self.b
        if self.expr is not None:
            d["expr"] = self.expr
        return d


@dataclass(frozen=True)
class GLSResult:
    value: float
    argmax: float
    abs_error_estimate: float


# Probe levels for divergence toward an endpoint: relative distances for a
# finite endpoint, absolute exponents for p -> inf.  Spacing is wide so that
# convergent approaches show clearly shrinking increments.
_FINITE_LEVELS = (1e-3, 1e-5, 1e-7)
_INFINITE_LEVELS = (50.0, 150.0, 500.0)
# Closer than this (relative) to a finite endpoint, L^p integrals such as
# int t^(-1+eps) are not resolvable in double precision.
_UNRESOLVED = 1e-6


def _growing(vals):
    v1, v2, v3 = vals
    return bool(np.all(np.isfinite(vals)) and v3 > v2 > v1 and (v3 - v2) >= 0.5 * (v2 - v1))


def gls_detail(f: FunctionModel, psi: GeneratingFunction, tol: Tolerances = DEFAULT_TOL,
               n_grid: int = 128) -> GLSResult:
    if psi.kind == "degenerate":
        r = psi.p_dict["r"]
        v, e = lp_norm_with_error(f, r, tol)
        return GLSResult(v, r, e)

    def h(p):
        return lp_norm_with_error(f, p, tol)[0] / psi(p)

    a, b = psi.a, psi.b
    w = (b - a) if math.isfinite(b) else 1.0
    xs = grid_points(a, b, n_grid, P_CAP)
    ys = scan(h, xs)
    near = np.abs(xs - a) < _UNRESOLVED * w
    if math.isfinite(b):
        near |= np.abs(b - xs) < _UNRESOLVED * w
    ys[near & np.isinf(ys)] = math.nan
    if np.any(np.isinf(ys)):
        p_bad = float(xs[np.flatnonzero(np.isinf(ys))[0]])
        raise NormInfinite(f"||f||_p is infinite at p = {p_bad:.6g}",
                           diagnosis=f"L^p norm diverges at p = {p_bad:.6g}", endpoint=p_bad)
    if not np.any(np.isfinite(ys)):
        raise NormInfinite("objective could not be evaluated anywhere on the p-grid")

    probes = [(a, [a + w * d for d in _FINITE_LEVELS])]
    if math.isfinite(b):
        probes.append((b, [b - w * d for d in _FINITE_LEVELS]))
    else:
        probes.append((b, [x for x in _INFINITE_LEVELS if x > a]))
    for edge, pts in probes:
        if len(pts) < 3:
            continue
        vals = scan(h, pts)
        if np.any(np.isinf(vals)) or _growing(vals):
            raise NormInfinite(f"||f||_p / psi(p) grows without bound as p -> {edge}",
                               diagnosis="growth toward the endpoint", endpoint=edge)

    masked = np.where(np.isfinite(ys), ys, -math.inf)
    i = int(np.argmax(masked))
    pstar, best = refine_optimum(h, xs, ys, i, a, b, True, tol)
    err = lp_norm_with_error(f, pstar, tol)[1] / psi(pstar) + tol.rel_tol * best
    return GLSResult(float(best), float(pstar), float(err))


def gls_norm(f: FunctionModel, psi: GeneratingFunction, tol: Tolerances = DEFAULT_TOL) -> float:
    """sup over (a, b) of ||f||_p / psi(p).  Raises NormInfinite when unbounded."""
    return gls_detail(f, psi, tol).value


def coincidence_check(f: FunctionModel, psi: GeneratingFunction,
                      tol: Tolerances = DEFAULT_TOL) -> VerificationReport:
    """The Grand Lebesgue norm of f* equals that of f."""
    star = rearrangement(f)
    lhs = gls_detail(star, psi, tol)
    rhs = gls_detail(f, psi, tol)
    return VerificationReport(
        name="coincidence", relation="eq", lhs=lhs.value, rhs=rhs.value, rel_slack=1e-3,
        error_budget=lhs.abs_error_estimate + rhs.abs_error_estimate,
        params={"psi": psi.to_dict(), "f": repr(f)},
        extras={"argmax_star": lhs.argmax, "argmax": rhs.argmax})


# --------------------------------------------------------------------------
# Grand Zygmund spaces

@dataclass(frozen=True)
class GrandZygmundSpace:
    """Finite parameter set Q of (p, gamma), p > 1, gamma > 0, with weight rho.

    ``rect`` remembers the rectangle ((p_lo, p_hi, n_p), (g_lo, g_hi, n_g))
    when Q is a tensor grid; the norm then refines around the grid argmax.
    """

    points: tuple
    rho: str = "1"
    rect: Optional[tuple] = None

    def __post_init__(self):
        pts = tuple((float(p), float(g)) for p, g in self.points)
        if not pts:
            raise DomainError("Q must be non-empty")
        for p, g in pts:
            if not (p > 1 and g > 0):
                raise DomainError(f"Q point ({p}, {g}) must have p > 1 and gamma > 0")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "_node", ex.parse(self.rho, ("p", "gamma")))
        for p, g in pts:
            w = self.weight(p, g)
            if not (w > 0 and math.isfinite(w)):
                raise DomainError(f"rho must be positive and finite on Q, got {w} at ({p}, {g})")

    def weight(self, p, g):
        return float(ex.evaluate(self._node, p=p, gamma=g))

    @classmethod
    def from_points(cls, points, rho="1"):
        return cls(tuple(tuple(x) for x in points), rho)

    @classmethod
    def rectangle(cls, p_range, gamma_range, rho="1"):
        (p0, p1, n_p), (g0, g1, n_g) = p_range, gamma_range
        ps = np.linspace(p0, p1, int(n_p))
        gs = np.linspace(g0, g1, int(n_g))
        pts = tuple((float(p), float(g)) for p in ps for g in gs)
        return cls(pts, rho, ((float(p0), float(p1), int(n_p)), (float(g0), float(g1), int(n_g))))

    @classmethod
    def from_json(cls, spec: dict):
        rho = spec.get("rho", "1")
        if "points" in spec:
            return cls.from_points(spec["points"], rho)
        if "rect" in spec:
            r = spec["rect"]
            return cls.rectangle(r["p"], r["gamma"], rho)
        raise DomainError("Q specification needs 'points' or 'rect'")

    def to_dict(self):
        d = {"rho": self.rho}
        if self.rect is not None:
            d["rect"] = {"p": list(self.rect[0]), "gamma": list(self.rect[1])}
        else:
            d["points"] = [list(x) for x in self.points]
        return d

    def scaled(self, lam):
        """Same Q with rho multiplied by ``lam``."""
        return GrandZygmundSpace(self.points, f"({lam!r}) * ({self.rho})", self.rect)


@dataclass(frozen=True)
class GZSResult:
    value: float
    argmax: tuple
    abs_error_estimate: float
    grid_value: float


def gzs_detail(f: FunctionModel, Z: GrandZygmundSpace, tol: Tolerances = DEFAULT_TOL) -> GZSResult:
    def h(p, g):
        mu, err = luxemburg_with_error(f, YoungOrlicz(p, g), tol)
        w = Z.weight(p, g)
        return mu / w, err / w

    best, arg, best_err = -math.inf, None, 0.0
    for p, g in Z.points:
        try:
            v, e = h(p, g)
        except NormInfinite as exc:
            raise NormInfinite(f"||f||_(p,gamma) is infinite at (p, gamma) = ({p}, {g})",
                               diagnosis=exc.diagnosis, endpoint=(p, g)) from None
        if v > best:
            best, arg, best_err = v, (p, g), e
    grid_best = best
    if Z.rect is not None:
        (p0, p1, n_p), (g0, g1, n_g) = Z.rect
        dp = (p1 - p0) / max(n_p - 1, 1)
        dg = (g1 - g0) / max(n_g - 1, 1)
        p, g = arg
        coarse = Tolerances(1e-6, 1e-6)

        def safe(pp, gg):
            try:
                return h(pp, gg)[0]
            except NormInfinite:
                return math.inf

        if n_p > 1:
            pa, pb = max(p0, p - dp), min(p1, p + dp)
            x, v = _golden(lambda x: safe(x, g), pa, pb, True, coarse)
            if v > best:
                best, arg = v, (x, g)
                p = x
        if n_g > 1:
            ga, gb = max(g0, g - dg), min(g1, g + dg)
            y, v = _golden(lambda y: safe(p, y), ga, gb, True, coarse)
            if v > best:
                best, arg = v, (p, y)
        if math.isinf(best):
            raise NormInfinite("||f||_(p,gamma) is infinite inside Q", endpoint=arg)
        if arg not in Z.points:
            best_err = h(*arg)[1]
    return GZSResult(float(best), tuple(arg), float(best_err + tol.rel_tol * best), float(grid_best))


def gzs_norm(f: FunctionModel, Z: GrandZygmundSpace, tol: Tolerances = DEFAULT_TOL) -> float:
    """sup over Q of ||f||_{p,gamma} / rho(p, gamma)."""
    return gzs_detail(f, Z, tol).value


def gzs_tail_envelope(Z: GrandZygmundSpace, V: float, t):
    """inf over Q of min(1, 1/N_{p,gamma}(t / (V rho(p,gamma))))."""
    if not V > 0:
        raise DomainError("V must be positive")
    t = np.asarray(t, dtype=float)
    out = np.ones(t.shape)
    for p, g in Z.points:
        out = np.minimum(out, scaled_tail_bound(YoungOrlicz(p, g), V * Z.weight(p, g), t))
    return out if out.ndim else float(out)
