"""Numerical kernels: quadrature, Gamma function, root finding, 1-D optimization.

Every integral in the package goes through :func:`integrate`.  The integrands
met here are dominated by endpoint singularities of the form ``t**-theta`` and
``|ln t|**a``, so the interval is cut into dyadic shells that shrink
geometrically toward each endpoint.  Each shell is smooth and is handled by
vectorized adaptive Gauss-Kronrod (7/15); the contributions of the shells
still untouched near the endpoint are estimated from the geometric ratio of
consecutive shells, which is exact for pure power laws.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .errors import AllSingular, DomainError, NoBracket, NonConvergent, NonIntegrable

OVERFLOW_GUARD = 1e300
_EPS = np.finfo(float).eps
_TINY_WIDTH = 1e-300
_UNDERFLOW = 1e-290


@dataclass(frozen=True)
class Tolerances:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    max_subdivisions: int = 10000

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0 and self.max_subdivisions > 0):
            raise DomainError("tolerances must be strictly positive")

    def tightened(self, factor=10.0):
        return Tolerances(self.abs_tol / factor, self.rel_tol / factor, self.max_subdivisions)

    def as_dict(self):
        return {"abs_tol": self.abs_tol, "rel_tol": self.rel_tol,
                "max_subdivisions": self.max_subdivisions}


DEFAULT_TOL = Tolerances()


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    abs_error_estimate: float
    subdivisions: int


# Gauss-Kronrod 7/15 abscissae and weights on [-1, 1].
_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327])

_NODES = np.concatenate([-_XGK[:7], [0.0], _XGK[:7][::-1]])
_WK = np.concatenate([_WGK[:7], [_WGK[7]], _WGK[:7][::-1]])
_wg_half = np.zeros(8)
_wg_half[1:7:2] = _WG[:3]
_wg_half[7] = _WG[3]
_WGAUSS = np.concatenate([_wg_half[:7], [_wg_half[7]], _wg_half[:7][::-1]])


def as_vectorized(f):
    """Wrap ``f`` so it maps float arrays to float arrays of the same shape."""
    probe = np.array([0.25, 0.5])
    try:
        with np.errstate(all="ignore"):
            out = np.asarray(f(probe), dtype=float)
        if out.shape == probe.shape:
            return f
    except Exception:
        pass
    vf = np.vectorize(lambda x: float(f(float(x))), otypes=[float])
    return vf


def _gk15(f, a, b):
    """Vectorized GK15 on the panels [a_i, b_i]; returns (value, error)."""
    c = 0.5 * (a + b)
    h = 0.5 * (b - a)
    x = c[:, None] + h[:, None] * _NODES[None, :]
    with np.errstate(all="ignore"):
        fx = np.asarray(f(x.ravel()), dtype=float).reshape(x.shape)
        resk = fx @ _WK
        resg = fx @ _WGAUSS
        resabs = np.abs(fx) @ _WK
        mean = 0.5 * resk
        resasc = np.abs(fx - mean[:, None]) @ _WK
        err = np.abs(resk - resg) * h
        resasc = resasc * h
        scaled = np.where(resasc > 0, resasc * np.minimum(1.0, (200.0 * err / np.where(resasc > 0, resasc, 1.0)) ** 1.5), err)
        err = np.where((resasc != 0) & (err != 0), scaled, err)
        err = np.maximum(err, 50.0 * _EPS * resabs * np.abs(h))
    return resk * h, err


class _Budget:
    def __init__(self, limit):
        self.limit = limit
        self.used = 0


def _adaptive(f, a0, b0, tau, budget):
    """Adaptive GK15 on independent intervals [a0_j, b0_j] with targets tau_j.

    Panels are bisected until each meets its width-proportional share of the
    interval target.  Returns per-interval (values, errors).
    """
    k = len(a0)
    ids = np.arange(k)
    a, b = np.asarray(a0, float), np.asarray(b0, float)
    density = np.asarray(tau, float) / (b - a)
    vals = np.zeros(k)
    errs = np.zeros(k)
    while len(a):
        v, e = _gk15(f, a, b)
        if not (np.all(np.isfinite(v)) and np.all(np.isfinite(e))):
            bad = ~np.isfinite(v)
            if np.any(np.isinf(v[bad]) | (np.abs(v[np.isfinite(v)]) > OVERFLOW_GUARD).any()):
                raise NonIntegrable("integrand overflows to infinity")
            raise NonConvergent("integrand is not finite on part of the interval")
        width = b - a
        ok = (e <= density[ids] * width) | (width <= 64 * _EPS * np.maximum(np.abs(a), np.abs(b)))
        np.add.at(vals, ids[ok], v[ok])
        np.add.at(errs, ids[ok], e[ok])
        if np.all(ok):
            break
        nsplit = int(np.count_nonzero(~ok))
        budget.used += nsplit
        if budget.used > budget.limit:
            np.add.at(vals, ids[~ok], v[~ok])
            np.add.at(errs, ids[~ok], e[~ok])
            raise NonConvergent("maximum number of subdivisions reached",
                                partial=(float(vals.sum()), float(errs.sum())))
        a, b, ids = a[~ok], b[~ok], ids[~ok]
        m = 0.5 * (a + b)
        a, b, ids = np.concatenate([a, m]), np.concatenate([m, b]), np.concatenate([ids, ids])
    return vals, errs


def _shell_edges(anchor, width, direction, k0, count):
    """Edges of shells k0..k0+count-1 approaching ``anchor``."""
    ks = np.arange(k0, k0 + count, dtype=float)
    outer = width * np.exp2(-ks)
    inner = width * np.exp2(-ks - 1)
    if direction < 0:       # toward the lower endpoint
        return anchor + inner, anchor + outer, width * np.exp2(-ks - 1)
    return anchor - outer, anchor - inner, width * np.exp2(-ks - 1)


def _side(f, anchor, width, direction, tol, budget, batch=8):
    """Integrate the half-interval of size ``width`` next to ``anchor``.

    Returns (value, error, diverging).
    """
    total = 0.0
    total_err = 0.0
    shells = []
    k = 0
    limit_width = max(_TINY_WIDTH, 64 * _EPS * abs(anchor))
    while True:
        lo, hi, w = _shell_edges(anchor, width, direction, k, batch)
        keep = w >= limit_width
        exhausted = not np.all(keep)
        lo, hi = lo[keep], hi[keep]
        if len(lo):
            # rough pass fixes per-shell targets, then refine
            v0, _ = _gk15(f, lo, hi)
            if not np.all(np.isfinite(v0)):
                if np.any(np.isinf(v0)):
                    raise NonIntegrable("integrand overflows near endpoint", endpoint=anchor)
                raise NonConvergent("integrand is not finite near endpoint")
            scale = np.maximum(np.abs(v0), abs(total))
            tau = 0.05 * np.maximum(tol.rel_tol * scale, tol.abs_tol * np.exp2(-np.arange(k, k + len(lo)) - 3.0))
            vals, errs = _adaptive(f, lo, hi, tau, budget)
            shells.extend(vals.tolist())
            total += float(vals.sum())
            total_err += float(errs.sum())
            k += len(lo)
        if abs(total) > OVERFLOW_GUARD or not math.isfinite(total):
            raise NonIntegrable("partial sums exceed the overflow guard", endpoint=anchor)
        target = 0.25 * max(tol.abs_tol, tol.rel_tol * abs(total))
        rem, unc, ratio = _remainder(shells)
        # shells that underflowed to exactly zero say nothing about what lies
        # closer to the endpoint, so keep marching until machine resolution
        silent = len(shells) >= 2 and max(abs(shells[-1]), abs(shells[-2])) < _UNDERFLOW
        if len(shells) >= 4 and total_err + unc <= target and not silent:
            return total + rem, total_err + unc, False
        if exhausted:
            if ratio is not None and ratio >= 1.0 - 1e-9:
                raise NonIntegrable("shell contributions do not decay toward the endpoint",
                                    endpoint=anchor)
            if math.isfinite(unc) and total_err + unc <= 4 * target:
                return total + rem, total_err + unc, False
            raise NonConvergent("endpoint singularity not resolved at machine resolution",
                                partial=(total + (rem if math.isfinite(rem) else 0.0), total_err))


def _remainder(shells):
    """Geometric-tail estimate of the unvisited shells; (estimate, uncertainty, ratio)."""
    if len(shells) < 3:
        return 0.0, math.inf, None
    i2, i1, i0 = shells[-3], shells[-2], shells[-1]
    if i0 == 0.0 and i1 == 0.0:
        return 0.0, 0.0, 0.0
    if i1 == 0.0 or i2 == 0.0:
        # rising out of an underflowed stretch: nothing to extrapolate from
        return 0.0, math.inf, None
    q, q_prev = i0 / i1, i1 / i2
    if not (0.0 <= q < 1.0 and 0.0 <= q_prev < 1.0):
        return 0.0, math.inf, q
    rem = i0 * q / (1.0 - q)
    rem_prev = i0 * q_prev / (1.0 - q_prev)
    unc = 4.0 * abs(rem - rem_prev) + 64 * _EPS * abs(rem)
    return rem, unc, q


def _integrate_finite(f, lo, hi, tol, budget):
    mid = 0.5 * (lo + hi)
    half = mid - lo
    vl, el, _ = _side(f, lo, half, -1, tol, budget)
    vr, er, _ = _side(f, hi, hi - mid, +1, tol, budget)
    need = max(tol.abs_tol, tol.rel_tol * abs(vl + vr))
    if el + er > need:
        # the halves cancel, so each must be resolved to the accuracy of the sum
        scale = max(abs(vl), abs(vr))
        tight = Tolerances(0.25 * need, max(0.25 * need / scale, 4 * _EPS), tol.max_subdivisions)
        vl, el, _ = _side(f, lo, half, -1, tight, budget)
        vr, er, _ = _side(f, hi, hi - mid, +1, tight, budget)
    return vl + vr, el + er


def integrate(f: Callable, lo: float, hi: float, tol: Tolerances = DEFAULT_TOL) -> QuadratureResult:
    """Integrate ``f`` over ``(lo, hi)``; ``hi`` may be ``+inf``.

    ``f`` should accept numpy arrays (scalar callables are wrapped).
    Integrable endpoint singularities are allowed.  Raises
    :class:`NonIntegrable` for divergent integrals and :class:`NonConvergent`
    when the error estimate cannot be pushed below
    ``max(abs_tol, rel_tol*|value|)``.
    """
    if math.isnan(lo) or math.isnan(hi) or lo == -math.inf:
        raise DomainError("lower limit must be finite")
    if hi < lo:
        r = integrate(f, hi, lo, tol)
        return QuadratureResult(-r.value, r.abs_error_estimate, r.subdivisions)
    if hi == lo:
        return QuadratureResult(0.0, 0.0, 1)
    f = as_vectorized(f)
    budget = _Budget(tol.max_subdivisions)
    if math.isinf(hi):
        c = max(lo, 0.0) + 1.0

        def g(u):
            v = f(c / u)
            # the Jacobian overflows near u = 0 where v has already underflowed
            with np.errstate(over="ignore", invalid="ignore"):
                return np.where(v == 0, 0.0, v * (c / (u * u)))

        v1, e1 = _integrate_finite(f, lo, c, tol, budget)
        v2, e2 = _integrate_finite(g, 0.0, 1.0, tol, budget)
        value, err = v1 + v2, e1 + e2
    else:
        value, err = _integrate_finite(f, lo, hi, tol, budget)
    if abs(value) > OVERFLOW_GUARD:
        raise NonIntegrable("integral exceeds the overflow guard")
    if err > max(tol.abs_tol, tol.rel_tol * abs(value)):
        raise NonConvergent(f"error estimate {err:.3g} exceeds tolerance", partial=(value, err))
    return QuadratureResult(float(value), float(err), max(1, budget.used + 1))


# Lanczos approximation, g = 7, n = 9.
_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993, 676.5203681218851, -1259.1392167224028,
    771.32342877765313, -176.61502916214059, 12.507343278686905,
    -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7)
_SQRT_2PI = math.sqrt(2.0 * math.pi)


def _lanczos_log_gamma(x):
    z = x - 1.0
    s = _LANCZOS_COEF[0]
    for i, c in enumerate(_LANCZOS_COEF[1:], start=1):
        s = s + c / (z + i)
    t = z + _LANCZOS_G + 0.5
    return math.log(_SQRT_2PI) + (z + 0.5) * np.log(t) - t + np.log(s)


def log_gamma(x):
    """ln Gamma(x) for x > 0 (scalar or array)."""
    arr = np.asarray(x, dtype=float)
    if not np.all(arr > 0):
        raise DomainError("gamma is only defined here for x > 0")
    small = arr < 0.5
    out = _lanczos_log_gamma(np.where(small, arr + 1.0, arr)) - np.where(small, np.log(arr), 0.0)
    return float(out) if np.ndim(x) == 0 else out


def gamma(x):
    """Gamma function for real x > 0; exact at positive integers up to 171."""
    if np.ndim(x) == 0:
        xf = float(x)
        if not xf > 0:
            raise DomainError("gamma is only defined here for x > 0")
        if xf.is_integer() and xf <= 171:
            return float(math.factorial(int(xf) - 1))
        if xf < 0.5:
            return gamma(xf + 1.0) / xf
        z = xf - 1.0
        s = _LANCZOS_COEF[0]
        for i, c in enumerate(_LANCZOS_COEF[1:], start=1):
            s += c / (z + i)
        t = z + _LANCZOS_G + 0.5
        if xf > 140:
            return math.exp(_lanczos_log_gamma(xf))
        return _SQRT_2PI * t ** (z + 0.5) * math.exp(-t) * s
    arr = np.asarray(x, dtype=float)
    return np.array([gamma(v) for v in arr.ravel()]).reshape(arr.shape)


def find_root_monotone(g: Callable[[float], float], lo: float, hi: float,
                       tol: Tolerances = DEFAULT_TOL) -> float:
    """Root of a strictly monotone scalar function.

    The bracket is expanded geometrically (multiplicatively when ``lo > 0``)
    until a sign change appears or the 1e300 guard is hit.  Infinite values
    are accepted at trial points and count with their sign.
    """
    if not lo < hi:
        raise DomainError("need lo < hi")
    glo, ghi = g(lo), g(hi)
    positive_axis = lo > 0
    for _ in range(2000):
        if glo == 0:
            return lo
        if ghi == 0:
            return hi
        if np.sign(glo) != np.sign(ghi) and not (math.isnan(glo) or math.isnan(ghi)):
            break
        if math.isnan(glo) or math.isnan(ghi):
            raise NoBracket("function is NaN at a bracket end")
        increasing = ghi > glo
        root_below = (glo > 0) == increasing
        if root_below:
            hi, ghi = lo, glo
            lo = lo / 4.0 if positive_axis else lo - 2.0 * max(1.0, hi - lo, abs(lo))
            if (positive_axis and lo < 1e-300) or abs(lo) > 1e300:
                raise NoBracket("no sign change below the overflow guard")
            glo = g(lo)
        else:
            lo, glo = hi, ghi
            hi = hi * 4.0 if positive_axis else hi + 2.0 * max(1.0, hi - lo, abs(hi))
            if abs(hi) > 1e300:
                raise NoBracket("no sign change above the overflow guard")
            ghi = g(hi)
    else:
        raise NoBracket("bracket expansion did not terminate")
    # shrink infinite ends so that brentq sees finite values
    for _ in range(400):
        if math.isfinite(glo) and math.isfinite(ghi):
            break
        mid = math.sqrt(lo * hi) if positive_axis else 0.5 * (lo + hi)
        gm = g(mid)
        if gm == 0:
            return mid
        if np.sign(gm) == np.sign(glo):
            lo, glo = mid, gm
        else:
            hi, ghi = mid, gm
    else:
        raise NoBracket("could not find finite bracket values")
    return float(brentq(g, lo, hi, xtol=tol.abs_tol, rtol=max(4 * _EPS, 1e-3 * tol.rel_tol),
                        maxiter=500))


def grid_points(lo: float, hi: float, n: int = 512, inf_cap: float = 1e4, depth: float = 12.0) -> np.ndarray:
    """Scan grid on the open interval (lo, hi), log-clustered toward both ends.

    For ``hi = +inf`` the grid is log-spaced in ``p - lo`` up to ``inf_cap``.
    """
    if math.isinf(hi):
        d = np.logspace(-depth, math.log10(max(inf_cap - lo, 1.0)), n)
        return lo + d
    half = 0.5 * (hi - lo)
    m = n // 2
    d = half * np.logspace(-depth, 0.0, m, endpoint=False)
    left = lo + d
    right = hi - d[::-1]
    pts = np.unique(np.concatenate([left, [lo + half], right]))
    return pts[(pts > lo) & (pts < hi)]


def _golden(h, a, b, maximize, tol, max_iter=200):
    sign = -1.0 if maximize else 1.0
    phi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = b - phi * (b - a)
    x2 = a + phi * (b - a)
    f1, f2 = sign * h(x1), sign * h(x2)
    for _ in range(max_iter):
        if abs(b - a) <= max(tol.abs_tol, 1e-3 * tol.rel_tol * (abs(a) + abs(b))):
            break
        if f1 <= f2 or not math.isfinite(f2):
            b, x2, f2 = x2, x1, f1
            x1 = b - phi * (b - a)
            f1 = sign * h(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + phi * (b - a)
            f2 = sign * h(x2)
    if f1 <= f2:
        return x1, sign * f1
    return x2, sign * f2


def scan(h: Callable[[float], float], xs: np.ndarray) -> np.ndarray:
    """Evaluate ``h`` on ``xs``; NaN marks points where numerics failed."""
    from .errors import EvaluationError, NormInfinite
    ys = np.empty(len(xs))
    for i, x in enumerate(xs):
        try:
            ys[i] = float(h(float(x)))
        except (NormInfinite, NonIntegrable):
            ys[i] = math.inf
        except (NonConvergent, NoBracket, EvaluationError, DomainError):
            ys[i] = math.nan
    return ys


def refine_optimum(h, xs, ys, i, lo, hi, maximize, tol):
    """Golden-section refinement around grid index ``i``; never worse than the grid."""
    a = xs[i - 1] if i > 0 else (lo if math.isfinite(lo) else xs[0])
    b = xs[i + 1] if i + 1 < len(xs) else (hi if math.isfinite(hi) else xs[-1])
    if i == 0 and math.isfinite(lo):
        a = lo + 0.5 * (xs[0] - lo)
    if i + 1 == len(xs) and math.isfinite(hi):
        b = hi - 0.5 * (hi - xs[-1])

    def hs(x):
        v = scan(h, [x])[0]
        if math.isnan(v):
            return -math.inf if maximize else math.inf
        return v

    x, v = _golden(hs, a, b, maximize, tol)
    better = (v > ys[i]) if maximize else (v < ys[i])
    if better and math.isfinite(v):
        return x, v
    return float(xs[i]), float(ys[i])


def optimize_1d(h: Callable[[float], float], lo: float, hi: float, sense: str = "min",
                tol: Tolerances = DEFAULT_TOL, n_grid: int = 512, inf_cap: float = 1e4):
    """Global min/max of ``h`` on (lo, hi): log-clustered grid scan + golden section.

    Returns ``(argopt, opt)``.  Non-finite grid values are skipped; if every
    value is non-finite :class:`AllSingular` is raised.  An infinite value in
    the favourable direction is returned as is.
    """
    if sense not in ("min", "max"):
        raise DomainError("sense must be 'min' or 'max'")
    if not lo < hi:
        raise DomainError("need lo < hi")
    maximize = sense == "max"
    xs = grid_points(lo, hi, n_grid, inf_cap)
    ys = scan(h, xs)
    target_inf = math.inf if maximize else -math.inf
    hit = np.flatnonzero(ys == target_inf)
    if len(hit):
        return float(xs[hit[0]]), target_inf
    finite = np.isfinite(ys)
    if not np.any(finite):
        raise AllSingular("objective is non-finite at every grid point")
    masked = np.where(finite, ys, -math.inf if maximize else math.inf)
    i = int(np.argmax(masked) if maximize else np.argmin(masked))
    return refine_optimum(h, xs, ys, i, lo, hi, maximize, tol)
