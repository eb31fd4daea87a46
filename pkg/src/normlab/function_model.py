"""Functions on the probability space ((0,1), Lebesgue).

A random variable is represented by any function on (0,1) with the same
law: an arithmetic expression in ``t``, a table of values on a partition of
(0,1), or a prescribed tail function (whose generalized inverse is the
non-increasing representative).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Callable, Optional

import numpy as np

from . import expression as ex
from .errors import DomainError, EvaluationError, NonConvergent, NonIntegrable, NormInfinite
from .numerics import DEFAULT_TOL, Tolerances, integrate

_MAX_BITS = np.array([np.finfo(float).max]).view(np.int64)[0]


def unit_grid(n_uniform: int = 512) -> np.ndarray:
    """Scan grid on (0,1): uniform core plus geometric clusters at both ends."""
    h = 1.0 / n_uniform
    left = np.logspace(-300, math.log10(h), 601)
    core = np.linspace(h, 1.0 - h, n_uniform - 1)
    right = 1.0 - np.logspace(math.log10(h), -15, 61)
    return np.unique(np.concatenate([left, core, right]))


class FunctionModel:
    """Base class; subclasses are immutable and evaluate on numpy arrays."""

    kind = "abstract"
    label: Optional[str] = None

    def __call__(self, t):
        raise NotImplementedError

    @property
    def key(self):
        raise NotImplementedError

    def __hash__(self):
        return hash(self.key)

    def __eq__(self, other):
        return isinstance(other, FunctionModel) and self.key == other.key

    def __repr__(self):
        return f"{type(self).__name__}({self.label or self.key!r})"


class Expression(FunctionModel):
    kind = "expression"

    def __init__(self, src, label=None):
        if isinstance(src, ex.Node):
            self.node = src
            self.src = str(src)
        else:
            self.src = src
            self.node = ex.parse(src, ("t",))
        self.label = label or self.src
        self._check()

    def _check(self):
        v = self(unit_grid()[600:-60])
        if not np.all(np.isfinite(v)):
            raise EvaluationError(f"expression {self.src!r} is not finite on the scan grid")

    @property
    def key(self):
        return ("expr", str(self.node))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = ex.evaluate(self.node, t=t)
        return np.broadcast_to(np.asarray(out, dtype=float), t.shape).copy()

    def abs(self):
        return Expression(ex.Call("abs", (self.node,)), label=f"|{self.label}|")

    def reflected(self):
        """t -> f(1 - t)."""
        one_minus_t = ex.BinOp("-", ex.Num(1.0), ex.Var("t"))
        return Expression(self.node.substitute("t", one_minus_t), label=f"{self.label} o (1-t)")


class Tabulated(FunctionModel):
    """Piecewise constant function; cell i is (edges[i], edges[i+1]).

    Without explicit ``edges`` the partition is equal-mass: cell i is
    ((i-1)/n, i/n) in 1-based numbering.
    """

    kind = "tabulated"

    def __init__(self, values, edges=None, label=None):
        v = np.array(values, dtype=float).ravel()
        if v.size < 1:
            raise DomainError("tabulated function needs at least one value")
        if not np.all(np.isfinite(v)):
            raise EvaluationError("tabulated values must be finite")
        if edges is None:
            e = np.linspace(0.0, 1.0, v.size + 1)
            self.equal_mass = True
        else:
            e = np.array(edges, dtype=float).ravel()
            if e.size != v.size + 1 or e[0] != 0.0 or e[-1] != 1.0 or np.any(np.diff(e) < 0):
                raise DomainError("edges must increase from 0 to 1 with len(values)+1 entries")
            self.equal_mass = False
        self.values = v
        self.edges = e
        self.values.setflags(write=False)
        self.edges.setflags(write=False)
        self.label = label

    @cached_property
    def widths(self):
        # equal-mass cells get identical widths so that sums over cells do
        # not depend on the order of the values
        if self.equal_mass:
            return np.full(self.values.size, 1.0 / self.values.size)
        return np.diff(self.edges)

    @cached_property
    def key(self):
        return ("tab", hash(self.values.tobytes()), hash(self.edges.tobytes()))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.clip(np.searchsorted(self.edges, t, side="right") - 1, 0, self.values.size - 1)
        return self.values[idx]

    def weighted_sum(self, g):
        """Exact integral of g(f) over (0,1), order independent."""
        with np.errstate(all="ignore"):
            terms = self.widths * g(np.abs(self.values))
        if np.any(np.isnan(terms)):
            raise EvaluationError("integrand is NaN on a cell")
        return math.fsum(terms.tolist())


@dataclass(frozen=True, eq=False)
class TailFunction:
    """t -> P(|X| > t), non-increasing with values in [0, 1].

    ``quantile`` optionally supplies the generalized inverse directly.
    """

    eval: Callable
    support_hint: float = math.inf
    quantile: Optional[Callable] = field(default=None, compare=False)
    label: Optional[str] = None

    def __post_init__(self):
        if not self.support_hint > 0:
            raise DomainError("support_hint must be positive")
        self.validate()

    def __call__(self, t):
        with np.errstate(all="ignore"):
            return np.asarray(self.eval(np.asarray(t, dtype=float)), dtype=float)

    def validate(self, n=256):
        top = self.support_hint if math.isfinite(self.support_hint) else 1e6
        grid = np.concatenate([[0.0], np.geomspace(1e-8, top, n)])
        v = self(grid)
        if np.any(np.isnan(v)) or np.any(v < 0) or np.any(v > 1):
            raise DomainError("tail function values must lie in [0, 1]")
        if v[0] > 1:
            raise DomainError("tail function must satisfy T(0) <= 1")
        if np.any(np.diff(v) > 1e-12):
            raise DomainError("tail function must be non-increasing")

    def inverse(self, u):
        """inf{s >= 0 : T(s) < u}, elementwise."""
        if self.quantile is not None:
            return np.asarray(self.quantile(np.asarray(u, dtype=float)), dtype=float)
        return tail_quantile(self, u)


def tail_quantile(T, u):
    """Left-continuous generalized inverse of a tail function by bisection
    on the bit patterns of non-negative doubles (exact to one ulp)."""
    u = np.asarray(u, dtype=float)
    shape = u.shape
    u = u.ravel()
    lo = np.zeros(u.size, dtype=np.int64)
    hi = np.full(u.size, _MAX_BITS, dtype=np.int64)
    zero_ok = T(np.zeros(1))[0] < u
    never = T(np.full(1, np.finfo(float).max))[0] >= u
    active = ~(zero_ok | never)
    while np.any(active & (hi - lo > 1)):
        mid = lo + (hi - lo) // 2
        below = T(mid.view(np.float64)) < u
        hi = np.where(active & below, mid, hi)
        lo = np.where(active & ~below, mid, lo)
    out = hi.view(np.float64).copy()
    out[zero_ok] = 0.0
    out[never] = math.inf
    return out.reshape(shape)


class PrescribedTail(FunctionModel):
    """The non-increasing representative t -> inf{s : T(s) < t} of a tail."""

    kind = "prescribed_tail"

    def __init__(self, tail: TailFunction, label=None):
        self.tail = tail
        self.label = label or tail.label or "prescribed tail"

    @property
    def key(self):
        return ("tail", id(self.tail))

    def __call__(self, t):
        return self.tail.inverse(t)


@dataclass(frozen=True)
class Sample:
    values: np.ndarray
    seed: int

    def __post_init__(self):
        if self.values.size < 1:
            raise DomainError("sample must be non-empty")


def parse_expression(src: str) -> Expression:
    """Parse an expression in ``t`` into a function model."""
    return Expression(src)


def read_csv(path, label=None) -> Tabulated:
    """One value per line, optional ``value`` header; line i is cell ((i-1)/n, i/n)."""
    values = []
    with open(path, newline="", encoding="utf-8") as fh:
        for i, row in enumerate(csv.reader(fh)):
            if not row or not row[0].strip():
                continue
            cell = row[0].strip()
            if i == 0 and cell.lower() == "value":
                continue
            try:
                values.append(float(cell))
            except ValueError:
                raise DomainError(f"{path}: line {i + 1} is not a number: {cell!r}") from None
    return Tabulated(values, label=label or str(path))


# --------------------------------------------------------------------------
# distribution functions

def _abs_on(f, t):
    v = np.abs(f(t))
    if np.any(np.isnan(v)):
        raise EvaluationError(f"{f!r} is NaN on part of (0,1)")
    return v


def _level_measures(f: Expression, sigmas, strict=False):
    """Lebesgue measure of {|f| >= sigma} (or > sigma) for each sigma."""
    grid = unit_grid()
    v = _abs_on(f, grid)
    out = []
    for sigma in np.atleast_1d(sigmas):
        inside = v > sigma if strict else v >= sigma
        flips = np.flatnonzero(inside[:-1] != inside[1:])
        total = 0.0
        both = inside[:-1] & inside[1:]
        total += float(np.sum(np.diff(grid)[both]))
        if inside[0]:
            total += grid[0]
        if inside[-1]:
            total += 1.0 - grid[-1]
        if len(flips):
            a = grid[flips].copy()
            b = grid[flips + 1].copy()
            left_in = inside[flips]
            for _ in range(64):
                m = 0.5 * (a + b)
                vm = _abs_on(f, m)
                m_in = vm > sigma if strict else vm >= sigma
                same_as_left = m_in == left_in
                a = np.where(same_as_left, m, a)
                b = np.where(same_as_left, b, m)
            x = 0.5 * (a + b)
            total += float(np.sum(np.where(left_in, x - grid[flips], grid[flips + 1] - x)))
        out.append(min(1.0, max(0.0, total)))
    return np.array(out)


def anti_distribution(f: FunctionModel, sigma: float) -> float:
    """d_f(sigma) = measure of {t : |f(t)| >= sigma}."""
    if sigma < 0:
        raise DomainError("sigma must be non-negative")
    if sigma == 0:
        return 1.0
    if isinstance(f, Tabulated):
        return math.fsum(f.widths[np.abs(f.values) >= sigma].tolist())
    if isinstance(f, PrescribedTail):
        return float(f.tail(np.nextafter(sigma, 0.0)))
    return float(_level_measures(f, [sigma])[0])


def _fine_partition(resolution):
    h = 1.0 / resolution
    ratio = 1.01
    nl = int(math.ceil(math.log(h / 1e-300) / math.log(ratio)))
    left = np.geomspace(1e-300, h, nl + 1)
    core = np.linspace(h, 1.0 - h, resolution - 1)
    nr = int(math.ceil(math.log(h / 1e-15) / math.log(ratio)))
    dist = np.geomspace(h, 1e-15, nr + 1)
    edges = np.concatenate([[0.0], left, core[1:], 1.0 - dist[1:], [1.0]])
    a, b = edges[:-1], edges[1:]
    centers = 0.5 * (a + b)
    geo_l = (a > 0) & (b <= h)
    centers[geo_l] = np.sqrt(a[geo_l]) * np.sqrt(b[geo_l])
    geo_r = (a >= 1.0 - h) & (b < 1.0)
    centers[geo_r] = 1.0 - np.sqrt((1.0 - a[geo_r]) * (1.0 - b[geo_r]))
    return edges, centers


def _monotone_direction(f: Expression):
    v = _abs_on(f, unit_grid())
    if not np.all(np.isfinite(v)):
        return None
    d = np.diff(v)
    slack = 1e-12 * max(1.0, float(np.max(v)))
    if np.all(d <= slack):
        return "decreasing"
    if np.all(d >= -slack):
        return "increasing"
    return None


def rearrangement(f: FunctionModel, resolution: int = 4096) -> FunctionModel:
    """Non-increasing rearrangement f*(t) = inf{sigma > 0 : d_f(sigma) < t}.

    Tabulated input is sorted exactly.  Monotone expressions map to |f| or
    |f(1-t)|.  Other expressions become a step function on a fine partition
    (``resolution`` uniform cells plus geometric cells at both ends).
    """
    if isinstance(f, Tabulated):
        a = np.abs(f.values)
        order = np.argsort(-a, kind="stable")
        if f.equal_mass:
            return Tabulated(a[order], label=f"{f.label or 'f'}*")
        w = f.widths[order]
        edges = np.concatenate([[0.0], np.cumsum(w)])
        edges[-1] = 1.0
        return Tabulated(a[order], edges=np.minimum(edges, 1.0), label=f"{f.label or 'f'}*")
    if isinstance(f, PrescribedTail):
        return f
    direction = _monotone_direction(f)
    if direction == "decreasing":
        return f.abs()
    if direction == "increasing":
        return f.reflected().abs()
    edges, centers = _fine_partition(resolution)
    v = np.abs(f(centers))
    if not np.all(np.isfinite(v)):
        raise EvaluationError(f"{f!r} is not finite on the rearrangement partition")
    order = np.argsort(-v, kind="stable")
    w = np.diff(edges)[order]
    new_edges = np.concatenate([[0.0], np.cumsum(w)])
    new_edges[-1] = 1.0
    return Tabulated(v[order], edges=np.minimum(new_edges, 1.0), label=f"{f.label}*")


def is_non_increasing(f: FunctionModel) -> bool:
    if isinstance(f, PrescribedTail):
        return True
    if isinstance(f, Tabulated):
        return bool(np.all(np.diff(f.values) <= 0) and np.all(f.values >= 0))
    return _monotone_direction(f) == "decreasing" and bool(np.all(f(unit_grid()) >= 0))


# --------------------------------------------------------------------------
# norms and expectations

def expectation(f: FunctionModel, g: Callable, tol: Tolerances = DEFAULT_TOL):
    """(E g(|f|), error estimate).  Raises NonIntegrable for divergent integrals."""
    if isinstance(f, Tabulated):
        return f.weighted_sum(g), 0.0
    r = integrate(lambda t: g(np.abs(f(t))), 0.0, 1.0, tol)
    return r.value, r.abs_error_estimate


def _endpoint_growth(values):
    v1, v2, v3 = values
    return v3 > v2 > v1 and (v3 - v2) >= 0.5 * (v2 - v1)


def _ess_sup(f: FunctionModel, tol: Tolerances):
    if isinstance(f, Tabulated):
        return float(np.max(np.abs(f.values))), 0.0
    if isinstance(f, PrescribedTail):
        s = float(f.tail.inverse(np.array([0.0]))[0])
        if not math.isfinite(s):
            raise NormInfinite("essential supremum is infinite", diagnosis="tail never vanishes")
        return s, 0.0
    grid = unit_grid()
    v = _abs_on(f, grid)
    if np.any(np.isinf(v)):
        raise NormInfinite("function is infinite on the scan grid")
    near0 = _abs_on(f, np.array([1e-100, 1e-200, 1e-300]))
    near1 = _abs_on(f, 1.0 - np.array([1e-9, 1e-12, 1e-15]))
    if _endpoint_growth(near0):
        raise NormInfinite("unbounded near t = 0", diagnosis="growth toward t=0", endpoint=0.0)
    if _endpoint_growth(near1):
        raise NormInfinite("unbounded near t = 1", diagnosis="growth toward t=1", endpoint=1.0)
    i = int(np.argmax(v))
    a = grid[i - 1] if i > 0 else 0.0
    b = grid[i + 1] if i + 1 < len(grid) else 1.0
    from .numerics import _golden
    x, best = _golden(lambda s: float(_abs_on(f, np.array([s]))[0]), a, b, True, tol)
    return max(float(v[i]), best, float(np.max(near0)), float(np.max(near1))), 0.0


@lru_cache(maxsize=4096)
def lp_norm_with_error(f: FunctionModel, p: float, tol: Tolerances = DEFAULT_TOL):
    """(||f||_p, error estimate)."""
    if not p >= 1:
        raise DomainError("p must be >= 1")
    if math.isinf(p):
        return _ess_sup(f, tol)
    scale = 1.0
    try:
        m, err = expectation(f, lambda v: v ** p, tol)
        if math.isinf(m):
            raise NonIntegrable("integral exceeds the overflow guard")
    except NonIntegrable as exc:
        # E|f|^p may overflow while the norm itself is moderate: retry on
        # |f|/M with M the largest finite value seen on the scan grid
        scale = _grid_scale(f, p)
        if scale is None:
            raise NormInfinite(f"L^{p} norm is infinite", diagnosis=str(exc), endpoint=exc.endpoint) from None
        try:
            m, err = expectation(f, lambda v: (v / scale) ** p, tol)
        except NonIntegrable as exc2:
            raise NormInfinite(f"L^{p} norm is infinite", diagnosis=str(exc2),
                               endpoint=exc2.endpoint) from None
    if m == 0:
        return 0.0, scale * err ** (1.0 / p)
    value = scale * m ** (1.0 / p)
    return value, value * (err / m) / p


def _grid_scale(f, p):
    """M with E(|f|/M)^p of order one: M^p is the peak of t|f(t)|^p over
    the log-clustered grid (the integrand against d ln t)."""
    if isinstance(f, Tabulated):
        with np.errstate(divide="ignore"):
            lw = np.log(f.widths) + p * np.log(np.abs(f.values))
    else:
        grid = unit_grid()
        with np.errstate(all="ignore"):
            lw = np.log(np.minimum(grid, 1.0 - grid)) + p * np.log(np.abs(np.asarray(f(grid), dtype=float)))
    lw = lw[np.isfinite(lw)]
    if lw.size == 0:
        return None
    m = math.exp(float(lw.max()) / p)
    return m if 0 < m < math.inf else None


def lp_norm(f: FunctionModel, p: float, tol: Tolerances = DEFAULT_TOL) -> float:
    """||f||_p = (E|f|^p)^(1/p); ``p = inf`` gives the essential supremum."""
    return lp_norm_with_error(f, float(p), tol)[0]


# --------------------------------------------------------------------------
# tails and sampling

def tail_of(f: FunctionModel) -> TailFunction:
    """T(t) = P(|f| > t), computed as d_f at t nudged up by one ulp."""
    if isinstance(f, PrescribedTail):
        return f.tail
    if isinstance(f, Tabulated):
        a = np.abs(f.values)
        w = f.widths
        star = rearrangement(f)

        def T(t):
            t = np.atleast_1d(t)
            return np.array([math.fsum(w[a > x].tolist()) for x in t.ravel()]).reshape(t.shape)

        return TailFunction(T, support_hint=max(float(a.max()), 1e-300), quantile=star, label=f.label)

    star = rearrangement(f)

    def T(t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        flat = np.nextafter(t.ravel(), math.inf)
        return _level_measures(f, flat).reshape(t.shape)

    try:
        hint = _ess_sup(f, DEFAULT_TOL)[0] or 1e-300
    except NormInfinite:
        hint = math.inf
    return TailFunction(T, support_hint=hint, quantile=star, label=f.label)


def sample_from_tail(T: TailFunction, n: int, seed: int) -> Sample:
    """Inverse-transform sample: value_i = inf{t : T(t) < u_i}, u_i uniform on (0, 1]."""
    if n < 1:
        raise DomainError("n must be >= 1")
    rng = np.random.default_rng(seed)
    u = 1.0 - rng.random(n)
    return Sample(T.inverse(u), seed)
