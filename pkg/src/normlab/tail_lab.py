"""Monte Carlo exhibits: extremal variables with tail min(1, 1/N(t)),
empirical tails against analytic envelopes, and moment growth as s -> p."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, VarianceWarning
from .function_model import FunctionModel, Sample, TailFunction, sample_from_tail
from .numerics import DEFAULT_TOL, Tolerances, integrate
from .orlicz import YoungOrlicz, delta_envelope, moment_bound_j


@dataclass(frozen=True)
class MonteCarloConfig:
    n: int = 100_000
    seed: int = 0
    confidence: float = 0.99

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 100:
            raise DomainError("n must be an integer >= 100")
        if not 0 < self.confidence < 1:
            raise DomainError("confidence must lie in (0, 1)")

    def to_dict(self):
        return {"n": self.n, "seed": self.seed, "confidence": self.confidence}


def dkw_band(n: int, confidence: float = 0.99) -> float:
    """Half-width of the uniform confidence band for an empirical CDF."""
    return math.sqrt(math.log(2.0 / (1.0 - confidence)) / (2.0 * n))


def extremal_rv(p: float, alpha: float, cfg: MonteCarloConfig) -> Sample:
    """Sample with tail exactly min(1, 1/N_{p,alpha}(t))."""
    if not p > 1:
        raise DomainError("p must exceed 1")
    return sample_from_tail(delta_envelope(YoungOrlicz(p, alpha)), cfg.n, cfg.seed)


def empirical_tail(values, t):
    """Fraction of values strictly above each t."""
    x = np.sort(np.abs(np.asarray(values, dtype=float)))
    t = np.asarray(t, dtype=float)
    return 1.0 - np.searchsorted(x, t, side="right") / x.size


def default_t_grid(values, n=64):
    x = np.abs(np.asarray(values, dtype=float))
    top = float(np.max(x))
    if not top > 0:
        return np.geomspace(1e-3, 1.0, n)
    pos = x[x > 0]
    lo = min(float(np.quantile(pos, 0.01)), top) * 0.5
    return np.geomspace(lo, top, n)


@dataclass
class TailComparisonReport:
    t_grid: np.ndarray
    empirical_tail: np.ndarray
    envelope: np.ndarray
    dkw_band: float
    violations: int
    n: int
    seed: int
    confidence: float
    label: str = ""

    def to_dict(self):
        return {"label": self.label, "n": self.n, "seed": self.seed, "confidence": self.confidence,
                "dkw_band": self.dkw_band, "violations": self.violations,
                "t_grid": self.t_grid.tolist(), "empirical_tail": self.empirical_tail.tolist(),
                "envelope": self.envelope.tolist()}

    def csv_rows(self):
        header = ["t", "empirical", "envelope", "band"]
        rows = [[float(t), float(e), float(v), self.dkw_band]
                for t, e, v in zip(self.t_grid, self.empirical_tail, self.envelope)]
        return header, rows


def _draw(f_or_sample, cfg):
    if isinstance(f_or_sample, Sample):
        return f_or_sample.values, f_or_sample.seed
    if isinstance(f_or_sample, TailFunction):
        return sample_from_tail(f_or_sample, cfg.n, cfg.seed).values, cfg.seed
    if isinstance(f_or_sample, FunctionModel):
        # |f(U)| with U uniform on (0, 1] has the law of |f|
        rng = np.random.default_rng(cfg.seed)
        u = 1.0 - rng.random(cfg.n)
        return np.abs(np.asarray(f_or_sample(u), dtype=float)), cfg.seed
    return np.asarray(f_or_sample, dtype=float), cfg.seed


def tail_domination_experiment(f_or_sample, envelope, cfg: MonteCarloConfig,
                               t_grid=None, label: str = "") -> TailComparisonReport:
    """Count grid points where the empirical tail exceeds the envelope by more
    than the DKW band."""
    x, seed = _draw(f_or_sample, cfg)
    t = default_t_grid(x) if t_grid is None else np.asarray(t_grid, dtype=float)
    emp = empirical_tail(x, t)
    env = np.asarray(envelope(t), dtype=float) if callable(envelope) else np.asarray(envelope, dtype=float)
    band = dkw_band(x.size, cfg.confidence)
    violations = int(np.count_nonzero(emp - band > env))
    return TailComparisonReport(t, emp, env, band, violations, int(x.size), seed, cfg.confidence, label)


@dataclass
class MomentRow:
    s: float
    empirical: float
    j_value: float
    ratio: float
    rel_band: float
    tail_correction: float
    sample_max: float
    within_band: bool

    def to_dict(self):
        return dict(self.__dict__)


@dataclass
class MomentBlowupReport:
    p: float
    alpha: float
    n: int
    seed: int
    rows: list = field(default_factory=list)
    lower: float = 0.1
    upper: float = 1.0

    @property
    def passed(self):
        return all(r.within_band for r in self.rows)

    def to_dict(self):
        return {"p": self.p, "alpha": self.alpha, "n": self.n, "seed": self.seed,
                "lower": self.lower, "upper": self.upper, "passed": self.passed,
                "rows": [r.to_dict() for r in self.rows]}


def empirical_moment(values, s):
    """(mean of |x|^s, 3-sigma relative band of that mean)."""
    y = np.abs(np.asarray(values, dtype=float)) ** s
    m = float(np.mean(y))
    sd = float(np.std(y, ddof=1)) if y.size > 1 else math.inf
    band = 3.0 * sd / (math.sqrt(y.size) * m) if m > 0 else math.inf
    return m, band


def moment_blowup_experiment(p: float, alpha: float, s_grid, cfg: MonteCarloConfig,
                             tol: Tolerances = DEFAULT_TOL, lower: float = 0.1,
                             upper: float = 1.0) -> MomentBlowupReport:
    """Empirical E eta^s for the extremal variable against J(alpha, p, s).

    The sample mean is the moment truncated at the sample maximum M; the
    unseen part s * int_M^inf t^(s-1) min(1, 1/N(t)) dt is reported as
    ``tail_correction``.  A row is within band when
    lower <= ratio <= upper * (1 + rel_band).
    """
    s_arr = np.asarray(s_grid, dtype=float)
    if np.any(s_arr < 1) or np.any(s_arr >= p):
        raise DomainError("s_grid must lie in [1, p)")
    sample = extremal_rv(p, alpha, cfg)
    N = YoungOrlicz(p, alpha)
    M = float(np.max(sample.values))
    rep = MomentBlowupReport(p, alpha, cfg.n, cfg.seed, lower=lower, upper=upper)
    for s in s_arr:
        s = float(s)
        emp, band = empirical_moment(sample.values, s)
        if band > 0.5:
            warnings.warn(f"relative error band {band:.2f} at s = {s} exceeds 50%", VarianceWarning,
                          stacklevel=2)
        J = moment_bound_j(alpha, p, s, tol).j_value
        corr = s * integrate(lambda t: t ** (s - 1.0) / N(t), M, math.inf, tol).value if M > 0 else math.nan
        ratio = emp / J
        rep.rows.append(MomentRow(s, emp, J, ratio, band, corr, M,
                                  bool(lower <= ratio <= upper * (1.0 + band))))
    return rep
