"""Numerical norms, embedding constants and tail bounds for Lorentz-Zygmund,
Grand Lebesgue and Grand Zygmund spaces on the unit interval."""

__version__ = "0.1.0"

from .errors import (AllSingular, DomainError, EvaluationError, ModularNonMonotone, NoBracket,
                     NonConvergent, NonIntegrable, NormInfinite, NormlabError, ParseError,
                     PreconditionUnmet, VarianceWarning)
from .numerics import DEFAULT_TOL, Tolerances, gamma, integrate, log_gamma, optimize_1d
from .function_model import (Expression, PrescribedTail, Sample, Tabulated, TailFunction,
                             anti_distribution, lp_norm, parse_expression, read_csv,
                             rearrangement, sample_from_tail, tail_of)
from .report import Status, VerificationReport
from .orlicz import (YoungOrlicz, delta_envelope, delta_tail_bound, luxemburg_norm,
                     moment_bound_j, regime_fit, tail_bound_check)
from .grand_spaces import GeneratingFunction, GrandZygmundSpace, gls_norm, gzs_norm, gzs_tail_envelope
from .embeddings import (WeightFunction, embedding_check, kappa, sharpness_search, theta,
                         weighted_norm, zeta_constant)
from .tail_lab import (MonteCarloConfig, extremal_rv, moment_blowup_experiment,
                       tail_domination_experiment)
