"""Exception hierarchy shared by all normlab modules."""


class NormlabError(Exception):
    """Base class for every error raised by normlab."""


class DomainError(NormlabError, ValueError):
    """An argument lies outside the domain of the operation."""


class NonConvergent(NormlabError):
    """A numerical routine exhausted its budget before meeting tolerance."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class NonIntegrable(NormlabError):
    """The integral diverges (or overflows the 1e300 guard)."""

    def __init__(self, message, endpoint=None):
        super().__init__(message)
        self.endpoint = endpoint


class NoBracket(NormlabError):
    """A sign change could not be bracketed within the overflow guard."""


class AllSingular(NormlabError):
    """The objective was non-finite at every grid point."""


class EvaluationError(NormlabError):
    """A function model could not be evaluated to finite values."""


class ParseError(NormlabError, ValueError):
    """Malformed expression source.

    ``position`` is the 0-based character offset of the offending token and
    ``expected`` the set of token kinds that would have been accepted there.
    """

    def __init__(self, message, position, expected=()):
        self.position = position
        self.expected = frozenset(expected)
        exp = ", ".join(sorted(self.expected))
        super().__init__(f"{message} at offset {position}" + (f" (expected {exp})" if exp else ""))


class NormInfinite(NormlabError):
    """The requested norm is +infinity; ``diagnosis`` says where it blew up."""

    def __init__(self, message, diagnosis=None, endpoint=None):
        super().__init__(message)
        self.diagnosis = diagnosis or message
        self.endpoint = endpoint


class ModularNonMonotone(NormlabError):
    """mu -> E N(f/mu) is not decreasing, so the Luxemburg infimum is ill-posed."""


class PreconditionUnmet(NormlabError):
    """A verification precondition failed (e.g. Young functions not ordered)."""


class VarianceWarning(UserWarning):
    """Monte Carlo estimate whose relative error band exceeds 50%."""
