"""Structured outcome of an inequality or identity check."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field


class Status(str, enum.Enum):
    PASS = "pass"
    FAIL = "fail"
    INCONCLUSIVE = "inconclusive"


def _clean(v):
    if isinstance(v, float) and not math.isfinite(v):
        return "inf" if v > 0 else ("-inf" if v < 0 else "nan")
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if hasattr(v, "item") and not isinstance(v, (str, bytes)):
        return _clean(v.item())
    return v


@dataclass
class VerificationReport:
    """``lhs <relation> rhs`` with a relative slack and a numerical error budget.

    For ``le``: with v = lhs - rhs and s = rel_slack*|rhs|, the check passes
    when v + error_budget <= s, fails when v - error_budget > s, and is
    inconclusive otherwise (the margin is smaller than the error budget).
    ``eq`` applies the same rule to |lhs - rhs|; ``ge`` to rhs - lhs.
    ``finite`` certifies only that ``lhs`` is finite (``rhs`` is unused).
    """

    name: str
    lhs: float
    rhs: float
    relation: str = "le"
    rel_slack: float = 0.0
    error_budget: float = 0.0
    params: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)

    @property
    def margin(self):
        if self.relation == "finite":
            return math.nan
        if self.relation == "le":
            return self.rhs - self.lhs
        if self.relation == "ge":
            return self.lhs - self.rhs
        return -abs(self.lhs - self.rhs)

    @property
    def status(self) -> Status:
        if self.relation == "finite":
            return Status.PASS if math.isfinite(self.lhs) else Status.INCONCLUSIVE
        if not (math.isfinite(self.lhs) and math.isfinite(self.rhs)) or math.isnan(self.error_budget):
            return Status.INCONCLUSIVE
        slack = self.rel_slack * abs(self.rhs)
        violation = -self.margin
        if violation + self.error_budget <= slack:
            return Status.PASS
        if violation - self.error_budget > slack:
            return Status.FAIL
        return Status.INCONCLUSIVE

    @property
    def passed(self):
        return self.status is Status.PASS

    def to_dict(self):
        return _clean({
            "name": self.name,
            "relation": self.relation,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "margin": self.margin,
            "rel_slack": self.rel_slack,
            "error_budget": self.error_budget,
            "status": self.status.value,
            "params": dict(self.params),
            "extras": dict(self.extras),
        })
