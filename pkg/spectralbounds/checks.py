"""Labeled bounds and pass/fail verdicts.

A verdict stores both sides of the inequality it checks, so it can be re-evaluated from a stored
report without recomputing anything.
"""

from dataclasses import asdict, dataclass
from typing import Optional

from spectralbounds.numerics import TOLERANCE, leq

APPLICABLE = "applicable"
INAPPLICABLE = "inapplicable"
HEURISTIC = "heuristic"

LAMBDA0 = "lambda0"
LAMBDA0_ESS = "lambda0_ess"
ALPHA = "alpha"
ALPHA_ESS = "alpha_ess"


@dataclass(frozen=True)
class Bound:
    """A lower or upper bound for ``target``; ``value`` is None when the bound does not apply."""
    name: str
    value: Optional[float]
    source: str
    applicability: str = APPLICABLE
    target: str = LAMBDA0

    @property
    def usable(self) -> bool:
        return self.applicability != INAPPLICABLE and self.value is not None

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, record: dict) -> "Bound":
        return cls(**record)


@dataclass(frozen=True)
class Verdict:
    """The check lhs <= rhs, up to a relative slack ``rtol``."""
    name: str
    passed: bool
    lhs: Optional[float]
    rhs: Optional[float]
    source: str
    rtol: float = TOLERANCE
    detail: str = ""

    def recheck(self) -> bool:
        if self.lhs is None or self.rhs is None:
            return self.passed
        return leq(self.lhs, self.rhs, self.rtol)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, record: dict) -> "Verdict":
        return cls(**record)


def check_leq(name: str, lhs: float, rhs: float, source: str, rtol: float = TOLERANCE, detail: str = "") -> Verdict:
    return Verdict(name, leq(lhs, rhs, rtol), float(lhs), float(rhs), source, rtol, detail)


def check_flag(name: str, passed: bool, source: str, detail: str = "") -> Verdict:
    """A verdict with no numeric sides, e.g. a monotonicity or consistency flag."""
    return Verdict(name, bool(passed), None, None, source, TOLERANCE, detail)
