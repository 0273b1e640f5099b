"""Structured pass/fail records for inequality instances."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field


def _clean(x):
    if isinstance(x, float):
        if math.isnan(x) or math.isinf(x):
            return repr(x)
        return x
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if hasattr(x, "item") and callable(x.item):  # numpy scalar
        return _clean(x.item())
    return x


@dataclass
class BoundReport:
    """One checked inequality.

    ``margin`` is oriented so that the check passes iff
    ``margin >= -tolerance``: ``lhs - rhs`` for lower bounds on ``lhs``,
    ``rhs - lhs`` for upper bounds.
    """

    name: str
    inputs: dict
    lhs: float
    rhs: float
    margin: float
    tolerance: float
    passed: bool = field(init=False)
    vacuous: bool = False
    note: str = ""
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        self.passed = bool(self.margin >= -self.tolerance)

    @classmethod
    def lower(cls, name, inputs, lhs, rhs, tolerance, **kw) -> "BoundReport":
        """Report for ``lhs >= rhs``."""
        return cls(name, inputs, lhs, rhs, lhs - rhs, tolerance, **kw)

    @classmethod
    def upper(cls, name, inputs, lhs, rhs, tolerance, **kw) -> "BoundReport":
        """Report for ``lhs <= rhs``."""
        return cls(name, inputs, lhs, rhs, rhs - lhs, tolerance, **kw)

    @property
    def failed_nonvacuous(self) -> bool:
        return not self.passed and not self.vacuous

    def to_dict(self) -> dict:
        return _clean({
            "name": self.name,
            "inputs": self.inputs,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "margin": self.margin,
            "tolerance": self.tolerance,
            "pass": self.passed,
            "vacuous": self.vacuous,
            "note": self.note,
            "extra": self.extra,
        })

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False)

    def summary(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        if self.vacuous:
            flag += " (vacuous)"
        return (f"[{flag}] {self.name} {self.inputs}: lhs={self.lhs:.10g} "
                f"rhs={self.rhs:.10g} margin={self.margin:.3g}")
