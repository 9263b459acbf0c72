"""Result records produced by every verifier."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field


@dataclass
class IdentityReport:
    """Outcome of checking one identity or inequality.

    ``residual_rel`` divides ``residual_abs`` by ``max(|lhs|, |rhs|, floor)``
    where ``floor`` is ``1e-14`` times the sum of the absolute values of all
    ``terms`` (and of ``lhs``/``rhs``); this keeps equality cases, where both
    sides vanish, away from 0/0.
    """

    name: str
    lhs: float
    rhs: float
    passed: bool
    hypothesis_met: bool = True
    tol: float = 0.0
    terms: dict[str, float] = field(default_factory=dict)
    flags: dict[str, bool] = field(default_factory=dict)
    residual_abs: float = field(init=False)
    residual_rel: float = field(init=False)

    def __post_init__(self):
        self.lhs = float(self.lhs)
        self.rhs = float(self.rhs)
        self.terms = {key: float(value) for key, value in self.terms.items()}
        self.residual_abs = abs(self.lhs - self.rhs)
        scale = abs(self.lhs) + abs(self.rhs) + sum(abs(v) for v in self.terms.values() if math.isfinite(v))
        floor = 1e-14 * scale if scale > 0 else 1e-300
        self.residual_rel = self.residual_abs / max(abs(self.lhs), abs(self.rhs), floor)
        # a verifier never fails a case whose hypotheses are unmet
        self.passed = bool(self.passed) and bool(self.hypothesis_met)
        self.hypothesis_met = bool(self.hypothesis_met)

    @property
    def status(self) -> str:
        if not self.hypothesis_met:
            return "hypothesis-not-met"
        return "pass" if self.passed else "FAIL"

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "residual_abs": self.residual_abs,
            "residual_rel": self.residual_rel,
            "pass": self.passed,
            "hypothesis_met": self.hypothesis_met,
            "tol": self.tol,
            "terms": dict(self.terms),
            "flags": dict(self.flags),
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data: dict) -> "IdentityReport":
        return cls(
            name=data["name"],
            lhs=data["lhs"],
            rhs=data["rhs"],
            passed=data["pass"],
            hypothesis_met=data["hypothesis_met"],
            tol=data.get("tol", 0.0),
            terms=data.get("terms", {}),
            flags=data.get("flags", {}),
        )
