"""Structured results of verification runs."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field


@dataclass
class CheckResult:
    name: str
    samples: int
    worst: float
    tolerance: float
    passed: bool | None = None
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        self.worst = float(self.worst)
        if self.passed is None:
            self.passed = math.isfinite(self.worst) and self.worst <= self.tolerance
        self.passed = bool(self.passed)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"[{status}] {self.name}: worst={self.worst:.3e} tol={self.tolerance:.1e} "
                f"n={self.samples}")

    def to_dict(self) -> dict:
        out = {"name": self.name, "samples": self.samples, "worst": self.worst,
               "tolerance": self.tolerance, "passed": self.passed}
        if self.info:
            out["info"] = self.info
        return out


@dataclass
class VerifyReport:
    checks: list[CheckResult]
    meta: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def extend(self, other: "VerifyReport") -> None:
        self.checks.extend(other.checks)

    def to_dict(self) -> dict:
        return {**self.meta, "passed": self.passed, "checks": [c.to_dict() for c in self.checks]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False)
