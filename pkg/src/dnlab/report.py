"""Structured pass/fail records shared by every verification routine."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

SCHEMA_VERSION = "1.0"


def jsonable(v: Any) -> Any:
    if isinstance(v, bool) or v is None or isinstance(v, (int, str)):
        return v
    if isinstance(v, float):
        return v if math.isfinite(v) else repr(v)
    if isinstance(v, Fraction):
        return str(v) if v.denominator != 1 else int(v)
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, dict):
        return {str(k): jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [jsonable(x) for x in v]
    return repr(v)


@dataclass
class Check:
    identity: str
    lhs: Any
    rhs: Any
    passed: bool
    relative_error: float | None = None
    tolerance: float | None = None
    provenance: list[str] = field(default_factory=list)
    severity: str = "error"  # "warning" entries never fail a report

    def to_dict(self) -> dict:
        return {
            "identity": self.identity,
            "lhs": jsonable(self.lhs),
            "rhs": jsonable(self.rhs),
            "relative_error": jsonable(self.relative_error),
            "tolerance": jsonable(self.tolerance),
            "pass": bool(self.passed),
            "severity": self.severity,
            "provenance": list(self.provenance),
        }


def relative_error(lhs: float, rhs: float) -> float:
    lhs, rhs = complex(lhs), complex(rhs)
    scale = max(abs(rhs), 1e-300)
    return abs(lhs - rhs) / scale if rhs != 0 else abs(lhs)


@dataclass
class VerificationReport:
    name: str
    checks: list[Check] = field(default_factory=list)
    constants: dict[str, Any] = field(default_factory=dict)
    partial: bool = False
    notes: list[str] = field(default_factory=list)

    def exact(self, identity: str, lhs, rhs, provenance=(), severity="error") -> Check:
        c = Check(identity, lhs, rhs, lhs == rhs, provenance=list(provenance), severity=severity)
        self.checks.append(c)
        return c

    def close(self, identity: str, lhs: float, rhs: float, tol: float, provenance=(),
              severity="error", absolute: bool = False) -> Check:
        err = abs(complex(lhs) - complex(rhs)) if absolute else relative_error(lhs, rhs)
        c = Check(identity, lhs, rhs, bool(err < tol), relative_error=err, tolerance=tol,
                  provenance=list(provenance), severity=severity)
        self.checks.append(c)
        return c

    def flag(self, identity: str, passed: bool, value=None, provenance=(), severity="error") -> Check:
        c = Check(identity, value, None, bool(passed), provenance=list(provenance), severity=severity)
        self.checks.append(c)
        return c

    def extend(self, other: "VerificationReport", prefix: str = "") -> None:
        for c in other.checks:
            if prefix:
                c = Check(f"{prefix}{c.identity}", c.lhs, c.rhs, c.passed, c.relative_error,
                          c.tolerance, c.provenance, c.severity)
            self.checks.append(c)
        self.constants.update({f"{prefix}{k}": v for k, v in other.constants.items()})
        self.partial = self.partial or other.partial
        self.notes.extend(other.notes)

    @property
    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed and c.severity == "error"]

    @property
    def warnings(self) -> list[Check]:
        return [c for c in self.checks if not c.passed and c.severity != "error"]

    @property
    def ok(self) -> bool:
        return not self.failures

    @property
    def status(self) -> str:
        if self.failures:
            return "fail"
        return "partial" if self.partial else "pass"

    def exit_code(self) -> int:
        return {"pass": 0, "fail": 1, "partial": 3}[self.status]

    def get(self, identity: str) -> Check:
        for c in self.checks:
            if c.identity == identity:
                return c
        raise KeyError(identity)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "report": self.name,
            "status": self.status,
            "n_checks": len(self.checks),
            "n_failures": len(self.failures),
            "n_warnings": len(self.warnings),
            "checks": [c.to_dict() for c in self.checks],
            "constants": jsonable(self.constants),
            "notes": list(self.notes),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["identity", "lhs", "rhs", "relative_error", "tolerance", "pass", "severity"])
        for c in self.checks:
            d = c.to_dict()
            w.writerow([d["identity"], json.dumps(d["lhs"]), json.dumps(d["rhs"]),
                        d["relative_error"], d["tolerance"], d["pass"], d["severity"]])
        return buf.getvalue()
