# models/report.py - verification check results and their JSON persistence

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional

import orjson


class CheckStatus(Enum):
    """Outcome of one named invariant check."""
    PASS = "pass"
    FAIL = "fail"
    ERROR = "error"


@dataclass
class CheckResult:
    """One invariant: what was measured, against which bound, and the verdict."""
    name: str
    measured: float
    bound: float
    status: CheckStatus
    detail: str = ""
    extra: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def compare(cls, name: str, measured: float, bound: float, detail: str = "", **extra) -> "CheckResult":
        """PASS iff measured <= bound (NaN fails)."""
        ok = bool(measured <= bound)
        return cls(name, float(measured), float(bound), CheckStatus.PASS if ok else CheckStatus.FAIL, detail, extra)

    @classmethod
    def at_least(cls, name: str, measured: float, minimum: float, detail: str = "", **extra) -> "CheckResult":
        """PASS iff measured >= minimum (NaN fails)."""
        ok = bool(measured >= minimum)
        return cls(name, float(measured), float(minimum), CheckStatus.PASS if ok else CheckStatus.FAIL, detail, extra)

    @classmethod
    def error(cls, name: str, exc: Exception) -> "CheckResult":
        return cls(name, float("nan"), float("nan"), CheckStatus.ERROR, f"{type(exc).__name__}: {exc}")

    @property
    def passed(self) -> bool:
        return self.status == CheckStatus.PASS

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary for the summary file."""
        return {
            "name": self.name,
            "measured": self.measured,
            "bound": self.bound,
            "status": self.status.value,
            "detail": self.detail,
            **({"extra": self.extra} if self.extra else {}),
        }


class VerificationReport:
    """Ordered collection of check results."""

    def __init__(self, results: Optional[List[CheckResult]] = None):
        self._results: List[CheckResult] = list(results or [])

    def add(self, result: CheckResult) -> CheckResult:
        self._results.append(result)
        return result

    def get_all(self) -> List[CheckResult]:
        return self._results.copy()

    def get_by_status(self, status: CheckStatus) -> List[CheckResult]:
        return [r for r in self._results if r.status == status]

    def get(self, name: str) -> Optional[CheckResult]:
        for r in self._results:
            if r.name == name:
                return r
        return None

    def counts_by_status(self) -> Dict[str, int]:
        return {status.value: len(self.get_by_status(status)) for status in CheckStatus}

    @property
    def passed(self) -> bool:
        return bool(self._results) and all(r.passed for r in self._results)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "passed": self.passed,
            "counts": self.counts_by_status(),
            "checks": [r.to_dict() for r in self._results],
        }

    def save(self, filename: str) -> None:
        with open(filename, "wb") as f:
            f.write(orjson.dumps(self.to_dict(), option=orjson.OPT_INDENT_2 | orjson.OPT_SERIALIZE_NUMPY))

    @classmethod
    def load(cls, filename: str) -> "VerificationReport":
        with open(filename, "rb") as f:
            data = orjson.loads(f.read())
        results = [
            CheckResult(
                name=item["name"],
                measured=_num(item["measured"]),
                bound=_num(item["bound"]),
                status=CheckStatus(item["status"]),
                detail=item.get("detail", ""),
                extra=item.get("extra", {}),
            )
            for item in data.get("checks", [])
        ]
        return cls(results)


def _num(value) -> float:
    # orjson writes NaN as null
    return float("nan") if value is None else float(value)
