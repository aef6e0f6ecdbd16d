"""Pass/fail records carrying exact defects."""

from __future__ import annotations

from dataclasses import dataclass, field

from .jets import Scalar


@dataclass
class Check:
    name: str
    passed: bool
    defect: Scalar = field(default_factory=Scalar)
    detail: str = ""

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "defect": {"re": str(self.defect.re), "im": str(self.defect.im)},
            "detail": self.detail,
        }

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        tail = "" if self.passed else f"  defect={self.defect}"
        extra = f"  ({self.detail})" if self.detail else ""
        return f"{tag}  {self.name}{tail}{extra}"


@dataclass
class Report:
    title: str
    checks: list[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name: str, defect: Scalar, detail: str = "") -> Check:
        check = Check(name, not defect, defect, detail)
        self.checks.append(check)
        return check

    def add_bool(self, name: str, ok: bool, defect: Scalar | None = None, detail: str = "") -> Check:
        check = Check(name, ok, defect if defect is not None else Scalar(0 if ok else 1), detail)
        self.checks.append(check)
        return check

    def extend(self, other: "Report", prefix: str = "") -> None:
        for c in other.checks:
            self.checks.append(Check(prefix + c.name, c.passed, c.defect, c.detail))

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {"title": self.title, "passed": self.passed, "checks": [c.to_dict() for c in self.checks]}

    def lines(self) -> list[str]:
        return [c.line() for c in self.checks]
