from typing import Any, List, Mapping, NamedTuple, Optional, Sequence


class Check(NamedTuple):
    """
    Outcome of one validation check.

    Parameters:
        name (str, required):
            Stable identifier of the check, e.g. "unit_integral".

        passed (bool, required):
            Whether the check holds.

        value (float, optional, default None):
            The measured quantity, if the check measures one.

        tolerance (float, optional, default None):
            The tolerance the value was compared against.

        severity (str, optional, default "error"):
            "error" for checks that decide validity, "warning" for advisory checks.

        message (str, optional, default ""):
            Human readable explanation.
    """

    name: str
    passed: bool
    value: Optional[float] = None
    tolerance: Optional[float] = None
    severity: str = "error"
    message: str = ""

    def to_json(self) -> Mapping[str, Any]:
        return self._replace(
            passed=bool(self.passed),
            value=None if self.value is None else float(self.value),
            tolerance=None if self.tolerance is None else float(self.tolerance),
        )._asdict()

    @staticmethod
    def from_json(json: Mapping[str, Any]) -> "Check":
        return Check(**json)


class ValidationReport(NamedTuple):
    """
    A list of checks about one subject. Building a report never raises; callers
    decide what to do with failures.

    Examples:
        >>> report = validate_filter(JumpPassFilter(), quadrature_points=10_000)
        >>> report.passed
        True
    """

    subject: str
    checks: Sequence[Check]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if c.severity == "error")

    @property
    def failures(self) -> List[Check]:
        return [c for c in self.checks if c.severity == "error" and not c.passed]

    @property
    def warnings(self) -> List[Check]:
        return [c for c in self.checks if c.severity == "warning" and not c.passed]

    def check(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_json(self) -> Mapping[str, Any]:
        return {
            "subject": self.subject,
            "passed": self.passed,
            "checks": [c.to_json() for c in self.checks],
        }

    @staticmethod
    def from_json(json: Mapping[str, Any]) -> "ValidationReport":
        return ValidationReport(
            subject=json["subject"],
            checks=[Check.from_json(c) for c in json["checks"]],
        )
