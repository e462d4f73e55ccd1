"""Exception hierarchy shared by all subsystems."""

from __future__ import annotations


class AcwaError(Exception):
    """Base class for every error raised by the package."""


class DomainError(AcwaError, ValueError):
    """An argument lies outside the interval a correlation is valid on."""


class RegimeConstraintError(AcwaError):
    """Flow fell in the transitional band while the strict regime policy is active."""

    def __init__(self, reynolds: float, link: str | None = None) -> None:
        self.reynolds = reynolds
        self.link = link
        where = f" on link {link!r}" if link else ""
        super().__init__(
            f"flow regime constraint violated{where}: Re = {reynolds:.1f} lies in the "
            "transitional band [2300, 4000]; the simulator requires flow to be "
            "either laminar or turbulent (strict regime policy)"
        )


class SolverError(AcwaError):
    """An iterative solve failed to converge within its iteration cap."""

    def __init__(self, message: str, residual: float) -> None:
        self.residual = residual
        super().__init__(f"{message} (last residual {residual:.3e})")


class ContractViolation(AcwaError):
    """A caller broke a precondition of a transport or mixing operation."""


class ScenarioError(AcwaError):
    """A scenario document could not be parsed into a Scenario."""

    def __init__(self, problems: list[str]) -> None:
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class ValidationFailed(AcwaError):
    """A scenario carries validation Errors and cannot be simulated."""

    def __init__(self, report) -> None:
        self.report = report
        super().__init__("scenario rejected:\n" + report.format())


class InvariantBreach(AcwaError):
    """The engine detected an internal invariant violation mid-run."""

    def __init__(self, message: str, dump: dict | None = None) -> None:
        self.dump = dump or {}
        super().__init__(message)


class ConfigError(AcwaError):
    """Sensor bindings or attack specifications are inconsistent."""

    def __init__(self, problems: list[str]) -> None:
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))
