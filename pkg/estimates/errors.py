"""Exception hierarchy shared by the estimate modules."""

from __future__ import annotations

from typing import Optional


class EstimateError(Exception):
    """Base class for every error raised by the toolkit."""


class DomainError(EstimateError, ValueError):
    """A parameter lies outside the domain of the requested operation."""


class AdmissibilityError(DomainError):
    """The pair (alpha, beta) is not admissible for (n, p)."""


class ResolutionError(EstimateError):
    """A sweep grid is too coarse to bracket the quantity being searched."""


class PositivityLossError(EstimateError, RuntimeError):
    """The integrator kept producing non-positive values after step halving."""


class InstabilityError(EstimateError, RuntimeError):
    """The integrator produced NaN or Inf."""


class NoBlowupError(EstimateError):
    """A blow-up analysis was requested on a run that never blew up."""


class DegenerateWindowError(EstimateError):
    """The blow-up fitting window does not determine a blow-up time."""


class TimeSpanError(EstimateError, ValueError):
    """A requested time lies outside the stored span or is badly ordered."""


class ConfigError(EstimateError, ValueError):
    """Invalid run configuration; ``field`` holds the dotted path of the culprit."""

    def __init__(self, message: str, *, field: Optional[str] = None, line: Optional[int] = None) -> None:
        self.field = field
        self.line = line
        prefix = ""
        if field:
            prefix = f"{field}: "
        if line is not None:
            prefix = f"line {line}: {prefix}"
        super().__init__(f"{prefix}{message}")
