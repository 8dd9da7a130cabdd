from __future__ import annotations


class WeertmanError(ValueError):
    """Base class for every error raised by the weertman package."""


class GridError(WeertmanError):
    pass


class PotentialError(WeertmanError):
    pass


class OperatorError(WeertmanError):
    pass


class SemigroupError(WeertmanError):
    pass


class EvolutionError(WeertmanError):
    pass


class InitialDataError(EvolutionError):
    pass


class BlowUpError(EvolutionError):
    def __init__(self, message: str, last_finite_time: float) -> None:
        super().__init__(message)
        self.last_finite_time = last_finite_time


class FrontEscapeError(EvolutionError):
    pass


class RangeViolationError(EvolutionError):
    pass


class AnalysisError(WeertmanError):
    pass


class SqueezeError(WeertmanError):
    pass


class ConfigError(WeertmanError):
    def __init__(self, key: str, message: str) -> None:
        super().__init__(f"{key}: {message}")
        self.key = key
