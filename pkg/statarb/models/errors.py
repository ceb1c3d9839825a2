from typing import Iterable, List, Optional


class PanelParseError(ValueError):

    def __init__(self, message: str, line: int) -> None:
        super().__init__(f'line {line}: {message}')
        self.line = line


class DuplicateRowError(PanelParseError):
    pass


class DegenerateSeriesError(ValueError):

    def __init__(self, message: str, tickers: Optional[Iterable[str]] = None) -> None:
        super().__init__(message)
        self.tickers = list(tickers or [])


class DegenerateVarianceError(ArithmeticError):
    pass


class InsufficientDataError(ValueError):
    pass


class InsufficientStocksError(InsufficientDataError):
    pass


class InsufficientHistoryError(InsufficientDataError):
    pass


class InvalidParameterError(ValueError):
    pass


class DimensionMismatchError(ValueError):
    pass


class NonFiniteError(ValueError):
    pass


class NonFiniteGradientError(NonFiniteError):

    def __init__(self, message: str, diagnostics: List[str]) -> None:
        super().__init__(f'{message}: {"; ".join(diagnostics)}')
        self.diagnostics = diagnostics


class StaleTraceError(RuntimeError):
    pass


class MisalignedDatesError(ValueError):
    pass


class ConfigError(ValueError):

    def __init__(self, violations: Iterable[str]) -> None:
        self.violations = list(violations)
        super().__init__('\n'.join(self.violations))


class WarmupShortfallError(ConfigError, InsufficientHistoryError):

    def __init__(self, label: str, needed: int, available: int) -> None:
        super().__init__([f'{label}: needs {needed} days of panel history, got {available}'])
        self.label = label
        self.needed = needed
        self.available = available


class StrategyFailure(RuntimeError):

    def __init__(self, label: str, cause: Exception) -> None:
        super().__init__(f'{label}: {type(cause).__name__}: {cause}')
        self.label = label
        self.cause = cause
