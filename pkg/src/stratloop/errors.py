"""Exception hierarchy shared across the package."""


class StratloopError(Exception):
    """Base class for all package errors."""


class ConfigError(StratloopError):
    """Invalid specification, distribution parameters, or experiment config."""


class DegenerateModelError(StratloopError):
    """Operation requires a non-degenerate linear boundary (w != 0)."""


class ParityInfeasibleError(StratloopError):
    """No threshold pair satisfies the parity constraint at the given grid."""

    def __init__(self, message: str, min_gap: float | None = None):
        super().__init__(message)
        self.min_gap = min_gap


class IngestError(StratloopError):
    """Malformed tabular input; carries offending row numbers when known."""

    def __init__(self, message: str, rows: list[int] | None = None):
        super().__init__(message)
        self.rows = rows or []
