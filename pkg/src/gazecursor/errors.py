"""Exception types shared across the pipeline."""


class GazeCursorError(Exception):
    """Base class for all library errors."""


class InvalidParameterError(GazeCursorError):
    """An argument violates an operation's precondition."""


class DegenerateGeometryError(GazeCursorError):
    """Landmark geometry collapsed (zero eye span or zero lid aperture)."""


class SceneError(GazeCursorError):
    """Synthetic scene parameters describe an unrenderable scene."""


class ContractError(GazeCursorError):
    """A caller broke a sequencing contract (e.g. non-monotonic frame index)."""


class TraceParseError(GazeCursorError):
    """A trace file line is not valid JSON. Carries the 1-based line number."""

    def __init__(self, line: int, message: str) -> None:
        super().__init__(f"line {line}: {message}")
        self.line = line


class TraceSchemaError(GazeCursorError):
    """A trace file line parsed but does not match the expected schema."""

    def __init__(self, line: int, message: str) -> None:
        super().__init__(f"line {line}: {message}")
        self.line = line


class NumericalFailureError(GazeCursorError):
    """A numerical routine left its stable region (e.g. non-PSD covariance)."""


class ConfigError(GazeCursorError):
    """A configuration value violates a config invariant."""
