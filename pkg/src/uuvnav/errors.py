"""Exception hierarchy shared across the package.

The CLI maps these onto its exit-code contract: InputError subclasses exit
with 1, an unreachable route with 2, PlanNotFound with 3, and any other
UuvnavError with 4.
"""


class UuvnavError(Exception):
    """Base class for all errors raised by this package."""


class InputError(UuvnavError):
    """Malformed or inconsistent user input (files, config, arguments)."""


class GridFormatError(InputError):
    """ESRI ASCII grid parse failure, annotated with a 1-based line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class GeoJsonError(InputError):
    """GeoJSON content that this package does not accept."""


class HddlError(InputError):
    """HDDL parse or well-formedness failure at a line:column position."""

    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


class GroundingError(UuvnavError):
    """Grounding aborted, e.g. the instance cap was exceeded."""


class PlanNotFound(UuvnavError):
    """The HTN search ended without a plan; .reason says why."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


class SimulationError(UuvnavError):
    """Scenario execution could not proceed."""
