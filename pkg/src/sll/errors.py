"""Exception types shared across the package."""


class SllError(Exception):
    """Base class for all package-specific errors."""


class DomainError(SllError, ValueError):
    """An input lies outside the physical domain of an operation."""


class VacuumError(DomainError):
    """A requested state falls below the vacuum limit of the gas law."""


class SonicExceeded(SllError):
    """A mass flux demands a locally supersonic state.

    Carries the largest subsonic flux ``j_max`` that the local state admits,
    and optionally the node where the excess occurred.
    """

    def __init__(self, message, j_max, j=None, node=None):
        super().__init__(message)
        self.j_max = j_max
        self.j = j
        self.node = node


class GeometryError(SllError, ValueError):
    """A nozzle or grid definition is unusable."""


class ConfigError(SllError, ValueError):
    """A run configuration file is malformed or inconsistent."""


class LinearSolverError(SllError, RuntimeError):
    """The conjugate-gradient solve stagnated before reaching tolerance."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class ConvergenceError(SllError, RuntimeError):
    """The outer fixed-point iteration failed to converge."""

    def __init__(self, message, residual_history=None):
        super().__init__(message)
        self.residual_history = residual_history or []


class SolverStateError(SllError, RuntimeError):
    """An internal solver field left its admissible range."""


class SchemaError(SllError, ValueError):
    """A field-dump file does not match the expected table schema."""

    def __init__(self, message, line=None, column=None):
        super().__init__(message)
        self.line = line
        self.column = column
