"""Exception types raised across the package."""


class DomainError(ValueError):
    """A distance was requested outside the metric's domain (zero vector under cosine)."""


class ShapeError(ValueError):
    """Vectors or files with inconsistent dimensionality."""


class ConfigurationError(ValueError):
    """Algorithm parameters that cannot be satisfied by the input."""


class ConsistencyError(ValueError):
    """Two inputs that must describe the same data do not."""


class OracleRefusal(ValueError):
    """The brute-force oracle declined an instance that is too large or not exactly evaluable."""


class ParseError(ValueError):
    """Malformed dataset file.

    Attributes:
        line: 1-based line number of the offending line.
    """

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class InvariantError(RuntimeError):
    """An internal invariant was violated; this signals a bug, not bad input."""
