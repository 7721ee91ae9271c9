"""Error types shared across the package."""


class ParseError(ValueError):
    """A dataset file violates its format contract.

    Carries the 1-based line number of the offending row when known.
    """

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ConfigError(ValueError):
    """An experiment or dataset configuration is invalid."""
