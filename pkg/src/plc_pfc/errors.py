"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class RangeError(ValueError):
    """A query falls outside the tabulated data (no extrapolation)."""


class ValidationError(ValueError):
    """Invalid configuration or table data.

    ``problems`` holds one message per offending field, prefixed with its path.
    """

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class OverRangeError(ValueError):
    """An input voltage is outside the rated range of a PLC input channel."""
