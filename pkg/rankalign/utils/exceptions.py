class RankAlignError(Exception):
    """Base class of every error raised by rankalign"""


class DomainError(RankAlignError, ValueError):
    """An argument lies outside the domain of the operation (e.g. K out of range)"""


class ResourceLimitError(RankAlignError, RuntimeError):
    """An exact computation would exceed its enumeration guard"""


class DataError(RankAlignError, ValueError):

    def __init__(self, message: str, field: str | None = None) -> None:
        """Creates a DataError for input data that violates a structural requirement

        Args:
            message (str): description of the violation
            field (str | None, optional): name of the offending field. Defaults to None.
        """
        self.message = message
        self.field = field
        super().__init__(f'field {field!r}: {message}' if field is not None else message)


class ParseError(DataError):

    def __init__(self, message: str, line_number: int | None = None, field: str | None = None) -> None:
        """Creates a ParseError that points at the offending line and field of a file

        Args:
            message (str): description of the violation
            line_number (int | None, optional): 1-based line number in the parsed file. Defaults to None.
            field (str | None, optional): name of the offending field. Defaults to None.
        """
        self.line_number = line_number
        super().__init__(message, field)
        if line_number is not None:
            self.args = (f'line {line_number}, {self.args[0]}',)


class MetricError(RankAlignError, ValueError):
    """A metric is not defined for the given labels"""


class ConfigurationError(RankAlignError, ValueError):
    """A configuration value or combination is invalid"""


class MissingParameterError(RankAlignError, KeyError):
    """A PolicyTable has no parameters for a requested instance"""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else ''


class TrainingAbortedError(RankAlignError, RuntimeError):

    def __init__(self, step: int, message: str) -> None:
        self.step = step
        super().__init__(f'training aborted at step {step}: {message}')
