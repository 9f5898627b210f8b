"""Error categories shared by the library and the command line."""


class Attri2vecError(Exception):
    """Base class for every error raised by the toolkit.

    Attributes:
        category: One of 'config', 'io' or 'numeric'
        exit_code: Process exit status the CLI uses for this category
    """

    category = 'config'
    exit_code = 2


class ConfigError(Attri2vecError, ValueError):
    """Invalid hyperparameters, dimension mismatches or unusable inputs."""

    category = 'config'
    exit_code = 2


class IngestError(Attri2vecError, ValueError):
    """A data file could not be parsed.

    Args:
        message: What went wrong
        path: File being read, if known
        line_number: 1-based line number of the offending line, if known
    """

    category = 'io'
    exit_code = 3

    def __init__(self, message, path=None, line_number=None):
        self.path = path
        self.line_number = line_number
        location = ''
        if path is not None:
            location = f"{path}"
            if line_number is not None:
                location += f":{line_number}"
            location += ': '
        super().__init__(f"{location}{message}")


class SamplingError(Attri2vecError, ValueError):
    """A sampling distribution cannot produce the requested draws."""

    category = 'numeric'
    exit_code = 4


class NumericDivergenceError(Attri2vecError, ArithmeticError):
    """Training produced a non-finite or exploding loss."""

    category = 'numeric'
    exit_code = 4
