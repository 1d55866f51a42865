"""Exception hierarchy.

Every error carries an ``exit_code`` used by the command-line front end:
3 for bad data, 4 for numeric failures, 5 for corrupted checkpoints.
"""


class VibDenoiseError(Exception):
    exit_code = 3


class DataError(VibDenoiseError, ValueError):
    exit_code = 3


class NumericError(VibDenoiseError, ArithmeticError):
    exit_code = 4


class NyquistViolation(DataError):
    pass


class EmptySpec(DataError):
    pass


class WindowTooLong(DataError):
    pass


class LagTooLarge(DataError):
    pass


class DegenerateInput(DataError):
    pass


class OrderTooLarge(DataError):
    pass


class LengthMismatch(DataError):
    pass


class ShapeMismatch(DataError):
    pass


class EmptyDataset(DataError):
    pass


class SeqLenMismatch(DataError):
    pass


class ZeroReference(DataError):
    pass


class AlignmentMismatch(DataError):
    pass


class ConfigError(DataError):
    def __init__(self, message, lineno=None):
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
        self.lineno = lineno


class NonFiniteInput(NumericError):
    pass


class ChecksumError(VibDenoiseError):
    exit_code = 5
