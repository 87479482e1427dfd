"""Contains the exceptions"""

from contextlib import contextmanager


class CSLSTMError(Exception):

    """
    Base class of everything cslstm raises on purpose.
    `exit_code` is the status the command line exits with, `stage` is filled in by the
    command line with the pipeline step that failed (ingest, impute, train, ...).
    """
    exit_code = 1

    def __init__(self, *args):
        super().__init__(*args)
        self.stage = None

    def __str__(self):
        message = super().__str__()
        if self.stage:
            return "[{}] {}".format(self.stage, message)
        return message


class ConfigError(CSLSTMError):

    """
    The configuration could not be used: an unknown key (the key is named in the message),
    a value that does not parse as the type of its default, or an invalid combination of
    window sizes.
    """
    exit_code = 1


class CompatibilityError(ConfigError):

    """
    A checkpoint does not fit the configuration or the input it is applied to.
    The message lists every field that differs.
    """
    pass


class ArgumentError(CSLSTMError, ValueError):

    """ An operation was called outside its preconditions (odd FFT length, empty array, ...) """
    exit_code = 1


class ShapeError(ArgumentError):

    """ Two operands do not have compatible shapes; the message names both shapes. """
    pass


class TapeError(CSLSTMError, RuntimeError):

    """
    A tape was asked to run backward twice, or for a tensor it did not record.
    Tapes are freed after backward; record a new one for every step.
    """
    pass


class DataError(CSLSTMError):

    """ The input data breaks an invariant, e.g. two rows share a timestamp. """
    exit_code = 2


class SchemaError(DataError):

    """ A configured CSV column is missing from the header. """
    pass


class ParseError(DataError):

    """ A CSV cell could not be read as a number; the message carries the line number. """
    pass


class ImputationError(DataError):

    """
    The series is too sparse to be imputed: a gap is longer than the configured maximum,
    or timestamps are not aligned on the expected interval.
    """
    pass


class SplitError(DataError):

    """ The series is too short to be split into train, validation and test pieces. """
    pass


class DatasetError(DataError):

    """ Not enough points to build a single training sample. """
    pass


class RangeError(DataError, IndexError):

    """ A window was requested at a position without enough history (or future). """
    pass


class AlignmentError(DataError):

    """ Forecasts do not cover every point they are supposed to score. """
    pass


class CorruptionError(DataError):

    """
    Stored coefficients or a checkpoint file are internally inconsistent:
    band lengths that do not match the original signal length, a truncated parameter block,
    a wrong magic string.
    """
    pass


class NumericError(CSLSTMError, ArithmeticError):

    """ A loss, gradient or function value became NaN or infinite. """
    exit_code = 3


@contextmanager
def stage(name):
    """ Tag any CSLSTMError raised inside the block with the pipeline stage `name` """
    try:
        yield
    except CSLSTMError as e:
        if e.stage is None:
            e.stage = name
        raise
