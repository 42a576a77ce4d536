"""Exception hierarchy shared by every module of the toolkit."""


class NeuroFuzzyError(Exception):
    """Base class for all errors raised by :mod:`neurofuzzy`."""


class InvalidArgumentError(NeuroFuzzyError, ValueError):
    """An argument violates a documented precondition."""


class DegenerateActivationError(NeuroFuzzyError, ArithmeticError):
    """Sum of rule firing strengths fell below the degenerate floor."""


class TrainingDataError(NeuroFuzzyError):
    """A training sample cannot be processed (e.g. no rule fires for it)."""

    def __init__(self, message, sample_index=None):
        super().__init__(message)
        self.sample_index = sample_index


class DivergenceError(NeuroFuzzyError, ArithmeticError):
    """Training produced a non-finite loss or activation."""

    def __init__(self, message, epoch=None):
        super().__init__(message)
        self.epoch = epoch


class SchemaError(NeuroFuzzyError):
    """Input file does not match the expected column layout or schema."""


class ParseError(NeuroFuzzyError):
    """A value in an input file could not be parsed."""

    def __init__(self, message, line=None):
        super().__init__(message)
        self.line = line


class ScaleError(NeuroFuzzyError, ValueError):
    """A feature is constant and cannot be min-max scaled."""
