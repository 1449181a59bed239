# errors.py: exception types raised across the lab.
#
# Two families. ValidationError covers anything wrong with inputs or configs
# (cli exit code 1), NumericalError covers numerical stage failures (exit code 2).


class SolitonLabError(Exception):
    pass


class ValidationError(SolitonLabError, ValueError):
    pass


class NumericalError(SolitonLabError, ArithmeticError):
    pass


# validation

class InvalidSpectralPoint(ValidationError):
    pass


class InvalidField(ValidationError):
    pass


class GridMismatch(ValidationError):
    pass


class DegenerateParams(ValidationError):
    pass


class CFLViolation(ValidationError):
    pass


class ConfigError(ValidationError):
    pass


class FieldFormatError(ValidationError):
    pass


class InsufficientData(ValidationError):
    pass


# numerical

class SingularGramian(NumericalError):
    def __init__(self, message, index=None):
        super().__init__(message if index is None else f'{message} (grid index {index})')
        self.index = index


class PoleEvaluation(NumericalError):
    pass


class SeedTooLarge(NumericalError):
    pass


class EdgeDecay(NumericalError):
    pass


class NotAnEigenfunction(NumericalError):
    pass


class BoundaryContamination(NumericalError):
    pass


class CountMismatch(NumericalError):
    pass


class NotAnEigenvalue(NumericalError):
    pass


class DegenerateEigenvalues(NumericalError):
    pass


class StageError(NumericalError):
    '''
    A failure inside one stage of the stability pipeline.
    The original exception is kept as `cause` (and chained via `raise ... from`).
    '''
    def __init__(self, stage, cause):
        super().__init__(f'[{stage}] {type(cause).__name__}: {cause}')
        self.stage = stage
        self.cause = cause
