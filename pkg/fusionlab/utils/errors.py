class FusionLabError(Exception):
    """Base class for every error raised by fusionlab."""


class DimensionError(FusionLabError, ValueError):
    pass


class EmptyContextError(DimensionError):
    pass


class LabelIndexError(FusionLabError, IndexError):
    pass


class EpochRangeError(FusionLabError, IndexError):
    pass


class InputError(FusionLabError, ValueError):
    pass


class DomainError(FusionLabError, ValueError):
    pass


class ConfigurationError(FusionLabError, ValueError):
    pass


class ConfigMismatchError(FusionLabError, ValueError):
    pass


class VocabularyError(FusionLabError, LookupError):
    pass


class EvaluationError(FusionLabError, ArithmeticError):
    pass


class DivergenceError(FusionLabError, FloatingPointError):
    def __init__(self, message: str, *, epoch: int, batch: int):
        super().__init__(f'{message} (epoch {epoch}, batch {batch})')
        self.epoch = epoch
        self.batch = batch


class UndefinedAurocError(FusionLabError, ValueError):
    pass


class FormatError(FusionLabError, ValueError):
    pass


class UnsupportedVersionError(FormatError):
    pass


class TruncationError(FusionLabError, ValueError):
    pass
