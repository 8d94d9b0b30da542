"""Exception hierarchy shared across the package."""


class IcaDetectError(Exception):
    """Base class for every error raised by this package."""


class DataError(IcaDetectError):
    """Input data is malformed or unusable."""


class ConfigError(IcaDetectError):
    """A configuration value is missing, unknown or out of range."""


class NumericalError(IcaDetectError):
    """A numerical routine could not produce a valid result."""


# text featurization
class EmptyVocabulary(DataError):
    pass


class WrongWeighting(DataError):
    pass


# shapes and sample sizes
class DimensionMismatch(DataError):
    pass


class TooFewSamples(DataError):
    pass


class OrderTooLarge(ConfigError):
    pass


class NotCentered(DataError):
    pass


# ICA
class DegenerateSample(NumericalError):
    pass


class DegenerateInput(NumericalError):
    pass


class SingularW(NumericalError):
    pass


class IllConditioned(NumericalError):
    pass


# classification / evaluation
class SingleClass(DataError):
    pass


class NoConvergence(NumericalError):
    pass


class GridEmpty(ConfigError):
    pass


class FoldTooSmall(DataError):
    pass


class EmptyEvaluation(DataError):
    pass


class IndexOutOfRange(ConfigError):
    pass
