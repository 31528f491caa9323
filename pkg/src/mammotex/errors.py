"""Exception hierarchy shared by every pipeline stage."""


class MammotexError(Exception):
    """Base class for all errors raised by this package."""


# pgm_io
class PgmError(MammotexError, ValueError):
    pass


class UnsupportedMagic(PgmError):
    pass


class UnsupportedDepth(PgmError):
    pass


class TruncatedData(PgmError):
    pass


class MalformedHeader(PgmError):
    pass


# preprocess
class OutOfBounds(MammotexError, ValueError):
    pass


class InvalidParams(MammotexError, ValueError):
    pass


class DegenerateImageWarning(UserWarning):
    """All pixels share one value, so no threshold separates two classes."""


# features
class EmptyImage(MammotexError, ValueError):
    pass


class DegenerateTexture(MammotexError, ArithmeticError):
    """Zero variance makes a normalized moment undefined."""


class ZeroMarginalVariance(DegenerateTexture):
    """A GLCM marginal has zero spread, so correlation is undefined."""


class NoValidPairs(MammotexError, ValueError):
    pass


class MissingDirection(MammotexError, KeyError):
    pass


# descriptors
class EmptyDataset(MammotexError, ValueError):
    pass


class MixedGroups(MammotexError, ValueError):
    pass


class DimensionMismatch(MammotexError, ValueError):
    pass


class MalformedRow(MammotexError, ValueError):
    pass


class UnknownLabel(MalformedRow):
    pass


class InconsistentWidth(MalformedRow):
    pass


# mlp / experiment
class NonFiniteLoss(MammotexError, FloatingPointError):
    pass


class LengthMismatch(MammotexError, ValueError):
    pass


class TooFewSamples(MammotexError, ValueError):
    pass


class IncompleteReport(MammotexError, ValueError):
    pass


class MissingImage(MammotexError, FileNotFoundError):
    pass


class IoFailure(MammotexError, OSError):
    pass
