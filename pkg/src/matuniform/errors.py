"""Exception hierarchy shared by all modules."""


class MatUniformError(Exception):
    """Base class for every error raised by this package."""


# linear algebra
class SingularMatrix(MatUniformError, ValueError):
    pass


class NonpositiveDensity(MatUniformError, ValueError):
    pass


class NotPositiveDefinite(MatUniformError, ValueError):
    pass


# groupoids
class EmptyBase(MatUniformError, ValueError):
    pass


class InvalidAction(MatUniformError, ValueError):
    pass


class InvalidGroupoid(MatUniformError, ValueError):
    pass


class UnknownObject(MatUniformError, KeyError):
    pass


class NotConnected(MatUniformError, ValueError):
    pass


class NotASubgroupoid(MatUniformError, ValueError):
    pass


class MissingMetric(MatUniformError, KeyError):
    pass


class BaseMismatch(MatUniformError, ValueError):
    pass


class NotTransitiveFromBasepoint(MatUniformError, ValueError):
    pass


class InconsistentStructureGroup(MatUniformError, ValueError):
    pass


# constitutive / classification / material
class InvalidDeformation(MatUniformError, ValueError):
    pass


class UnknownPoint(MatUniformError, KeyError):
    pass


class UndistortedSearchFailed(MatUniformError, RuntimeError):
    pass


class UnclassifiablePoint(MatUniformError, RuntimeError):
    pass


class KindMismatch(MatUniformError, ValueError):
    pass


class UnsupportedKind(MatUniformError, ValueError):
    pass


# geometry
class SingularFrame(MatUniformError, ValueError):
    pass


class SingularMetric(MatUniformError, ValueError):
    pass


class GridTooSmall(MatUniformError, ValueError):
    pass


class MixedKinds(MatUniformError, ValueError):
    pass


class InvalidConfiguration(MatUniformError, ValueError):
    pass


class NotSolid(MatUniformError, ValueError):
    pass


# input handling
class ParseError(MatUniformError, ValueError):
    def __init__(self, message, line=None, column=None):
        super().__init__(message)
        self.line = line
        self.column = column


class SchemaError(MatUniformError, ValueError):
    pass


class TableShapeError(MatUniformError, ValueError):
    pass


# pipeline
class StageError(MatUniformError, RuntimeError):
    """A pipeline stage failed; ``stage`` names it and ``__cause__`` holds the error."""

    def __init__(self, stage: str, error: Exception):
        super().__init__(f"stage {stage!r} failed: {type(error).__name__}: {error}")
        self.stage = stage
        self.error = error
