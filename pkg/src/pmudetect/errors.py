"""Exception hierarchy shared by every stage of the pipeline."""

from __future__ import annotations


class PipelineError(Exception):
    """Base class; ``exit_code`` is what the CLI returns when it escapes."""

    exit_code = 1


class SchemaError(PipelineError):
    exit_code = 3


class MissingMarkerColumn(SchemaError):
    pass


class HeaderMismatch(SchemaError):
    pass


class SchemaMismatch(SchemaError):
    pass


class EmptyFile(SchemaError):
    pass


class UnknownLabel(SchemaError):
    pass


class FractionOutOfRange(PipelineError, ValueError):
    pass


class AllRowsRemoved(PipelineError):
    exit_code = 4


class TooFewRows(PipelineError, ValueError):
    pass


class DimensionMismatch(PipelineError, ValueError):
    pass


class ClassTooSmall(PipelineError, ValueError):
    pass


class UnknownFeature(PipelineError, KeyError):
    pass


class KOutOfRange(PipelineError, ValueError):
    pass


class EmptyTrainingSet(PipelineError, ValueError):
    pass


class KExceedsTrainingSize(PipelineError, ValueError):
    pass


class NonFiniteLoss(PipelineError, FloatingPointError):
    pass


class ClassSmallerThanFolds(PipelineError, ValueError):
    pass


class EmptyMatrix(PipelineError, ValueError):
    pass


class IncompatibleFeatureSubset(PipelineError, ValueError):
    pass


class EmptyGrid(PipelineError, ValueError):
    pass


class ArtifactVersionMismatch(PipelineError):
    exit_code = 7
