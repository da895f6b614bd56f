"""Exception types shared across the package."""


class SentAlignError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(SentAlignError):
    """A text input file could not be parsed.

    Carries the offending line number (1-based) when known.
    """

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        prefix = ""
        if path is not None:
            prefix += str(path)
        if line is not None:
            prefix += f":{line}"
        super().__init__(f"{prefix}: {message}" if prefix else message)


class DimensionMismatchError(ParseError):
    """Vector rows in one file disagree on dimensionality."""


class DuplicateTokenError(ParseError):
    """The same token appears more than once in a word-vector file."""


class ValidationError(SentAlignError):
    """An argument or value violates an operation's contract."""


class MatrixFormatError(SentAlignError):
    """A binary matrix file has a bad magic, is truncated, or is inconsistent."""


class UnknownIdError(SentAlignError):
    """An entity or relation id is not present in a trained embedding."""

    def __init__(self, kind: str, identifier: str):
        self.kind = kind
        self.identifier = identifier
        super().__init__(f"unknown {kind} id: {identifier!r}")


class DivergenceError(SentAlignError):
    """Training produced a non-finite loss."""

    def __init__(self, epoch: int):
        self.epoch = epoch
        super().__init__(f"non-finite loss at epoch {epoch}")


class RankDeficiencyError(SentAlignError):
    """A matrix is numerically rank deficient where full rank is required."""


class CorrelationUndefinedError(SentAlignError):
    """Pearson correlation is undefined because one input has zero variance."""


class ConfigError(SentAlignError):
    """A pipeline configuration file is malformed or has unknown keys."""


class PipelineError(SentAlignError):
    """A pipeline stage failed; names the stage and carries the cause."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage {stage!r} failed: {cause}")
