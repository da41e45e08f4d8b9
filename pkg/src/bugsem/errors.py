"""Exception types shared across the toolkit."""


class BugsemError(Exception):
    """Base class for all toolkit errors."""


class UnparseableSource(BugsemError):
    """The grammar produced no terminal tokens for the input."""


class SchemaError(BugsemError):
    """A corpus or report file violates its schema."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class LabelError(SchemaError):
    """A corpus label is outside {0, 1}."""


class MissingFile(BugsemError):
    """A model-dump file is absent."""


class CorruptTensor(BugsemError):
    """Attention tensor file fails magic/size validation."""


class MisalignedDump(BugsemError):
    """Too many input tokens have no character overlap with any AST token."""


class BothEmpty(BugsemError):
    """IoU of two empty sets is undefined."""


class NoHighAttention(BugsemError):
    """No attention cell exceeds the threshold."""


class TooFewLayers(BugsemError):
    """Interaction matrix needs at least two attention layers."""


class PathTooShort(BugsemError):
    """Path-based metrics need at least two path nodes."""


class EmptyLabelClass(BugsemError):
    """A statistics query hit a label class with zero examples."""


class ModeMismatch(BugsemError):
    """Annotation operation applied to the wrong annotation mode."""
