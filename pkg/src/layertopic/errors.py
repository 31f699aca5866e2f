"""Exception types shared across the pipeline."""


class LayerTopicError(Exception):
    """Base class for all library errors."""


class ConfigurationError(LayerTopicError):
    """A requested configuration cannot be satisfied by the input."""


class InvalidInputError(LayerTopicError, ValueError):
    """Input data violates an operation's preconditions."""


class ParameterError(LayerTopicError, ValueError):
    """Parameter values are out of their legal range."""


class DumpIOError(LayerTopicError, IOError):
    """A binary dump file is missing, truncated, or corrupt."""


class SchemaError(LayerTopicError):
    """A corpus file does not match its declared schema."""


class ModelError(LayerTopicError):
    """Topic model fitting failed (e.g. no topics found)."""


class MetricError(LayerTopicError):
    """A metric cannot be computed from the given model output."""


class ReportError(LayerTopicError):
    """Run records are inconsistent and cannot be aggregated."""
