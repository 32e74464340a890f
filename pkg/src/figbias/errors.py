"""Exception types shared across the toolkit."""


class FigbiasError(Exception):
    """Base class for all toolkit errors."""


class KeyingFallback(FigbiasError):
    """Raised when a lemma-based split key cannot be computed.

    This is a signal, not a failure: callers decide whether to fall back
    to surface keying (and record that they did) or to abort.
    """


class AdapterError(FigbiasError):
    """A raw record cannot be mapped to the canonical model."""


class UnmappedLabelError(AdapterError):
    """A source label has no entry in the adapter's label map."""


class SpanResolutionError(AdapterError):
    """A target expression could not be located in its sentence."""


class MarkerCollisionError(FigbiasError):
    """Input text already contains a reserved marker string."""


class SingleLabelError(FigbiasError):
    """A training set contains only one of the two labels."""


class PlanError(FigbiasError):
    """A split plan cannot be built from the given dataset."""


class AuditError(FigbiasError):
    """An audit stage failed; carries fold/mode/classifier context."""
