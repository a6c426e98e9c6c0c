"""
Exception hierarchy shared by every tracekit module.

Parsing and schema problems abort the command that hit them. Metric problems are
raised by individual tools and collected by the suite runner as skipped entries, so
one inapplicable tool never hides the others.
"""


class TracekitError(Exception):
    """Base class for all tracekit errors."""


class ParseError(TracekitError):
    """Malformed input document (JSON trace or YAML card)."""

    def __init__(self, message: str, offset: int | None = None, source: str | None = None):
        self.offset = offset
        self.source = source
        where = []
        if source:
            where.append(source)
        if offset is not None:
            where.append(f"byte {offset}")
        suffix = f" ({', '.join(where)})" if where else ""
        super().__init__(f"{message}{suffix}")


class EmptyTrace(TracekitError):
    """The trace holds no device-side kernel events."""


class DialectMismatch(TracekitError):
    """Input files belong to different trace dialects."""


class SchemaError(TracekitError):
    """A workload card field is missing or invalid."""

    def __init__(self, field: str, message: str | None = None):
        self.field = field
        super().__init__(field if message is None else f"{field}: {message}")


class MetricError(TracekitError):
    """A metric tool cannot produce a value for this evidence."""

    @property
    def reason(self) -> str:
        return str(self) or type(self).__name__


class NotApplicable(MetricError):
    """The tool does not apply to this card/trace combination."""


class EmptyRegistry(MetricError):
    pass


class NoStepWindows(MetricError):
    pass


class TooFewSteps(MetricError):
    pass


class MissingPeakSpec(MetricError):
    pass


class MissingArchField(MetricError):
    def __init__(self, field: str):
        self.field = field
        super().__init__(f"missing workload card field {field}")


class NoFlopsEvents(MetricError):
    pass


class MissingPrefill(MetricError):
    pass


class MissingDecode(MetricError):
    pass


class NoKernelEvents(MetricError):
    pass


class AllStepsCommFree(MetricError):
    pass


class ZeroDenominator(MetricError):
    pass


class NoSizedTransfers(MetricError):
    pass


class NoSizedCollectives(MetricError):
    pass


class NoMatchedCollectives(MetricError):
    pass


class ZeroActiveRank(MetricError):
    pass


class CollectiveMatchFailure(TracekitError):
    """Collective occurrences disagree across ranks beyond the tolerated truncation."""


class DeadlockDetected(TracekitError):
    """Replay stalled with nodes still waiting on each other."""


class ProposerError(TracekitError):
    """A configuration proposer failed to produce a configuration."""


class SearchConfigError(TracekitError):
    """Invalid configuration space, objective or search wiring."""


class EntryError(TracekitError):
    """A benchmark entry manifest cannot be built or verified."""
