from tracekit.card.peaks import PeakSpecTable, load_peaks, normalize_model
from tracekit.card.schema import (
    WorkloadCard,
    card_to_dict,
    check_card,
    load_card,
    parse_card,
    serialize_card,
)
from tracekit.card.validation import Finding, Severity, ValidationReport, validate_submission

__all__ = [
    "Finding",
    "PeakSpecTable",
    "Severity",
    "ValidationReport",
    "WorkloadCard",
    "card_to_dict",
    "check_card",
    "load_card",
    "load_peaks",
    "normalize_model",
    "parse_card",
    "serialize_card",
    "validate_submission",
]
