"""
Rule-based submission checks.

Given a parsed card and the trace it describes, ``validate_submission`` reports one
finding per violated rule. Step-count rules are Errors (they block a metric run);
provenance and environment gaps are Warnings. Nothing here raises: every finding
is data in the report.

Rules:
    min-iterations      training: >= 5 TrainStep windows on every rank
    prefill-present     inference: >= 1 Prefill window on every rank
    min-decode-steps    inference: >= 128 DecodeStep windows on every rank
    source-mismatch     metric_source.traces does not cover the loaded dialect
    iteration-mismatch  card iteration count differs from the observed window count
    env-completeness    framework, comm library and driver versions recorded

``relaxed=True`` downgrades the step-count rules to Warnings for desk-scale fixtures.
"""

import json
from dataclasses import asdict, dataclass, field
from enum import StrEnum
from typing import Any

from tracekit.card.schema import WorkloadCard
from tracekit.config import MIN_DECODE_STEPS, MIN_PREFILL_STEPS, MIN_TRAINING_STEPS
from tracekit.trace.model import Dialect, NormalizedTrace, StepKind

# trace kinds in metric_source.traces that a loaded dialect satisfies
DIALECT_SOURCES = {
    Dialect.KINETO_GPU: {"json", "kineto", "pytorch", "torch", "torch_profiler"},
    Dialect.XLA_TPU: {"json", "xla", "xprof", "jax", "tpu"},
}

ENV_FIELDS = (
    ("Model-executor.framework.name", lambda c: c.model_executor.framework.name),
    ("Model-executor.framework.version", lambda c: c.model_executor.framework.version),
    ("Model-executor.communication_library.name", lambda c: c.model_executor.communication_library.name),
    ("Model-executor.communication_library.version", lambda c: c.model_executor.communication_library.version),
    ("workload.hardware.driver_version", lambda c: c.hardware.driver_version),
)

RULES = (
    "min-iterations",
    "prefill-present",
    "min-decode-steps",
    "source-mismatch",
    "iteration-mismatch",
    "env-completeness",
)


class Severity(StrEnum):
    ERROR = "Error"
    WARNING = "Warning"


@dataclass(frozen=True)
class Finding:
    rule: str
    severity: Severity
    message: str
    observed: Any = None
    required: Any = None


@dataclass(frozen=True)
class ValidationReport:
    findings: tuple[Finding, ...] = ()
    rules: dict[str, bool] = field(default_factory=dict)
    relaxed: bool = False

    @property
    def errors(self) -> list[Finding]:
        return [f for f in self.findings if f.severity == Severity.ERROR]

    @property
    def warnings(self) -> list[Finding]:
        return [f for f in self.findings if f.severity == Severity.WARNING]

    @property
    def ok(self) -> bool:
        return not self.errors

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "relaxed": self.relaxed,
            "rules": dict(self.rules),
            "findings": [{**asdict(f), "severity": str(f.severity)} for f in self.findings],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _min_windows(trace: NormalizedTrace, kind: StepKind) -> int:
    if not trace.ranks:
        return 0
    return min(len(timeline.steps_of(kind)) for timeline in trace.ranks)


def validate_submission(card: WorkloadCard, trace: NormalizedTrace, relaxed: bool = False) -> ValidationReport:
    """
    Check a (card, trace) submission against the collection rules.

    The trace is relabelled for the card's phase first, so it may come straight from
    ``load_trace`` without a phase.
    """
    trace = trace.relabel_steps(card.phase, first_is_prefill=card.first_step_is_prefill)
    step_severity = Severity.WARNING if relaxed else Severity.ERROR
    findings: list[Finding] = []
    failed: set[str] = set()

    def report(rule: str, severity: Severity, message: str, observed=None, required=None):
        findings.append(Finding(rule, severity, message, observed, required))
        failed.add(rule)

    if card.is_training:
        observed = _min_windows(trace, StepKind.TRAIN_STEP)
        if observed < MIN_TRAINING_STEPS:
            report(
                "min-iterations",
                step_severity,
                f"training traces need at least {MIN_TRAINING_STEPS} iterations per rank, observed {observed}",
                observed,
                MIN_TRAINING_STEPS,
            )
        recorded = observed
    else:
        prefill = _min_windows(trace, StepKind.PREFILL)
        decode = _min_windows(trace, StepKind.DECODE_STEP)
        if prefill < MIN_PREFILL_STEPS:
            report("prefill-present", step_severity, "inference traces need a prefill pass", prefill, MIN_PREFILL_STEPS)
        if decode < MIN_DECODE_STEPS:
            report(
                "min-decode-steps",
                step_severity,
                f"inference traces need at least {MIN_DECODE_STEPS} decode steps per rank, observed {decode}",
                decode,
                MIN_DECODE_STEPS,
            )
        recorded = decode

    declared = {kind.lower() for kind in (card.metric_source.traces or ())}
    if not declared & DIALECT_SOURCES[trace.dialect]:
        report(
            "source-mismatch",
            Severity.WARNING,
            f"metric_source.traces {sorted(declared)} does not declare the loaded {trace.dialect} trace",
            sorted(declared),
            sorted(DIALECT_SOURCES[trace.dialect]),
        )

    iteration = card.model.iteration
    if iteration is not None and iteration != recorded:
        report(
            "iteration-mismatch",
            Severity.WARNING,
            f"card records {iteration} iterations, trace holds {recorded} step windows",
            recorded,
            iteration,
        )

    for path, getter in ENV_FIELDS:
        if not getter(card):
            report("env-completeness", Severity.WARNING, f"environment field {path} is missing", None, path)

    applicable = set(RULES)
    applicable -= {"prefill-present", "min-decode-steps"} if card.is_training else {"min-iterations"}
    rules = {rule: rule not in failed for rule in RULES if rule in applicable}
    return ValidationReport(findings=tuple(findings), rules=rules, relaxed=relaxed)
