"""
Configuration settings for tracekit.

This module centralizes the environment-driven settings used across the package:
where the classification pattern table and the peak-FLOP/s table live, and the
default log level of the command-line front end. Packaged defaults ship under
``tracekit/data``; a run can point at edited copies through environment variables
(a ``.env`` file is loaded automatically when importing ``tracekit``).

Environment Variables:
    TRACEKIT_PATTERNS: JSON file overriding the event classification patterns
    TRACEKIT_PEAKS: YAML file overriding the per-device peak FLOP/s table
    TRACEKIT_LOG_LEVEL: log level used by the CLI when ``--log-level`` is absent

Example:
    >>> from tracekit.config import patterns_path
    >>> patterns_path()
    PosixPath('.../tracekit/data/patterns.json')

See Also:
    tracekit.trace.patterns: Loads the classification table
    tracekit.card.peaks: Loads the peak-FLOP/s table
"""

import os
from pathlib import Path

DATA_PATH = Path(__file__).parent / "data"
DEFAULT_PATTERNS_FILE = DATA_PATH / "patterns.json"
DEFAULT_PEAKS_FILE = DATA_PATH / "peaks.yaml"

# collection rules enforced by the validator
MIN_TRAINING_STEPS = 5
MIN_DECODE_STEPS = 128
MIN_PREFILL_STEPS = 1

# SM coverage thresholds for the kernel boundedness tools
COMPUTE_BOUND_OCCUPANCY = 70.0
COMPUTE_BOUND_MIN_DURATION_NS = 10_000
MEMORY_BOUND_OCCUPANCY = 50.0

DEFAULT_XLA_STEP_MARKER = "$core.py:331 step"
DEFAULT_MAX_UNSIZED_FRACTION = 0.10


def patterns_path() -> Path:
    """Classification pattern file, honouring ``TRACEKIT_PATTERNS``."""
    return Path(os.getenv("TRACEKIT_PATTERNS", DEFAULT_PATTERNS_FILE))


def peaks_path() -> Path:
    """Peak-FLOP/s table, honouring ``TRACEKIT_PEAKS``."""
    return Path(os.getenv("TRACEKIT_PEAKS", DEFAULT_PEAKS_FILE))


def log_level() -> str:
    return os.getenv("TRACEKIT_LOG_LEVEL", "WARNING").upper()
