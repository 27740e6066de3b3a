"""Surveillance middleware for AI-expert collaboration.

Structures every AI-expert interaction into a standardized record, learns
failure patterns from expert overrides and tracked outcomes, and feeds the
result back as reliability assessments, visibility directives, audit trails,
and training datasets.
"""

from .grammar import (
    ActionCode,
    ActionVocabulary,
    Empirical,
    FailureClass,
    Grade,
    InteractionRecord,
    Override,
    OutcomeState,
    Procedural,
    Provenance,
    RecordValidationError,
    VocabularyEntry,
    canonicalize_action,
    classify_failure,
    grade_min,
    is_failure,
    validate_record,
)
from .engine import Engine
from .tracelayer import CohortSignature, CohortStats, Thresholds
from .visibility import VisibilityPolicy

__version__ = "0.1.0"
