"""Record model for standardized AI-expert interactions.

Every interaction is captured as one InteractionRecord: what the model was
asked (mission), what it answered (conclusion), why (justification), the three
assessment grades (risk_level, alignment_score, accuracy_score), and what the
expert did about it (override, corrective_option). Downstream analytics only
ever see these standardized fields; raw transcripts are never stored.

Everything in this module is a pure value type or pure function. No I/O, no
shared mutable state, safe to call from any thread.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Any, Optional

# Reserved reason codes. Institutions may add their own codes freely; these
# two anchor the inaccuracy/misalignment split and UNATTENDED marks records
# closed by the inaction window rather than an explicit expert decision.
FACT_ERR = "FACT-ERR"
GUIDELINE_VIOLATION = "GUIDELINE-VIOLATION"
UNATTENDED = "UNATTENDED"


class RecordValidationError(ValueError):
    """Raised when a candidate field map violates record invariants.

    Carries every violated invariant, not just the first one found.
    """

    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = errors


# ---------------------------------------------------------------------------
# Grades
# ---------------------------------------------------------------------------

class Grade(Enum):
    """Three-level ordinal scale shared by risk, alignment, accuracy, reliability."""

    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"

    @property
    def rank(self) -> int:
        return _GRADE_RANK[self]

    def __lt__(self, other: "Grade") -> bool:
        return self.rank < other.rank

    def __le__(self, other: "Grade") -> bool:
        return self.rank <= other.rank

    def __gt__(self, other: "Grade") -> bool:
        return self.rank > other.rank

    def __ge__(self, other: "Grade") -> bool:
        return self.rank >= other.rank

    @classmethod
    def parse(cls, token: str) -> "Grade":
        """Parse a grade token, case-insensitively. Anything else is an error."""
        try:
            return cls(str(token).strip().lower())
        except ValueError:
            raise ValueError(f"unknown grade token: {token!r}") from None


_GRADE_RANK = {Grade.LOW: 0, Grade.MEDIUM: 1, Grade.HIGH: 2}

GRADES = (Grade.LOW, Grade.MEDIUM, Grade.HIGH)


def grade_min(a: Grade, b: Grade) -> Grade:
    """Lower of two grades (associative, commutative)."""
    return a if a.rank <= b.rank else b


class Override(Enum):
    """Expert decision state for one record."""

    PENDING = "pending"
    NO = "no"
    YES = "yes"

    @classmethod
    def parse(cls, token: str) -> "Override":
        try:
            return cls(str(token).strip().lower())
        except ValueError:
            raise ValueError(f"unknown override token: {token!r}") from None


class Provenance(Enum):
    """How the current assessment grades were produced."""

    RULE_BASED_INITIAL = "rule-based-initial"
    CALIBRATED = "calibrated"


class FailureClass(Enum):
    """Why a failed output failed."""

    INACCURACY = "inaccuracy"
    MISALIGNMENT = "misalignment"
    BOTH = "both"
    EXPERT_JUDGMENT_ONLY = "expert-judgment-only"
    NONE = "none"


# ---------------------------------------------------------------------------
# Actions
# ---------------------------------------------------------------------------

_WS = re.compile(r"\s+")
# Stripped only from the end of an action; '+' and '#' survive because some
# domains (chess notation) carry meaning in them.
_TERMINAL_PUNCT = ".,;:!?"


def canonical_text(raw: str) -> str:
    """Case-fold, collapse whitespace, strip terminal punctuation. Idempotent."""
    text = _WS.sub(" ", raw.casefold()).strip()
    return text.rstrip(_TERMINAL_PUNCT).rstrip()


@dataclass(frozen=True)
class VocabularyEntry:
    """One action category: prefix keywords plus optional regex patterns."""

    category: str
    keywords: tuple[str, ...] = ()
    patterns: tuple[str, ...] = ()


class ActionVocabulary:
    """Institution-supplied action classes for one domain.

    Category assignment is longest-prefix keyword match over the canonical
    text, ties broken by vocabulary order. Entries may also declare regex
    patterns (checked in vocabulary order when no keyword matches) for action
    grammars that prefixes cannot express, e.g. chess move notation.
    """

    def __init__(self, entries: list[VocabularyEntry] | None = None):
        self.entries = list(entries or [])
        self._compiled = [
            (e.category, [re.compile(p) for p in e.patterns]) for e in self.entries
        ]

    def categorize(self, canonical: str) -> str:
        best: tuple[int, int] | None = None  # (keyword length, -entry index)
        best_category = "other"
        for idx, entry in enumerate(self.entries):
            for kw in entry.keywords:
                if canonical.startswith(kw):
                    key = (len(kw), -idx)
                    if best is None or key > best:
                        best = key
                        best_category = entry.category
        if best is not None:
            return best_category
        for category, patterns in self._compiled:
            if any(p.fullmatch(canonical) for p in patterns):
                return category
        return "other"


EMPTY_VOCABULARY = ActionVocabulary()


@dataclass(frozen=True)
class ActionCode:
    """A recommendation or expert action in comparable form."""

    raw_text: str
    canonical: str
    category: str

    def to_wire(self) -> dict:
        return {
            "raw_text": self.raw_text,
            "canonical": self.canonical,
            "category": self.category,
        }


def canonicalize_action(raw: str, vocabulary: ActionVocabulary = EMPTY_VOCABULARY) -> ActionCode:
    """Normalize an action text and assign its category.

    Deterministic; re-canonicalizing the canonical form is a no-op. Raises
    ValueError on empty input.
    """
    if raw is None or not str(raw).strip():
        raise ValueError("action text is empty")
    canonical = canonical_text(str(raw))
    if not canonical:
        raise ValueError("action text is empty after normalization")
    return ActionCode(
        raw_text=str(raw),
        canonical=canonical,
        category=vocabulary.categorize(canonical),
    )


# ---------------------------------------------------------------------------
# Timestamps (wire form: RFC 3339, UTC)
# ---------------------------------------------------------------------------

def parse_timestamp(value: str) -> datetime:
    """Parse an RFC 3339 timestamp into an aware UTC datetime."""
    text = str(value).strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    try:
        dt = datetime.fromisoformat(text)
    except ValueError:
        raise ValueError(f"invalid timestamp: {value!r}") from None
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def format_timestamp(dt: datetime) -> str:
    """Render an aware datetime as RFC 3339 UTC."""
    dt = dt.astimezone(timezone.utc)
    if dt.microsecond:
        return dt.strftime("%Y-%m-%dT%H:%M:%S.%f") + "Z"
    return dt.strftime("%Y-%m-%dT%H:%M:%SZ")


# ---------------------------------------------------------------------------
# Outcome state carried on a record
# ---------------------------------------------------------------------------

class Empirical(Enum):
    ADVERSE = "adverse"
    BENIGN = "benign"
    UNKNOWN = "unknown"


class Procedural(Enum):
    VIOLATION = "violation"
    CLEAN = "clean"
    UNKNOWN = "unknown"


@dataclass
class OutcomeState:
    """Merged outcome signals attached to a finalized record."""

    empirical: Empirical = Empirical.UNKNOWN
    procedural: Procedural = Procedural.UNKNOWN
    detail_tags: list[str] = field(default_factory=list)
    metric_pairs: dict[str, float] = field(default_factory=dict)
    observed_at: Optional[datetime] = None

    def to_wire(self) -> dict:
        return {
            "empirical": self.empirical.value,
            "procedural": self.procedural.value,
            "detail_tags": list(self.detail_tags),
            "metric_pairs": dict(self.metric_pairs),
            "observed_at": format_timestamp(self.observed_at) if self.observed_at else None,
        }


# ---------------------------------------------------------------------------
# The record
# ---------------------------------------------------------------------------

@dataclass
class InteractionRecord:
    """One AI-expert interaction in standardized form.

    Only these fields are ever stored; no raw conversation transcript exists
    anywhere downstream of capture.
    """

    id: str
    created_at: datetime
    domain: str
    model_id: str
    mission: str
    conclusion: ActionCode
    justification: str
    risk_level: Grade
    alignment_score: Grade
    accuracy_score: Grade
    assessment_provenance: Provenance = Provenance.RULE_BASED_INITIAL
    jurisdiction: Optional[str] = None
    override: Override = Override.PENDING
    corrective_option: Optional[ActionCode] = None
    override_reason_tags: list[str] = field(default_factory=list)
    outcome: Optional[OutcomeState] = None
    reliability_at_decision: Optional[dict] = None
    # Initial rule-based grades, kept alongside the live (possibly calibrated)
    # grades: cohort membership keys off the raw measurement so that
    # calibration never silently re-partitions history.
    initial_grades: Optional[dict] = None
    fired_rules: list[dict] = field(default_factory=list)
    revision_count: int = 0
    finalized_at: Optional[datetime] = None

    @property
    def finalized(self) -> bool:
        return self.override is not Override.PENDING

    def to_wire(self) -> dict:
        """Flat JSON object with snake_case keys; grades as low/medium/high."""
        return {
            "id": self.id,
            "created_at": format_timestamp(self.created_at),
            "domain": self.domain,
            "jurisdiction": self.jurisdiction,
            "model_id": self.model_id,
            "mission": self.mission,
            "conclusion": self.conclusion.to_wire(),
            "justification": self.justification,
            "risk_level": self.risk_level.value,
            "alignment_score": self.alignment_score.value,
            "accuracy_score": self.accuracy_score.value,
            "assessment_provenance": self.assessment_provenance.value,
            "override": self.override.value,
            "corrective_option": self.corrective_option.to_wire() if self.corrective_option else None,
            "override_reason_tags": list(self.override_reason_tags),
            "outcome": self.outcome.to_wire() if self.outcome else None,
            "reliability_at_decision": self.reliability_at_decision,
        }


def _action_from_field(value: Any, vocabulary: ActionVocabulary, errors: list[str], name: str) -> Optional[ActionCode]:
    if value is None:
        return None
    if isinstance(value, ActionCode):
        return value
    if isinstance(value, dict):
        raw = value.get("raw_text", "")
    else:
        raw = str(value)
    try:
        return canonicalize_action(raw, vocabulary)
    except ValueError:
        errors.append(f"{name} is empty")
        return None


def validate_record(
    candidate: dict,
    vocabulary: ActionVocabulary = EMPTY_VOCABULARY,
) -> InteractionRecord:
    """Build an InteractionRecord from a raw field map.

    Raises RecordValidationError naming every violated invariant, not just
    the first. Grade tokens are parsed case-insensitively; timestamps are
    RFC 3339.
    """
    errors: list[str] = []

    def need_text(key: str) -> str:
        value = candidate.get(key)
        if value is None or not str(value).strip():
            errors.append(f"{key} is required and must be non-empty")
            return ""
        return str(value)

    mission = need_text("mission")
    domain = need_text("domain")
    model_id = need_text("model_id")

    conclusion = _action_from_field(candidate.get("conclusion"), vocabulary, errors, "conclusion")
    if conclusion is None and "conclusion is empty" not in errors:
        errors.append("conclusion is required and must be non-empty")

    justification = str(candidate.get("justification") or "")

    grades: dict[str, Grade] = {}
    for key in ("risk_level", "alignment_score", "accuracy_score"):
        token = candidate.get(key)
        if token is None:
            errors.append(f"{key} is required")
            continue
        if isinstance(token, Grade):
            grades[key] = token
            continue
        try:
            grades[key] = Grade.parse(token)
        except ValueError as exc:
            errors.append(str(exc))

    override = Override.PENDING
    if candidate.get("override") is not None:
        raw_override = candidate["override"]
        if isinstance(raw_override, Override):
            override = raw_override
        else:
            try:
                override = Override.parse(raw_override)
            except ValueError as exc:
                errors.append(str(exc))

    corrective = _action_from_field(candidate.get("corrective_option"), vocabulary, errors, "corrective_option")
    if override is Override.YES and corrective is None:
        errors.append("corrective_option required when override is yes")
    if override is not Override.YES and corrective is not None:
        errors.append("corrective_option present but override is not yes")

    outcome = candidate.get("outcome")
    if outcome is not None and override is Override.PENDING:
        errors.append("outcome may only be attached after override is resolved")

    created_at = datetime.now(timezone.utc)
    if candidate.get("created_at") is not None:
        raw_created = candidate["created_at"]
        if isinstance(raw_created, datetime):
            created_at = raw_created
        else:
            try:
                created_at = parse_timestamp(raw_created)
            except ValueError as exc:
                errors.append(str(exc))

    provenance = Provenance.RULE_BASED_INITIAL
    if candidate.get("assessment_provenance") is not None:
        try:
            provenance = Provenance(str(candidate["assessment_provenance"]))
        except ValueError:
            errors.append(f"unknown assessment provenance: {candidate['assessment_provenance']!r}")

    outcome_state: Optional[OutcomeState] = None
    if outcome is not None and isinstance(outcome, dict):
        try:
            outcome_state = OutcomeState(
                empirical=Empirical(outcome.get("empirical", "unknown")),
                procedural=Procedural(outcome.get("procedural", "unknown")),
                detail_tags=list(outcome.get("detail_tags") or []),
                metric_pairs=dict(outcome.get("metric_pairs") or {}),
                observed_at=parse_timestamp(outcome["observed_at"]) if outcome.get("observed_at") else None,
            )
        except ValueError as exc:
            errors.append(f"invalid outcome: {exc}")
    elif isinstance(outcome, OutcomeState):
        outcome_state = outcome

    if errors:
        raise RecordValidationError(errors)

    return InteractionRecord(
        id=str(candidate.get("id") or ""),
        created_at=created_at,
        domain=domain,
        jurisdiction=candidate.get("jurisdiction"),
        model_id=model_id,
        mission=mission,
        conclusion=conclusion,
        justification=justification,
        risk_level=grades["risk_level"],
        alignment_score=grades["alignment_score"],
        accuracy_score=grades["accuracy_score"],
        assessment_provenance=provenance,
        override=override,
        corrective_option=corrective,
        override_reason_tags=list(candidate.get("override_reason_tags") or []),
        outcome=outcome_state,
    )


# ---------------------------------------------------------------------------
# Failure classification
# ---------------------------------------------------------------------------

def is_failure(record: InteractionRecord) -> bool:
    """Failure: overridden, or accepted with an adverse/violating outcome.

    Accepted records with no (or unknown) outcome are not failures yet.
    Raises on pending override.
    """
    if record.override is Override.PENDING:
        raise ValueError("override still pending; failure status undetermined")
    if record.override is Override.YES:
        return True
    outcome = record.outcome
    if outcome is None:
        return False
    return outcome.empirical is Empirical.ADVERSE or outcome.procedural is Procedural.VIOLATION


def classify_failure(record: InteractionRecord) -> FailureClass:
    """Classify why a record failed; NONE when it is not a failure.

    Inaccuracy when accuracy is Low or a factual-error reason code is present;
    misalignment when alignment is Low or a guideline-violation code is
    present; BOTH when both hold; EXPERT_JUDGMENT_ONLY for failures showing
    neither signal.
    """
    if not is_failure(record):
        return FailureClass.NONE
    tags = set(record.override_reason_tags)
    inaccurate = record.accuracy_score is Grade.LOW or FACT_ERR in tags
    misaligned = record.alignment_score is Grade.LOW or GUIDELINE_VIOLATION in tags
    if inaccurate and misaligned:
        return FailureClass.BOTH
    if inaccurate:
        return FailureClass.INACCURACY
    if misaligned:
        return FailureClass.MISALIGNMENT
    return FailureClass.EXPERT_JUDGMENT_ONLY
