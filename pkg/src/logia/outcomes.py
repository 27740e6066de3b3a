"""Outcome attachment and assessment validation.

Outcomes arrive on two independent dimensions: empirical (what happened) and
procedural (whether rules were broken). Each dimension may be reported once
per record, any time after the expert decision. Detail tags are translated
through the institution's adversity mapping when a dimension is not stated
explicitly.

Validation reports compare a cohort's assessed grades against its outcome
evidence, keeping the channels apart: procedural outcomes speak to alignment,
empirical outcomes to accuracy and risk, never crosswise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime
from typing import Optional

from .domains import DomainRegistry
from .grammar import (
    Empirical,
    Grade,
    InteractionRecord,
    Override,
    OutcomeState,
    Procedural,
    parse_timestamp,
)
from .tracelayer import CohortSignature, Thresholds


class OutcomeError(ValueError):
    pass


@dataclass
class OutcomeEvent:
    record_id: str
    empirical: Empirical
    procedural: Procedural
    detail_tags: list[str]
    metric_pairs: dict[str, float]
    observed_at: datetime

    def to_wire(self) -> dict:
        from .grammar import format_timestamp

        return {
            "record_id": self.record_id,
            "empirical": self.empirical.value,
            "procedural": self.procedural.value,
            "detail_tags": list(self.detail_tags),
            "metric_pairs": dict(self.metric_pairs),
            "observed_at": format_timestamp(self.observed_at),
        }


def parse_outcome_event(raw: dict, registry: DomainRegistry) -> OutcomeEvent:
    """Parse a wire outcome, filling unstated dimensions from detail tags."""
    record_id = raw.get("record_id")
    if not record_id:
        raise OutcomeError("outcome event missing record_id")
    try:
        empirical = Empirical(raw.get("empirical", "unknown"))
        procedural = Procedural(raw.get("procedural", "unknown"))
    except ValueError as exc:
        raise OutcomeError(f"invalid outcome dimension: {exc}") from None
    detail_tags = list(raw.get("detail_tags") or [])
    tag_empirical, tag_procedural = registry.tag_signals(detail_tags)
    if empirical is Empirical.UNKNOWN and tag_empirical is not None:
        empirical = Empirical(tag_empirical if tag_empirical in ("adverse", "benign") else "unknown")
    if procedural is Procedural.UNKNOWN and tag_procedural is not None:
        procedural = Procedural("violation" if tag_procedural == "violation" else "clean")
    metric_pairs = {str(k): float(v) for k, v in (raw.get("metric_pairs") or {}).items()}
    if (empirical is Empirical.UNKNOWN and procedural is Procedural.UNKNOWN
            and not metric_pairs):
        raise OutcomeError("outcome event carries no signal (no dimension, tag, or metric)")
    if not raw.get("observed_at"):
        raise OutcomeError("outcome event missing observed_at")
    try:
        observed_at = parse_timestamp(raw["observed_at"])
    except ValueError as exc:
        raise OutcomeError(str(exc)) from None
    return OutcomeEvent(
        record_id=str(record_id),
        empirical=empirical,
        procedural=procedural,
        detail_tags=detail_tags,
        metric_pairs=metric_pairs,
        observed_at=observed_at,
    )


def merge_outcome(record: InteractionRecord, event: OutcomeEvent) -> OutcomeState:
    """The record's outcome state after absorbing one event.

    Raises instead of overwriting: each dimension and each metric may be
    reported exactly once per record.
    """
    if record.override is Override.PENDING:
        raise OutcomeError(f"record {record.id}: outcome before override is resolved")
    if record.finalized_at is not None and event.observed_at < record.finalized_at:
        raise OutcomeError(
            f"record {record.id}: outcome observed before the expert action"
        )
    current = record.outcome or OutcomeState()
    merged = OutcomeState(
        empirical=current.empirical,
        procedural=current.procedural,
        detail_tags=list(current.detail_tags),
        metric_pairs=dict(current.metric_pairs),
        observed_at=current.observed_at,
    )
    if event.empirical is not Empirical.UNKNOWN:
        if merged.empirical is not Empirical.UNKNOWN:
            raise OutcomeError(f"record {record.id}: duplicate empirical outcome")
        merged.empirical = event.empirical
    if event.procedural is not Procedural.UNKNOWN:
        if merged.procedural is not Procedural.UNKNOWN:
            raise OutcomeError(f"record {record.id}: duplicate procedural outcome")
        merged.procedural = event.procedural
    for name, value in event.metric_pairs.items():
        if name in merged.metric_pairs:
            raise OutcomeError(f"record {record.id}: duplicate metric {name!r}")
        merged.metric_pairs[name] = value
    for tag in event.detail_tags:
        if tag not in merged.detail_tags:
            merged.detail_tags.append(tag)
    if merged.observed_at is None or event.observed_at > merged.observed_at:
        merged.observed_at = event.observed_at
    return merged


def outcome_failure(record: InteractionRecord) -> bool:
    """The failure definition, stated over outcome data.

    Deliberately independent of the record model's own failure test: the two
    must agree on every record, and a drift between them is a bug this
    duplication is designed to catch.
    """
    if record.override is Override.PENDING:
        raise OutcomeError(f"record {record.id}: override still pending")
    if record.override is Override.YES:
        return True
    state = record.outcome
    if state is None:
        return False
    if state.empirical is Empirical.ADVERSE:
        return True
    if state.procedural is Procedural.VIOLATION:
        return True
    return False


# ---------------------------------------------------------------------------
# Assessment validation
# ---------------------------------------------------------------------------

@dataclass
class FieldValidation:
    """Outcome evidence for or against one assessed grade."""

    field: str
    claim: Optional[Grade]
    confirmations: int = 0
    contradictions: int = 0
    confirm_ids: list[str] = field(default_factory=list)
    contradict_ids: list[str] = field(default_factory=list)

    @property
    def evaluated(self) -> int:
        return self.confirmations + self.contradictions

    @property
    def confirmation_rate(self) -> Optional[float]:
        return self.confirmations / self.evaluated if self.evaluated else None

    @property
    def contradiction_rate(self) -> Optional[float]:
        return self.contradictions / self.evaluated if self.evaluated else None

    def to_wire(self) -> dict:
        return {
            "field": self.field,
            "claim": self.claim.value if self.claim else None,
            "evaluated": self.evaluated,
            "confirmations": self.confirmations,
            "contradictions": self.contradictions,
            "confirmation_rate": self.confirmation_rate,
            "contradiction_rate": self.contradiction_rate,
            "confirm_ids": list(self.confirm_ids),
            "contradict_ids": list(self.contradict_ids),
        }


@dataclass
class ValidationReport:
    signature: CohortSignature
    n: int
    alignment: FieldValidation
    accuracy: FieldValidation
    risk: list[FieldValidation]

    def to_wire(self) -> dict:
        return {
            "signature": self.signature.to_wire(),
            "n": self.n,
            "alignment": self.alignment.to_wire(),
            "accuracy": self.accuracy.to_wire(),
            "risk": [item.to_wire() for item in self.risk],
        }


def _judge(validation: FieldValidation, record_id: str, observed_bad: bool,
           bad_grade: Grade = Grade.LOW) -> None:
    # The grade at bad_grade predicts bad outcomes, its opposite predicts good
    # ones, Medium claims are not judged. Scores predict bad when Low; risk
    # predicts bad when High (high stakes realized as adverse events).
    if validation.claim is bad_grade:
        confirmed = observed_bad
    elif validation.claim in (Grade.LOW, Grade.HIGH):
        confirmed = not observed_bad
    else:
        return
    if confirmed:
        validation.confirmations += 1
        validation.confirm_ids.append(record_id)
    else:
        validation.contradictions += 1
        validation.contradict_ids.append(record_id)


def validate_assessments(signature_value: CohortSignature,
                         records: list[InteractionRecord],
                         thresholds: Thresholds,
                         escalation_categories: set[str] | None = None) -> ValidationReport:
    """Score a cohort's assessed grades against its outcome evidence.

    Channel discipline: alignment is judged only by procedural outcomes of
    accepted cases; accuracy only by empirical outcomes of accepted cases;
    risk only by empirical outcomes of cases that were not escalated.
    """
    escalation_categories = escalation_categories or set()
    resolved = [r for r in records if r.override is not Override.PENDING]
    if len(resolved) < thresholds.n_min:
        raise OutcomeError(
            f"cohort {signature_value.key}: {len(resolved)} resolved records, "
            f"need at least {thresholds.n_min}"
        )
    alignment = FieldValidation(field="alignment_score", claim=signature_value.alignment)
    accuracy = FieldValidation(field="accuracy_score", claim=signature_value.accuracy)
    risk_by_grade = {
        grade: FieldValidation(field="risk_level", claim=grade)
        for grade in (Grade.LOW, Grade.HIGH)
    }
    for record in resolved:
        state = record.outcome
        if state is None:
            continue
        accepted = record.override is Override.NO
        if accepted and state.procedural is not Procedural.UNKNOWN:
            _judge(alignment, record.id, state.procedural is Procedural.VIOLATION)
        if accepted and state.empirical is not Empirical.UNKNOWN:
            _judge(accuracy, record.id, state.empirical is Empirical.ADVERSE)
        if state.empirical is not Empirical.UNKNOWN:
            final_category = (
                record.corrective_option.category
                if record.override is Override.YES and record.corrective_option
                else record.conclusion.category
            )
            if final_category not in escalation_categories:
                judge = risk_by_grade.get(record.risk_level)
                if judge is not None:
                    _judge(judge, record.id, state.empirical is Empirical.ADVERSE,
                           bad_grade=Grade.HIGH)
    return ValidationReport(
        signature=signature_value,
        n=len(resolved),
        alignment=alignment,
        accuracy=accuracy,
        risk=[risk_by_grade[Grade.LOW], risk_by_grade[Grade.HIGH]],
    )
