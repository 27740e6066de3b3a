"""Population analytics over standardized interaction records.

Groups records into cohorts by categorical signature, maintains exposure to
outcome statistics per cohort, grades per-output reliability (provisional
min-rule before enough data, population thresholds after), renders the two
fixed explanation templates, and emits calibration updates when accumulated
evidence contradicts the rule-based grades - including the outcome override
that keeps entrenched expert consensus from becoming ground truth.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional

from .domains import DomainConfig
from .grammar import (
    Empirical,
    FailureClass,
    Grade,
    InteractionRecord,
    Override,
    Procedural,
    classify_failure,
    grade_min,
)

AGNOSTIC = "agnostic"
KEY_SEP = "|"

# Calibration update kinds.
ACCURACY_RECAL = "accuracy-recal"
ALIGNMENT_RECAL = "alignment-recal"
RISK_RECAL = "risk-recal"
OUTCOME_OVERRIDE = "outcome-override-of-consensus"

# Forced-reliability updates target this pseudo-field; the three real
# assessment fields go to the assessor's calibration table instead.
RELIABILITY_FIELD = "reliability"


@dataclass(frozen=True)
class Thresholds:
    """Institution-tunable analysis parameters."""

    n_min: int = 30
    theta_low: float = 0.60
    theta_high: float = 0.20
    unattended_window_days: int = 30
    # Accepted cases may generate procedural violations at most this often
    # before a Low alignment grade is considered contradicted.
    procedural_clean_bound: float = 0.05
    # Corrective options must be escalations at least this often before an
    # escalation pattern is read as evidence of understated risk.
    escalation_share_bound: float = 0.60
    # Expert acceptance at or above this rate counts as consensus.
    consensus_acceptance: float = 0.80

    def __post_init__(self):
        if self.n_min < 1:
            raise ValueError("n_min must be >= 1")
        if not (0 <= self.theta_high < self.theta_low <= 1):
            raise ValueError("thresholds must satisfy 0 <= theta_high < theta_low <= 1")


def wilson_lower(successes: int, n: int, z: float = 1.96) -> float:
    """Lower bound of the 95% Wilson score interval for a binomial proportion."""
    if n <= 0:
        return 0.0
    phat = successes / n
    z2 = z * z
    centre = phat + z2 / (2 * n)
    margin = z * math.sqrt((phat * (1 - phat) + z2 / (4 * n)) / n)
    return max(0.0, (centre - margin) / (1 + z2 / n))


def percent_whole(numerator: int, denominator: int) -> int:
    """Whole-percent rendering, halves rounded up. Exact integer arithmetic."""
    if denominator <= 0:
        raise ValueError("percent of empty denominator")
    return (200 * numerator + denominator) // (2 * denominator)


def percent_one_decimal(value: float) -> str:
    """Render a proportion as a percent with one decimal, halves up."""
    scaled = math.floor(value * 1000 + 0.5)
    return f"{scaled // 10}.{scaled % 10}"


# ---------------------------------------------------------------------------
# Signatures
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CohortSignature:
    """Categorical similarity class of an output.

    Exposure grades here are the raw rule-based ones, never the calibrated
    overlay: calibration must not silently re-partition history.
    """

    domain: str
    mission_category: str
    conclusion_category: str
    alignment: Grade
    accuracy: Grade
    model_scope: str = AGNOSTIC

    @property
    def key(self) -> str:
        return KEY_SEP.join([
            self.domain,
            self.mission_category,
            self.conclusion_category,
            f"{self.alignment.value}-{self.accuracy.value}",
            self.model_scope,
        ])

    @property
    def mission_key(self) -> str:
        """Projection used by risk calibration: stakes attach to the mission."""
        return KEY_SEP.join([self.domain, self.mission_category])

    def agnostic(self) -> "CohortSignature":
        if self.model_scope == AGNOSTIC:
            return self
        return CohortSignature(
            domain=self.domain,
            mission_category=self.mission_category,
            conclusion_category=self.conclusion_category,
            alignment=self.alignment,
            accuracy=self.accuracy,
        )

    def to_wire(self) -> dict:
        return {
            "domain": self.domain,
            "mission_category": self.mission_category,
            "conclusion_category": self.conclusion_category,
            "exposure_profile": {
                "alignment_score": self.alignment.value,
                "accuracy_score": self.accuracy.value,
            },
            "model_scope": self.model_scope,
            "key": self.key,
        }


def parse_signature_key(key: str) -> CohortSignature:
    parts = key.split(KEY_SEP)
    if len(parts) != 5:
        raise ValueError(f"malformed signature key: {key!r}")
    domain, mission_category, conclusion_category, profile, model_scope = parts
    try:
        alignment_token, accuracy_token = profile.split("-")
    except ValueError:
        raise ValueError(f"malformed exposure profile in key: {key!r}") from None
    return CohortSignature(
        domain=domain,
        mission_category=mission_category,
        conclusion_category=conclusion_category,
        alignment=Grade.parse(alignment_token),
        accuracy=Grade.parse(accuracy_token),
        model_scope=model_scope,
    )


def signature(record: InteractionRecord, config: DomainConfig,
              model_scope: str = AGNOSTIC) -> CohortSignature:
    """The record's cohort signature under the given model scope."""
    if record.initial_grades:
        alignment = Grade.parse(record.initial_grades["alignment_score"])
        accuracy = Grade.parse(record.initial_grades["accuracy_score"])
    else:
        alignment = record.alignment_score
        accuracy = record.accuracy_score
    return CohortSignature(
        domain=record.domain,
        mission_category=config.mission_category(record.mission),
        conclusion_category=record.conclusion.category,
        alignment=alignment,
        accuracy=accuracy,
        model_scope=model_scope if model_scope == AGNOSTIC else record.model_id,
    )


# ---------------------------------------------------------------------------
# Cohort statistics
# ---------------------------------------------------------------------------

@dataclass
class OutcomeSummary:
    """Outcome tallies split by what the expert did.

    Denominators count only known outcomes: an unobserved outcome is never
    evidence in either direction.
    """

    overridden_known: int = 0
    overridden_benign: int = 0
    overridden_adverse: int = 0
    accepted_known: int = 0
    accepted_benign: int = 0
    accepted_adverse: int = 0
    accepted_procedural_known: int = 0
    accepted_violations: int = 0
    metrics: dict = field(default_factory=dict)  # name -> {"count": int, "sum": float}

    @property
    def resolved_rate(self) -> Optional[float]:
        if self.overridden_known == 0:
            return None
        return self.overridden_benign / self.overridden_known

    @property
    def adverse_after_acceptance_rate(self) -> Optional[float]:
        if self.accepted_known == 0:
            return None
        return self.accepted_adverse / self.accepted_known

    @property
    def procedural_violation_rate(self) -> Optional[float]:
        if self.accepted_procedural_known == 0:
            return None
        return self.accepted_violations / self.accepted_procedural_known

    def metric_means(self) -> dict[str, float]:
        return {
            name: cell["sum"] / cell["count"]
            for name, cell in self.metrics.items() if cell["count"] > 0
        }

    def to_wire(self) -> dict:
        return {
            "resolved_without_escalation_rate": self.resolved_rate,
            "adverse_after_acceptance_rate": self.adverse_after_acceptance_rate,
            "procedural_violation_rate": self.procedural_violation_rate,
            "overridden_with_known_outcome": self.overridden_known,
            "accepted_with_known_outcome": self.accepted_known,
            "accepted_with_known_procedural": self.accepted_procedural_known,
            "metric_means": self.metric_means(),
        }


@dataclass
class CohortStats:
    """Point-in-time statistics for one cohort."""

    signature: CohortSignature
    n: int = 0
    override_count: int = 0
    accepted_adverse_count: int = 0
    failure_class_counts: Counter = field(default_factory=Counter)
    corrective_counts: Counter = field(default_factory=Counter)
    corrective_category_counts: Counter = field(default_factory=Counter)
    nonescalated_known: int = 0
    nonescalated_adverse: int = 0
    outcome_summary: OutcomeSummary = field(default_factory=OutcomeSummary)

    @property
    def override_rate(self) -> Optional[float]:
        return self.override_count / self.n if self.n else None

    @property
    def failure_count(self) -> int:
        return self.override_count + self.accepted_adverse_count

    @property
    def failure_rate(self) -> Optional[float]:
        return self.failure_count / self.n if self.n else None

    @property
    def failure_rate_lower(self) -> Optional[float]:
        return wilson_lower(self.failure_count, self.n) if self.n else None

    @property
    def acceptance_rate(self) -> Optional[float]:
        return (self.n - self.override_count) / self.n if self.n else None

    def dominant_failure_class(self) -> tuple[Optional[str], Optional[float]]:
        total = self.failure_count
        if total == 0:
            return None, None
        candidates = [
            (count, name) for name, count in self.failure_class_counts.items()
            if name != FailureClass.NONE.value and count > 0
        ]
        if not candidates:
            return None, None
        count, name = max(candidates, key=lambda item: (item[0], item[1]))
        return name, count / total

    def modal_corrective(self) -> tuple[Optional[str], Optional[float]]:
        if self.override_count == 0 or not self.corrective_counts:
            return None, None
        count, text = max(
            ((c, t) for t, c in self.corrective_counts.items()),
            key=lambda item: (item[0], item[1]),
        )
        return text, count / self.override_count

    def escalation_corrective_share(self, escalation_categories: set[str]) -> Optional[float]:
        if self.override_count == 0:
            return None
        escalated = sum(
            count for category, count in self.corrective_category_counts.items()
            if category in escalation_categories
        )
        return escalated / self.override_count

    @property
    def nonescalated_adverse_rate(self) -> Optional[float]:
        if self.nonescalated_known == 0:
            return None
        return self.nonescalated_adverse / self.nonescalated_known

    def to_wire(self) -> dict:
        dominant, dominant_share = self.dominant_failure_class()
        modal, modal_share = self.modal_corrective()
        return {
            "signature": self.signature.to_wire(),
            "n": self.n,
            "override_count": self.override_count,
            "override_rate": self.override_rate,
            "accepted_adverse_count": self.accepted_adverse_count,
            "failure_count": self.failure_count,
            "failure_rate": self.failure_rate,
            "failure_rate_lower": self.failure_rate_lower,
            "dominant_failure_class": dominant,
            "dominant_failure_share": dominant_share,
            "modal_corrective_option": modal,
            "modal_corrective_share": modal_share,
            "outcome_summary": self.outcome_summary.to_wire(),
        }


def _final_action_category(record: InteractionRecord) -> str:
    if record.override is Override.YES and record.corrective_option is not None:
        return record.corrective_option.category
    return record.conclusion.category


def add_finalized(stats: CohortStats, record: InteractionRecord,
                  escalation_categories: set[str]) -> None:
    """Fold a just-finalized record into the cohort tallies."""
    stats.n += 1
    if record.override is Override.YES:
        stats.override_count += 1
        if record.corrective_option is not None:
            stats.corrective_counts[record.corrective_option.canonical] += 1
            stats.corrective_category_counts[record.corrective_option.category] += 1
    stats.failure_class_counts[classify_failure(record).value] += 1
    _fold_outcome(stats, record, escalation_categories, sign=+1)


def update_outcome(stats: CohortStats, record: InteractionRecord,
                   previous_class: FailureClass,
                   escalation_categories: set[str],
                   previous_outcome_wire: Optional[dict]) -> None:
    """Re-fold a record whose outcome state changed."""
    stats.failure_class_counts[previous_class.value] -= 1
    if stats.failure_class_counts[previous_class.value] <= 0:
        del stats.failure_class_counts[previous_class.value]
    stats.failure_class_counts[classify_failure(record).value] += 1
    _unfold_outcome_wire(stats, record, escalation_categories, previous_outcome_wire)
    _fold_outcome(stats, record, escalation_categories, sign=+1)


def _fold_outcome(stats: CohortStats, record: InteractionRecord,
                  escalation_categories: set[str], sign: int) -> None:
    outcome = record.outcome
    summary = stats.outcome_summary
    overridden = record.override is Override.YES
    if outcome is None:
        return
    if outcome.empirical is not Empirical.UNKNOWN:
        adverse = outcome.empirical is Empirical.ADVERSE
        if overridden:
            summary.overridden_known += sign
            if adverse:
                summary.overridden_adverse += sign
            else:
                summary.overridden_benign += sign
        else:
            summary.accepted_known += sign
            if adverse:
                summary.accepted_adverse += sign
                stats.accepted_adverse_count += sign
            else:
                summary.accepted_benign += sign
        if _final_action_category(record) not in escalation_categories:
            stats.nonescalated_known += sign
            if adverse:
                stats.nonescalated_adverse += sign
    if not overridden and outcome.procedural is not Procedural.UNKNOWN:
        summary.accepted_procedural_known += sign
        if outcome.procedural is Procedural.VIOLATION:
            summary.accepted_violations += sign
    for name, value in outcome.metric_pairs.items():
        cell = summary.metrics.setdefault(name, {"count": 0, "sum": 0.0})
        cell["count"] += sign
        cell["sum"] += sign * float(value)
        if cell["count"] <= 0:
            del summary.metrics[name]


def _unfold_outcome_wire(stats: CohortStats, record: InteractionRecord,
                         escalation_categories: set[str],
                         previous_outcome_wire: Optional[dict]) -> None:
    if previous_outcome_wire is None:
        return
    from .grammar import OutcomeState, parse_timestamp

    previous = OutcomeState(
        empirical=Empirical(previous_outcome_wire.get("empirical", "unknown")),
        procedural=Procedural(previous_outcome_wire.get("procedural", "unknown")),
        detail_tags=list(previous_outcome_wire.get("detail_tags") or []),
        metric_pairs=dict(previous_outcome_wire.get("metric_pairs") or {}),
    )
    shadow = record.outcome
    record.outcome = previous
    try:
        _fold_outcome(stats, record, escalation_categories, sign=-1)
    finally:
        record.outcome = shadow


def recount(signature_value: CohortSignature, records: list[InteractionRecord],
            escalation_categories: set[str]) -> CohortStats:
    """Batch recomputation from raw records; the drift oracle for the
    incremental tallies."""
    stats = CohortStats(signature=signature_value)
    for record in records:
        if record.override is Override.PENDING:
            continue
        add_finalized(stats, record, escalation_categories)
    return stats


# ---------------------------------------------------------------------------
# Reliability
# ---------------------------------------------------------------------------

@dataclass
class ReliabilityAssessment:
    grade: Grade
    basis: str  # provisional | population
    inputs: tuple[Grade, Grade]
    cohort: Optional[CohortStats] = None
    semantic_text: str = ""
    model_scope_used: Optional[str] = None
    forced_low: bool = False
    citations: dict = field(default_factory=dict)

    def to_wire(self) -> dict:
        return {
            "grade": self.grade.value,
            "basis": self.basis,
            "inputs": {
                "alignment_score": self.inputs[0].value,
                "accuracy_score": self.inputs[1].value,
            },
            "cohort": self.cohort.to_wire() if self.cohort else None,
            "semantic_text": self.semantic_text,
            "model_scope_used": self.model_scope_used,
            "forced_low": self.forced_low,
        }


def population_grade(stats: CohortStats, thresholds: Thresholds) -> Grade:
    """Threshold the Wilson lower bound of the cohort failure rate.

    Outcome evidence takes precedence over expert consensus: enough adverse
    outcomes after acceptance grade the cohort Low no matter how rarely
    experts intervened. A Medium cohort with enough outcome data on both the
    accepted and the overridden branch is resolved by those outcomes; when
    both branches validate, Medium stands.
    """
    summary = stats.outcome_summary
    if (summary.accepted_known >= thresholds.n_min
            and summary.adverse_after_acceptance_rate is not None
            and summary.adverse_after_acceptance_rate >= thresholds.theta_low):
        return Grade.LOW
    lower = stats.failure_rate_lower or 0.0
    if lower >= thresholds.theta_low:
        grade = Grade.LOW
    elif lower <= thresholds.theta_high:
        grade = Grade.HIGH
    else:
        grade = Grade.MEDIUM
    if grade is Grade.MEDIUM:
        grade = _resolve_medium(stats, thresholds)
    return grade


def _resolve_medium(stats: CohortStats, thresholds: Thresholds) -> Grade:
    summary = stats.outcome_summary
    if (summary.accepted_known < thresholds.n_min
            or summary.overridden_known < thresholds.n_min):
        return Grade.MEDIUM
    accepted_rate = summary.adverse_after_acceptance_rate
    overridden_rate = summary.overridden_adverse / summary.overridden_known
    if accepted_rate is None:
        return Grade.MEDIUM
    # Accepting the output works and overriding it goes badly: the output
    # itself is validated despite split expert opinion.
    if accepted_rate <= thresholds.theta_high and overridden_rate >= thresholds.theta_low:
        return Grade.HIGH
    # Both branches validated: genuine practice variation, keep Medium.
    return Grade.MEDIUM


def reliability(record: InteractionRecord,
                specific_stats: Optional[CohortStats],
                agnostic_stats: Optional[CohortStats],
                thresholds: Thresholds,
                config: DomainConfig,
                forced_low_keys: frozenset[str] | set[str] = frozenset()) -> ReliabilityAssessment:
    """Grade one output's failure probability.

    Prefers the model-specific cohort when it has enough data, then the
    model-agnostic cohort, then falls back to the provisional min-rule over
    the record's current alignment/accuracy grades.
    """
    inputs = (record.alignment_score, record.accuracy_score)
    chosen: Optional[CohortStats] = None
    if specific_stats is not None and specific_stats.n >= thresholds.n_min:
        chosen = specific_stats
    elif agnostic_stats is not None and agnostic_stats.n >= thresholds.n_min:
        chosen = agnostic_stats
    if chosen is None:
        assessment = ReliabilityAssessment(
            grade=grade_min(*inputs),
            basis="provisional",
            inputs=inputs,
            citations=_citation_map(record),
        )
    else:
        grade = population_grade(chosen, thresholds)
        forced = chosen.signature.agnostic().key in forced_low_keys
        if forced:
            grade = Grade.LOW
        assessment = ReliabilityAssessment(
            grade=grade,
            basis="population",
            inputs=inputs,
            cohort=chosen,
            model_scope_used=chosen.signature.model_scope,
            forced_low=forced,
        )
    assessment.semantic_text = semantic_assessment(assessment, config)
    return assessment


def _citation_map(record: InteractionRecord) -> dict:
    citations: dict[str, list[str]] = {"alignment_score": [], "accuracy_score": []}
    for fired in record.fired_rules:
        field_name = fired.get("field")
        if field_name in citations:
            citations[field_name].append(fired.get("citation", ""))
    return citations


# ---------------------------------------------------------------------------
# Semantic assessment (two fixed templates, nothing else)
# ---------------------------------------------------------------------------

def semantic_assessment(assessment: ReliabilityAssessment, config: DomainConfig) -> str:
    if assessment.basis == "population" and assessment.cohort is not None:
        return _population_text(assessment.cohort, config)
    return _provisional_text(assessment)


def _population_text(stats: CohortStats, config: DomainConfig) -> str:
    override_pct = percent_whole(stats.override_count, stats.n)
    head = f"Based on {stats.n:,} similar cases: experts overrode this {override_pct}% of the time"
    if stats.override_count > 0:
        dominant, _ = stats.dominant_failure_class()
        reason = config.reason_phrase(dominant or FailureClass.EXPERT_JUDGMENT_ONLY.value)
        modal, _ = stats.modal_corrective()
        head += f" due to {reason}, instead choosing to {modal}"
    return f"{head}. Outcome tracking: {_outcome_sentence(stats, config)}"


def _outcome_sentence(stats: CohortStats, config: DomainConfig) -> str:
    summary = stats.outcome_summary
    means = summary.metric_means()
    for name, spec in config.metrics.items():
        if name in means:
            return config.outcome_phrase("metric").format(
                label=spec.label,
                value=percent_one_decimal(means[name]),
                baseline=percent_one_decimal(spec.baseline),
                baseline_label=spec.baseline_label,
            )
    if summary.overridden_known > 0:
        rate = percent_whole(summary.overridden_benign, summary.overridden_known)
        return config.outcome_phrase("resolved").format(rate=rate)
    if summary.accepted_known > 0:
        rate = percent_whole(summary.accepted_adverse, summary.accepted_known)
        return config.outcome_phrase("adverse").format(rate=rate)
    return config.outcome_phrase("none")


def _provisional_text(assessment: ReliabilityAssessment) -> str:
    alignment, accuracy = assessment.inputs
    align_citations = "; ".join(assessment.citations.get("alignment_score", [])) or "no rule fired"
    acc_citations = "; ".join(assessment.citations.get("accuracy_score", [])) or "no rule fired"
    return (
        f"Provisional assessment from guideline review: "
        f"alignment {alignment.value} ({align_citations}), "
        f"accuracy {accuracy.value} ({acc_citations})."
    )


# ---------------------------------------------------------------------------
# Recalibration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CalibrationUpdate:
    signature_key: str
    match_key: str
    field: str
    adjusted_grade: Grade
    evidence: dict
    kind: str

    def to_wire(self) -> dict:
        return {
            "signature": self.signature_key,
            "match_key": self.match_key,
            "field": self.field,
            "adjusted_grade": self.adjusted_grade.value,
            "evidence": self.evidence,
            "kind": self.kind,
        }


def _one_step_down(grade: Grade) -> Grade:
    return {Grade.HIGH: Grade.MEDIUM, Grade.MEDIUM: Grade.LOW, Grade.LOW: Grade.LOW}[grade]


def _one_step_up(grade: Grade) -> Grade:
    return {Grade.LOW: Grade.MEDIUM, Grade.MEDIUM: Grade.HIGH, Grade.HIGH: Grade.HIGH}[grade]


def recalibrate_cohort(stats: CohortStats,
                       thresholds: Thresholds,
                       config: DomainConfig,
                       current_grades: dict[str, Grade],
                       risk_already_high: bool,
                       already_forced_low: bool,
                       live_evidence_n: dict[str, int]) -> list[CalibrationUpdate]:
    """Evidence-threshold scan of one agnostic cohort.

    current_grades holds the effective alignment/accuracy grades for the
    cohort (raw profile overlaid with any live calibration). live_evidence_n
    maps each field to the evidence size behind its live entry, so each
    further one-step move requires strictly more data than the last.
    """
    updates: list[CalibrationUpdate] = []
    if stats.n < thresholds.n_min:
        return updates
    sig = stats.signature
    summary = stats.outcome_summary
    base_evidence = {
        "n": stats.n,
        "override_rate": stats.override_rate,
        "failure_rate": stats.failure_rate,
    }

    def fresh(field_name: str) -> bool:
        return stats.n > live_evidence_n.get(field_name, -1)

    # (a) accuracy contradicted: the failures in this cohort are mostly
    # inaccuracy-classified, yet the assessed accuracy is not Low.
    accuracy_now = current_grades["accuracy_score"]
    if accuracy_now is not Grade.LOW and stats.failure_count > 0 and fresh("accuracy_score"):
        inaccuracy = (stats.failure_class_counts.get(FailureClass.INACCURACY.value, 0)
                      + stats.failure_class_counts.get(FailureClass.BOTH.value, 0))
        share = inaccuracy / stats.failure_count
        if share >= thresholds.theta_low:
            updates.append(CalibrationUpdate(
                signature_key=sig.key,
                match_key=sig.key,
                field="accuracy_score",
                adjusted_grade=_one_step_down(accuracy_now),
                evidence={**base_evidence, "inaccuracy_failure_share": share},
                kind=ACCURACY_RECAL,
            ))

    # (b) alignment contradicted upward: graded Low yet accepted cases
    # generate essentially no procedural violations.
    alignment_now = current_grades["alignment_score"]
    if (alignment_now is Grade.LOW
            and summary.accepted_procedural_known >= thresholds.n_min
            and fresh("alignment_score")):
        violation_rate = summary.procedural_violation_rate
        if violation_rate is not None and violation_rate <= thresholds.procedural_clean_bound:
            updates.append(CalibrationUpdate(
                signature_key=sig.key,
                match_key=sig.key,
                field="alignment_score",
                adjusted_grade=_one_step_up(alignment_now),
                evidence={
                    **base_evidence,
                    "procedural_violation_rate": violation_rate,
                    "accepted_with_known_procedural": summary.accepted_procedural_known,
                },
                kind=ALIGNMENT_RECAL,
            ))

    # (c) risk understated: experts consistently escalate, and failing to
    # escalate is followed by adverse outcomes.
    if not risk_already_high and fresh("risk_level"):
        escalation_share = stats.escalation_corrective_share(config.escalation_categories)
        adverse_rate = stats.nonescalated_adverse_rate
        if (escalation_share is not None
                and escalation_share >= thresholds.escalation_share_bound
                and stats.nonescalated_known >= thresholds.n_min
                and adverse_rate is not None
                and adverse_rate >= thresholds.theta_low):
            updates.append(CalibrationUpdate(
                signature_key=sig.key,
                match_key=sig.mission_key,
                field="risk_level",
                adjusted_grade=Grade.HIGH,
                evidence={
                    **base_evidence,
                    "escalation_corrective_share": escalation_share,
                    "nonescalated_adverse_rate": adverse_rate,
                    "nonescalated_with_known_outcome": stats.nonescalated_known,
                },
                kind=RISK_RECAL,
            ))

    # (d) entrenchment: near-unanimous acceptance while outcomes go bad.
    # Outcome evidence overrides the consensus.
    if not already_forced_low:
        acceptance = stats.acceptance_rate or 0.0
        adverse_after = summary.adverse_after_acceptance_rate
        if (acceptance >= thresholds.consensus_acceptance
                and summary.accepted_known >= thresholds.n_min
                and adverse_after is not None
                and adverse_after >= thresholds.theta_low):
            updates.append(CalibrationUpdate(
                signature_key=sig.key,
                match_key=sig.key,
                field=RELIABILITY_FIELD,
                adjusted_grade=Grade.LOW,
                evidence={
                    **base_evidence,
                    "acceptance_rate": acceptance,
                    "adverse_after_acceptance_rate": adverse_after,
                    "accepted_with_known_outcome": summary.accepted_known,
                },
                kind=OUTCOME_OVERRIDE,
            ))
    return updates
