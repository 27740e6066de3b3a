"""Event-sourced surveillance engine.

Holds all state derived from the journal: records, cohort statistics under
both model scopes, the calibration table, the forced-reliability registry and
per-record audit trails. Every accepted write is journaled before it is
applied, so replaying the journal reproduces the state byte for byte; the
state hash makes that checkable.
"""

from __future__ import annotations

import dataclasses
import hashlib
from datetime import datetime, timedelta, timezone
from typing import Optional

from . import capture, journal as journal_mod, outcomes as outcomes_mod, tracelayer
from .assessor import (
    Assessment,
    CalibrationEntry,
    CalibrationTable,
    GuidelineCorpus,
    apply_calibration,
    assess,
)
from .capture import (
    AI_OUTPUT,
    AI_OUTPUT_REVISION,
    EXPERT_ACTION,
    ConflictError,
    EventError,
    FrozenRecordError,
    InteractionEvent,
    UnknownRecordError,
    canonical_json,
)
from .domains import DomainConfig, DomainRegistry
from .grammar import (
    UNATTENDED,
    ActionCode,
    Grade,
    InteractionRecord,
    Override,
    canonicalize_action,
    classify_failure,
    format_timestamp,
    parse_timestamp,
)
from .tracelayer import (
    AGNOSTIC,
    RELIABILITY_FIELD,
    CohortSignature,
    CohortStats,
    ReliabilityAssessment,
    Thresholds,
    parse_signature_key,
)
from .visibility import VisibilityPolicy, directive as visibility_directive

MODEL_SPECIFIC = "specific"


class Engine:
    """Single-writer engine; callers serialize access."""

    def __init__(self,
                 corpus: GuidelineCorpus,
                 registry: DomainRegistry,
                 policy: Optional[VisibilityPolicy] = None,
                 thresholds: Optional[Thresholds] = None,
                 journal_path: Optional[str] = None,
                 fsync: bool = True):
        self.corpus = corpus
        self.registry = registry
        self.policy = policy or VisibilityPolicy.default()
        self.thresholds = thresholds or Thresholds()

        self.records: dict[str, InteractionRecord] = {}
        self.record_order: list[str] = []
        self.cohorts: dict[str, CohortStats] = {}
        self.calibration = CalibrationTable()
        self.forced_low: set[str] = set()
        self.audit: dict[str, list[dict]] = {}
        self.outcome_log: dict[str, list[dict]] = {}
        self.record_calibration: dict[str, list[dict]] = {}
        self._acks: dict[tuple, dict] = {}
        self._outcome_seen: dict[str, dict] = {}
        self.last_event_at: Optional[datetime] = None

        self._journal: Optional[journal_mod.Journal] = None
        if journal_path is not None:
            writer, entries = journal_mod.open_journal(journal_path, fsync=fsync)
            self._journal = None  # replay without re-journaling
            for entry in entries:
                self._apply_entry(entry)
            self._journal = writer

    def close(self) -> None:
        if self._journal is not None:
            self._journal.close()

    @property
    def journal_seq(self) -> int:
        return self._journal.seq if self._journal else 0

    # -- journaling -------------------------------------------------------

    def _record_time(self, moment: Optional[datetime]) -> None:
        if moment is not None and (self.last_event_at is None or moment > self.last_event_at):
            self.last_event_at = moment

    def _journal_entry(self, entry: dict) -> None:
        if self._journal is not None:
            self._journal.append(entry)

    def _apply_entry(self, entry: dict) -> None:
        kind = entry.get("type")
        if kind == "interaction":
            event = capture.parse_event(entry["event"])
            plan = self._prepare_interaction(event)
            self._commit_interaction(event, plan)
        elif kind == "outcome":
            event = outcomes_mod.parse_outcome_event(entry["event"], self.registry)
            merged = self._prepare_outcome(event)
            self._commit_outcome(event, merged)
        elif kind == "sweep":
            self._commit_sweep(parse_timestamp(entry["as_of"]))
        elif kind == "calibration":
            self._commit_calibration(entry["update"], entry["issued_at"])
        elif kind == "access":
            self._commit_access(entry["record_id"], entry["actor"], entry["at"])
        else:
            raise ValueError(f"unknown journal entry type: {kind!r}")

    # -- configuration helpers --------------------------------------------

    def _config(self, domain: str) -> DomainConfig:
        return self.registry.get(domain)

    def _signatures(self, record: InteractionRecord) -> tuple[CohortSignature, CohortSignature]:
        config = self._config(record.domain)
        agnostic = tracelayer.signature(record, config, AGNOSTIC)
        specific = tracelayer.signature(record, config, MODEL_SPECIFIC)
        return agnostic, specific

    def _stats_for(self, sig: CohortSignature) -> CohortStats:
        stats = self.cohorts.get(sig.key)
        if stats is None:
            stats = CohortStats(signature=sig)
            self.cohorts[sig.key] = stats
        return stats

    def _audit_append(self, record_id: str, entry: dict) -> None:
        self.audit.setdefault(record_id, []).append(entry)

    # -- interaction events -------------------------------------------------

    def submit_event(self, raw: dict, now: Optional[datetime] = None) -> dict:
        event = capture.parse_event(raw, now=now)
        prior = self._acks.get(event.dedupe_key)
        if prior is not None:
            ack = dict(prior)
            ack["status"] = "duplicate"
            return ack
        plan = self._prepare_interaction(event)
        self._journal_entry({"type": "interaction", "event": event.to_wire()})
        return dict(self._commit_interaction(event, plan))

    def _prepare_interaction(self, event: InteractionEvent) -> dict:
        if event.kind == AI_OUTPUT:
            return self._prepare_ingest(event)
        if event.kind == AI_OUTPUT_REVISION:
            return self._prepare_revision(event)
        return self._prepare_decision(event)

    def _commit_interaction(self, event: InteractionEvent, plan: dict) -> dict:
        if event.kind == AI_OUTPUT:
            ack = self._commit_ingest(event, plan)
        elif event.kind == AI_OUTPUT_REVISION:
            ack = self._commit_revision(event, plan)
        else:
            ack = self._commit_decision(event, plan)
        self._acks[event.dedupe_key] = ack
        self._record_time(event.occurred_at)
        return ack

    def _assess_payload(self, domain: str, mission: str, conclusion_text: str,
                        justification: str) -> tuple[ActionCode, Assessment, Assessment, CohortSignature]:
        config = self._config(domain)
        conclusion = canonicalize_action(conclusion_text, config.vocabulary)
        initial = assess(mission, conclusion, justification, domain, self.corpus)
        raw_sig = CohortSignature(
            domain=domain,
            mission_category=config.mission_category(mission),
            conclusion_category=conclusion.category,
            alignment=initial.alignment_score,
            accuracy=initial.accuracy_score,
        )
        match_keys = {
            "risk_level": raw_sig.mission_key,
            "alignment_score": raw_sig.key,
            "accuracy_score": raw_sig.key,
        }
        calibrated = apply_calibration(initial, match_keys, self.calibration)
        return conclusion, initial, calibrated, raw_sig

    @staticmethod
    def _payload_text(payload: dict, key: str, errors: list[str]) -> str:
        value = payload.get(key)
        if not isinstance(value, str) or not value.strip():
            errors.append(f"payload field {key!r} must be a non-empty string")
            return ""
        return value

    @staticmethod
    def _payload_optional_text(payload: dict, key: str, errors: list[str]) -> str:
        # Justification may legitimately be empty or absent; reject only
        # non-string values.
        value = payload.get(key, "")
        if not isinstance(value, str):
            errors.append(f"payload field {key!r} must be a string")
            return ""
        return value

    def _prepare_ingest(self, event: InteractionEvent) -> dict:
        if event.interaction_id in self.records:
            raise ConflictError(
                f"interaction {event.interaction_id} already ingested with a different payload"
            )
        payload = event.payload
        errors: list[str] = []
        mission = self._payload_text(payload, "mission", errors)
        conclusion_text = self._payload_text(payload, "conclusion", errors)
        justification = self._payload_optional_text(payload, "justification", errors)
        model_id = self._payload_text(payload, "model_id", errors)
        domain = self._payload_text(payload, "domain", errors)
        if errors:
            raise EventError("; ".join(errors))
        conclusion, initial, calibrated, raw_sig = self._assess_payload(
            domain, mission, conclusion_text, justification)
        return {
            "mission": mission,
            "conclusion": conclusion,
            "justification": justification,
            "model_id": model_id,
            "domain": domain,
            "jurisdiction": payload.get("jurisdiction"),
            "initial": initial,
            "calibrated": calibrated,
        }

    def _commit_ingest(self, event: InteractionEvent, plan: dict) -> dict:
        initial: Assessment = plan["initial"]
        calibrated: Assessment = plan["calibrated"]
        record = InteractionRecord(
            id=event.interaction_id,
            created_at=event.occurred_at,
            domain=plan["domain"],
            model_id=plan["model_id"],
            mission=plan["mission"],
            conclusion=plan["conclusion"],
            justification=plan["justification"],
            risk_level=calibrated.risk_level,
            alignment_score=calibrated.alignment_score,
            accuracy_score=calibrated.accuracy_score,
            assessment_provenance=calibrated.provenance,
            jurisdiction=plan["jurisdiction"],
            initial_grades={name: grade.value for name, grade in initial.grades().items()},
            fired_rules=[rule.to_wire() for rule in initial.fired_rules],
        )
        self.records[record.id] = record
        self.record_order.append(record.id)
        self.record_calibration[record.id] = list(calibrated.calibration_applied)
        at = format_timestamp(event.occurred_at)
        self._audit_append(record.id, {
            "at": at,
            "type": "ingested",
            "domain": record.domain,
            "model_id": record.model_id,
            "mission": record.mission,
            "conclusion": record.conclusion.to_wire(),
        })
        self._audit_append(record.id, {
            "at": at,
            "type": "assessed",
            "grades": {name: grade.value for name, grade in calibrated.grades().items()},
            "initial_grades": dict(record.initial_grades or {}),
            "provenance": calibrated.provenance.value,
            "fired_rules": [rule["rule_id"] for rule in record.fired_rules],
            "calibration_applied": list(calibrated.calibration_applied),
        })
        return {"record_id": record.id, "status": "recorded"}

    def _prepare_revision(self, event: InteractionEvent) -> dict:
        record = self.records.get(event.interaction_id)
        if record is None:
            raise UnknownRecordError(event.interaction_id)
        if record.finalized:
            raise FrozenRecordError(
                f"record {record.id} is frozen: the expert action is already recorded"
            )
        payload = event.payload
        errors: list[str] = []
        mission = self._payload_text(payload, "mission", errors)
        conclusion_text = self._payload_text(payload, "conclusion", errors)
        justification = self._payload_optional_text(payload, "justification", errors)
        if errors:
            raise EventError("; ".join(errors))
        for fixed in ("domain", "model_id"):
            supplied = payload.get(fixed)
            if supplied is not None and supplied != getattr(record, fixed):
                raise EventError(f"revision cannot change {fixed}")
        conclusion, initial, calibrated, raw_sig = self._assess_payload(
            record.domain, mission, conclusion_text, justification)
        return {
            "mission": mission,
            "conclusion": conclusion,
            "justification": justification,
            "initial": initial,
            "calibrated": calibrated,
        }

    def _commit_revision(self, event: InteractionEvent, plan: dict) -> dict:
        record = self.records[event.interaction_id]
        at = format_timestamp(event.occurred_at)
        self._audit_append(record.id, {
            "at": at,
            "type": "revised",
            "revision": record.revision_count + 1,
            "previous": {
                "mission": record.mission,
                "conclusion": record.conclusion.to_wire(),
                "justification": record.justification,
                "grades": {
                    "risk_level": record.risk_level.value,
                    "alignment_score": record.alignment_score.value,
                    "accuracy_score": record.accuracy_score.value,
                },
            },
        })
        initial: Assessment = plan["initial"]
        calibrated: Assessment = plan["calibrated"]
        record.mission = plan["mission"]
        record.conclusion = plan["conclusion"]
        record.justification = plan["justification"]
        record.risk_level = calibrated.risk_level
        record.alignment_score = calibrated.alignment_score
        record.accuracy_score = calibrated.accuracy_score
        record.assessment_provenance = calibrated.provenance
        record.initial_grades = {name: grade.value for name, grade in initial.grades().items()}
        record.fired_rules = [rule.to_wire() for rule in initial.fired_rules]
        record.revision_count += 1
        self.record_calibration[record.id] = list(calibrated.calibration_applied)
        self._audit_append(record.id, {
            "at": at,
            "type": "assessed",
            "grades": {name: grade.value for name, grade in calibrated.grades().items()},
            "initial_grades": dict(record.initial_grades or {}),
            "provenance": calibrated.provenance.value,
            "fired_rules": [rule["rule_id"] for rule in record.fired_rules],
            "calibration_applied": list(calibrated.calibration_applied),
        })
        return {"record_id": record.id, "status": "recorded",
                "revision": record.revision_count}

    def _prepare_decision(self, event: InteractionEvent) -> dict:
        record = self.records.get(event.interaction_id)
        if record is None:
            raise UnknownRecordError(event.interaction_id)
        if record.finalized:
            raise ConflictError(f"record {record.id} already carries an expert decision")
        payload = event.payload
        errors: list[str] = []
        action_text = self._payload_text(payload, "action", errors)
        reason_tags = payload.get("reason_tags", [])
        if not isinstance(reason_tags, list) or any(not isinstance(t, str) for t in reason_tags):
            errors.append("payload field 'reason_tags' must be a list of strings")
        if errors:
            raise EventError("; ".join(errors))
        if payload.get("acted_at"):
            try:
                acted_at = parse_timestamp(payload["acted_at"])
            except ValueError as exc:
                raise EventError(str(exc)) from None
        else:
            acted_at = event.occurred_at
        if acted_at < record.created_at:
            raise EventError(
                f"record {record.id}: decision time precedes record creation"
            )
        config = self._config(record.domain)
        action = canonicalize_action(action_text, config.vocabulary)
        override = capture.detect_override(record.conclusion, action)
        return {
            "action": action,
            "override": override,
            "reason_tags": [str(t) for t in reason_tags],
            "acted_at": acted_at,
        }

    def _commit_decision(self, event: InteractionEvent, plan: dict) -> dict:
        record = self.records[event.interaction_id]
        # Snapshot what the review surface could have shown, before this
        # record's own resolution enters the statistics.
        snapshot = self.reliability_for(record)
        record.reliability_at_decision = snapshot.to_wire()
        record.override = plan["override"]
        record.corrective_option = plan["action"] if plan["override"] is Override.YES else None
        record.override_reason_tags = list(plan["reason_tags"])
        record.finalized_at = plan["acted_at"]
        self._fold_finalized(record)
        at = format_timestamp(plan["acted_at"])
        self._audit_append(record.id, {
            "at": at,
            "type": "decision",
            "override": record.override.value,
            "action": plan["action"].to_wire(),
            "reason_tags": list(record.override_reason_tags),
            "reliability_at_decision": record.reliability_at_decision,
        })
        self._record_time(plan["acted_at"])
        return {"record_id": record.id, "status": "recorded"}

    def _fold_finalized(self, record: InteractionRecord) -> None:
        config = self._config(record.domain)
        for sig in self._signatures(record):
            tracelayer.add_finalized(self._stats_for(sig), record,
                                     config.escalation_categories)

    # -- outcome events -----------------------------------------------------

    def submit_outcome(self, raw: dict, now: Optional[datetime] = None) -> dict:
        event = outcomes_mod.parse_outcome_event(raw, self.registry)
        digest = hashlib.sha256(canonical_json(event.to_wire()).encode()).hexdigest()
        prior = self._outcome_seen.get(digest)
        if prior is not None:
            ack = dict(prior)
            ack["status"] = "duplicate"
            return ack
        merged = self._prepare_outcome(event)
        self._journal_entry({"type": "outcome", "event": event.to_wire()})
        ack = self._commit_outcome(event, merged)
        self._outcome_seen[digest] = ack
        return dict(ack)

    def _prepare_outcome(self, event: outcomes_mod.OutcomeEvent):
        record = self.records.get(event.record_id)
        if record is None:
            raise UnknownRecordError(event.record_id)
        return outcomes_mod.merge_outcome(record, event)

    def _commit_outcome(self, event: outcomes_mod.OutcomeEvent, merged) -> dict:
        record = self.records[event.record_id]
        config = self._config(record.domain)
        previous_class = classify_failure(record)
        previous_wire = record.outcome.to_wire() if record.outcome else None
        record.outcome = merged
        for sig in self._signatures(record):
            tracelayer.update_outcome(self._stats_for(sig), record, previous_class,
                                      config.escalation_categories, previous_wire)
        self.outcome_log.setdefault(record.id, []).append(event.to_wire())
        self._audit_append(record.id, {
            "at": format_timestamp(event.observed_at),
            "type": "outcome",
            "event": event.to_wire(),
        })
        digest = hashlib.sha256(canonical_json(event.to_wire()).encode()).hexdigest()
        ack = {"record_id": record.id, "status": "recorded"}
        self._outcome_seen[digest] = ack
        self._record_time(event.observed_at)
        return ack

    # -- unattended sweep ----------------------------------------------------

    def _sweep_targets(self, as_of: datetime) -> list[str]:
        window = timedelta(days=self.thresholds.unattended_window_days)
        return [
            rid for rid in self.record_order
            if not self.records[rid].finalized
            and self.records[rid].created_at + window <= as_of
        ]

    def sweep_unattended(self, as_of: Optional[datetime] = None) -> list[str]:
        as_of = as_of or datetime.now(timezone.utc)
        targets = self._sweep_targets(as_of)
        if not targets:
            return []
        self._journal_entry({"type": "sweep", "as_of": format_timestamp(as_of)})
        return self._commit_sweep(as_of)

    def _commit_sweep(self, as_of: datetime) -> list[str]:
        window = timedelta(days=self.thresholds.unattended_window_days)
        swept = []
        for rid in self._sweep_targets(as_of):
            record = self.records[rid]
            record.override = Override.NO
            record.override_reason_tags = [UNATTENDED]
            record.finalized_at = record.created_at + window
            self._fold_finalized(record)
            self._audit_append(rid, {
                "at": format_timestamp(record.finalized_at),
                "type": "decision",
                "override": record.override.value,
                "via": "unattended-window",
                "reason_tags": [UNATTENDED],
            })
            swept.append(rid)
        self._record_time(as_of)
        return swept

    # -- recalibration -------------------------------------------------------

    def run_recalibration(self, as_of: Optional[datetime] = None) -> list[tracelayer.CalibrationUpdate]:
        moment = as_of or self.last_event_at or datetime.now(timezone.utc)
        issued_at = format_timestamp(moment)
        emitted: list[tracelayer.CalibrationUpdate] = []
        for key in sorted(self.cohorts):
            stats = self.cohorts[key]
            sig = stats.signature
            if sig.model_scope != AGNOSTIC:
                continue
            config = self._config(sig.domain)
            current = {"alignment_score": sig.alignment, "accuracy_score": sig.accuracy}
            live_n: dict[str, int] = {}
            for field_name in ("alignment_score", "accuracy_score"):
                entry = self.calibration.live_entry(sig.key, field_name)
                if entry is not None:
                    current[field_name] = entry.adjusted_grade
                    live_n[field_name] = int(entry.evidence.get("n", 0))
            risk_entry = self.calibration.live_entry(sig.mission_key, "risk_level")
            if risk_entry is not None:
                live_n["risk_level"] = int(risk_entry.evidence.get("n", 0))
            updates = tracelayer.recalibrate_cohort(
                stats,
                self.thresholds,
                config,
                current,
                risk_already_high=(risk_entry is not None
                                   and risk_entry.adjusted_grade is Grade.HIGH),
                already_forced_low=sig.key in self.forced_low,
                live_evidence_n=live_n,
            )
            for update in updates:
                wire = update.to_wire()
                self._journal_entry({"type": "calibration", "update": wire,
                                     "issued_at": issued_at})
                self._commit_calibration(wire, issued_at)
                emitted.append(update)
        return emitted

    def _commit_calibration(self, update_wire: dict, issued_at: str) -> None:
        if update_wire["field"] == RELIABILITY_FIELD:
            self.forced_low.add(update_wire["match_key"])
            return
        self.calibration.install(CalibrationEntry(
            signature_key=update_wire["signature"],
            match_key=update_wire["match_key"],
            field=update_wire["field"],
            adjusted_grade=Grade.parse(update_wire["adjusted_grade"]),
            evidence=dict(update_wire["evidence"]),
            issued_at=issued_at,
            kind=update_wire["kind"],
        ))

    def calibration_state(self) -> dict:
        return {
            "entries": [entry.to_wire() for entry in self.calibration.live_entries()],
            "forced_low": sorted(self.forced_low),
        }

    # -- queries ---------------------------------------------------------------

    def reliability_for(self, record: InteractionRecord) -> ReliabilityAssessment:
        agnostic_sig, specific_sig = self._signatures(record)
        return tracelayer.reliability(
            record,
            self.cohorts.get(specific_sig.key),
            self.cohorts.get(agnostic_sig.key),
            self.thresholds,
            self._config(record.domain),
            self.forced_low,
        )

    def assessment_view(self, record_id: str, actor: Optional[str] = None,
                        at: Optional[datetime] = None) -> dict:
        record = self.records.get(record_id)
        if record is None:
            raise UnknownRecordError(record_id)
        moment = at or datetime.now(timezone.utc)
        self._journal_entry({"type": "access", "record_id": record_id,
                             "actor": actor or "anonymous",
                             "at": format_timestamp(moment)})
        self._commit_access(record_id, actor or "anonymous", format_timestamp(moment))
        reliability = self.reliability_for(record)
        agnostic_sig, specific_sig = self._signatures(record)
        mode_directive = visibility_directive(
            reliability.grade, record.risk_level, reliability.to_wire(),
            self.policy, access_token=record_id)
        return {
            "record_id": record.id,
            "created_at": format_timestamp(record.created_at),
            "status": "resolved" if record.finalized else "pending",
            "assessment": {
                "risk_level": record.risk_level.value,
                "alignment_score": record.alignment_score.value,
                "accuracy_score": record.accuracy_score.value,
                "provenance": record.assessment_provenance.value,
                "fired_rules": list(record.fired_rules),
                "calibration_applied": list(self.record_calibration.get(record.id, [])),
            },
            "reliability": reliability.to_wire(),
            "directive": mode_directive.to_wire(),
            "signature_keys": {
                "agnostic": agnostic_sig.key,
                "model_specific": specific_sig.key,
            },
        }

    def _commit_access(self, record_id: str, actor: str, at: str) -> None:
        self._audit_append(record_id, {"at": at, "type": "access", "actor": actor})

    def audit_trail(self, record_id: str) -> list[dict]:
        if record_id not in self.records:
            raise UnknownRecordError(record_id)
        return [dict(entry) for entry in self.audit.get(record_id, [])]

    def cohort_view(self, key: str, as_of: Optional[datetime] = None) -> CohortStats:
        sig = parse_signature_key(key)
        if as_of is None:
            return self.cohorts.get(key) or CohortStats(signature=sig)
        return self._stats_as_of(sig, as_of)

    def _outcome_state_as_of(self, record_id: str, as_of: datetime):
        from .grammar import Empirical, OutcomeState, Procedural

        events = [
            wire for wire in self.outcome_log.get(record_id, [])
            if parse_timestamp(wire["observed_at"]) <= as_of
        ]
        if not events:
            return None
        state = OutcomeState()
        for wire in events:
            empirical = Empirical(wire.get("empirical", "unknown"))
            procedural = Procedural(wire.get("procedural", "unknown"))
            if empirical is not Empirical.UNKNOWN:
                state.empirical = empirical
            if procedural is not Procedural.UNKNOWN:
                state.procedural = procedural
            for tag in wire.get("detail_tags") or []:
                if tag not in state.detail_tags:
                    state.detail_tags.append(tag)
            state.metric_pairs.update(wire.get("metric_pairs") or {})
            observed = parse_timestamp(wire["observed_at"])
            if state.observed_at is None or observed > state.observed_at:
                state.observed_at = observed
        return state

    def _stats_as_of(self, sig: CohortSignature, as_of: datetime) -> CohortStats:
        config = self._config(sig.domain)
        members = []
        for rid in self.record_order:
            record = self.records[rid]
            if record.finalized_at is None or record.finalized_at > as_of:
                continue
            scope = AGNOSTIC if sig.model_scope == AGNOSTIC else MODEL_SPECIFIC
            if tracelayer.signature(record, self._config(record.domain), scope).key != sig.key:
                continue
            shadow = dataclasses.replace(
                record, outcome=self._outcome_state_as_of(rid, as_of))
            members.append(shadow)
        return tracelayer.recount(sig, members, config.escalation_categories)

    def review_items(self, domain: Optional[str] = None,
                     status: Optional[str] = None,
                     mode: Optional[str] = None) -> list[dict]:
        """Work queue for the review surface.

        Grades appear only inside the visibility directive payload, never on
        the item itself: the directive is the sole channel that decides what
        a reviewer gets to see.
        """
        items = []
        for rid in self.record_order:
            record = self.records[rid]
            if domain is not None and record.domain != domain:
                continue
            record_status = "resolved" if record.finalized else "pending"
            if status is not None and record_status != status:
                continue
            reliability = self.reliability_for(record)
            mode_directive = visibility_directive(
                reliability.grade, record.risk_level, reliability.to_wire(),
                self.policy, access_token=rid)
            if mode is not None and mode_directive.mode != mode:
                continue
            items.append({
                "record_id": rid,
                "domain": record.domain,
                "model_id": record.model_id,
                "created_at": format_timestamp(record.created_at),
                "mission": record.mission,
                "conclusion": record.conclusion.to_wire(),
                "justification": record.justification,
                "status": record_status,
                "override": record.override.value,
                "corrective_option": (record.corrective_option.to_wire()
                                      if record.corrective_option else None),
                "directive": mode_directive.to_wire(),
            })
        return items

    # -- state hash -------------------------------------------------------------

    def _state_view(self, record: InteractionRecord) -> dict:
        view = record.to_wire()
        view["initial_grades"] = dict(record.initial_grades or {})
        view["fired_rules"] = [rule["rule_id"] for rule in record.fired_rules]
        view["revision_count"] = record.revision_count
        view["finalized_at"] = (format_timestamp(record.finalized_at)
                                if record.finalized_at else None)
        return view

    def state_hash(self) -> str:
        body = {
            "records": [self._state_view(self.records[rid])
                        for rid in sorted(self.records)],
            "calibration": [entry.to_wire() for entry in self.calibration.live_entries()],
            "forced_low": sorted(self.forced_low),
        }
        return hashlib.sha256(canonical_json(body).encode("utf-8")).hexdigest()
