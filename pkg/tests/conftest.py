"""Shared builders: records, engines, event envelopes."""

from datetime import datetime, timedelta, timezone

import pytest

from logia.assessor import GuidelineCorpus
from logia.domains import registry_from_dict
from logia.engine import Engine
from logia.fixtures import fixture_path, load_json
from logia.grammar import (
    Empirical,
    Grade,
    InteractionRecord,
    Override,
    OutcomeState,
    Procedural,
    canonicalize_action,
)
from logia.tracelayer import Thresholds
from logia.visibility import VisibilityPolicy

BASE_TIME = datetime(2025, 7, 1, tzinfo=timezone.utc)


@pytest.fixture(scope="session")
def corpus():
    return GuidelineCorpus.load_dir(fixture_path("corpus"))


@pytest.fixture()
def registry():
    # Function-scoped: DomainRegistry.get() memoizes default configs.
    return registry_from_dict(load_json("taxonomy.json"))


@pytest.fixture()
def policy():
    return VisibilityPolicy.from_dict(load_json("policy.json"))


def make_engine(journal_path=None, thresholds=None, fsync=False):
    return Engine(
        corpus=GuidelineCorpus.load_dir(fixture_path("corpus")),
        registry=registry_from_dict(load_json("taxonomy.json")),
        policy=VisibilityPolicy.from_dict(load_json("policy.json")),
        thresholds=thresholds or Thresholds(),
        journal_path=journal_path,
        fsync=fsync,
    )


@pytest.fixture()
def engine():
    return make_engine()


def build_record(i=0, domain="sim", mission="Beta-query: subject", conclusion="Apply standard plan",
                 justification="beta-signal present", alignment=Grade.MEDIUM,
                 accuracy=Grade.MEDIUM, risk=Grade.MEDIUM, override=Override.PENDING,
                 corrective=None, reason_tags=(), outcome=None, vocabulary=None,
                 model_id="sim-model-1", created_at=None, finalized_at=None):
    """Directly-constructed record for analytics-level tests."""
    from logia.grammar import EMPTY_VOCABULARY

    vocab = vocabulary or EMPTY_VOCABULARY
    created = created_at or BASE_TIME + timedelta(minutes=i)
    record = InteractionRecord(
        id=f"rec-{i:05d}",
        created_at=created,
        domain=domain,
        model_id=model_id,
        mission=mission,
        conclusion=canonicalize_action(conclusion, vocab),
        justification=justification,
        risk_level=risk,
        alignment_score=alignment,
        accuracy_score=accuracy,
        override=override,
        corrective_option=(canonicalize_action(corrective, vocab)
                           if corrective else None),
        override_reason_tags=list(reason_tags),
        outcome=outcome,
        finalized_at=finalized_at or (created + timedelta(minutes=5)
                                      if override is not Override.PENDING else None),
    )
    return record


def outcome_state(empirical="unknown", procedural="unknown", tags=(), metrics=None,
                  observed_at=None):
    return OutcomeState(
        empirical=Empirical(empirical),
        procedural=Procedural(procedural),
        detail_tags=list(tags),
        metric_pairs=dict(metrics or {}),
        observed_at=observed_at,
    )


def ingest_event(record_id, mission, conclusion, justification, domain,
                 model_id="m-1", at=None, jurisdiction=None):
    payload = {
        "mission": mission,
        "conclusion": conclusion,
        "justification": justification,
        "model_id": model_id,
        "domain": domain,
    }
    if jurisdiction:
        payload["jurisdiction"] = jurisdiction
    return {
        "interaction_id": record_id,
        "kind": "ai_output",
        "occurred_at": (at or BASE_TIME).strftime("%Y-%m-%dT%H:%M:%SZ"),
        "payload": payload,
    }


def action_event(record_id, action, at=None, reason_tags=None):
    payload = {"action": action}
    if reason_tags is not None:
        payload["reason_tags"] = reason_tags
    return {
        "interaction_id": record_id,
        "kind": "expert_action",
        "occurred_at": (at or BASE_TIME + timedelta(minutes=5)).strftime("%Y-%m-%dT%H:%M:%SZ"),
        "payload": payload,
    }


def revision_event(record_id, mission, conclusion, justification, at=None):
    return {
        "interaction_id": record_id,
        "kind": "ai_output_revision",
        "occurred_at": (at or BASE_TIME + timedelta(minutes=2)).strftime("%Y-%m-%dT%H:%M:%SZ"),
        "payload": {
            "mission": mission,
            "conclusion": conclusion,
            "justification": justification,
        },
    }


def outcome_event(record_id, empirical=None, procedural=None, tags=None,
                  metrics=None, at=None):
    body = {
        "record_id": record_id,
        "observed_at": (at or BASE_TIME + timedelta(hours=2)).strftime("%Y-%m-%dT%H:%M:%SZ"),
    }
    if empirical is not None:
        body["empirical"] = empirical
    if procedural is not None:
        body["procedural"] = procedural
    if tags is not None:
        body["detail_tags"] = tags
    if metrics is not None:
        body["metric_pairs"] = metrics
    return body
