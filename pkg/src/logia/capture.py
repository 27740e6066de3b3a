"""Interaction event envelopes.

Everything entering the system arrives as an event: an AI output, a revision
of one, or the expert's action on one. Events are idempotent by
(interaction_id, kind, payload hash), so transport retries are harmless, while
a reused id with a different payload is a conflict rather than a silent
overwrite.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Optional

from .grammar import ActionCode, Override, format_timestamp, parse_timestamp

AI_OUTPUT = "ai_output"
AI_OUTPUT_REVISION = "ai_output_revision"
EXPERT_ACTION = "expert_action"
EVENT_KINDS = (AI_OUTPUT, AI_OUTPUT_REVISION, EXPERT_ACTION)


class EventError(ValueError):
    pass


class ConflictError(ValueError):
    """Same interaction id, different payload."""


class FrozenRecordError(ValueError):
    """Revision attempted after the expert already acted."""


class UnknownRecordError(KeyError):
    pass


def canonical_json(value) -> str:
    return json.dumps(value, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def payload_hash(kind: str, payload: dict) -> str:
    body = canonical_json({"kind": kind, "payload": payload})
    return hashlib.sha256(body.encode("utf-8")).hexdigest()


@dataclass
class InteractionEvent:
    interaction_id: str
    kind: str
    payload: dict
    occurred_at: datetime
    payload_digest: str = field(init=False)

    def __post_init__(self) -> None:
        self.payload_digest = payload_hash(self.kind, self.payload)

    @property
    def dedupe_key(self) -> tuple[str, str, str]:
        return (self.interaction_id, self.kind, self.payload_digest)

    def to_wire(self) -> dict:
        return {
            "interaction_id": self.interaction_id,
            "kind": self.kind,
            "payload": self.payload,
            "occurred_at": format_timestamp(self.occurred_at),
        }


def parse_event(raw: dict, now: Optional[datetime] = None) -> InteractionEvent:
    """Validate a wire envelope. Missing occurred_at is stamped on arrival."""
    if not isinstance(raw, dict):
        raise EventError("event must be an object")
    interaction_id = raw.get("interaction_id")
    if not interaction_id or not str(interaction_id).strip():
        raise EventError("event missing interaction_id")
    kind = raw.get("kind")
    if kind not in EVENT_KINDS:
        raise EventError(f"unknown event kind: {kind!r}")
    payload = raw.get("payload")
    if not isinstance(payload, dict):
        raise EventError("event payload must be an object")
    if raw.get("occurred_at"):
        try:
            occurred_at = parse_timestamp(raw["occurred_at"])
        except ValueError as exc:
            raise EventError(str(exc)) from None
    else:
        occurred_at = now or datetime.now(timezone.utc)
    return InteractionEvent(
        interaction_id=str(interaction_id),
        kind=kind,
        payload=payload,
        occurred_at=occurred_at,
    )


def detect_override(conclusion: ActionCode, expert_action: ActionCode) -> Override:
    """Override is determined by canonical comparison, not raw text equality."""
    if expert_action.canonical == conclusion.canonical:
        return Override.NO
    return Override.YES
