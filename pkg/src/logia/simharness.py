"""Seeded simulation harness.

Generates a synthetic expert population with known override and outcome
probabilities, drives it through the public event interface (in process or
against a running service), then checks that the engine's conclusions match
the planted ground truth: reliability grades ordered by true failure rate,
the escalation pattern detected as understated risk, and the entrenchment
cohort forced Low by outcome evidence despite near-unanimous acceptance.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from typing import Optional, Protocol

from .client import Client
from .engine import Engine
from .grammar import format_timestamp, parse_timestamp
from .tracelayer import KEY_SEP, RISK_RECAL, OUTCOME_OVERRIDE

GRADE_ORDER = ("low", "medium", "high")


@dataclass
class CohortPlan:
    """One planted cohort: fixed texts, tunable behavior probabilities."""

    name: str
    mission_template: str
    conclusion: str
    justification: str
    count: int
    override_prob: float
    adverse_given_accept: float = 0.0
    adverse_given_override: float = 0.0
    outcome_coverage: float = 1.0
    corrective_options: list[tuple[str, float]] = field(default_factory=list)
    reason_tags: list[str] = field(default_factory=list)
    lag_minutes: tuple[int, int] = (30, 240)
    domain: str = "sim"
    model_id: str = "sim-model-1"
    expected_grade: Optional[str] = None
    expected_updates: list[str] = field(default_factory=list)

    def to_wire(self) -> dict:
        return {
            "name": self.name,
            "mission_template": self.mission_template,
            "conclusion": self.conclusion,
            "justification": self.justification,
            "count": self.count,
            "override_prob": self.override_prob,
            "adverse_given_accept": self.adverse_given_accept,
            "adverse_given_override": self.adverse_given_override,
            "outcome_coverage": self.outcome_coverage,
            "corrective_options": [list(pair) for pair in self.corrective_options],
            "reason_tags": list(self.reason_tags),
            "lag_minutes": list(self.lag_minutes),
            "domain": self.domain,
            "model_id": self.model_id,
            "expected_grade": self.expected_grade,
            "expected_updates": list(self.expected_updates),
        }

    @classmethod
    def from_wire(cls, raw: dict) -> "CohortPlan":
        return cls(
            name=raw["name"],
            mission_template=raw["mission_template"],
            conclusion=raw["conclusion"],
            justification=raw["justification"],
            count=int(raw["count"]),
            override_prob=float(raw["override_prob"]),
            adverse_given_accept=float(raw.get("adverse_given_accept", 0.0)),
            adverse_given_override=float(raw.get("adverse_given_override", 0.0)),
            outcome_coverage=float(raw.get("outcome_coverage", 1.0)),
            corrective_options=[(str(t), float(w))
                                for t, w in raw.get("corrective_options", [])],
            reason_tags=[str(t) for t in raw.get("reason_tags", [])],
            lag_minutes=tuple(raw.get("lag_minutes", (30, 240))),
            domain=raw.get("domain", "sim"),
            model_id=raw.get("model_id", "sim-model-1"),
            expected_grade=raw.get("expected_grade"),
            expected_updates=[str(u) for u in raw.get("expected_updates", [])],
        )


@dataclass
class PopulationSpec:
    cohorts: list[CohortPlan]
    base_time: str = "2025-07-01T00:00:00Z"

    def to_wire(self) -> dict:
        return {"base_time": self.base_time,
                "cohorts": [plan.to_wire() for plan in self.cohorts]}

    @classmethod
    def from_wire(cls, raw: dict) -> "PopulationSpec":
        return cls(
            cohorts=[CohortPlan.from_wire(item) for item in raw["cohorts"]],
            base_time=raw.get("base_time", "2025-07-01T00:00:00Z"),
        )

    @classmethod
    def load(cls, path: str) -> "PopulationSpec":
        with open(path, "r", encoding="utf-8") as handle:
            return cls.from_wire(json.load(handle))


def default_spec(cohort_size: int = 1000) -> PopulationSpec:
    """Three graded cohorts plus the two planted anomaly patterns."""
    return PopulationSpec(cohorts=[
        CohortPlan(
            name="alpha",
            mission_template="Alpha-query: recommend handling for subject {i}",
            conclusion="Apply standard plan",
            justification="alpha-signal present in intake data",
            count=cohort_size,
            override_prob=0.75,
            corrective_options=[("Apply alternative plan", 1.0)],
            expected_grade="low",
        ),
        CohortPlan(
            name="beta",
            mission_template="Beta-query: recommend handling for subject {i}",
            conclusion="Apply standard plan",
            justification="beta-signal present in intake data",
            count=cohort_size,
            override_prob=0.40,
            corrective_options=[("Apply alternative plan", 1.0)],
            expected_grade="medium",
        ),
        CohortPlan(
            name="gamma",
            mission_template="Gamma-query: recommend handling for subject {i}",
            conclusion="Apply standard plan",
            justification="gamma-signal present in intake data",
            count=cohort_size,
            override_prob=0.05,
            corrective_options=[("Apply alternative plan", 1.0)],
            expected_grade="high",
        ),
        CohortPlan(
            name="delta",
            mission_template="Delta-query: recommend handling for subject {i}",
            conclusion="Apply standard plan",
            justification="delta-signal present in intake data",
            count=cohort_size,
            override_prob=0.70,
            adverse_given_accept=0.65,
            corrective_options=[("Escalate for senior review", 1.0)],
            expected_grade="low",
            expected_updates=[RISK_RECAL],
        ),
        CohortPlan(
            name="epsilon",
            mission_template="Epsilon-query: recommend handling for subject {i}",
            conclusion="Apply standard plan",
            justification="epsilon-signal present in intake data",
            count=cohort_size,
            override_prob=0.05,
            adverse_given_accept=0.65,
            corrective_options=[("Apply alternative plan", 1.0)],
            expected_grade="low",
            expected_updates=[OUTCOME_OVERRIDE],
        ),
    ])


# ---------------------------------------------------------------------------
# Generation
# ---------------------------------------------------------------------------

@dataclass
class CohortTruth:
    plan: CohortPlan
    record_ids: list[str] = field(default_factory=list)
    failures: int = 0


def _pick_weighted(rng: random.Random, options: list[tuple[str, float]]) -> str:
    texts = [t for t, _ in options]
    weights = [w for _, w in options]
    return rng.choices(texts, weights=weights, k=1)[0]


def generate_population(spec: PopulationSpec, seed: int) -> tuple[list[dict], dict[str, CohortTruth]]:
    """Deterministic event stream plus the ground truth it was drawn from.

    Returns (messages, truth) where each message is
    {"channel": "events"|"outcomes", "body": <wire object>}.
    """
    rng = random.Random(seed)
    base = parse_timestamp(spec.base_time)
    messages: list[dict] = []
    truth: dict[str, CohortTruth] = {}
    tick = 0
    for plan in spec.cohorts:
        cohort_truth = CohortTruth(plan=plan)
        truth[plan.name] = cohort_truth
        for i in range(plan.count):
            record_id = f"sim-{plan.name}-{i:05d}"
            created = base + timedelta(minutes=tick)
            acted = created + timedelta(minutes=5)
            tick += 1
            cohort_truth.record_ids.append(record_id)
            messages.append({"channel": "events", "body": {
                "interaction_id": record_id,
                "kind": "ai_output",
                "occurred_at": format_timestamp(created),
                "payload": {
                    "mission": plan.mission_template.format(i=i),
                    "conclusion": plan.conclusion,
                    "justification": plan.justification,
                    "model_id": plan.model_id,
                    "domain": plan.domain,
                },
            }})
            overridden = rng.random() < plan.override_prob
            if overridden:
                action = _pick_weighted(rng, plan.corrective_options)
            else:
                action = plan.conclusion
            messages.append({"channel": "events", "body": {
                "interaction_id": record_id,
                "kind": "expert_action",
                "occurred_at": format_timestamp(acted),
                "payload": {
                    "action": action,
                    "reason_tags": list(plan.reason_tags) if overridden else [],
                },
            }})
            adverse = False
            observed = None
            if rng.random() < plan.outcome_coverage:
                if overridden:
                    adverse = rng.random() < plan.adverse_given_override
                else:
                    adverse = rng.random() < plan.adverse_given_accept
                lag = rng.randint(*plan.lag_minutes)
                observed = acted + timedelta(minutes=lag)
                messages.append({"channel": "outcomes", "body": {
                    "record_id": record_id,
                    "empirical": "adverse" if adverse else "benign",
                    "observed_at": format_timestamp(observed),
                }})
            if overridden or adverse:
                cohort_truth.failures += 1
    return messages, truth


# ---------------------------------------------------------------------------
# Sinks: in-process engine or remote service, same surface
# ---------------------------------------------------------------------------

class Sink(Protocol):
    def event(self, body: dict) -> dict: ...
    def outcome(self, body: dict) -> dict: ...
    def recalibrate(self) -> list[dict]: ...
    def assessment(self, record_id: str) -> dict: ...
    def calibration(self) -> dict: ...


class EngineSink:
    def __init__(self, engine: Engine):
        self.engine = engine

    def event(self, body: dict) -> dict:
        return self.engine.submit_event(body)

    def outcome(self, body: dict) -> dict:
        return self.engine.submit_outcome(body)

    def recalibrate(self) -> list[dict]:
        return [u.to_wire() for u in self.engine.run_recalibration()]

    def assessment(self, record_id: str) -> dict:
        return self.engine.assessment_view(record_id, actor="simharness")

    def calibration(self) -> dict:
        return self.engine.calibration_state()


class ClientSink:
    def __init__(self, client: Client):
        self.client = client

    def event(self, body: dict) -> dict:
        return self.client.submit_event(body)

    def outcome(self, body: dict) -> dict:
        return self.client.submit_outcome(body)

    def recalibrate(self) -> list[dict]:
        return self.client.recalibrate()["updates"]

    def assessment(self, record_id: str) -> dict:
        return self.client.assessment(record_id, actor="simharness")

    def calibration(self) -> dict:
        return self.client.calibration()


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def _mission_key(signature_key: str) -> str:
    parts = signature_key.split(KEY_SEP)
    return KEY_SEP.join(parts[:2])


def run_simulation(spec: PopulationSpec, seed: int, sink: Sink) -> dict:
    """Feed the population, recalibrate, evaluate. Returns the report."""
    messages, truth = generate_population(spec, seed)
    for message in messages:
        if message["channel"] == "events":
            sink.event(message["body"])
        else:
            sink.outcome(message["body"])
    emitted = sink.recalibrate()
    report = evaluate_calibration(sink, spec, truth)
    report["seed"] = seed
    report["generated_messages"] = len(messages)
    report["calibration_updates_emitted"] = emitted
    return report


def evaluate_calibration(sink: Sink, spec: PopulationSpec,
                         truth: dict[str, CohortTruth]) -> dict:
    cohort_reports: dict[str, dict] = {}
    pooled: dict[str, dict] = {g: {"failures": 0, "n": 0} for g in GRADE_ORDER}
    confusion: dict[str, dict] = {}
    calibration_state = sink.calibration()
    live_entries = calibration_state.get("entries", [])
    forced_low = set(calibration_state.get("forced_low", []))
    all_expected_match = True
    all_planted_found = True

    for plan in spec.cohorts:
        cohort_truth = truth[plan.name]
        view = sink.assessment(cohort_truth.record_ids[-1])
        assigned = view["reliability"]["grade"]
        signature_key = view["signature_keys"]["agnostic"]
        true_rate = cohort_truth.failures / max(1, plan.count)
        planted: dict[str, bool] = {}
        for kind in plan.expected_updates:
            if kind == RISK_RECAL:
                wanted = _mission_key(signature_key)
                planted[kind] = any(
                    entry["kind"] == RISK_RECAL and entry["match_key"] == wanted
                    for entry in live_entries
                )
            elif kind == OUTCOME_OVERRIDE:
                planted[kind] = signature_key in forced_low
            else:
                planted[kind] = any(entry["kind"] == kind for entry in live_entries)
        if not all(planted.values()):
            all_planted_found = False
        expected = plan.expected_grade
        if expected is not None:
            confusion.setdefault(expected, {})
            confusion[expected][assigned] = confusion[expected].get(assigned, 0) + 1
            if expected != assigned:
                all_expected_match = False
        if assigned in pooled:
            pooled[assigned]["failures"] += cohort_truth.failures
            pooled[assigned]["n"] += plan.count
        cohort_reports[plan.name] = {
            "n": plan.count,
            "true_failure_rate": true_rate,
            "expected_grade": expected,
            "assigned_grade": assigned,
            "basis": view["reliability"]["basis"],
            "forced_low": view["reliability"]["forced_low"],
            "signature_key": signature_key,
            "planted_updates": planted,
        }

    grade_rates = {}
    for grade in GRADE_ORDER:
        n = pooled[grade]["n"]
        grade_rates[grade] = {
            "failures": pooled[grade]["failures"],
            "n": n,
            "rate": pooled[grade]["failures"] / n if n else None,
        }
    present = [g for g in ("low", "medium", "high") if grade_rates[g]["rate"] is not None]
    monotonic = all(
        grade_rates[present[i]]["rate"] > grade_rates[present[i + 1]]["rate"]
        for i in range(len(present) - 1)
    )
    return {
        "cohorts": cohort_reports,
        "grade_failure_rates": grade_rates,
        "monotonic_by_grade": monotonic,
        "confusion": confusion,
        "forced_low_keys": sorted(forced_low),
        "pass": monotonic and all_expected_match and all_planted_found,
    }


def write_report(report: dict, path: str) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(report, handle, indent=2, sort_keys=True)
        handle.write("\n")
