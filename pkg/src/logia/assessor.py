"""Rule-based initial assessment against an institution guideline corpus.

Grades every output on risk, alignment and accuracy by matching mission,
conclusion and justification text against guideline-derived rules. Each rule
cites the guideline document and passage it encodes, so every non-default
grade is traceable to its source. A calibration table learned downstream
adjusts these initial grades for cohorts whose evidence contradicts them.

The rule engine is deliberately deterministic. A retrieval-based assessor can
be swapped in behind the same assess() signature later; nothing downstream
depends on how the grades were produced beyond the recorded provenance.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .grammar import ActionCode, Grade, Provenance, canonical_text

ASSESSMENT_FIELDS = ("risk_level", "alignment_score", "accuracy_score")

# When rules of equal priority disagree on one field, fail toward more
# oversight: the highest defensible risk, the lowest defensible score.
_STRICT_HIGH = {"risk_level"}


class CorpusError(ValueError):
    pass


@dataclass(frozen=True)
class RuleTrigger:
    """Predicate over record fields.

    Every listed condition must hold (conjunction). Text terms match as
    substrings of the canonical form of the target field; patterns are
    regular expressions searched in the same form.
    """

    mission_terms: tuple[str, ...] = ()
    conclusion_terms: tuple[str, ...] = ()
    justification_terms: tuple[str, ...] = ()
    conclusion_patterns: tuple[str, ...] = ()
    action_category: Optional[str] = None

    def matches(self, mission: str, conclusion: ActionCode, justification: str) -> bool:
        mission_c = canonical_text(mission)
        justification_c = canonical_text(justification) if justification.strip() else ""
        if any(term not in mission_c for term in self.mission_terms):
            return False
        if any(term not in conclusion.canonical for term in self.conclusion_terms):
            return False
        if any(term not in justification_c for term in self.justification_terms):
            return False
        for pattern in self.conclusion_patterns:
            if not re.search(pattern, conclusion.canonical):
                return False
        if self.action_category is not None and conclusion.category != self.action_category:
            return False
        return True


@dataclass(frozen=True)
class RuleEffect:
    """Sets or bounds exactly one assessment field."""

    field: str
    kind: str  # set | at_least | at_most
    grade: Grade

    def apply(self, current: Grade) -> Grade:
        if self.kind == "set":
            return self.grade
        if self.kind == "at_least":
            return max(current, self.grade, key=lambda g: g.rank)
        if self.kind == "at_most":
            return min(current, self.grade, key=lambda g: g.rank)
        raise ValueError(f"unknown effect kind {self.kind!r}")


@dataclass(frozen=True)
class GuidelineRule:
    rule_id: str
    domain: str
    trigger: RuleTrigger
    effect: RuleEffect
    citation: str
    priority: int = 0

    def to_wire(self) -> dict:
        return {
            "rule_id": self.rule_id,
            "field": self.effect.field,
            "effect": self.effect.kind,
            "grade": self.effect.grade.value,
            "citation": self.citation,
            "priority": self.priority,
        }


def _parse_rule(raw: dict, default_domain: str | None = None) -> GuidelineRule:
    for key in ("rule_id", "effect", "citation"):
        if key not in raw:
            raise CorpusError(f"rule missing {key!r}: {raw!r}")
    effect_raw = raw["effect"]
    field_name = effect_raw.get("field")
    if field_name not in ASSESSMENT_FIELDS:
        raise CorpusError(f"rule {raw['rule_id']}: effect must target one of {ASSESSMENT_FIELDS}")
    kind = effect_raw.get("kind", "set")
    if kind not in ("set", "at_least", "at_most"):
        raise CorpusError(f"rule {raw['rule_id']}: unknown effect kind {kind!r}")
    if not str(raw["citation"]).strip():
        raise CorpusError(f"rule {raw['rule_id']}: citation must name a corpus document")
    trigger_raw = raw.get("trigger", {})
    trigger = RuleTrigger(
        mission_terms=tuple(canonical_text(t) for t in trigger_raw.get("mission_terms", [])),
        conclusion_terms=tuple(canonical_text(t) for t in trigger_raw.get("conclusion_terms", [])),
        justification_terms=tuple(canonical_text(t) for t in trigger_raw.get("justification_terms", [])),
        conclusion_patterns=tuple(trigger_raw.get("conclusion_patterns", [])),
        action_category=trigger_raw.get("action_category"),
    )
    return GuidelineRule(
        rule_id=raw["rule_id"],
        domain=raw.get("domain") or default_domain or "",
        trigger=trigger,
        effect=RuleEffect(field=field_name, kind=kind, grade=Grade.parse(effect_raw["grade"])),
        citation=raw["citation"],
        priority=int(raw.get("priority", 0)),
    )


class GuidelineCorpus:
    """Guideline rules grouped by domain.

    On disk: a directory with one JSON file per guideline document, each an
    array of rule objects. File order inside the directory is irrelevant;
    rule priority drives resolution.
    """

    def __init__(self, rules: list[GuidelineRule] | None = None):
        self._by_domain: dict[str, list[GuidelineRule]] = {}
        for rule in rules or []:
            self._by_domain.setdefault(rule.domain, []).append(rule)

    @classmethod
    def load_dir(cls, path: str | Path) -> "GuidelineCorpus":
        path = Path(path)
        if not path.is_dir():
            raise CorpusError(f"corpus directory not found: {path}")
        rules: list[GuidelineRule] = []
        for doc in sorted(path.glob("*.json")):
            try:
                raw = json.loads(doc.read_text())
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{doc}: not valid JSON ({exc})") from None
            if not isinstance(raw, list):
                raise CorpusError(f"{doc}: expected a JSON array of rules")
            for item in raw:
                rules.append(_parse_rule(item))
        return cls(rules)

    @classmethod
    def from_lists(cls, by_domain: dict[str, list[dict]]) -> "GuidelineCorpus":
        rules = []
        for domain, items in by_domain.items():
            for item in items:
                rules.append(_parse_rule(item, default_domain=domain))
        return cls(rules)

    def domains(self) -> list[str]:
        return sorted(self._by_domain)

    def rules_for(self, domain: str) -> list[GuidelineRule]:
        return self._by_domain.get(domain, [])

    def has_domain(self, domain: str) -> bool:
        return domain in self._by_domain


@dataclass
class Assessment:
    """Result of one rule-engine pass: three grades plus the audit chain."""

    risk_level: Grade
    alignment_score: Grade
    accuracy_score: Grade
    fired_rules: list[GuidelineRule] = field(default_factory=list)
    provenance: Provenance = Provenance.RULE_BASED_INITIAL
    calibration_applied: list[dict] = field(default_factory=list)

    def grade(self, field_name: str) -> Grade:
        return getattr(self, field_name)

    def grades(self) -> dict[str, Grade]:
        return {name: getattr(self, name) for name in ASSESSMENT_FIELDS}

    def to_wire(self) -> dict:
        wire = {name: getattr(self, name).value for name in ASSESSMENT_FIELDS}
        wire["provenance"] = self.provenance.value
        wire["fired_rules"] = [r.to_wire() for r in self.fired_rules]
        wire["calibration_applied"] = list(self.calibration_applied)
        return wire


def _strictness(field_name: str, grade: Grade) -> int:
    # Higher value = stricter for this field; strict wins priority ties.
    return grade.rank if field_name in _STRICT_HIGH else -grade.rank


def assess(mission: str, conclusion: ActionCode, justification: str,
           domain: str, corpus: GuidelineCorpus) -> Assessment:
    """Grade one output against the domain's guideline rules.

    Defaults to Medium on every field. Fired rules apply per field in
    ascending (priority, strictness) order, so the highest-priority rule has
    the last word and, at equal priority, the stricter effect wins.
    """
    if not corpus.has_domain(domain):
        raise CorpusError(f"no guideline corpus loaded for domain {domain!r}")
    fired = [
        rule for rule in corpus.rules_for(domain)
        if rule.trigger.matches(mission, conclusion, justification)
    ]
    grades = {name: Grade.MEDIUM for name in ASSESSMENT_FIELDS}
    for name in ASSESSMENT_FIELDS:
        relevant = [r for r in fired if r.effect.field == name]
        relevant.sort(key=lambda r: (r.priority, _strictness(name, r.effect.grade)))
        for rule in relevant:
            grades[name] = rule.effect.apply(grades[name])
    fired.sort(key=lambda r: (-r.priority, r.rule_id))
    return Assessment(
        risk_level=grades["risk_level"],
        alignment_score=grades["alignment_score"],
        accuracy_score=grades["accuracy_score"],
        fired_rules=fired,
    )


# ---------------------------------------------------------------------------
# Calibration table
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CalibrationEntry:
    """One learned grade adjustment for a cohort signature.

    Risk adjustments key on the mission signature (domain + mission category):
    the stakes of a mission do not depend on what the model answered.
    Alignment/accuracy adjustments key on the full agnostic signature.
    """

    signature_key: str
    match_key: str
    field: str
    adjusted_grade: Grade
    evidence: dict
    issued_at: str
    kind: str

    def to_wire(self) -> dict:
        return {
            "signature": self.signature_key,
            "match_key": self.match_key,
            "field": self.field,
            "adjusted_grade": self.adjusted_grade.value,
            "evidence": self.evidence,
            "issued_at": self.issued_at,
            "kind": self.kind,
        }


class CalibrationTable:
    """Live grade adjustments; newer entries supersede older per (match, field)."""

    def __init__(self):
        self._live: dict[tuple[str, str], CalibrationEntry] = {}
        self._history: list[CalibrationEntry] = []

    def install(self, entry: CalibrationEntry) -> None:
        self._history.append(entry)
        self._live[(entry.match_key, entry.field)] = entry

    def live_entry(self, match_key: str, field_name: str) -> Optional[CalibrationEntry]:
        return self._live.get((match_key, field_name))

    def live_entries(self) -> list[CalibrationEntry]:
        return sorted(self._live.values(), key=lambda e: (e.match_key, e.field))

    def history(self) -> list[CalibrationEntry]:
        return list(self._history)

    def __len__(self) -> int:
        return len(self._live)


def apply_calibration(assessment: Assessment, match_keys: dict[str, str],
                      table: CalibrationTable) -> Assessment:
    """Overlay live calibration entries onto a rule-based assessment.

    match_keys maps each assessment field to the key the table should be
    probed with (mission-level for risk, full signature for the exposures).
    Fields without a live entry keep their rule-based grade.
    """
    adjusted = Assessment(
        risk_level=assessment.risk_level,
        alignment_score=assessment.alignment_score,
        accuracy_score=assessment.accuracy_score,
        fired_rules=list(assessment.fired_rules),
        provenance=assessment.provenance,
        calibration_applied=list(assessment.calibration_applied),
    )
    for field_name in ASSESSMENT_FIELDS:
        key = match_keys.get(field_name)
        if key is None:
            continue
        entry = table.live_entry(key, field_name)
        if entry is None:
            continue
        setattr(adjusted, field_name, entry.adjusted_grade)
        adjusted.provenance = Provenance.CALIBRATED
        adjusted.calibration_applied.append(entry.to_wire())
    return adjusted
