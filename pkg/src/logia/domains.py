"""Institution-supplied domain configuration.

Each domain ships a taxonomy: mission categories (keyword rules), an action
vocabulary, which action categories count as escalation, phrase fragments for
rendered explanations, outcome metric definitions, and the adversity mapping
from outcome detail tags to empirical/procedural signals.

Configuration is plain JSON so institutions can author it without touching
code. Loading is strict: unknown grades, malformed categories and missing
fields fail at startup, not at query time.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .grammar import ActionVocabulary, VocabularyEntry, canonical_text

DEFAULT_MISSION_CATEGORY = "general"

# Signals an adversity tag may map to. adverse/benign feed the empirical
# dimension, violation/clean the procedural one.
ADVERSITY_SIGNALS = ("adverse", "benign", "violation", "clean")

DEFAULT_OUTCOME_PHRASES = {
    "resolved": "{rate}% of overridden cases resolved without escalation.",
    "adverse": "{rate}% of accepted cases were followed by adverse outcomes.",
    "metric": "{label} {value}% vs {baseline}% {baseline_label}.",
    "none": "no outcome data yet.",
}

DEFAULT_REASON_PHRASES = {
    "inaccuracy": "factual errors",
    "misalignment": "guideline violations",
    "both": "factual errors and guideline violations",
    "expert-judgment-only": "expert judgment",
}


@dataclass(frozen=True)
class MissionCategoryRule:
    """Assigns a mission category when any keyword occurs in the mission text."""

    category: str
    keywords: tuple[str, ...]


@dataclass(frozen=True)
class MetricSpec:
    """A named numeric outcome observation with its comparison baseline."""

    name: str
    label: str
    baseline: float
    baseline_label: str


@dataclass
class DomainConfig:
    """Everything the analytics need to know about one domain."""

    domain: str
    mission_categories: list[MissionCategoryRule] = field(default_factory=list)
    vocabulary: ActionVocabulary = field(default_factory=ActionVocabulary)
    escalation_categories: set[str] = field(default_factory=set)
    reason_phrases: dict[str, str] = field(default_factory=dict)
    outcome_phrases: dict[str, str] = field(default_factory=dict)
    metrics: dict[str, MetricSpec] = field(default_factory=dict)

    def mission_category(self, mission: str) -> str:
        """Longest matched keyword wins; ties broken by rule order."""
        text = canonical_text(mission)
        best: tuple[int, int] | None = None
        best_category = DEFAULT_MISSION_CATEGORY
        for idx, rule in enumerate(self.mission_categories):
            for kw in rule.keywords:
                if kw in text:
                    key = (len(kw), -idx)
                    if best is None or key > best:
                        best = key
                        best_category = rule.category
        return best_category

    def reason_phrase(self, failure_class: str) -> str:
        return self.reason_phrases.get(failure_class) or DEFAULT_REASON_PHRASES.get(
            failure_class, "expert judgment"
        )

    def outcome_phrase(self, kind: str) -> str:
        return self.outcome_phrases.get(kind) or DEFAULT_OUTCOME_PHRASES[kind]


class DomainRegistry:
    """All configured domains plus the global adversity tag mapping."""

    def __init__(self, domains: dict[str, DomainConfig] | None = None,
                 adversity_tags: dict[str, str] | None = None):
        self.domains = dict(domains or {})
        self.adversity_tags = dict(adversity_tags or {})
        for tag, signal in self.adversity_tags.items():
            if signal not in ADVERSITY_SIGNALS:
                raise ValueError(f"tag {tag!r} maps to unknown signal {signal!r}")

    def get(self, domain: str) -> DomainConfig:
        """Config for a domain; unconfigured domains get permissive defaults."""
        config = self.domains.get(domain)
        if config is None:
            config = DomainConfig(domain=domain)
            self.domains[domain] = config
        return config

    def has(self, domain: str) -> bool:
        return domain in self.domains

    def tag_signals(self, detail_tags: list[str]) -> tuple[Optional[str], Optional[str]]:
        """Derive (empirical, procedural) signals from detail tags.

        When tags conflict within a dimension the harmful signal wins
        (adverse over benign, violation over clean): outcome data must not
        launder a bad result behind a good tag.
        """
        empirical: Optional[str] = None
        procedural: Optional[str] = None
        for tag in detail_tags:
            signal = self.adversity_tags.get(tag)
            if signal in ("adverse", "benign"):
                if empirical != "adverse":
                    empirical = signal
            elif signal in ("violation", "clean"):
                if procedural != "violation":
                    procedural = signal
        return empirical, procedural


def _parse_domain(raw: dict) -> DomainConfig:
    domain = raw.get("domain")
    if not domain:
        raise ValueError("domain config missing 'domain'")
    rules = []
    for item in raw.get("mission_categories", []):
        keywords = tuple(canonical_text(k) for k in item.get("keywords", []))
        if not item.get("category") or not keywords:
            raise ValueError(f"domain {domain}: mission category needs category and keywords")
        rules.append(MissionCategoryRule(category=item["category"], keywords=keywords))
    entries = []
    for item in raw.get("vocabulary", []):
        if not item.get("category"):
            raise ValueError(f"domain {domain}: vocabulary entry needs category")
        entries.append(VocabularyEntry(
            category=item["category"],
            keywords=tuple(canonical_text(k) for k in item.get("keywords", [])),
            patterns=tuple(item.get("patterns", [])),
        ))
    metrics = {}
    for name, item in (raw.get("metrics") or {}).items():
        metrics[name] = MetricSpec(
            name=name,
            label=item.get("label", name),
            baseline=float(item["baseline"]),
            baseline_label=item.get("baseline_label", "baseline"),
        )
    return DomainConfig(
        domain=domain,
        mission_categories=rules,
        vocabulary=ActionVocabulary(entries),
        escalation_categories=set(raw.get("escalation_categories", [])),
        reason_phrases=dict(raw.get("reason_phrases") or {}),
        outcome_phrases=dict(raw.get("outcome_phrases") or {}),
        metrics=metrics,
    )


def load_registry(taxonomy_path: str | Path | None = None,
                  adversity_path: str | Path | None = None) -> DomainRegistry:
    """Load domain taxonomy and adversity mapping files (both optional)."""
    domains: dict[str, DomainConfig] = {}
    if taxonomy_path is not None:
        raw = json.loads(Path(taxonomy_path).read_text())
        for item in raw.get("domains", []):
            config = _parse_domain(item)
            domains[config.domain] = config
    tags: dict[str, str] = {}
    if adversity_path is not None:
        raw = json.loads(Path(adversity_path).read_text())
        tags = dict(raw.get("tags", {}))
    return DomainRegistry(domains=domains, adversity_tags=tags)


def registry_from_dict(raw: dict) -> DomainRegistry:
    """Build a registry from one merged dict (used by fixtures and tests)."""
    domains = {}
    for item in raw.get("domains", []):
        config = _parse_domain(item)
        domains[config.domain] = config
    return DomainRegistry(domains=domains, adversity_tags=dict(raw.get("tags", {})))
