"""Packaged clinical vignette fixtures: assessment replay and annotation agreement."""

from datetime import timedelta

import pytest

from conftest import make_engine
from logia.assessor import assess
from logia.export import agreement_report
from logia.fixtures import load_json
from logia.grammar import FailureClass, canonicalize_action, classify_failure, parse_timestamp

DOMAIN = "ophthalmology"

EXPECTED_FIRED = {
    "case-1": {"oph-risk-surface-injury", "oph-align-abrasion-firstline",
               "oph-acc-keratitis-ruleout"},
    "case-2": {"oph-align-lpi-for-pac", "oph-acc-pac-classification"},
    "case-3": {"oph-risk-pediatric-neuro", "oph-align-palsy-imaging",
               "oph-acc-palsy-pattern"},
}


@pytest.fixture(scope="module")
def cases():
    return load_json("feasibility", "cases.json")


@pytest.fixture(scope="module")
def annotations():
    return load_json("feasibility", "annotations.json")


class TestRuleReplay:
    def test_recorded_grades_reproduced(self, cases, corpus, registry):
        config = registry.get(DOMAIN)
        for case in cases:
            conclusion = canonicalize_action(case["conclusion"], config.vocabulary)
            assessment = assess(case["mission"], conclusion,
                                case["justification"], DOMAIN, corpus)
            assert assessment.risk_level.value == case["risk_level"], case["id"]
            assert assessment.alignment_score.value == case["alignment_score"], case["id"]
            assert assessment.accuracy_score.value == case["accuracy_score"], case["id"]

    def test_fired_rules(self, cases, corpus, registry):
        config = registry.get(DOMAIN)
        for case in cases:
            conclusion = canonicalize_action(case["conclusion"], config.vocabulary)
            assessment = assess(case["mission"], conclusion,
                                case["justification"], DOMAIN, corpus)
            fired = {rule.rule_id for rule in assessment.fired_rules}
            assert fired == EXPECTED_FIRED[case["id"]]
            for rule in assessment.fired_rules:
                assert rule.citation

    def test_case2_risk_is_the_default(self, cases, corpus, registry):
        # No risk rule covers the angle-closure vignette; its Medium comes
        # from the default grade, not a rule.
        case = next(c for c in cases if c["id"] == "case-2")
        config = registry.get(DOMAIN)
        conclusion = canonicalize_action(case["conclusion"], config.vocabulary)
        assessment = assess(case["mission"], conclusion,
                            case["justification"], DOMAIN, corpus)
        assert not any(r.effect.field == "risk_level" for r in assessment.fired_rules)


class TestEngineReplay:
    def test_cases_flow_end_to_end(self, cases):
        engine = make_engine()
        for case in cases:
            engine.submit_event({
                "interaction_id": case["id"],
                "kind": "ai_output",
                "occurred_at": case["created_at"],
                "payload": {
                    "mission": case["mission"],
                    "conclusion": case["conclusion"],
                    "justification": case["justification"],
                    "model_id": case["model_id"],
                    "domain": case["domain"],
                },
            })
            acted = parse_timestamp(case["created_at"]) + timedelta(minutes=5)
            action = (case["corrective_option"] if case["override"] == "yes"
                      else case["conclusion"])
            engine.submit_event({
                "interaction_id": case["id"],
                "kind": "expert_action",
                "occurred_at": acted.strftime("%Y-%m-%dT%H:%M:%SZ"),
                "payload": {
                    "action": action,
                    "reason_tags": case.get("override_reason_tags", []),
                },
            })
        for case in cases:
            record = engine.records[case["id"]]
            assert record.override.value == case["override"], case["id"]
            assert record.risk_level.value == case["risk_level"]
            assert record.alignment_score.value == case["alignment_score"]
            assert record.accuracy_score.value == case["accuracy_score"]
        overridden = engine.records["case-2"]
        assert overridden.corrective_option is not None
        assert classify_failure(overridden) is FailureClass.MISALIGNMENT
        assert classify_failure(engine.records["case-1"]) is FailureClass.NONE
        assert classify_failure(engine.records["case-3"]) is FailureClass.NONE


class TestAgreement:
    def test_published_table(self, cases, annotations):
        report = agreement_report(cases, annotations)
        assert report["records"] == 3
        assert report["semantic"] == {
            "matches": 9, "total": 9, "rate": "9/9", "percent": "100%"}
        assert report["fields"]["risk_level"]["rate"] == "3/3"
        assert report["fields"]["accuracy_score"]["rate"] == "3/3"
        assert report["fields"]["alignment_score"] == {
            "matches": 2, "total": 3, "rate": "2/3", "percent": "67%"}
        assert report["measurement"] == {
            "matches": 8, "total": 9, "rate": "8/9", "percent": "89%"}
        assert report["overall"] == {
            "matches": 17, "total": 18, "rate": "17/18", "percent": "94%"}

    def test_list_and_dict_shapes_agree(self, cases, annotations):
        keyed = {note["record_id"]: note for note in annotations}
        assert agreement_report(cases, keyed) == agreement_report(cases, annotations)
