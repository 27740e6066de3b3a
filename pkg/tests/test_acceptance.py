"""End-to-end acceptance checks, one per shipped guarantee.

Each test prints a single [PASS]/[FAIL] line (visible under pytest -s) and
enforces the stated tolerance or runtime budget. These deliberately re-derive
expectations through independent routes: hand-counted tallies, brute-force
scans, fixed-seed populations with planted ground truth, and a crash-restart
replay.
"""

import json
import os
import random
import subprocess
import sys
import threading
import time
from contextlib import contextmanager
from datetime import timedelta

from conftest import BASE_TIME, build_record, make_engine, outcome_state
from test_export import random_records as random_export_records
from test_export import reference_export
from test_tracelayer import apply_random_outcomes, random_cohort

from logia.assessor import assess
from logia.client import Client
from logia.export import DatasetFilters, agreement_report, export_training_dataset
from logia.fixtures import load_json
from logia.grammar import (
    GRADES,
    FailureClass,
    Grade,
    Override,
    canonicalize_action,
    classify_failure,
    grade_min,
    is_failure,
)
from logia.outcomes import outcome_failure, validate_assessments
from logia.service import LogiaServer, ServiceConfig, build_engine, in_memory_engine
from logia.simharness import EngineSink, default_spec, run_simulation
from logia.tracelayer import (
    CohortSignature,
    CohortStats,
    Thresholds,
    add_finalized,
    recount,
    reliability,
)
from logia.visibility import (
    MODES,
    PolicyError,
    VisibilityPolicy,
    default_mode,
    intrusiveness,
)

SIM_SEED = 20250701


@contextmanager
def criterion(name):
    try:
        yield
    except BaseException:
        print(f"[FAIL] {name}")
        raise
    print(f"[PASS] {name}")


@contextmanager
def budget(name, seconds):
    start = time.perf_counter()
    yield
    elapsed = time.perf_counter() - start
    assert elapsed < seconds, f"{name} took {elapsed:.2f}s, budget {seconds}s"


@contextmanager
def live_server():
    config = ServiceConfig(listen="127.0.0.1:0", data_dir=None)
    server = LogiaServer(config, build_engine(config))
    threading.Thread(target=server.serve_forever, daemon=True).start()
    try:
        host, port = server.server_address[:2]
        yield Client(f"http://{host}:{port}", timeout=10)
    finally:
        server.shutdown()
        server.server_close()


def test_feasibility_agreement_table():
    with criterion("feasibility agreement table (17/18 overall, < 1 s)"):
        with budget("feasibility table", 1.0):
            cases = load_json("feasibility", "cases.json")
            annotations = load_json("feasibility", "annotations.json")
            report = agreement_report(cases, annotations)
        assert report["semantic"]["rate"] == "9/9"
        assert report["semantic"]["percent"] == "100%"
        assert report["fields"]["risk_level"]["rate"] == "3/3"
        assert report["fields"]["accuracy_score"]["rate"] == "3/3"
        assert report["fields"]["alignment_score"]["rate"] == "2/3"
        assert report["fields"]["alignment_score"]["percent"] == "67%"
        assert report["measurement"]["rate"] == "8/9"
        assert report["measurement"]["percent"] == "89%"
        assert report["overall"]["rate"] == "17/18"
        assert report["overall"]["percent"] == "94%"


def chess_output(record_id, mission, at):
    return {
        "interaction_id": record_id,
        "kind": "ai_output",
        "occurred_at": at,
        "payload": {"mission": mission, "conclusion": "Move the pawn",
                    "justification": "", "model_id": "gpt-2", "domain": "chess"},
    }


def test_chess_pipeline_over_http():
    with criterion("chess pipeline over HTTP (165 priors at 85%, < 1 s)"):
        with live_server() as client:
            with budget("chess pipeline", 1.0):
                for i in range(165):
                    client.submit_event(chess_output(
                        f"prior-{i:04d}",
                        f"Determine the best move for White, game {i}",
                        "2025-07-01T00:00:00Z"))
                    action = "Rxe3+" if i < 140 else "Move the pawn"
                    client.submit_event({
                        "interaction_id": f"prior-{i:04d}",
                        "kind": "expert_action",
                        "occurred_at": "2025-07-01T00:05:00Z",
                        "payload": {"action": action},
                    })
                client.submit_event(chess_output(
                    "chess-0001", "Determine the best move for White",
                    "2025-07-01T01:00:00Z"))
                view = client.assessment("chess-0001")
                act_ack = client.submit_event({
                    "interaction_id": "chess-0001",
                    "kind": "expert_action",
                    "occurred_at": "2025-07-01T01:05:00Z",
                    "payload": {"action": "Rxe3+",
                                "reason_tags": ["GUIDELINE-VIOLATION"]},
                })
                after = client.assessment("chess-0001")
            assert view["assessment"]["alignment_score"] == "low"
            assert view["assessment"]["accuracy_score"] == "low"
            assert view["reliability"]["grade"] == "low"
            assert view["reliability"]["basis"] == "population"
            text = view["reliability"]["semantic_text"]
            assert "165" in text and "85%" in text
            assert view["directive"]["mode"] == "full_disclosure"
            assert act_ack == {"record_id": "chess-0001", "status": "recorded"}
            assert after["status"] == "resolved"
            audit = client.audit("chess-0001")
            decision = next(e for e in audit["entries"] if e["type"] == "decision")
            assert decision["override"] == "yes"
            assert decision["action"]["canonical"] == "rxe3+"


def test_worked_example_semantics(registry, corpus):
    with criterion("worked examples: mortgage provisional-then-Low, triage text verbatim"):
        thresholds = Thresholds()

        # Mortgage: rule review grades land Medium alignment, High accuracy;
        # with no cohort the reliability is the provisional minimum.
        config = registry.get("mortgage-underwriting")
        mission = "Review mortgage application for a self-employed applicant"
        conclusion = canonicalize_action("Reject the application", config.vocabulary)
        justification = ("Applicant credit score 550 falls below the automated "
                         "cutoff for this product")
        initial = assess(mission, conclusion, justification,
                         "mortgage-underwriting", corpus)
        assert initial.alignment_score is Grade.MEDIUM
        assert initial.accuracy_score is Grade.HIGH
        subject = build_record(
            0, domain="mortgage-underwriting", mission=mission,
            conclusion="Reject the application", justification=justification,
            alignment=Grade.MEDIUM, accuracy=Grade.HIGH,
            vocabulary=config.vocabulary)
        provisional = reliability(subject, None, None, thresholds, config)
        assert provisional.basis == "provisional"
        assert provisional.grade is Grade.MEDIUM
        assert provisional.grade is grade_min(Grade.MEDIUM, Grade.HIGH)

        # The same signature after 340 finalized records at 68% override with
        # tracked default rates grades Low, and the explanation carries the
        # cohort size and the metric comparison.
        sig = CohortSignature("mortgage-underwriting", "application-review",
                              "reject", Grade.MEDIUM, Grade.HIGH)
        records = []
        for i in range(340):
            overridden = i < 231
            records.append(build_record(
                i, domain="mortgage-underwriting", mission=mission,
                conclusion="Reject the application", justification=justification,
                alignment=Grade.MEDIUM, accuracy=Grade.HIGH,
                override=Override.YES if overridden else Override.NO,
                corrective="Approve the application" if overridden else None,
                outcome=(outcome_state("benign", metrics={"default": 0.028})
                         if overridden else None),
                vocabulary=config.vocabulary))
        stats = recount(sig, records, config.escalation_categories)
        assert stats.n == 340
        graded = reliability(subject, None, stats, thresholds, config)
        assert graded.basis == "population"
        assert graded.grade is Grade.LOW
        assert "340 similar cases" in graded.semantic_text
        assert "2.8% vs 3.6%" in graded.semantic_text
        assert graded.semantic_text == (
            "Based on 340 similar cases: experts overrode this 68% of the time "
            "due to rejections that discount documented recovery patterns, "
            "instead choosing to approve the application. "
            "Outcome tracking: default rate 2.8% vs 3.6% portfolio baseline."
        )

        # Triage: 3,000-record cohort, 71% overridden toward primary care,
        # 85% of tracked override outcomes resolved without a specialist.
        config = registry.get("triage")
        sig = CohortSignature("triage", "routine-triage", "refer",
                              Grade.LOW, Grade.HIGH)
        records = []
        for i in range(3000):
            overridden = i < 2130
            outcome = None
            if overridden and i < 2000:
                outcome = outcome_state("benign" if i < 1700 else "adverse")
            records.append(build_record(
                i, domain="triage",
                mission="Triage this walk-in presentation, no red flags",
                conclusion="Refer to specialist",
                justification="symptoms recorded accurately",
                alignment=Grade.LOW, accuracy=Grade.HIGH,
                override=Override.YES if overridden else Override.NO,
                corrective=("Redirect patients to primary care"
                            if overridden else None),
                outcome=outcome,
                vocabulary=config.vocabulary))
        stats = recount(sig, records, config.escalation_categories)
        triage_subject = records[-1]
        graded = reliability(triage_subject, None, stats, thresholds, config)
        assert graded.grade is Grade.LOW
        assert graded.semantic_text == (
            "Based on 3,000 similar cases: experts overrode this 71% of the "
            "time due to violations of triage protocols, instead choosing to "
            "redirect patients to primary care. Outcome tracking: Of those "
            "patients, 85% of cases resolved without specialist involvement."
        )


def test_provisional_min_rule_exhaustive(registry):
    with criterion("provisional reliability = min(alignment, accuracy), all 9 pairs, < 1 s"):
        with budget("min rule", 1.0):
            config = registry.get("sim")
            thresholds = Thresholds()
            for alignment in GRADES:
                for accuracy in GRADES:
                    record = build_record(1, alignment=alignment, accuracy=accuracy)
                    assessment = reliability(record, None, None, thresholds, config)
                    assert assessment.basis == "provisional"
                    assert assessment.grade is grade_min(alignment, accuracy)
            rng = random.Random(90125)
            for i in range(200):
                alignment = rng.choice(GRADES)
                accuracy = rng.choice(GRADES)
                thin = CohortStats(signature=CohortSignature(
                    "sim", "beta-query", "other", alignment, accuracy))
                thin.n = rng.randint(0, thresholds.n_min - 1)
                record = build_record(i, alignment=alignment, accuracy=accuracy)
                assessment = reliability(record, thin, thin, thresholds, config)
                assert assessment.grade is grade_min(alignment, accuracy)


def test_failure_definition_equivalence(registry):
    with criterion("failure routes agree on 10,000 random records; validation channels partition"):
        rng = random.Random(40991)
        for i in range(10000):
            override = rng.choice([Override.NO, Override.YES])
            state = None
            if rng.random() < 0.7:
                state = outcome_state(
                    empirical=rng.choice(["unknown", "adverse", "benign"]),
                    procedural=rng.choice(["unknown", "violation", "clean"]))
            record = build_record(
                i, override=override,
                corrective="Alternative" if override is Override.YES else None,
                alignment=rng.choice(list(Grade)), accuracy=rng.choice(list(Grade)),
                reason_tags=rng.sample(
                    ["FACT-ERR", "GUIDELINE-VIOLATION", "OTHER"], rng.randint(0, 3)),
                outcome=state)
            failed = outcome_failure(record)
            assert failed == is_failure(record)
            assert failed == (classify_failure(record) is not FailureClass.NONE)

        # Channel partition: alignment judged only by procedural outcomes of
        # accepted records, accuracy only by empirical outcomes of accepted
        # records, risk only by empirical outcomes of non-escalated actions.
        config = registry.get("sim")
        escalations = config.escalation_categories
        records = []
        for i in range(600):
            override = rng.choice([Override.NO, Override.YES])
            state = None
            if rng.random() < 0.8:
                state = outcome_state(
                    empirical=rng.choice(["unknown", "adverse", "benign"]),
                    procedural=rng.choice(["unknown", "violation", "clean"]))
            records.append(build_record(
                i, override=override,
                conclusion=rng.choice(("Apply standard plan", "Escalate to board")),
                corrective=(rng.choice(("Apply alternative plan",
                                        "Escalate for senior review"))
                            if override is Override.YES else None),
                risk=rng.choice(list(Grade)),
                outcome=state, vocabulary=config.vocabulary))
        sig = CohortSignature("sim", "beta-query", "other", Grade.LOW, Grade.LOW)
        report = validate_assessments(sig, records, Thresholds(), escalations)

        def final_category(record):
            if record.override is Override.YES and record.corrective_option:
                return record.corrective_option.category
            return record.conclusion.category

        accepted = [r for r in records if r.override is Override.NO and r.outcome]
        expected_align = {r.id for r in accepted
                          if r.outcome.procedural.value != "unknown"}
        expected_align_confirm = {r.id for r in accepted
                                  if r.outcome.procedural.value == "violation"}
        assert set(report.alignment.confirm_ids) == expected_align_confirm
        assert set(report.alignment.confirm_ids + report.alignment.contradict_ids) \
            == expected_align
        expected_acc = {r.id for r in accepted
                        if r.outcome.empirical.value != "unknown"}
        expected_acc_confirm = {r.id for r in accepted
                                if r.outcome.empirical.value == "adverse"}
        assert set(report.accuracy.confirm_ids) == expected_acc_confirm
        assert set(report.accuracy.confirm_ids + report.accuracy.contradict_ids) \
            == expected_acc
        with_empirical = [r for r in records if r.outcome
                          and r.outcome.empirical.value != "unknown"
                          and final_category(r) not in escalations]
        for claim, judged in zip((Grade.LOW, Grade.HIGH), report.risk):
            eligible = {r.id for r in with_empirical if r.risk_level is claim}
            confirm_when = "benign" if claim is Grade.LOW else "adverse"
            expected_confirm = {r.id for r in with_empirical
                                if r.risk_level is claim
                                and r.outcome.empirical.value == confirm_when}
            assert set(judged.confirm_ids) == expected_confirm
            assert set(judged.confirm_ids + judged.contradict_ids) == eligible


CRASH_FEEDER = """
import json, os, sys
from logia.service import ServiceConfig, build_engine

config = ServiceConfig(data_dir=sys.argv[1], fsync=True)
engine = build_engine(config)
for i in range(40):
    rid = f"crash-{i:04d}"
    engine.submit_event({
        "interaction_id": rid, "kind": "ai_output",
        "occurred_at": "2025-07-01T00:%02d:00Z" % (i % 60),
        "payload": {"mission": f"Beta-query: subject {i}",
                    "conclusion": "Apply standard plan",
                    "justification": "beta-signal present",
                    "model_id": "m-1", "domain": "sim"}})
    engine.submit_event({
        "interaction_id": rid, "kind": "expert_action",
        "occurred_at": "2025-07-01T01:%02d:00Z" % (i % 60),
        "payload": {"action": "Apply alternative plan" if i % 3 else
                    "Apply standard plan"}})
with open(sys.argv[2], "w") as handle:
    json.dump({"hash": engine.state_hash(), "seq": engine.journal_seq}, handle)
    handle.flush()
    os.fsync(handle.fileno())
os._exit(1)  # crash without closing the journal
"""


def test_oracle_equivalence(registry, tmp_path):
    with criterion("oracles: incremental=recount x100, export=brute force x50, crash replay"):
        rng = random.Random(61803)
        escalations = registry.get("sim").escalation_categories
        sig = CohortSignature("sim", "beta-query", "other",
                              Grade.MEDIUM, Grade.MEDIUM)
        for round_no in range(100):
            records = random_cohort(rng, registry, rng.randint(3, 50))
            live = CohortStats(signature=sig)
            for record in records:
                add_finalized(live, record, escalations)
            apply_random_outcomes(rng, records, live, escalations)
            batch = recount(sig, records, escalations)
            assert live.to_wire() == batch.to_wire(), round_no
            assert live.failure_class_counts == batch.failure_class_counts
            assert live.corrective_category_counts == batch.corrective_category_counts
            assert live.nonescalated_known == batch.nonescalated_known
            assert live.nonescalated_adverse == batch.nonescalated_adverse

        types = ["any", "inaccuracy", "misalignment", "both", "expert-judgment-only"]
        for round_no in range(50):
            records = random_export_records(rng, rng.randint(0, 80))
            rates = {r.id: rng.choice([None, rng.random()]) for r in records}
            filters = DatasetFilters(
                failure_type=rng.choice(types),
                domain=rng.choice([None, "sim", "chess"]),
                date_from=rng.choice(
                    [None, BASE_TIME + timedelta(hours=rng.randint(0, 400))]),
                date_to=rng.choice(
                    [None, BASE_TIME + timedelta(hours=rng.randint(0, 400))]),
                max_success_rate=rng.choice([None, rng.random()]),
            )
            got = [row["record_id"] for row in export_training_dataset(
                records, filters, lambda r: rates[r.id])]
            assert got == reference_export(records, filters,
                                           lambda r: rates[r.id]), round_no

        data_dir = tmp_path / "crash-run"
        sidecar = tmp_path / "at-crash.json"
        feeder = tmp_path / "feeder.py"
        feeder.write_text(CRASH_FEEDER)
        proc = subprocess.run(
            [sys.executable, str(feeder), str(data_dir), str(sidecar)],
            capture_output=True, text=True)
        assert proc.returncode == 1, proc.stderr
        at_crash = json.loads(sidecar.read_text())
        reborn = build_engine(ServiceConfig(data_dir=str(data_dir), fsync=True))
        try:
            assert reborn.state_hash() == at_crash["hash"]
            assert reborn.journal_seq == at_crash["seq"]
            assert len(reborn.records) == 40
        finally:
            reborn.close()


def test_calibration_dynamics_planted_population():
    with criterion("planted population: Low/Medium/High recovered, both pattern updates, < 60 s"):
        with budget("planted population", 60.0):
            report = run_simulation(default_spec(cohort_size=1000), SIM_SEED,
                                    EngineSink(in_memory_engine()))
        assert report["pass"] is True
        assigned = {name: c["assigned_grade"] for name, c in report["cohorts"].items()}
        assert assigned["alpha"] == "low"      # true failure 0.75
        assert assigned["beta"] == "medium"    # true failure 0.40
        assert assigned["gamma"] == "high"     # true failure 0.05
        assert report["monotonic_by_grade"] is True
        rates = report["grade_failure_rates"]
        assert rates["low"]["rate"] > rates["medium"]["rate"] > rates["high"]["rate"]
        assert report["cohorts"]["delta"]["planted_updates"]["risk-recal"] is True
        assert report["cohorts"]["epsilon"]["planted_updates"][
            "outcome-override-of-consensus"] is True
        assert report["cohorts"]["epsilon"]["forced_low"] is True


def test_visibility_matrix_and_monotone_escalations():
    with criterion("visibility matrix: 9 default cells, 1,000 escalation-only policies stay monotone"):
        expected = {
            ("low", "low"): "full_disclosure",
            ("low", "medium"): "full_disclosure",
            ("low", "high"): "full_disclosure",
            ("medium", "low"): "notify",
            ("medium", "medium"): "notify",
            ("medium", "high"): "notify",
            ("high", "low"): "silent_on_demand",
            ("high", "medium"): "silent_on_demand",
            ("high", "high"): "notify",
        }
        for (rel, risk), mode in expected.items():
            assert default_mode(Grade(rel), Grade(risk)) == mode, (rel, risk)

        rng = random.Random(8128)
        for _ in range(1000):
            raw = {"matrix": {g.value: {} for g in GRADES}}
            for risk in GRADES:
                draws = sorted(
                    (rng.randint(intrusiveness(default_mode(rel, risk)),
                                 len(MODES) - 1)
                     for rel in (Grade.LOW, Grade.MEDIUM, Grade.HIGH)),
                    reverse=True)
                for rel, level in zip((Grade.LOW, Grade.MEDIUM, Grade.HIGH), draws):
                    raw["matrix"][rel.value][risk.value] = MODES[level]
            try:
                policy = VisibilityPolicy.from_dict(raw)
            except PolicyError as exc:
                raise AssertionError(f"valid-by-construction policy rejected: {exc}")
            for risk in GRADES:
                column = [intrusiveness(policy.mode(rel, risk))
                          for rel in (Grade.LOW, Grade.MEDIUM, Grade.HIGH)]
                assert column[0] >= column[1] >= column[2]
                for rel in GRADES:
                    assert intrusiveness(policy.mode(rel, risk)) >= \
                        intrusiveness(default_mode(rel, risk))


def test_observer_effect_write_path():
    with criterion("expert-action write path never returns grades or reliability"):
        forbidden = ("grade", "risk", "alignment", "accuracy", "reliability",
                     "semantic", "directive", "visibility")
        with live_server() as client:
            acks = [client.submit_event(chess_output(
                "obs-0001", "Determine the best move for White",
                "2025-07-01T00:00:00Z"))]
            acks.append(client.submit_event({
                "interaction_id": "obs-0001", "kind": "ai_output_revision",
                "occurred_at": "2025-07-01T00:01:00Z",
                "payload": {"mission": "Determine the best move for White",
                            "conclusion": "Move the pawn forward",
                            "justification": "updated engine line"}}))
            acks.append(client.submit_event({
                "interaction_id": "obs-0001", "kind": "expert_action",
                "occurred_at": "2025-07-01T00:05:00Z",
                "payload": {"action": "Rxe3+"}}))
            acks.append(client.submit_outcome({
                "record_id": "obs-0001", "empirical": "benign",
                "observed_at": "2025-07-01T02:00:00Z"}))
        assert set(acks[0]) == {"record_id", "status"}
        assert set(acks[1]) == {"record_id", "status", "revision"}
        assert set(acks[2]) == {"record_id", "status"}
        assert set(acks[3]) == {"record_id", "status"}
        for ack in acks:
            serialized = json.dumps(ack).lower()
            for token in forbidden:
                assert token not in serialized, (token, ack)
