"""Event envelopes and the append-only journal."""

import json
from datetime import datetime, timezone

import pytest

from conftest import BASE_TIME
from logia.capture import (
    EVENT_KINDS,
    EventError,
    canonical_json,
    detect_override,
    parse_event,
    payload_hash,
)
from logia.grammar import Override, canonicalize_action
from logia.journal import Journal, JournalCorruptError, open_journal, read_entries


class TestEnvelope:
    def wire(self, **extra):
        body = {
            "interaction_id": "int-1",
            "kind": "ai_output",
            "occurred_at": "2025-07-01T09:00:00Z",
            "payload": {"mission": "m"},
        }
        body.update(extra)
        return body

    def test_parse_round_trip(self):
        event = parse_event(self.wire())
        assert event.interaction_id == "int-1"
        assert event.kind == "ai_output"
        assert event.occurred_at == datetime(2025, 7, 1, 9, tzinfo=timezone.utc)
        assert event.to_wire() == self.wire()

    def test_missing_id_rejected(self):
        with pytest.raises(EventError, match="interaction_id"):
            parse_event(self.wire(interaction_id="  "))

    def test_unknown_kind_rejected(self):
        with pytest.raises(EventError, match="unknown event kind"):
            parse_event(self.wire(kind="telemetry"))
        assert set(EVENT_KINDS) == {"ai_output", "ai_output_revision", "expert_action"}

    def test_payload_must_be_object(self):
        with pytest.raises(EventError, match="payload"):
            parse_event(self.wire(payload="text"))

    def test_missing_timestamp_stamped_on_arrival(self):
        raw = self.wire()
        del raw["occurred_at"]
        event = parse_event(raw, now=BASE_TIME)
        assert event.occurred_at == BASE_TIME

    def test_bad_timestamp_rejected(self):
        with pytest.raises(EventError):
            parse_event(self.wire(occurred_at="yesterday"))

    def test_dedupe_key_tracks_payload(self):
        first = parse_event(self.wire())
        repeat = parse_event(self.wire())
        changed = parse_event(self.wire(payload={"mission": "other"}))
        assert first.dedupe_key == repeat.dedupe_key
        assert first.dedupe_key != changed.dedupe_key

    def test_digest_depends_on_kind(self):
        assert payload_hash("ai_output", {"a": 1}) != payload_hash(
            "ai_output_revision", {"a": 1})

    def test_canonical_json_is_sorted_and_compact(self):
        assert canonical_json({"b": 1, "a": [2, {"z": 0, "y": 1}]}) == \
            '{"a":[2,{"y":1,"z":0}],"b":1}'


class TestOverrideDetection:
    def test_same_canonical_form_is_acceptance(self):
        conclusion = canonicalize_action("Pawn to  E5.")
        action = canonicalize_action("pawn to e5")
        assert detect_override(conclusion, action) is Override.NO

    def test_different_action_is_override(self):
        conclusion = canonicalize_action("approve")
        action = canonicalize_action("deny")
        assert detect_override(conclusion, action) is Override.YES


class TestJournal:
    def test_append_read_round_trip(self, tmp_path):
        path = str(tmp_path / "j.ndjson")
        with Journal(path, fsync=False) as journal:
            assert journal.append({"type": "a"}) == 1
            assert journal.append({"type": "b", "value": 2}) == 2
        entries = list(read_entries(path))
        assert [e["seq"] for e in entries] == [1, 2]
        assert entries[1]["value"] == 2

    def test_reopen_resumes_sequence(self, tmp_path):
        path = str(tmp_path / "j.ndjson")
        journal, _ = open_journal(path, fsync=False)
        journal.append({"type": "a"})
        journal.close()
        journal, entries = open_journal(path, fsync=False)
        assert len(entries) == 1
        assert journal.append({"type": "b"}) == 2
        journal.close()
        assert [e["seq"] for e in read_entries(path)] == [1, 2]

    def test_sequence_gap_detected(self, tmp_path):
        path = tmp_path / "j.ndjson"
        path.write_text('{"seq":1,"type":"a"}\n{"seq":3,"type":"b"}\n')
        with pytest.raises(JournalCorruptError, match="sequence gap"):
            list(read_entries(str(path)))

    def test_unparseable_line_reports_position(self, tmp_path):
        path = tmp_path / "j.ndjson"
        first = '{"seq":1,"type":"a"}\n'
        path.write_text(first + "{broken\n")
        with pytest.raises(JournalCorruptError) as info:
            list(read_entries(str(path)))
        assert info.value.line_number == 2
        assert info.value.byte_offset == len(first.encode())
        assert "unparseable" in info.value.reason

    def test_non_object_entry_rejected(self, tmp_path):
        path = tmp_path / "j.ndjson"
        path.write_text('[1,2]\n')
        with pytest.raises(JournalCorruptError, match="not an object"):
            list(read_entries(str(path)))

    def test_truncated_tail_detected(self, tmp_path):
        path = tmp_path / "j.ndjson"
        path.write_text('{"seq":1,"type":"a"}\n{"seq":2,"ty')
        with pytest.raises(JournalCorruptError) as info:
            list(read_entries(str(path)))
        assert info.value.line_number == 2

    def test_corrupt_journal_never_appended(self, tmp_path):
        path = tmp_path / "j.ndjson"
        original = '{"seq":1,"type":"a"}\n{broken\n'
        path.write_text(original)
        with pytest.raises(JournalCorruptError):
            open_journal(str(path), fsync=False)
        assert path.read_text() == original

    def test_entries_written_as_single_lines(self, tmp_path):
        path = str(tmp_path / "j.ndjson")
        with Journal(path, fsync=False) as journal:
            journal.append({"text": "line one\nline two"})
        raw = open(path, "rb").read()
        assert raw.count(b"\n") == 1
        entry = json.loads(raw)
        assert entry["text"] == "line one\nline two"
