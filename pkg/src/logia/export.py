"""Training dataset export, agreement reporting and dataset manifests.

Failure records become grade-free training examples: what the model
concluded, what the expert did instead, and how it turned out. Agreement
reports compare records against independent annotations with exact rational
arithmetic, so a 17-of-18 never becomes 94.44000000000001.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from datetime import datetime
from fractions import Fraction
from typing import Callable, Optional

from .grammar import (
    Grade,
    InteractionRecord,
    Override,
    classify_failure,
    format_timestamp,
    parse_timestamp,
)
from .outcomes import outcome_failure

# The full schema of one training example. No assessment grades, no
# reliability, no reviewer identity: conclusions and corrections only.
TRAINING_FIELDS = (
    "record_id",
    "domain",
    "model_id",
    "created_at",
    "mission",
    "conclusion",
    "justification",
    "override",
    "corrective_option",
    "override_reason_tags",
    "failure_class",
    "outcome_metrics",
)

FAILURE_TYPES = ("inaccuracy", "misalignment", "both", "expert-judgment-only", "any")

# Filtering by a single-dimension class includes the records where both
# dimensions failed; "both" alone selects only those.
_CLASS_MATCHES = {
    "any": {"inaccuracy", "misalignment", "both", "expert-judgment-only", "none"},
    "inaccuracy": {"inaccuracy", "both"},
    "misalignment": {"misalignment", "both"},
    "both": {"both"},
    "expert-judgment-only": {"expert-judgment-only"},
}


class ExportError(ValueError):
    pass


def training_record(record: InteractionRecord) -> dict:
    return {
        "record_id": record.id,
        "domain": record.domain,
        "model_id": record.model_id,
        "created_at": format_timestamp(record.created_at),
        "mission": record.mission,
        "conclusion": record.conclusion.raw_text,
        "justification": record.justification,
        "override": record.override.value,
        "corrective_option": (record.corrective_option.raw_text
                              if record.corrective_option else None),
        "override_reason_tags": list(record.override_reason_tags),
        "failure_class": classify_failure(record).value,
        "outcome_metrics": dict(record.outcome.metric_pairs) if record.outcome else {},
    }


@dataclass(frozen=True)
class DatasetFilters:
    failure_type: str = "any"
    date_from: Optional[datetime] = None
    date_to: Optional[datetime] = None
    domain: Optional[str] = None
    max_success_rate: Optional[float] = None

    def to_wire(self) -> dict:
        return {
            "failure_type": self.failure_type,
            "from": format_timestamp(self.date_from) if self.date_from else None,
            "to": format_timestamp(self.date_to) if self.date_to else None,
            "domain": self.domain,
            "max_success_rate": self.max_success_rate,
        }


def parse_filters(raw: dict) -> DatasetFilters:
    failure_type = raw.get("failure_type") or "any"
    if failure_type not in FAILURE_TYPES:
        raise ExportError(f"unknown failure_type {failure_type!r}, "
                          f"expected one of {FAILURE_TYPES}")
    date_from = date_to = None
    try:
        if raw.get("from"):
            date_from = parse_timestamp(raw["from"])
        if raw.get("to"):
            date_to = parse_timestamp(raw["to"])
    except ValueError as exc:
        raise ExportError(str(exc)) from None
    max_success = raw.get("max_success_rate")
    if max_success is not None:
        try:
            max_success = float(max_success)
        except (TypeError, ValueError):
            raise ExportError("max_success_rate must be a number") from None
        if not 0.0 <= max_success <= 1.0:
            raise ExportError("max_success_rate must be within [0, 1]")
    return DatasetFilters(
        failure_type=failure_type,
        date_from=date_from,
        date_to=date_to,
        domain=raw.get("domain") or None,
        max_success_rate=max_success,
    )


def export_training_dataset(
        records: list[InteractionRecord],
        filters: DatasetFilters,
        cohort_success_rate: Callable[[InteractionRecord], Optional[float]],
) -> list[dict]:
    """Failure records matching the filters, in creation order.

    cohort_success_rate maps a record to the success rate of its cohort
    (1 - failure rate), used by the max_success_rate filter to target the
    cohorts where the model does worst.
    """
    rows = []
    wanted = _CLASS_MATCHES[filters.failure_type]
    for record in records:
        if record.override is Override.PENDING:
            continue
        if not outcome_failure(record):
            continue
        if classify_failure(record).value not in wanted:
            continue
        if filters.domain is not None and record.domain != filters.domain:
            continue
        if filters.date_from is not None and record.created_at < filters.date_from:
            continue
        if filters.date_to is not None and record.created_at > filters.date_to:
            continue
        if filters.max_success_rate is not None:
            success = cohort_success_rate(record)
            if success is None or success > filters.max_success_rate:
                continue
        rows.append(training_record(record))
    return rows


def dataset_manifest(rows: list[dict], filters: DatasetFilters,
                     generated_at: datetime) -> dict:
    payload = "".join(
        json.dumps(row, sort_keys=True, separators=(",", ":"), ensure_ascii=False) + "\n"
        for row in rows
    )
    return {
        "generated_at": format_timestamp(generated_at),
        "filters": filters.to_wire(),
        "count": len(rows),
        "schema_fields": list(TRAINING_FIELDS),
        "sha256": hashlib.sha256(payload.encode("utf-8")).hexdigest(),
    }


def write_dataset(rows: list[dict], filters: DatasetFilters,
                  out_path: str, generated_at: datetime) -> dict:
    """Write NDJSON plus a sibling .manifest.json; returns the manifest."""
    manifest = dataset_manifest(rows, filters, generated_at)
    with open(out_path, "w", encoding="utf-8") as handle:
        for row in rows:
            handle.write(json.dumps(row, sort_keys=True, separators=(",", ":"),
                                    ensure_ascii=False) + "\n")
    manifest_path = out_path + ".manifest.json"
    with open(manifest_path, "w", encoding="utf-8") as handle:
        json.dump(manifest, handle, indent=2, sort_keys=True)
        handle.write("\n")
    return manifest


# ---------------------------------------------------------------------------
# Agreement reporting
# ---------------------------------------------------------------------------

SEMANTIC_FIELDS = ("mission", "conclusion", "justification")
MEASUREMENT_FIELDS = ("risk_level", "alignment_score", "accuracy_score")
AGREEMENT_FIELDS = SEMANTIC_FIELDS + MEASUREMENT_FIELDS


class AgreementError(ValueError):
    pass


def _percent_of(frac: Fraction) -> int:
    # Exact half-up rounding of a nonnegative rational percent.
    return int(frac * 100 + Fraction(1, 2))


def _field_block(matches: int, total: int) -> dict:
    rate = Fraction(matches, total) if total else Fraction(0)
    return {
        "matches": matches,
        "total": total,
        "rate": f"{matches}/{total}",
        "percent": f"{_percent_of(rate)}%" if total else None,
    }


def _annotation_agrees(field_name: str, record_wire: dict, note: dict) -> bool:
    if "agrees" in note:
        return bool(note["agrees"])
    if field_name in MEASUREMENT_FIELDS and "grade" in note:
        recorded = record_wire.get(field_name)
        return Grade.parse(str(note["grade"])) is Grade.parse(str(recorded))
    raise AgreementError(
        f"annotation for {field_name!r} needs either 'agrees' or 'grade'"
    )


def agreement_report(records_wire: list[dict],
                     annotations: dict[str, dict] | list[dict]) -> dict:
    """Percent agreement between records and independent annotations.

    Annotations come either keyed by record id or as a list of objects each
    carrying a record_id. Every record must carry a complete annotation
    covering all six fields; a partial annotation is a field count mismatch,
    not a disagreement.
    """
    if not records_wire:
        raise AgreementError("agreement report needs at least one record")
    if isinstance(annotations, list):
        indexed: dict[str, dict] = {}
        for note in annotations:
            note_id = note.get("record_id") or note.get("id")
            if not note_id:
                raise AgreementError("annotation without a record_id")
            indexed[note_id] = note
        annotations = indexed
    per_field = {name: [0, 0] for name in AGREEMENT_FIELDS}
    for record_wire in records_wire:
        record_id = record_wire.get("id") or record_wire.get("record_id")
        if not record_id:
            raise AgreementError("record without an id in agreement input")
        note = annotations.get(record_id)
        if note is None:
            raise AgreementError(f"no annotation for record {record_id}")
        missing = [name for name in AGREEMENT_FIELDS if name not in note]
        if missing:
            raise AgreementError(
                f"annotation for {record_id} is missing fields: {', '.join(missing)}"
            )
        for name in AGREEMENT_FIELDS:
            agreed = _annotation_agrees(name, record_wire, note[name])
            per_field[name][0] += 1 if agreed else 0
            per_field[name][1] += 1

    def subtotal(names) -> tuple[int, int]:
        return (sum(per_field[n][0] for n in names),
                sum(per_field[n][1] for n in names))

    semantic = subtotal(SEMANTIC_FIELDS)
    measurement = subtotal(MEASUREMENT_FIELDS)
    overall = (semantic[0] + measurement[0], semantic[1] + measurement[1])
    return {
        "fields": {name: _field_block(m, t) for name, (m, t) in per_field.items()},
        "semantic": _field_block(*semantic),
        "measurement": _field_block(*measurement),
        "overall": _field_block(*overall),
        "records": len(records_wire),
    }
