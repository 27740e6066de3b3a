"""HTTP service exposing the engine.

Stdlib http.server is enough here: a threading server with one lock around
the single-writer engine. All request and response bodies are JSON. Errors
come back as {"error": {"code", "message"}} with conventional status codes:
400 for invalid input, 404 for unknown records, 409 for conflicts.
"""

from __future__ import annotations

import json
import logging
import os
import threading
import urllib.parse
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Optional

from . import export as export_mod
from .assessor import CorpusError, GuidelineCorpus
from .capture import ConflictError, EventError, FrozenRecordError, UnknownRecordError
from .domains import DomainRegistry, load_registry, registry_from_dict
from .engine import Engine
from .fixtures import fixture_path, load_json
from .grammar import RecordValidationError, parse_timestamp
from .outcomes import OutcomeError
from .tracelayer import Thresholds
from .visibility import PolicyError, VisibilityPolicy

log = logging.getLogger("logia.service")

DEFAULT_LISTEN = "127.0.0.1:8347"


@dataclass(frozen=True)
class ServiceConfig:
    listen: str = DEFAULT_LISTEN
    data_dir: Optional[str] = "./logia-data"
    corpus_dir: Optional[str] = None
    taxonomy_path: Optional[str] = None
    policy_path: Optional[str] = None
    token: Optional[str] = None
    n_min: int = 30
    theta_low: float = 0.60
    theta_high: float = 0.20
    unattended_window_days: int = 30
    fsync: bool = True

    def thresholds(self) -> Thresholds:
        # Thresholds validates the threshold ordering invariant on build.
        return Thresholds(
            n_min=self.n_min,
            theta_low=self.theta_low,
            theta_high=self.theta_high,
            unattended_window_days=self.unattended_window_days,
        )

    @property
    def host(self) -> str:
        return self.listen.rsplit(":", 1)[0]

    @property
    def port(self) -> int:
        return int(self.listen.rsplit(":", 1)[1])


def load_config(path: Optional[str] = None, overrides: Optional[dict] = None) -> ServiceConfig:
    """Config file, then environment, then explicit overrides."""
    raw: dict = {}
    if path is not None:
        raw = json.loads(Path(path).read_text())
    config = ServiceConfig(**{
        key: raw[key] for key in ServiceConfig.__dataclass_fields__ if key in raw
    })
    env_map = {
        "LOGIA_LISTEN": "listen",
        "LOGIA_DATA_DIR": "data_dir",
        "LOGIA_TOKEN": "token",
    }
    env_values = {
        field_name: os.environ[var]
        for var, field_name in env_map.items() if os.environ.get(var)
    }
    if env_values:
        config = replace(config, **env_values)
    if overrides:
        config = replace(config, **{k: v for k, v in overrides.items() if v is not None})
    config.thresholds()
    return config


def build_engine(config: ServiceConfig) -> Engine:
    if config.corpus_dir:
        corpus = GuidelineCorpus.load_dir(config.corpus_dir)
    else:
        corpus = GuidelineCorpus.load_dir(fixture_path("corpus"))
    if config.taxonomy_path:
        registry = load_registry(config.taxonomy_path, config.taxonomy_path)
    else:
        registry = registry_from_dict(load_json("taxonomy.json"))
    if config.policy_path:
        policy = VisibilityPolicy.load(config.policy_path)
    else:
        policy = VisibilityPolicy.from_dict(load_json("policy.json"))
    journal_path = None
    if config.data_dir:
        journal_path = str(Path(config.data_dir) / "journal.ndjson")
    return Engine(
        corpus=corpus,
        registry=registry,
        policy=policy,
        thresholds=config.thresholds(),
        journal_path=journal_path,
        fsync=config.fsync,
    )


def in_memory_engine(registry: Optional[DomainRegistry] = None,
                     thresholds: Optional[Thresholds] = None) -> Engine:
    """Engine on packaged fixtures with no journal; for tests and simulation."""
    return Engine(
        corpus=GuidelineCorpus.load_dir(fixture_path("corpus")),
        registry=registry or registry_from_dict(load_json("taxonomy.json")),
        policy=VisibilityPolicy.from_dict(load_json("policy.json")),
        thresholds=thresholds or Thresholds(),
    )


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        self.status = status
        self.code = code
        self.message = message
        super().__init__(message)


def _classify_exception(exc: Exception) -> ApiError:
    if isinstance(exc, UnknownRecordError):
        ident = exc.args[0] if exc.args else ""
        return ApiError(404, "unknown-record", f"no record {ident!r}")
    if isinstance(exc, (ConflictError, FrozenRecordError)):
        return ApiError(409, "conflict", str(exc))
    if isinstance(exc, (EventError, OutcomeError, RecordValidationError, CorpusError,
                        PolicyError, export_mod.ExportError, export_mod.AgreementError,
                        ValueError)):
        return ApiError(400, "invalid-request", str(exc))
    raise exc


class LogiaServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, config: ServiceConfig, engine: Engine):
        self.config = config
        self.engine = engine
        self.engine_lock = threading.Lock()
        super().__init__((config.host, config.port), ApiHandler)


class ApiHandler(BaseHTTPRequestHandler):
    server: LogiaServer
    protocol_version = "HTTP/1.1"

    def log_message(self, fmt, *args):
        log.debug("%s " + fmt, self.address_string(), *args)

    # -- plumbing -----------------------------------------------------------

    def _send_json(self, status: int, body: dict) -> None:
        data = json.dumps(body).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(data)

    def _send_error(self, err: ApiError) -> None:
        self._send_json(err.status, {"error": {"code": err.code, "message": err.message}})

    def _read_body(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length) if length else b""
        if not raw:
            raise ApiError(400, "invalid-request", "request body must be JSON")
        try:
            body = json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError):
            raise ApiError(400, "invalid-request", "request body is not valid JSON") from None
        if not isinstance(body, dict):
            raise ApiError(400, "invalid-request", "request body must be a JSON object")
        return body

    def _authorized(self, path: str) -> bool:
        token = self.server.config.token
        if not token or path == "/health":
            return True
        supplied = self.headers.get("Authorization", "")
        return supplied == f"Bearer {token}"

    def _dispatch(self, method: str) -> None:
        parsed = urllib.parse.urlsplit(self.path)
        path = urllib.parse.unquote(parsed.path)
        query = {k: v[0] for k, v in urllib.parse.parse_qs(parsed.query).items()}
        if not self._authorized(path):
            self._send_json(401, {"error": {"code": "unauthorized",
                                            "message": "missing or invalid bearer token"}})
            return
        try:
            handler = self._route(method, path)
            if handler is None:
                raise ApiError(404, "not-found", f"no route for {method} {path}")
            with self.server.engine_lock:
                body = handler(path, query)
            self._send_json(200, body)
        except ApiError as err:
            self._send_error(err)
        except Exception as exc:  # noqa: BLE001 - boundary translation
            try:
                self._send_error(_classify_exception(exc))
            except Exception:
                log.exception("unhandled error for %s %s", method, path)
                self._send_json(500, {"error": {"code": "internal",
                                                "message": "internal error"}})

    def do_GET(self):
        self._dispatch("GET")

    def do_POST(self):
        self._dispatch("POST")

    def do_OPTIONS(self):
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type, Authorization")
        self.send_header("Content-Length", "0")
        self.end_headers()

    # -- routing ------------------------------------------------------------

    def _route(self, method: str, path: str):
        engine = self.server.engine
        if method == "GET":
            if path == "/health":
                return lambda p, q: {
                    "status": "ok",
                    "records": len(engine.records),
                    "journal_seq": engine.journal_seq,
                }
            if path.startswith("/assessments/"):
                return self._get_assessment
            if path.startswith("/cohorts/"):
                return self._get_cohort
            if path == "/records":
                return self._get_records
            if path == "/export/dataset":
                return self._get_dataset
            if path.startswith("/audit/"):
                return self._get_audit
            if path == "/calibration":
                return lambda p, q: engine.calibration_state()
            return None
        if method == "POST":
            if path == "/events":
                return lambda p, q: engine.submit_event(self._read_body())
            if path == "/outcomes":
                return lambda p, q: engine.submit_outcome(self._read_body())
            if path == "/reports/agreement":
                return self._post_agreement
            if path == "/admin/recalibrate":
                return self._post_recalibrate
            if path == "/admin/sweep":
                return self._post_sweep
            return None
        return None

    # -- handlers -----------------------------------------------------------

    def _get_assessment(self, path: str, query: dict) -> dict:
        record_id = path[len("/assessments/"):]
        if not record_id:
            raise ApiError(404, "not-found", "missing record id")
        return self.server.engine.assessment_view(record_id, actor=query.get("actor"))

    def _get_cohort(self, path: str, query: dict) -> dict:
        key = path[len("/cohorts/"):]
        if not key:
            raise ApiError(404, "not-found", "missing cohort signature")
        as_of = parse_timestamp(query["as_of"]) if query.get("as_of") else None
        return self.server.engine.cohort_view(key, as_of=as_of).to_wire()

    def _get_records(self, path: str, query: dict) -> dict:
        items = self.server.engine.review_items(
            domain=query.get("domain"),
            status=query.get("status"),
            mode=query.get("mode"),
        )
        return {"items": items}

    def _get_dataset(self, path: str, query: dict) -> dict:
        engine = self.server.engine
        filters = export_mod.parse_filters(query)

        def success_rate(record) -> Optional[float]:
            config = engine.registry.get(record.domain)
            from .tracelayer import signature as cohort_signature

            stats = engine.cohorts.get(cohort_signature(record, config).key)
            if stats is None or stats.failure_rate is None:
                return None
            return 1.0 - stats.failure_rate

        ordered = [engine.records[rid] for rid in engine.record_order]
        rows = export_mod.export_training_dataset(ordered, filters, success_rate)
        generated_at = engine.last_event_at or datetime.now(timezone.utc)
        manifest = export_mod.dataset_manifest(rows, filters, generated_at)
        return {"manifest": manifest, "records": rows}

    def _get_audit(self, path: str, query: dict) -> dict:
        record_id = path[len("/audit/"):]
        if not record_id:
            raise ApiError(404, "not-found", "missing record id")
        return {"record_id": record_id,
                "entries": self.server.engine.audit_trail(record_id)}

    def _post_agreement(self, path: str, query: dict) -> dict:
        body = self._read_body()
        records = body.get("records")
        annotations = body.get("annotations")
        if not isinstance(records, list) or not isinstance(annotations, (dict, list)):
            raise ApiError(400, "invalid-request",
                           "body must carry 'records' (list) and 'annotations' "
                           "(object keyed by record id, or list)")
        return export_mod.agreement_report(records, annotations)

    def _post_recalibrate(self, path: str, query: dict) -> dict:
        body = self._read_body() if int(self.headers.get("Content-Length") or 0) else {}
        as_of = parse_timestamp(body["as_of"]) if body.get("as_of") else None
        updates = self.server.engine.run_recalibration(as_of=as_of)
        return {"updates": [u.to_wire() for u in updates]}

    def _post_sweep(self, path: str, query: dict) -> dict:
        body = self._read_body() if int(self.headers.get("Content-Length") or 0) else {}
        as_of = parse_timestamp(body["as_of"]) if body.get("as_of") else None
        swept = self.server.engine.sweep_unattended(as_of=as_of)
        return {"swept": swept}


def import_ndjson(engine: Engine, path: str, channel: str) -> int:
    """Batch-load events or outcomes from an NDJSON file; returns the count."""
    count = 0
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            body = json.loads(line)
            if channel == "events":
                engine.submit_event(body)
            else:
                engine.submit_outcome(body)
            count += 1
    return count


def serve(config: ServiceConfig,
          replay_path: Optional[str] = None,
          outcomes_path: Optional[str] = None) -> LogiaServer:
    """Build the engine (replaying any journal) and return a ready server."""
    engine = build_engine(config)
    if replay_path:
        imported = import_ndjson(engine, replay_path, "events")
        log.info("imported %d events from %s", imported, replay_path)
    if outcomes_path:
        imported = import_ndjson(engine, outcomes_path, "outcomes")
        log.info("imported %d outcomes from %s", imported, outcomes_path)
    return LogiaServer(config, engine)
