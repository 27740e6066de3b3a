"""Thin HTTP client for the service; stdlib urllib only."""

from __future__ import annotations

import json
import urllib.error
import urllib.parse
import urllib.request
from typing import Optional


class ServiceError(Exception):
    def __init__(self, status: int, code: str, message: str):
        self.status = status
        self.code = code
        self.message = message
        super().__init__(f"{status} {code}: {message}")


class Client:
    def __init__(self, base_url: str, token: Optional[str] = None, timeout: float = 30.0):
        self.base_url = base_url.rstrip("/")
        self.token = token
        self.timeout = timeout

    def _request(self, method: str, path: str,
                 body: Optional[dict] = None,
                 query: Optional[dict] = None) -> dict:
        url = self.base_url + path
        if query:
            pairs = {k: str(v) for k, v in query.items() if v is not None}
            if pairs:
                url += "?" + urllib.parse.urlencode(pairs)
        data = json.dumps(body).encode("utf-8") if body is not None else None
        request = urllib.request.Request(url, data=data, method=method)
        request.add_header("Content-Type", "application/json")
        if self.token:
            request.add_header("Authorization", f"Bearer {self.token}")
        try:
            with urllib.request.urlopen(request, timeout=self.timeout) as response:
                return json.loads(response.read().decode("utf-8"))
        except urllib.error.HTTPError as exc:
            try:
                payload = json.loads(exc.read().decode("utf-8"))
                error = payload.get("error", {})
                raise ServiceError(exc.code, error.get("code", "error"),
                                   error.get("message", "")) from None
            except (ValueError, KeyError):
                raise ServiceError(exc.code, "error", str(exc)) from None

    def health(self) -> dict:
        return self._request("GET", "/health")

    def submit_event(self, event: dict) -> dict:
        return self._request("POST", "/events", body=event)

    def submit_outcome(self, outcome: dict) -> dict:
        return self._request("POST", "/outcomes", body=outcome)

    def assessment(self, record_id: str, actor: Optional[str] = None) -> dict:
        return self._request("GET", f"/assessments/{urllib.parse.quote(record_id)}",
                             query={"actor": actor} if actor else None)

    def cohort(self, signature_key: str, as_of: Optional[str] = None) -> dict:
        return self._request(
            "GET", f"/cohorts/{urllib.parse.quote(signature_key, safe='')}",
            query={"as_of": as_of} if as_of else None)

    def records(self, domain: Optional[str] = None, status: Optional[str] = None,
                mode: Optional[str] = None) -> list[dict]:
        body = self._request("GET", "/records",
                             query={"domain": domain, "status": status, "mode": mode})
        return body["items"]

    def export_dataset(self, **filters) -> dict:
        return self._request("GET", "/export/dataset", query=filters)

    def audit(self, record_id: str) -> dict:
        return self._request("GET", f"/audit/{urllib.parse.quote(record_id)}")

    def agreement_report(self, records: list[dict], annotations: dict) -> dict:
        return self._request("POST", "/reports/agreement",
                             body={"records": records, "annotations": annotations})

    def recalibrate(self, as_of: Optional[str] = None) -> dict:
        return self._request("POST", "/admin/recalibrate",
                             body={"as_of": as_of} if as_of else {})

    def sweep(self, as_of: Optional[str] = None) -> dict:
        return self._request("POST", "/admin/sweep",
                             body={"as_of": as_of} if as_of else {})

    def calibration(self) -> dict:
        return self._request("GET", "/calibration")
