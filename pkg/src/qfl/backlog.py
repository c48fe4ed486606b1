"""Work-package (backlog) service client.

Two interchangeable implementations behind one contract:

- FileBacklogClient: hermetic mock persisting append-only, line-delimited JSON
  records in a single file. Selected by "file:" URLs.
- HttpBacklogClient: speaks an OpenProject-v3-flavored wire protocol over
  HTTP. Selected by "http(s):" URLs; bearer auth via token.

The entire semantic-field <-> wire mapping lives in encode_* / decode_* below,
so adapting an alternate backlog tool means changing exactly one place:

  POST  {base}/work_packages         create; body {subject, description:{raw},
                                     externalKey, _links:{type, parent?}}
  PATCH {base}/work_packages/{id}    set status; body {_links:{status}}
  GET   {base}/work_packages         full mirror; {_embedded:{elements:[...]}}

Creation is idempotent on external_key: repeating a request returns the
original work package; reusing a key with a different payload is a conflict.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Callable, Mapping

import httpx

from .errors import (
    BacklogUnavailable,
    ConflictError,
    RemoteError,
    SchemaError,
    UnknownParent,
    UnknownStatus,
    UnknownWorkPackage,
)

DEFAULT_STATUSES = ("New", "In progress", "Closed", "Rejected")
MAX_ATTEMPTS = 5
BACKOFF_BASE_SECONDS = 0.1

TYPE_QUALITY_REQUIREMENT = "QualityRequirement"
TYPE_TASK = "Task"


@dataclass(frozen=True)
class WorkPackage:
    wp_id: str
    subject: str
    type_name: str
    status: str
    description: str = ""
    parent_id: str | None = None
    external_key: str = ""

    def to_jsonable(self) -> dict[str, Any]:
        return {
            "wp_id": self.wp_id,
            "subject": self.subject,
            "type_name": self.type_name,
            "status": self.status,
            "description": self.description,
            "parent_id": self.parent_id,
            "external_key": self.external_key,
        }


@dataclass(frozen=True)
class WorkPackageRequest:
    subject: str
    type_name: str
    description: str = ""
    parent_id: str | None = None
    external_key: str = ""

    def __post_init__(self) -> None:
        if not self.subject.strip():
            raise SchemaError("work package subject must not be empty")


# --- wire mapping (single point of change) -----------------------------------


def encode_create(request: WorkPackageRequest) -> dict[str, Any]:
    body: dict[str, Any] = {
        "subject": request.subject,
        "description": {"format": "markdown", "raw": request.description},
        "externalKey": request.external_key,
        "_links": {"type": {"title": request.type_name}},
    }
    if request.parent_id is not None:
        body["_links"]["parent"] = {"href": f"/api/v3/work_packages/{request.parent_id}"}
    return body


def encode_status(status: str) -> dict[str, Any]:
    return {"_links": {"status": {"title": status}}}


def decode_work_package(resource: Mapping[str, Any]) -> WorkPackage:
    links = resource.get("_links", {})
    parent_href = links.get("parent", {}).get("href")
    parent_id = parent_href.rsplit("/", 1)[-1] if parent_href else None
    return WorkPackage(
        wp_id=str(resource["id"]),
        subject=str(resource["subject"]),
        type_name=str(links.get("type", {}).get("title", "")),
        status=str(links.get("status", {}).get("title", "")),
        description=str(resource.get("description", {}).get("raw", "")),
        parent_id=parent_id,
        external_key=str(resource.get("externalKey", "")),
    )


def encode_work_package(wp: WorkPackage) -> dict[str, Any]:
    resource: dict[str, Any] = {
        "id": wp.wp_id,
        "subject": wp.subject,
        "description": {"format": "markdown", "raw": wp.description},
        "externalKey": wp.external_key,
        "_links": {
            "type": {"title": wp.type_name},
            "status": {"title": wp.status},
        },
    }
    if wp.parent_id is not None:
        resource["_links"]["parent"] = {"href": f"/api/v3/work_packages/{wp.parent_id}"}
    return resource


# --- file-backed mock ----------------------------------------------------------


class FileBacklogClient:
    """Mock backlog service persisted as line-delimited JSON in one file.

    The file is the shared medium: before every operation the client replays
    any lines appended since it last looked, so a second client (or another
    process, standing in for developers working in the real tool) mutating
    the same file is observed. Writes within one client are serialized.
    """

    def __init__(self, path: str | Path, *, statuses: tuple[str, ...] = DEFAULT_STATUSES) -> None:
        self._path = Path(path)
        self._path.parent.mkdir(parents=True, exist_ok=True)
        self._statuses = statuses
        self._lock = threading.Lock()
        self._packages: dict[str, WorkPackage] = {}
        self._by_key: dict[str, str] = {}
        self._next_id = 1
        self._offset = 0
        self._catch_up()

    def _catch_up(self) -> None:
        if not self._path.exists():
            return
        if self._path.stat().st_size == self._offset:
            return
        with open(self._path, "rb") as handle:
            handle.seek(self._offset)
            for raw in handle:
                line = raw.decode("utf-8").strip()
                if line:
                    self._apply(json.loads(line))
            self._offset = handle.tell()

    def _apply(self, record: dict[str, Any]) -> None:
        if record["op"] == "create":
            wp = WorkPackage(**record["wp"])
            self._packages[wp.wp_id] = wp
            if wp.external_key:
                self._by_key[wp.external_key] = wp.wp_id
            self._next_id = max(self._next_id, int(wp.wp_id) + 1)
        elif record["op"] == "status":
            wp = self._packages[record["wp_id"]]
            self._packages[wp.wp_id] = replace(wp, status=record["status"])

    def _append(self, record: dict[str, Any]) -> None:
        with open(self._path, "ab") as handle:
            handle.write(json.dumps(record, separators=(",", ":")).encode("utf-8") + b"\n")
            handle.flush()
            self._offset = handle.tell()

    def create_work_package(self, request: WorkPackageRequest) -> WorkPackage:
        with self._lock:
            self._catch_up()
            existing_id = self._by_key.get(request.external_key) if request.external_key else None
            if existing_id is not None:
                existing = self._packages[existing_id]
                if (
                    existing.subject == request.subject
                    and existing.type_name == request.type_name
                    and existing.description == request.description
                    and existing.parent_id == request.parent_id
                ):
                    return existing
                raise ConflictError(
                    f"external key {request.external_key!r} already used with a "
                    "different payload"
                )
            if request.parent_id is not None and request.parent_id not in self._packages:
                raise UnknownParent(f"no work package {request.parent_id!r}")
            wp = WorkPackage(
                wp_id=str(self._next_id),
                subject=request.subject,
                type_name=request.type_name,
                status="New",
                description=request.description,
                parent_id=request.parent_id,
                external_key=request.external_key,
            )
            self._next_id += 1
            self._packages[wp.wp_id] = wp
            if wp.external_key:
                self._by_key[wp.external_key] = wp.wp_id
            self._append({"op": "create", "wp": wp.to_jsonable()})
            return wp

    def set_status(self, wp_id: str, status: str) -> WorkPackage:
        with self._lock:
            self._catch_up()
            if wp_id not in self._packages:
                raise UnknownWorkPackage(f"no work package {wp_id!r}")
            if status not in self._statuses:
                raise UnknownStatus(
                    f"status {status!r} not in vocabulary {list(self._statuses)}"
                )
            updated = replace(self._packages[wp_id], status=status)
            self._packages[wp_id] = updated
            self._append({"op": "status", "wp_id": wp_id, "status": status})
            return updated

    def fetch_all(self) -> list[WorkPackage]:
        with self._lock:
            self._catch_up()
            return sorted(self._packages.values(), key=lambda wp: int(wp.wp_id))


# --- HTTP client -----------------------------------------------------------------


_ERROR_CLASSES = {
    "ConflictError": ConflictError,
    "UnknownParent": UnknownParent,
    "UnknownWorkPackage": UnknownWorkPackage,
    "UnknownStatus": UnknownStatus,
}


class HttpBacklogClient:
    """Client for the OpenProject-flavored wire protocol.

    Transport failures and 5xx responses are retried with exponential backoff
    (MAX_ATTEMPTS total); idempotency keys make the retries safe. 4xx responses
    map straight to domain errors.
    """

    def __init__(
        self,
        base_url: str,
        *,
        token: str | None = None,
        sleep: Callable[[float], None] = time.sleep,
        timeout: float = 10.0,
    ) -> None:
        headers = {"Authorization": f"Bearer {token}"} if token else {}
        self._http = httpx.Client(base_url=base_url, headers=headers, timeout=timeout)
        self._sleep = sleep

    def close(self) -> None:
        self._http.close()

    def _request(self, method: str, path: str, body: dict[str, Any] | None = None) -> Any:
        last_error: Exception | None = None
        for attempt in range(MAX_ATTEMPTS):
            if attempt:
                self._sleep(BACKOFF_BASE_SECONDS * (2 ** (attempt - 1)))
            try:
                response = self._http.request(method, path, json=body)
            except httpx.HTTPError as exc:
                last_error = RemoteError(f"transport failure: {exc}")
                continue
            if response.status_code >= 500:
                last_error = RemoteError(f"server error {response.status_code}")
                continue
            if response.status_code >= 400:
                raise self._domain_error(response)
            return response.json()
        raise BacklogUnavailable(
            f"backlog unreachable after {MAX_ATTEMPTS} attempts: {last_error}"
        )

    @staticmethod
    def _domain_error(response: httpx.Response) -> Exception:
        try:
            payload = response.json()
        except ValueError:
            payload = {}
        code = payload.get("code", "")
        message = payload.get("message", f"backlog error {response.status_code}")
        return _ERROR_CLASSES.get(code, RemoteError)(message)

    def create_work_package(self, request: WorkPackageRequest) -> WorkPackage:
        resource = self._request("POST", "/work_packages", encode_create(request))
        return decode_work_package(resource)

    def set_status(self, wp_id: str, status: str) -> WorkPackage:
        resource = self._request("PATCH", f"/work_packages/{wp_id}", encode_status(status))
        return decode_work_package(resource)

    def fetch_all(self) -> list[WorkPackage]:
        collection = self._request("GET", "/work_packages")
        elements = collection.get("_embedded", {}).get("elements", [])
        return [decode_work_package(e) for e in elements]


def make_backlog_client(
    url: str,
    *,
    token: str | None = None,
    sleep: Callable[[float], None] = time.sleep,
) -> FileBacklogClient | HttpBacklogClient:
    """Pick the implementation by URL scheme: "file:" is the mock."""
    if url.startswith("file:"):
        return FileBacklogClient(url[len("file:"):])
    return HttpBacklogClient(url, token=token, sleep=sleep)
