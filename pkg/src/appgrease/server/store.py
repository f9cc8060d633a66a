"""Filesystem persistence: one directory per app and per job, plus JSON metas.

Layout under the data directory:

    apps/<id>/original.apk      uploaded bytes, never rewritten
    apps/<id>/meta.json
    jobs/<id>/meta.json         state + logs, rewritten on every transition
    jobs/<id>/signed.apk        present once the job is done
    jobs/<id>/patch.axpw

Originals are immutable once stored; revert simply reads them back.
"""

from __future__ import annotations

import hashlib
import json
import threading
import time
import uuid
from dataclasses import asdict, dataclass, field
from pathlib import Path

JOB_STATES = (
    "queued",
    "decoding",
    "detecting",
    "applying",
    "encoding",
    "signing",
    "diffing",
    "done",
    "failed",
)


@dataclass
class AppRecord:
    id: str
    package: str | None
    version_code: int | None
    version_name: str | None
    sha256: str
    size: int
    uploaded_at: float

    def summary(self) -> dict:
        return asdict(self)


@dataclass
class JobRecord:
    id: str
    app_id: str
    extension_ids: list[str]
    state: str = "queued"
    extensions: list[dict] = field(default_factory=list)  # {id, changes, warnings}
    error: str | None = None
    created_at: float = 0.0
    signed_sha256: str | None = None
    patch_sha256: str | None = None

    def status_doc(self) -> dict:
        return {
            "id": self.id,
            "app_id": self.app_id,
            "state": self.state,
            "extensions": self.extensions
            or [{"id": e, "changes": None, "warnings": []} for e in self.extension_ids],
            "error": self.error,
        }


def _new_id() -> str:
    return uuid.uuid4().hex[:12]


class FileStore:
    def __init__(self, data_dir: str | Path):
        self.root = Path(data_dir)
        self.apps_dir = self.root / "apps"
        self.jobs_dir = self.root / "jobs"
        self.apps_dir.mkdir(parents=True, exist_ok=True)
        self.jobs_dir.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._apps: dict[str, AppRecord] = {}
        self._jobs: dict[str, JobRecord] = {}
        self._load()

    def _load(self) -> None:
        for meta in self.apps_dir.glob("*/meta.json"):
            record = AppRecord(**json.loads(meta.read_text()))
            self._apps[record.id] = record
        for meta in self.jobs_dir.glob("*/meta.json"):
            record = JobRecord(**json.loads(meta.read_text()))
            if record.state not in ("done", "failed"):
                record.state = "failed"
                record.error = "interrupted by server restart"
                self._write_job_meta(record)
            self._jobs[record.id] = record

    # --- apps ---------------------------------------------------------------

    def save_app(
        self,
        data: bytes,
        package: str | None,
        version_code: int | None,
        version_name: str | None,
    ) -> AppRecord:
        record = AppRecord(
            id=_new_id(),
            package=package,
            version_code=version_code,
            version_name=version_name,
            sha256=hashlib.sha256(data).hexdigest(),
            size=len(data),
            uploaded_at=time.time(),
        )
        app_dir = self.apps_dir / record.id
        app_dir.mkdir(parents=True)
        (app_dir / "original.apk").write_bytes(data)
        (app_dir / "meta.json").write_text(json.dumps(record.summary(), indent=2))
        with self._lock:
            self._apps[record.id] = record
        return record

    def get_app(self, app_id: str) -> AppRecord | None:
        with self._lock:
            return self._apps.get(app_id)

    def list_apps(self) -> list[AppRecord]:
        with self._lock:
            return sorted(self._apps.values(), key=lambda a: a.uploaded_at)

    def read_app_bytes(self, app_id: str) -> bytes:
        return (self.apps_dir / app_id / "original.apk").read_bytes()

    # --- jobs ----------------------------------------------------------------

    def create_job(self, app_id: str, extension_ids: list[str]) -> JobRecord:
        record = JobRecord(
            id=_new_id(),
            app_id=app_id,
            extension_ids=list(extension_ids),
            created_at=time.time(),
        )
        (self.jobs_dir / record.id).mkdir(parents=True)
        self._write_job_meta(record)
        with self._lock:
            self._jobs[record.id] = record
        return record

    def get_job(self, job_id: str) -> JobRecord | None:
        with self._lock:
            return self._jobs.get(job_id)

    def job_status(self, job_id: str) -> dict | None:
        with self._lock:
            record = self._jobs.get(job_id)
            return None if record is None else record.status_doc()

    def update_job(self, job_id: str, **fields) -> None:
        with self._lock:
            record = self._jobs[job_id]
            for key, value in fields.items():
                setattr(record, key, value)
            self._write_job_meta(record)

    def _write_job_meta(self, record: JobRecord) -> None:
        meta = self.jobs_dir / record.id / "meta.json"
        tmp = meta.with_suffix(".json.tmp")
        tmp.write_text(json.dumps(asdict(record), indent=2))
        tmp.replace(meta)

    def write_job_artifacts(self, job_id: str, signed_apk: bytes, patch: bytes) -> None:
        job_dir = self.jobs_dir / job_id
        (job_dir / "signed.apk").write_bytes(signed_apk)
        (job_dir / "patch.axpw").write_bytes(patch)

    def read_job_apk(self, job_id: str) -> bytes:
        return (self.jobs_dir / job_id / "signed.apk").read_bytes()

    def read_job_patch(self, job_id: str) -> bytes:
        return (self.jobs_dir / job_id / "patch.axpw").read_bytes()
