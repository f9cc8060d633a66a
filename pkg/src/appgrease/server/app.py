"""HTTP surface: upload apps, inspect applicability, run jobs, fetch artifacts.

Control endpoints speak JSON; APK and patch downloads are raw bytes. The
status document shape is {id, app_id, state, extensions: [{id, changes,
warnings}], error}; stage names are exactly the pipeline's state strings.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, HTTPException, Request, Response, UploadFile
from fastapi.middleware.cors import CORSMiddleware
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .. import signer
from ..errors import AppGreaseError, MalformedApk
from ..extensions import DecodedApp, check_applicability, decode_app
from .jobs import JobQueue
from .repository import RepositoryIndex
from .store import FileStore

APK_MEDIA_TYPE = "application/vnd.android.package-archive"
PATCH_MEDIA_TYPE = "application/octet-stream"


@dataclass
class ServerConfig:
    data_dir: Path
    extensions_dir: Path | None = None
    signatures_path: Path | None = None
    key_store: Path | None = None
    upload_cap: int = 200 * 1024 * 1024
    workers: int = 2
    webui_dist: Path | None = None
    cors: bool = True
    _: dict = field(default_factory=dict, repr=False)


class JobRequest(BaseModel):
    app_id: str
    extensions: list[str]
    force: bool = False


class _DecodedCache:
    """Parsed manifests/dexes per app id; originals are immutable so no expiry."""

    def __init__(self, store: FileStore):
        self.store = store
        self._lock = threading.Lock()
        self._cache: dict[str, DecodedApp] = {}

    def get(self, app_id: str) -> DecodedApp:
        with self._lock:
            if app_id not in self._cache:
                self._cache[app_id] = decode_app(self.store.read_app_bytes(app_id))
            return self._cache[app_id]


def create_app(config: ServerConfig) -> FastAPI:
    store = FileStore(config.data_dir)
    repository = RepositoryIndex(config.extensions_dir, config.signatures_path)
    key_store = config.key_store or Path(config.data_dir) / "keys" / "signing.pem"
    key = signer.generate_key(key_store)
    jobs = JobQueue(store, repository, key, workers=config.workers)
    cache = _DecodedCache(store)

    app = FastAPI(title="appgrease", version="0.1.0")
    app.state.store = store
    app.state.repository = repository
    app.state.jobs = jobs
    app.state.key = key

    if config.cors:
        app.add_middleware(
            CORSMiddleware,
            allow_origins=["*"],
            allow_methods=["*"],
            allow_headers=["*"],
        )

    @app.post("/api/apps", status_code=201)
    async def upload_app(file: UploadFile):
        data = await file.read(config.upload_cap + 1)
        if len(data) > config.upload_cap:
            raise HTTPException(413, "upload exceeds the configured size cap")
        try:
            decoded = decode_app(data)
        except AppGreaseError as exc:
            raise HTTPException(400, f"not a usable app package: {exc}") from exc
        record = store.save_app(
            data,
            package=decoded.package_name(),
            version_code=decoded.version_code(),
            version_name=decoded.version_name(),
        )
        return record.summary()

    @app.get("/api/apps")
    def list_apps():
        return [record.summary() for record in store.list_apps()]

    @app.get("/api/apps/{app_id}/extensions")
    def list_extensions(app_id: str):
        if store.get_app(app_id) is None:
            raise HTTPException(404, "no such app")
        decoded = cache.get(app_id)
        snapshot = repository.snapshot
        rows = []
        for pkg in snapshot.ordered_packages():
            report = check_applicability(
                pkg, decoded.manifest, decoded.dexes, snapshot.signature_lists
            )
            rows.append(
                {
                    **pkg.summary(),
                    "applicable": report.applicable,
                    "rules": [
                        {"kind": r.kind, "argument": r.argument, "passed": r.passed}
                        for r in report.rules
                    ],
                    "hits": [hit.as_dict() for hit in report.hits],
                }
            )
        return rows

    @app.post("/api/apps/{app_id}/revert")
    def revert_app(app_id: str):
        record = store.get_app(app_id)
        if record is None:
            raise HTTPException(404, "no such app")
        return Response(
            content=store.read_app_bytes(app_id),
            media_type=APK_MEDIA_TYPE,
            headers={"X-Original-Sha256": record.sha256},
        )

    @app.post("/api/jobs", status_code=202)
    def create_job(request: JobRequest):
        if store.get_app(request.app_id) is None:
            raise HTTPException(404, "no such app")
        snapshot = repository.snapshot
        unknown = [e for e in request.extensions if e not in snapshot.packages]
        if unknown:
            raise HTTPException(404, f"unknown extensions: {', '.join(unknown)}")
        if not request.force:
            decoded = cache.get(request.app_id)
            offending = [
                eid
                for eid in request.extensions
                if not check_applicability(
                    snapshot.packages[eid],
                    decoded.manifest,
                    decoded.dexes,
                    snapshot.signature_lists,
                ).applicable
            ]
            if offending:
                raise HTTPException(
                    409, f"not applicable to this app: {', '.join(offending)}"
                )
        job = store.create_job(request.app_id, request.extensions)
        jobs.submit(job.id, force=request.force)
        return {"id": job.id, "state": job.state}

    @app.get("/api/jobs/{job_id}")
    def job_status(job_id: str):
        doc = store.job_status(job_id)
        if doc is None:
            raise HTTPException(404, "no such job")
        return doc

    def _artifact(job_id: str, kind: str) -> Response:
        job = store.get_job(job_id)
        if job is None:
            raise HTTPException(404, "no such job")
        if job.state != "done":
            raise HTTPException(409, f"job is {job.state}, not done")
        if kind == "apk":
            return Response(content=store.read_job_apk(job_id), media_type=APK_MEDIA_TYPE)
        return Response(content=store.read_job_patch(job_id), media_type=PATCH_MEDIA_TYPE)

    @app.get("/api/jobs/{job_id}/apk")
    def job_apk(job_id: str):
        return _artifact(job_id, "apk")

    @app.get("/api/jobs/{job_id}/patch")
    def job_patch(job_id: str):
        return _artifact(job_id, "patch")

    if config.webui_dist and Path(config.webui_dist).is_dir():
        app.mount("/", StaticFiles(directory=config.webui_dist, html=True), name="webui")

    return app
