"""FIFO job queue with a bounded worker pool.

Decode/encode dominates job runtime, so concurrency is capped (default 2).
Each job's pipeline runs sequentially; state transitions are persisted as
they happen and always move forward through the declared order, with
`failed` reachable from any non-terminal state.
"""

from __future__ import annotations

import hashlib
import logging
import queue
import threading

from ..errors import AppGreaseError
from ..pipeline import PipelineConfig, run_pipeline
from .store import FileStore

log = logging.getLogger(__name__)

_SHUTDOWN = object()


class JobQueue:
    def __init__(self, store: FileStore, repository, key, workers: int = 2):
        self.store = store
        self.repository = repository
        self.key = key
        self._queue: queue.Queue = queue.Queue()
        self._threads = [
            threading.Thread(target=self._worker, name=f"job-worker-{i}", daemon=True)
            for i in range(max(1, workers))
        ]
        for t in self._threads:
            t.start()

    def submit(self, job_id: str, force: bool = False) -> None:
        self._queue.put((job_id, force))

    def shutdown(self) -> None:
        for _ in self._threads:
            self._queue.put(_SHUTDOWN)
        for t in self._threads:
            t.join(timeout=5)

    def _worker(self) -> None:
        while True:
            item = self._queue.get()
            if item is _SHUTDOWN:
                return
            job_id, force = item
            try:
                self._run(job_id, force)
            except Exception:
                log.exception("job %s crashed", job_id)
                self.store.update_job(job_id, state="failed", error="internal error")

    def _run(self, job_id: str, force: bool) -> None:
        job = self.store.get_job(job_id)
        snapshot = self.repository.snapshot
        try:
            packages = [snapshot.packages[eid] for eid in job.extension_ids]
        except KeyError as exc:
            self.store.update_job(job_id, state="failed", error=f"unknown extension {exc}")
            return

        original = self.store.read_app_bytes(job.app_id)
        config = PipelineConfig(key=self.key, signature_lists=snapshot.signature_lists)

        def on_stage(name: str) -> None:
            self.store.update_job(job_id, state=name)

        try:
            result = run_pipeline(original, packages, config, force=force, on_stage=on_stage)
        except AppGreaseError as exc:
            self.store.update_job(job_id, state="failed", error=str(exc))
            return

        self.store.write_job_artifacts(job_id, result.signed_apk, result.patch)
        self.store.update_job(
            job_id,
            state="done",
            extensions=[
                {"id": log_.extension_id, "changes": log_.changes, "warnings": log_.warnings}
                for log_ in result.logs
            ],
            signed_sha256=hashlib.sha256(result.signed_apk).hexdigest(),
            patch_sha256=hashlib.sha256(result.patch).hexdigest(),
        )
