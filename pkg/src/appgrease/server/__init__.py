"""HTTP job service: upload, applicability, pipeline jobs, artifacts, revert."""

from .app import ServerConfig, create_app
from .repository import RepositoryIndex, RepositorySnapshot
from .store import AppRecord, FileStore, JobRecord, JOB_STATES

__all__ = [
    "AppRecord",
    "FileStore",
    "JobRecord",
    "JOB_STATES",
    "RepositoryIndex",
    "RepositorySnapshot",
    "ServerConfig",
    "create_app",
]
