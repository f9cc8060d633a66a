import hashlib
import time

import pytest
from fastapi.testclient import TestClient

from appgrease import delta, signer
from appgrease.server import ServerConfig, create_app

from fab_apk import build_fixture_apk


@pytest.fixture()
def client(tmp_path):
    app = create_app(ServerConfig(data_dir=tmp_path / "data", workers=2))
    with TestClient(app) as tc:
        yield tc
    app.state.jobs.shutdown()


def upload(client, apk: bytes) -> dict:
    response = client.post("/api/apps", files={"file": ("fixture.apk", apk)})
    assert response.status_code == 201, response.text
    return response.json()


def wait_for_job(client, job_id: str, timeout: float = 30.0) -> dict:
    deadline = time.time() + timeout
    while time.time() < deadline:
        doc = client.get(f"/api/jobs/{job_id}").json()
        if doc["state"] in ("done", "failed"):
            return doc
        time.sleep(0.05)
    raise AssertionError("job did not settle in time")


def test_upload_fixture(client, fixture_apk):
    doc = upload(client, fixture_apk)
    assert doc["package"] == "com.example.fixture"
    assert doc["version_code"] == 7
    assert doc["version_name"] == "1.2.3"
    assert doc["sha256"] == hashlib.sha256(fixture_apk).hexdigest()


def test_upload_text_file_rejected(client):
    response = client.post("/api/apps", files={"file": ("junk.txt", b"hello world")})
    assert response.status_code == 400


def test_upload_twice_two_distinct_ids(client, fixture_apk):
    first = upload(client, fixture_apk)
    second = upload(client, fixture_apk)
    assert first["id"] != second["id"]


def test_upload_cap(tmp_path, fixture_apk):
    app = create_app(ServerConfig(data_dir=tmp_path / "capped", upload_cap=1024))
    with TestClient(app) as tc:
        response = tc.post("/api/apps", files={"file": ("a.apk", fixture_apk)})
    assert response.status_code == 413
    app.state.jobs.shutdown()


def test_extension_listing_marks_applicability(client, fixture_apk):
    app_id = upload(client, fixture_apk)["id"]
    rows = client.get(f"/api/apps/{app_id}/extensions").json()
    by_id = {r["id"]: r for r in rows}
    tracker = by_id["org.appgrease.tracker-removal"]
    assert tracker["applicable"] is True
    assert len(tracker["hits"]) >= 1
    assert tracker["hits"][0]["tracker"] == "Facebook Analytics"
    assert by_id["org.appgrease.disable-billing"]["applicable"] is True
    # Tree-mode extension detects via dex string and is marked applicable;
    # the decoded tree is only needed at application time.
    assert by_id["org.appgrease.location-fixing"]["applicable"] is True


def test_extension_listing_unknown_app(client):
    assert client.get("/api/apps/doesnotexist/extensions").status_code == 404


def test_job_happy_path(client, fixture_apk):
    app_id = upload(client, fixture_apk)["id"]
    created = client.post(
        "/api/jobs",
        json={
            "app_id": app_id,
            "extensions": [
                "org.appgrease.disable-billing",
                "org.appgrease.tracker-removal",
                "org.appgrease.examples.stories-removal",
                "org.appgrease.disable-pinning",
            ],
        },
    )
    assert created.status_code == 202
    job_id = created.json()["id"]

    doc = wait_for_job(client, job_id)
    assert doc["state"] == "done", doc
    changes = {e["id"]: e["changes"] for e in doc["extensions"]}
    assert changes["org.appgrease.disable-billing"] == 1
    assert changes["org.appgrease.examples.stories-removal"] == 1

    signed = client.get(f"/api/jobs/{job_id}/apk").content
    patch = client.get(f"/api/jobs/{job_id}/patch").content
    assert signer.verify_apk(signed).ok
    assert delta.apply_patch(fixture_apk, patch) == signed


def test_job_unknown_app_or_extension(client, fixture_apk):
    app_id = upload(client, fixture_apk)["id"]
    assert (
        client.post("/api/jobs", json={"app_id": "nope", "extensions": []}).status_code == 404
    )
    response = client.post(
        "/api/jobs", json={"app_id": app_id, "extensions": ["org.missing.ext"]}
    )
    assert response.status_code == 404
    assert "org.missing.ext" in response.json()["detail"]


def test_job_not_applicable_409_names_offender(client):
    other = build_fixture_apk(package="com.other.app")
    app_id = upload(client, other)["id"]
    response = client.post(
        "/api/jobs",
        json={"app_id": app_id, "extensions": ["org.appgrease.examples.stories-removal"]},
    )
    assert response.status_code == 409
    assert "org.appgrease.examples.stories-removal" in response.json()["detail"]


def test_job_force_overrides_applicability(client):
    other = build_fixture_apk(package="com.other.app")
    app_id = upload(client, other)["id"]
    created = client.post(
        "/api/jobs",
        json={
            "app_id": app_id,
            "extensions": ["org.appgrease.examples.stories-removal"],
            "force": True,
        },
    )
    assert created.status_code == 202
    doc = wait_for_job(client, created.json()["id"])
    assert doc["state"] == "done"


def test_job_failure_reports_reason(client, fixture_apk):
    # The diff extension needs a decoded tree, which server jobs never have.
    app_id = upload(client, fixture_apk)["id"]
    created = client.post(
        "/api/jobs",
        json={"app_id": app_id, "extensions": ["org.appgrease.examples.stories-removal-diff"]},
    )
    assert created.status_code == 202
    doc = wait_for_job(client, created.json()["id"])
    assert doc["state"] == "failed"
    assert "tree" in doc["error"]


def test_artifacts_not_ready_409(client, fixture_apk):
    app_id = upload(client, fixture_apk)["id"]
    created = client.post(
        "/api/jobs", json={"app_id": app_id, "extensions": ["org.appgrease.disable-billing"]}
    )
    job_id = created.json()["id"]
    response = client.get(f"/api/jobs/{job_id}/apk")
    if response.status_code == 200:
        pytest.skip("job finished before the not-ready check could observe it")
    assert response.status_code == 409
    wait_for_job(client, job_id)


def test_job_status_unknown_404(client):
    assert client.get("/api/jobs/missing").status_code == 404


def test_revert_returns_original_bytes(client, fixture_apk):
    app_id = upload(client, fixture_apk)["id"]
    created = client.post(
        "/api/jobs", json={"app_id": app_id, "extensions": ["org.appgrease.disable-billing"]}
    )
    wait_for_job(client, created.json()["id"])
    response = client.post(f"/api/apps/{app_id}/revert")
    assert response.status_code == 200
    assert hashlib.sha256(response.content).hexdigest() == hashlib.sha256(
        fixture_apk
    ).hexdigest()


def test_revert_before_any_job(client, fixture_apk):
    app_id = upload(client, fixture_apk)["id"]
    assert client.post(f"/api/apps/{app_id}/revert").content == fixture_apk


def test_revert_unknown_404(client):
    assert client.post("/api/apps/missing/revert").status_code == 404


def test_list_apps(client, fixture_apk):
    assert client.get("/api/apps").json() == []
    app_id = upload(client, fixture_apk)["id"]
    listing = client.get("/api/apps").json()
    assert [a["id"] for a in listing] == [app_id]


def test_pipeline_determinism_across_jobs(client, fixture_apk):
    selection = [
        "org.appgrease.disable-billing",
        "org.appgrease.tracker-removal",
        "org.appgrease.disable-pinning",
    ]
    artifacts = []
    for _ in range(2):
        app_id = upload(client, fixture_apk)["id"]
        created = client.post("/api/jobs", json={"app_id": app_id, "extensions": selection})
        job_id = created.json()["id"]
        doc = wait_for_job(client, job_id)
        assert doc["state"] == "done"
        artifacts.append(
            (
                client.get(f"/api/jobs/{job_id}/apk").content,
                client.get(f"/api/jobs/{job_id}/patch").content,
            )
        )
    assert artifacts[0][0] == artifacts[1][0]
    assert artifacts[0][1] == artifacts[1][1]


def test_state_sequences_are_monotonic(client, fixture_apk):
    from appgrease.server.store import JOB_STATES

    app_id = upload(client, fixture_apk)["id"]
    created = client.post(
        "/api/jobs", json={"app_id": app_id, "extensions": ["org.appgrease.disable-billing"]}
    )
    job_id = created.json()["id"]
    observed = []
    deadline = time.time() + 30
    while time.time() < deadline:
        state = client.get(f"/api/jobs/{job_id}").json()["state"]
        if not observed or observed[-1] != state:
            observed.append(state)
        if state in ("done", "failed"):
            break
    indices = [JOB_STATES.index(s) for s in observed]
    assert indices == sorted(indices)
    assert observed[-1] == "done"


def test_store_reload_marks_interrupted_jobs_failed(tmp_path, fixture_apk):
    from appgrease.server.store import FileStore

    store = FileStore(tmp_path / "data")
    record = store.save_app(fixture_apk, "com.example.fixture", 7, "1.2.3")
    job = store.create_job(record.id, ["org.appgrease.disable-billing"])
    store.update_job(job.id, state="applying")

    # Simulate a restart: a fresh store over the same directory.
    reloaded = FileStore(tmp_path / "data")
    recovered = reloaded.get_job(job.id)
    assert recovered.state == "failed"
    assert "restart" in recovered.error
    assert reloaded.get_app(record.id).sha256 == record.sha256
    assert reloaded.read_app_bytes(record.id) == fixture_apk


def test_repository_reload_is_atomic_swap(tmp_path):
    import json as jsonlib
    import shutil

    from appgrease.builtin import DEFAULT_EXTENSIONS_DIR
    from appgrease.server.repository import RepositoryIndex

    ext_dir = tmp_path / "exts"
    shutil.copytree(DEFAULT_EXTENSIONS_DIR / "disable-billing", ext_dir / "disable-billing")
    repo = RepositoryIndex(ext_dir, None)
    before = repo.snapshot
    assert set(before.packages) == {"org.appgrease.disable-billing"}

    manifest = jsonlib.loads(
        (ext_dir / "disable-billing" / "extension.json").read_text()
    )
    manifest["id"] = "org.example.second"
    manifest["applicability"] = []
    new_dir = ext_dir / "second"
    new_dir.mkdir()
    (new_dir / "extension.json").write_text(jsonlib.dumps(manifest))

    after = repo.reload()
    assert set(after.packages) == {"org.appgrease.disable-billing", "org.example.second"}
    # The old snapshot object is untouched: readers holding it never saw a
    # partial state.
    assert set(before.packages) == {"org.appgrease.disable-billing"}
