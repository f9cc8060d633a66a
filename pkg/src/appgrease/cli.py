"""Command-line client and server launcher.

Exit codes are a stable scripting contract: 0 success, 1 environment or
I/O problem, 2 usage error, 3 pipeline failure. Every flag can also be set
through the environment with an APPGREASE_ prefix (e.g. APPGREASE_DATA_DIR).
"""

from __future__ import annotations

import json
import socket
import sys
import time
from pathlib import Path

import click

from . import delta, pipeline, signer
from .builtin import DEFAULT_SIGNATURES_PATH
from .errors import (
    ActionFailed,
    AppGreaseError,
    NotApplicable,
    RepositoryLoadError,
    TreeModeUnavailable,
)
from .extensions import decode_app, detect_trackers, load_signature_list
from .server.repository import RepositoryIndex

EXIT_IO = 1
EXIT_USAGE = 2
EXIT_PIPELINE = 3

_PIPELINE_ERRORS = (ActionFailed, NotApplicable, TreeModeUnavailable)


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _table(rows: list[list[str]], header: list[str]) -> str:
    all_rows = [header] + rows
    widths = [max(len(str(r[i])) for r in all_rows) for i in range(len(header))]
    lines = []
    for r in all_rows:
        lines.append("  ".join(str(c).ljust(w) for c, w in zip(r, widths)).rstrip())
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


@click.group()
@click.option("--json", "as_json", is_flag=True, help="Machine-readable output.")
@click.pass_context
def cli(ctx, as_json):
    """Extend Android apps with declarative harm-reduction patches."""
    ctx.ensure_object(dict)
    ctx.obj["json"] = as_json


@cli.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8795, show_default=True)
@click.option("--data-dir", type=click.Path(path_type=Path), default=Path("appgrease-data"),
              show_default=True)
@click.option("--extensions-dir", type=click.Path(path_type=Path), default=None,
              help="Extension repository directory (bundled examples if omitted).")
@click.option("--key-store", type=click.Path(path_type=Path), default=None,
              help="Signing key file (created on first use; defaults into the data dir).")
@click.option("--signatures", type=click.Path(path_type=Path), default=None,
              help="Tracker signature list (bundled default if omitted).")
@click.option("--workers", default=2, show_default=True)
@click.option("--webui-dist", type=click.Path(path_type=Path), default=None,
              help="Serve a built web UI from this directory at /.")
def serve(host, port, data_dir, extensions_dir, key_store, signatures, workers, webui_dist):
    """Run the extension server until interrupted."""
    from .server import ServerConfig, create_app

    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.bind((host, port))
    except OSError as exc:
        _fail(EXIT_IO, f"cannot bind {host}:{port}: {exc}")
    finally:
        probe.close()

    try:
        app = create_app(
            ServerConfig(
                data_dir=data_dir,
                extensions_dir=extensions_dir,
                signatures_path=signatures,
                key_store=key_store,
                workers=workers,
                webui_dist=webui_dist,
            )
        )
    except RepositoryLoadError as exc:
        _fail(EXIT_IO, f"repository failed to load: {exc}")

    count = len(app.state.repository.snapshot.packages)
    click.echo(f"serving on http://{host}:{port} with {count} extensions loaded")
    import uvicorn

    uvicorn.run(app, host=host, port=port, log_level="warning")


def _load_repository(extensions_dir, signatures):
    try:
        return RepositoryIndex(extensions_dir, signatures)
    except RepositoryLoadError as exc:
        _fail(EXIT_IO, str(exc))


@cli.command()
@click.argument("apk", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--extension", "-e", "extension_ids", multiple=True, required=True,
              help="Extension id to apply; repeat for several, order matters.")
@click.option("--out", "-o", type=click.Path(file_okay=False, path_type=Path),
              default=Path("."), show_default=True, help="Output directory.")
@click.option("--server", "server_url", default=None,
              help="Run the job on a server instead of locally.")
@click.option("--extensions-dir", type=click.Path(path_type=Path), default=None)
@click.option("--key-store", type=click.Path(path_type=Path),
              default=Path.home() / ".appgrease" / "signing.pem", show_default=True)
@click.option("--signatures", type=click.Path(path_type=Path), default=None)
@click.option("--tree", type=click.Path(file_okay=False, exists=True, path_type=Path),
              default=None, help="Decoded-tree directory for text/diff extensions.")
@click.option("--force", is_flag=True, help="Apply even if marked non-applicable.")
@click.pass_context
def extend(ctx, apk, extension_ids, out, server_url, extensions_dir, key_store, signatures,
           tree, force):
    """Apply extensions to an APK; writes the signed result and a patch."""
    original = apk.read_bytes()
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".appgrease-write-test"
        probe.write_bytes(b"")
        probe.unlink()
    except OSError as exc:
        _fail(EXIT_IO, f"output directory not writable: {exc}")

    if server_url:
        result_doc, signed, patch = _extend_remote(server_url, original, extension_ids, force)
    else:
        result_doc, signed, patch = _extend_local(
            original, extension_ids, extensions_dir, key_store, signatures, tree, force
        )

    base = apk.stem
    apk_path = out / f"{base}-extended.apk"
    patch_path = out / f"{base}-extended.axpw"
    apk_path.write_bytes(signed)
    patch_path.write_bytes(patch)
    result_doc["apk"] = str(apk_path)
    result_doc["patch"] = str(patch_path)

    if ctx.obj["json"]:
        click.echo(json.dumps(result_doc, indent=2))
    else:
        rows = [
            [e["id"], str(e["changes"]), "; ".join(e["warnings"]) or "-"]
            for e in result_doc["extensions"]
        ]
        click.echo(_table(rows, ["extension", "changes", "warnings"]))
        click.echo(f"wrote {apk_path} ({len(signed)} bytes)")
        click.echo(f"wrote {patch_path} ({len(patch)} bytes, "
                   f"{100.0 * len(patch) / max(1, len(signed)):.1f}% of the APK)")


def _extend_local(original, extension_ids, extensions_dir, key_store, signatures, tree, force):
    repo = _load_repository(extensions_dir, signatures)
    snapshot = repo.snapshot
    unknown = [e for e in extension_ids if e not in snapshot.packages]
    if unknown:
        known = ", ".join(sorted(snapshot.packages)) or "(none)"
        _fail(EXIT_USAGE, f"unknown extension ids: {', '.join(unknown)}; known: {known}")
    packages = [snapshot.packages[e] for e in extension_ids]

    tree_map = None
    if tree is not None:
        from .extensions import load_tree

        tree_map = load_tree(tree)

    try:
        key = signer.generate_key(key_store)
        config = pipeline.PipelineConfig(key=key, signature_lists=snapshot.signature_lists)
        result = pipeline.run_pipeline(original, packages, config, force=force, tree=tree_map)
    except _PIPELINE_ERRORS as exc:
        _fail(EXIT_PIPELINE, str(exc))
    except AppGreaseError as exc:
        _fail(EXIT_IO, str(exc))

    doc = {
        "package": result.package_name,
        "extensions": [
            {"id": log.extension_id, "changes": log.changes, "warnings": log.warnings}
            for log in result.logs
        ],
    }
    return doc, result.signed_apk, result.patch


def _extend_remote(server_url, original, extension_ids, force):
    import httpx

    base = server_url.rstrip("/")
    try:
        with httpx.Client(base_url=base, timeout=600.0) as client:
            upload = client.post("/api/apps", files={"file": ("app.apk", original)})
            if upload.status_code != 201:
                _fail(EXIT_PIPELINE, f"upload rejected: {upload.status_code} {upload.text}")
            app_id = upload.json()["id"]
            created = client.post(
                "/api/jobs",
                json={"app_id": app_id, "extensions": list(extension_ids), "force": force},
            )
            if created.status_code == 404:
                _fail(EXIT_USAGE, created.json().get("detail", created.text))
            if created.status_code != 202:
                _fail(EXIT_PIPELINE, f"job rejected: {created.status_code} {created.text}")
            job_id = created.json()["id"]

            while True:
                doc = client.get(f"/api/jobs/{job_id}").json()
                if doc["state"] in ("done", "failed"):
                    break
                time.sleep(0.2)
            if doc["state"] == "failed":
                _fail(EXIT_PIPELINE, f"job failed: {doc['error']}")

            signed = client.get(f"/api/jobs/{job_id}/apk").content
            patch = client.get(f"/api/jobs/{job_id}/patch").content
    except httpx.HTTPError as exc:
        _fail(EXIT_IO, f"server unreachable: {exc}")

    return {"package": None, "extensions": doc["extensions"]}, signed, patch


@cli.command()
@click.argument("apk", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--signatures", type=click.Path(exists=True, path_type=Path),
              default=DEFAULT_SIGNATURES_PATH, show_default=False,
              help="Tracker signature list (bundled default if omitted).")
@click.pass_context
def detect(ctx, apk, signatures):
    """Scan an APK's bytecode for known tracker signatures."""
    try:
        app = decode_app(apk.read_bytes())
        hits = detect_trackers(app, load_signature_list(signatures))
    except AppGreaseError as exc:
        _fail(EXIT_IO, str(exc))
    if ctx.obj["json"]:
        click.echo(json.dumps([h.as_dict() for h in hits], indent=2))
    else:
        if not hits:
            click.echo("no known trackers detected")
        else:
            rows = [[h.tracker, h.pattern, h.dex_path, str(h.string_index)] for h in hits]
            click.echo(_table(rows, ["tracker", "pattern", "dex", "string"]))


@cli.command()
@click.argument("apk", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.pass_context
def verify(ctx, apk):
    """Check an APK's signing block; exits 1 if verification fails."""
    report = signer.verify_apk(apk.read_bytes())
    if ctx.obj["json"]:
        click.echo(json.dumps({
            "ok": report.ok,
            "reason": report.reason,
            "certificate_sha256": report.certificate_sha256,
        }, indent=2))
    elif report.ok:
        click.echo(f"PASS: certificate sha256 {report.certificate_sha256}")
    else:
        click.echo(f"FAIL: {report.reason}")
    if not report.ok:
        sys.exit(EXIT_IO)


@cli.command()
@click.argument("old", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.argument("new", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.argument("out", type=click.Path(dir_okay=False, path_type=Path))
def diff(old, new, out):
    """Write a binary patch that turns OLD into NEW."""
    patch_bytes = delta.make_patch(old.read_bytes(), new.read_bytes())
    try:
        out.write_bytes(patch_bytes)
    except OSError as exc:
        _fail(EXIT_IO, str(exc))
    click.echo(f"wrote {out} ({len(patch_bytes)} bytes)")


@cli.command()
@click.argument("old", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.argument("patchfile", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.argument("out", type=click.Path(dir_okay=False, path_type=Path))
def patch(old, patchfile, out):
    """Apply a binary patch to OLD, writing the reconstructed file."""
    try:
        new_bytes = delta.apply_patch(old.read_bytes(), patchfile.read_bytes())
        out.write_bytes(new_bytes)
    except AppGreaseError as exc:
        _fail(EXIT_PIPELINE, str(exc))
    except OSError as exc:
        _fail(EXIT_IO, str(exc))
    click.echo(f"wrote {out} ({len(new_bytes)} bytes)")


def main():
    cli(auto_envvar_prefix="APPGREASE")


if __name__ == "__main__":
    main()
