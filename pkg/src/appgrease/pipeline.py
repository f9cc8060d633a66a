"""The extend pipeline: decode, detect, apply, encode, sign, diff.

Used identically by the HTTP job worker and the CLI's local mode, so both
produce byte-identical artifacts for the same inputs and key.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import delta, signer
from .errors import NotApplicable
from .extensions import (
    ActionLog,
    DecodedApp,
    DetectionHit,
    ExtensionPackage,
    SignatureList,
    apply_extension,
    check_applicability,
    decode_app,
    detect_trackers,
    encode_app,
)

STAGES = ("decoding", "detecting", "applying", "encoding", "signing", "diffing")


@dataclass
class PipelineResult:
    signed_apk: bytes
    patch: bytes
    logs: list[ActionLog]
    detections: list[DetectionHit]
    package_name: str | None
    version_code: int | None
    version_name: str | None


@dataclass
class PipelineConfig:
    key: signer.SigningKey
    signature_lists: dict[str, SignatureList] = field(default_factory=dict)
    default_signatures: str = "default"
    block_size: int = delta.DEFAULT_BLOCK_SIZE


def check_selection(
    app: DecodedApp,
    packages: list[ExtensionPackage],
    signature_lists: dict[str, SignatureList],
    force: bool = False,
) -> None:
    """Raise NotApplicable naming every selected package that does not apply."""
    if force:
        return
    offending = [
        pkg.id
        for pkg in packages
        if not check_applicability(pkg, app.manifest, app.dexes, signature_lists).applicable
    ]
    if offending:
        raise NotApplicable(offending)


def run_pipeline(
    original: bytes,
    packages: list[ExtensionPackage],
    config: PipelineConfig,
    force: bool = False,
    tree: dict[str, str] | None = None,
    on_stage=None,
) -> PipelineResult:
    """Execute all stages; `on_stage(name)` fires as each stage begins."""

    def stage(name: str):
        if on_stage is not None:
            on_stage(name)

    stage("decoding")
    app = decode_app(original, tree=tree)

    stage("detecting")
    default_list = config.signature_lists.get(config.default_signatures)
    detections = detect_trackers(app, default_list) if default_list else []

    stage("applying")
    check_selection(app, packages, config.signature_lists, force=force)
    logs: list[ActionLog] = []
    for pkg in packages:
        app, log = apply_extension(app, pkg)
        logs.append(log)

    stage("encoding")
    extended = encode_app(app)

    stage("signing")
    signed = signer.sign_apk(extended, config.key)

    stage("diffing")
    patch = delta.make_patch(original, signed, block_size=config.block_size)

    return PipelineResult(
        signed_apk=signed,
        patch=patch,
        logs=logs,
        detections=detections,
        package_name=app.package_name(),
        version_code=app.version_code(),
        version_name=app.version_name(),
    )
