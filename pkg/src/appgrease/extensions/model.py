"""Extension package format: manifest schema, action variants, loading.

A package is a ZIP archive holding `extension.json` plus auxiliary payload
files (diff bodies, injected resources); a bare directory with the same
layout also loads, which is convenient during development. Everything is
validated at load time: selectors parse, regexes compile, diffs are
well-formed, payload references resolve.
"""

from __future__ import annotations

import io
import json
import re
import zipfile
from dataclasses import dataclass, field
from pathlib import Path

from ..axml import ElementSelector, parse_selector
from ..dex import encode_mutf8
from ..errors import InvalidManifest, SelectorParseError, UnknownActionVariant
from .textpatch import parse_unified_diff

CATEGORIES = ("distraction", "privacy", "child-safety", "other")

RULE_KINDS = (
    "package-equals",
    "manifest-has-permission",
    "dex-contains-string",
    "signature-list-hit",
)

MANIFEST_NAME = "extension.json"


@dataclass(frozen=True)
class ApplicabilityRule:
    kind: str
    argument: str


@dataclass(frozen=True)
class TypedValueSpec:
    kind: str  # string | boolean | int | hex | reference
    value: object

    def as_tuple(self):
        return (self.kind, self.value)


# --- action variants ---------------------------------------------------------


@dataclass(frozen=True)
class ManifestEdit:
    selector: ElementSelector
    namespace: str | None
    name: str
    value: TypedValueSpec


@dataclass(frozen=True)
class ManifestInsertElement:
    parent: ElementSelector
    element: str
    attributes: tuple[tuple[str | None, str, TypedValueSpec], ...]


@dataclass(frozen=True)
class AxmlRemoveElement:
    entry: str
    selector: ElementSelector


@dataclass(frozen=True)
class AxmlSetAttribute:
    entry: str
    selector: ElementSelector
    namespace: str | None
    name: str
    value: TypedValueSpec


@dataclass(frozen=True)
class DexStringReplace:
    pattern: str
    policy: str  # billing-blank | hostname-blank | literal-same-length
    replacement: str | None = None


@dataclass(frozen=True)
class NetworkSecurityConfigInject:
    pass


@dataclass(frozen=True)
class FileAdd:
    entry: str
    data: bytes


@dataclass(frozen=True)
class FileTextPatch:
    glob: str
    find: str
    replace: str


@dataclass(frozen=True)
class FileDiffPatch:
    path: str
    diff: str


PatchAction = (
    ManifestEdit
    | ManifestInsertElement
    | AxmlRemoveElement
    | AxmlSetAttribute
    | DexStringReplace
    | NetworkSecurityConfigInject
    | FileAdd
    | FileTextPatch
    | FileDiffPatch
)


@dataclass(frozen=True)
class ExtensionPackage:
    id: str
    name: str
    description: str
    category: str
    scope: str  # "app-agnostic" | "app-specific"
    package: str | None  # target package for app-specific scope
    applicability: tuple[ApplicabilityRule, ...]
    actions: tuple[PatchAction, ...]

    def summary(self) -> dict:
        return {
            "id": self.id,
            "name": self.name,
            "description": self.description,
            "category": self.category,
            "scope": self.scope,
            "package": self.package,
        }


@dataclass
class ActionOutcome:
    index: int
    action: str
    changes: int
    warnings: list[str] = field(default_factory=list)


@dataclass
class ActionLog:
    extension_id: str
    outcomes: list[ActionOutcome] = field(default_factory=list)

    @property
    def changes(self) -> int:
        return sum(o.changes for o in self.outcomes)

    @property
    def warnings(self) -> list[str]:
        return [w for o in self.outcomes for w in o.warnings]


# --- loading -----------------------------------------------------------------


_ID_RE = re.compile(r"^[a-z0-9]+(?:[.\-][a-z0-9]+)+$")


def _want(obj: dict, key: str, types, where: str):
    if key not in obj:
        raise InvalidManifest(f"{where}: missing {key!r}")
    value = obj[key]
    if not isinstance(value, types):
        raise InvalidManifest(f"{where}: {key!r} has the wrong type")
    return value


def _parse_typed_value(raw, where: str) -> TypedValueSpec:
    if isinstance(raw, bool):
        return TypedValueSpec("boolean", raw)
    if isinstance(raw, int):
        return TypedValueSpec("int", raw)
    if isinstance(raw, str):
        return TypedValueSpec("string", raw)
    if isinstance(raw, dict):
        kind = _want(raw, "type", str, where)
        value = _want(raw, "value", (str, int, bool), where)
        if kind not in ("string", "boolean", "int", "hex", "reference"):
            raise InvalidManifest(f"{where}: unknown value type {kind!r}")
        return TypedValueSpec(kind, value)
    raise InvalidManifest(f"{where}: cannot interpret value {raw!r}")


def _parse_selector(text: str, where: str) -> ElementSelector:
    try:
        return parse_selector(text)
    except SelectorParseError as exc:
        raise SelectorParseError(f"{where}: {exc}") from None


def _parse_regex(text: str, where: str) -> str:
    try:
        re.compile(text)
    except re.error as exc:
        raise SelectorParseError(f"{where}: bad regex: {exc}") from None
    return text


def _parse_attributes(raw, where: str):
    attrs = []
    for i, item in enumerate(raw):
        if not isinstance(item, dict):
            raise InvalidManifest(f"{where}: attribute #{i} must be an object")
        name = _want(item, "name", str, where)
        ns = item.get("namespace")
        if ns is not None and not isinstance(ns, str):
            raise InvalidManifest(f"{where}: attribute namespace must be a string")
        value = _parse_typed_value(_want(item, "value", object, where), where)
        attrs.append((ns, name, value))
    return tuple(attrs)


def _parse_action(raw: dict, index: int, payloads: dict[str, bytes]) -> PatchAction:
    where = f"action #{index}"
    if not isinstance(raw, dict):
        raise InvalidManifest(f"{where}: must be an object")
    variant = _want(raw, "action", str, where)

    if variant == "manifest-edit":
        return ManifestEdit(
            selector=_parse_selector(_want(raw, "selector", str, where), where),
            namespace=raw.get("namespace"),
            name=_want(raw, "name", str, where),
            value=_parse_typed_value(_want(raw, "value", object, where), where),
        )
    if variant == "manifest-insert-element":
        return ManifestInsertElement(
            parent=_parse_selector(_want(raw, "parent", str, where), where),
            element=_want(raw, "element", str, where),
            attributes=_parse_attributes(raw.get("attributes", []), where),
        )
    if variant == "axml-remove-element":
        return AxmlRemoveElement(
            entry=_want(raw, "entry", str, where),
            selector=_parse_selector(_want(raw, "selector", str, where), where),
        )
    if variant == "axml-set-attribute":
        return AxmlSetAttribute(
            entry=_want(raw, "entry", str, where),
            selector=_parse_selector(_want(raw, "selector", str, where), where),
            namespace=raw.get("namespace"),
            name=_want(raw, "name", str, where),
            value=_parse_typed_value(_want(raw, "value", object, where), where),
        )
    if variant == "dex-string-replace":
        pattern = _want(raw, "pattern", str, where)
        policy = _want(raw, "policy", str, where)
        if policy not in ("billing-blank", "hostname-blank", "literal-same-length"):
            raise InvalidManifest(f"{where}: unknown policy {policy!r}")
        replacement = raw.get("replacement")
        if policy == "literal-same-length":
            if not isinstance(replacement, str):
                raise InvalidManifest(f"{where}: literal-same-length needs a replacement")
            if len(encode_mutf8(replacement)) != len(encode_mutf8(pattern)):
                raise InvalidManifest(f"{where}: replacement must match the pattern byte length")
        return DexStringReplace(pattern=pattern, policy=policy, replacement=replacement)
    if variant == "network-security-config-inject":
        return NetworkSecurityConfigInject()
    if variant == "file-add":
        return FileAdd(
            entry=_want(raw, "entry", str, where),
            data=_payload(raw, payloads, where),
        )
    if variant == "file-text-patch":
        return FileTextPatch(
            glob=_want(raw, "glob", str, where),
            find=_parse_regex(_want(raw, "find", str, where), where),
            replace=_want(raw, "replace", str, where),
        )
    if variant == "file-diff-patch":
        if "diff" in raw:
            diff = _want(raw, "diff", str, where)
        else:
            diff = _payload(raw, payloads, where).decode("utf-8")
        parse_unified_diff(diff)  # validates
        return FileDiffPatch(path=_want(raw, "path", str, where), diff=diff)

    raise UnknownActionVariant(f"{where}: unknown action variant {variant!r}")


def _payload(raw: dict, payloads: dict[str, bytes], where: str) -> bytes:
    ref = _want(raw, "payload", str, where)
    if ref not in payloads:
        raise InvalidManifest(f"{where}: payload file {ref!r} not in the package")
    return payloads[ref]


def load_extension(data: bytes) -> ExtensionPackage:
    """Load and fully validate a packaged extension (ZIP bytes)."""
    try:
        archive = zipfile.ZipFile(io.BytesIO(data))
        names = archive.namelist()
        payloads = {n: archive.read(n) for n in names if not n.endswith("/")}
    except zipfile.BadZipFile as exc:
        raise InvalidManifest(f"not a package archive: {exc}") from None
    if MANIFEST_NAME not in payloads:
        raise InvalidManifest(f"package has no {MANIFEST_NAME}")
    return _load_manifest(payloads[MANIFEST_NAME], payloads)


def load_extension_dir(path) -> ExtensionPackage:
    """Load an unpacked package directory (development layout)."""
    root = Path(path)
    manifest = root / MANIFEST_NAME
    if not manifest.is_file():
        raise InvalidManifest(f"{root} has no {MANIFEST_NAME}")
    payloads = {
        str(p.relative_to(root)).replace("\\", "/"): p.read_bytes()
        for p in root.rglob("*")
        if p.is_file()
    }
    return _load_manifest(payloads[MANIFEST_NAME], payloads)


def _load_manifest(manifest_bytes: bytes, payloads: dict[str, bytes]) -> ExtensionPackage:
    try:
        doc = json.loads(manifest_bytes)
    except json.JSONDecodeError as exc:
        raise InvalidManifest(f"manifest is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise InvalidManifest("manifest must be a JSON object")

    ext_id = _want(doc, "id", str, "manifest")
    if not _ID_RE.match(ext_id):
        raise InvalidManifest(f"id {ext_id!r} is not a reverse-domain identifier")
    category = _want(doc, "category", str, "manifest")
    if category not in CATEGORIES:
        raise InvalidManifest(f"unknown category {category!r}")
    scope = _want(doc, "scope", str, "manifest")
    if scope not in ("app-agnostic", "app-specific"):
        raise InvalidManifest(f"unknown scope {scope!r}")
    package = doc.get("package")
    if scope == "app-specific" and not isinstance(package, str):
        raise InvalidManifest("app-specific packages must name their target package")

    rules = []
    for i, raw in enumerate(doc.get("applicability", [])):
        where = f"applicability rule #{i}"
        if not isinstance(raw, dict):
            raise InvalidManifest(f"{where}: must be an object")
        kind = _want(raw, "kind", str, where)
        if kind not in RULE_KINDS:
            raise InvalidManifest(f"{where}: unknown kind {kind!r}")
        rules.append(ApplicabilityRule(kind=kind, argument=_want(raw, "argument", str, where)))

    if scope == "app-specific" and not any(
        r.kind == "package-equals" and r.argument == package for r in rules
    ):
        raise InvalidManifest("app-specific packages need a package-equals rule for their target")

    raw_actions = _want(doc, "actions", list, "manifest")
    actions = tuple(_parse_action(raw, i, payloads) for i, raw in enumerate(raw_actions))

    return ExtensionPackage(
        id=ext_id,
        name=_want(doc, "name", str, "manifest"),
        description=_want(doc, "description", str, "manifest"),
        category=category,
        scope=scope,
        package=package if scope == "app-specific" else None,
        applicability=tuple(rules),
        actions=actions,
    )


def load_extension_path(path) -> ExtensionPackage:
    p = Path(path)
    if p.is_dir():
        return load_extension_dir(p)
    return load_extension(p.read_bytes())
