"""Applicability checks and the ordered action dispatcher.

apply_extension is atomic: all state is value-like (copy-on-mutate archives,
documents, DEX images), so a failing action simply discards the working copy
and the caller's app is untouched.

Re-application is predictable: actions that find nothing to change succeed
with zero changes, so the same extension can be re-run after an app update.
Replacement text for DEX edits is generated deterministically from
(extension id, original string); two runs produce byte-identical output.
"""

from __future__ import annotations

import hashlib
import re
import string
from dataclasses import dataclass, field, replace as dc_replace

from .. import axml, container, dex
from ..errors import (
    ActionFailed,
    AppGreaseError,
    MalformedApk,
    NoFilesMatched,
    TreeModeUnavailable,
)
from .model import (
    ActionLog,
    ActionOutcome,
    AxmlRemoveElement,
    AxmlSetAttribute,
    DexStringReplace,
    ExtensionPackage,
    FileAdd,
    FileDiffPatch,
    FileTextPatch,
    ManifestEdit,
    ManifestInsertElement,
    NetworkSecurityConfigInject,
)
from .signatures import DetectionHit, SignatureList
from .textpatch import apply_diff_patch, apply_regex_patch

MANIFEST_ENTRY = "AndroidManifest.xml"
NETSEC_CONFIG_ENTRY = "res/xml/network_security_config.xml"
# Placeholder resource id for the injected config; rewriting resources.arsc
# to register it is out of scope, so the reference is fixed and documented.
NETSEC_CONFIG_REF = 0x7F99000F

_DEX_NAME_RE = re.compile(r"^classes([2-9]\d*)?\.dex$")


@dataclass
class DecodedApp:
    archive: container.ApkArchive
    manifest: axml.AxmlDocument
    dexes: dict[str, dex.DexImage]
    docs: dict[str, axml.AxmlDocument] = field(default_factory=dict)
    tree: dict[str, str] | None = None

    def package_name(self) -> str | None:
        attr = axml.get_attribute(self.manifest, self.manifest.root, None, "package")
        return self.manifest.text(attr.value_data) if attr else None

    def version_code(self) -> int | None:
        attr = axml.get_attribute(self.manifest, self.manifest.root, axml.ANDROID_NS, "versionCode")
        return attr.value_data if attr else None

    def version_name(self) -> str | None:
        attr = axml.get_attribute(self.manifest, self.manifest.root, axml.ANDROID_NS, "versionName")
        if attr is None:
            return None
        return axml.attribute_text(self.manifest, attr)


def decode_app(data: bytes, tree: dict[str, str] | None = None) -> DecodedApp:
    """Open an APK and parse its manifest and DEX entries."""
    archive = container.open_archive(data)
    if not archive.has_entry(MANIFEST_ENTRY):
        raise MalformedApk("no AndroidManifest.xml entry")
    try:
        manifest = axml.parse_axml(archive.read(MANIFEST_ENTRY))
    except AppGreaseError as exc:
        raise MalformedApk(f"manifest does not parse: {exc}") from exc
    dexes = {}
    for name in archive.names():
        if _DEX_NAME_RE.match(name):
            dexes[name] = dex.parse_dex(archive.read(name))
    return DecodedApp(archive=archive, manifest=manifest, dexes=dexes, tree=tree)


def encode_app(app: DecodedApp) -> bytes:
    """Write manifest, edited documents, and resealed DEX images back out."""
    archive = app.archive
    archive = container.replace_entry(archive, MANIFEST_ENTRY, axml.serialize_axml(app.manifest))
    for path, doc in app.docs.items():
        archive = container.replace_entry(archive, path, axml.serialize_axml(doc))
    for path, image in app.dexes.items():
        sealed = dex.reseal(image)
        if sealed.data != app.archive.read(path):
            archive = container.replace_entry(archive, path, sealed.data)
    return container.write_archive(archive)


# --- applicability -----------------------------------------------------------


@dataclass
class RuleResult:
    kind: str
    argument: str
    passed: bool


@dataclass
class ApplicabilityReport:
    applicable: bool
    rules: list[RuleResult]
    hits: list[DetectionHit] = field(default_factory=list)


def check_applicability(
    pkg: ExtensionPackage,
    manifest: axml.AxmlDocument,
    dexes: dict[str, dex.DexImage],
    signature_lists: dict[str, SignatureList] | None = None,
) -> ApplicabilityReport:
    """Evaluate every rule; a package with no rules is vacuously applicable."""
    signature_lists = signature_lists or {}
    results = []
    hits: list[DetectionHit] = []
    for rule in pkg.applicability:
        if rule.kind == "package-equals":
            attr = axml.get_attribute(manifest, manifest.root, None, "package")
            passed = attr is not None and manifest.text(attr.value_data) == rule.argument
        elif rule.kind == "manifest-has-permission":
            passed = False
            for handle in axml.find_elements(manifest, "uses-permission"):
                attr = axml.get_attribute(manifest, handle.node, axml.ANDROID_NS, "name")
                if attr is not None and axml.attribute_text(manifest, attr) == rule.argument:
                    passed = True
                    break
        elif rule.kind == "dex-contains-string":
            passed = any(dex.find_strings(img, rule.argument) for img in dexes.values())
        elif rule.kind == "signature-list-hit":
            sigs = signature_lists.get(rule.argument)
            rule_hits = scan_dexes(dexes, sigs) if sigs else []
            hits.extend(rule_hits)
            passed = bool(rule_hits)
        else:  # unreachable: loader rejects unknown kinds
            passed = False
        results.append(RuleResult(kind=rule.kind, argument=rule.argument, passed=passed))
    return ApplicabilityReport(
        applicable=all(r.passed for r in results),
        rules=results,
        hits=hits,
    )


def scan_dexes(dexes: dict[str, dex.DexImage], signatures: SignatureList) -> list[DetectionHit]:
    hits = []
    for path in sorted(dexes):
        for hit in dex.scan_signatures(dexes[path], signatures):
            hits.append(dc_replace(hit, dex_path=path))
    hits.sort(key=lambda h: (h.dex_path, h.string_index, h.tracker))
    return hits


def detect_trackers(app: DecodedApp, signatures: SignatureList) -> list[DetectionHit]:
    return scan_dexes(app.dexes, signatures)


# --- deterministic replacement text -------------------------------------------


def _letters(seed: bytes, n: int) -> str:
    out = []
    counter = 0
    while len(out) < n:
        block = hashlib.sha256(seed + counter.to_bytes(4, "little")).digest()
        for byte in block:
            out.append(string.ascii_lowercase[byte % 26])
            if len(out) == n:
                break
        counter += 1
    return "".join(out)


def replacement_text(extension_id: str, pattern: str, policy: str, literal: str | None) -> str:
    """Same-byte-length stand-in for the pattern, stable across runs."""
    if policy == "literal-same-length":
        assert literal is not None
        return literal
    n = len(dex.encode_mutf8(pattern))
    seed = extension_id.encode() + b"\x00" + pattern.encode("utf-8", "surrogatepass")
    attempt = 0
    while True:
        salted = seed if attempt == 0 else seed + b"\x00" + attempt.to_bytes(2, "little")
        if policy == "hostname-blank" and n >= 9:
            candidate = _letters(salted, n - 8) + ".invalid"
        else:
            candidate = _letters(salted, n)
        if pattern not in candidate:
            return candidate
        attempt += 1


# --- action dispatch -----------------------------------------------------------


def apply_extension(app: DecodedApp, pkg: ExtensionPackage) -> tuple[DecodedApp, ActionLog]:
    """Apply actions strictly in order; any failure leaves `app` untouched."""
    work = dc_replace(
        app,
        dexes=dict(app.dexes),
        docs=dict(app.docs),
        tree=dict(app.tree) if app.tree is not None else None,
    )
    log = ActionLog(extension_id=pkg.id)
    for index, action in enumerate(pkg.actions):
        try:
            work, outcome = _apply_action(work, action, index, pkg)
        except TreeModeUnavailable:
            raise
        except ActionFailed:
            raise
        except AppGreaseError as exc:
            raise ActionFailed(index, exc) from exc
        log.outcomes.append(outcome)
    return work, log


def _doc_for(app: DecodedApp, entry: str) -> axml.AxmlDocument:
    if entry == MANIFEST_ENTRY:
        return app.manifest
    if entry in app.docs:
        return app.docs[entry]
    return axml.parse_axml(app.archive.read(entry))


def _store_doc(app: DecodedApp, entry: str, doc: axml.AxmlDocument) -> DecodedApp:
    if entry == MANIFEST_ENTRY:
        return dc_replace(app, manifest=doc)
    docs = dict(app.docs)
    docs[entry] = doc
    return dc_replace(app, docs=docs)


def _attr_equals(doc, attr, value_tuple) -> bool:
    """Compare an attribute against a desired (kind, value) without interning."""
    kind, want = value_tuple
    if kind == "string":
        return attr.value_type == axml.TYPE_STRING and doc.string_pool.strings[
            attr.value_data
        ] == str(want)
    if kind == "boolean":
        return attr.value_type == axml.TYPE_INT_BOOLEAN and bool(attr.value_data) == bool(want)
    if kind == "int":
        return attr.value_type == axml.TYPE_INT_DEC and attr.value_data == int(want) & 0xFFFFFFFF
    if kind == "hex":
        return attr.value_type == axml.TYPE_INT_HEX and attr.value_data == int(want) & 0xFFFFFFFF
    if kind == "reference":
        want_int = int(want, 16) if isinstance(want, str) else int(want)
        return attr.value_type == axml.TYPE_REFERENCE and attr.value_data == want_int & 0xFFFFFFFF
    return False


def _set_attribute_everywhere(doc, selector, namespace, name, value) -> tuple:
    """Set the attribute on every match; skips matches already at the value.

    Handles go stale across edits, so matches are re-found after each one.
    """
    changed = 0
    position = 0
    while True:
        handles = axml.find_elements(doc, selector)
        if position >= len(handles):
            break
        handle = handles[position]
        position += 1
        existing = axml.get_attribute(doc, handle.node, namespace, name)
        if existing is not None and _attr_equals(doc, existing, value):
            continue
        doc = axml.set_attribute(doc, handle, namespace, name, value)
        changed += 1
    return doc, changed


def _apply_action(
    app: DecodedApp, action, index: int, pkg: ExtensionPackage
) -> tuple[DecodedApp, ActionOutcome]:
    label = type(action).__name__
    warnings: list[str] = []

    if isinstance(action, ManifestEdit):
        doc, changed = _set_attribute_everywhere(
            app.manifest, action.selector, action.namespace, action.name, action.value.as_tuple()
        )
        return _store_doc(app, MANIFEST_ENTRY, doc), ActionOutcome(index, label, changed)

    if isinstance(action, ManifestInsertElement):
        doc = app.manifest
        changed = 0
        for handle in axml.find_elements(doc, action.parent):
            if _has_equal_child(doc, handle.node, action):
                continue
            attrs = [(ns, name, value.as_tuple()) for ns, name, value in action.attributes]
            doc = axml.insert_element(doc, handle, action.element, attrs)
            changed += 1
            break  # one insertion per application; re-runs are no-ops
        return _store_doc(app, MANIFEST_ENTRY, doc), ActionOutcome(index, label, changed)

    if isinstance(action, AxmlRemoveElement):
        doc = _doc_for(app, action.entry)
        changed = 0
        while True:
            handles = axml.find_elements(doc, action.selector)
            if not handles:
                break
            doc = axml.remove_element(doc, handles[-1])
            changed += 1
        return _store_doc(app, action.entry, doc), ActionOutcome(index, label, changed)

    if isinstance(action, AxmlSetAttribute):
        doc = _doc_for(app, action.entry)
        doc, changed = _set_attribute_everywhere(
            doc, action.selector, action.namespace, action.name, action.value.as_tuple()
        )
        return _store_doc(app, action.entry, doc), ActionOutcome(index, label, changed)

    if isinstance(action, DexStringReplace):
        replacement = replacement_text(pkg.id, action.pattern, action.policy, action.replacement)
        changed = 0
        dexes = dict(app.dexes)
        for path in sorted(dexes):
            image = dexes[path]
            for entry in dex.find_strings(image, action.pattern):
                text = entry.text
                changed += text.count(action.pattern)
                payload = dex.encode_mutf8(text.replace(action.pattern, replacement))
                image = dex.replace_string_same_length(
                    image, image.string_entries[entry.index], payload
                )
            dexes[path] = image
        return dc_replace(app, dexes=dexes), ActionOutcome(index, label, changed)

    if isinstance(action, NetworkSecurityConfigInject):
        return inject_network_security_config(app, outcome_index=index)

    if isinstance(action, FileAdd):
        if app.archive.has_entry(action.entry) and app.archive.read(action.entry) == action.data:
            return app, ActionOutcome(index, label, 0)
        archive = container.add_entry(app.archive, action.entry, action.data)
        return dc_replace(app, archive=archive), ActionOutcome(index, label, 1)

    if isinstance(action, FileTextPatch):
        if app.tree is None:
            raise TreeModeUnavailable("text patch requires a decoded tree")
        tree, changed, files_matched = apply_regex_patch(
            app.tree, action.glob, action.find, action.replace
        )
        if files_matched == 0:
            if pkg.scope == "app-specific":
                raise NoFilesMatched(f"no files match {action.glob!r}")
            warnings.append(f"no files match {action.glob!r}")
        return dc_replace(app, tree=tree), ActionOutcome(index, label, changed, warnings)

    if isinstance(action, FileDiffPatch):
        if app.tree is None:
            raise TreeModeUnavailable("diff patch requires a decoded tree")
        tree, changed = apply_diff_patch(app.tree, action.path, action.diff)
        return dc_replace(app, tree=tree), ActionOutcome(index, label, changed)

    raise ActionFailed(index, f"unhandled action {label}")


def _has_equal_child(doc, parent, action: ManifestInsertElement) -> bool:
    want = {(ns, name, value.as_tuple()) for ns, name, value in action.attributes}
    for child in parent.children:
        if not isinstance(child, axml.XmlNode):
            continue
        if axml.node_name(doc, child) != action.element:
            continue
        have = set()
        for attr in child.attributes:
            ns = doc.text(attr.namespace) if attr.namespace != axml.NO_INDEX else None
            value = _friendly_value(doc, attr)
            have.add((ns, doc.text(attr.name), value))
        if have == want:
            return True
    return False


def _friendly_value(doc, attr) -> tuple:
    if attr.value_type == axml.TYPE_STRING:
        return ("string", doc.string_pool.strings[attr.value_data])
    if attr.value_type == axml.TYPE_INT_BOOLEAN:
        return ("boolean", bool(attr.value_data))
    if attr.value_type == axml.TYPE_INT_HEX:
        return ("hex", attr.value_data)
    if attr.value_type == axml.TYPE_REFERENCE:
        return ("reference", attr.value_data)
    return ("int", attr.value_data)


# --- network security config ----------------------------------------------------


def _build_netsec_config() -> axml.AxmlDocument:
    def build(doc):
        root = axml.NodeHandle(path=(), node=doc.root)
        doc = axml.insert_element(doc, root, "base-config")
        base = axml.find_elements(doc, "base-config")[0]
        doc = axml.insert_element(doc, base, "trust-anchors")
        anchors = axml.find_elements(doc, "trust-anchors")[0]
        doc = axml.insert_element(doc, anchors, "certificates", [(None, "src", "system")])
        anchors = axml.find_elements(doc, "trust-anchors")[0]
        doc = axml.insert_element(doc, anchors, "certificates", [(None, "src", "user")])
        return doc

    return axml.build_document("network-security-config", build, utf8=True)


def inject_network_security_config(
    app: DecodedApp, outcome_index: int = 0
) -> tuple[DecodedApp, ActionOutcome]:
    """Trust user-installed certificates and drop any certificate pins.

    Creates (or rewrites) the config resource and points the manifest's
    application element at it. Idempotent: a second run changes nothing.
    """
    changed = 0

    if app.archive.has_entry(NETSEC_CONFIG_ENTRY):
        doc = _doc_for(app, NETSEC_CONFIG_ENTRY)
        while True:
            pins = axml.find_elements(doc, "pin-set")
            if not pins:
                break
            doc = axml.remove_element(doc, pins[-1])
            changed += 1
        doc, added = _ensure_user_trust(doc)
        changed += added
        if axml.serialize_axml(doc) != app.archive.read(NETSEC_CONFIG_ENTRY):
            app = _store_doc(app, NETSEC_CONFIG_ENTRY, doc)
        else:
            changed = 0
    else:
        config = axml.serialize_axml(_build_netsec_config())
        archive = container.add_entry(app.archive, NETSEC_CONFIG_ENTRY, config)
        app = dc_replace(app, archive=archive)
        changed += 1

    applications = axml.find_elements(app.manifest, "manifest/application")
    if not applications:
        raise ActionFailed(outcome_index, "manifest has no application element")
    attr = axml.get_attribute(
        app.manifest, applications[0].node, axml.ANDROID_NS, "networkSecurityConfig"
    )
    if attr is None or attr.value_data != NETSEC_CONFIG_REF:
        manifest = axml.set_attribute(
            app.manifest,
            applications[0],
            axml.ANDROID_NS,
            "networkSecurityConfig",
            ("reference", NETSEC_CONFIG_REF),
        )
        app = dc_replace(app, manifest=manifest)
        changed += 1

    return app, ActionOutcome(outcome_index, "NetworkSecurityConfigInject", changed)


def _ensure_user_trust(doc: axml.AxmlDocument) -> tuple[axml.AxmlDocument, int]:
    added = 0
    anchors = axml.find_elements(doc, "trust-anchors")
    if not anchors:
        roots = [axml.NodeHandle(path=(), node=doc.root)]
        doc = axml.insert_element(doc, roots[0], "trust-anchors")
        anchors = axml.find_elements(doc, "trust-anchors")
        added += 1
    for src in ("system", "user"):
        found = False
        for handle in axml.find_elements(doc, "trust-anchors/certificates"):
            attr = axml.get_attribute(doc, handle.node, None, "src")
            if attr is not None and axml.attribute_text(doc, attr) == src:
                found = True
        if not found:
            anchor = axml.find_elements(doc, "trust-anchors")[0]
            doc = axml.insert_element(doc, anchor, "certificates", [(None, "src", src)])
            added += 1
    return doc, added
