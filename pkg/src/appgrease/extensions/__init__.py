"""Declarative app extensions: package format, applicability, dispatch."""

from .apply import (
    ApplicabilityReport,
    DecodedApp,
    RuleResult,
    apply_extension,
    check_applicability,
    decode_app,
    detect_trackers,
    encode_app,
    inject_network_security_config,
    replacement_text,
    MANIFEST_ENTRY,
    NETSEC_CONFIG_ENTRY,
    NETSEC_CONFIG_REF,
)
from .model import (
    ActionLog,
    ActionOutcome,
    ApplicabilityRule,
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
    TypedValueSpec,
    load_extension,
    load_extension_dir,
    load_extension_path,
)
from .signatures import (
    DetectionHit,
    Signature,
    SignatureList,
    load_signature_list,
    parse_signature_list,
)
from .textpatch import apply_diff_patch, apply_regex_patch, load_tree, parse_unified_diff

__all__ = [
    "ActionLog",
    "ActionOutcome",
    "ApplicabilityReport",
    "ApplicabilityRule",
    "AxmlRemoveElement",
    "AxmlSetAttribute",
    "DecodedApp",
    "DetectionHit",
    "DexStringReplace",
    "ExtensionPackage",
    "FileAdd",
    "FileDiffPatch",
    "FileTextPatch",
    "ManifestEdit",
    "ManifestInsertElement",
    "NetworkSecurityConfigInject",
    "RuleResult",
    "Signature",
    "SignatureList",
    "TypedValueSpec",
    "MANIFEST_ENTRY",
    "NETSEC_CONFIG_ENTRY",
    "NETSEC_CONFIG_REF",
    "apply_diff_patch",
    "apply_extension",
    "apply_regex_patch",
    "check_applicability",
    "decode_app",
    "detect_trackers",
    "encode_app",
    "inject_network_security_config",
    "load_extension",
    "load_extension_dir",
    "load_extension_path",
    "load_signature_list",
    "load_tree",
    "parse_signature_list",
    "parse_unified_diff",
    "replacement_text",
]
