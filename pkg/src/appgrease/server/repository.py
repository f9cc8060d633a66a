"""Extension repository: loaded packages plus signature lists.

Reload is atomic: a full snapshot is built off to the side and swapped in
with one attribute assignment, so readers never observe partial state.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from ..builtin import DEFAULT_EXTENSIONS_DIR, DEFAULT_SIGNATURES_PATH
from ..errors import AppGreaseError, RepositoryLoadError
from ..extensions import ExtensionPackage, SignatureList, load_extension_path, load_signature_list


@dataclass(frozen=True)
class RepositorySnapshot:
    packages: dict[str, ExtensionPackage]
    signature_lists: dict[str, SignatureList]

    def ordered_packages(self) -> list[ExtensionPackage]:
        return [self.packages[k] for k in sorted(self.packages)]


class RepositoryIndex:
    def __init__(self, extensions_dir: Path | None = None, signatures_path: Path | None = None):
        self.extensions_dir = Path(extensions_dir) if extensions_dir else DEFAULT_EXTENSIONS_DIR
        self.signatures_path = (
            Path(signatures_path) if signatures_path else DEFAULT_SIGNATURES_PATH
        )
        self._snapshot = _build_snapshot(self.extensions_dir, self.signatures_path)

    @property
    def snapshot(self) -> RepositorySnapshot:
        return self._snapshot

    def reload(self) -> RepositorySnapshot:
        self._snapshot = _build_snapshot(self.extensions_dir, self.signatures_path)
        return self._snapshot


def _package_sources(extensions_dir: Path):
    if not extensions_dir.is_dir():
        raise RepositoryLoadError(f"extensions directory {extensions_dir} does not exist")
    for child in sorted(extensions_dir.iterdir()):
        if child.is_dir() and (child / "extension.json").is_file():
            yield child
        elif child.is_file() and child.suffix == ".zip":
            yield child


def _build_snapshot(extensions_dir: Path, signatures_path: Path) -> RepositorySnapshot:
    packages: dict[str, ExtensionPackage] = {}
    for source in _package_sources(extensions_dir):
        try:
            pkg = load_extension_path(source)
        except AppGreaseError as exc:
            raise RepositoryLoadError(f"{source}: {exc}") from exc
        if pkg.id in packages:
            raise RepositoryLoadError(f"{source}: duplicate extension id {pkg.id!r}")
        packages[pkg.id] = pkg

    signature_lists: dict[str, SignatureList] = {}
    if signatures_path.is_file():
        try:
            sigs = load_signature_list(signatures_path, name="default")
        except AppGreaseError as exc:
            raise RepositoryLoadError(f"{signatures_path}: {exc}") from exc
        signature_lists[sigs.name] = sigs
    elif signatures_path != DEFAULT_SIGNATURES_PATH:
        raise RepositoryLoadError(f"signature list {signatures_path} does not exist")

    return RepositorySnapshot(packages=packages, signature_lists=signature_lists)
