"""Bundled default data: example extension packages and the signature list."""

from pathlib import Path

BUILTIN_DIR = Path(__file__).parent
DEFAULT_EXTENSIONS_DIR = BUILTIN_DIR / "extensions"
DEFAULT_SIGNATURES_PATH = BUILTIN_DIR / "signatures" / "default.csv"
