"""Regex and unified-diff patches over a decoded file tree.

"Decoded tree" means a directory of text files produced by an external
decoder (disassembled bytecode, decompiled resources). The engine never runs
a decoder itself; the tree is an optional input, loaded into a plain
{relative path: text} mapping, and tests feed it fixture trees.

Diff application is strict: hunk context must match exactly at the stated
position. A hunk whose result is already in place counts as applied with
zero changes, so re-running a patched app through the same extension is a
no-op instead of an error.
"""

from __future__ import annotations

import fnmatch
import re
from dataclasses import dataclass
from pathlib import Path

from ..errors import PatchContextMismatch


@dataclass(frozen=True)
class DiffHunk:
    old_start: int  # 1-based line number in the old file
    old_lines: tuple[str, ...]  # context + removed
    new_lines: tuple[str, ...]  # context + added


_HUNK_RE = re.compile(r"^@@ -(\d+)(?:,(\d+))? \+(\d+)(?:,(\d+))? @@")


def parse_unified_diff(text: str) -> list[DiffHunk]:
    """Parse a single-file unified diff body; raises on malformed input."""
    hunks: list[DiffHunk] = []
    lines = text.splitlines()
    i = 0
    while i < len(lines):
        line = lines[i]
        if line.startswith(("--- ", "+++ ", "diff ", "index ")) or not line.strip():
            i += 1
            continue
        m = _HUNK_RE.match(line)
        if not m:
            raise PatchContextMismatch(f"unexpected diff line: {line!r}")
        old_start = int(m.group(1))
        old_count = int(m.group(2) or "1")
        new_count = int(m.group(4) or "1")
        i += 1
        old_lines: list[str] = []
        new_lines: list[str] = []
        while i < len(lines) and (len(old_lines) < old_count or len(new_lines) < new_count):
            body = lines[i]
            if body.startswith(" "):
                old_lines.append(body[1:])
                new_lines.append(body[1:])
            elif body.startswith("-"):
                old_lines.append(body[1:])
            elif body.startswith("+"):
                new_lines.append(body[1:])
            elif body == "":
                old_lines.append("")
                new_lines.append("")
            elif body.startswith("\\"):
                pass  # "\ No newline at end of file"
            else:
                raise PatchContextMismatch(f"unexpected hunk line: {body!r}")
            i += 1
        if len(old_lines) != old_count or len(new_lines) != new_count:
            raise PatchContextMismatch("hunk body does not match its declared counts")
        hunks.append(
            DiffHunk(old_start=old_start, old_lines=tuple(old_lines), new_lines=tuple(new_lines))
        )
    if not hunks:
        raise PatchContextMismatch("diff contains no hunks")
    return hunks


def load_tree(root) -> dict[str, str]:
    """Read a decoded-tree directory into a {posix relpath: text} mapping."""
    base = Path(root)
    tree = {}
    for path in sorted(base.rglob("*")):
        if path.is_file():
            tree[path.relative_to(base).as_posix()] = path.read_text(encoding="utf-8")
    return tree


def write_tree(tree: dict[str, str], root) -> None:
    base = Path(root)
    for rel, text in tree.items():
        target = base / rel
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(text, encoding="utf-8")


def apply_regex_patch(
    tree: dict[str, str], glob: str, find: str, replace: str
) -> tuple[dict[str, str], int, int]:
    """Apply find/replace to every file matching the glob.

    Returns (new tree, total substitutions, files matched by the glob).
    Shell-style glob where `*` crosses directory separators.
    """
    pattern = re.compile(find, re.MULTILINE)
    new_tree = dict(tree)
    changes = 0
    files_matched = 0
    for path in sorted(tree):
        if not fnmatch.fnmatch(path, glob):
            continue
        files_matched += 1
        updated, n = pattern.subn(replace, tree[path])
        if n:
            new_tree[path] = updated
            changes += n
    return new_tree, changes, files_matched


def apply_diff_patch(tree: dict[str, str], path: str, diff: str) -> tuple[dict[str, str], int]:
    """Apply a unified diff to one file with exact context matching.

    Returns (new tree, hunks that changed the file). Hunks whose target text
    is already in its patched form count as zero-change successes; anything
    else that fails to line up raises PatchContextMismatch.
    """
    hunks = parse_unified_diff(diff)
    if path not in tree:
        raise PatchContextMismatch(f"no such file in the decoded tree: {path}")
    lines = tree[path].split("\n")
    changed = 0
    offset = 0  # line drift caused by earlier hunks
    for hunk in hunks:
        at = hunk.old_start - 1 + offset
        window = lines[at : at + len(hunk.old_lines)]
        if window == list(hunk.old_lines):
            lines[at : at + len(hunk.old_lines)] = list(hunk.new_lines)
            offset += len(hunk.new_lines) - len(hunk.old_lines)
            changed += 1
            continue
        applied_at = hunk.old_start - 1 + offset
        if lines[applied_at : applied_at + len(hunk.new_lines)] == list(hunk.new_lines):
            continue  # already applied
        raise PatchContextMismatch(
            f"{path}: context mismatch at line {hunk.old_start}"
        )
    new_tree = dict(tree)
    new_tree[path] = "\n".join(lines)
    return new_tree, changed
