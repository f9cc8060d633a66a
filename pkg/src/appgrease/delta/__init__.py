"""Compact binary deltas between an original and a rewritten APK.

Patch construction is rsync-style: fixed-size blocks of the old file are
indexed by a 32-bit rolling hash; a window slides over the new file and every
hash candidate is confirmed byte-for-byte, then extended greedily. The match
scan is the hot loop; a compiled kernel is used when available and a
NumPy-vectorized fallback otherwise (APPGREASE_PURE_DELTA=1 forces the
fallback). Both kernels produce identical matches.

Wire format (little-endian, documented in docs/FORMATS.md):

    magic "AXPW" | u16 version=1 | u8 flags | u8 reserved
    | 32B sha256(old) | 32B sha256(new) | u64 new length
    | u64 instruction-stream length | instructions
    | u64 literal-section stored length | literals

Instructions: 0x00 Copy(uvarint old offset, uvarint length),
0x01 Insert(uvarint length, bytes taken sequentially from the literal
section). Flag bit 0 marks a deflate-compressed literal section.
"""

from __future__ import annotations

import hashlib
import os
import struct
import zlib
from dataclasses import dataclass

from .._varint import decode_uleb128, encode_uleb128
from ..errors import CorruptPatch, OldFileMismatch

if os.environ.get("APPGREASE_PURE_DELTA"):
    from . import _scan_py as _kernel

    KERNEL = "python"
else:
    try:
        from . import _scan as _kernel  # type: ignore[attr-defined]

        KERNEL = "compiled"
    except ImportError:
        from . import _scan_py as _kernel

        KERNEL = "python"

MAGIC = b"AXPW"
VERSION = 1
FLAG_DEFLATED_LITERALS = 0x01
DEFAULT_BLOCK_SIZE = 4096

_HEADER = struct.Struct("<4sHBB32s32sQQ")


def kernel_name() -> str:
    return KERNEL


@dataclass(frozen=True)
class PatchHeader:
    version: int
    flags: int
    old_sha256: bytes
    new_sha256: bytes
    new_length: int


def scan_matches(old: bytes, new: bytes, block_size: int = DEFAULT_BLOCK_SIZE):
    """Greedy left-to-right copy matches as (new_offset, old_offset, length)."""
    if not old or not new:
        return []
    bs = min(block_size, len(old))
    if len(new) < bs:
        return []
    return _kernel.scan_matches(old, new, bs)


def make_patch(
    old: bytes, new: bytes, block_size: int = DEFAULT_BLOCK_SIZE, compress: bool = True
) -> bytes:
    """Build a patch such that apply_patch(old, patch) == new."""
    matches = scan_matches(old, new, block_size)

    instr = bytearray()
    literals = bytearray()
    pos = 0
    pending: tuple[int, int] | None = None  # (old_offset, length) of an open Copy

    def flush_copy():
        nonlocal pending
        if pending is not None:
            instr.append(0x00)
            instr.extend(encode_uleb128(pending[0]))
            instr.extend(encode_uleb128(pending[1]))
            pending = None

    for new_off, old_off, length in matches:
        if new_off > pos:
            flush_copy()
            gap = new[pos:new_off]
            instr.append(0x01)
            instr += encode_uleb128(len(gap))
            literals += gap
        if pending is not None and pending[0] + pending[1] == old_off:
            pending = (pending[0], pending[1] + length)
        else:
            flush_copy()
            pending = (old_off, length)
        pos = new_off + length
    flush_copy()
    if pos < len(new):
        tail = new[pos:]
        instr.append(0x01)
        instr += encode_uleb128(len(tail))
        literals += tail

    flags = 0
    lit_out = bytes(literals)
    if compress and lit_out:
        packed = zlib.compress(lit_out, 9)
        if len(packed) < len(lit_out):
            lit_out = packed
            flags |= FLAG_DEFLATED_LITERALS

    header = _HEADER.pack(
        MAGIC,
        VERSION,
        flags,
        0,
        hashlib.sha256(old).digest(),
        hashlib.sha256(new).digest(),
        len(new),
        len(instr),
    )
    return header + bytes(instr) + struct.pack("<Q", len(lit_out)) + lit_out


def patch_header(patch: bytes) -> PatchHeader:
    if len(patch) < _HEADER.size:
        raise CorruptPatch("patch shorter than its header")
    magic, version, flags, _res, old_sha, new_sha, new_len, _instr_len = _HEADER.unpack_from(
        patch, 0
    )
    if magic != MAGIC:
        raise CorruptPatch("bad magic")
    if version != VERSION:
        raise CorruptPatch(f"unsupported version {version}")
    if flags & ~FLAG_DEFLATED_LITERALS:
        raise CorruptPatch(f"unknown flags {flags:#04x}")
    return PatchHeader(
        version=version, flags=flags, old_sha256=old_sha, new_sha256=new_sha, new_length=new_len
    )


def apply_patch(old: bytes, patch: bytes) -> bytes:
    """Reconstruct the new file; every read is bounds-checked."""
    header = patch_header(patch)
    if hashlib.sha256(old).digest() != header.old_sha256:
        raise OldFileMismatch("old file digest does not match the patch header")

    instr_len = _HEADER.unpack_from(patch, 0)[7]
    instr_start = _HEADER.size
    instr_end = instr_start + instr_len
    if instr_end + 8 > len(patch):
        raise CorruptPatch("truncated instruction stream")
    (lit_len,) = struct.unpack_from("<Q", patch, instr_end)
    lit_start = instr_end + 8
    if lit_start + lit_len != len(patch):
        raise CorruptPatch("literal section length mismatch")
    literals = patch[lit_start:]
    if header.flags & FLAG_DEFLATED_LITERALS:
        try:
            literals = zlib.decompress(literals)
        except zlib.error as exc:
            raise CorruptPatch(f"bad literal stream: {exc}") from None

    out = bytearray()
    pos = instr_start
    lit_pos = 0
    while pos < instr_end:
        opcode = patch[pos]
        pos += 1
        try:
            if opcode == 0x00:
                off, n = decode_uleb128(patch, pos)
                pos += n
                length, n = decode_uleb128(patch, pos)
                pos += n
                if pos > instr_end:
                    raise CorruptPatch("instruction overruns the stream")
                if off + length > len(old):
                    raise CorruptPatch("copy outside the old file")
                out += old[off : off + length]
            elif opcode == 0x01:
                length, n = decode_uleb128(patch, pos)
                pos += n
                if pos > instr_end:
                    raise CorruptPatch("instruction overruns the stream")
                if lit_pos + length > len(literals):
                    raise CorruptPatch("insert overruns the literal section")
                out += literals[lit_pos : lit_pos + length]
                lit_pos += length
            else:
                raise CorruptPatch(f"unknown opcode {opcode:#04x}")
        except ValueError as exc:
            raise CorruptPatch(str(exc)) from None
        if len(out) > header.new_length:
            raise CorruptPatch("output exceeds the declared length")

    if lit_pos != len(literals):
        raise CorruptPatch("unconsumed literal bytes")
    if len(out) != header.new_length:
        raise CorruptPatch("output shorter than the declared length")
    if hashlib.sha256(out).digest() != header.new_sha256:
        raise CorruptPatch("reconstructed file digest mismatch")
    return bytes(out)
