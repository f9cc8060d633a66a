"""Parse DEX headers and string tables; same-length in-place string edits.

No disassembly: the string data section is patched byte-for-byte so every
offset in the file stays put, then the header digests are recomputed
(`reseal`). This is exactly enough for string-level interventions such as
blanking billing identifiers or tracker hostnames.
"""

from __future__ import annotations

import hashlib
import struct
import zlib
from dataclasses import dataclass

from ._varint import decode_uleb128, encode_uleb128
from .errors import DigestMismatch, LengthMismatch, MalformedDex, StaleEntry

HEADER_SIZE = 0x70
_MAGIC_VERSIONS = (b"035", b"036", b"037", b"038", b"039")

_CHECKSUM_OFF = 8
_SIGNATURE_OFF = 12
_FILE_SIZE_OFF = 32
_STRING_IDS_SIZE_OFF = 56
_STRING_IDS_OFF_OFF = 60


def encode_mutf8(s: str) -> bytes:
    """Modified UTF-8: CESU-8 style with U+0000 encoded as C0 80."""
    out = bytearray()
    for ch in s:
        cp = ord(ch)
        if cp == 0:
            out += b"\xc0\x80"
        elif cp < 0x10000:
            out += ch.encode("utf-8", "surrogatepass")
        else:
            cp -= 0x10000
            out += chr(0xD800 | (cp >> 10)).encode("utf-8", "surrogatepass")
            out += chr(0xDC00 | (cp & 0x3FF)).encode("utf-8", "surrogatepass")
    return bytes(out)


def decode_mutf8(data: bytes) -> str:
    text = data.replace(b"\xc0\x80", b"\x00").decode("utf-8", "surrogatepass")
    # Recombine CESU-8 surrogate pairs into supplementary characters.
    return text.encode("utf-16-le", "surrogatepass").decode("utf-16-le", "surrogatepass")


def utf16_length(s: str) -> int:
    return sum(2 if ord(ch) >= 0x10000 else 1 for ch in s)


@dataclass(frozen=True)
class DexHeader:
    magic: bytes
    checksum: int
    signature: bytes
    file_size: int
    string_ids_size: int
    string_ids_off: int


@dataclass(frozen=True)
class StringEntry:
    index: int
    data_offset: int  # offset of the uleb128 length prefix
    utf16_length: int
    payload: bytes  # modified-UTF-8 bytes, without prefix or terminator

    @property
    def text(self) -> str:
        return decode_mutf8(self.payload)


@dataclass(frozen=True)
class DexImage:
    data: bytes
    header: DexHeader
    string_entries: tuple[StringEntry, ...]


def compute_checksum(data: bytes) -> int:
    """Header checksum: adler-32 over everything after the checksum field."""
    return zlib.adler32(data[_SIGNATURE_OFF:]) & 0xFFFFFFFF


def compute_signature(data: bytes) -> bytes:
    """Header signature: SHA-1 over everything after the signature field."""
    return hashlib.sha1(data[_FILE_SIZE_OFF:]).digest()


def parse_dex(data: bytes, verify: bool = True) -> DexImage:
    """Parse header and enumerate the string table.

    With verify=True (the default) a checksum/signature mismatch raises
    DigestMismatch; the structurally-parsed image rides on the exception.
    """
    if len(data) < HEADER_SIZE:
        raise MalformedDex("shorter than a DEX header")
    magic = bytes(data[:8])
    if magic[:4] != b"dex\n" or magic[7:8] != b"\x00" or magic[4:7] not in _MAGIC_VERSIONS:
        raise MalformedDex(f"bad magic {magic!r}")

    checksum = struct.unpack_from("<I", data, _CHECKSUM_OFF)[0]
    signature = bytes(data[_SIGNATURE_OFF:_SIGNATURE_OFF + 20])
    file_size = struct.unpack_from("<I", data, _FILE_SIZE_OFF)[0]
    header_size, endian_tag = struct.unpack_from("<II", data, 36)
    string_ids_size = struct.unpack_from("<I", data, _STRING_IDS_SIZE_OFF)[0]
    string_ids_off = struct.unpack_from("<I", data, _STRING_IDS_OFF_OFF)[0]

    if file_size != len(data):
        raise MalformedDex(f"declared size {file_size} != actual {len(data)}")
    if header_size != HEADER_SIZE:
        raise MalformedDex(f"unexpected header size {header_size:#x}")
    if endian_tag != 0x12345678:
        raise MalformedDex(f"unsupported endian tag {endian_tag:#010x}")
    if string_ids_size and (
        string_ids_off < HEADER_SIZE or string_ids_off + 4 * string_ids_size > len(data)
    ):
        raise MalformedDex("string id table out of bounds")

    entries = []
    for i in range(string_ids_size):
        off = struct.unpack_from("<I", data, string_ids_off + 4 * i)[0]
        if not HEADER_SIZE <= off < len(data):
            raise MalformedDex(f"string {i} data offset out of bounds")
        try:
            utf16_len, prefix_len = decode_uleb128(data, off)
        except ValueError as exc:
            raise MalformedDex(f"string {i}: {exc}") from None
        end = data.find(b"\x00", off + prefix_len)
        if end == -1:
            raise MalformedDex(f"string {i} is unterminated")
        entries.append(
            StringEntry(
                index=i,
                data_offset=off,
                utf16_length=utf16_len,
                payload=bytes(data[off + prefix_len : end]),
            )
        )

    header = DexHeader(
        magic=magic,
        checksum=checksum,
        signature=signature,
        file_size=file_size,
        string_ids_size=string_ids_size,
        string_ids_off=string_ids_off,
    )
    image = DexImage(data=bytes(data), header=header, string_entries=tuple(entries))

    if verify:
        if compute_checksum(image.data) != checksum:
            raise DigestMismatch("header checksum does not match content", image=image)
        if compute_signature(image.data) != signature:
            raise DigestMismatch("header signature does not match content", image=image)
    return image


def find_strings(image: DexImage, pattern: str, exact: bool = False) -> list[StringEntry]:
    """String entries matching the pattern, in index order."""
    hits = []
    for entry in image.string_entries:
        text = entry.text
        if (text == pattern) if exact else (pattern in text):
            hits.append(entry)
    return hits


def replace_string_same_length(
    image: DexImage, entry: StringEntry, replacement: bytes
) -> DexImage:
    """Overwrite one string payload in place; the header is NOT resealed.

    The replacement must occupy exactly the original payload bytes, and its
    recomputed UTF-16 length must fit in the same uleb128 prefix width.
    """
    current = _entry_at(image, entry)
    if len(replacement) != len(current.payload):
        raise LengthMismatch(
            f"replacement is {len(replacement)} bytes, original is {len(current.payload)}"
        )
    new_utf16_len = utf16_length(decode_mutf8(replacement))
    old_prefix = encode_uleb128(current.utf16_length)
    new_prefix = encode_uleb128(new_utf16_len)
    if len(new_prefix) != len(old_prefix):
        raise LengthMismatch("replacement changes the length-prefix width")

    data = bytearray(image.data)
    off = current.data_offset
    data[off : off + len(new_prefix)] = new_prefix
    start = off + len(new_prefix)
    data[start : start + len(replacement)] = replacement
    return parse_dex(bytes(data), verify=False)


def _entry_at(image: DexImage, entry: StringEntry) -> StringEntry:
    if entry.index >= len(image.string_entries):
        raise StaleEntry(f"no string entry {entry.index}")
    current = image.string_entries[entry.index]
    if current.data_offset != entry.data_offset or current.payload != entry.payload:
        raise StaleEntry(f"string entry {entry.index} no longer matches")
    return current


def reseal(image: DexImage) -> DexImage:
    """Recompute and store the header signature and checksum. Idempotent."""
    data = bytearray(image.data)
    data[_SIGNATURE_OFF:_SIGNATURE_OFF + 20] = compute_signature(bytes(data))
    struct.pack_into("<I", data, _CHECKSUM_OFF, compute_checksum(bytes(data)))
    return parse_dex(bytes(data), verify=True)


def scan_signatures(image: DexImage, signatures) -> list:
    """One hit per (signature, matching string entry), in string-index order.

    `signatures` is an extensions.SignatureList; hits carry the tracker name,
    the pattern that matched, and the string index (the caller attaches the
    archive entry path).
    """
    from .extensions.signatures import DetectionHit  # cycle-free at runtime

    hits = []
    for entry in image.string_entries:
        text = entry.text
        for sig in signatures.entries:
            if sig.kind == "hostname":
                matched = sig.pattern in text
            else:  # class-prefix
                matched = text.startswith(sig.pattern)
            if matched:
                hits.append(
                    DetectionHit(
                        tracker=sig.name,
                        pattern=sig.pattern,
                        dex_path="",
                        string_index=entry.index,
                    )
                )
    hits.sort(key=lambda h: (h.string_index, h.tracker))
    return hits
