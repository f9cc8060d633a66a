"""Read, mutate, and write APK files as ZIP containers.

Archives are immutable-after-parse values: mutation helpers return a new
archive. Unmodified entries keep their original compressed bytes on write so
that re-encoding an app perturbs as few bytes as possible (small deltas).
Uncompressed entries are aligned to 4-byte boundaries on write, matching the
convention the Android loader expects for stored files.
"""

from __future__ import annotations

import hashlib
import struct
import zlib
from dataclasses import dataclass, field, replace

from .errors import (
    CrcMismatch,
    EntryNotFound,
    MalformedZip,
    UnsupportedCompression,
    UnsupportedZipFeature,
)

STORED = 0
DEFLATED = 8

LOCAL_SIG = b"PK\x03\x04"
CENTRAL_SIG = b"PK\x01\x02"
EOCD_SIG = b"PK\x05\x06"
ZIP64_LOCATOR_SIG = b"PK\x06\x07"

ALIGNMENT = 4
ALIGN_EXTRA_ID = 0xD935  # zipalign's "Android alignment" extra field

# Fixed timestamp for entries we create or recompress: 2021-01-01 00:00:00.
_FIXED_DOS_DATE = ((2021 - 1980) << 9) | (1 << 5) | 1
_FIXED_DOS_TIME = 0

_FLAG_ENCRYPTED = 0x0001
_FLAG_DATA_DESCRIPTOR = 0x0008
_FLAG_UTF8 = 0x0800


@dataclass
class ZipEntry:
    name: str
    method: int
    data: bytes
    crc32: int
    modified: bool = False
    dos_time: int = _FIXED_DOS_TIME
    dos_date: int = _FIXED_DOS_DATE
    extra: bytes = b""
    comment: bytes = b""
    external_attrs: int = 0
    # Original compressed payload, kept so unmodified entries round-trip
    # byte-identically. None forces recompression on write.
    comp_data: bytes | None = None

    def structurally_equals(self, other: "ZipEntry") -> bool:
        return (
            self.name == other.name
            and self.method == other.method
            and self.data == other.data
            and self.crc32 == other.crc32
        )


@dataclass
class ApkArchive:
    entries: list[ZipEntry]
    end_of_central_directory: bytes
    original_bytes_digest: str
    comment: bytes = b""
    _index: dict[str, int] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self._index:
            self._index = {e.name: i for i, e in enumerate(self.entries)}
        if len(self._index) != len(self.entries):
            raise MalformedZip("duplicate entry names")

    def names(self) -> list[str]:
        return [e.name for e in self.entries]

    def entry(self, name: str) -> ZipEntry:
        try:
            return self.entries[self._index[name]]
        except KeyError:
            raise EntryNotFound(name) from None

    def has_entry(self, name: str) -> bool:
        return name in self._index

    def read(self, name: str) -> bytes:
        return self.entry(name).data

    def structurally_equals(self, other: "ApkArchive") -> bool:
        return len(self.entries) == len(other.entries) and all(
            a.structurally_equals(b) for a, b in zip(self.entries, other.entries)
        )


def _strip_alignment_extra(extra: bytes) -> bytes:
    """Drop any zipalign padding field; keep other extra fields verbatim."""
    out = bytearray()
    pos = 0
    while pos + 4 <= len(extra):
        ext_id, size = struct.unpack_from("<HH", extra, pos)
        if pos + 4 + size > len(extra):
            # Malformed TLV stream: keep the raw tail untouched.
            out += extra[pos:]
            return bytes(out)
        if ext_id != ALIGN_EXTRA_ID:
            out += extra[pos : pos + 4 + size]
        pos += 4 + size
    out += extra[pos:]
    return bytes(out)


def find_eocd(data: bytes) -> tuple[int, int, int, int]:
    """Locate the end-of-central-directory record.

    Returns (eocd_offset, cd_offset, cd_size, entry_count).
    """
    if len(data) < 22:
        raise MalformedZip("file too small for an end-of-central-directory record")
    # EOCD is in the last 64 KiB + 22 bytes (bounded comment length).
    window_start = max(0, len(data) - 0x10000 - 22)
    pos = data.rfind(EOCD_SIG, window_start)
    while pos != -1:
        if pos + 22 <= len(data):
            comment_len = struct.unpack_from("<H", data, pos + 20)[0]
            if pos + 22 + comment_len == len(data):
                break
        pos = data.rfind(EOCD_SIG, window_start, pos)
    if pos == -1:
        raise MalformedZip("no end-of-central-directory record")
    (
        disk_no,
        cd_disk,
        disk_entries,
        total_entries,
        cd_size,
        cd_offset,
        _comment_len,
    ) = struct.unpack_from("<HHHHIIH", data, pos + 4)
    if disk_no != 0 or cd_disk != 0 or disk_entries != total_entries:
        raise UnsupportedZipFeature("multi-disk archives are not supported")
    if total_entries == 0xFFFF or cd_size == 0xFFFFFFFF or cd_offset == 0xFFFFFFFF:
        raise UnsupportedZipFeature("ZIP64 archives are not supported")
    if pos >= 20 and data[pos - 20 : pos - 16] == ZIP64_LOCATOR_SIG:
        raise UnsupportedZipFeature("ZIP64 archives are not supported")
    if cd_offset + cd_size > pos:
        raise MalformedZip("central directory overlaps end record")
    return pos, cd_offset, cd_size, total_entries


def open_archive(data: bytes) -> ApkArchive:
    """Parse ZIP bytes into an ApkArchive, verifying every entry's CRC."""
    eocd_pos, cd_offset, cd_size, entry_count = find_eocd(data)
    eocd_raw = data[eocd_pos:]
    comment = data[eocd_pos + 22 :]

    entries: list[ZipEntry] = []
    seen: set[str] = set()
    pos = cd_offset
    cd_end = cd_offset + cd_size
    for _ in range(entry_count):
        if pos + 46 > cd_end or data[pos : pos + 4] != CENTRAL_SIG:
            raise MalformedZip("truncated or misaligned central directory")
        (
            _ver_made,
            _ver_need,
            flags,
            method,
            dos_time,
            dos_date,
            crc,
            comp_size,
            uncomp_size,
            name_len,
            extra_len,
            comment_len,
            _disk_start,
            _internal_attrs,
            external_attrs,
            local_offset,
        ) = struct.unpack_from("<HHHHHHIIIHHHHHII", data, pos + 4)
        name_raw = data[pos + 46 : pos + 46 + name_len]
        entry_comment = data[
            pos + 46 + name_len + extra_len : pos + 46 + name_len + extra_len + comment_len
        ]
        pos += 46 + name_len + extra_len + comment_len

        if flags & _FLAG_ENCRYPTED:
            raise UnsupportedZipFeature("encrypted entries are not supported")
        if method not in (STORED, DEFLATED):
            raise UnsupportedCompression(f"compression method {method}")
        if comp_size == 0xFFFFFFFF or uncomp_size == 0xFFFFFFFF or local_offset == 0xFFFFFFFF:
            raise UnsupportedZipFeature("ZIP64 entry fields")

        name = name_raw.decode("utf-8") if flags & _FLAG_UTF8 else name_raw.decode("cp437")
        if name in seen:
            raise MalformedZip(f"duplicate entry name {name!r}")
        seen.add(name)

        if local_offset + 30 > len(data) or data[local_offset : local_offset + 4] != LOCAL_SIG:
            raise MalformedZip(f"bad local header for {name!r}")
        l_name_len, l_extra_len = struct.unpack_from("<HH", data, local_offset + 26)
        data_start = local_offset + 30 + l_name_len + l_extra_len
        if data_start + comp_size > len(data):
            raise MalformedZip(f"truncated entry data for {name!r}")
        local_extra = data[local_offset + 30 + l_name_len : data_start]
        comp_data = data[data_start : data_start + comp_size]

        if method == STORED:
            if comp_size != uncomp_size:
                raise MalformedZip(f"stored entry size mismatch for {name!r}")
            payload = comp_data
        else:
            try:
                payload = zlib.decompress(comp_data, -15)
            except zlib.error as exc:
                raise MalformedZip(f"bad deflate stream for {name!r}: {exc}") from None
            if len(payload) != uncomp_size:
                raise MalformedZip(f"declared size mismatch for {name!r}")

        actual_crc = zlib.crc32(payload) & 0xFFFFFFFF
        if actual_crc != crc:
            raise CrcMismatch(f"CRC mismatch for {name!r}")

        entries.append(
            ZipEntry(
                name=name,
                method=method,
                data=payload,
                crc32=crc,
                modified=False,
                dos_time=dos_time,
                dos_date=dos_date,
                extra=_strip_alignment_extra(local_extra),
                comment=entry_comment,
                external_attrs=external_attrs,
                comp_data=comp_data,
            )
        )

    return ApkArchive(
        entries=entries,
        end_of_central_directory=eocd_raw,
        original_bytes_digest=hashlib.sha256(data).hexdigest(),
        comment=comment,
    )


def _deflate(data: bytes) -> bytes:
    comp = zlib.compressobj(6, zlib.DEFLATED, -15)
    return comp.compress(data) + comp.flush()


def write_archive(archive: ApkArchive) -> bytes:
    """Serialize deterministically; unmodified entries keep their original bytes."""
    out = bytearray()
    central = bytearray()

    for entry in archive.entries:
        if entry.comp_data is not None and not entry.modified:
            comp = entry.comp_data
        elif entry.method == STORED:
            comp = entry.data
        else:
            comp = _deflate(entry.data)

        name_raw, flags = _encode_name(entry.name)
        extra = entry.extra
        local_offset = len(out)
        if entry.method == STORED:
            data_start = local_offset + 30 + len(name_raw) + len(extra)
            pad = -(data_start + 6) % ALIGNMENT
            extra = extra + struct.pack("<HHH", ALIGN_EXTRA_ID, 2 + pad, ALIGNMENT) + b"\x00" * pad

        header = struct.pack(
            "<4sHHHHHIIIHH",
            LOCAL_SIG,
            20,
            flags,
            entry.method,
            entry.dos_time,
            entry.dos_date,
            entry.crc32,
            len(comp),
            len(entry.data),
            len(name_raw),
            len(extra),
        )
        out += header + name_raw + extra + comp

        central += struct.pack(
            "<4sHHHHHHIIIHHHHHII",
            CENTRAL_SIG,
            20,
            20,
            flags,
            entry.method,
            entry.dos_time,
            entry.dos_date,
            entry.crc32,
            len(comp),
            len(entry.data),
            len(name_raw),
            0,
            len(entry.comment),
            0,
            0,
            entry.external_attrs,
            local_offset,
        )
        central += name_raw + entry.comment

    cd_offset = len(out)
    out += central
    out += struct.pack(
        "<4sHHHHIIH",
        EOCD_SIG,
        0,
        0,
        len(archive.entries),
        len(archive.entries),
        len(central),
        cd_offset,
        len(archive.comment),
    )
    out += archive.comment
    return bytes(out)


def _encode_name(name: str) -> tuple[bytes, int]:
    try:
        return name.encode("ascii"), 0
    except UnicodeEncodeError:
        return name.encode("utf-8"), _FLAG_UTF8


def replace_entry(archive: ApkArchive, name: str, data: bytes) -> ApkArchive:
    """Return a new archive with `name`'s payload replaced."""
    idx = archive._index.get(name)
    if idx is None:
        raise EntryNotFound(name)
    entries = list(archive.entries)
    entries[idx] = replace(
        entries[idx],
        data=bytes(data),
        crc32=zlib.crc32(data) & 0xFFFFFFFF,
        modified=True,
        comp_data=None,
    )
    return replace(archive, entries=entries, _index=dict(archive._index))


def add_entry(archive: ApkArchive, name: str, data: bytes, method: int = DEFLATED) -> ApkArchive:
    """Append a new entry; replaces in place if the name already exists."""
    if archive.has_entry(name):
        return replace_entry(archive, name, data)
    entry = ZipEntry(
        name=name,
        method=method,
        data=bytes(data),
        crc32=zlib.crc32(data) & 0xFFFFFFFF,
        modified=True,
    )
    entries = list(archive.entries) + [entry]
    index = dict(archive._index)
    index[name] = len(entries) - 1
    return replace(archive, entries=entries, _index=index)


def empty_archive() -> ApkArchive:
    eocd = struct.pack("<4sHHHHIIH", EOCD_SIG, 0, 0, 0, 0, 0, 0, 0)
    return ApkArchive(
        entries=[],
        end_of_central_directory=eocd,
        original_bytes_digest=hashlib.sha256(eocd).hexdigest(),
    )
