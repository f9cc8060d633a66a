import io
import struct
import zipfile
import zlib

import pytest
from hypothesis import given, settings, strategies as st

from appgrease import container
from appgrease.errors import (
    CrcMismatch,
    EntryNotFound,
    MalformedZip,
    UnsupportedCompression,
    UnsupportedZipFeature,
)

from oracles import crc32_bitwise


def stdlib_zip(entries: list[tuple[str, bytes, int]]) -> bytes:
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w") as z:
        for name, data, method in entries:
            z.writestr(name, data, method)
    return buf.getvalue()


def test_open_minimal_stored_entry():
    data = stdlib_zip([("a.txt", b"hi", zipfile.ZIP_STORED)])
    archive = container.open_archive(data)
    assert archive.names() == ["a.txt"]
    assert archive.read("a.txt") == b"hi"
    assert archive.entries[0].method == container.STORED


def test_corrupted_crc_rejected():
    data = bytearray(stdlib_zip([("a.txt", b"payload goes here", zipfile.ZIP_STORED)]))
    eocd = bytes(data).rindex(b"PK\x05\x06")
    cd_offset = struct.unpack_from("<I", data, eocd + 16)[0]
    data[cd_offset + 16] ^= 0xFF  # CRC field of the central record
    with pytest.raises(CrcMismatch):
        container.open_archive(bytes(data))


def test_fixture_apk_entry_list(fixture_apk):
    archive = container.open_archive(fixture_apk)
    with zipfile.ZipFile(io.BytesIO(fixture_apk)) as z:
        assert archive.names() == z.namelist()
    assert len(archive.entries) >= 3
    assert "AndroidManifest.xml" in archive.names()
    assert "classes.dex" in archive.names()


def test_crc_against_independent_implementation(fixture_apk):
    archive = container.open_archive(fixture_apk)
    for entry in archive.entries:
        assert entry.crc32 == crc32_bitwise(entry.data)


def test_roundtrip_preserves_structure(fixture_apk):
    archive = container.open_archive(fixture_apk)
    out = container.write_archive(archive)
    again = container.open_archive(out)
    assert archive.structurally_equals(again)
    assert [e.name for e in again.entries] == [e.name for e in archive.entries]


def test_unmodified_entries_keep_compressed_form(fixture_apk):
    archive = container.open_archive(fixture_apk)
    out = container.write_archive(archive)
    again = container.open_archive(out)
    for before, after in zip(archive.entries, again.entries):
        assert before.comp_data == after.comp_data


def test_empty_archive_roundtrip():
    out = container.write_archive(container.empty_archive())
    assert container.open_archive(out).entries == []


def test_replace_entry_updates_only_target(fixture_apk):
    archive = container.open_archive(fixture_apk)
    new_data = b"replacement payload"
    updated = container.replace_entry(archive, "assets/data.bin", new_data)
    assert updated.read("assets/data.bin") == new_data
    assert updated.names() == archive.names()
    assert updated.entry("assets/data.bin").crc32 == zlib.crc32(new_data)
    # Source archive untouched (copy-on-mutate).
    assert archive.read("assets/data.bin") != new_data

    reopened = container.open_archive(container.write_archive(updated))
    assert reopened.read("assets/data.bin") == new_data
    for name in archive.names():
        if name != "assets/data.bin":
            assert reopened.read(name) == archive.read(name)
            assert reopened.entry(name).comp_data == archive.entry(name).comp_data


def test_replace_missing_entry():
    archive = container.open_archive(stdlib_zip([("a", b"x", zipfile.ZIP_STORED)]))
    with pytest.raises(EntryNotFound):
        container.replace_entry(archive, "nope", b"y")


def test_write_is_deterministic(fixture_apk):
    archive = container.open_archive(fixture_apk)
    assert container.write_archive(archive) == container.write_archive(archive)


def test_stored_entries_are_aligned(fixture_apk):
    archive = container.open_archive(fixture_apk)
    out = container.write_archive(archive)
    reopened = zipfile.ZipFile(io.BytesIO(out))
    for info in reopened.infolist():
        if info.compress_type == zipfile.ZIP_STORED:
            header = out[info.header_offset : info.header_offset + 30]
            name_len, extra_len = struct.unpack_from("<HH", header, 26)
            data_start = info.header_offset + 30 + name_len + extra_len
            assert data_start % 4 == 0, info.filename


def test_not_a_zip_rejected():
    with pytest.raises(MalformedZip):
        container.open_archive(b"this is not a zip file at all........")


def test_truncated_entry_rejected():
    data = stdlib_zip([("a.txt", b"x" * 100, zipfile.ZIP_DEFLATED)])
    eocd = data.rindex(b"PK\x05\x06")
    # Slice out part of the entry data but keep the EOCD intact.
    broken = data[:20] + data[eocd:]
    with pytest.raises(MalformedZip):
        container.open_archive(broken)


def test_unsupported_method_rejected():
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w") as z:
        z.writestr("a.txt", b"hello bz2 world", zipfile.ZIP_BZIP2)
    with pytest.raises(UnsupportedCompression):
        container.open_archive(buf.getvalue())


def test_zip64_rejected():
    data = bytearray(stdlib_zip([("a.txt", b"x", zipfile.ZIP_STORED)]))
    eocd = bytes(data).rindex(b"PK\x05\x06")
    struct.pack_into("<HH", data, eocd + 8, 0xFFFF, 0xFFFF)  # zip64 entry-count marker
    with pytest.raises(UnsupportedZipFeature):
        container.open_archive(bytes(data))


def test_duplicate_names_rejected():
    single = stdlib_zip([("dup.txt", b"one", zipfile.ZIP_STORED)])
    # Stdlib refuses duplicates politely, so splice the central directory by hand:
    # duplicate the single entry's central record and bump the counts.
    eocd = single.rindex(b"PK\x05\x06")
    cd_offset = struct.unpack_from("<I", single, eocd + 16)[0]
    cd = single[cd_offset:eocd]
    doubled = single[:eocd] + cd + single[eocd:]
    doubled = bytearray(doubled)
    struct.pack_into("<HH", doubled, eocd + len(cd) + 8, 2, 2)
    struct.pack_into("<I", doubled, eocd + len(cd) + 12, len(cd) * 2)
    with pytest.raises(MalformedZip):
        container.open_archive(bytes(doubled))


_names = st.lists(
    st.text(
        alphabet="abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_-./",
        min_size=1,
        max_size=24,
    ).filter(lambda s: not s.endswith("/") and not s.startswith("/") and ".." not in s),
    min_size=0,
    max_size=8,
    unique=True,
)


@settings(max_examples=200, deadline=None)
@given(
    names=_names,
    payloads=st.lists(st.binary(min_size=0, max_size=2048), min_size=8, max_size=8),
    methods=st.lists(st.sampled_from([container.STORED, container.DEFLATED]), min_size=8,
                     max_size=8),
)
def test_property_roundtrip(names, payloads, methods):
    entries = [(n, payloads[i], methods[i]) for i, n in enumerate(names)]
    source = stdlib_zip(
        [(n, d, zipfile.ZIP_STORED if m == container.STORED else zipfile.ZIP_DEFLATED)
         for n, d, m in entries]
    )
    archive = container.open_archive(source)
    assert [e.name for e in archive.entries] == [n for n, _, _ in entries]
    assert all(e.data == d for e, (_, d, _) in zip(archive.entries, entries))

    reopened = container.open_archive(container.write_archive(archive))
    assert archive.structurally_equals(reopened)
    stored = sum(1 for e in reopened.entries if e.method == container.STORED)
    deflated = sum(1 for e in reopened.entries if e.method == container.DEFLATED)
    assert stored + deflated == len(reopened.entries)
