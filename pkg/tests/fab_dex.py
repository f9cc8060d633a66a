"""Independent minimal DEX assembler for test fixtures.

Builds a structurally coherent DEX (header, sorted string table, map list)
straight from the format layout; digests are computed with zlib/hashlib,
cross-checked elsewhere against the hand-rolled oracles.
"""

from __future__ import annotations

import hashlib
import struct
import zlib

HEADER_SIZE = 0x70


def mutf8(s: str) -> bytes:
    out = bytearray()
    for ch in s:
        if ch == "\x00":
            out += b"\xc0\x80"
        else:
            out += ch.encode("utf-8", "surrogatepass")
    return bytes(out)


def uleb(value: int) -> bytes:
    out = bytearray()
    while True:
        byte = value & 0x7F
        value >>= 7
        out.append(byte | (0x80 if value else 0))
        if not value:
            return bytes(out)


def build_dex(strings: list[str], version: bytes = b"035") -> bytes:
    ordered = sorted(set(strings))
    string_ids_off = HEADER_SIZE
    string_data_off = string_ids_off + 4 * len(ordered)

    data = bytearray()
    offsets = []
    for s in ordered:
        offsets.append(string_data_off + len(data))
        data += uleb(len(s)) + mutf8(s) + b"\x00"
    while (string_data_off + len(data)) % 4:
        data.append(0)

    map_off = string_data_off + len(data)
    map_entries = [
        (0x0000, 1, 0),  # header_item
        (0x0001, len(ordered), string_ids_off),  # string_id_item
        (0x2002, len(ordered), string_data_off),  # string_data_item
        (0x1000, 1, map_off),  # map_list
    ]
    map_blob = struct.pack("<I", len(map_entries))
    for item_type, count, offset in map_entries:
        map_blob += struct.pack("<HHII", item_type, 0, count, offset)

    file_size = map_off + len(map_blob)
    data_size = file_size - string_data_off

    header = bytearray(HEADER_SIZE)
    header[0:8] = b"dex\n" + version + b"\x00"
    struct.pack_into("<I", header, 32, file_size)
    struct.pack_into("<I", header, 36, HEADER_SIZE)
    struct.pack_into("<I", header, 40, 0x12345678)
    struct.pack_into("<II", header, 44, 0, 0)  # link
    struct.pack_into("<I", header, 52, map_off)
    struct.pack_into("<II", header, 56, len(ordered), string_ids_off)
    # type/proto/field/method/class tables are empty.
    struct.pack_into("<II", header, 96, data_size, string_data_off)

    body = bytes(header) + b"".join(struct.pack("<I", o) for o in offsets) + bytes(data) + map_blob
    body = bytearray(body)
    body[12:32] = hashlib.sha1(body[32:]).digest()
    struct.pack_into("<I", body, 8, zlib.adler32(bytes(body[12:])) & 0xFFFFFFFF)
    return bytes(body)


FIXTURE_STRINGS = [
    "Lcom/example/fixture/MainActivity;",
    "Landroid/location/Location;",
    "com.android.vending.billing.InAppBillingService.BIND",
    "https://graph.facebook.com/v4/events",
    "hello world",
]

SECOND_DEX_STRINGS = [
    "Lcom/example/fixture/Second;",
    "api.mixpanel.com",
]
