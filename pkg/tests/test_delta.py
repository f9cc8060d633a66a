import hashlib
import random
import struct

import pytest
from hypothesis import given, settings, strategies as st

from appgrease import delta
from appgrease.delta import _scan_py
from appgrease.errors import CorruptPatch, OldFileMismatch


def test_identical_files_single_copy():
    data = random.Random(0).randbytes(100_000)
    patch = delta.make_patch(data, data)
    assert delta.apply_patch(data, patch) == data
    assert len(patch) < len(data) // 100  # header + one Copy instruction


def test_empty_old_is_all_insert():
    new = random.Random(1).randbytes(5000)
    patch = delta.make_patch(b"", new)
    assert delta.apply_patch(b"", patch) == new


def test_empty_new():
    old = b"anything"
    patch = delta.make_patch(old, b"")
    assert delta.apply_patch(old, patch) == b""


def test_localized_change_keeps_patch_small():
    rng = random.Random(2)
    old = rng.randbytes(1 << 20)
    new = old[:500_000] + rng.randbytes(1024) + old[501_024:]
    patch = delta.make_patch(old, new)
    assert delta.apply_patch(old, patch) == new
    assert len(patch) < len(new) // 10


def test_wrong_old_file_rejected():
    old, other = b"a" * 1000, b"b" * 1000
    patch = delta.make_patch(old, old)
    with pytest.raises(OldFileMismatch):
        delta.apply_patch(other, patch)


def test_truncated_patch_rejected():
    old = b"x" * 10_000
    patch = delta.make_patch(old, old)
    with pytest.raises(CorruptPatch):
        delta.apply_patch(old, patch[: len(patch) - 3])


def test_bad_magic_rejected():
    with pytest.raises(CorruptPatch):
        delta.apply_patch(b"", b"NOPE" + b"\x00" * 100)


def test_kernels_agree():
    rng = random.Random(3)
    cases = []
    old = rng.randbytes(200_000)
    cases.append((old, old))
    cases.append((old, old[:50_000] + rng.randbytes(64) + old[50_064:]))
    cases.append((old, rng.randbytes(100_000)))
    cases.append((old, old[::-1]))
    cases.append((b"\x00" * 100_000, b"\x00" * 120_000))  # degenerate repetition
    shuffled = bytearray(old)
    rng.shuffle(shuffled)
    cases.append((old, bytes(shuffled)))
    for old_b, new_b in cases:
        bs = min(4096, len(old_b))
        compiled = delta.scan_matches(old_b, new_b)
        fallback = _scan_py.scan_matches(old_b, new_b, bs)
        assert compiled == fallback


def test_scan_matches_are_well_formed():
    rng = random.Random(4)
    old = rng.randbytes(64_000)
    new = old[:10_000] + rng.randbytes(500) + old[10_000:40_000] + old[50_000:]
    pos = 0
    for new_off, old_off, length in delta.scan_matches(old, new):
        assert new_off >= pos
        assert length >= 1
        assert old_off + length <= len(old)
        assert new[new_off : new_off + length] == old[old_off : old_off + length]
        pos = new_off + length


def _corrupt_instruction_stream(patch: bytes, mutate) -> bytes:
    instr_len = struct.unpack_from("<Q", patch, 80)[0]
    body = bytearray(patch)
    mutate(body, 88, 88 + instr_len)
    return bytes(body)


def test_adversarial_copy_out_of_bounds():
    old = b"0123456789" * 100
    good = delta.make_patch(old, old)
    # Hand-build a patch whose Copy overruns the old file.
    instr = bytes([0x00]) + b"\x00" + b"\xff\xff\x7f"  # Copy(offset=0, length=0x1fffff)
    header = struct.pack(
        "<4sHBB32s32sQQ",
        b"AXPW", 1, 0, 0,
        hashlib.sha256(old).digest(),
        hashlib.sha256(b"x").digest(),
        0x1FFFFF,
        len(instr),
    )
    evil = header + instr + struct.pack("<Q", 0)
    with pytest.raises(CorruptPatch):
        delta.apply_patch(old, evil)
    delta.apply_patch(old, good)  # sanity: the honest patch still applies


def test_adversarial_literal_overrun():
    old = b"abc" * 1000
    instr = bytes([0x01]) + b"\x80\x08"  # Insert(length=1024) with no literal bytes
    header = struct.pack(
        "<4sHBB32s32sQQ",
        b"AXPW", 1, 0, 0,
        hashlib.sha256(old).digest(),
        hashlib.sha256(b"x").digest(),
        1024,
        len(instr),
    )
    with pytest.raises(CorruptPatch):
        delta.apply_patch(old, header + instr + struct.pack("<Q", 0))


def test_adversarial_random_mutations_never_escape():
    rng = random.Random(5)
    old = rng.randbytes(30_000)
    new = old[:10_000] + rng.randbytes(100) + old[10_100:]
    patch = delta.make_patch(old, new)
    for _ in range(300):
        mutated = bytearray(patch)
        for _ in range(rng.randrange(1, 4)):
            mutated[rng.randrange(len(mutated))] ^= 1 << rng.randrange(8)
        try:
            out = delta.apply_patch(old, bytes(mutated))
        except (CorruptPatch, OldFileMismatch):
            continue
        # Astronomically unlikely; if it ever happens the output must be exact.
        assert out == new


@settings(max_examples=200, deadline=None)
@given(
    old=st.binary(min_size=0, max_size=4096),
    new=st.binary(min_size=0, max_size=4096),
)
def test_property_roundtrip_unrelated(old, new):
    assert delta.apply_patch(old, delta.make_patch(old, new)) == new


@settings(max_examples=200, deadline=None)
@given(
    base=st.binary(min_size=1, max_size=8192),
    cut_a=st.integers(min_value=0, max_value=8192),
    cut_b=st.integers(min_value=0, max_value=8192),
    splice=st.binary(min_size=0, max_size=512),
    data=st.data(),
)
def test_property_roundtrip_related(base, cut_a, cut_b, splice, data):
    lo, hi = sorted((cut_a % (len(base) + 1), cut_b % (len(base) + 1)))
    new = base[:lo] + splice + base[hi:]
    patch = delta.make_patch(base, new, block_size=data.draw(st.sampled_from([64, 512, 4096])))
    assert delta.apply_patch(base, patch) == new


def test_large_related_buffers_roundtrip():
    rng = random.Random(6)
    old = rng.randbytes(4 * 1024 * 1024)
    new = old[: 1 << 20] + rng.randbytes(2048) + old[(1 << 20) + 2048 :]
    patch = delta.make_patch(old, new)
    assert delta.apply_patch(old, patch) == new
    assert len(patch) < len(new) // 10
