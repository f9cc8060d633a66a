"""Pure-Python (NumPy-vectorized) match scan, the fallback kernel.

Must produce exactly the same matches as the compiled kernel: same weak hash
(a = sum mod 2^16, b = weighted sum mod 2^16, h = b<<16 | a), keep-first
block table, byte-confirmed candidates, greedy forward extension.

Window hashes for the whole new file are computed with cumulative sums in
fixed-size segments, so only candidate positions are touched in Python.
"""

from __future__ import annotations

import numpy as np

_SEGMENT = 1 << 20


def _block_hashes(old: bytes, n: int) -> np.ndarray:
    nblocks = len(old) // n
    blocks = np.frombuffer(old, dtype=np.uint8, count=nblocks * n).reshape(nblocks, n)
    blocks = blocks.astype(np.uint64)
    a = blocks.sum(axis=1)
    weights = np.arange(n, 0, -1, dtype=np.uint64)
    b = (blocks * weights).sum(axis=1)
    return (((b & 0xFFFF) << np.uint64(16)) | (a & 0xFFFF)).astype(np.uint64)


def _window_hashes(new: bytes, n: int):
    """Yield (segment start, hash array for windows starting in the segment)."""
    total = len(new) - n + 1
    buf = np.frombuffer(new, dtype=np.uint8)
    n64 = np.uint64(n)
    for start in range(0, total, _SEGMENT):
        stop = min(start + _SEGMENT, total)
        m = stop - start
        x = buf[start : stop + n - 1].astype(np.uint64)
        s = np.zeros(len(x) + 1, dtype=np.uint64)
        np.cumsum(x, out=s[1:])
        u = np.zeros(len(x) + 1, dtype=np.uint64)
        np.cumsum(np.arange(len(x), dtype=np.uint64) * x, out=u[1:])
        i_local = np.arange(m, dtype=np.uint64)
        a_full = s[n : n + m] - s[:m]
        w = (u[n : n + m] - u[:m]) - i_local * a_full
        a = a_full & np.uint64(0xFFFF)
        b = (n64 * a_full - w) & np.uint64(0xFFFF)
        yield start, (b << np.uint64(16)) | a


def scan_matches(old: bytes, new: bytes, block_size: int) -> list[tuple[int, int, int]]:
    n = block_size
    old_len, new_len = len(old), len(new)
    if n <= 0 or n > old_len or new_len < n:
        return []

    hashes = _block_hashes(old, n)
    table: dict[int, int] = {}
    for k, h in enumerate(hashes.tolist()):
        table.setdefault(h, k)
    known = np.unique(hashes)

    cand_pos: list[np.ndarray] = []
    cand_hash: list[np.ndarray] = []
    for start, h in _window_hashes(new, n):
        mask = np.isin(h, known)
        idx = np.nonzero(mask)[0]
        cand_pos.append(idx + start)
        cand_hash.append(h[idx])
    positions = np.concatenate(cand_pos) if cand_pos else np.empty(0, dtype=np.int64)
    hash_vals = np.concatenate(cand_hash) if cand_hash else np.empty(0, dtype=np.uint64)

    matches: list[tuple[int, int, int]] = []
    pos = 0
    for i, h in zip(positions.tolist(), hash_vals.tolist()):
        if i < pos:
            continue
        k = table[h]
        src = k * n
        if old[src : src + n] != new[i : i + n]:
            continue
        length = n
        max_len = min(old_len - src, new_len - i)
        while length < max_len and old[src + length] == new[i + length]:
            length += 1
        matches.append((i, src, length))
        pos = i + length
    return matches
