# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled match-scan kernel.

Semantics are locked to _scan_py.scan_matches: same weak hash, keep-first
block table, byte-confirmed candidates, greedy forward extension. The two
kernels are cross-checked by the test suite.
"""

from libc.stdlib cimport calloc, free
from libc.string cimport memcmp


cdef inline Py_ssize_t _lookup(unsigned int *keys, long long *vals,
                               Py_ssize_t size, unsigned int h) nogil:
    cdef Py_ssize_t slot = h & (size - 1)
    while vals[slot] != -1:
        if keys[slot] == h:
            return vals[slot]
        slot = (slot + 1) & (size - 1)
    return -1


def scan_matches(old_bytes, new_bytes, int block_size):
    cdef const unsigned char[::1] old = old_bytes
    cdef const unsigned char[::1] new = new_bytes
    cdef Py_ssize_t old_len = old.shape[0]
    cdef Py_ssize_t new_len = new.shape[0]
    cdef Py_ssize_t n = block_size

    matches = []
    if n <= 0 or n > old_len or new_len < n:
        return matches

    cdef Py_ssize_t nblocks = old_len // n
    cdef Py_ssize_t table_size = 1
    while table_size < 2 * nblocks:
        table_size <<= 1

    cdef unsigned int *keys = <unsigned int *> calloc(table_size, sizeof(unsigned int))
    cdef long long *vals = <long long *> calloc(table_size, sizeof(long long))
    if keys == NULL or vals == NULL:
        free(keys)
        free(vals)
        raise MemoryError()

    cdef Py_ssize_t idx, k, j, slot, src, length, max_len
    cdef unsigned long a, b
    cdef unsigned int h
    cdef unsigned char x_out, x_in

    try:
        for idx in range(table_size):
            vals[idx] = -1

        # Index old blocks, keeping the first block per weak hash.
        for k in range(nblocks):
            a = 0
            b = 0
            for j in range(n):
                a += old[k * n + j]
                b += <unsigned long> (n - j) * old[k * n + j]
            h = ((b & 0xFFFF) << 16) | (a & 0xFFFF)
            slot = h & (table_size - 1)
            while vals[slot] != -1 and keys[slot] != h:
                slot = (slot + 1) & (table_size - 1)
            if vals[slot] == -1:
                keys[slot] = h
                vals[slot] = k

        # Slide over the new file.
        idx = 0
        a = 0
        b = 0
        for j in range(n):
            a += new[j]
            b += <unsigned long> (n - j) * new[j]
        while idx + n <= new_len:
            h = ((b & 0xFFFF) << 16) | (a & 0xFFFF)
            k = _lookup(keys, vals, table_size, h)
            if k >= 0:
                src = k * n
                if memcmp(&old[src], &new[idx], n) == 0:
                    length = n
                    max_len = old_len - src
                    if new_len - idx < max_len:
                        max_len = new_len - idx
                    while length < max_len and old[src + length] == new[idx + length]:
                        length += 1
                    matches.append((idx, src, length))
                    idx += length
                    if idx + n <= new_len:
                        a = 0
                        b = 0
                        for j in range(n):
                            a += new[idx + j]
                            b += <unsigned long> (n - j) * new[idx + j]
                    continue
            if idx + n >= new_len:
                break
            x_out = new[idx]
            x_in = new[idx + n]
            a = (a + x_in - x_out) & 0xFFFFFFFF
            b = (b + (a & 0xFFFF) - <unsigned long> n * x_out) & 0xFFFFFFFF
            idx += 1
    finally:
        free(keys)
        free(vals)
    return matches
