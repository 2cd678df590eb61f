# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Keccak-f[800] kernels; same API as :mod:`huffrev._pykeccak`."""

from libc.stdint cimport uint32_t, uint8_t
from libc.string cimport memset

cdef enum:
    STATE_BYTES = 100
    MAX_ROUNDS = 24

cdef extern from *:
    """
    #include <stdint.h>
    #define ROL32(v, n) (((v) << (n)) | ((v) >> ((32 - (n)) & 31)))
    static const uint32_t HR_RC[24] = {
        0x00000001u, 0x00008082u, 0x0000808Au, 0x80008000u, 0x0000808Bu, 0x80000001u,
        0x80008081u, 0x00008009u, 0x0000008Au, 0x00000088u, 0x80008009u, 0x8000000Au,
        0x8000808Bu, 0x0000008Bu, 0x00008089u, 0x00008003u, 0x00008002u, 0x00000080u,
        0x0000800Au, 0x8000000Au, 0x80008081u, 0x00008080u, 0x80000001u, 0x80008008u};
    /* Lanes a[x + 5y]; rho offsets mod 32; pi sends (x, y) to (y, 2x + 3y). */
    static void hr_f800(uint32_t *a, int rounds) {
        uint32_t c0, c1, c2, c3, c4, d0, d1, d2, d3, d4, b[25];
        int r, y;
        for (r = 0; r < rounds; r++) {
            c0 = a[0] ^ a[5] ^ a[10] ^ a[15] ^ a[20];
            c1 = a[1] ^ a[6] ^ a[11] ^ a[16] ^ a[21];
            c2 = a[2] ^ a[7] ^ a[12] ^ a[17] ^ a[22];
            c3 = a[3] ^ a[8] ^ a[13] ^ a[18] ^ a[23];
            c4 = a[4] ^ a[9] ^ a[14] ^ a[19] ^ a[24];
            d0 = c4 ^ ROL32(c1, 1);
            d1 = c0 ^ ROL32(c2, 1);
            d2 = c1 ^ ROL32(c3, 1);
            d3 = c2 ^ ROL32(c4, 1);
            d4 = c3 ^ ROL32(c0, 1);
            b[0] = a[0] ^ d0;
            b[10] = ROL32(a[1] ^ d1, 1);
            b[20] = ROL32(a[2] ^ d2, 30);
            b[5] = ROL32(a[3] ^ d3, 28);
            b[15] = ROL32(a[4] ^ d4, 27);
            b[16] = ROL32(a[5] ^ d0, 4);
            b[1] = ROL32(a[6] ^ d1, 12);
            b[11] = ROL32(a[7] ^ d2, 6);
            b[21] = ROL32(a[8] ^ d3, 23);
            b[6] = ROL32(a[9] ^ d4, 20);
            b[7] = ROL32(a[10] ^ d0, 3);
            b[17] = ROL32(a[11] ^ d1, 10);
            b[2] = ROL32(a[12] ^ d2, 11);
            b[12] = ROL32(a[13] ^ d3, 25);
            b[22] = ROL32(a[14] ^ d4, 7);
            b[23] = ROL32(a[15] ^ d0, 9);
            b[8] = ROL32(a[16] ^ d1, 13);
            b[18] = ROL32(a[17] ^ d2, 15);
            b[3] = ROL32(a[18] ^ d3, 21);
            b[13] = ROL32(a[19] ^ d4, 8);
            b[14] = ROL32(a[20] ^ d0, 18);
            b[24] = ROL32(a[21] ^ d1, 2);
            b[9] = ROL32(a[22] ^ d2, 29);
            b[19] = ROL32(a[23] ^ d3, 24);
            b[4] = ROL32(a[24] ^ d4, 14);
            for (y = 0; y < 25; y += 5) {
                a[y] = b[y] ^ (~b[y + 1] & b[y + 2]);
                a[y + 1] = b[y + 1] ^ (~b[y + 2] & b[y + 3]);
                a[y + 2] = b[y + 2] ^ (~b[y + 3] & b[y + 4]);
                a[y + 3] = b[y + 3] ^ (~b[y + 4] & b[y]);
                a[y + 4] = b[y + 4] ^ (~b[y] & b[y + 1]);
            }
            a[0] ^= HR_RC[r];
        }
    }
    """
    void hr_f800(uint32_t* a, int rounds) noexcept nogil


cdef inline void f800(uint32_t* a, int rounds) noexcept nogil:
    hr_f800(a, rounds)


cdef inline void load(const uint8_t* s, uint32_t* a) noexcept nogil:
    cdef int i
    for i in range(25):
        a[i] = (<uint32_t>s[4 * i] | (<uint32_t>s[4 * i + 1] << 8)
                | (<uint32_t>s[4 * i + 2] << 16) | (<uint32_t>s[4 * i + 3] << 24))


cdef inline void store(const uint32_t* a, uint8_t* s) noexcept nogil:
    cdef int i
    for i in range(25):
        s[4 * i] = a[i] & 0xFF
        s[4 * i + 1] = (a[i] >> 8) & 0xFF
        s[4 * i + 2] = (a[i] >> 16) & 0xFF
        s[4 * i + 3] = (a[i] >> 24) & 0xFF


cdef inline void xor_bytes(uint32_t* a, const uint8_t* blk, int n) noexcept nogil:
    cdef int i
    for i in range(n):
        a[i >> 2] ^= (<uint32_t>blk[i]) << (8 * (i & 3))


cdef int _check(bytes state, int rounds, int rate_bytes=1) except -1:
    if rate_bytes < 1 or rate_bytes > STATE_BYTES:
        raise ValueError("rate_bytes must be in [1, 100]")
    if len(state) != STATE_BYTES:
        raise ValueError("state must be 100 bytes")
    if rounds < 0 or rounds > MAX_ROUNDS:
        raise ValueError(f"rounds must be in [0, {MAX_ROUNDS}], got {rounds}")
    return 0


def permute(bytes state, int rounds):
    cdef uint32_t a[25]
    cdef uint8_t out[STATE_BYTES]
    _check(state, rounds)
    load(<const uint8_t*>state, a)
    f800(a, rounds)
    store(a, out)
    return out[:STATE_BYTES]


def absorb_blocks(bytes state, bytes data, int rate_bytes, int rounds):
    """XOR each rate-sized block of ``data`` into the state and permute."""
    cdef uint32_t a[25]
    cdef uint8_t out[STATE_BYTES]
    cdef Py_ssize_t off, n = len(data)
    cdef const uint8_t* p = data
    _check(state, rounds, rate_bytes)
    if n % rate_bytes:
        raise ValueError("data length must be a multiple of the rate")
    load(<const uint8_t*>state, a)
    off = 0
    while off < n:
        xor_bytes(a, p + off, rate_bytes)
        f800(a, rounds)
        off += rate_bytes
    store(a, out)
    return out[:STATE_BYTES]


def duplex_chain(bytes state, list inputs, int rate_bytes, int rounds):
    """Run one duplexing call per input and return every intermediate state."""
    cdef uint32_t a[25]
    cdef uint8_t blk[STATE_BYTES]
    cdef uint8_t out[STATE_BYTES]
    cdef bytes sigma
    cdef Py_ssize_t n, i
    cdef list result = []
    _check(state, rounds, rate_bytes)
    load(<const uint8_t*>state, a)
    for obj in inputs:
        sigma = bytes(obj)
        n = len(sigma)
        if n > rate_bytes - 1:
            raise ValueError("duplex input does not fit one padded block")
        memset(blk, 0, STATE_BYTES)
        for i in range(n):
            blk[i] = (<const uint8_t*>sigma)[i]
        blk[n] ^= 0x01
        blk[rate_bytes - 1] ^= 0x80
        xor_bytes(a, blk, rate_bytes)
        f800(a, rounds)
        store(a, out)
        result.append(out[:STATE_BYTES])
    return result
