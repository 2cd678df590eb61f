"""Pure-Python Keccak-f[800] kernels.

Fallback for :mod:`huffrev._ckeccak`; both modules expose the same four
functions and must agree bit for bit. States travel as 100-byte ``bytes``
(25 little-endian 32-bit lanes, lane index ``x + 5*y``).
"""

from __future__ import annotations

import struct

MASK = 0xFFFFFFFF
STATE_BYTES = 100
MAX_ROUNDS = 24

# 64-bit Keccak round constants truncated to the 32-bit lane width.
ROUND_CONSTANTS = (
    0x00000001, 0x00008082, 0x0000808A, 0x80008000,
    0x0000808B, 0x80000001, 0x80008081, 0x00008009,
    0x0000008A, 0x00000088, 0x80008009, 0x8000000A,
    0x8000808B, 0x0000008B, 0x00008089, 0x00008003,
    0x00008002, 0x00000080, 0x0000800A, 0x8000000A,
    0x80008081, 0x00008080, 0x80000001, 0x80008008,
)

# Rotation offsets indexed by lane x + 5*y, already reduced mod 32.
RHO = (
    0, 1, 30, 28, 27,
    4, 12, 6, 23, 20,
    3, 10, 11, 25, 7,
    9, 13, 15, 21, 8,
    18, 2, 29, 24, 14,
)

# PI[i] is the destination lane of source lane i: (x, y) -> (y, 2x + 3y).
PI = tuple(y + 5 * ((2 * x + 3 * y) % 5) for y in range(5) for x in range(5))

_LANES = struct.Struct("<25I")


def _rounds(a: list[int], rounds: int) -> None:
    for rnd in range(rounds):
        # theta
        c = [a[x] ^ a[x + 5] ^ a[x + 10] ^ a[x + 15] ^ a[x + 20] for x in range(5)]
        for x in range(5):
            t = c[(x + 1) % 5]
            d = c[(x - 1) % 5] ^ (((t << 1) | (t >> 31)) & MASK)
            for y in range(0, 25, 5):
                a[x + y] ^= d
        # rho + pi
        b = [0] * 25
        for i in range(25):
            v = a[i]
            r = RHO[i]
            b[PI[i]] = ((v << r) | (v >> (32 - r))) & MASK if r else v
        # chi
        for y in range(0, 25, 5):
            row = b[y:y + 5]
            for x in range(5):
                a[x + y] = row[x] ^ (~row[(x + 1) % 5] & row[(x + 2) % 5])
        # iota
        a[0] ^= ROUND_CONSTANTS[rnd]


def _check_rounds(rounds: int, rate_bytes: int = 1) -> None:
    if not 1 <= rate_bytes <= STATE_BYTES:
        raise ValueError("rate_bytes must be in [1, 100]")
    if not 0 <= rounds <= MAX_ROUNDS:
        raise ValueError(f"rounds must be in [0, {MAX_ROUNDS}], got {rounds}")


def permute(state: bytes, rounds: int) -> bytes:
    _check_rounds(rounds)
    if len(state) != STATE_BYTES:
        raise ValueError("state must be 100 bytes")
    a = list(_LANES.unpack(state))
    _rounds(a, rounds)
    return _LANES.pack(*a)


def absorb_blocks(state: bytes, data: bytes, rate_bytes: int, rounds: int) -> bytes:
    """XOR each rate-sized block of ``data`` into the state and permute."""
    _check_rounds(rounds, rate_bytes)
    if len(data) % rate_bytes:
        raise ValueError("data length must be a multiple of the rate")
    a = list(_LANES.unpack(state))
    pad = STATE_BYTES - rate_bytes
    for off in range(0, len(data), rate_bytes):
        block = _LANES.unpack(data[off:off + rate_bytes] + bytes(pad))
        for i in range(25):
            a[i] ^= block[i]
        _rounds(a, rounds)
    return _LANES.pack(*a)


def duplex_chain(state: bytes, inputs: list, rate_bytes: int, rounds: int) -> list:
    """Run one duplexing call per input and return every intermediate state.

    Each input is padded with pad10*1 to a single rate block; inputs longer
    than ``rate_bytes - 1`` bytes are rejected.
    """
    _check_rounds(rounds, rate_bytes)
    a = list(_LANES.unpack(state))
    out = []
    for sigma in inputs:
        n = len(sigma)
        if n > rate_bytes - 1:
            raise ValueError("duplex input does not fit one padded block")
        block = bytearray(STATE_BYTES)
        block[:n] = sigma
        block[n] ^= 0x01
        block[rate_bytes - 1] ^= 0x80
        words = _LANES.unpack(block)
        for i in range(25):
            a[i] ^= words[i]
        _rounds(a, rounds)
        out.append(_LANES.pack(*a))
    return out
