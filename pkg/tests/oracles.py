"""Independent reference oracles used to freeze expected values.

Nothing here imports huffrev's hashing code.  The Keccak oracle is a
straight-line transcription of the reference pseudocode for any lane width:
round constants come from the rc(t) LFSR and rotation offsets from the
(t+1)(t+2)/2 walk, so neither table is shared with the production kernels.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction


def _rc_bit(t: int) -> int:
    if t % 255 == 0:
        return 1
    r = [1, 0, 0, 0, 0, 0, 0, 0]
    for _ in range(t % 255):
        r = [0] + r
        r[0] ^= r[8]
        r[4] ^= r[8]
        r[5] ^= r[8]
        r[6] ^= r[8]
        r = r[:8]
    return r[0]


def round_constant(ir: int, w: int) -> int:
    ell = int(math.log2(w))
    rc = 0
    for j in range(ell + 1):
        if _rc_bit(j + 7 * ir):
            rc |= 1 << ((1 << j) - 1)
    return rc


def rotation_offsets(w: int) -> dict[tuple[int, int], int]:
    offs = {(0, 0): 0}
    x, y = 1, 0
    for t in range(24):
        offs[(x, y)] = ((t + 1) * (t + 2) // 2) % w
        x, y = y, (2 * x + 3 * y) % 5
    return offs


def keccak_f(lanes: list[list[int]], w: int, rounds: int) -> list[list[int]]:
    """Reference Keccak-f on ``lanes[x][y]`` with lane width ``w``."""
    mask = (1 << w) - 1
    offs = rotation_offsets(w)

    def rot(v: int, n: int) -> int:
        n %= w
        return ((v << n) | (v >> (w - n))) & mask if n else v

    a = [row[:] for row in lanes]
    for ir in range(rounds):
        c = [a[x][0] ^ a[x][1] ^ a[x][2] ^ a[x][3] ^ a[x][4] for x in range(5)]
        d = [c[(x - 1) % 5] ^ rot(c[(x + 1) % 5], 1) for x in range(5)]
        a = [[a[x][y] ^ d[x] for y in range(5)] for x in range(5)]
        b = [[0] * 5 for _ in range(5)]
        for x in range(5):
            for y in range(5):
                b[y][(2 * x + 3 * y) % 5] = rot(a[x][y], offs[(x, y)])
        a = [[b[x][y] ^ ((~b[(x + 1) % 5][y]) & b[(x + 2) % 5][y]) & mask
              for y in range(5)] for x in range(5)]
        a[0][0] ^= round_constant(ir, w)
    return a


def state_from_bytes(data: bytes, w: int) -> list[list[int]]:
    nb = w // 8
    return [[int.from_bytes(data[(x + 5 * y) * nb:(x + 5 * y + 1) * nb], "little")
             for y in range(5)] for x in range(5)]


def state_to_bytes(lanes: list[list[int]], w: int) -> bytes:
    nb = w // 8
    return b"".join(lanes[i % 5][i // 5].to_bytes(nb, "little") for i in range(25))


def permute_bytes(data: bytes, w: int, rounds: int) -> bytes:
    return state_to_bytes(keccak_f(state_from_bytes(data, w), w, rounds), w)


def sponge(message_bits: list[int], w: int, rate_bits: int, out_bits: int,
           rounds: int) -> list[int]:
    """Bit-level sponge with pad10*1, mirroring the reference pseudocode."""
    b = 25 * w
    padded = list(message_bits) + [1] + [0] * ((-len(message_bits) - 2) % rate_bits) + [1]
    s = [0] * b
    for off in range(0, len(padded), rate_bits):
        blk = padded[off:off + rate_bits]
        for i, bit in enumerate(blk):
            s[i] ^= bit
        s = _bits_permute(s, w, rounds)
    z: list[int] = []
    while True:
        z += s[:rate_bits]
        if len(z) >= out_bits:
            return z[:out_bits]
        s = _bits_permute(s, w, rounds)


def _bits_permute(bits: list[int], w: int, rounds: int) -> list[int]:
    data = bytes(sum(bits[8 * i + j] << j for j in range(8)) for i in range(len(bits) // 8))
    out = permute_bytes(data, w, rounds)
    return [(byte >> j) & 1 for byte in out for j in range(8)]


def to_bits(data: bytes) -> list[int]:
    return [(byte >> j) & 1 for byte in data for j in range(8)]


def from_bits(bits: list[int]) -> bytes:
    return bytes(sum(bits[8 * i + j] << j for j in range(8) if 8 * i + j < len(bits))
                 for i in range((len(bits) + 7) // 8))


def min_expected_depth(weights: list[Fraction], k: int) -> Fraction:
    """Exhaustive minimum of sum(w_i * d_i) over all k-ary prefix codes.

    Enumerates every depth vector in [0, n-1]^n and keeps those satisfying
    Kraft's inequality (checked in exact integer arithmetic).
    """
    n = len(weights)
    if n == 1:
        return Fraction(0)
    top = n - 1
    cap = k ** top
    powers = [k ** (top - d) for d in range(n)]
    den = math.lcm(*(w.denominator for w in weights))
    iw = [int(w * den) for w in weights]
    best = None
    for depths in itertools.product(range(n), repeat=n):
        if sum(powers[d] for d in depths) > cap:
            continue
        cost = sum(w * d for w, d in zip(iw, depths))
        if best is None or cost < best:
            best = cost
    return Fraction(best, den)
