"""Keccak-f[800] permutation, pad10*1, sponge hashing and the duplex construction.

Bit and byte conventions follow the Keccak reference code: lanes are loaded
little-endian and bit ``i`` of a message is bit ``i % 8`` (LSB first) of byte
``i // 8``.  The heavy lifting happens in :mod:`huffrev._kernel`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from . import _kernel
from .errors import DuplexError, OversizedBlock

LANE_BITS = 32
WIDTH_BITS = 25 * LANE_BITS
STATE_BYTES = WIDTH_BITS // 8
# 12 + 2*log2(lane width); Keccak-f[1600] would use 24.
ROUNDS = 22


@dataclass(frozen=True)
class KeccakState:
    """A 5x5 grid of 32-bit lanes, stored as 100 little-endian bytes."""

    data: bytes = bytes(STATE_BYTES)

    def __post_init__(self) -> None:
        if len(self.data) != STATE_BYTES:
            raise ValueError(f"state must be {STATE_BYTES} bytes, got {len(self.data)}")

    @classmethod
    def from_lanes(cls, lanes: Sequence[Sequence[int]]) -> "KeccakState":
        """Build from ``lanes[x][y]``."""
        flat = [0] * 25
        for x in range(5):
            for y in range(5):
                v = lanes[x][y]
                if not 0 <= v < 1 << LANE_BITS:
                    raise ValueError("lane value out of range")
                flat[x + 5 * y] = v
        return cls(b"".join(v.to_bytes(4, "little") for v in flat))

    def lane(self, x: int, y: int) -> int:
        i = 4 * (x + 5 * y)
        return int.from_bytes(self.data[i:i + 4], "little")

    @property
    def lanes(self) -> list[list[int]]:
        return [[self.lane(x, y) for y in range(5)] for x in range(5)]

    def hex(self) -> str:
        return self.data.hex()


def keccak_f800(state: KeccakState, rounds: int = ROUNDS) -> KeccakState:
    return KeccakState(_kernel.permute(state.data, rounds))


@dataclass(frozen=True)
class SpongeParams:
    rate_bits: int = 544
    capacity_bits: int = 256
    output_bits: int = 256

    def __post_init__(self) -> None:
        if self.rate_bits + self.capacity_bits != WIDTH_BITS:
            raise ValueError("rate + capacity must equal 800 bits")
        if self.rate_bits <= 0 or self.rate_bits % 8:
            raise ValueError("rate must be a positive multiple of 8 bits")
        if self.output_bits < 0:
            raise ValueError("output_bits must be non-negative")

    @property
    def rate_bytes(self) -> int:
        return self.rate_bits // 8

    @property
    def max_duplex_bytes(self) -> int:
        """Largest whole-byte input a single duplexing call accepts (r - 2 bits)."""
        return (self.rate_bits - 2) // 8


DEFAULT_PARAMS = SpongeParams()


def bytes_to_bits(data: bytes) -> list[int]:
    return [(b >> i) & 1 for b in data for i in range(8)]


def bits_to_bytes(bits: Sequence[int]) -> bytes:
    if len(bits) % 8:
        raise ValueError("bit length must be a multiple of 8")
    out = bytearray(len(bits) // 8)
    for i, bit in enumerate(bits):
        if bit:
            out[i >> 3] |= 1 << (i & 7)
    return bytes(out)


def pad10star1(message: Sequence[int], rate_bits: int) -> list[list[int]]:
    """Apply multi-rate padding to a bit sequence and split it into blocks."""
    if rate_bits < 2:
        raise ValueError("rate_bits must be at least 2")
    zeros = (-len(message) - 2) % rate_bits
    padded = list(message) + [1] + [0] * zeros + [1]
    return [padded[i:i + rate_bits] for i in range(0, len(padded), rate_bits)]


def unpad10star1(padded: Sequence[int]) -> list[int]:
    """Inverse of :func:`pad10star1` on the concatenated blocks."""
    if len(padded) < 2 or padded[-1] != 1:
        raise ValueError("not a pad10*1 padded sequence")
    i = len(padded) - 2
    while i >= 0 and padded[i] == 0:
        i -= 1
    if i < 0:
        raise ValueError("not a pad10*1 padded sequence")
    return list(padded[:i])


def pad_bytes(message: bytes, rate_bytes: int) -> bytes:
    """Byte-aligned pad10*1: the same bits as :func:`pad10star1` for whole-byte input."""
    n = len(message)
    total = (n // rate_bytes + 1) * rate_bytes
    out = bytearray(total)
    out[:n] = message
    out[n] ^= 0x01
    out[-1] ^= 0x80
    return bytes(out)


def _truncate(buf: bytes, out_bits: int) -> bytes:
    nbytes = (out_bits + 7) // 8
    out = bytearray(buf[:nbytes])
    if out_bits % 8:
        out[-1] &= (1 << (out_bits % 8)) - 1
    return bytes(out)


def sponge_hash(message: bytes, params: SpongeParams = DEFAULT_PARAMS,
                output_bits: int | None = None, rounds: int = ROUNDS) -> bytes:
    """Absorb ``pad(message)`` and squeeze ``output_bits`` (default ``params.output_bits``).

    Outputs whose length is not a whole number of bytes have the unused high
    bits of the last byte cleared.
    """
    n = params.output_bits if output_bits is None else output_bits
    r = params.rate_bytes
    state = _kernel.absorb_blocks(bytes(STATE_BYTES), pad_bytes(message, r), r, rounds)
    out = state[:r]
    while len(out) * 8 < n:
        state = _kernel.permute(state, rounds)
        out += state[:r]
    return _truncate(out, n)


@dataclass(frozen=True)
class DuplexContext:
    """Resumable duplex state; a value, so snapshots are just references."""

    state_bytes: bytes = bytes(STATE_BYTES)
    params: SpongeParams = DEFAULT_PARAMS
    call_count: int = 0
    rounds: int = ROUNDS

    @property
    def state(self) -> KeccakState:
        return KeccakState(self.state_bytes)

    def output(self, out_bits: int | None = None) -> bytes:
        """Rate-portion output of the most recent duplexing call."""
        if self.call_count == 0:
            raise DuplexError("no duplexing call has been made; nothing to output")
        n = self.params.output_bits if out_bits is None else out_bits
        if not 0 <= n <= self.params.rate_bits:
            raise ValueError("out_bits must be in [0, rate_bits]")
        return _truncate(self.state_bytes, n)


def duplex_init(params: SpongeParams = DEFAULT_PARAMS, rounds: int = ROUNDS) -> DuplexContext:
    return DuplexContext(bytes(STATE_BYTES), params, 0, rounds)


def duplexing(ctx: DuplexContext, sigma: bytes,
              out_bits: int | None = None) -> tuple[DuplexContext, bytes]:
    """One duplexing call: pad ``sigma`` to a block, absorb, permute, output.

    Raises OversizedBlock when ``sigma`` exceeds ``r - 2`` bits; callers chunk.
    """
    p = ctx.params
    if len(sigma) > p.max_duplex_bytes:
        raise OversizedBlock(
            f"duplex input of {len(sigma)} bytes exceeds {p.max_duplex_bytes}")
    n = p.output_bits if out_bits is None else out_bits
    if not 0 <= n <= p.rate_bits:
        raise ValueError("out_bits must be in [0, rate_bits]")
    (state,) = _kernel.duplex_chain(ctx.state_bytes, [bytes(sigma)], p.rate_bytes, ctx.rounds)
    new = DuplexContext(state, p, ctx.call_count + 1, ctx.rounds)
    return new, _truncate(state, n)


def duplex_absorb(ctx: DuplexContext, inputs: Sequence[bytes]) -> list[DuplexContext]:
    """Run one duplexing call per input; return the context after each call."""
    p = ctx.params
    limit = p.max_duplex_bytes
    for sigma in inputs:
        if len(sigma) > limit:
            raise OversizedBlock(f"duplex input of {len(sigma)} bytes exceeds {limit}")
    states = _kernel.duplex_chain(ctx.state_bytes, [bytes(s) for s in inputs],
                                  p.rate_bytes, ctx.rounds)
    c = ctx.call_count
    return [DuplexContext(s, p, c + i + 1, ctx.rounds) for i, s in enumerate(states)]


def chunk(data: bytes, params: SpongeParams = DEFAULT_PARAMS) -> list[bytes]:
    """Split ``data`` into pieces that each fit a single duplexing call."""
    step = params.max_duplex_bytes
    return [data[i:i + step] for i in range(0, len(data), step)] or [b""]
