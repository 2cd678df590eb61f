"""Flat signed certificate revocation list, the baseline for size comparisons."""

from __future__ import annotations

import bisect
import struct
from dataclasses import dataclass
from typing import Iterable

from .errors import MalformedFrame
from .hashing import CERT_BYTES, decode_cert, encode_cert
from .proof import TAG_BYTES, Signer

# u64 epoch + u32 count + signature
CRL_FRAMING_BYTES = 8 + 4 + TAG_BYTES


@dataclass(frozen=True)
class CrlBaseline:
    entries: tuple[int, ...]
    epoch: int
    signature: bytes

    def __post_init__(self) -> None:
        if any(a >= b for a, b in zip(self.entries, self.entries[1:])):
            raise ValueError("CRL entries must be strictly ascending")

    @staticmethod
    def _body(entries: Iterable[int], epoch: int, count: int) -> bytes:
        return struct.pack(">QI", epoch, count) + b"".join(encode_cert(e) for e in entries)

    @classmethod
    def build(cls, cert_ids: Iterable[int], epoch: int, signer: Signer) -> "CrlBaseline":
        entries = tuple(sorted(set(cert_ids)))
        return cls(entries, epoch, signer.sign(cls._body(entries, epoch, len(entries))))

    @property
    def size_bytes(self) -> int:
        return CERT_BYTES * len(self.entries) + CRL_FRAMING_BYTES

    def contains(self, cert_id: int) -> bool:
        i = bisect.bisect_left(self.entries, cert_id)
        return i < len(self.entries) and self.entries[i] == cert_id

    def verify(self, verifier: Signer) -> bool:
        return verifier.verify(self._body(self.entries, self.epoch, len(self.entries)), self.signature)

    def to_bytes(self) -> bytes:
        return self._body(self.entries, self.epoch, len(self.entries)) + self.signature

    @classmethod
    def from_bytes(cls, data: bytes) -> "CrlBaseline":
        if len(data) < CRL_FRAMING_BYTES:
            raise MalformedFrame("CRL too short")
        epoch, count = struct.unpack_from(">QI", data)
        if len(data) != CERT_BYTES * count + CRL_FRAMING_BYTES:
            raise MalformedFrame("CRL length does not match its count")
        try:
            entries = tuple(decode_cert(data[12 + i * CERT_BYTES:12 + (i + 1) * CERT_BYTES])
                            for i in range(count))
            return cls(entries, epoch, bytes(data[-TAG_BYTES:]))
        except ValueError as exc:
            raise MalformedFrame(str(exc)) from exc
