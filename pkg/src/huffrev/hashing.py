"""Certificate identifiers and the domain-separated node hashing rules.

Every digest in the revocation tree is 32 bytes.  Tag bytes keep the kinds
apart: 0x00 leaf, 0x01 internal-node header, 0x02 empty slot, 0x03
tombstone, 0x04 empty tree.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

from . import _kernel
from .keccak import DEFAULT_PARAMS, ROUNDS, STATE_BYTES, sponge_hash

CERT_BITS = 228
CERT_BYTES = 29
DIGEST_BYTES = 32

TAG_LEAF = 0x00
TAG_NODE = 0x01
TAG_EMPTY = 0x02
TAG_TOMBSTONE = 0x03
TAG_EMPTY_TREE = 0x04

RATE_BYTES = DEFAULT_PARAMS.rate_bytes


@dataclass(frozen=True)
class CertificateId:
    id: int
    class_id: int = 0

    def __post_init__(self) -> None:
        if not 0 <= self.id < 1 << CERT_BITS:
            raise ValueError("certificate id must be a 228-bit unsigned integer")
        if not 0 <= self.class_id <= 255:
            raise ValueError("class_id must fit one byte")

    def encode(self) -> bytes:
        return encode_cert(self.id)

    @classmethod
    def from_bytes(cls, data: bytes, class_id: int = 0) -> "CertificateId":
        return cls(decode_cert(data), class_id)

    @classmethod
    def from_hex(cls, text: str, class_id: int = 0) -> "CertificateId":
        return cls(parse_cert_hex(text), class_id)

    def hex(self) -> str:
        return self.encode().hex()


def encode_cert(cert_id: int) -> bytes:
    if not 0 <= cert_id < 1 << CERT_BITS:
        raise ValueError("certificate id must be a 228-bit unsigned integer")
    return cert_id.to_bytes(CERT_BYTES, "big")


def decode_cert(data: bytes) -> int:
    if len(data) != CERT_BYTES:
        raise ValueError(f"certificate encoding must be {CERT_BYTES} bytes")
    if data[0] & 0xF0:
        raise ValueError("top 4 bits of a certificate encoding must be zero")
    return int.from_bytes(data, "big")


def parse_cert_hex(text: str) -> int:
    text = text.strip().lower()
    if text.startswith("0x"):
        text = text[2:]
    try:
        value = int(text, 16)
    except ValueError:
        raise ValueError(f"not a hex certificate id: {text!r}") from None
    encode_cert(value)
    return value


def leaf_digest(cert_id: int, class_id: int) -> bytes:
    return sponge_hash(bytes((TAG_LEAF, class_id)) + encode_cert(cert_id))


def tombstone_digest(class_id: int, slot: int) -> bytes:
    return sponge_hash(bytes((TAG_TOMBSTONE, class_id)) + b"TOMB" + slot.to_bytes(4, "big"))


@lru_cache(maxsize=None)
def empty_digest(level: int) -> bytes:
    """Digest of an unmaterialized slot at ``level`` (root is level 0)."""
    return sponge_hash(bytes((TAG_EMPTY,)) + level.to_bytes(2, "big"))


def empty_tree_root(plan_bytes: bytes) -> bytes:
    return sponge_hash(bytes((TAG_EMPTY_TREE,)) + plan_bytes)


@lru_cache(maxsize=None)
def header_state(level: int, k: int) -> bytes:
    """Duplex state after absorbing the header of a node at ``level``.

    Cached: it depends only on (level, k), so trees never pay for it twice.
    """
    header = bytes((TAG_NODE,)) + level.to_bytes(2, "big") + bytes((k,))
    (state,) = _kernel.duplex_chain(bytes(STATE_BYTES), [header], RATE_BYTES, ROUNDS)
    return state


def node_digest(level: int, k: int, children: Sequence[bytes]) -> bytes:
    """Digest of an internal node from its k child digests.

    Trailing empty-slot digests are not absorbed, which is what lets an
    append cost a single duplexing call per level.  A node with no
    materialized child is itself empty.
    """
    empty = empty_digest(level + 1)
    n = len(children)
    while n and children[n - 1] == empty:
        n -= 1
    if n == 0:
        return empty_digest(level)
    states = _kernel.duplex_chain(header_state(level, k), list(children[:n]), RATE_BYTES, ROUNDS)
    return states[-1][:DIGEST_BYTES]
