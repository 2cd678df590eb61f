"""Signed roots, the signer contract, and membership proofs."""

from __future__ import annotations

import hmac
import struct
from dataclasses import dataclass
from typing import Protocol

from .errors import MalformedFrame
from .hashing import (
    CERT_BYTES,
    DIGEST_BYTES,
    CertificateId,
    decode_cert,
    leaf_digest,
    node_digest,
)
from .keccak import chunk, duplex_absorb, duplex_init

TAG_BYTES = 32
SIGNED_ROOT_BYTES = DIGEST_BYTES + 8 + TAG_BYTES
PROOF_VERSION = 1
# version + cert id + class + path length + signed root
PROOF_FIXED_BYTES = 1 + CERT_BYTES + 1 + 2 + SIGNED_ROOT_BYTES


class Signer(Protocol):
    def sign(self, message: bytes) -> bytes: ...

    def verify(self, message: bytes, tag: bytes) -> bool: ...


class DuplexMac:
    """Keyed duplex MAC: the key is absorbed first, then the message.

    Desk-scale stand-in for a real signature; an asymmetric scheme can
    replace it behind the same ``sign``/``verify`` pair.
    """

    def __init__(self, key: bytes):
        if not 1 <= len(key) <= 255:
            raise ValueError("key must be 1..255 bytes")
        self.key = bytes(key)
        prefix = bytes((0x10, len(self.key))) + self.key
        self._keyed = duplex_absorb(duplex_init(), chunk(prefix))[-1]

    @classmethod
    def from_hex(cls, text: str) -> "DuplexMac":
        return cls(bytes.fromhex(text))

    def sign(self, message: bytes) -> bytes:
        ctx = duplex_absorb(self._keyed, chunk(b"\x11" + bytes(message)))[-1]
        return ctx.output(TAG_BYTES * 8)

    def verify(self, message: bytes, tag: bytes) -> bool:
        return len(tag) == TAG_BYTES and hmac.compare_digest(self.sign(message), bytes(tag))


def root_message(root_digest: bytes, epoch: int) -> bytes:
    return bytes(root_digest) + epoch.to_bytes(8, "big")


@dataclass(frozen=True)
class SignedRoot:
    root_digest: bytes
    epoch: int
    signature: bytes

    @classmethod
    def create(cls, root_digest: bytes, epoch: int, signer: Signer) -> "SignedRoot":
        return cls(root_digest, epoch, signer.sign(root_message(root_digest, epoch)))

    def verify(self, verifier: Signer) -> bool:
        return verifier.verify(root_message(self.root_digest, self.epoch), self.signature)

    def to_bytes(self) -> bytes:
        return root_message(self.root_digest, self.epoch) + self.signature

    @classmethod
    def from_bytes(cls, data: bytes) -> "SignedRoot":
        if len(data) != SIGNED_ROOT_BYTES:
            raise MalformedFrame("signed root must be 72 bytes")
        return cls(bytes(data[:32]), int.from_bytes(data[32:40], "big"), bytes(data[40:]))


@dataclass(frozen=True)
class Verdict:
    accepted: bool
    reason: str | None = None

    def __bool__(self) -> bool:
        return self.accepted


ACCEPT = Verdict(True)


class RootVerifier:
    """Checks TTP signatures and epoch freshness of signed roots.

    Roots more than ``window`` epochs behind the newest authentic root seen
    so far are rejected as stale.
    """

    def __init__(self, verifier: Signer, window: int = 1, newest_epoch: int | None = None):
        if window < 0:
            raise ValueError("freshness window must be non-negative")
        self.verifier = verifier
        self.window = window
        self.newest_epoch = newest_epoch

    def check(self, signed: SignedRoot) -> Verdict:
        if not signed.verify(self.verifier):
            return Verdict(False, "signature")
        if self.newest_epoch is not None and signed.epoch < self.newest_epoch - self.window:
            return Verdict(False, "stale_root")
        if self.newest_epoch is None or signed.epoch > self.newest_epoch:
            self.newest_epoch = signed.epoch
        return ACCEPT


@dataclass(frozen=True)
class PathStep:
    level: int
    index: int
    siblings: tuple[bytes, ...]


@dataclass(frozen=True)
class MembershipProof:
    cert: CertificateId
    path: tuple[PathStep, ...]
    signed_root: SignedRoot

    @property
    def k(self) -> int | None:
        return len(self.path[0].siblings) + 1 if self.path else None

    def to_bytes(self) -> bytes:
        out = bytearray((PROOF_VERSION,))
        out += self.cert.encode()
        out.append(self.cert.class_id)
        out += struct.pack(">H", len(self.path))
        for step in self.path:
            out.append(step.index)
            for s in step.siblings:
                out += s
        out += self.signed_root.to_bytes()
        return bytes(out)

    @classmethod
    def from_bytes(cls, data: bytes) -> "MembershipProof":
        data = bytes(data)
        if len(data) < PROOF_FIXED_BYTES:
            raise MalformedFrame("proof too short")
        if data[0] != PROOF_VERSION:
            raise MalformedFrame(f"unknown proof version {data[0]}")
        try:
            cert = CertificateId(decode_cert(data[1:1 + CERT_BYTES]), data[1 + CERT_BYTES])
        except ValueError as exc:
            raise MalformedFrame(str(exc)) from exc
        (depth,) = struct.unpack_from(">H", data, 31)
        body = data[33:-SIGNED_ROOT_BYTES]
        steps: list[PathStep] = []
        if depth == 0:
            if body:
                raise MalformedFrame("trailing bytes in proof path")
        else:
            if len(body) % depth:
                raise MalformedFrame("proof path length mismatch")
            per = len(body) // depth
            if per < 1 + DIGEST_BYTES or (per - 1) % DIGEST_BYTES:
                raise MalformedFrame("proof path length mismatch")
            k = (per - 1) // DIGEST_BYTES + 1
            for i in range(depth):
                rec = body[i * per:(i + 1) * per]
                if rec[0] >= k:
                    raise MalformedFrame("child index out of range")
                sibs = tuple(rec[1 + j * DIGEST_BYTES:1 + (j + 1) * DIGEST_BYTES]
                             for j in range(k - 1))
                steps.append(PathStep(depth - 1 - i, rec[0], sibs))
        return cls(cert, tuple(steps), SignedRoot.from_bytes(data[-SIGNED_ROOT_BYTES:]))


def fold_path(leaf: bytes, path: tuple[PathStep, ...]) -> bytes:
    cur = leaf
    for step in path:
        k = len(step.siblings) + 1
        children = list(step.siblings[:step.index]) + [cur] + list(step.siblings[step.index:])
        cur = node_digest(step.level, k, children)
    return cur


def verify_membership(proof: MembershipProof, cert_id: int,
                      verifier: RootVerifier) -> Verdict:
    """Accept iff signature, freshness, leaf and path checks all pass.

    The reason on rejection names the first failed check: ``signature``,
    ``stale_root``, ``leaf`` or ``path``.
    """
    verdict = verifier.check(proof.signed_root)
    if not verdict:
        return verdict
    if proof.cert.id != cert_id:
        return Verdict(False, "leaf")
    depth = len(proof.path)
    for i, step in enumerate(proof.path):
        if step.level != depth - 1 - i or not 0 <= step.index <= len(step.siblings):
            return Verdict(False, "path")
        if any(len(s) != DIGEST_BYTES for s in step.siblings):
            return Verdict(False, "path")
        if len(step.siblings) != len(proof.path[0].siblings):
            return Verdict(False, "path")
    leaf = leaf_digest(cert_id, proof.cert.class_id)
    if fold_path(leaf, proof.path) != proof.signed_root.root_digest:
        return Verdict(False, "path")
    return ACCEPT
