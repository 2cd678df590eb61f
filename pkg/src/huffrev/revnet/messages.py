"""Wire messages and length-prefixed framing.

A frame is a 4-byte big-endian payload length, a 1-byte message type and
the payload.  All integers are big-endian.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass
from typing import Union

from ..errors import MalformedFrame
from ..hashing import CERT_BYTES, DIGEST_BYTES, CertificateId, decode_cert, encode_cert
from ..proof import SIGNED_ROOT_BYTES, TAG_BYTES, MembershipProof, SignedRoot, Signer
from ..tree import TreeDelta

HEADER_BYTES = 5
MAX_PAYLOAD = 64 << 20


class MsgType(enum.IntEnum):
    QUERY = 0x01
    RESPONSE = 0x02
    DELTA = 0x03
    SNAPSHOT_REQUEST = 0x04
    SNAPSHOT = 0x05
    ADMIN = 0x06
    ACK = 0x07
    ERROR = 0xFF


class Status(enum.IntEnum):
    NOT_REVOKED = 0x00
    REVOKED = 0x01


class ErrorCode(enum.IntEnum):
    NOT_BOOTSTRAPPED = 1
    MALFORMED = 2
    EPOCH_GAP = 3
    BAD_SIGNATURE = 4
    ROOT_MISMATCH = 5
    DUPLICATE = 6
    NOT_FOUND = 7
    TREE_ERROR = 8
    UNSUPPORTED = 9
    UNAUTHORIZED = 10

    @property
    def retryable(self) -> bool:
        return self in (ErrorCode.NOT_BOOTSTRAPPED, ErrorCode.EPOCH_GAP)


@dataclass(frozen=True)
class QueryMessage:
    request_id: int
    cert_id: int

    def payload(self) -> bytes:
        return struct.pack(">Q", self.request_id) + encode_cert(self.cert_id)

    @classmethod
    def parse(cls, data: bytes) -> "QueryMessage":
        if len(data) != 8 + CERT_BYTES:
            raise MalformedFrame("query payload must be 37 bytes")
        try:
            return cls(struct.unpack_from(">Q", data)[0], decode_cert(data[8:]))
        except ValueError as exc:
            raise MalformedFrame(str(exc)) from exc


@dataclass(frozen=True)
class NotRevokedStatement:
    """RSU-signed claim that ``cert_id`` is absent from the tree at ``epoch``."""

    cert_id: int
    root_digest: bytes
    epoch: int
    timestamp: int
    signature: bytes

    SIZE = CERT_BYTES + DIGEST_BYTES + 8 + 8 + TAG_BYTES

    @staticmethod
    def message(cert_id: int, root_digest: bytes, epoch: int, timestamp: int) -> bytes:
        return encode_cert(cert_id) + bytes(root_digest) + struct.pack(">QQ", epoch, timestamp)

    @classmethod
    def create(cls, cert_id: int, signed: SignedRoot, timestamp: int,
               signer: Signer) -> "NotRevokedStatement":
        msg = cls.message(cert_id, signed.root_digest, signed.epoch, timestamp)
        return cls(cert_id, signed.root_digest, signed.epoch, timestamp, signer.sign(msg))

    def verify(self, verifier: Signer) -> bool:
        msg = self.message(self.cert_id, self.root_digest, self.epoch, self.timestamp)
        return verifier.verify(msg, self.signature)

    def to_bytes(self) -> bytes:
        return self.message(self.cert_id, self.root_digest, self.epoch, self.timestamp) + self.signature

    @classmethod
    def from_bytes(cls, data: bytes) -> "NotRevokedStatement":
        if len(data) != cls.SIZE:
            raise MalformedFrame(f"statement must be {cls.SIZE} bytes")
        try:
            cert_id = decode_cert(data[:CERT_BYTES])
        except ValueError as exc:
            raise MalformedFrame(str(exc)) from exc
        pos = CERT_BYTES
        root = bytes(data[pos:pos + DIGEST_BYTES])
        epoch, ts = struct.unpack_from(">QQ", data, pos + DIGEST_BYTES)
        return cls(cert_id, root, epoch, ts, bytes(data[-TAG_BYTES:]))


@dataclass(frozen=True)
class QueryResponse:
    """Answer to a query, sealed by the RSU with ``tag`` over all other fields.

    ``body`` stays raw until the tag has been checked; :meth:`proof` and
    :meth:`statement` parse it according to ``status``.
    """

    request_id: int
    status: int
    signed_root: SignedRoot
    body: bytes
    tag: bytes

    @staticmethod
    def _sealed(request_id: int, status: int, signed_root: SignedRoot, body: bytes) -> bytes:
        return (struct.pack(">QB", request_id, status) + signed_root.to_bytes()
                + struct.pack(">I", len(body)) + body)

    @classmethod
    def build(cls, request_id: int, signed_root: SignedRoot,
              body: Union[MembershipProof, NotRevokedStatement], signer: Signer) -> "QueryResponse":
        status = Status.REVOKED if isinstance(body, MembershipProof) else Status.NOT_REVOKED
        raw = body.to_bytes()
        sealed = cls._sealed(request_id, status, signed_root, raw)
        return cls(request_id, int(status), signed_root, raw,
                   signer.sign(bytes((MsgType.RESPONSE,)) + sealed))

    def check_tag(self, verifier: Signer) -> bool:
        sealed = self._sealed(self.request_id, self.status, self.signed_root, self.body)
        return verifier.verify(bytes((MsgType.RESPONSE,)) + sealed, self.tag)

    def proof(self) -> MembershipProof:
        if self.status != Status.REVOKED:
            raise MalformedFrame("response does not carry a proof")
        return MembershipProof.from_bytes(self.body)

    def statement(self) -> NotRevokedStatement:
        if self.status != Status.NOT_REVOKED:
            raise MalformedFrame("response does not carry a statement")
        return NotRevokedStatement.from_bytes(self.body)

    def payload(self) -> bytes:
        return self._sealed(self.request_id, self.status, self.signed_root, self.body) + self.tag

    @classmethod
    def parse(cls, data: bytes) -> "QueryResponse":
        fixed = 9 + SIGNED_ROOT_BYTES + 4
        if len(data) < fixed + TAG_BYTES:
            raise MalformedFrame("response too short")
        request_id, status = struct.unpack_from(">QB", data)
        if status not in (Status.REVOKED, Status.NOT_REVOKED):
            raise MalformedFrame(f"unknown status {status}")
        signed = SignedRoot.from_bytes(data[9:9 + SIGNED_ROOT_BYTES])
        (n,) = struct.unpack_from(">I", data, 9 + SIGNED_ROOT_BYTES)
        if len(data) != fixed + n + TAG_BYTES:
            raise MalformedFrame("response body length mismatch")
        return cls(request_id, status, signed, bytes(data[fixed:fixed + n]), bytes(data[-TAG_BYTES:]))


@dataclass(frozen=True)
class DeltaMessage:
    delta: TreeDelta

    def payload(self) -> bytes:
        return self.delta.to_bytes()

    @classmethod
    def parse(cls, data: bytes) -> "DeltaMessage":
        return cls(TreeDelta.from_bytes(data))


@dataclass(frozen=True)
class SnapshotRequest:
    have_epoch: int

    def payload(self) -> bytes:
        return struct.pack(">Q", self.have_epoch)

    @classmethod
    def parse(cls, data: bytes) -> "SnapshotRequest":
        if len(data) != 8:
            raise MalformedFrame("snapshot request payload must be 8 bytes")
        return cls(struct.unpack(">Q", data)[0])


@dataclass(frozen=True)
class SnapshotMessage:
    snapshot: bytes

    def payload(self) -> bytes:
        return self.snapshot

    @classmethod
    def parse(cls, data: bytes) -> "SnapshotMessage":
        return cls(bytes(data))


ADMIN_INSERT = 1
ADMIN_REMOVE = 2


@dataclass(frozen=True)
class AdminRequest:
    """Operator command to the TTP, authenticated with the TTP key.

    ``epoch`` must equal the TTP's current epoch, which stops replays.
    """

    op: int
    cert: CertificateId
    epoch: int
    tag: bytes

    @staticmethod
    def _body(op: int, cert: CertificateId, epoch: int) -> bytes:
        return struct.pack(">BB", op, cert.class_id) + cert.encode() + struct.pack(">Q", epoch)

    @classmethod
    def create(cls, op: int, cert: CertificateId, epoch: int, signer: Signer) -> "AdminRequest":
        body = cls._body(op, cert, epoch)
        return cls(op, cert, epoch, signer.sign(bytes((MsgType.ADMIN,)) + body))

    def check_tag(self, verifier: Signer) -> bool:
        body = self._body(self.op, self.cert, self.epoch)
        return verifier.verify(bytes((MsgType.ADMIN,)) + body, self.tag)

    def payload(self) -> bytes:
        return self._body(self.op, self.cert, self.epoch) + self.tag

    @classmethod
    def parse(cls, data: bytes) -> "AdminRequest":
        if len(data) != 2 + CERT_BYTES + 8 + TAG_BYTES:
            raise MalformedFrame("bad admin payload length")
        op, class_id = data[0], data[1]
        if op not in (ADMIN_INSERT, ADMIN_REMOVE):
            raise MalformedFrame(f"unknown admin op {op}")
        try:
            cert = CertificateId(decode_cert(data[2:2 + CERT_BYTES]), class_id)
        except ValueError as exc:
            raise MalformedFrame(str(exc)) from exc
        (epoch,) = struct.unpack_from(">Q", data, 2 + CERT_BYTES)
        return cls(op, cert, epoch, bytes(data[-TAG_BYTES:]))


@dataclass(frozen=True)
class Ack:
    epoch: int

    def payload(self) -> bytes:
        return struct.pack(">Q", self.epoch)

    @classmethod
    def parse(cls, data: bytes) -> "Ack":
        if len(data) != 8:
            raise MalformedFrame("ack payload must be 8 bytes")
        return cls(struct.unpack(">Q", data)[0])


@dataclass(frozen=True)
class ErrorMessage:
    code: int
    text: str = ""

    def payload(self) -> bytes:
        raw = self.text.encode()[:0xFFFF]
        return struct.pack(">BH", self.code, len(raw)) + raw

    @classmethod
    def parse(cls, data: bytes) -> "ErrorMessage":
        if len(data) < 3:
            raise MalformedFrame("error payload too short")
        code, n = struct.unpack_from(">BH", data)
        if len(data) != 3 + n:
            raise MalformedFrame("error text length mismatch")
        try:
            text = bytes(data[3:]).decode()
        except UnicodeDecodeError as exc:
            raise MalformedFrame("error text is not UTF-8") from exc
        return cls(code, text)


Message = Union[QueryMessage, QueryResponse, DeltaMessage, SnapshotRequest,
                SnapshotMessage, AdminRequest, Ack, ErrorMessage]

_TYPES: dict[MsgType, type] = {
    MsgType.QUERY: QueryMessage,
    MsgType.RESPONSE: QueryResponse,
    MsgType.DELTA: DeltaMessage,
    MsgType.SNAPSHOT_REQUEST: SnapshotRequest,
    MsgType.SNAPSHOT: SnapshotMessage,
    MsgType.ADMIN: AdminRequest,
    MsgType.ACK: Ack,
    MsgType.ERROR: ErrorMessage,
}
_CODES = {cls: t for t, cls in _TYPES.items()}


def encode_frame(message: Message) -> bytes:
    payload = message.payload()
    if len(payload) > MAX_PAYLOAD:
        raise ValueError("payload too large")
    return struct.pack(">IB", len(payload), _CODES[type(message)]) + payload


def parse_header(header: bytes) -> tuple[int, int]:
    """Payload length and type byte from the 5-byte frame header."""
    if len(header) != HEADER_BYTES:
        raise MalformedFrame("truncated frame header")
    length, mtype = struct.unpack(">IB", header)
    if length > MAX_PAYLOAD:
        raise MalformedFrame(f"frame length {length} exceeds limit")
    if mtype not in _TYPES:
        raise MalformedFrame(f"unknown message type 0x{mtype:02X}")
    return length, mtype


def decode_frame(data: bytes) -> Message:
    data = bytes(data)
    length, mtype = parse_header(data[:HEADER_BYTES])
    if len(data) < HEADER_BYTES + length:
        raise MalformedFrame("truncated frame")
    if len(data) > HEADER_BYTES + length:
        raise MalformedFrame("trailing bytes after frame")
    return _TYPES[MsgType(mtype)].parse(data[HEADER_BYTES:])
