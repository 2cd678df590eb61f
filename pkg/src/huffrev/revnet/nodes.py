"""TTP, RSU and vehicle roles.

Every node exposes ``handle(frame) -> frame`` and processes one mutating
message at a time under its lock.  Queries at an RSU take the same lock, so
they never observe a half-applied delta.
"""

from __future__ import annotations

import itertools
import logging
import threading
import time
from dataclasses import dataclass
from typing import Callable, Optional, Protocol

from ..errors import (
    BadSignature,
    DuplicateCertificate,
    EpochGap,
    HuffrevError,
    MalformedFrame,
    NotFound,
    RootMismatch,
    TransportError,
)
from ..hashing import CertificateId
from ..proof import RootVerifier, Signer, verify_membership
from ..tree import RevocationTree, TreeDelta
from .messages import (
    ADMIN_INSERT,
    Ack,
    AdminRequest,
    DeltaMessage,
    ErrorCode,
    ErrorMessage,
    Message,
    NotRevokedStatement,
    QueryMessage,
    QueryResponse,
    SnapshotMessage,
    SnapshotRequest,
    Status,
    decode_frame,
    encode_frame,
)
from .transport import Link

log = logging.getLogger(__name__)


class Clock(Protocol):
    def now(self) -> int: ...


class SystemClock:
    def now(self) -> int:
        return int(time.time())


class ManualClock:
    def __init__(self, start: int = 0):
        self.t = start

    def now(self) -> int:
        return self.t

    def advance(self, seconds: int) -> None:
        self.t += seconds


def error_for(exc: Exception) -> ErrorMessage:
    code = {
        MalformedFrame: ErrorCode.MALFORMED,
        EpochGap: ErrorCode.EPOCH_GAP,
        BadSignature: ErrorCode.BAD_SIGNATURE,
        RootMismatch: ErrorCode.ROOT_MISMATCH,
        DuplicateCertificate: ErrorCode.DUPLICATE,
        NotFound: ErrorCode.NOT_FOUND,
    }.get(type(exc), ErrorCode.TREE_ERROR)
    return ErrorMessage(code, str(exc))


class RemoteError(HuffrevError):
    """A peer answered with an error frame."""

    def __init__(self, message: ErrorMessage):
        try:
            label = ErrorCode(message.code).name.lower()
        except ValueError:
            label = f"error {message.code}"
        super().__init__(f"{label}: {message.text}")
        self.code = message.code
        self.text = message.text


def call(link: Link, message: Message) -> Message:
    """Send ``message`` and decode the reply; error frames raise RemoteError."""
    reply = decode_frame(link.request(encode_frame(message)))
    if isinstance(reply, ErrorMessage):
        raise RemoteError(reply)
    return reply


class _Node:
    def __init__(self) -> None:
        self.lock = threading.RLock()

    def dispatch(self, message: Message) -> Message:
        raise NotImplementedError

    def handle(self, frame: bytes) -> bytes:
        try:
            message = decode_frame(frame)
        except MalformedFrame as exc:
            return encode_frame(ErrorMessage(ErrorCode.MALFORMED, str(exc)))
        try:
            reply = self.dispatch(message)
        except HuffrevError as exc:
            reply = error_for(exc)
        return encode_frame(reply)


class RsuNode(_Node):
    """Road side unit: a tree replica that answers vehicle queries."""

    def __init__(self, name: str, signer: Signer, ttp_verifier: Signer,
                 upstream: Optional[Link] = None, clock: Clock = SystemClock(),
                 tree: Optional[RevocationTree] = None,
                 on_update: Optional[Callable[[RevocationTree], None]] = None):
        super().__init__()
        self.name = name
        self.signer = signer
        self.ttp_verifier = ttp_verifier
        self.upstream = upstream
        self.clock = clock
        self.tree = tree
        self.on_update = on_update
        self.snapshot_requests = 0
        self.duplicates = 0

    @property
    def epoch(self) -> Optional[int]:
        return self.tree.epoch if self.tree else None

    @property
    def root_digest(self) -> Optional[bytes]:
        return self.tree.root_digest if self.tree else None

    def dispatch(self, message: Message) -> Message:
        if isinstance(message, QueryMessage):
            return self.handle_query(message)
        if isinstance(message, DeltaMessage):
            return self.apply_delta(message.delta)
        if isinstance(message, SnapshotMessage):
            return self.load_snapshot(message.snapshot)
        return ErrorMessage(ErrorCode.UNSUPPORTED, f"rsu does not accept {type(message).__name__}")

    def handle_query(self, msg: QueryMessage) -> Message:
        with self.lock:
            tree = self.tree
            if tree is None or tree.signed_root is None:
                return ErrorMessage(ErrorCode.NOT_BOOTSTRAPPED, f"{self.name} has no snapshot yet")
            signed = tree.signed_root
            if msg.cert_id in tree:
                body = tree.prove_membership(msg.cert_id)
            else:
                body = NotRevokedStatement.create(msg.cert_id, signed, self.clock.now(), self.signer)
        log.debug("rsu=%s query id=%x status=%s epoch=%d", self.name, msg.cert_id,
                  "revoked" if not isinstance(body, NotRevokedStatement) else "not_revoked",
                  signed.epoch)
        return QueryResponse.build(msg.request_id, signed, body, self.signer)

    def apply_delta(self, delta: TreeDelta) -> Message:
        with self.lock:
            if self.tree is None:
                return self._recover(f"delta for epoch {delta.epoch} before bootstrap")
            if delta.epoch <= self.tree.epoch:
                self.duplicates += 1
                return Ack(self.tree.epoch)
            try:
                self.tree.apply_delta(delta, self.ttp_verifier)
            except EpochGap as exc:
                return self._recover(str(exc))
            log.info("rsu=%s applied delta epoch=%d ops=%d", self.name, delta.epoch, len(delta.ops))
            self._updated()
            return Ack(self.tree.epoch)

    def _recover(self, why: str) -> Message:
        log.info("rsu=%s requesting snapshot: %s", self.name, why)
        try:
            self.bootstrap()
        except (TransportError, HuffrevError) as exc:
            return ErrorMessage(ErrorCode.EPOCH_GAP, f"{why}; snapshot fetch failed: {exc}")
        return Ack(self.tree.epoch)

    def bootstrap(self) -> int:
        """Fetch and install the TTP's current snapshot; returns its epoch."""
        if self.upstream is None:
            raise TransportError(f"{self.name} has no upstream TTP link")
        with self.lock:
            self.snapshot_requests += 1
            have = self.tree.epoch if self.tree else 0
            reply = call(self.upstream, SnapshotRequest(have))
            if not isinstance(reply, SnapshotMessage):
                raise MalformedFrame("expected a snapshot reply")
            ack = self.load_snapshot(reply.snapshot)
            if isinstance(ack, ErrorMessage):
                raise RemoteError(ack)
            return self.tree.epoch

    def load_snapshot(self, raw: bytes) -> Message:
        tree = RevocationTree.from_snapshot(raw, verifier=self.ttp_verifier)
        if tree.signed_root is None:
            raise BadSignature("snapshot carries no signed root")
        with self.lock:
            if self.tree is not None and tree.epoch < self.tree.epoch:
                return Ack(self.tree.epoch)
            self.tree = tree
            log.info("rsu=%s installed snapshot epoch=%d", self.name, tree.epoch)
            self._updated()
            return Ack(tree.epoch)

    def _updated(self) -> None:
        if self.on_update and self.tree is not None:
            self.on_update(self.tree)


@dataclass
class Delivery:
    acked: dict[str, int]
    failed: dict[str, str]


class TtpNode(_Node):
    """Trusted third party: sole writer of the tree, pushes deltas to RSUs."""

    def __init__(self, tree: RevocationTree, roster: Optional[dict[str, Link]] = None,
                 on_update: Optional[Callable[[RevocationTree], None]] = None):
        super().__init__()
        if tree.signer is None:
            raise ValueError("TTP tree needs a signer")
        self.tree = tree
        if tree.signed_root is None:
            tree.sign_root()
        self.roster: dict[str, Link] = dict(roster or {})
        self.on_update = on_update
        self.last_delivery = Delivery({}, {})

    @property
    def epoch(self) -> int:
        return self.tree.epoch

    def dispatch(self, message: Message) -> Message:
        if isinstance(message, SnapshotRequest):
            with self.lock:
                return SnapshotMessage(self.tree.to_snapshot())
        if isinstance(message, AdminRequest):
            return self._admin(message)
        return ErrorMessage(ErrorCode.UNSUPPORTED, f"ttp does not accept {type(message).__name__}")

    def _admin(self, req: AdminRequest) -> Message:
        if not req.check_tag(self.tree.signer):
            return ErrorMessage(ErrorCode.UNAUTHORIZED, "admin tag does not verify")
        with self.lock:
            if req.epoch != self.tree.epoch:
                return ErrorMessage(ErrorCode.UNAUTHORIZED,
                                    f"admin request for epoch {req.epoch}, ttp at {self.tree.epoch}")
            if req.op == ADMIN_INSERT:
                delta = self._mutate(lambda: self.tree.insert(req.cert))
            else:
                delta = self._mutate(lambda: self.tree.remove(req.cert.id))
        self.broadcast(delta)
        return DeltaMessage(delta)

    def _mutate(self, fn: Callable[[], TreeDelta]) -> TreeDelta:
        with self.lock:
            delta = fn()
            log.info("ttp epoch=%d ops=%d root=%s", delta.epoch, len(delta.ops),
                     self.tree.root_digest.hex())
            if self.on_update:
                self.on_update(self.tree)
            return delta

    def revoke(self, cert: CertificateId, broadcast: bool = True) -> TreeDelta:
        delta = self._mutate(lambda: self.tree.insert(cert))
        if broadcast:
            self.broadcast(delta)
        return delta

    def unrevoke(self, cert_id: int, broadcast: bool = True) -> TreeDelta:
        delta = self._mutate(lambda: self.tree.remove(cert_id))
        if broadcast:
            self.broadcast(delta)
        return delta

    def compact(self, broadcast: bool = True) -> TreeDelta:
        delta = self._mutate(self.tree.compact)
        if broadcast:
            self.broadcast(delta)
        return delta

    def broadcast(self, delta: TreeDelta) -> Delivery:
        """Send ``delta`` to every RSU; failures are collected, not raised."""
        out = Delivery({}, {})
        for name, link in self.roster.items():
            try:
                reply = call(link, DeltaMessage(delta))
                if not isinstance(reply, Ack):
                    raise MalformedFrame(f"unexpected {type(reply).__name__}")
                out.acked[name] = reply.epoch
            except (TransportError, HuffrevError) as exc:
                log.warning("ttp delivery to %s failed: %s", name, exc)
                out.failed[name] = str(exc)
        self.last_delivery = out
        return out

    def push_snapshot(self, name: str) -> int:
        with self.lock:
            raw = self.tree.to_snapshot()
        reply = call(self.roster[name], SnapshotMessage(raw))
        if not isinstance(reply, Ack):
            raise MalformedFrame(f"unexpected {type(reply).__name__}")
        return reply.epoch

    def bootstrap_all(self) -> Delivery:
        out = Delivery({}, {})
        for name in self.roster:
            try:
                out.acked[name] = self.push_snapshot(name)
            except (TransportError, HuffrevError) as exc:
                out.failed[name] = str(exc)
        return out


REVOKED = "revoked"
NOT_REVOKED = "not_revoked"
DISTRUST = "distrust"


@dataclass(frozen=True)
class QueryResult:
    status: str
    reason: Optional[str] = None
    epoch: Optional[int] = None
    response: Optional[QueryResponse] = None

    @property
    def trusted(self) -> bool:
        return self.status != DISTRUST


class VehicleClient:
    """Queries RSUs and accepts only answers that pass every check.

    Distrust reasons: ``timeout``, ``malformed``, ``rsu_error``,
    ``request_id``, ``signature``, ``inconsistent``, ``stale_root``,
    ``stale_statement``, ``leaf`` and ``path``.
    """

    def __init__(self, ttp_verifier: Signer, rsu_keys: dict[str, Signer], window: int = 1,
                 clock: Clock = SystemClock(), max_statement_age: int = 60):
        self.roots = RootVerifier(ttp_verifier, window)
        self.rsu_keys = dict(rsu_keys)
        self.clock = clock
        self.max_statement_age = max_statement_age
        self._ids = itertools.count(1)

    def query(self, link: Link, rsu_name: str, cert_id: int) -> QueryResult:
        request_id = next(self._ids)
        try:
            raw = link.request(encode_frame(QueryMessage(request_id, cert_id)))
        except TransportError:
            return QueryResult(DISTRUST, "timeout")
        try:
            reply = decode_frame(raw)
        except MalformedFrame:
            return QueryResult(DISTRUST, "malformed")
        if isinstance(reply, ErrorMessage):
            return QueryResult(DISTRUST, "rsu_error")
        if not isinstance(reply, QueryResponse):
            return QueryResult(DISTRUST, "malformed")
        return self.check_response(reply, rsu_name, request_id, cert_id)

    def check_response(self, resp: QueryResponse, rsu_name: str, request_id: int,
                       cert_id: int) -> QueryResult:
        def distrust(reason: str) -> QueryResult:
            return QueryResult(DISTRUST, reason, resp.signed_root.epoch, resp)

        key = self.rsu_keys.get(rsu_name)
        if key is None or not resp.check_tag(key):
            return distrust("signature")
        if resp.request_id != request_id:
            return distrust("request_id")
        try:
            body = resp.proof() if resp.status == Status.REVOKED else resp.statement()
        except MalformedFrame:
            return distrust("malformed")
        if resp.status == Status.REVOKED:
            if body.signed_root != resp.signed_root:
                return distrust("inconsistent")
            verdict = verify_membership(body, cert_id, self.roots)
            if not verdict:
                return distrust(verdict.reason)
            return QueryResult(REVOKED, None, resp.signed_root.epoch, resp)
        if (body.root_digest, body.epoch) != (resp.signed_root.root_digest, resp.signed_root.epoch):
            return distrust("inconsistent")
        if body.cert_id != cert_id:
            return distrust("leaf")
        if not body.verify(key):
            return distrust("signature")
        verdict = self.roots.check(resp.signed_root)
        if not verdict:
            return distrust(verdict.reason)
        if abs(self.clock.now() - body.timestamp) > self.max_statement_age:
            return distrust("stale_statement")
        return QueryResult(NOT_REVOKED, None, resp.signed_root.epoch, resp)
