"""Stratified k-ary revocation hash tree with incremental duplex updates.

Each internal node caches the duplex state after every absorbed child, so
changing child ``j`` only re-absorbs positions ``j..`` of that node.  An
append at the right edge of a stratum therefore costs one duplexing call per
level.  Deleted certificates become tombstones so cached states stay valid;
:meth:`RevocationTree.compact` squeezes them out.

A tree has a single writer.  Proof generation only reads, but callers must
not run it concurrently with a mutation (see :mod:`huffrev.revnet.nodes`).
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from typing import Union

from . import _kernel
from .errors import (
    BadSignature,
    DuplicateCertificate,
    EpochGap,
    HuffrevError,
    MalformedFrame,
    NotFound,
    PlanError,
    RootMismatch,
    StratumFull,
    UnknownClass,
)
from .hashing import (
    CERT_BYTES,
    DIGEST_BYTES,
    RATE_BYTES,
    CertificateId,
    decode_cert,
    empty_digest,
    empty_tree_root,
    encode_cert,
    header_state,
    leaf_digest,
    tombstone_digest,
)
from .keccak import ROUNDS
from .planner import HuffmanPlan
from .proof import (
    SIGNED_ROOT_BYTES,
    MembershipProof,
    PathStep,
    SignedRoot,
    Signer,
)

SNAPSHOT_MAGIC = b"HRT1"


@dataclass(frozen=True)
class Insert:
    cert: CertificateId


@dataclass(frozen=True)
class Remove:
    cert_id: int


@dataclass(frozen=True)
class Compact:
    pass


Op = Union[Insert, Remove, Compact]

_OP_INSERT, _OP_REMOVE, _OP_COMPACT = 1, 2, 3


@dataclass(frozen=True)
class TreeDelta:
    epoch: int
    ops: tuple[Op, ...]
    new_signed_root: SignedRoot

    def to_bytes(self) -> bytes:
        out = bytearray(struct.pack(">QH", self.epoch, len(self.ops)))
        for op in self.ops:
            if isinstance(op, Insert):
                out.append(_OP_INSERT)
                out.append(op.cert.class_id)
                out += op.cert.encode()
            elif isinstance(op, Remove):
                out.append(_OP_REMOVE)
                out += encode_cert(op.cert_id)
            else:
                out.append(_OP_COMPACT)
        out += self.new_signed_root.to_bytes()
        return bytes(out)

    @classmethod
    def from_bytes(cls, data: bytes) -> "TreeDelta":
        data = bytes(data)
        if len(data) < 10 + SIGNED_ROOT_BYTES:
            raise MalformedFrame("delta too short")
        epoch, count = struct.unpack_from(">QH", data, 0)
        pos = 10
        end = len(data) - SIGNED_ROOT_BYTES
        ops: list[Op] = []
        try:
            for _ in range(count):
                if pos >= end:
                    raise MalformedFrame("delta op list truncated")
                kind = data[pos]
                pos += 1
                if kind == _OP_INSERT:
                    if pos + 1 + CERT_BYTES > end:
                        raise MalformedFrame("delta op truncated")
                    cls_id = data[pos]
                    ops.append(Insert(CertificateId(decode_cert(data[pos + 1:pos + 1 + CERT_BYTES]), cls_id)))
                    pos += 1 + CERT_BYTES
                elif kind == _OP_REMOVE:
                    if pos + CERT_BYTES > end:
                        raise MalformedFrame("delta op truncated")
                    ops.append(Remove(decode_cert(data[pos:pos + CERT_BYTES])))
                    pos += CERT_BYTES
                elif kind == _OP_COMPACT:
                    ops.append(Compact())
                else:
                    raise MalformedFrame(f"unknown delta op {kind}")
        except ValueError as exc:
            if isinstance(exc, MalformedFrame):
                raise
            raise MalformedFrame(str(exc)) from exc
        if pos != end:
            raise MalformedFrame("trailing bytes in delta")
        return cls(epoch, tuple(ops), SignedRoot.from_bytes(data[end:]))


@dataclass
class _Node:
    children: list[bytes]
    filled: int = 0
    states: list[bytes] = field(default_factory=list)

    def copy(self) -> "_Node":
        return _Node(self.children[:], self.filled, self.states[:])


@dataclass
class _Stratum:
    class_id: int
    anchor_depth: int
    anchor_index: int
    subtree_depth: int
    capacity: int
    ids: list[int] = field(default_factory=list)
    live: list[bool] = field(default_factory=list)

    @property
    def leaf_level(self) -> int:
        return self.anchor_depth + self.subtree_depth

    def leaf_index(self, slot: int, k: int) -> int:
        return self.anchor_index * k ** self.subtree_depth + slot


class RevocationTree:
    """Revoked certificates arranged per the Huffman plan.

    ``signer`` is the TTP key; with one, every mutation re-signs the root.
    Replicas run without a signer and take signed roots from deltas.
    """

    def __init__(self, plan: HuffmanPlan, signer: Signer | None = None):
        self.plan = plan
        self.k = plan.k
        self.signer = signer
        self.epoch = 0
        self.nodes: dict[tuple[int, int], _Node] = {}
        self.leaf_index: dict[int, tuple[int, int]] = {}
        self.duplex_calls = 0
        self.last_op_calls = 0
        self._plan_bytes = plan.canonical_bytes()
        self._empty_root = empty_tree_root(self._plan_bytes)
        self._root_leaf: bytes | None = None
        anchors = plan.anchors()
        self.strata: dict[int, _Stratum] = {}
        for c in plan.classes:
            depth, index = anchors[c.class_id]
            self.strata[c.class_id] = _Stratum(c.class_id, depth, index,
                                               c.subtree_depth, c.capacity)
        self.signed_root: SignedRoot | None = None
        if signer is not None:
            self.sign_root()

    # -- digests -------------------------------------------------------------

    @property
    def root_digest(self) -> bytes:
        if self._root_leaf is not None:
            return self._root_leaf
        node = self.nodes.get((0, 0))
        if node is None or node.filled == 0:
            return self._empty_root
        return node.states[node.filled - 1][:DIGEST_BYTES]

    def _update_child(self, level: int, index: int, j: int, digest: bytes) -> bytes:
        key = (level, index)
        node = self.nodes.get(key)
        if node is None:
            node = self.nodes[key] = _Node([empty_digest(level + 1)] * self.k)
        node.children[j] = digest
        start = min(j, node.filled)
        end = max(node.filled, j + 1)
        base = header_state(level, self.k) if start == 0 else node.states[start - 1]
        new = _kernel.duplex_chain(base, node.children[start:end], RATE_BYTES, ROUNDS)
        del node.states[start:]
        node.states.extend(new)
        node.filled = end
        self.last_op_calls += len(new)
        return new[-1][:DIGEST_BYTES]

    def _set_leaf(self, stratum: _Stratum, slot: int, digest: bytes) -> None:
        level = stratum.leaf_level
        index = stratum.leaf_index(slot, self.k)
        while level > 0:
            digest = self._update_child(level - 1, index // self.k, index % self.k, digest)
            level -= 1
            index //= self.k
        if stratum.leaf_level == 0:
            self._root_leaf = digest

    def _stratum(self, class_id: int) -> _Stratum:
        try:
            return self.strata[class_id]
        except KeyError:
            raise UnknownClass(f"class {class_id} is not in the plan") from None

    def _append(self, cert: CertificateId, live: bool) -> None:
        stratum = self._stratum(cert.class_id)
        if live and cert.id in self.leaf_index:
            raise DuplicateCertificate(f"certificate {cert.hex()} is already revoked")
        slot = len(stratum.ids)
        if slot >= stratum.capacity:
            raise StratumFull(f"class {cert.class_id} stratum is full "
                              f"({stratum.capacity} leaves); re-plan the tree")
        stratum.ids.append(cert.id)
        stratum.live.append(live)
        if live:
            self.leaf_index[cert.id] = (cert.class_id, slot)
            digest = leaf_digest(cert.id, cert.class_id)
        else:
            digest = tombstone_digest(cert.class_id, slot)
        self._set_leaf(stratum, slot, digest)

    # -- mutations -----------------------------------------------------------

    def _finish(self, ops: tuple[Op, ...]) -> TreeDelta:
        self.epoch += 1
        self.duplex_calls += self.last_op_calls
        signed = self.sign_root() if self.signer is not None else None
        return TreeDelta(self.epoch, ops, signed)  # type: ignore[arg-type]

    def insert(self, cert: CertificateId) -> TreeDelta:
        self.last_op_calls = 0
        self._append(cert, True)
        return self._finish((Insert(cert),))

    def remove(self, cert_id: int) -> TreeDelta:
        self.last_op_calls = 0
        try:
            class_id, slot = self.leaf_index.pop(cert_id)
        except KeyError:
            raise NotFound(f"certificate {encode_cert(cert_id).hex()} is not revoked") from None
        stratum = self.strata[class_id]
        stratum.live[slot] = False
        self._set_leaf(stratum, slot, tombstone_digest(class_id, slot))
        return self._finish((Remove(cert_id),))

    def compact(self) -> TreeDelta:
        """Drop tombstones, keeping live leaves in insertion order."""
        self.last_op_calls = 0
        self._compact()
        return self._finish((Compact(),))

    def _compact(self) -> None:
        survivors = {cid: [i for i, ok in zip(s.ids, s.live) if ok]
                     for cid, s in self.strata.items()}
        self.nodes.clear()
        self.leaf_index.clear()
        self._root_leaf = None
        for cid, s in self.strata.items():
            s.ids, s.live = [], []
        for cid in sorted(survivors):
            for cert_id in survivors[cid]:
                self._append(CertificateId(cert_id, cid), True)

    def sign_root(self, signer: Signer | None = None) -> SignedRoot:
        signer = signer or self.signer
        if signer is None:
            raise HuffrevError("no signer configured")
        self.signed_root = SignedRoot.create(self.root_digest, self.epoch, signer)
        return self.signed_root

    # -- queries -------------------------------------------------------------

    def __contains__(self, cert_id: int) -> bool:
        return cert_id in self.leaf_index

    def __len__(self) -> int:
        return len(self.leaf_index)

    def live_ids(self) -> set[int]:
        return set(self.leaf_index)

    def class_of(self, cert_id: int) -> int:
        try:
            return self.leaf_index[cert_id][0]
        except KeyError:
            raise NotFound(f"certificate {encode_cert(cert_id).hex()} is not revoked") from None

    def prove_membership(self, cert_id: int) -> MembershipProof:
        try:
            class_id, slot = self.leaf_index[cert_id]
        except KeyError:
            raise NotFound(f"certificate {encode_cert(cert_id).hex()} is not revoked") from None
        if self.signed_root is None or self.signed_root.epoch != self.epoch:
            raise HuffrevError("tree root is not signed at the current epoch")
        stratum = self.strata[class_id]
        level = stratum.leaf_level
        index = stratum.leaf_index(slot, self.k)
        steps = []
        while level > 0:
            node = self.nodes[(level - 1, index // self.k)]
            j = index % self.k
            steps.append(PathStep(level - 1, j, tuple(node.children[:j] + node.children[j + 1:])))
            level -= 1
            index //= self.k
        return MembershipProof(CertificateId(cert_id, class_id), tuple(steps), self.signed_root)

    def recompute_root(self) -> tuple[bytes, int]:
        """Full bottom-up recomputation ignoring every cached state.

        Returns the root and the number of duplexing calls it took (node
        headers excluded, as in the incremental path).
        """
        k = self.k
        calls = 0
        level_digests: dict[int, dict[int, bytes]] = {}
        for s in self.strata.values():
            if not s.ids:
                continue
            digests = [leaf_digest(i, s.class_id) if ok else tombstone_digest(s.class_id, slot)
                       for slot, (i, ok) in enumerate(zip(s.ids, s.live))]
            for depth in range(s.leaf_level - 1, s.anchor_depth - 1, -1):
                nxt = []
                for g in range(0, len(digests), k):
                    group = digests[g:g + k]
                    nxt.append(_kernel.duplex_chain(header_state(depth, k), group,
                                                    RATE_BYTES, ROUNDS)[-1][:DIGEST_BYTES])
                    calls += len(group)
                digests = nxt
            level_digests.setdefault(s.anchor_depth, {})[s.anchor_index] = digests[0]
        if not level_digests:
            return self._empty_root, calls
        depth = max(level_digests)
        while depth > 0:
            parents: dict[int, list[bytes]] = {}
            for idx, dig in level_digests.get(depth, {}).items():
                row = parents.setdefault(idx // k, [empty_digest(depth)] * k)
                row[idx % k] = dig
            upper = level_digests.setdefault(depth - 1, {})
            for pidx, row in parents.items():
                n = max(j for j in range(k) if row[j] != empty_digest(depth)) + 1
                upper[pidx] = _kernel.duplex_chain(header_state(depth - 1, k), row[:n],
                                                   RATE_BYTES, ROUNDS)[-1][:DIGEST_BYTES]
                calls += n
            depth -= 1
        return level_digests[0][0], calls

    # -- replication -----------------------------------------------------------

    def copy(self) -> "RevocationTree":
        other = object.__new__(RevocationTree)
        other.__dict__.update(self.__dict__)
        other.nodes = {key: n.copy() for key, n in self.nodes.items()}
        other.leaf_index = dict(self.leaf_index)
        other.strata = {cid: _Stratum(s.class_id, s.anchor_depth, s.anchor_index,
                                      s.subtree_depth, s.capacity, s.ids[:], s.live[:])
                        for cid, s in self.strata.items()}
        return other

    def _replay(self, op: Op) -> None:
        if isinstance(op, Insert):
            self._append(op.cert, True)
        elif isinstance(op, Remove):
            try:
                class_id, slot = self.leaf_index.pop(op.cert_id)
            except KeyError:
                raise NotFound("remove of a certificate that is not revoked") from None
            stratum = self.strata[class_id]
            stratum.live[slot] = False
            self._set_leaf(stratum, slot, tombstone_digest(class_id, slot))
        else:
            self._compact()

    def apply_delta(self, delta: TreeDelta, verifier: Signer) -> None:
        """Replay a TTP delta; on any failure the replica is left untouched."""
        if delta.epoch != self.epoch + 1:
            raise EpochGap(f"replica at epoch {self.epoch}, delta for epoch {delta.epoch}")
        signed = delta.new_signed_root
        if signed is None or signed.epoch != delta.epoch or not signed.verify(verifier):
            raise BadSignature("delta root signature does not verify")
        work = self.copy()
        work.last_op_calls = 0
        try:
            for op in delta.ops:
                work._replay(op)
        except HuffrevError as exc:
            raise RootMismatch(f"delta does not replay cleanly: {exc}") from exc
        if work.root_digest != signed.root_digest:
            raise RootMismatch("replayed root differs from the signed root")
        work.epoch = delta.epoch
        work.signed_root = signed
        work.duplex_calls += work.last_op_calls
        self.__dict__.update(work.__dict__)

    # -- snapshot files --------------------------------------------------------

    def to_snapshot(self) -> bytes:
        out = bytearray(SNAPSHOT_MAGIC)
        out += struct.pack(">I", len(self._plan_bytes)) + self._plan_bytes
        out += struct.pack(">H", len(self.strata))
        for cid in sorted(self.strata):
            s = self.strata[cid]
            out += struct.pack(">BI", cid, len(s.ids))
            for i, ok in zip(s.ids, s.live):
                out += encode_cert(i) + (b"\x01" if ok else b"\x00")
        out += struct.pack(">Q", self.epoch)
        out += self.signed_root.to_bytes() if self.signed_root else bytes(SIGNED_ROOT_BYTES)
        return bytes(out)

    @classmethod
    def from_snapshot(cls, data: bytes, verifier: Signer | None = None,
                      signer: Signer | None = None) -> "RevocationTree":
        data = bytes(data)
        try:
            if data[:4] != SNAPSHOT_MAGIC:
                raise MalformedFrame("bad snapshot magic")
            (plan_len,) = struct.unpack_from(">I", data, 4)
            pos = 8 + plan_len
            plan = HuffmanPlan.from_json(data[8:pos])
            (n_strata,) = struct.unpack_from(">H", data, pos)
            pos += 2
            tree = cls(plan)
            for _ in range(n_strata):
                cid, count = struct.unpack_from(">BI", data, pos)
                pos += 5
                for _ in range(count):
                    rec = data[pos:pos + CERT_BYTES + 1]
                    if len(rec) != CERT_BYTES + 1 or rec[-1] > 1:
                        raise MalformedFrame("bad leaf record")
                    tree._append(CertificateId(decode_cert(rec[:-1]), cid), rec[-1] == 1)
                    pos += CERT_BYTES + 1
            (tree.epoch,) = struct.unpack_from(">Q", data, pos)
            pos += 8
            raw = data[pos:pos + SIGNED_ROOT_BYTES]
            if len(raw) != SIGNED_ROOT_BYTES or pos + SIGNED_ROOT_BYTES != len(data):
                raise MalformedFrame("bad snapshot trailer")
        except (struct.error, ValueError, PlanError, DuplicateCertificate,
                StratumFull, UnknownClass) as exc:
            if isinstance(exc, MalformedFrame):
                raise
            raise MalformedFrame(f"corrupt snapshot: {exc}") from exc
        tree.duplex_calls += tree.last_op_calls
        tree.last_op_calls = 0
        if any(raw):
            signed = SignedRoot.from_bytes(raw)
            if signed.root_digest != tree.root_digest or signed.epoch != tree.epoch:
                raise RootMismatch("snapshot contents do not match its signed root")
            if verifier is not None and not signed.verify(verifier):
                raise BadSignature("snapshot root signature does not verify")
            tree.signed_root = signed
        tree.signer = signer
        return tree

    def plan_json(self) -> str:
        return json.dumps(self.plan.to_dict(), sort_keys=True, indent=2)
