"""From-scratch revocation-tree root, written against the hashing rules only.

Internal nodes are hashed with the *sponge* on the concatenated padded
children (the duplexing lemma) rather than with duplex calls, and class
placement is recomputed here, so this shares no path with the incremental
tree code.  ``hash_fn`` defaults to huffrev's sponge for speed; pass
``bit_sponge`` to run fully on the reference oracle.
"""

from __future__ import annotations

from functools import lru_cache

import oracles

RATE = 68


def bit_sponge(data: bytes) -> bytes:
    return oracles.from_bits(oracles.sponge(oracles.to_bits(data), 32, 544, 256, 22))


def _pad(block: bytes) -> bytes:
    out = bytearray(RATE)
    out[:len(block)] = block
    out[len(block)] ^= 0x01
    out[-1] ^= 0x80
    return bytes(out)


_PAD32 = _pad(bytes(32))[32:]


def canonical_anchors(k: int, depths: dict[int, int]) -> dict[int, tuple[int, int]]:
    out = {}
    code = -1
    prev = None
    for cid in sorted(depths, key=lambda c: (depths[c], c)):
        d = depths[cid]
        code = 0 if prev is None else (code + 1) * k ** (d - prev)
        prev = d
        out[cid] = (d, code)
    return out


def ceil_log(n: int, k: int) -> int:
    m = 0
    while k**m < n:
        m += 1
    return m


@lru_cache(maxsize=1 << 16)
def _fast_hash(data: bytes) -> bytes:
    from huffrev.keccak import sponge_hash

    return sponge_hash(data)


def root(plan, strata: dict[int, list[tuple[int, bool]]], hash_fn=None) -> bytes:
    """Root of the tree holding ``strata`` leaf records under ``plan``.

    Leaf, tombstone and empty-slot digests depend only on their record, so
    they go through a memoized hash; every internal node is rehashed on
    every call.
    """
    node_hash = hash_fn
    if hash_fn is None:
        from huffrev.keccak import sponge_hash as node_hash

        hash_fn = _fast_hash
    k = plan.k
    depths = {c.class_id: c.code_depth for c in plan.classes}
    subdepth = {c.class_id: ceil_log(max(c.capacity, 1), k) for c in plan.classes}
    anchors = canonical_anchors(k, depths)
    at = {v: cid for cid, v in anchors.items()}

    def empty(level):
        return hash_fn(b"\x02" + level.to_bytes(2, "big"))

    headers = {}

    def node(level, children):
        e = empty(level + 1)
        while children and children[-1] == e:
            children = children[:-1]
        if not children:
            return empty(level)
        if level not in headers:
            headers[level] = _pad(b"\x01" + level.to_bytes(2, "big") + bytes((k,)))
        # every child is a 32-byte digest, so its padding is a fixed tail
        msg = headers[level] + _PAD32.join(children)
        return node_hash(msg)

    def leaf(cid, slot, cert, live):
        if live:
            return hash_fn(b"\x00" + bytes((cid,)) + cert.to_bytes(29, "big"))
        return hash_fn(b"\x03" + bytes((cid,)) + b"TOMB" + slot.to_bytes(4, "big"))

    def sub(cid, rel, idx):
        d, m = depths[cid], subdepth[cid]
        entries = strata.get(cid, [])
        level = d + rel
        if idx * k ** (m - rel) >= len(entries):
            return empty(level)
        if rel == m:
            cert, live = entries[idx]
            return leaf(cid, idx, cert, live)
        return node(level, [sub(cid, rel + 1, idx * k + j) for j in range(k)])

    # (level, index) of every strict ancestor of an anchor
    inner = {(lv, a // k ** (d - lv)) for d, a in anchors.values() for lv in range(d)}

    def top(level, index):
        if (level, index) in at:
            return sub(at[(level, index)], 0, 0)
        if (level, index) not in inner:
            return empty(level)
        return node(level, [top(level + 1, index * k + j) for j in range(k)])

    if not any(strata.get(cid) for cid in depths):
        return hash_fn(b"\x04" + plan.canonical_bytes())
    return top(0, 0)


def tree_strata(tree) -> dict[int, list[tuple[int, bool]]]:
    """Leaf records of a huffrev tree, in slot order."""
    return {cid: list(zip(s.ids, s.live)) for cid, s in tree.strata.items()}
