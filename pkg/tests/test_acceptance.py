"""Acceptance suite: nine criteria, each with its own time limit.

Every criterion records one PASS/FAIL line, printed in the pytest terminal
summary (see conftest.py).  Run alone with ``pytest tests/test_acceptance.py``.
"""

import random
import sys
import time
from contextlib import contextmanager
from fractions import Fraction as F

import pytest

import oracles
import tree_oracle
from conftest import THREE_CLASSES
from huffrev import _pykeccak
from huffrev.bench import run_bench, synthetic_registry
from huffrev.errors import MalformedFrame, NotFound
from huffrev.hashing import CertificateId
from huffrev.keccak import KeccakState, duplex_init, duplexing, keccak_f800, pad_bytes
from huffrev.planner import ProofSizeModel, VehicleClass, build_kary_code, optimal_k, plan_tree
from huffrev.proof import DuplexMac, MembershipProof, RootVerifier, verify_membership
from huffrev.revnet import DISTRUST, NOT_REVOKED, REVOKED
from huffrev.tree import RevocationTree
from netsim import make_network
from test_keccak import F800_ZERO


@contextmanager
def criterion(request, number: int, title: str, limit: float):
    results = request.config.__dict__.setdefault("huffrev_acceptance", [])
    notes: list[str] = []
    start = time.perf_counter()
    try:
        yield notes
    except BaseException as exc:
        elapsed = time.perf_counter() - start
        results.append((number, False, f"{title}: {type(exc).__name__}: {exc}".splitlines()[0], elapsed, limit))
        raise
    elapsed = time.perf_counter() - start
    ok = elapsed < limit
    detail = title + (f" ({'; '.join(notes)})" if notes else "")
    results.append((number, ok, detail, elapsed, limit))
    assert ok, f"criterion {number} took {elapsed:.2f}s, limit {limit}s"


# 1 ---------------------------------------------------------------------------

def test_criterion_1_f800_known_answer(request):
    with criterion(request, 1, "Keccak-f[800] zero-state known answer", 1.0) as notes:
        assert keccak_f800(KeccakState(bytes(100))).data == F800_ZERO
        assert _pykeccak.permute(bytes(100), 22) == F800_ZERO
        assert oracles.permute_bytes(bytes(100), 32, 22) == F800_ZERO
        notes.append(f"{F800_ZERO[:8].hex()}...")


# 2 ---------------------------------------------------------------------------

def _py_sponge(message: bytes, out_bits: int) -> bytes:
    """Sponge over the pure-Python kernel, independent of the duplex code path."""
    state = _pykeccak.absorb_blocks(bytes(100), pad_bytes(message, 68), 68, 22)
    out = bytearray(state[:(out_bits + 7) // 8])
    if out_bits % 8:
        out[-1] &= (1 << (out_bits % 8)) - 1
    return bytes(out)


def test_criterion_2_duplexing_lemma(request):
    with criterion(request, 2, "duplexing lemma, 500 sequences of <=8 blocks", 10.0) as notes:
        rng = random.Random(2)
        outputs = bit_checked = 0
        for seq in range(500):
            blocks = [bytes(rng.getrandbits(8) for _ in range(rng.randint(0, 67)))
                      for _ in range(rng.randint(1, 8))]
            out_bits = rng.choice([0, 1, 7, 32, 256, 255, 544])
            ctx, prefix = duplex_init(), b""
            for sigma in blocks:
                ctx, z = duplexing(ctx, sigma, out_bits)
                assert z == _py_sponge(prefix + sigma, out_bits)
                if seq < 10:
                    want = oracles.sponge(oracles.to_bits(prefix + sigma), 32, 544, out_bits, 22)
                    assert z == oracles.from_bits(want)
                    bit_checked += 1
                prefix += pad_bytes(sigma, 68)
                outputs += 1
        notes.append(f"{outputs} outputs, {bit_checked} also against the bit-level reference")


# 3 ---------------------------------------------------------------------------

def test_criterion_3_huffman_optimality(request):
    with criterion(request, 3, "k-ary Huffman optimality, 200 weight vectors", 30.0) as notes:
        rng = random.Random(3)
        for _ in range(200):
            n = rng.randint(1, 6)
            k = rng.choice([2, 3, 4])
            raw = [rng.randint(0, 20) for _ in range(n)]
            if not any(raw):
                raw[rng.randrange(n)] = 1
            ws = [F(r, sum(raw)) for r in raw]
            depths = build_kary_code(ws, k)
            got = sum(w * d for w, d in zip(ws, depths))
            assert isinstance(got, F)
            assert got == oracles.min_expected_depth(ws, k), (ws, k, depths)
        notes.append("exact Fractions vs exhaustive Kraft enumeration")


# 4 ---------------------------------------------------------------------------

def _random_plan(rng):
    n = rng.randint(1, 4)
    raw = [rng.randint(1, 10) for _ in range(n)]
    classes = [VehicleClass(i, f"c{i}", F(r, sum(raw)), rng.randint(50_000, 100_000))
               for i, r in enumerate(raw)]
    return plan_tree(classes, rng.choice([2, 3, 4]))


def test_criterion_4_incremental_equals_rebuild(request):
    with criterion(request, 4, "incremental root == full recomputation after every op", 60.0) as notes:
        rng = random.Random(4)
        total_ops = 0
        for seq in range(100):
            plan = _random_plan(rng)
            tree = RevocationTree(plan)
            classes = [c.class_id for c in plan.classes]
            live: list[int] = []
            length = 500 if seq < 5 else rng.randint(1, 500)
            for _ in range(length):
                if live and rng.random() < 0.3:
                    tree.remove(live.pop(rng.randrange(len(live))))
                else:
                    cert = CertificateId(rng.getrandbits(228), rng.choice(classes))
                    tree.insert(cert)
                    live.append(cert.id)
                want = tree_oracle.root(plan, tree_oracle.tree_strata(tree))
                assert tree.root_digest == want, f"sequence {seq} diverged"
            assert tree.recompute_root()[0] == tree.root_digest
            total_ops += length
        notes.append(f"{total_ops} ops, k in {{2,3,4}}, 1-4 classes, sequence lengths 1..500")


# 5 ---------------------------------------------------------------------------

def _flip_bit(data: bytes, bit: int) -> bytes:
    out = bytearray(data)
    out[bit // 8] ^= 1 << (bit % 8)
    return bytes(out)


def test_criterion_5_proof_soundness_completeness(request):
    with criterion(request, 5, "proof completeness and 1000 single-bit mutations", 60.0) as notes:
        mac = DuplexMac(b"acceptance-ttp")
        plan = plan_tree(THREE_CLASSES, 2)
        tree = RevocationTree(plan, mac)
        rng = random.Random(5)
        certs = []
        for c in plan.classes:
            for _ in range(c.capacity):
                cert = CertificateId(rng.getrandbits(228), c.class_id)
                tree.insert(cert)
                certs.append(cert)
        assert sum(len(s.ids) for s in tree.strata.values()) == 1000
        removed = {c.id for c in rng.sample(certs, 100)}
        for cid in removed:
            tree.remove(cid)
        live = [c for c in certs if c.id not in removed]
        verifier = RootVerifier(mac, window=0, newest_epoch=tree.epoch)
        proofs = {}
        for c in live:
            proof = tree.prove_membership(c.id)
            raw = proof.to_bytes()
            assert verify_membership(MembershipProof.from_bytes(raw), c.id, verifier)
            proofs[c.id] = raw
        for cid in removed:
            with pytest.raises(NotFound):
                tree.prove_membership(cid)
        rejected = {}
        ids = sorted(proofs)
        for _ in range(1000):
            cid = rng.choice(ids)
            raw = proofs[cid]
            bad = _flip_bit(raw, rng.randrange(len(raw) * 8))
            try:
                proof = MembershipProof.from_bytes(bad)
            except MalformedFrame:
                rejected["malformed"] = rejected.get("malformed", 0) + 1
                continue
            verdict = verify_membership(proof, cid, RootVerifier(mac, 0, tree.epoch))
            assert not verdict, "mutated proof accepted"
            rejected[verdict.reason] = rejected.get(verdict.reason, 0) + 1
        assert sum(rejected.values()) == 1000
        notes.append(f"{len(live)} live verified; rejects {dict(sorted(rejected.items()))}")


# 6 ---------------------------------------------------------------------------

def test_criterion_6_insertion_cost(request):
    with criterion(request, 6, "append cost <= leaf_depth*k and rebuild ratio >= 50x", 60.0) as notes:
        for k in (2, 4):
            plan = plan_tree(THREE_CLASSES, k)
            tree = RevocationTree(plan)
            rng = random.Random(6 + k)
            room = dict(plan.class_capacity)
            calls = []
            while sum(room.values()):
                cid = rng.choice([c for c in room if room[c]])
                tree.insert(CertificateId(rng.getrandbits(228), cid))
                room[cid] -= 1
                calls.append(tree.last_op_calls)
                assert tree.last_op_calls <= plan.get(cid).leaf_depth * k
            assert len(calls) == 1000
            root, rebuild = tree.recompute_root()
            assert root == tree.root_digest
            ratio = rebuild / (sum(calls) / len(calls))
            assert ratio >= 50, ratio
            notes.append(f"k={k}: mean {sum(calls) / len(calls):.2f} calls/append, rebuild {rebuild}, "
                         f"ratio {ratio:.0f}x")


# 7 ---------------------------------------------------------------------------

def test_criterion_7_sizing(request):
    with criterion(request, 7, "fleet 100000 at 1%: proofs vs CRL", 120.0) as notes:
        report = run_bench(100_000, F(1, 100), 2, 16, seed=0)
        expected_k = optimal_k(synthetic_registry(100_000, 0), 2, 16, ProofSizeModel.wire(), F(1, 100)).k
        assert report.k == expected_k
        assert report.revoked == 1000
        assert report.crl_payload_bytes == 29_000
        assert report.crl_bytes == 29_000 + report.crl_framing_bytes
        worst = max(c.proof_bytes_max for c in report.classes)
        assert all(c.proof_bytes_max <= 1500 for c in report.classes)
        assert report.crl_bytes / worst >= 19
        assert all(report.checks.values()), report.checks
        notes.append(f"k={report.k}, CRL {report.crl_bytes} B, worst proof {worst} B, "
                     f"{report.crl_bytes / worst:.1f}x")


# 8 ---------------------------------------------------------------------------

def test_criterion_8_end_to_end(request):
    with criterion(request, 8, "1 TTP, 3 RSUs, 20 vehicles, 200 revocations", 120.0) as notes:
        rng = random.Random(8)
        plan = plan_tree(THREE_CLASSES, 2)
        net = make_network(plan, 3)
        vehicles = [net.vehicle(window=1) for _ in range(20)]
        revoked_at: dict[int, int] = {}
        never = [rng.getrandbits(228) for _ in range(100)]
        room = dict(plan.class_capacity)
        queries = stale_answers = 0
        offline_step = 120

        def check(vehicle, rsu, cid):
            nonlocal queries, stale_answers
            res = net.query(vehicle, rsu, cid)
            assert res.status != DISTRUST, (rsu, res.reason)
            truth = REVOKED if revoked_at.get(cid, 1 << 62) <= res.epoch else NOT_REVOKED
            assert res.status == truth
            assert res.epoch >= net.ttp.epoch - 1
            stale_answers += res.epoch < net.ttp.epoch
            queries += 1

        for step in range(200):
            cid = rng.choice([c for c in room if room[c]])
            room[cid] -= 1
            cert = CertificateId(rng.getrandbits(228), cid)
            if step == offline_step:
                net.links["rsu-2"].online = False
            delta = net.ttp.revoke(cert)
            revoked_at[cert.id] = delta.epoch
            if step == offline_step:
                assert set(net.ttp.last_delivery.failed) == {"rsu-2"}
                net.links["rsu-2"].online = True
                assert net.rsus["rsu-2"].epoch == delta.epoch - 1
            else:
                assert not net.ttp.last_delivery.failed
            for _ in range(3):
                pool = list(revoked_at) if rng.random() < 0.5 else never
                check(rng.choice(vehicles), rng.choice(list(net.rsus)), rng.choice(pool))
            if step == offline_step:
                for v in vehicles[:5]:
                    check(v, "rsu-2", cert.id)
        assert net.rsus["rsu-2"].snapshot_requests == 1
        for v in vehicles:
            for rsu in net.rsus:
                check(v, rsu, rng.choice(list(revoked_at)))
                check(v, rsu, rng.choice(never))
        roots = {name: (r.epoch, r.root_digest) for name, r in net.rsus.items()}
        assert set(roots.values()) == {(net.ttp.epoch, net.ttp.tree.root_digest)}

        wrong = tampered_distrust = 0
        pool = list(revoked_at) + never
        for trial in range(1000):
            link = net.links[f"rsu-{trial % 3}"]

            def corrupt(frame):
                i = rng.randrange(len(frame))
                return frame[:i] + bytes([frame[i] ^ rng.randrange(1, 256)]) + frame[i + 1:]

            link.tamper = corrupt
            cid = rng.choice(pool)
            res = net.query(rng.choice(vehicles), f"rsu-{trial % 3}", cid)
            link.tamper = None
            truth = REVOKED if cid in revoked_at else NOT_REVOKED
            if res.status == DISTRUST:
                tampered_distrust += 1
            elif res.status != truth:
                wrong += 1
        assert wrong == 0
        notes.append(f"{queries} honest queries ({stale_answers} answered at epoch-1), "
                     f"roots converged; 1000 tampered frames, {tampered_distrust} distrusted, 0 wrong")


# 9 ---------------------------------------------------------------------------

def test_criterion_9_optimal_k_4096(request):
    with criterion(request, 9, "optimal_k for one class of capacity 4096", 1.0) as notes:
        classes = [VehicleClass(0, "all", 1, 4096)]
        sweep = optimal_k(classes, 2, 16, revocation_fraction=1)
        assert sweep.k == 2
        assert [sweep.table[k] / 32 for k in (2, 3, 4)] == [12, 16, 18]
        brute = {}
        for k in range(2, 17):
            depth, span = 0, 1
            while span < 4096:
                span *= k
                depth += 1
            brute[k] = depth * (k - 1) * 32
        assert brute == sweep.table
        assert min(brute, key=lambda k: (brute[k], k)) == sweep.k
        notes.append("12 vs 16 vs 18 sibling digests")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
