"""Synthetic fleet benchmark: proof sizes, CRL size and duplexing-call counts.

Everything is derived from the seed, and no wall-clock time is recorded, so
two runs with the same arguments produce byte-identical reports.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import asdict, dataclass, field
from fractions import Fraction

from .crl import CRL_FRAMING_BYTES, CrlBaseline
from .hashing import CERT_BYTES, DIGEST_BYTES, CertificateId
from .planner import ProofSizeModel, VehicleClass, optimal_k
from .proof import DuplexMac
from .tree import RevocationTree

CLASS_LABELS = ("emergency", "transit", "commercial", "private")


def synthetic_registry(fleet: int, seed: int) -> list[VehicleClass]:
    """Four classes; the most-queried classes get the smallest populations."""
    if fleet < 1:
        raise ValueError("fleet must be >= 1")
    rng = random.Random(seed)
    raw_w = sorted((rng.randint(1, 100) for _ in CLASS_LABELS), reverse=True)
    raw_p = sorted(rng.randint(1, 100) for _ in CLASS_LABELS)
    total_w, total_p = sum(raw_w), sum(raw_p)
    pops = [fleet * p // total_p for p in raw_p]
    pops[-1] += fleet - sum(pops)
    return [VehicleClass(i, label, Fraction(w, total_w), pop)
            for i, (label, w, pop) in enumerate(zip(CLASS_LABELS, raw_w, pops))]


def round_half_up(x: Fraction) -> int:
    return math.floor(x + Fraction(1, 2))


@dataclass
class ClassReport:
    class_id: int
    label: str
    query_weight: str
    population: int
    code_depth: int
    leaf_depth: int
    capacity: int
    revoked: int
    proof_bytes_mean: float
    proof_bytes_max: int
    proof_bytes_model: int
    proof_smaller_than_crl: bool


@dataclass
class BenchReport:
    fleet: int
    fraction: str
    seed: int
    k: int
    k_table: dict[str, str]
    revoked: int
    classes: list[ClassReport]
    crl_bytes: int
    crl_payload_bytes: int
    crl_framing_bytes: int
    incremental_calls_total: int
    incremental_calls_mean: float
    incremental_calls_max: int
    append_bound_ok: bool
    rebuild_calls: int
    rebuild_ratio: float
    reduction_factor: float
    root: str
    checks: dict[str, bool] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def table(self) -> str:
        lines = [
            f"fleet {self.fleet}  fraction {self.fraction}  seed {self.seed}  k {self.k}  "
            f"revoked {self.revoked}",
            f"{'class':<12}{'weight':>10}{'depth':>7}{'revoked':>9}{'proof mean':>12}"
            f"{'proof max':>11}{'model':>7}",
        ]
        for c in self.classes:
            lines.append(f"{c.label:<12}{c.query_weight:>10}{c.leaf_depth:>7}{c.revoked:>9}"
                         f"{c.proof_bytes_mean:>12.1f}{c.proof_bytes_max:>11}{c.proof_bytes_model:>7}")
        lines += [
            f"CRL bytes {self.crl_bytes} ({self.crl_payload_bytes} payload + "
            f"{self.crl_framing_bytes} framing)",
            f"per-query reduction {self.reduction_factor:.2f}x",
            f"duplexing calls per append mean {self.incremental_calls_mean:.2f} max "
            f"{self.incremental_calls_max}; full rebuild {self.rebuild_calls} "
            f"({self.rebuild_ratio:.1f}x)",
            "checks " + " ".join(f"{k}={'ok' if v else 'FAIL'}" for k, v in sorted(self.checks.items())),
        ]
        return "\n".join(lines) + "\n"


def run_bench(fleet: int = 100_000, fraction=Fraction(1, 100), k_min: int = 2, k_max: int = 16,
              seed: int = 0) -> BenchReport:
    fraction = Fraction(fraction)
    classes = synthetic_registry(fleet, seed)
    model = ProofSizeModel.wire()
    sweep = optimal_k(classes, k_min, k_max, model, fraction)
    plan, k = sweep.plan, sweep.k
    rng = random.Random(f"revocations:{seed}")
    signer = DuplexMac(rng.getrandbits(256).to_bytes(32, "big"))
    tree = RevocationTree(plan, signer)

    n = round_half_up(fraction * fleet)
    room = {c.class_id: c.capacity for c in plan.classes}
    pops = {c.class_id: c.population for c in plan.classes}
    by_class: dict[int, list[int]] = {c.class_id: [] for c in plan.classes}
    calls: list[int] = []
    bound_ok = True
    for _ in range(n):
        open_ = [cid for cid in sorted(room) if room[cid] > 0]
        cid = rng.choices(open_, weights=[pops[c] or 1 for c in open_])[0]
        cert_id = rng.getrandbits(228)
        while cert_id in tree:
            cert_id = rng.getrandbits(228)
        tree.insert(CertificateId(cert_id, cid))
        room[cid] -= 1
        by_class[cid].append(cert_id)
        calls.append(tree.last_op_calls)
        bound_ok &= tree.last_op_calls <= plan.get(cid).leaf_depth * k

    root, rebuild_calls = tree.recompute_root()
    crl = CrlBaseline.build(tree.live_ids(), tree.epoch, signer)

    reports = []
    for c in plan.classes:
        sizes = [len(tree.prove_membership(i).to_bytes()) for i in by_class[c.class_id]]
        modelled = model.proof_bytes(c.leaf_depth, k)
        threshold = Fraction(c.leaf_depth * (k - 1) * DIGEST_BYTES, CERT_BYTES)
        reports.append(ClassReport(
            class_id=c.class_id,
            label=c.label,
            query_weight=str(c.query_weight),
            population=c.population,
            code_depth=c.code_depth,
            leaf_depth=c.leaf_depth,
            capacity=c.capacity,
            revoked=len(sizes),
            proof_bytes_mean=round(sum(sizes) / len(sizes), 3) if sizes else float(modelled),
            proof_bytes_max=max(sizes, default=modelled),
            proof_bytes_model=modelled,
            proof_smaller_than_crl=(modelled < crl.size_bytes) if n > threshold else True,
        ))

    worst = max(r.proof_bytes_max for r in reports)
    mean_calls = sum(calls) / len(calls) if calls else 0.0
    report = BenchReport(
        fleet=fleet,
        fraction=str(fraction),
        seed=seed,
        k=k,
        k_table={str(kk): str(v) for kk, v in sweep.table.items()},
        revoked=n,
        classes=reports,
        crl_bytes=crl.size_bytes,
        crl_payload_bytes=CERT_BYTES * len(crl.entries),
        crl_framing_bytes=CRL_FRAMING_BYTES,
        incremental_calls_total=sum(calls),
        incremental_calls_mean=round(mean_calls, 3),
        incremental_calls_max=max(calls, default=0),
        append_bound_ok=bound_ok,
        rebuild_calls=rebuild_calls,
        rebuild_ratio=round(rebuild_calls / mean_calls, 3) if mean_calls else 0.0,
        reduction_factor=round(crl.size_bytes / worst, 3),
        root=root.hex(),
    )
    report.checks = {
        "root_matches_rebuild": root == tree.root_digest,
        "proof_smaller_than_crl": all(r.proof_smaller_than_crl for r in reports),
        "proof_size_matches_model": all(r.proof_bytes_max == r.proof_bytes_model for r in reports
                                        if r.revoked),
        "append_bound": bound_ok,
        "crl_verifies": crl.verify(signer),
    }
    return report
