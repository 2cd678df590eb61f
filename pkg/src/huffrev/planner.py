"""k-ary Huffman planning of revocation-tree depths per vehicle class.

The plan is two-level: a Huffman code over vehicle classes (weighted by how
often their certificates are queried) anchors one complete k-ary subtree per
class, sized to hold that class's revocation capacity.
"""

from __future__ import annotations

import csv
import heapq
import io
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import EmptyInput, InvalidArity, PlanError

DEFAULT_FRACTION = Fraction(1, 100)
K_LIMIT = 64


@dataclass(frozen=True)
class VehicleClass:
    class_id: int
    label: str
    query_weight: Fraction
    population: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "query_weight", Fraction(self.query_weight))
        if not 0 <= self.class_id <= 255:
            raise PlanError(f"class_id {self.class_id} does not fit one byte")
        if self.query_weight < 0:
            raise PlanError(f"class {self.class_id}: negative query weight")
        if self.population < 0:
            raise PlanError(f"class {self.class_id}: negative population")


def validate_classes(classes: Sequence[VehicleClass]) -> None:
    if not classes:
        raise EmptyInput("no vehicle classes")
    ids = [c.class_id for c in classes]
    if len(set(ids)) != len(ids):
        raise PlanError("duplicate class_id")
    total = sum(c.query_weight for c in classes)
    if abs(total - 1) > Fraction(1, 10**9):
        raise PlanError(f"query weights sum to {float(total)}, expected 1")


def ceil_log(n: int, k: int) -> int:
    """Smallest m with k**m >= n (0 for n <= 1)."""
    m, span = 0, 1
    while span < n:
        span *= k
        m += 1
    return m


def build_kary_code(weights: Sequence, k: int) -> list[int]:
    """Code depth per symbol for a minimum-expected-depth k-ary prefix code.

    Zero-weight dummies pad the alphabet until ``(n - 1) % (k - 1) == 0``;
    ties are broken by symbol order, so equal inputs give equal codes.
    """
    return kary_code_with_dummies(weights, k)[0]


def kary_code_with_dummies(weights: Sequence, k: int) -> tuple[list[int], list[int]]:
    """Like :func:`build_kary_code` but also returns the dummy depths."""
    if k < 2:
        raise InvalidArity(f"arity must be >= 2, got {k}")
    ws = [Fraction(w) for w in weights]
    if not ws:
        raise EmptyInput("no weights")
    if any(w < 0 for w in ws):
        raise ValueError("weights must be non-negative")
    if not any(ws):
        raise EmptyInput("at least one weight must be positive")
    n = len(ws)
    dummies = (-(n - 1)) % (k - 1)
    depth = [0] * (n + dummies)
    # Dummies take the lowest tie keys so they sink to the deepest level.
    heap = [(Fraction(0), i, [n + i]) for i in range(dummies)]
    heap += [(w, dummies + i, [i]) for i, w in enumerate(ws)]
    heapq.heapify(heap)
    seq = len(heap)
    while len(heap) > 1:
        total, members = Fraction(0), []
        for _ in range(k):
            w, _, syms = heapq.heappop(heap)
            total += w
            members += syms
        for s in members:
            depth[s] += 1
        heapq.heappush(heap, (total, seq, members))
        seq += 1
    return depth[:n], depth[n:]


def kraft_sum(depths: Iterable[int], k: int) -> Fraction:
    return sum((Fraction(1, k**d) for d in depths), Fraction(0))


@dataclass(frozen=True)
class ClassPlan:
    class_id: int
    label: str
    query_weight: Fraction
    population: int
    code_depth: int
    capacity: int
    subtree_depth: int

    @property
    def leaf_depth(self) -> int:
        return self.code_depth + self.subtree_depth


@dataclass(frozen=True)
class HuffmanPlan:
    k: int
    classes: tuple[ClassPlan, ...]
    revocation_fraction: Fraction = DEFAULT_FRACTION

    @property
    def class_depth(self) -> dict[int, int]:
        return {c.class_id: c.code_depth for c in self.classes}

    @property
    def class_capacity(self) -> dict[int, int]:
        return {c.class_id: c.capacity for c in self.classes}

    @property
    def leaf_depth(self) -> dict[int, int]:
        return {c.class_id: c.leaf_depth for c in self.classes}

    def get(self, class_id: int) -> ClassPlan:
        for c in self.classes:
            if c.class_id == class_id:
                return c
        raise KeyError(class_id)

    def anchors(self) -> dict[int, tuple[int, int]]:
        """Canonical placement of each class subtree as ``(depth, index)``.

        Classes are laid out left to right by (code depth, class_id), the
        k-ary analogue of canonical Huffman codes.
        """
        order = sorted(self.classes, key=lambda c: (c.code_depth, c.class_id))
        out: dict[int, tuple[int, int]] = {}
        code, prev = 0, None
        for c in order:
            if prev is not None:
                code = (code + 1) * self.k ** (c.code_depth - prev)
            prev = c.code_depth
            out[c.class_id] = (c.code_depth, code)
        return out

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "revocation_fraction": str(self.revocation_fraction),
            "classes": [
                {
                    "id": c.class_id,
                    "label": c.label,
                    "query_weight": str(c.query_weight),
                    "population": c.population,
                    "code_depth": c.code_depth,
                    "capacity": c.capacity,
                    "leaf_depth": c.leaf_depth,
                }
                for c in self.classes
            ],
        }

    def to_json(self, indent: int | None = None) -> str:
        if indent is None:
            return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return json.dumps(self.to_dict(), sort_keys=True, indent=indent)

    def canonical_bytes(self) -> bytes:
        return self.to_json().encode()

    @classmethod
    def from_dict(cls, doc: dict) -> "HuffmanPlan":
        try:
            k = int(doc["k"])
            if k < 2:
                raise InvalidArity(f"arity must be >= 2, got {k}")
            classes = []
            for entry in doc["classes"]:
                capacity = int(entry["capacity"])
                code_depth = int(entry["code_depth"])
                sub = ceil_log(max(capacity, 1), k)
                if "leaf_depth" in entry and int(entry["leaf_depth"]) != code_depth + sub:
                    raise PlanError(f"class {entry['id']}: inconsistent leaf_depth")
                classes.append(ClassPlan(
                    class_id=int(entry["id"]),
                    label=str(entry.get("label", "")),
                    query_weight=Fraction(entry.get("query_weight", 0)),
                    population=int(entry.get("population", 0)),
                    code_depth=code_depth,
                    capacity=capacity,
                    subtree_depth=sub,
                ))
            fraction = Fraction(doc.get("revocation_fraction", DEFAULT_FRACTION))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, PlanError):
                raise
            raise PlanError(f"bad plan document: {exc}") from exc
        if not classes:
            raise PlanError("plan has no classes")
        ids = [c.class_id for c in classes]
        if len(set(ids)) != len(ids) or not all(0 <= i <= 255 for i in ids):
            raise PlanError("class ids must be unique and fit one byte")
        if any(c.capacity < 0 or c.code_depth < 0 for c in classes):
            raise PlanError("negative capacity or depth")
        if kraft_sum((c.code_depth for c in classes), k) > 1:
            raise PlanError("class code depths violate Kraft's inequality")
        return cls(k, tuple(classes), fraction)

    @classmethod
    def from_json(cls, text: str | bytes) -> "HuffmanPlan":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise PlanError(f"bad plan JSON: {exc}") from exc
        return cls.from_dict(doc)


def plan_tree(classes: Sequence[VehicleClass], k: int,
              revocation_fraction=DEFAULT_FRACTION) -> HuffmanPlan:
    fraction = Fraction(revocation_fraction)
    if not 0 < fraction <= 1:
        raise PlanError("revocation_fraction must be in (0, 1]")
    validate_classes(classes)
    ordered = sorted(classes, key=lambda c: c.class_id)
    depths = build_kary_code([c.query_weight for c in ordered], k)
    plans = []
    for c, d in zip(ordered, depths):
        cap = math.ceil(fraction * c.population)
        plans.append(ClassPlan(c.class_id, c.label, c.query_weight, c.population,
                               d, cap, ceil_log(max(cap, 1), k)))
    return HuffmanPlan(k, tuple(plans), fraction)


@dataclass(frozen=True)
class ProofSizeModel:
    """Bytes in a membership proof as a function of leaf depth.

    ``per_level_bytes`` covers framing that scales with depth (the child
    index byte on the wire); the bare digest model leaves it at zero.
    """

    digest_bytes: int = 32
    overhead_bytes: int = 0
    per_level_bytes: int = 0

    def __post_init__(self) -> None:
        if self.digest_bytes <= 0:
            raise ValueError("digest_bytes must be positive")

    @classmethod
    def wire(cls) -> "ProofSizeModel":
        """Matches the serialized proof layout in :mod:`huffrev.proof`."""
        from .proof import PROOF_FIXED_BYTES

        return cls(digest_bytes=32, overhead_bytes=PROOF_FIXED_BYTES, per_level_bytes=1)

    def proof_bytes(self, leaf_depth: int, k: int) -> int:
        return leaf_depth * ((k - 1) * self.digest_bytes + self.per_level_bytes) + self.overhead_bytes


def expected_proof_size(plan: HuffmanPlan, model: ProofSizeModel = ProofSizeModel()) -> Fraction:
    per_level = (plan.k - 1) * model.digest_bytes + model.per_level_bytes
    total = sum((c.query_weight * c.leaf_depth * per_level for c in plan.classes), Fraction(0))
    return total + model.overhead_bytes


@dataclass
class KSweep:
    k: int
    plan: HuffmanPlan
    table: dict[int, Fraction] = field(default_factory=dict)


def optimal_k(classes: Sequence[VehicleClass], k_min: int = 2, k_max: int = 16,
              model: ProofSizeModel = ProofSizeModel(),
              revocation_fraction=DEFAULT_FRACTION) -> KSweep:
    """Exhaustive arity sweep; the smallest k wins ties."""
    if not 2 <= k_min <= k_max <= K_LIMIT:
        raise InvalidArity(f"need 2 <= k_min <= k_max <= {K_LIMIT}")
    best: KSweep | None = None
    table: dict[int, Fraction] = {}
    for k in range(k_min, k_max + 1):
        plan = plan_tree(classes, k, revocation_fraction)
        size = expected_proof_size(plan, model)
        table[k] = size
        if best is None or size < table[best.k]:
            best = KSweep(k, plan)
    assert best is not None
    best.table = table
    return best


REGISTRY_HEADER = ["class_id", "label", "query_weight", "population"]


def read_registry(source) -> list[VehicleClass]:
    """Parse the class registry CSV; errors name the offending line."""
    if isinstance(source, str):
        source = io.StringIO(source)
    reader = csv.reader(source)
    rows = list(enumerate(reader, start=1))
    if not rows:
        raise PlanError("line 1: empty registry")
    _, header = rows[0]
    if [h.strip() for h in header] != REGISTRY_HEADER:
        raise PlanError(f"line 1: expected header {','.join(REGISTRY_HEADER)}")
    classes = []
    for lineno, row in rows[1:]:
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != 4:
            raise PlanError(f"line {lineno}: expected 4 fields, got {len(row)}")
        try:
            classes.append(VehicleClass(
                class_id=int(row[0]),
                label=row[1].strip(),
                query_weight=Fraction(row[2].strip()),
                population=int(row[3]),
            ))
        except (ValueError, ZeroDivisionError) as exc:
            raise PlanError(f"line {lineno}: {exc}") from exc
    if not classes:
        raise PlanError("registry has no class rows")
    try:
        validate_classes(classes)
    except PlanError as exc:
        raise PlanError(f"registry: {exc}") from exc
    return classes
