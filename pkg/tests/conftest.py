import random
from fractions import Fraction as F

import pytest

from huffrev.hashing import CertificateId
from huffrev.planner import VehicleClass, plan_tree
from huffrev.proof import DuplexMac
from huffrev.tree import RevocationTree

THREE_CLASSES = [
    VehicleClass(0, "taxi", F("0.6"), 1000),
    VehicleClass(1, "truck", F("0.3"), 2000),
    VehicleClass(2, "private", F("0.1"), 97000),
]

TTP_KEY = bytes(range(32))


@pytest.fixture
def mac():
    return DuplexMac(TTP_KEY)


@pytest.fixture
def three_plan():
    return plan_tree(THREE_CLASSES, 2)


def random_cert(rng: random.Random, classes=(0, 1, 2)) -> CertificateId:
    return CertificateId(rng.getrandbits(228), rng.choice(classes))


def fill(tree: RevocationTree, rng: random.Random, n: int) -> list[CertificateId]:
    """Insert ``n`` random certificates, skipping classes that are full."""
    out = []
    classes = list(tree.strata)
    while len(out) < n:
        open_ = [c for c in classes if len(tree.strata[c].ids) < tree.strata[c].capacity]
        if not open_:
            break
        cert = CertificateId(rng.getrandbits(228), rng.choice(open_))
        tree.insert(cert)
        out.append(cert)
    return out


def pytest_terminal_summary(terminalreporter, config):
    results = config.__dict__.get("huffrev_acceptance")
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number, ok, detail, elapsed, limit in sorted(results):
        terminalreporter.write_line(
            f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail} [{elapsed:.2f}s / {limit:g}s]")
