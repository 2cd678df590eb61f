import os
import subprocess
import sys

import pytest

from huffrev import _kernel

SNIPPET = """
import random
from huffrev import _kernel
from huffrev.keccak import sponge_hash
from huffrev.tree import RevocationTree
from huffrev.hashing import CertificateId
from conftest import THREE_CLASSES
from huffrev.planner import plan_tree
tree = RevocationTree(plan_tree(THREE_CLASSES, 3))
rng = random.Random(1)
for _ in range(12):
    tree.insert(CertificateId(rng.getrandbits(228), 2))
print(_kernel.BACKEND, sponge_hash(b"abc" * 50).hex(), tree.root_digest.hex())
"""


def run_with(pure: bool) -> list[str]:
    env = {k: v for k, v in os.environ.items() if k != "HUFFREV_PURE_PYTHON"}
    if pure:
        env["HUFFREV_PURE_PYTHON"] = "1"
    here = os.path.dirname(__file__)
    out = subprocess.run([sys.executable, "-c", SNIPPET], env=env, cwd=here, check=True,
                         capture_output=True, text=True)
    return out.stdout.split()


def test_env_var_selects_fallback_with_identical_results():
    pure = run_with(True)
    default = run_with(False)
    assert pure[0] == "python"
    assert default[0] == _kernel.BACKEND
    assert pure[1:] == default[1:]


@pytest.mark.skipif(bool(os.environ.get("HUFFREV_PURE_PYTHON") or os.environ.get("HUFFREV_NO_EXT")),
                    reason="fallback requested")
def test_extension_is_built():
    assert _kernel.BACKEND == "cython"
