"""Compare the compiled and pure-Python Keccak-f[800] kernels.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--json out.json]

Both backends are imported directly, so the comparison does not depend on
HUFFREV_PURE_PYTHON.  Outputs are cross-checked before anything is timed.
"""

import argparse
import json
import os
import subprocess
import sys
import timeit

from huffrev import _pykeccak

try:
    from huffrev import _ckeccak
except ImportError:
    _ckeccak = None

RATE = 68
ROUNDS = 22
STATE = bytes(range(100))
MESSAGE = bytes(i * 7 % 256 for i in range(RATE * 16))
INPUTS = [bytes([i]) * 40 for i in range(32)]

CASES = {
    "permute": (lambda m: m.permute(STATE, ROUNDS), 1),
    "absorb 16 blocks": (lambda m: m.absorb_blocks(STATE, MESSAGE, RATE, ROUNDS), 16),
    "duplex chain 32 calls": (lambda m: m.duplex_chain(STATE, INPUTS, RATE, ROUNDS), 32),
}

TREE_SNIPPET = """
import random, time
from fractions import Fraction as F
from huffrev import _kernel
from huffrev.hashing import CertificateId
from huffrev.planner import VehicleClass, plan_tree
from huffrev.tree import RevocationTree
plan = plan_tree([VehicleClass(0, "a", F(1), 200_000)], 2)
tree = RevocationTree(plan)
rng = random.Random(0)
t = time.perf_counter()
for _ in range(300):
    tree.insert(CertificateId(rng.getrandbits(228), 0))
print(_kernel.BACKEND, (time.perf_counter() - t) / 300)
"""


def best_of(fn, repeat: int) -> float:
    timer = timeit.Timer(fn)
    n, _ = timer.autorange()
    return min(timer.repeat(repeat, n)) / n


def tree_append(pure: bool) -> tuple[str, float]:
    env = dict(os.environ)
    env.pop("HUFFREV_PURE_PYTHON", None)
    if pure:
        env["HUFFREV_PURE_PYTHON"] = "1"
    out = subprocess.run([sys.executable, "-c", TREE_SNIPPET], env=env, check=True,
                         capture_output=True, text=True).stdout.split()
    return out[0], float(out[1])


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json")
    args = ap.parse_args(argv)

    backends = {"python": _pykeccak}
    if _ckeccak is None:
        print("compiled extension not built; timing the pure-Python kernel only")
    else:
        backends["cython"] = _ckeccak
    for name, (fn, _) in CASES.items():
        if len({fn(m) if name != "duplex chain 32 calls" else tuple(fn(m))
                for m in backends.values()}) != 1:
            raise SystemExit(f"backends disagree on {name}")

    rows = {}
    print(f"{'case':<24}{'python us':>12}{'cython us':>12}{'speedup':>10}{'us/perm (c)':>13}")
    for name, (fn, perms) in CASES.items():
        t = {b: best_of(lambda m=m: fn(m), args.repeat) for b, m in backends.items()}
        rows[name] = {b: v * 1e6 for b, v in t.items()}
        c = t.get("cython")
        print(f"{name:<24}{t['python'] * 1e6:>12.1f}"
              + (f"{c * 1e6:>12.2f}{t['python'] / c:>9.0f}x{c * 1e6 / perms:>13.2f}" if c else ""))

    appends = dict(tree_append(p) for p in (True, False))
    rows["tree append (300 inserts)"] = {b: v * 1e6 for b, v in appends.items()}
    line = f"{'tree append':<24}{appends['python'] * 1e6:>12.1f}"
    if "cython" in appends:
        line += f"{appends['cython'] * 1e6:>12.2f}{appends['python'] / appends['cython']:>9.0f}x"
    print(line)

    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2, sort_keys=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())
