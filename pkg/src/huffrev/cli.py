"""``huffrev`` command line: plan, init, revoke, query, verify, bench, serve.

Exit codes: 0 success or accept, 1 verification reject, 2 usage or parse
error, 3 transport error, 4 certificate not found, 5 duplicate certificate,
6 any other tree error.
"""

from __future__ import annotations

import argparse
import logging
import os
import signal
import sys
import threading
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

from .bench import run_bench
from .errors import (
    DuplicateCertificate,
    HuffrevError,
    MalformedFrame,
    NotFound,
    PlanError,
    TransportError,
)
from .hashing import CertificateId, parse_cert_hex
from .planner import HuffmanPlan, ProofSizeModel, expected_proof_size, optimal_k, read_registry
from .proof import DuplexMac, MembershipProof, RootVerifier, verify_membership
from .revnet.config import ConfigError, NetworkConfig, load_config
from .revnet.messages import (
    ADMIN_INSERT,
    ADMIN_REMOVE,
    AdminRequest,
    DeltaMessage,
    ErrorCode,
    SnapshotMessage,
    SnapshotRequest,
    Status,
)
from .revnet.nodes import (
    DISTRUST,
    ManualClock,
    RemoteError,
    RsuNode,
    SystemClock,
    TtpNode,
    VehicleClient,
    call,
)
from .revnet.transport import FrameServer, TcpLink
from .tree import Compact, Insert, RevocationTree, TreeDelta

log = logging.getLogger("huffrev")

EXIT_OK, EXIT_REJECT, EXIT_USAGE, EXIT_TRANSPORT = 0, 1, 2, 3
EXIT_NOT_FOUND, EXIT_DUPLICATE, EXIT_TREE = 4, 5, 6


class UsageError(Exception):
    pass


def _fraction(text: str) -> Fraction:
    try:
        value = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0 < value <= 1:
        raise argparse.ArgumentTypeError("fraction must be in (0, 1]")
    return value


def _cert(text: str) -> int:
    try:
        return parse_cert_hex(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _key(text: str) -> bytes:
    try:
        key = bytes.fromhex(text)
    except ValueError:
        raise argparse.ArgumentTypeError("key must be hex") from None
    if not 1 <= len(key) <= 255:
        raise argparse.ArgumentTypeError("key must be 1..255 bytes")
    return key


def write_atomic(path: Path, data: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def _ttp_mac(args) -> Optional[DuplexMac]:
    if getattr(args, "key", None):
        return DuplexMac(args.key)
    if getattr(args, "config", None):
        return load_config(args.config).ttp.mac
    return None


def _load_tree(path: Path, mac: Optional[DuplexMac]) -> RevocationTree:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise UsageError(f"cannot read tree file: {exc}") from exc
    return RevocationTree.from_snapshot(raw, verifier=mac, signer=mac)


def _print_delta(delta: TreeDelta, tree: Optional[RevocationTree] = None) -> None:
    for op in delta.ops:
        if isinstance(op, Insert):
            print(f"insert cert={op.cert.hex()} class={op.cert.class_id}")
        elif isinstance(op, Compact):
            print("compact")
        else:
            print(f"remove cert={CertificateId(op.cert_id).hex()}")
    root = delta.new_signed_root.root_digest.hex() if delta.new_signed_root else "unsigned"
    print(f"epoch={delta.epoch} root={root} delta_bytes={len(delta.to_bytes())}")
    if tree is not None:
        print(f"duplex_calls={tree.last_op_calls}")


# -- plan ----------------------------------------------------------------------

def cmd_plan(args) -> int:
    try:
        text = Path(args.registry).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read registry: {exc}") from exc
    classes = read_registry(text)
    model = ProofSizeModel.wire() if args.model == "wire" else ProofSizeModel()
    sweep = optimal_k(classes, args.k_min, args.k_max, model, args.fraction)
    plan = sweep.plan
    if args.out:
        Path(args.out).write_text(plan.to_json(indent=2) + "\n")
    print(f"k={sweep.k} expected_proof_bytes={float(expected_proof_size(plan, model)):.2f} "
          f"model={args.model}")
    for c in plan.classes:
        print(f"class={c.class_id} label={c.label} weight={c.query_weight} code_depth={c.code_depth} "
              f"capacity={c.capacity} leaf_depth={c.leaf_depth} "
              f"proof_bytes={model.proof_bytes(c.leaf_depth, plan.k)}")
    for k, size in sweep.table.items():
        print(f"sweep k={k} expected_proof_bytes={float(size):.2f}")
    return EXIT_OK


# -- init ----------------------------------------------------------------------

def cmd_init(args) -> int:
    try:
        plan = HuffmanPlan.from_json(Path(args.plan).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read plan: {exc}") from exc
    mac = _ttp_mac(args)
    tree = RevocationTree(plan, mac)
    if mac:
        tree.sign_root()
    write_atomic(Path(args.out), tree.to_snapshot())
    print(f"epoch=0 root={tree.root_digest.hex()}")
    return EXIT_OK


# -- revoke --------------------------------------------------------------------

def cmd_revoke(args) -> int:
    mac = _ttp_mac(args)
    if mac is None:
        raise UsageError("revoke needs --key or --config to sign the new root")
    if args.rsu:
        return _revoke_remote(args, mac)
    tree = _load_tree(args.tree, mac)
    if args.remove:
        delta = tree.remove(args.cert)
    else:
        if args.class_id is None:
            raise UsageError("--class is required when revoking")
        delta = tree.insert(CertificateId(args.cert, args.class_id))
    write_atomic(Path(args.tree), tree.to_snapshot())
    _print_delta(delta, tree)
    return EXIT_OK


def _revoke_remote(args, mac: DuplexMac) -> int:
    link = TcpLink(args.rsu, timeout=args.timeout)
    snap = call(link, SnapshotRequest(0))
    if not isinstance(snap, SnapshotMessage):
        raise MalformedFrame("expected a snapshot from the TTP")
    current = RevocationTree.from_snapshot(snap.snapshot, verifier=mac)
    if args.remove:
        class_id = current.class_of(args.cert) if args.cert in current else 0
        req = AdminRequest.create(ADMIN_REMOVE, CertificateId(args.cert, class_id), current.epoch, mac)
    else:
        if args.class_id is None:
            raise UsageError("--class is required when revoking")
        req = AdminRequest.create(ADMIN_INSERT, CertificateId(args.cert, args.class_id),
                                  current.epoch, mac)
    reply = call(link, req)
    if not isinstance(reply, DeltaMessage):
        raise MalformedFrame("expected a delta from the TTP")
    _print_delta(reply.delta)
    return EXIT_OK


# -- query / verify ------------------------------------------------------------

def _vehicle(args) -> tuple[VehicleClient, str]:
    if not args.config:
        raise UsageError("--rsu needs --config for the TTP and RSU keys")
    cfg: NetworkConfig = load_config(args.config)
    name = args.name
    if name is None:
        match = cfg.rsu_by_address(args.rsu)
        if match is None:
            raise UsageError(f"no rsu with address {args.rsu} in config; pass --name")
        name = match.name
    keys = {r.name: r.mac for r in cfg.rsus}
    vehicle = VehicleClient(cfg.ttp.mac, keys, cfg.window, SystemClock(), cfg.max_statement_age)
    return vehicle, name


def _remote_query(args):
    vehicle, name = _vehicle(args)
    return vehicle.query(TcpLink(args.rsu, timeout=args.timeout), name, args.cert)


def cmd_query(args) -> int:
    if args.rsu:
        res = _remote_query(args)
        if res.status == DISTRUST:
            print(f"DISTRUST reason={res.reason}")
            return EXIT_TRANSPORT if res.reason == "timeout" else EXIT_REJECT
        print(f"{res.status.upper()} epoch={res.epoch}")
        print(f"{'proof' if res.response.status == Status.REVOKED else 'statement'}="
              f"{res.response.body.hex()}")
        if args.proof_out and res.response.status == Status.REVOKED:
            Path(args.proof_out).write_bytes(res.response.body)
        return EXIT_OK
    tree = _load_tree(args.tree, _ttp_mac(args))
    if args.cert not in tree:
        print(f"NOT_REVOKED epoch={tree.epoch}")
        return EXIT_OK
    if tree.signed_root is None:
        raise UsageError("tree file has no signed root; revoke or init with --key first")
    proof = tree.prove_membership(args.cert).to_bytes()
    print(f"REVOKED epoch={tree.epoch}")
    print(f"proof={proof.hex()}")
    if args.proof_out:
        Path(args.proof_out).write_bytes(proof)
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.rsu and not args.proof:
        res = _remote_query(args)
        if res.status == DISTRUST:
            print(f"REJECT reason={res.reason}")
            return EXIT_TRANSPORT if res.reason == "timeout" else EXIT_REJECT
        print(f"ACCEPT status={res.status} epoch={res.epoch}")
        return EXIT_OK
    mac = _ttp_mac(args)
    if mac is None:
        raise UsageError("verify needs --key or --config")
    if args.proof:
        try:
            raw = Path(args.proof).read_bytes()
        except OSError as exc:
            raise UsageError(f"cannot read proof: {exc}") from exc
        try:
            proof = MembershipProof.from_bytes(raw)
        except MalformedFrame:
            print("REJECT reason=path")
            return EXIT_REJECT
    elif args.tree:
        proof = _load_tree(args.tree, None).prove_membership(args.cert)
    else:
        raise UsageError("verify needs --proof, --tree or --rsu")
    verdict = verify_membership(proof, args.cert, RootVerifier(mac, args.window, args.min_epoch))
    if not verdict:
        print(f"REJECT reason={verdict.reason}")
        return EXIT_REJECT
    print(f"ACCEPT epoch={proof.signed_root.epoch}")
    return EXIT_OK


# -- bench ---------------------------------------------------------------------

def cmd_bench(args) -> int:
    if args.fleet < 1:
        raise UsageError("--fleet must be >= 1")
    report = run_bench(args.fleet, args.fraction, args.k_min, args.k_max, args.seed)
    if args.json:
        Path(args.json).write_text(report.to_json())
    sys.stdout.write(report.table())
    return EXIT_OK if all(report.checks.values()) else EXIT_REJECT


# -- serve ---------------------------------------------------------------------

def _persist(path: Optional[Path]):
    if path is None:
        return None
    return lambda tree: write_atomic(path, tree.to_snapshot())


def _retry_until(stop: threading.Event, fn, label: str, interval: float = 1.0) -> None:
    while not stop.is_set():
        try:
            fn()
            return
        except (TransportError, HuffrevError) as exc:
            log.debug("%s failed, retrying: %s", label, exc)
        stop.wait(interval)


def cmd_serve(args) -> int:
    cfg = load_config(args.config)
    clock = ManualClock(args.fixed_clock) if args.fixed_clock is not None else SystemClock()
    stop = threading.Event()
    if args.role == "ttp":
        mac = cfg.ttp.mac
        path = cfg.ttp.tree
        if path is not None and path.exists():
            tree = RevocationTree.from_snapshot(path.read_bytes(), verifier=mac, signer=mac)
        elif args.plan:
            tree = RevocationTree(HuffmanPlan.from_json(Path(args.plan).read_text()), mac)
        else:
            raise UsageError("ttp needs an existing tree file in the config or --plan")
        roster = {r.name: TcpLink(r.address, timeout=args.timeout, retries=0) for r in cfg.rsus}
        node = TtpNode(tree, roster, on_update=_persist(path))
        flush = _persist(path)
        address = cfg.ttp.address
        background = lambda: _retry_until(stop, _bootstrap_all(node), "bootstrap")  # noqa: E731
    else:
        if not args.name:
            raise UsageError("--name is required for --role rsu")
        me = cfg.rsu(args.name)
        tree = None
        if me.tree is not None and me.tree.exists():
            tree = RevocationTree.from_snapshot(me.tree.read_bytes(), verifier=cfg.ttp.mac)
        node = RsuNode(me.name, me.mac, cfg.ttp.mac, TcpLink(cfg.ttp.address, timeout=args.timeout),
                       clock, tree, on_update=_persist(me.tree))
        flush = _persist(me.tree)
        address = me.address
        background = lambda: _retry_until(stop, node.bootstrap, "snapshot fetch")  # noqa: E731

    server = FrameServer(node, address).start()
    log.info("role=%s listening=%s", args.role, server.address)
    for sig in (signal.SIGINT, signal.SIGTERM):
        signal.signal(sig, lambda *_: stop.set())
    threading.Thread(target=background, daemon=True).start()
    stop.wait()
    log.info("role=%s shutting down", args.role)
    server.stop()
    if flush and node.tree is not None:
        with node.lock:
            flush(node.tree)
    return EXIT_OK


def _bootstrap_all(node: TtpNode):
    def attempt() -> None:
        pending = [n for n in node.roster if n not in done]
        for name in pending:
            try:
                node.push_snapshot(name)
                done.add(name)
            except (TransportError, HuffrevError) as exc:
                log.debug("bootstrap of %s pending: %s", name, exc)
        if len(done) != len(node.roster):
            raise TransportError("some rsus not bootstrapped yet")

    done: set[str] = set()
    return attempt


# -- parser --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="huffrev", description="Huffman hash-tree certificate revocation")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("plan", help="plan tree depths from a class registry")
    s.add_argument("--registry", required=True)
    s.add_argument("--k-min", type=int, default=2)
    s.add_argument("--k-max", type=int, default=16)
    s.add_argument("--fraction", type=_fraction, default=Fraction(1, 100))
    s.add_argument("--model", choices=["wire", "digest"], default="wire",
                   help="proof size model: serialized bytes or sibling digests only")
    s.add_argument("--out")
    s.set_defaults(func=cmd_plan)

    s = sub.add_parser("init", help="create an empty tree file from a plan")
    s.add_argument("--plan", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--key", type=_key)
    s.add_argument("--config")
    s.set_defaults(func=cmd_init)

    for name, func, help_ in (("revoke", cmd_revoke, "revoke (or --remove) a certificate"),
                              ("query", cmd_query, "look up a certificate"),
                              ("verify", cmd_verify, "verify a revocation proof or live answer")):
        s = sub.add_parser(name, help=help_)
        where = s.add_mutually_exclusive_group(required=name != "verify")
        where.add_argument("--tree", type=Path)
        where.add_argument("--rsu", metavar="HOST:PORT")
        s.add_argument("--cert", type=_cert, required=True)
        s.add_argument("--key", type=_key, help="TTP key (hex)")
        s.add_argument("--config")
        s.add_argument("--timeout", type=float, default=5.0)
        s.set_defaults(func=func)
        if name == "revoke":
            s.add_argument("--class", dest="class_id", type=int)
            s.add_argument("--remove", action="store_true")
        else:
            s.add_argument("--name", help="rsu name in the config (default: by address)")
        if name == "query":
            s.add_argument("--proof-out")
        if name == "verify":
            s.add_argument("--proof")
            s.add_argument("--window", type=int, default=1)
            s.add_argument("--min-epoch", type=int, help="newest epoch already seen")

    s = sub.add_parser("bench", help="synthetic fleet benchmark against a CRL")
    s.add_argument("--fleet", type=int, default=100_000)
    s.add_argument("--fraction", type=_fraction, default=Fraction(1, 100))
    s.add_argument("--k-min", type=int, default=2)
    s.add_argument("--k-max", type=int, default=16)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--json")
    s.set_defaults(func=cmd_bench)

    s = sub.add_parser("serve", help="run a TTP or RSU node")
    s.add_argument("--role", choices=["ttp", "rsu"], required=True)
    s.add_argument("--config", required=True)
    s.add_argument("--name")
    s.add_argument("--plan", help="plan file for a TTP without a tree file yet")
    s.add_argument("--timeout", type=float, default=5.0)
    s.add_argument("--fixed-clock", type=int, help="answer with this timestamp (testing)")
    s.set_defaults(func=cmd_serve)
    return p


def _remote_exit(exc: RemoteError) -> int:
    return {ErrorCode.NOT_FOUND: EXIT_NOT_FOUND, ErrorCode.DUPLICATE: EXIT_DUPLICATE,
            ErrorCode.MALFORMED: EXIT_USAGE}.get(exc.code, EXIT_TREE)


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(level=os.environ.get("HUFFREV_LOG", "WARNING").upper(),
                        format="%(asctime)s %(levelname)s %(name)s %(message)s", stream=sys.stderr)
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, PlanError, ConfigError, MalformedFrame, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TransportError as exc:
        print(f"transport error: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT
    except NotFound as exc:
        print(f"not found: {exc}", file=sys.stderr)
        return EXIT_NOT_FOUND
    except DuplicateCertificate as exc:
        print(f"duplicate: {exc}", file=sys.stderr)
        return EXIT_DUPLICATE
    except RemoteError as exc:
        print(f"remote error: {exc}", file=sys.stderr)
        return _remote_exit(exc)
    except HuffrevError as exc:
        print(f"tree error: {exc}", file=sys.stderr)
        return EXIT_TREE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
