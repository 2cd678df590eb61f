"""Request/response links: in-process (with fault injection) and TCP."""

from __future__ import annotations

import logging
import socket
import socketserver
import threading
from typing import Callable, Optional, Protocol

from ..errors import MalformedFrame, TransportError
from .messages import HEADER_BYTES, parse_header

log = logging.getLogger(__name__)


class FrameHandler(Protocol):
    def handle(self, frame: bytes) -> bytes: ...


class Link(Protocol):
    def request(self, frame: bytes) -> bytes: ...


def parse_address(text: str) -> tuple[str, int]:
    host, sep, port = text.rpartition(":")
    if not sep or not host or not port.isdigit():
        raise ValueError(f"address must be host:port, got {text!r}")
    return host, int(port)


class LocalLink:
    """Direct call into a node, for tests and single-process simulations.

    ``online=False`` makes every request fail like a dead connection;
    ``tamper`` and ``tamper_request`` rewrite frames in flight.
    """

    def __init__(self, node: FrameHandler, name: str = "local"):
        self.node = node
        self.name = name
        self.online = True
        self.tamper: Optional[Callable[[bytes], bytes]] = None
        self.tamper_request: Optional[Callable[[bytes], bytes]] = None
        self.sent = 0

    def request(self, frame: bytes) -> bytes:
        if not self.online:
            raise TransportError(f"{self.name} is unreachable")
        self.sent += 1
        if self.tamper_request:
            frame = self.tamper_request(frame)
        reply = self.node.handle(frame)
        return self.tamper(reply) if self.tamper else reply


def _recv_exact(sock: socket.socket, n: int) -> bytes:
    buf = bytearray()
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            break
        buf += chunk
    return bytes(buf)


def read_frame(sock: socket.socket) -> Optional[bytes]:
    """One whole frame from ``sock``, or None on clean EOF before a header."""
    header = _recv_exact(sock, HEADER_BYTES)
    if not header:
        return None
    length, _ = parse_header(header)
    payload = _recv_exact(sock, length)
    if len(payload) != length:
        raise MalformedFrame("connection closed mid-frame")
    return header + payload


class TcpLink:
    """Blocking client: one connection per request, retried on connect failure."""

    def __init__(self, address: str, timeout: float = 5.0, retries: int = 2):
        self.address = address
        self.host, self.port = parse_address(address)
        self.timeout = timeout
        self.retries = retries

    def request(self, frame: bytes) -> bytes:
        last: Exception | None = None
        for _ in range(self.retries + 1):
            try:
                sock = socket.create_connection((self.host, self.port), timeout=self.timeout)
            except OSError as exc:
                last = exc
                continue
            try:
                with sock:
                    sock.sendall(frame)
                    reply = read_frame(sock)
            except (OSError, MalformedFrame) as exc:
                raise TransportError(f"{self.address}: {exc}") from exc
            if reply is None:
                raise TransportError(f"{self.address}: connection closed without reply")
            return reply
        raise TransportError(f"{self.address}: {last}")


class _Handler(socketserver.BaseRequestHandler):
    def handle(self) -> None:
        node: FrameHandler = self.server.node  # type: ignore[attr-defined]
        while True:
            try:
                frame = read_frame(self.request)
            except MalformedFrame as exc:
                log.warning("dropping connection from %s: %s", self.client_address, exc)
                return
            except OSError:
                return
            if frame is None:
                return
            try:
                self.request.sendall(node.handle(frame))
            except OSError:
                return


class FrameServer(socketserver.ThreadingTCPServer):
    """Serves a node's ``handle`` over TCP, one thread per connection."""

    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, node: FrameHandler, address: str):
        self.node = node
        super().__init__(parse_address(address), _Handler)
        self._thread: threading.Thread | None = None

    @property
    def address(self) -> str:
        host, port = self.server_address[:2]
        return f"{host}:{port}"

    def start(self) -> "FrameServer":
        self._thread = threading.Thread(target=self.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self.shutdown()
        self.server_close()
        if self._thread:
            self._thread.join()
