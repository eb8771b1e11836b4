"""Network bridging: expose a bus over TCP lines and WebSocket frames.

A bridge link is symmetric after the handshake. Each side opens with a
hello carrying the protocol version and the sha256 of its topic
registry; any disagreement earns a refusal and the connection ends
before a single envelope moves. Matching peers then stream envelopes
both ways: everything published locally goes out (via a bus tap, in
sequence order), everything received is injected into the local bus
with its original seq and stamp.

Forwarding is single hop. Injected traffic is not re-offered to taps,
so chaining bridges deliberately does not relay; it also means two
buses bridged to each other cannot loop.

TCP carries newline-delimited JSON; WebSocket carries one JSON text
frame per message. The default ports are 7401 (TCP) and 7402 (WS);
port 0 binds an ephemeral port, reported on the server handle.
"""

from __future__ import annotations

import json
import logging
import socket
import threading
from collections import deque
from typing import Deque, Optional

from websockets.sync.server import serve as ws_serve

from .bus import Bus
from .wire import (
    Envelope,
    PROTOCOL_VERSION,
    WireFormatError,
    canonical_dumps,
    decode_control,
    decode_line,
    make_hello,
    make_refused,
)

DEFAULT_TCP_PORT = 7401
DEFAULT_WS_PORT = 7402
HANDSHAKE_TIMEOUT = 10.0
# Outbound buffer per connection; a stalled peer loses oldest first,
# same policy as local subscriptions but sized for network jitter.
SEND_QUEUE_CAPACITY = 1024
# How long close() lets the writer flush queued lines before cutting
# the socket; burst publishers rely on this to not lose their tail.
CLOSE_DRAIN_TIMEOUT_S = 5.0

log = logging.getLogger(__name__)


class BridgeError(RuntimeError):
    """Bridge link could not be established or broke during handshake."""


class VersionMismatch(BridgeError):
    """Peer speaks a different protocol version."""


class RegistryMismatch(BridgeError):
    """Peer's topic registry differs; traffic would be misinterpreted."""


def _refusal_error(reason: str) -> BridgeError:
    if reason.startswith("version"):
        return VersionMismatch(reason)
    if reason.startswith("registry"):
        return RegistryMismatch(reason)
    return BridgeError(reason)


def _check_peer_hello(obj: dict, registry_hash: str) -> Optional[str]:
    """Refusal reason if the peer's hello is unacceptable, else None."""
    if obj.get("control") != "hello":
        return f"expected hello, got {obj.get('control')!r}"
    if obj.get("version") != PROTOCOL_VERSION:
        return f"version mismatch: want {PROTOCOL_VERSION}, got {obj.get('version')!r}"
    if obj.get("registry") != registry_hash:
        return "registry mismatch: topic tables differ"
    return None


class _Link:
    """One established connection: an outbound queue plus a writer thread."""

    def __init__(self, bus: Bus, send_text, name: str):
        self._bus = bus
        self._send_text = send_text
        self.name = name
        self._queue: Deque[str] = deque()
        self._cond = threading.Condition()
        self._closed = False
        self._writer = threading.Thread(
            target=self._write_loop, name=f"bridge-writer-{name}", daemon=True
        )

    def start(self) -> None:
        self._bus.add_tap(self._offer)
        self._writer.start()

    def _offer(self, envelope: Envelope) -> None:
        line = envelope.encode()
        with self._cond:
            if self._closed:
                return
            if len(self._queue) >= SEND_QUEUE_CAPACITY:
                self._queue.popleft()
            self._queue.append(line)
            self._cond.notify()

    def _write_loop(self) -> None:
        while True:
            with self._cond:
                while not self._queue and not self._closed:
                    self._cond.wait()
                if self._closed and not self._queue:
                    return
                line = self._queue.popleft()
            try:
                self._send_text(line)
            except Exception:
                self.close()
                return

    def handle_incoming(self, raw) -> None:
        """One wire line from the peer into the local bus."""
        message = decode_line(raw)
        if isinstance(message, Envelope):
            self._bus._deliver_remote(message)
        elif message.get("control") == "refused":
            raise BridgeError(f"peer refused mid-session: {message.get('reason')}")
        # a stray hello after handshake is ignored

    def close(self) -> None:
        self._bus.remove_tap(self._offer)
        with self._cond:
            self._closed = True
            self._cond.notify_all()

    def drain(self, timeout: float) -> None:
        """Wait for the writer to flush what was queued before close."""
        if self._writer.is_alive():
            self._writer.join(timeout)

    @property
    def closed(self) -> bool:
        return self._closed


# -- TCP -------------------------------------------------------------------


def _tcp_send_line(sock: socket.socket, text: str) -> None:
    sock.sendall(text.encode() + b"\n")


def _tcp_handshake_server(sock: socket.socket, reader, registry_hash: str) -> bool:
    """Server side: read the client's hello, answer hello or refused."""
    sock.settimeout(HANDSHAKE_TIMEOUT)
    line = reader.readline()
    if not line:
        return False
    try:
        obj = decode_control(_parse_control(line))
    except WireFormatError as exc:
        _tcp_send_line(sock, canonical_dumps(make_refused(f"bad hello: {exc}")))
        return False
    reason = _check_peer_hello(obj, registry_hash)
    if reason is not None:
        _tcp_send_line(sock, canonical_dumps(make_refused(reason)))
        return False
    _tcp_send_line(sock, canonical_dumps(make_hello(registry_hash)))
    sock.settimeout(None)
    return True


def _parse_control(line: str) -> dict:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise WireFormatError(f"not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise WireFormatError("handshake line must be a JSON object")
    return obj


class BridgeServer:
    """Listens on TCP and/or WebSocket and links every peer to the bus."""

    def __init__(
        self,
        bus: Bus,
        host: str = "127.0.0.1",
        tcp_port: Optional[int] = DEFAULT_TCP_PORT,
        ws_port: Optional[int] = DEFAULT_WS_PORT,
    ):
        self.bus = bus
        self.host = host
        self._registry_hash = bus.registry.hash()
        self._links: list[_Link] = []
        self._links_lock = threading.Lock()
        self._closed = False
        self._threads: list[threading.Thread] = []

        self.tcp_port: Optional[int] = None
        self._tcp_sock: Optional[socket.socket] = None
        if tcp_port is not None:
            self._tcp_sock = socket.create_server((host, tcp_port))
            self.tcp_port = self._tcp_sock.getsockname()[1]
            t = threading.Thread(
                target=self._accept_loop, name="bridge-tcp-accept", daemon=True
            )
            self._threads.append(t)
            t.start()

        self.ws_port: Optional[int] = None
        self._ws_server = None
        if ws_port is not None:
            ws_sock = socket.create_server((host, ws_port))
            self.ws_port = ws_sock.getsockname()[1]
            self._ws_server = ws_serve(self._ws_handler, sock=ws_sock)
            t = threading.Thread(
                target=self._ws_server.serve_forever,
                name="bridge-ws-serve",
                daemon=True,
            )
            self._threads.append(t)
            t.start()

    # TCP side

    def _accept_loop(self) -> None:
        assert self._tcp_sock is not None
        while not self._closed:
            try:
                conn, addr = self._tcp_sock.accept()
            except OSError:
                return  # listener closed
            t = threading.Thread(
                target=self._tcp_handler,
                args=(conn, addr),
                name=f"bridge-tcp-{addr[1]}",
                daemon=True,
            )
            t.start()

    def _tcp_handler(self, conn: socket.socket, addr) -> None:
        link = None
        try:
            reader = conn.makefile("r", encoding="utf-8", newline="\n")
            if not _tcp_handshake_server(conn, reader, self._registry_hash):
                return
            link = _Link(self.bus, lambda text: _tcp_send_line(conn, text), f"tcp:{addr[1]}")
            self._register(link)
            link.start()
            for raw in reader:
                link.handle_incoming(raw)
        except (OSError, WireFormatError, BridgeError) as exc:
            log.debug("tcp link %s ended: %s", addr, exc)
        finally:
            if link is not None:
                self._unregister(link)
            try:
                conn.close()
            except OSError:
                pass

    # WebSocket side

    def _ws_handler(self, websocket) -> None:
        link = None
        try:
            raw = websocket.recv(timeout=HANDSHAKE_TIMEOUT)
            try:
                obj = decode_control(_parse_control(raw))
                reason = _check_peer_hello(obj, self._registry_hash)
            except WireFormatError as exc:
                reason = f"bad hello: {exc}"
            if reason is not None:
                websocket.send(canonical_dumps(make_refused(reason)))
                return
            websocket.send(canonical_dumps(make_hello(self._registry_hash)))
            link = _Link(self.bus, websocket.send, "ws")
            self._register(link)
            link.start()
            for raw in websocket:
                link.handle_incoming(raw)
        except (OSError, WireFormatError, BridgeError, TimeoutError) as exc:
            log.debug("ws link ended: %s", exc)
        except Exception as exc:  # websockets.ConnectionClosed and friends
            log.debug("ws link closed: %s", exc)
        finally:
            if link is not None:
                self._unregister(link)

    def _register(self, link: _Link) -> None:
        with self._links_lock:
            self._links.append(link)

    def _unregister(self, link: _Link) -> None:
        link.close()
        with self._links_lock:
            if link in self._links:
                self._links.remove(link)

    @property
    def link_count(self) -> int:
        with self._links_lock:
            return len(self._links)

    def close(self) -> None:
        self._closed = True
        if self._tcp_sock is not None:
            try:
                self._tcp_sock.close()
            except OSError:
                pass
        if self._ws_server is not None:
            self._ws_server.shutdown()
        with self._links_lock:
            links = list(self._links)
        for link in links:
            link.close()

    def __enter__(self) -> "BridgeServer":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def serve_bridge(
    bus: Bus,
    host: str = "127.0.0.1",
    tcp_port: Optional[int] = DEFAULT_TCP_PORT,
    ws_port: Optional[int] = DEFAULT_WS_PORT,
) -> BridgeServer:
    """Start listeners and return the running server handle."""
    return BridgeServer(bus, host=host, tcp_port=tcp_port, ws_port=ws_port)


class BridgeConnection:
    """Client end of a TCP bridge link."""

    def __init__(self, bus: Bus, host: str, port: int, timeout: float = HANDSHAKE_TIMEOUT):
        self.bus = bus
        registry_hash = bus.registry.hash()
        self._sock = socket.create_connection((host, port), timeout=timeout)
        try:
            self._reader = self._sock.makefile("r", encoding="utf-8", newline="\n")
            _tcp_send_line(self._sock, canonical_dumps(make_hello(registry_hash)))
            line = self._reader.readline()
            if not line:
                raise BridgeError("peer closed during handshake")
            obj = decode_control(_parse_control(line))
            if obj.get("control") == "refused":
                raise _refusal_error(obj.get("reason", ""))
            reason = _check_peer_hello(obj, registry_hash)
            if reason is not None:
                _tcp_send_line(self._sock, canonical_dumps(make_refused(reason)))
                raise _refusal_error(reason)
        except BaseException:
            self._sock.close()
            raise
        self._sock.settimeout(None)
        self._link = _Link(
            bus, lambda text: _tcp_send_line(self._sock, text), f"tcp-client:{port}"
        )
        self._link.start()
        self._reader_thread = threading.Thread(
            target=self._read_loop, name="bridge-client-reader", daemon=True
        )
        self._reader_thread.start()

    def _read_loop(self) -> None:
        try:
            for raw in self._reader:
                self._link.handle_incoming(raw)
        except (OSError, WireFormatError, BridgeError, ValueError) as exc:
            log.debug("client link ended: %s", exc)
        finally:
            self._link.close()

    @property
    def closed(self) -> bool:
        return self._link.closed

    def close(self) -> None:
        # Let queued publishes reach the wire before the socket dies;
        # a stuck peer is cut off after the drain timeout.
        self._link.close()
        self._link.drain(CLOSE_DRAIN_TIMEOUT_S)
        try:
            self._sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self._sock.close()

    def __enter__(self) -> "BridgeConnection":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def connect_bridge(
    bus: Bus, host: str = "127.0.0.1", port: int = DEFAULT_TCP_PORT,
    timeout: float = HANDSHAKE_TIMEOUT,
) -> BridgeConnection:
    """Dial another bridge over TCP and link the two buses."""
    return BridgeConnection(bus, host, port, timeout=timeout)
