"""WebSocket telemetry server: reports stream out, control messages queue in.

The protocol needs nothing beyond RFC 6455 text frames carrying one JSON
object each, so the handshake and framing are implemented directly on
stdlib sockets.  The pipeline thread never blocks on a client: each client
gets a bounded outbound queue, and on overflow thumbnails are shed first,
then whole reports, with a ``dropped`` count attached to the next report
that does get through.
"""

from __future__ import annotations

import base64
import hashlib
import json
import socket
import struct
import threading
from collections import deque
from typing import Any

__all__ = ["TelemetryServer"]

_WS_GUID = b"258EAFA5-E914-47DA-95CA-C5AB0DC85B11"
_MAX_HEADER = 16 * 1024
_MAX_PAYLOAD = 1 << 20

_OP_TEXT = 0x1
_OP_CLOSE = 0x8
_OP_PING = 0x9
_OP_PONG = 0xA


def _accept_key(key: str) -> str:
    digest = hashlib.sha1(key.encode("ascii") + _WS_GUID).digest()
    return base64.b64encode(digest).decode("ascii")


def _encode_frame(opcode: int, payload: bytes) -> bytes:
    head = bytes([0x80 | opcode])
    n = len(payload)
    if n < 126:
        head += bytes([n])
    elif n < 1 << 16:
        head += bytes([126]) + struct.pack(">H", n)
    else:
        head += bytes([127]) + struct.pack(">Q", n)
    return head + payload


def _read_exact(conn: socket.socket, n: int) -> bytes | None:
    buf = b""
    while len(buf) < n:
        chunk = conn.recv(n - len(buf))
        if not chunk:
            return None
        buf += chunk
    return buf


def _read_frame(conn: socket.socket) -> tuple[int, bytes] | None:
    """One complete frame, or None on EOF/protocol violation."""
    head = _read_exact(conn, 2)
    if head is None:
        return None
    fin = head[0] & 0x80
    opcode = head[0] & 0x0F
    masked = head[1] & 0x80
    length = head[1] & 0x7F
    if not fin or not masked:
        # Fragmented or unmasked client frames are out of protocol here.
        return None
    if length == 126:
        ext = _read_exact(conn, 2)
        if ext is None:
            return None
        length = struct.unpack(">H", ext)[0]
    elif length == 127:
        ext = _read_exact(conn, 8)
        if ext is None:
            return None
        length = struct.unpack(">Q", ext)[0]
    if length > _MAX_PAYLOAD:
        return None
    mask = _read_exact(conn, 4)
    if mask is None:
        return None
    payload = _read_exact(conn, length) if length else b""
    if payload is None:
        return None
    unmasked = bytes(b ^ mask[i % 4] for i, b in enumerate(payload))
    return opcode, unmasked


class _Client:
    def __init__(self, conn: socket.socket, client_id: int, queue_limit: int):
        self.conn = conn
        self.id = client_id
        self.queue_limit = queue_limit
        self.queue: deque[dict] = deque()
        self.dropped = 0
        self.lock = threading.Lock()
        self.wakeup = threading.Event()
        self.send_lock = threading.Lock()
        self.closing = False

    def enqueue(self, obj: dict[str, Any]) -> None:
        """Pipeline-side push; sheds load instead of ever blocking."""
        entry = dict(obj)  # per-client copy so shedding cannot corrupt peers
        with self.lock:
            if len(self.queue) >= self.queue_limit:
                entry.pop("thumbnail", None)
                for queued in self.queue:
                    queued.pop("thumbnail", None)
            while len(self.queue) >= self.queue_limit:
                self._evict_oldest_report()
            self.queue.append(entry)
        self.wakeup.set()

    def _evict_oldest_report(self) -> None:
        """Reports are droppable; control replies are not, unless the queue
        somehow holds nothing else."""
        for i, queued in enumerate(self.queue):
            if queued.get("type") == "report":
                del self.queue[i]
                self.dropped += 1
                return
        self.queue.popleft()

    def pop(self) -> dict | None:
        with self.lock:
            if not self.queue:
                self.wakeup.clear()
                return None
            obj = self.queue.popleft()
            if self.dropped and obj.get("type") == "report":
                obj["dropped"] = self.dropped
                self.dropped = 0
            return obj

    def send_raw(self, data: bytes) -> None:
        with self.send_lock:
            self.conn.sendall(data)


class TelemetryServer:
    """Accepts any number of WebSocket clients; owns all its threads.

    The pipeline interacts through exactly three methods, none of which
    block: broadcast(), drain_controls(), reply().
    """

    def __init__(self, port: int, host: str = "127.0.0.1", queue_limit: int = 64):
        self._listener = socket.create_server((host, port))
        self.host = host
        self.port = self._listener.getsockname()[1]
        self._queue_limit = queue_limit
        self._clients: dict[int, _Client] = {}
        self._clients_lock = threading.Lock()
        self._controls: deque[tuple[int, dict]] = deque()
        self._controls_lock = threading.Lock()
        self._next_id = 0
        self._closing = False
        self._threads: list[threading.Thread] = []
        self._accept_thread = threading.Thread(target=self._accept_loop, daemon=True)
        self._accept_thread.start()

    # pipeline-facing side

    def broadcast(self, obj: dict[str, Any]) -> None:
        for client in self._snapshot_clients():
            client.enqueue(obj)

    def reply(self, client_id: int, obj: dict[str, Any]) -> None:
        with self._clients_lock:
            client = self._clients.get(client_id)
        if client is not None:
            client.enqueue(obj)

    def drain_controls(self) -> list[tuple[int, dict]]:
        with self._controls_lock:
            items = list(self._controls)
            self._controls.clear()
        return items

    def client_count(self) -> int:
        with self._clients_lock:
            return len(self._clients)

    def close(self) -> None:
        self._closing = True
        # shutdown() before close(): closing alone does not wake a thread
        # already blocked in accept()/recv() on this socket
        try:
            self._listener.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        try:
            self._listener.close()
        except OSError:
            pass
        for client in self._snapshot_clients():
            self._drop_client(client)
        self._accept_thread.join(timeout=2)
        for t in self._threads:
            t.join(timeout=2)

    # socket side

    def _snapshot_clients(self) -> list[_Client]:
        with self._clients_lock:
            return list(self._clients.values())

    def _accept_loop(self) -> None:
        while not self._closing:
            try:
                conn, _addr = self._listener.accept()
            except OSError:
                return
            try:
                if not self._handshake(conn):
                    conn.close()
                    continue
            except OSError:
                conn.close()
                continue
            with self._clients_lock:
                client = _Client(conn, self._next_id, self._queue_limit)
                self._next_id += 1
                self._clients[client.id] = client
            reader = threading.Thread(target=self._read_loop, args=(client,), daemon=True)
            writer = threading.Thread(target=self._write_loop, args=(client,), daemon=True)
            self._threads += [reader, writer]
            reader.start()
            writer.start()

    def _handshake(self, conn: socket.socket) -> bool:
        conn.settimeout(5.0)
        request = b""
        while b"\r\n\r\n" not in request:
            chunk = conn.recv(4096)
            if not chunk or len(request) > _MAX_HEADER:
                return False
            request += chunk
        head = request.split(b"\r\n\r\n", 1)[0].decode("latin-1")
        lines = head.split("\r\n")
        if not lines[0].startswith("GET "):
            return False
        headers = {}
        for line in lines[1:]:
            name, sep, value = line.partition(":")
            if sep:
                headers[name.strip().lower()] = value.strip()
        key = headers.get("sec-websocket-key")
        if headers.get("upgrade", "").lower() != "websocket" or not key:
            conn.sendall(b"HTTP/1.1 400 Bad Request\r\n\r\n")
            return False
        response = (
            "HTTP/1.1 101 Switching Protocols\r\n"
            "Upgrade: websocket\r\n"
            "Connection: Upgrade\r\n"
            f"Sec-WebSocket-Accept: {_accept_key(key)}\r\n\r\n"
        )
        conn.sendall(response.encode("ascii"))
        conn.settimeout(None)
        return True

    def _read_loop(self, client: _Client) -> None:
        while not self._closing and not client.closing:
            try:
                frame = _read_frame(client.conn)
            except OSError:
                break
            if frame is None:
                break
            opcode, payload = frame
            if opcode == _OP_CLOSE:
                try:
                    client.send_raw(_encode_frame(_OP_CLOSE, payload[:2]))
                except OSError:
                    pass
                break
            if opcode == _OP_PING:
                try:
                    client.send_raw(_encode_frame(_OP_PONG, payload))
                except OSError:
                    break
                continue
            if opcode != _OP_TEXT:
                continue
            try:
                obj = json.loads(payload.decode("utf-8"))
            except (UnicodeDecodeError, json.JSONDecodeError):
                client.enqueue({"type": "err", "key": None, "detail": "unparseable message"})
                continue
            if not isinstance(obj, dict):
                client.enqueue({"type": "err", "key": None, "detail": "expected a JSON object"})
                continue
            with self._controls_lock:
                self._controls.append((client.id, obj))
        self._drop_client(client)

    def _write_loop(self, client: _Client) -> None:
        while not client.closing:
            obj = client.pop()
            if obj is None:
                client.wakeup.wait(timeout=0.1)
                continue
            data = _encode_frame(_OP_TEXT, json.dumps(obj, separators=(",", ":")).encode("utf-8"))
            try:
                client.send_raw(data)
            except OSError:
                break
        self._drop_client(client)

    def _drop_client(self, client: _Client) -> None:
        client.closing = True
        client.wakeup.set()
        try:
            client.conn.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        try:
            client.conn.close()
        except OSError:
            pass
        with self._clients_lock:
            self._clients.pop(client.id, None)
