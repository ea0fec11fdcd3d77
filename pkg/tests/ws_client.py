"""Minimal blocking WebSocket client for exercising the telemetry server.

Implements just enough of the protocol for tests: the upgrade handshake,
masked text frames out, server frames in.
"""

from __future__ import annotations

import base64
import json
import socket
import struct

_MASK = b"\x12\x34\x56\x78"


class WsClient:
    def __init__(self, host: str, port: int, timeout: float = 5.0):
        self.sock = socket.create_connection((host, port), timeout=timeout)
        key = base64.b64encode(b"0123456789abcdef").decode("ascii")
        request = (
            f"GET / HTTP/1.1\r\nHost: {host}:{port}\r\n"
            "Upgrade: websocket\r\nConnection: Upgrade\r\n"
            f"Sec-WebSocket-Key: {key}\r\nSec-WebSocket-Version: 13\r\n\r\n"
        )
        self.sock.sendall(request.encode("ascii"))
        response = b""
        while b"\r\n\r\n" not in response:
            chunk = self.sock.recv(4096)
            if not chunk:
                raise ConnectionError("server closed during handshake")
            response += chunk
        status = response.split(b"\r\n", 1)[0]
        if b"101" not in status:
            raise ConnectionError(f"handshake rejected: {status!r}")

    def send_json(self, obj: dict) -> None:
        payload = json.dumps(obj, separators=(",", ":")).encode("utf-8")
        masked = bytes(b ^ _MASK[i % 4] for i, b in enumerate(payload))
        n = len(payload)
        if n < 126:
            head = bytes([0x81, 0x80 | n])
        elif n < 1 << 16:
            head = bytes([0x81, 0x80 | 126]) + struct.pack(">H", n)
        else:
            head = bytes([0x81, 0x80 | 127]) + struct.pack(">Q", n)
        self.sock.sendall(head + _MASK + masked)

    def _read_exact(self, n: int) -> bytes:
        buf = b""
        while len(buf) < n:
            chunk = self.sock.recv(n - len(buf))
            if not chunk:
                raise ConnectionError("server closed mid-frame")
            buf += chunk
        return buf

    def recv_frame(self) -> tuple[int, bytes]:
        head = self._read_exact(2)
        opcode = head[0] & 0x0F
        length = head[1] & 0x7F
        if length == 126:
            length = struct.unpack(">H", self._read_exact(2))[0]
        elif length == 127:
            length = struct.unpack(">Q", self._read_exact(8))[0]
        payload = self._read_exact(length) if length else b""
        return opcode, payload

    def send_ping(self, payload: bytes = b"hi") -> None:
        masked = bytes(b ^ _MASK[i % 4] for i, b in enumerate(payload))
        self.sock.sendall(bytes([0x89, 0x80 | len(payload)]) + _MASK + masked)

    def recv_json(self) -> dict:
        """Next text frame as parsed JSON; skips control frames."""
        while True:
            opcode, payload = self.recv_frame()
            if opcode == 0x1:
                return json.loads(payload.decode("utf-8"))
            if opcode == 0x8:
                raise ConnectionError("server sent close")
            # ping/pong: ignore

    def recv_until(self, predicate, limit: int = 200) -> dict:
        """Read frames until one satisfies the predicate."""
        for _ in range(limit):
            obj = self.recv_json()
            if predicate(obj):
                return obj
        raise AssertionError(f"no matching frame within {limit} messages")

    def close(self) -> None:
        try:
            self.sock.sendall(bytes([0x88, 0x80]) + _MASK)
        except OSError:
            pass
        self.sock.close()
