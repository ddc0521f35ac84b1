"""Sinks the agent can forward records to."""

from __future__ import annotations

import socket
from datetime import timedelta

from .server import handle_line
from .store import Store
from .wire import serialize


def parse_address(text: str) -> tuple[str, int]:
    host, sep, port = text.rpartition(":")
    if not sep or not host:
        raise ValueError(f"address {text!r} must be host:port")
    return host, int(port)


class TcpSink:
    """Sends each record over a persistent connection and waits for the reply.

    A lost connection is reopened on the next send; failures surface as
    ``OSError`` so the uplink treats them as an unreachable sink.
    """

    def __init__(self, address, timeout: float = 5.0, latency: timedelta = timedelta(0)):
        self.address = parse_address(address) if isinstance(address, str) else tuple(address)
        self.timeout = timeout
        self.latency = latency
        self._sock = None
        self._rfile = None

    def _connect(self):
        self._sock = socket.create_connection(self.address, timeout=self.timeout)
        self._rfile = self._sock.makefile("rb")

    def send(self, record) -> str:
        if self._sock is None:
            self._connect()
        try:
            self._sock.sendall(serialize(record))
            reply = self._rfile.readline()
        except OSError:
            self.close()
            raise
        if not reply.endswith(b"\n"):
            self.close()
            raise ConnectionError("connection closed before reply")
        return reply.decode().strip()

    def close(self):
        if self._rfile is not None:
            self._rfile.close()
        if self._sock is not None:
            self._sock.close()
        self._sock = self._rfile = None


class StoreSink:
    """In-process sink: same request path as the TCP server, no socket."""

    def __init__(self, store: Store, latency: timedelta = timedelta(0)):
        self.store = store
        self.latency = latency

    def send(self, record) -> str:
        return handle_line(self.store, serialize(record)).decode().strip()
