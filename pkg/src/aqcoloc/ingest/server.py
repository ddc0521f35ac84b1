"""Threaded TCP front end for the store.

Each connection carries newline-terminated JSON records; each complete
line gets one reply line. A partial line left when the peer closes is
discarded.
"""

from __future__ import annotations

import logging
import socketserver
import threading

from .store import ACCEPTED, Store, StoreError
from .wire import E_STORAGE, WireError, parse_record

log = logging.getLogger(__name__)

MAX_LINE = 64 * 1024


def handle_line(store: Store, line: bytes) -> bytes:
    try:
        record = parse_record(line)
        outcome = store.ingest(record)
    except WireError as exc:
        return f"err:{exc.code}\n".encode()
    except StoreError as exc:
        log.error("storage failure: %s", exc)
        return f"err:{E_STORAGE}\n".encode()
    return b"ok\n" if outcome == ACCEPTED else b"dup\n"


class _Handler(socketserver.StreamRequestHandler):
    def handle(self):
        store = self.server.store
        while True:
            line = self.rfile.readline(MAX_LINE + 1)
            if not line:
                return
            if not line.endswith(b"\n"):
                if len(line) > MAX_LINE:
                    self.wfile.write(b"err:syntax\n")
                # connection closed mid-line
                return
            if not line.strip():
                continue
            self.wfile.write(handle_line(store, line))
            self.wfile.flush()


class IngestServer(socketserver.ThreadingTCPServer):
    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, address, store: Store):
        self.store = store
        super().__init__(address, _Handler)

    @property
    def address(self) -> tuple[str, int]:
        return self.server_address[:2]

    def start_background(self) -> threading.Thread:
        t = threading.Thread(target=self.serve_forever, name="ingest-server", daemon=True)
        t.start()
        return t
