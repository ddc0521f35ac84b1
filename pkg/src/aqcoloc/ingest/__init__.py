from .client import StoreSink, TcpSink, parse_address
from .server import IngestServer, handle_line
from .store import ACCEPTED, DUPLICATE, Store, StoreError, ingest, query_range
from .wire import SCHEMA_VERSION, WireError, WireRecord, parse_record, serialize

__all__ = [
    "ACCEPTED", "DUPLICATE", "IngestServer", "SCHEMA_VERSION", "Store", "StoreError",
    "StoreSink", "TcpSink", "WireError", "WireRecord", "handle_line", "ingest",
    "parse_address", "parse_record", "query_range", "serialize",
]
