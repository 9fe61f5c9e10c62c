"""Publishing sinks and the bulk-indexing wire format.

A sink accepts one publish action in two prepared representations and
returns the exact byte count it shipped, which feeds cost accounting:

    publish(line, documents) -> bytes written

FileSink appends the newline-delimited action record; HttpBulkSink POSTs
the documents as bulk-API requests (action metadata line, then source
line, trailing newline) to an HTTP endpoint. A SpoolDirectory holds
serialized actions whenever a sink is unavailable so they can be
replayed later.
"""

from __future__ import annotations

import json
import urllib.error
import urllib.request
from pathlib import Path
from typing import Mapping, Protocol, Sequence

from vaeguard.errors import EmptyBatch, SinkUnavailable

Document = tuple[str, Mapping]

BULK_CONTENT_TYPE = "application/x-ndjson"


def encode_bulk_request(documents: Sequence[Document]) -> bytes:
    """Bulk wire format: one action line plus one source line per document."""
    if not documents:
        raise EmptyBatch("bulk request requires at least one document")
    lines: list[str] = []
    for index_name, source in documents:
        lines.append(json.dumps({"index": {"_index": index_name}}, separators=(",", ":")))
        lines.append(json.dumps(source, separators=(",", ":")))
    return ("\n".join(lines) + "\n").encode("utf-8")


class Sink(Protocol):
    def publish(self, line: bytes, documents: Sequence[Document]) -> int: ...

    def close(self) -> None: ...


class FileSink:
    """Append-only newline-delimited record sink."""

    def __init__(self, path):
        self.path = Path(path)
        self._handle = open(self.path, "ab")
        self.bytes_written = 0

    def publish(self, line: bytes, documents: Sequence[Document]) -> int:
        if self._handle.closed:
            raise SinkUnavailable(f"file sink {self.path} is closed")
        try:
            self._handle.write(line)
        except (OSError, ValueError) as exc:
            raise SinkUnavailable(f"file sink {self.path}: {exc}") from exc
        self.bytes_written += len(line)
        return len(line)

    def close(self) -> None:
        if not self._handle.closed:
            self._handle.flush()
            self._handle.close()


class HttpBulkSink:
    """POSTs bulk requests to `<endpoint>/_bulk`, batching documents."""

    def __init__(
        self,
        endpoint: str,
        batch_size: int = 500,
        headers: Mapping[str, str] | None = None,
        timeout: float = 10.0,
    ):
        if batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        self.endpoint = endpoint.rstrip("/")
        self.batch_size = batch_size
        self.headers = dict(headers or {})
        self.timeout = timeout
        self.bytes_written = 0

    def publish(self, line: bytes, documents: Sequence[Document]) -> int:
        total = 0
        for start in range(0, len(documents), self.batch_size):
            body = encode_bulk_request(documents[start : start + self.batch_size])
            request = urllib.request.Request(
                f"{self.endpoint}/_bulk",
                data=body,
                headers={"Content-Type": BULK_CONTENT_TYPE, **self.headers},
                method="POST",
            )
            try:
                with urllib.request.urlopen(request, timeout=self.timeout) as response:
                    response.read()
            except (urllib.error.URLError, OSError, TimeoutError) as exc:
                raise SinkUnavailable(f"bulk endpoint {self.endpoint}: {exc}") from exc
            total += len(body)
        self.bytes_written += total
        return total

    def close(self) -> None:
        pass


class SpoolDirectory:
    """Disk spool for actions that could not be published."""

    def __init__(self, path):
        self.path = Path(path)
        self.path.mkdir(parents=True, exist_ok=True)

    def _next_index(self) -> int:
        existing = [int(p.stem.split("-")[1]) for p in self.path.glob("action-*.ndjson")]
        return max(existing, default=-1) + 1

    def store(self, line: bytes) -> Path:
        target = self.path / f"action-{self._next_index():08d}.ndjson"
        target.write_bytes(line)
        return target

    def pending(self) -> list[Path]:
        return sorted(self.path.glob("action-*.ndjson"))

    def replay(self, sink: Sink, to_documents) -> int:
        """Re-publish spooled actions oldest-first; returns bytes shipped.

        `to_documents` maps a serialized action line back to its bulk
        documents. Files are removed as they succeed; the first failure
        propagates and leaves the remainder spooled.
        """
        total = 0
        for path in self.pending():
            line = path.read_bytes()
            total += sink.publish(line, to_documents(line))
            path.unlink()
        return total
