"""Multi-stream batch pipeline.

Compression follows an event-driven scheduler: each stream slot cycles
Idle -> MPend -> PPend -> Idle. Launching a batch queues load, compress and
size-report on the slot's stream; once the slot is the oldest one still waiting
for its size, it gets the next output offset and queues the payload copy.
Offsets are therefore handed out in launch order no matter which slot finishes
first. Streams are single-threaded executors (work on one stream runs in
order); the chunk-level compression fans out to a shared worker pool.

Decompression sizes are known up front, so every batch decodes straight into a
pre-allocated region of the output.
"""

from __future__ import annotations

import enum
import logging
import os
import threading
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Protocol

import numpy as np

from .container import (
    DEFAULT_BATCH_VALUES,
    HEADER_BYTES,
    ArchiveHeader,
    CorruptArchiveError,
    PrecisionMismatchError,
    batch_bound,
    decode_batch,
    encode_batch,
    iter_batches,
)
from .numeric import DOUBLE, Precision
from .transform import DEFAULT_CHUNK_N, check_chunk_n

log = logging.getLogger(__name__)

DEFAULT_STREAMS = 16

# delay hook: (slot index, stage name, batch sequence number) -> None
StageHook = Callable[[int, str, int], None]


def default_workers() -> int:
    env = os.environ.get("FALCON_WORKERS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


class SlotState(enum.Enum):
    IDLE = "Idle"
    MPEND = "MPend"
    PPEND = "PPend"


class ValueReader(Protocol):
    def read(self, count: int) -> np.ndarray | None: ...


class ArrayReader:
    def __init__(self, values, precision: Precision = DOUBLE):
        self.values = np.ascontiguousarray(values, dtype=precision.float_dtype).reshape(-1)
        self.pos = 0

    def read(self, count: int) -> np.ndarray | None:
        if self.pos >= self.values.shape[0]:
            return None
        out = self.values[self.pos:self.pos + count]
        self.pos += out.shape[0]
        return out


class RawFileReader:
    """Packed little-endian IEEE-754 values from a binary file."""

    def __init__(self, path, precision: Precision = DOUBLE):
        self.fh = open(path, "rb")
        self.dtype = precision.float_dtype.newbyteorder("<")
        self.itemsize = precision.bits // 8
        size = os.fstat(self.fh.fileno()).st_size
        if size % self.itemsize:
            self.fh.close()
            raise ValueError(f"{path}: {size} bytes is not a whole number of {precision.bits}-bit values")

    def read(self, count: int) -> np.ndarray | None:
        data = self.fh.read(count * self.itemsize)
        if not data:
            return None
        return np.frombuffer(data, dtype=self.dtype)

    def close(self) -> None:
        self.fh.close()


class MemorySink:
    """Output cache kept as disjoint segments keyed by offset."""

    def __init__(self):
        self._segments: dict[int, bytes] = {}

    def write_at(self, offset: int, data) -> None:
        self._segments[offset] = bytes(data)

    def getvalue(self) -> bytes:
        pos = 0
        parts = []
        for off in sorted(self._segments):
            if off != pos:
                raise RuntimeError(f"output cache has a gap at {pos}")
            parts.append(self._segments[off])
            pos += len(self._segments[off])
        return b"".join(parts)


class FileSink:
    def __init__(self, fd: int, base: int = 0):
        self.fd = fd
        self.base = base

    def write_at(self, offset: int, data) -> None:
        view = memoryview(data).cast("B")
        pos = self.base + offset
        while view:
            written = os.pwrite(self.fd, view, pos)
            view = view[written:]
            pos += written


@dataclass(frozen=True)
class LaunchRecord:
    seq: int
    slot: int
    offset: int
    size: int


@dataclass
class _Slot:
    index: int
    stream: ThreadPoolExecutor
    staged: np.ndarray
    out: np.ndarray
    state: SlotState = SlotState.IDLE
    seq: int = -1
    cs: int = 0
    image: np.ndarray | None = None
    error: BaseException | None = None
    size_event: threading.Event = field(default_factory=threading.Event)
    payload_event: threading.Event = field(default_factory=threading.Event)

    def pending_event(self) -> threading.Event:
        return self.size_event if self.state is SlotState.MPEND else self.payload_event


@dataclass
class CompressStats:
    values: int = 0
    batches: int = 0
    payload_bytes: int = 0
    trace: list[LaunchRecord] = field(default_factory=list)
    stalls: int = 0


class EventDrivenScheduler:
    def __init__(
        self,
        n_streams: int = DEFAULT_STREAMS,
        batch_values: int = DEFAULT_BATCH_VALUES,
        chunk_n: int = DEFAULT_CHUNK_N,
        precision: Precision = DOUBLE,
        workers: int | None = None,
        stage_hook: StageHook | None = None,
    ):
        if n_streams < 1:
            raise ValueError("need at least one stream")
        self.chunk_n = check_chunk_n(chunk_n)
        if batch_values <= 0 or batch_values % self.chunk_n:
            raise ValueError(f"batch_values {batch_values} is not a multiple of chunk_n {self.chunk_n}")
        self.n_streams = n_streams
        self.batch_values = batch_values
        self.precision = precision
        self.workers = workers or default_workers()
        self.stage_hook = stage_hook

    def _stage(self, slot: _Slot, name: str) -> None:
        if self.stage_hook is not None:
            self.stage_hook(slot.index, name, slot.seq)

    def _compress_phase(self, slot: _Slot, batch: np.ndarray, pool) -> None:
        try:
            self._stage(slot, "load")
            count = batch.shape[0]
            padded = -(-count // self.chunk_n) * self.chunk_n
            slot.staged[:count] = batch
            slot.staged[count:padded] = 0.0
            self._stage(slot, "compress")
            slot.image = encode_batch(
                slot.staged[:padded], self.chunk_n, self.precision, pool=pool, out=slot.out, jobs=self.workers
            )
            self._stage(slot, "size")
            slot.cs = slot.image.shape[0]
        except BaseException as exc:
            slot.error = exc
        finally:
            slot.size_event.set()

    def _payload_phase(self, slot: _Slot, sink, offset: int) -> None:
        try:
            self._stage(slot, "payload")
            sink.write_at(offset, slot.image)
        except BaseException as exc:
            slot.error = exc
        finally:
            slot.payload_event.set()

    def run(self, reader: ValueReader, sink) -> CompressStats:
        """Compress everything ``reader`` yields into ``sink`` (batch bytes only, no header)."""
        stats = CompressStats()
        chunks = self.batch_values // self.chunk_n
        with ThreadPoolExecutor(self.workers, thread_name_prefix="fp-worker") as pool:
            slots = [
                _Slot(
                    index=i,
                    stream=ThreadPoolExecutor(1, thread_name_prefix=f"fp-stream{i}"),
                    staged=np.empty(self.batch_values, dtype=self.precision.float_dtype),
                    out=np.empty(batch_bound(chunks, self.chunk_n, self.precision), dtype=np.uint8),
                )
                for i in range(self.n_streams)
            ]
            try:
                self._loop(reader, sink, slots, pool, stats)
            finally:
                for slot in slots:
                    slot.stream.shutdown(wait=True)
        return stats

    def _loop(self, reader, sink, slots, pool, stats: CompressStats) -> None:
        batch = reader.read(self.batch_values)
        awaiting_size: deque[_Slot] = deque()  # launch order; head is the "current" slot
        active = 0
        offset = 0
        failure: BaseException | None = None
        while (batch is not None and failure is None) or active > 0:
            progressed = False
            for slot in slots:
                if slot.state is SlotState.IDLE:
                    if batch is None or failure is not None:
                        continue
                    slot.seq = stats.batches
                    slot.error = None
                    slot.size_event.clear()
                    slot.payload_event.clear()
                    stats.batches += 1
                    stats.values += batch.shape[0]
                    slot.stream.submit(self._compress_phase, slot, batch, pool)
                    slot.state = SlotState.MPEND
                    awaiting_size.append(slot)
                    active += 1
                    progressed = True
                    batch = reader.read(self.batch_values)
                elif slot.state is SlotState.MPEND:
                    if awaiting_size[0] is slot and slot.size_event.is_set():
                        awaiting_size.popleft()
                        progressed = True
                        if slot.error is not None:
                            failure = failure or slot.error
                            active -= 1
                            slot.state = SlotState.IDLE
                            continue
                        stats.trace.append(LaunchRecord(slot.seq, slot.index, offset, slot.cs))
                        slot.stream.submit(self._payload_phase, slot, sink, offset)
                        offset += slot.cs
                        slot.state = SlotState.PPEND
                else:
                    if slot.payload_event.is_set():
                        if slot.error is not None:
                            failure = failure or slot.error
                        active -= 1
                        slot.state = SlotState.IDLE
                        progressed = True
            if not progressed and active > 0:
                # nothing moved in a full scan: block on the oldest in-flight slot
                oldest = min((s for s in slots if s.state is not SlotState.IDLE), key=lambda s: s.seq)
                stats.stalls += 1
                oldest.pending_event().wait()
        stats.payload_bytes = offset
        if failure is not None:
            raise failure


def _reader_for(source, precision: Precision) -> ValueReader:
    if hasattr(source, "read"):
        return source
    return ArrayReader(source, precision)


def compress_pipeline(
    source,
    n_streams: int = DEFAULT_STREAMS,
    batch_values: int = DEFAULT_BATCH_VALUES,
    workers: int | None = None,
    precision: Precision = DOUBLE,
    chunk_n: int = DEFAULT_CHUNK_N,
    stage_hook: StageHook | None = None,
) -> tuple[bytes, int]:
    """Compress an array or reader into a complete archive; returns (bytes, size)."""
    scheduler = EventDrivenScheduler(n_streams, batch_values, chunk_n, precision, workers, stage_hook)
    sink = MemorySink()
    result = scheduler.run(_reader_for(source, precision), sink)
    header = ArchiveHeader(precision, chunk_n, batch_values, result.values, result.batches)
    archive = header.pack() + sink.getvalue()
    return archive, len(archive)


def compress_to_file(
    source,
    path,
    n_streams: int = DEFAULT_STREAMS,
    batch_values: int = DEFAULT_BATCH_VALUES,
    workers: int | None = None,
    precision: Precision = DOUBLE,
    chunk_n: int = DEFAULT_CHUNK_N,
) -> tuple[ArchiveHeader, int]:
    """Stream-compress into ``path``, patching the header in once counts are known."""
    scheduler = EventDrivenScheduler(n_streams, batch_values, chunk_n, precision, workers)
    fd = os.open(path, os.O_WRONLY | os.O_CREAT | os.O_TRUNC, 0o644)
    try:
        result = scheduler.run(_reader_for(source, precision), FileSink(fd, HEADER_BYTES))
        header = ArchiveHeader(precision, chunk_n, batch_values, result.values, result.batches)
        os.pwrite(fd, header.pack(), 0)
    finally:
        os.close(fd)
    return header, HEADER_BYTES + result.payload_bytes


def decompress_pipeline(
    archive,
    n_streams: int = DEFAULT_STREAMS,
    workers: int | None = None,
    precision: Precision | None = None,
    stage_hook: StageHook | None = None,
) -> np.ndarray:
    """Decode a whole archive; ``precision``, if given, must match the header."""
    header = ArchiveHeader.unpack(archive)
    if precision is not None and precision is not header.precision:
        raise PrecisionMismatchError(
            f"archive holds {header.precision.bits}-bit values, {precision.bits}-bit requested"
        )
    n = header.chunk_n
    workers = workers or default_workers()
    batches = list(iter_batches(archive))
    out = np.empty(-(-header.total_values // n) * n, dtype=header.precision.float_dtype)

    def run_batch(b, batch):
        start = b * header.batch_values
        expected = min(header.batch_values, header.total_values - start)
        chunks = -(-expected // n)
        if len(batch.sizes) != chunks:
            raise CorruptArchiveError(f"batch {b}: {len(batch.sizes)} chunks, expected {chunks}")
        if stage_hook:
            stage_hook(b % n_streams, "load", b)
        region = out[start:start + chunks * n]
        if stage_hook:
            stage_hook(b % n_streams, "decompress", b)
        try:
            decode_batch(batch, n, header.precision, pool=pool, out=region, jobs=workers)
        except ValueError as exc:
            raise CorruptArchiveError(f"batch {b}: {exc}") from exc
        if stage_hook:
            stage_hook(b % n_streams, "store", b)

    with ThreadPoolExecutor(workers, thread_name_prefix="fp-worker") as pool, ThreadPoolExecutor(
        n_streams, thread_name_prefix="fp-stream"
    ) as streams:
        futures = [streams.submit(run_batch, b, batch) for b, batch in batches]
        errors = [f.exception() for f in futures]
    for exc in errors:
        if exc is not None:
            raise exc
    return out[:header.total_values]
