"""Archive file format: a fixed header followed by self-delimiting batches.

Header (little-endian, 39 bytes)::

    magic "FLTPLANE" | version u16 | precision u8 | chunk_n u32 |
    batch_values u64 | total_values u64 | batch_count u64

Batch::

    chunk_count u32 | chunk_count x size u32 | concatenated chunk images
"""

from __future__ import annotations

import struct
from concurrent.futures import Executor
from dataclasses import dataclass

import numpy as np

from .chunkcodec import (
    OK,
    CorruptChunkError,
    chunk_size_bound,
    compress_range_kernel,
    decompress_range_kernel,
    error_message,
)
from .numeric import DOUBLE, Precision
from .transform import DEFAULT_CHUNK_N, check_chunk_n

MAGIC = b"FLTPLANE"
VERSION = 1
DEFAULT_BATCH_VALUES = DEFAULT_CHUNK_N * 1024 * 4

_HEADER = struct.Struct("<8sHBIQQQ")
HEADER_BYTES = _HEADER.size
_U32 = struct.Struct("<I")

# below this many chunks a batch is encoded in one job
_MIN_CHUNKS_PER_JOB = 8


class CorruptArchiveError(ValueError):
    pass


class PrecisionMismatchError(CorruptArchiveError):
    pass


@dataclass(frozen=True)
class ArchiveHeader:
    precision: Precision = DOUBLE
    chunk_n: int = DEFAULT_CHUNK_N
    batch_values: int = DEFAULT_BATCH_VALUES
    total_values: int = 0
    batch_count: int = 0
    version: int = VERSION

    def pack(self) -> bytes:
        return _HEADER.pack(
            MAGIC,
            self.version,
            self.precision.code,
            self.chunk_n,
            self.batch_values,
            self.total_values,
            self.batch_count,
        )

    @classmethod
    def unpack(cls, data) -> "ArchiveHeader":
        if len(data) < HEADER_BYTES:
            raise CorruptArchiveError("file is shorter than the archive header")
        magic, version, prec, chunk_n, batch_values, total, count = _HEADER.unpack_from(data, 0)
        if magic != MAGIC:
            raise CorruptArchiveError(f"bad magic {magic!r}")
        if version != VERSION:
            raise CorruptArchiveError(f"unsupported archive version {version}")
        try:
            precision = Precision.from_code(prec)
        except ValueError as exc:
            raise CorruptArchiveError(str(exc)) from None
        if chunk_n < 65 or (chunk_n - 1) % 64:
            raise CorruptArchiveError(f"chunk_n {chunk_n} is not 1 mod 64")
        if batch_values == 0 or batch_values % chunk_n:
            raise CorruptArchiveError(f"batch_values {batch_values} is not a multiple of chunk_n")
        if count != -(-total // batch_values):
            raise CorruptArchiveError(f"{count} batches cannot hold {total} values")
        return cls(precision, chunk_n, batch_values, total, count, version)


def offsets_from_sizes(sizes) -> np.ndarray:
    """Exclusive prefix sum: out[0] = 0, out[i] = out[i-1] + sizes[i-1]."""
    sizes = np.asarray(sizes, dtype=np.uint64)
    if sizes.size == 0:
        return np.zeros(0, dtype=np.uint64)
    if int(sizes.max()) * sizes.size >= 1 << 64:
        if sum(int(s) for s in sizes) >= 1 << 64:
            raise OverflowError("total compressed size exceeds 2**64 - 1")
    out = np.empty_like(sizes)
    out[0] = 0
    np.cumsum(sizes[:-1], out=out[1:])
    return out


@dataclass
class BatchArchive:
    sizes: np.ndarray  # uint32, one per chunk
    payload: memoryview

    @property
    def offsets(self) -> np.ndarray:
        return offsets_from_sizes(self.sizes)

    @property
    def nbytes(self) -> int:
        return 4 + 4 * len(self.sizes) + len(self.payload)

    def chunk(self, i: int) -> bytes:
        start = int(self.offsets[i])
        return bytes(self.payload[start:start + int(self.sizes[i])])


def write_batch(chunks) -> bytes:
    """Serialize a sequence of chunk images into one batch."""
    chunks = [bytes(c) for c in chunks]
    sizes = np.array([len(c) for c in chunks], dtype="<u4")
    return _U32.pack(len(chunks)) + sizes.tobytes() + b"".join(chunks)


def read_batch(data, pos: int = 0) -> tuple[BatchArchive, int]:
    """Parse the batch starting at ``pos``; returns it and the position after it."""
    mv = memoryview(data).cast("B")
    if pos + 4 > len(mv):
        raise CorruptArchiveError("batch header is truncated")
    (count,) = _U32.unpack_from(mv, pos)
    head_end = pos + 4 + 4 * count
    if head_end > len(mv):
        raise CorruptArchiveError("chunk size array runs past the end of the data")
    sizes = np.frombuffer(mv[pos + 4:head_end], dtype="<u4").astype(np.uint32)
    total = int(sizes.sum(dtype=np.uint64))
    if head_end + total > len(mv):
        raise CorruptArchiveError(
            f"chunk sizes sum to {total} bytes but only {len(mv) - head_end} remain"
        )
    return BatchArchive(sizes, mv[head_end:head_end + total]), head_end + total


def _split(count: int, parts: int) -> list[tuple[int, int]]:
    parts = max(1, min(parts, count // _MIN_CHUNKS_PER_JOB or 1))
    edges = [count * i // parts for i in range(parts + 1)]
    return [(a, b) for a, b in zip(edges, edges[1:]) if b > a]


def batch_bound(chunks: int, n: int = DEFAULT_CHUNK_N, precision: Precision = DOUBLE) -> int:
    return 4 + 4 * chunks + chunks * chunk_size_bound(n, precision)


def _run(pool: Executor | None, fn, args_list):
    if pool is None or len(args_list) == 1:
        return [fn(*args) for args in args_list]
    futures = [pool.submit(fn, *args) for args in args_list]
    return [f.result() for f in futures]


def encode_batch(
    values,
    n: int = DEFAULT_CHUNK_N,
    precision: Precision = DOUBLE,
    pool: Executor | None = None,
    out: np.ndarray | None = None,
    jobs: int = 1,
) -> np.ndarray:
    """Compress ``values`` (a whole number of chunks) into a batch image.

    Chunk ranges are encoded in parallel into worst-case sized regions of
    ``out``; their sizes are then turned into offsets and the regions are
    compacted behind the size array. Returns the used prefix of ``out``.
    """
    n = check_chunk_n(n)
    vals = np.ascontiguousarray(values, dtype=precision.float_dtype)
    if vals.shape[0] % n:
        raise ValueError(f"{vals.shape[0]} values is not a whole number of {n}-value chunks")
    count = vals.shape[0] // n
    bound = chunk_size_bound(n, precision)
    head = 4 + 4 * count
    if out is None:
        out = np.empty(batch_bound(count, n, precision), dtype=np.uint8)
    elif out.shape[0] < batch_bound(count, n, precision):
        raise ValueError("output buffer is smaller than the batch bound")
    bits = vals.view(precision.uint_dtype)
    sizes = np.zeros(count, dtype=np.uint32)
    ranges = _split(count, jobs)

    def job(c0, c1):
        start = head + c0 * bound
        return compress_range_kernel(vals, bits, n, precision.is_single, c0, c1, out, start, sizes)

    ends = _run(pool, job, ranges)
    offsets = offsets_from_sizes(sizes)
    for (c0, _), end in zip(ranges, ends):
        src = head + c0 * bound
        dst = head + int(offsets[c0])
        if dst != src:
            out[dst:dst + end - src] = out[src:end]
    out[0:4] = np.frombuffer(_U32.pack(count), dtype=np.uint8)
    out[4:head] = sizes.astype("<u4").view(np.uint8)
    total = int(offsets[-1]) + int(sizes[-1]) if count else 0
    return out[:head + total]


def decode_batch(
    batch: BatchArchive,
    n: int = DEFAULT_CHUNK_N,
    precision: Precision = DOUBLE,
    pool: Executor | None = None,
    out: np.ndarray | None = None,
    jobs: int = 1,
) -> np.ndarray:
    """Decode every chunk of ``batch`` into ``out`` (len(sizes) * n values)."""
    n = check_chunk_n(n)
    count = len(batch.sizes)
    if out is None:
        out = np.empty(count * n, dtype=precision.float_dtype)
    payload = np.frombuffer(batch.payload, dtype=np.uint8)
    offsets = batch.offsets.astype(np.int64)
    sizes = batch.sizes.astype(np.int64)
    out_u = out.view(precision.uint_dtype)

    def job(c0, c1):
        return decompress_range_kernel(
            payload, offsets, sizes, n, precision.is_single, c0, c1, out, out_u
        )

    for status, chunk in _run(pool, job, _split(count, jobs)):
        if status != OK:
            raise CorruptChunkError(f"chunk {chunk}: {error_message(status)}")
    return out


def iter_batches(data):
    """Yield (index, BatchArchive) for every batch of an archive buffer."""
    header = ArchiveHeader.unpack(data)
    pos = HEADER_BYTES
    for b in range(header.batch_count):
        try:
            batch, pos = read_batch(data, pos)
        except CorruptArchiveError as exc:
            raise CorruptArchiveError(f"batch {b}: {exc}") from None
        yield b, batch
    if pos != len(memoryview(data).cast("B")):
        raise CorruptArchiveError("trailing bytes after the last batch")


def read_archive(data) -> tuple[ArchiveHeader, list[BatchArchive]]:
    header = ArchiveHeader.unpack(data)
    batches = [batch for _, batch in iter_batches(data)]
    for b, batch in enumerate(batches):
        expected = min(header.batch_values, header.total_values - b * header.batch_values)
        if len(batch.sizes) != -(-expected // header.chunk_n):
            raise CorruptArchiveError(
                f"batch {b}: {len(batch.sizes)} chunks cannot hold {expected} values"
            )
    return header, batches
