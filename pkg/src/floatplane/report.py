"""Archive statistics and benchmark measurements, emitted as key=value lines."""

from __future__ import annotations

import time
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .container import ArchiveHeader, iter_batches
from .numeric import Precision
from .pipeline import compress_pipeline, decompress_pipeline


@dataclass
class ArchiveSummary:
    header: ArchiveHeader
    archive_bytes: int
    chunk_sizes: np.ndarray
    chunk_batch: np.ndarray
    case2: np.ndarray
    widths: np.ndarray
    dense_rows: int = 0
    sparse_rows: int = 0
    batch_stats: list[dict] = field(default_factory=list)

    def lines(self) -> list[tuple[str, object]]:
        h = self.header
        out: list[tuple[str, object]] = [
            ("archive_bytes", self.archive_bytes),
            ("version", h.version),
            ("precision", h.precision.bits),
            ("chunk_n", h.chunk_n),
            ("batch_values", h.batch_values),
            ("total_values", h.total_values),
            ("batch_count", h.batch_count),
            ("chunk_count", len(self.chunk_sizes)),
            ("case1_chunks", int((~self.case2).sum())),
            ("case2_chunks", int(self.case2.sum())),
            ("dense_rows", self.dense_rows),
            ("sparse_rows", self.sparse_rows),
        ]
        for w, c in sorted(Counter(self.widths.tolist()).items()):
            out.append((f"width_{w}", c))
        for b in self.batch_stats:
            i = b["batch"]
            for key in ("chunks", "bytes", "size_min", "size_mean", "size_max"):
                out.append((f"batch{i}_{key}", b[key]))
        return out


def _popcount(x: int) -> int:
    return bin(x).count("1")


def summarize_archive(data) -> ArchiveSummary:
    header = ArchiveHeader.unpack(data)
    sizes, batch_ids, case2, widths = [], [], [], []
    dense = sparse = 0
    stats = []
    sentinel = header.precision.sentinel
    for b, batch in iter_batches(data):
        payload = np.frombuffer(batch.payload, dtype=np.uint8)
        for off, size in zip(batch.offsets.tolist(), batch.sizes.tolist()):
            if size < 11:
                continue
            w = int(payload[off + 10])
            nf = (w + 7) // 8
            flags = int.from_bytes(payload[off + 11:off + 11 + nf].tobytes(), "big")
            d = _popcount(flags)
            dense += d
            sparse += w - d
            widths.append(w)
            case2.append((int(payload[off]), int(payload[off + 1])) == sentinel)
        sizes.extend(batch.sizes.tolist())
        batch_ids.extend([b] * len(batch.sizes))
        s = batch.sizes.astype(np.int64)
        stats.append(
            {
                "batch": b,
                "chunks": len(s),
                "bytes": batch.nbytes,
                "size_min": int(s.min()) if len(s) else 0,
                "size_mean": round(float(s.mean()), 3) if len(s) else 0,
                "size_max": int(s.max()) if len(s) else 0,
            }
        )
    return ArchiveSummary(
        header=header,
        archive_bytes=len(memoryview(data).cast("B")),
        chunk_sizes=np.array(sizes, dtype=np.int64),
        chunk_batch=np.array(batch_ids, dtype=np.int64),
        case2=np.array(case2, dtype=bool),
        widths=np.array(widths, dtype=np.int64),
        dense_rows=dense,
        sparse_rows=sparse,
        batch_stats=stats,
    )


def compression_ratio(archive_bytes: int, value_count: int, precision: Precision) -> float:
    """archive bytes / raw bytes; nan for an empty input."""
    raw = value_count * (precision.bits // 8)
    return archive_bytes / raw if raw else float("nan")


@dataclass
class BenchResult:
    value_count: int
    precision: Precision
    archive_bytes: int
    compress_seconds: float
    decompress_seconds: float
    bit_exact: bool
    n_streams: int
    workers: int

    @property
    def raw_bytes(self) -> int:
        return self.value_count * (self.precision.bits // 8)

    @property
    def ratio(self) -> float:
        return compression_ratio(self.archive_bytes, self.value_count, self.precision)

    @property
    def compress_gbps(self) -> float:
        return self.raw_bytes / 1e9 / self.compress_seconds if self.compress_seconds else float("nan")

    @property
    def decompress_gbps(self) -> float:
        return self.raw_bytes / 1e9 / self.decompress_seconds if self.decompress_seconds else float("nan")

    def lines(self) -> list[tuple[str, object]]:
        return [
            ("value_count", self.value_count),
            ("precision", self.precision.bits),
            ("raw_bytes", self.raw_bytes),
            ("archive_bytes", self.archive_bytes),
            ("ratio", f"{self.ratio:.6f}"),
            ("streams", self.n_streams),
            ("workers", self.workers),
            ("compress_seconds", f"{self.compress_seconds:.6f}"),
            ("decompress_seconds", f"{self.decompress_seconds:.6f}"),
            ("compress_gbps", f"{self.compress_gbps:.4f}"),
            ("decompress_gbps", f"{self.decompress_gbps:.4f}"),
            ("bit_exact", str(self.bit_exact).lower()),
        ]


def run_bench(
    values,
    precision: Precision,
    n_streams: int,
    batch_values: int,
    chunk_n: int,
    workers: int,
    repeat: int = 3,
) -> tuple[BenchResult, bytes]:
    """Best-of-``repeat`` wall times for both directions; also returns the archive."""
    values = np.ascontiguousarray(values, dtype=precision.float_dtype)
    best_c = best_d = float("inf")
    archive = b""
    restored = None
    for _ in range(max(1, repeat)):
        t0 = time.perf_counter()
        archive, _ = compress_pipeline(values, n_streams, batch_values, workers, precision, chunk_n)
        t1 = time.perf_counter()
        restored = decompress_pipeline(archive, n_streams, workers)
        t2 = time.perf_counter()
        best_c = min(best_c, t1 - t0)
        best_d = min(best_d, t2 - t1)
    u = precision.uint_dtype
    exact = restored.shape == values.shape and np.array_equal(restored.view(u), values.view(u))
    result = BenchResult(
        value_count=values.shape[0],
        precision=precision,
        archive_bytes=len(archive),
        compress_seconds=best_c,
        decompress_seconds=best_d,
        bit_exact=bool(exact),
        n_streams=n_streams,
        workers=workers,
    )
    return result, archive


def format_lines(pairs) -> str:
    return "".join(f"{k}={v}\n" for k, v in pairs)

