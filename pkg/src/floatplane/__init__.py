"""Lossless floating-point compression by decimal-place analysis and bit planes."""

from .bitplane import BitPlanes, Scheme, build_planes, decode_rows, encode_rows, select_scheme
from .chunkcodec import CorruptChunkError, chunk_size_bound, compress_chunk, decompress_chunk
from .container import (
    ArchiveHeader,
    BatchArchive,
    CorruptArchiveError,
    PrecisionMismatchError,
    decode_batch,
    encode_batch,
    offsets_from_sizes,
    read_archive,
    read_batch,
    write_batch,
)
from .numeric import (
    DOUBLE,
    SINGLE,
    DecimalMeta,
    FloatBits,
    Precision,
    conversion_error,
    decimal_round_scale,
    dp_ds_calculate,
    inverse_scale,
    ulp,
)
from .pipeline import EventDrivenScheduler, compress_pipeline, compress_to_file, decompress_pipeline
from .transform import ChunkHeader, analyze_chunk, forward_transform, inverse_transform

__all__ = [
    "ArchiveHeader",
    "BatchArchive",
    "BitPlanes",
    "ChunkHeader",
    "CorruptArchiveError",
    "CorruptChunkError",
    "DOUBLE",
    "DecimalMeta",
    "EventDrivenScheduler",
    "FloatBits",
    "Precision",
    "PrecisionMismatchError",
    "SINGLE",
    "Scheme",
    "analyze_chunk",
    "build_planes",
    "chunk_size_bound",
    "compress_chunk",
    "compress_pipeline",
    "compress_to_file",
    "conversion_error",
    "decimal_round_scale",
    "decode_batch",
    "decode_rows",
    "decompress_chunk",
    "decompress_pipeline",
    "dp_ds_calculate",
    "encode_batch",
    "encode_rows",
    "forward_transform",
    "inverse_scale",
    "inverse_transform",
    "offsets_from_sizes",
    "read_archive",
    "read_batch",
    "select_scheme",
    "ulp",
    "write_batch",
]
