"""Command-line front end.

Every command prints a key=value report on stdout. Exit status: 0 success,
1 verify mismatch, 2 usage error, 3 bad input or corrupt archive.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass, replace
from pathlib import Path
from typing import TextIO

import numpy as np

from .chunkcodec import CorruptChunkError
from .container import DEFAULT_BATCH_VALUES, CorruptArchiveError
from .ingest import read_csv_column, read_raw, write_raw
from .numeric import Precision
from .oracle import generate, parse_spec
from .pipeline import DEFAULT_STREAMS, compress_pipeline, decompress_pipeline, default_workers
from .report import compression_ratio, format_lines, run_bench, summarize_archive
from .transform import DEFAULT_CHUNK_N

COMMANDS = ("compress", "decompress", "verify", "inspect", "gen", "bench")

EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_USAGE = 2
EXIT_DATA = 3


@dataclass
class CliConfig:
    command: str
    input: Path | None = None
    output: Path | None = None
    precision: Precision | None = None
    chunk_n: int = DEFAULT_CHUNK_N
    batch_values: int = DEFAULT_BATCH_VALUES
    n_streams: int = DEFAULT_STREAMS
    workers: int | None = None
    input_format: str = "raw"
    column: str = "0"
    seed: int | None = None
    spec: str | None = None
    report_dir: Path | None = None
    repeat: int = 3

    @property
    def value_precision(self) -> Precision:
        return self.precision or Precision.DOUBLE


def _emit(out: TextIO, pairs) -> None:
    out.write(format_lines(pairs))
    out.flush()


def _load_values(cfg: CliConfig) -> np.ndarray:
    if cfg.spec is not None:
        extra = {"precision": cfg.value_precision, "chunk_n": cfg.chunk_n}
        spec = parse_spec(cfg.spec, **extra)
        if cfg.seed is not None:
            spec = replace(spec, seed=cfg.seed)
        return generate(spec)
    if cfg.input is None:
        raise ValueError("an input file or --spec is required")
    if cfg.input_format == "csv":
        return read_csv_column(cfg.input, cfg.column, cfg.value_precision)
    return read_raw(cfg.input, cfg.value_precision)


def _write_report(cfg: CliConfig, pairs, figures) -> list[Path]:
    """report.txt plus figures into cfg.report_dir; returns written figure paths."""
    if cfg.report_dir is None:
        return []
    from . import plotting

    cfg.report_dir.mkdir(parents=True, exist_ok=True)
    (cfg.report_dir / "report.txt").write_text(format_lines(pairs))
    return [draw(plotting, cfg.report_dir) for draw in figures]


def _compress(cfg: CliConfig, out: TextIO) -> int:
    values = _load_values(cfg)
    p = cfg.value_precision
    archive, size = compress_pipeline(values, cfg.n_streams, cfg.batch_values, cfg.workers, p, cfg.chunk_n)
    cfg.output.write_bytes(archive)
    _emit(
        out,
        [
            ("output", cfg.output),
            ("value_count", values.shape[0]),
            ("archive_bytes", size),
            ("ratio", f"{compression_ratio(size, values.shape[0], p):.6f}"),
        ],
    )
    return EXIT_OK


def _decompress(cfg: CliConfig, out: TextIO) -> int:
    archive = cfg.input.read_bytes()
    values = decompress_pipeline(archive, cfg.n_streams, cfg.workers, cfg.precision)
    p = Precision.from_bits(values.dtype.itemsize * 8)
    write_raw(cfg.output, values, p)
    _emit(out, [("output", cfg.output), ("value_count", values.shape[0]), ("precision", p.bits)])
    return EXIT_OK


def _verify(cfg: CliConfig, out: TextIO) -> int:
    values = _load_values(cfg)
    p = cfg.value_precision
    archive, size = compress_pipeline(values, cfg.n_streams, cfg.batch_values, cfg.workers, p, cfg.chunk_n)
    restored = decompress_pipeline(archive, cfg.n_streams, cfg.workers, p)
    u = p.uint_dtype
    if restored.shape != values.shape:
        mismatches = max(values.shape[0], restored.shape[0])
    else:
        mismatches = int(np.count_nonzero(restored.view(u) != values.view(u)))
    ok = mismatches == 0
    _emit(
        out,
        [
            ("value_count", values.shape[0]),
            ("archive_bytes", size),
            ("mismatches", mismatches),
            ("result", "PASS" if ok else "FAIL"),
        ],
    )
    return EXIT_OK if ok else EXIT_MISMATCH


def _inspect(cfg: CliConfig, out: TextIO) -> int:
    summary = summarize_archive(cfg.input.read_bytes())
    pairs = summary.lines()
    h = summary.header
    figures = [
        lambda pl, d: pl.plot_chunk_sizes(
            summary.chunk_sizes, h.chunk_n, h.precision.bits // 8, d / "chunk_sizes.png"
        ),
        lambda pl, d: pl.plot_widths(summary.widths, summary.case2, d / "plane_widths.png"),
    ]
    written = _write_report(cfg, pairs, figures)
    _emit(out, pairs + [("figure", f) for f in written])
    return EXIT_OK


def _gen(cfg: CliConfig, out: TextIO) -> int:
    if cfg.spec is None:
        raise ValueError("gen needs --spec")
    values = _load_values(cfg)
    write_raw(cfg.output, values, cfg.value_precision)
    _emit(out, [("output", cfg.output), ("value_count", values.shape[0]), ("precision", cfg.value_precision.bits)])
    return EXIT_OK


def _bench(cfg: CliConfig, out: TextIO) -> int:
    values = _load_values(cfg)
    p = cfg.value_precision
    result, archive = run_bench(
        values, p, cfg.n_streams, cfg.batch_values, cfg.chunk_n, cfg.workers, cfg.repeat
    )
    pairs = result.lines()
    summary = summarize_archive(archive)
    figures = [
        lambda pl, d: pl.plot_throughput(
            result.compress_gbps, result.decompress_gbps, result.ratio, d / "throughput.png"
        ),
        lambda pl, d: pl.plot_chunk_sizes(summary.chunk_sizes, cfg.chunk_n, p.bits // 8, d / "chunk_sizes.png"),
    ]
    written = _write_report(cfg, pairs, figures)
    _emit(out, pairs + [("figure", f) for f in written])
    return EXIT_OK if result.bit_exact else EXIT_MISMATCH


_HANDLERS = {
    "compress": _compress,
    "decompress": _decompress,
    "verify": _verify,
    "inspect": _inspect,
    "gen": _gen,
    "bench": _bench,
}


def run(cfg: CliConfig, out: TextIO | None = None, err: TextIO | None = None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    if cfg.workers is None:
        cfg = replace(cfg, workers=default_workers())
    try:
        return _HANDLERS[cfg.command](cfg, out)
    except (CorruptArchiveError, CorruptChunkError) as exc:
        err.write(f"error: corrupt archive: {exc}\n")
    except (OSError, ValueError) as exc:
        err.write(f"error: {exc}\n")
    return EXIT_DATA


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--precision", type=int, choices=(64, 32), default=None)
    common.add_argument("--chunk-n", type=int, default=DEFAULT_CHUNK_N)
    common.add_argument("--batch-values", type=int, default=DEFAULT_BATCH_VALUES)
    common.add_argument("--streams", type=int, default=DEFAULT_STREAMS)
    common.add_argument("--workers", type=int, default=None, help="default: $FALCON_WORKERS or CPU count")
    common.add_argument("--format", choices=("raw", "csv"), default="raw", dest="input_format")
    common.add_argument("--column", default="0", help="CSV column index or header name")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--spec", default=None, help="synthetic input, e.g. random-walk:decimals=2,count=1000000")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="floatplane", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compress", parents=[common], help="values -> archive")
    p.add_argument("input", type=Path, nargs="?")
    p.add_argument("-o", "--output", type=Path, required=True)

    p = sub.add_parser("decompress", parents=[common], help="archive -> raw little-endian values")
    p.add_argument("input", type=Path)
    p.add_argument("-o", "--output", type=Path, required=True)

    p = sub.add_parser("verify", parents=[common], help="round trip and bit-compare")
    p.add_argument("input", type=Path, nargs="?")

    p = sub.add_parser("inspect", parents=[common], help="archive statistics")
    p.add_argument("input", type=Path)
    p.add_argument("--report-dir", type=Path, default=None)

    p = sub.add_parser("gen", parents=[common], help="write a synthetic dataset as raw values")
    p.add_argument("-o", "--output", type=Path, required=True)

    p = sub.add_parser("bench", parents=[common], help="ratio and throughput")
    p.add_argument("input", type=Path, nargs="?")
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--report-dir", type=Path, default=None)
    return parser


def config_from_args(args: argparse.Namespace) -> CliConfig:
    return CliConfig(
        command=args.command,
        input=getattr(args, "input", None),
        output=getattr(args, "output", None),
        precision=Precision.from_bits(args.precision) if args.precision else None,
        chunk_n=args.chunk_n,
        batch_values=args.batch_values,
        n_streams=args.streams,
        workers=args.workers,
        input_format=args.input_format,
        column=args.column,
        seed=args.seed,
        spec=args.spec,
        report_dir=getattr(args, "report_dir", None),
        repeat=getattr(args, "repeat", 3),
    )


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    return run(config_from_args(args))


if __name__ == "__main__":
    sys.exit(main())
