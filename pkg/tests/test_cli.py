import io

import numpy as np
import pytest

from floatplane.cli import EXIT_DATA, EXIT_MISMATCH, EXIT_OK, CliConfig, build_parser, config_from_args, main, run
from floatplane.container import DEFAULT_BATCH_VALUES
from floatplane.numeric import SINGLE


def _kv(text):
    out = {}
    for line in text.splitlines():
        k, _, v = line.partition("=")
        out.setdefault(k, v)
    return out


def _run(argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(config_from_args(build_parser().parse_args(argv)), out, err)
    return code, _kv(out.getvalue()), err.getvalue()


def test_defaults():
    cfg = config_from_args(build_parser().parse_args(["verify", "--spec", "random-walk"]))
    assert (cfg.chunk_n, cfg.batch_values, cfg.n_streams) == (1025, 1025 * 1024 * 4, 16)
    assert DEFAULT_BATCH_VALUES == 1025 * 1024 * 4


def test_gen_compress_decompress(tmp_path):
    raw, arc, back = tmp_path / "v.bin", tmp_path / "v.fp", tmp_path / "w.bin"
    code, rep, _ = _run(["gen", "--spec", "sign-flip:count=5000", "--seed", "3", "-o", str(raw)])
    assert code == EXIT_OK and rep["value_count"] == "5000"
    code, rep, _ = _run(["compress", str(raw), "-o", str(arc), "--streams", "2"])
    assert code == EXIT_OK
    assert int(rep["archive_bytes"]) == arc.stat().st_size
    assert float(rep["ratio"]) == pytest.approx(arc.stat().st_size / 40000, abs=1e-6)
    code, rep, _ = _run(["decompress", str(arc), "-o", str(back)])
    assert code == EXIT_OK and back.read_bytes() == raw.read_bytes()


@pytest.mark.parametrize("kind", ["random-walk", "fixed-decimal", "sign-flip", "outlier-injected", "uniform-bits"])
def test_verify_passes(kind):
    code, rep, _ = _run(["verify", "--spec", f"{kind}:count=3000", "--chunk-n", "65", "--batch-values", "650"])
    assert code == EXIT_OK and rep["result"] == "PASS" and rep["mismatches"] == "0"


def test_verify_single_csv(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("x\n" + "\n".join(f"{i * 0.01:.2f}" for i in range(2000)))
    code, rep, _ = _run(["verify", str(p), "--format", "csv", "--column", "x", "--precision", "32"])
    assert code == EXIT_OK and rep["result"] == "PASS"


def test_verify_reports_fail(monkeypatch):
    import floatplane.cli as cli

    real = cli.decompress_pipeline

    def broken(*a, **k):
        out = real(*a, **k).copy()
        out[0] = 12345.0
        return out

    monkeypatch.setattr(cli, "decompress_pipeline", broken)
    code, rep, _ = _run(["verify", "--spec", "random-walk:count=100"])
    assert code == EXIT_MISMATCH and rep["result"] == "FAIL" and rep["mismatches"] == "1"


def test_inspect_empty_archive(tmp_path):
    raw, arc = tmp_path / "e.bin", tmp_path / "e.fp"
    raw.write_bytes(b"")
    assert _run(["compress", str(raw), "-o", str(arc)])[0] == EXIT_OK
    code, rep, _ = _run(["inspect", str(arc)])
    assert code == EXIT_OK
    assert rep["batch_count"] == "0" and rep["total_values"] == "0"


def test_inspect_report_dir(tmp_path):
    arc = tmp_path / "a.fp"
    _run(["compress", "--spec", "outlier-injected:count=20000", "-o", str(arc)])
    code, rep, _ = _run(["inspect", str(arc), "--report-dir", str(tmp_path / "rep")])
    assert code == EXIT_OK
    assert int(rep["case1_chunks"]) == 20 and rep["case2_chunks"] == "0"
    assert int(rep["dense_rows"]) > 0 and int(rep["sparse_rows"]) > 0
    assert (tmp_path / "rep" / "report.txt").read_text().startswith("archive_bytes=")
    assert (tmp_path / "rep" / "chunk_sizes.png").stat().st_size > 0
    assert (tmp_path / "rep" / "plane_widths.png").stat().st_size > 0


def test_bench_ratio_is_exact(tmp_path):
    code, rep, _ = _run(
        ["bench", "--spec", "random-walk:count=100000", "--repeat", "1", "--report-dir", str(tmp_path / "b")]
    )
    assert code == EXIT_OK and rep["bit_exact"] == "true"
    assert float(rep["ratio"]) == pytest.approx(int(rep["archive_bytes"]) / 800000, abs=1e-6)
    assert float(rep["ratio"]) < 0.15
    assert float(rep["compress_gbps"]) > 0 and float(rep["decompress_gbps"]) > 0
    assert (tmp_path / "b" / "throughput.png").exists()


def test_errors_exit_nonzero(tmp_path):
    bad = tmp_path / "bad.fp"
    bad.write_bytes(b"not an archive at all, definitely not" * 2)
    code, _, err = _run(["inspect", str(bad)])
    assert code == EXIT_DATA and "corrupt" in err
    code, _, err = _run(["decompress", str(tmp_path / "missing.fp"), "-o", str(tmp_path / "o")])
    assert code == EXIT_DATA
    arc = tmp_path / "s.fp"
    _run(["compress", "--spec", "random-walk:count=10", "--precision", "32", "-o", str(arc)])
    code, _, err = _run(["decompress", str(arc), "--precision", "64", "-o", str(tmp_path / "o")])
    assert code == EXIT_DATA and "32-bit" in err


def test_main_entry(capsys):
    assert main(["verify", "--spec", "fixed-decimal:count=100"]) == EXIT_OK
    assert "result=PASS" in capsys.readouterr().out
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_config_object_directly():
    cfg = CliConfig(command="verify", spec="fixed-decimal:count=50", precision=SINGLE)
    out = io.StringIO()
    assert run(cfg, out) == EXIT_OK
    assert "result=PASS" in out.getvalue()
