import csv
import io

import numpy as np
import pytest

from codevq.cli import TABLE_POINTS, main, parse_memory
from codevq.entropy_codec import Bitstream, CodecModel
from codevq.sources import snr_db


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def csv_rows(text):
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(lines))))


def test_parse_memory():
    assert parse_memory("1-3") == [1, 2, 3]
    assert parse_memory("2,5") == [2, 5]


def test_bound_rows(capsys):
    code, out, _ = run(capsys, "bound", "--q", "2", "7")
    assert code == 0
    assert out.startswith("# codevq")
    rows = csv_rows(out)
    assert [r["q"] for r in rows] == ["2", "7"]
    assert float(rows[0]["G_opt"]) == pytest.approx(0.0598, abs=1e-4)
    assert float(rows[0]["G_at_half"]) == pytest.approx(0.0631, abs=1e-4)
    assert float(rows[1]["G_opt"]) == pytest.approx(0.0585, abs=1e-4)


def test_bound_rejects_composite(capsys):
    code, _, err = run(capsys, "bound", "--q", "4")
    assert code == 2 and "prime" in err


def test_nsm_search_deterministic(tmp_path, capsys):
    args = ["nsm-search", "--q", "2", "--memory", "1-2", "--samples", "200000",
            "--coarse-samples", "50000"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(capsys, *args, "--out", str(a))[0] == 0
    assert run(capsys, *args, "--out", str(b))[0] == 0
    assert a.read_bytes() == b.read_bytes()
    rows = csv_rows(a.read_text())
    assert [(r["g1"], r["g2"]) for r in rows] == [("3", "1"), ("7", "5")]


def test_benchmark_point(tmp_path, capsys):
    out = tmp_path / "b.csv"
    code, _, _ = run(capsys, "benchmark", "--source", "gaussian", "--states", "2", "--rate", "1",
                     "--delta", "0", "--samples", "100000", "--train-samples", "200000",
                     "--out", str(out), "--model-dir", str(tmp_path / "models"))
    assert code == 0
    row = csv_rows(out.read_text())[0]
    assert abs(float(row["ideal_rate"]) - 1.0) < 0.02
    assert float(row["snr_db"]) == pytest.approx(5.06, abs=0.3)
    assert float(row["snr_db"]) <= float(row["shannon_db"]) + 0.05
    assert len(list((tmp_path / "models").glob("*.json"))) == 1


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    d = tmp_path_factory.mktemp("codec")
    model = d / "m.json"
    assert main(["train", "--states", "4", "--rate", "1", "--samples", "1000000",
                 "--out", str(model)]) == 0
    return d, model


def test_file_round_trip(trained):
    d, model = trained
    x = np.random.default_rng(9).normal(size=1_000_001)
    src, bits, rec = d / "x.f64", d / "x.cvq", d / "y.f64"
    x.astype("<f8").tofile(src)
    assert main(["quantize", str(src), "--model", str(model), "--out", str(bits)]) == 0
    assert main(["dequantize", str(bits), "--model", str(model), "--out", str(rec)]) == 0
    y = np.fromfile(rec, "<f8")
    assert y.size == x.size
    assert snr_db(x, y) == pytest.approx(5.5, abs=0.3)
    stream = Bitstream.from_bytes(bits.read_bytes())
    rate = 8 * len(stream.payload) / x.size
    assert stream.header["samples"] == x.size
    assert rate == pytest.approx(1.0, rel=0.01)


def test_empty_file(trained):
    d, model = trained
    (d / "e.f64").write_bytes(b"")
    assert main(["quantize", str(d / "e.f64"), "--model", str(model), "--out", str(d / "e.cvq")]) == 0
    stream = Bitstream.from_bytes((d / "e.cvq").read_bytes())
    assert stream.payload == b"" and stream.header["samples"] == 0
    assert main(["dequantize", str(d / "e.cvq"), "--model", str(model),
                 "--out", str(d / "e2.f64")]) == 0
    assert (d / "e2.f64").read_bytes() == b""


def test_model_stream_mismatch(trained, tmp_path, capsys):
    d, model = trained
    other = tmp_path / "o.json"
    assert main(["train", "--q", "3", "--code", "[12;11]", "--scale", "0.5", "--samples", "100000",
                 "--min-samples", "1000", "--out", str(other)]) == 0
    x = np.random.default_rng(1).normal(size=100)
    x.astype("<f8").tofile(tmp_path / "x.f64")
    assert main(["quantize", str(tmp_path / "x.f64"), "--model", str(other),
                 "--out", str(tmp_path / "x.cvq")]) == 0
    code, _, err = run(capsys, "dequantize", str(tmp_path / "x.cvq"), "--model", str(model),
                       "--out", str(tmp_path / "y.f64"))
    assert code == 2 and "q=3" in err


def test_train_requires_enough_samples(tmp_path, capsys):
    code, _, err = run(capsys, "train", "--samples", "1000", "--out", str(tmp_path / "m.json"))
    assert code == 2 and "at least" in err


def test_bad_sample_file(trained, tmp_path, capsys):
    _, model = trained
    (tmp_path / "bad.f64").write_bytes(b"\0" * 7)
    code, _, err = run(capsys, "quantize", str(tmp_path / "bad.f64"), "--model", str(model),
                       "--out", str(tmp_path / "o"))
    assert code == 2 and "multiple of 8" in err


def test_published_tables(capsys):
    code, out, _ = run(capsys, "tables", "--published")
    assert code == 0
    rows = csv_rows(out)
    assert any(r["value"].startswith("[61;57]") for r in rows)
    assert len(TABLE_POINTS) == 7


def test_trained_model_loads(trained):
    _, model = trained
    m = CodecModel.load(model)
    assert m.spec.label == "[7;5]"
