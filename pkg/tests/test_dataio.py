import json
import struct

import numpy as np
import pytest

from costqr import dataio
from costqr.errors import BadSpec, CorruptHeader, ParseError, ShapeOverflow
from costqr.evaluation import CostErrorCurve, EvalRecord
from costqr.synthetic import SyntheticSpec, generate, mirror_index


def test_binary_roundtrip_is_bit_exact(tmp_path):
    X = np.random.default_rng(0).standard_normal((3, 4))
    X[0, 0] = np.nextafter(1.0, 2.0)
    X[1, 1] = -0.0
    path = tmp_path / "x.cqr"
    dataio.save_matrix(path, X)
    raw = path.read_bytes()
    assert raw[:4] == b"CQR1"
    assert struct.unpack("<QQ", raw[4:20]) == (3, 4)
    assert len(raw) == 20 + 8 * 12
    Y = dataio.load_matrix(path)
    assert Y.tobytes() == X.tobytes()


def test_csv_roundtrip(tmp_path):
    X = np.random.default_rng(1).standard_normal((5, 3)) * 1e-7
    path = tmp_path / "x.csv"
    dataio.save_matrix(path, X)
    np.testing.assert_array_equal(dataio.load_matrix(path), X)


def test_truncated_and_bad_headers(tmp_path):
    path = tmp_path / "x.cqr"
    dataio.save_matrix(path, np.ones((3, 4)))
    data = path.read_bytes()
    path.write_bytes(data[:-8])
    with pytest.raises(CorruptHeader):
        dataio.load_matrix(path)
    path.write_bytes(data[:10])
    with pytest.raises(CorruptHeader):
        dataio.load_matrix(path)
    path.write_bytes(b"XQR1" + data[4:])
    with pytest.raises(CorruptHeader):
        dataio.load_matrix(path)
    path.write_bytes(b"CQR1" + struct.pack("<QQ", 2**40, 2**40))
    with pytest.raises(ShapeOverflow):
        dataio.load_matrix(path)


def test_csv_parse_errors(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("1,2,3\n4,5,6\n7,8\n")
    with pytest.raises(ParseError) as exc:
        dataio.load_matrix(path)
    assert exc.value.line == 3
    path.write_text("1,2\n3,abc\n")
    with pytest.raises(ParseError) as exc:
        dataio.load_matrix(path)
    assert (exc.value.line, exc.value.column) == (2, 2)


def test_load_vector(tmp_path):
    path = tmp_path / "eta.csv"
    path.write_text("1\n2\n3\n")
    np.testing.assert_array_equal(dataio.load_vector(path), [1, 2, 3])
    path.write_text("1,2\n3,4\n")
    with pytest.raises(ParseError):
        dataio.load_vector(path)


def _curve(n=1):
    recs = [EvalRecord(0.5 * i, 1.0 + i, 0.1, 0.2 + 1e-17 * i, 3.0, 2, i, (0, 4)) for i in range(n)]
    return CostErrorCurve(k=2, records=recs)


def test_export_csv_and_json(tmp_path):
    dataio.export_results(_curve(), tmp_path / "c.csv", "csv")
    lines = (tmp_path / "c.csv").read_text().splitlines()
    assert lines[0] == "gamma,k,fold,cost,train_error,test_error,stability"
    assert lines[1].startswith("0.0,2,0,1.0,")
    assert [l.split(",")[2] for l in lines[2:]] == ["mean", "std"]

    curve = _curve(3)
    dataio.export_results(curve, tmp_path / "c.json", "json", config={"a": 1})
    doc = json.loads((tmp_path / "c.json").read_text())
    assert doc["schema"] == "costqr/v1" and doc["config"] == {"a": 1}
    got = doc["curves"][0]["records"]
    for r, g in zip(curve.records, got):
        assert (g["gamma"], g["cost"], g["test_error"], g["stability"]) == (
            r.gamma, r.total_cost, r.test_error, r.stability,
        )


def test_export_refuses_empty(tmp_path):
    with pytest.raises(ValueError):
        dataio.export_results(CostErrorCurve(k=1), tmp_path / "c.json")


def test_low_rank_generator():
    X = generate(SyntheticSpec("low_rank_noise", m=30, n=20, rank=3, seed=1))
    s = np.linalg.svd(X, compute_uv=False)
    assert s[3] / s[0] <= 1e-12
    Y = generate(SyntheticSpec("low_rank_noise", m=30, n=20, rank=3, seed=1))
    assert X.tobytes() == Y.tobytes()
    Z = generate(SyntheticSpec("low_rank_noise", m=30, n=20, rank=3, noise=0.1, seed=1))
    assert np.linalg.svd(Z, compute_uv=False)[3] > 0.1


def test_traveling_wave_rank_two():
    X = generate(SyntheticSpec("traveling_wave", m=40, n=25, frequency=1.5))
    s = np.linalg.svd(X, compute_uv=False)
    assert s[2] / s[0] <= 1e-12 and s[1] / s[0] > 0.1


@pytest.mark.parametrize("grid", [(6, 5), (7, 4)])
def test_mirror_symmetric_exact(grid):
    spec = SyntheticSpec("mirror_symmetric", m=40, grid=grid, rank=6, noise=0.05, seed=2)
    X = generate(spec)
    assert X.shape == (40, grid[0] * grid[1])
    assert np.array_equal(X, X[:, mirror_index(grid)])
    clean = generate(SyntheticSpec("mirror_symmetric", m=40, grid=grid, rank=6, seed=2))
    s = np.linalg.svd(clean, compute_uv=False)
    assert s[6] / s[0] <= 1e-12 and s[5] / s[0] > 1e-6


def test_bad_specs():
    with pytest.raises(BadSpec):
        generate(SyntheticSpec("spiral", n=3))
    with pytest.raises(BadSpec):
        generate(SyntheticSpec("low_rank_noise"))
    with pytest.raises(BadSpec):
        generate(SyntheticSpec("mirror_symmetric", n=10))
    with pytest.raises(BadSpec):
        generate(SyntheticSpec("low_rank_noise", n=5, noise=-1))
