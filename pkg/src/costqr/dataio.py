"""Matrix files (binary ``CQR1`` and CSV) and result export.

Binary layout, all little-endian::

    b"CQR1" | m: uint64 | n: uint64 | m*n float64 values, row-major
"""
from __future__ import annotations

import csv
import io
import json
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .errors import CorruptHeader, IoError, ParseError, ShapeOverflow

MAGIC = b"CQR1"
_HEADER = struct.Struct("<4sQQ")
_MAX_ELEMENTS = (2**63 - 1) // 8
SCHEMA = "costqr/v1"


def atomic_write(path, data: bytes):
    """Write ``data`` to a temp file next to ``path`` and rename it into place."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(data)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def _is_csv(path):
    return Path(path).suffix.lower() in (".csv", ".txt")


def encode_matrix(X) -> bytes:
    X = np.ascontiguousarray(X, dtype="<f8")
    if X.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {X.shape}")
    m, n = X.shape
    return _HEADER.pack(MAGIC, m, n) + X.tobytes(order="C")


def decode_matrix(data: bytes) -> np.ndarray:
    if len(data) < _HEADER.size:
        raise CorruptHeader(f"file has {len(data)} bytes, header needs {_HEADER.size}")
    magic, m, n = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise CorruptHeader(f"bad magic {magic!r}")
    if m == 0 or n == 0:
        raise CorruptHeader(f"empty shape {m}x{n}")
    if m * n > _MAX_ELEMENTS:
        raise ShapeOverflow(f"shape {m}x{n} exceeds addressable size")
    expected = _HEADER.size + 8 * m * n
    if len(data) != expected:
        raise CorruptHeader(f"payload has {len(data) - _HEADER.size} bytes, header implies {8 * m * n}")
    return np.frombuffer(data, dtype="<f8", offset=_HEADER.size).reshape(m, n).astype(float)


def format_csv(X) -> str:
    X = np.asarray(X, dtype=float)
    return "".join(",".join(repr(float(v)) for v in row) + "\n" for row in X)


def parse_csv(text: str) -> np.ndarray:
    rows = []
    width = None
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or all(not c.strip() for c in row):
            continue
        vals = []
        for col, cell in enumerate(row, start=1):
            try:
                vals.append(float(cell))
            except ValueError:
                raise ParseError(f"not a number: {cell!r}", lineno, col) from None
        if width is None:
            width = len(vals)
        elif len(vals) != width:
            raise ParseError(f"row has {len(vals)} values, expected {width}", lineno)
        rows.append(vals)
    if not rows:
        raise ParseError("no data rows")
    return np.array(rows, dtype=float)


def save_matrix(path, X):
    """Save as CSV when ``path`` ends in .csv/.txt, otherwise binary."""
    if _is_csv(path):
        atomic_write(path, format_csv(X).encode())
    else:
        atomic_write(path, encode_matrix(X))


def load_matrix(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if _is_csv(path) and not data.startswith(MAGIC):
        return parse_csv(data.decode())
    return decode_matrix(data)


def load_vector(path) -> np.ndarray:
    X = load_matrix(path)
    if min(X.shape) != 1:
        raise ParseError(f"expected a single row or column, got shape {X.shape}")
    return X.ravel()


CSV_COLUMNS = ("gamma", "k", "fold", "cost", "train_error", "test_error", "stability")


def _num(x):
    return repr(float(x))


def curves_to_csv(curves) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for c in curves:
        for r in c.records:
            w.writerow([_num(r.gamma), r.k, r.fold_id, _num(r.total_cost),
                        _num(r.train_error), _num(r.test_error), _num(r.stability)])
    for c in curves:
        for s in c.summary():
            for stat in ("mean", "std"):
                w.writerow([_num(s["gamma"]), c.k, stat, _num(s[f"total_cost_{stat}"]),
                            _num(s[f"train_error_{stat}"]), _num(s[f"test_error_{stat}"]),
                            _num(s[f"stability_{stat}"])])
    return buf.getvalue()


def curve_to_dict(curve):
    return {
        "k": curve.k,
        "records": [
            {
                "gamma": r.gamma,
                "k": r.k,
                "fold": r.fold_id,
                "cost": r.total_cost,
                "train_error": r.train_error,
                "test_error": r.test_error,
                "stability": r.stability,
                "sensors": [int(j) for j in r.sensors],
            }
            for r in curve.records
        ],
        "summary": curve.summary(),
        "failures": curve.failures,
    }


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def export_results(curves, path, format="json", config=None):
    """Write one or more cost-error curves as CSV or JSON.

    The CSV has one row per record followed by ``mean``/``std`` rows per
    (k, gamma) in the ``fold`` column. The JSON carries the ``schema`` tag
    and echoes ``config``.
    """
    if not isinstance(curves, (list, tuple)):
        curves = [curves]
    if not curves or any(not c.records for c in curves):
        raise ValueError("refusing to export an empty curve")
    if format == "csv":
        text = curves_to_csv(curves)
    elif format == "json":
        text = dumps({"schema": SCHEMA, "config": config, "curves": [curve_to_dict(c) for c in curves]})
    else:
        raise ValueError(f"unknown format {format!r}")
    atomic_write(path, text.encode())
