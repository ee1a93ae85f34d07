"""Runtime values flowing between operators, and their artifact encoding.

Every value serializes to a self-describing binary container:
a 4-byte magic, a format version, a type tag, then little-endian payloads.
Encoding is deterministic so identical values yield identical artifact bytes.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

MAGIC = b"IFV\x01"
FORMAT_VERSION = 1

_TAG_TABLE = 1
_TAG_MATRIX = 2
_TAG_MODEL = 3
_TAG_PREDICTIONS = 4
_TAG_SCALAR = 5
_TAG_SIMBLOB = 6


class DataError(Exception):
    """Bad input data or an operator/value schema mismatch."""


@dataclass(frozen=True)
class Table:
    """Named columns of equal length; each column is float64 or string."""

    columns: tuple[str, ...]
    cells: tuple  # per column: np.ndarray (float64) or tuple[str, ...]

    def __post_init__(self):
        if len(set(self.columns)) != len(self.columns):
            raise DataError("duplicate column names in table")
        if len(self.columns) != len(self.cells):
            raise DataError("column/cell arity mismatch")
        lengths = {len(c) for c in self.cells}
        if len(lengths) > 1:
            raise DataError("ragged table columns")

    @property
    def num_rows(self) -> int:
        return len(self.cells[0]) if self.cells else 0

    def column(self, name: str):
        try:
            return self.cells[self.columns.index(name)]
        except ValueError:
            raise DataError(f"no such column {name!r}") from None

    def __eq__(self, other):
        if not isinstance(other, Table):
            return NotImplemented
        if self.columns != other.columns:
            return False
        for a, b in zip(self.cells, other.cells):
            if isinstance(a, np.ndarray) != isinstance(b, np.ndarray):
                return False
            if isinstance(a, np.ndarray):
                if not np.array_equal(a, b):
                    return False
            elif tuple(a) != tuple(b):
                return False
        return True

    __hash__ = None


@dataclass(frozen=True)
class FeatureMatrix:
    """Dense rows x named float64 feature columns."""

    feature_names: tuple[str, ...]
    matrix: np.ndarray  # shape (rows, len(feature_names))

    def __post_init__(self):
        if len(set(self.feature_names)) != len(self.feature_names):
            raise DataError("duplicate feature column names")
        if self.matrix.ndim != 2 or self.matrix.shape[1] != len(self.feature_names):
            raise DataError("feature matrix shape mismatch")

    @property
    def num_rows(self) -> int:
        return self.matrix.shape[0]

    def column(self, name: str) -> np.ndarray:
        try:
            return self.matrix[:, self.feature_names.index(name)]
        except ValueError:
            raise DataError(f"no such feature column {name!r}") from None

    def __eq__(self, other):
        if not isinstance(other, FeatureMatrix):
            return NotImplemented
        return self.feature_names == other.feature_names and np.array_equal(
            self.matrix, other.matrix
        )

    __hash__ = None


@dataclass(frozen=True)
class Model:
    """Trained linear model: weight per feature, bias, and the label column."""

    feature_names: tuple[str, ...]
    label_name: str
    weights: np.ndarray
    bias: float

    def __post_init__(self):
        if self.weights.shape != (len(self.feature_names),):
            raise DataError("model weight/feature arity mismatch")

    def __eq__(self, other):
        if not isinstance(other, Model):
            return NotImplemented
        return (
            self.feature_names == other.feature_names
            and self.label_name == other.label_name
            and np.array_equal(self.weights, other.weights)
            and self.bias == other.bias
        )

    __hash__ = None


@dataclass(frozen=True)
class Predictions:
    """Per-row scores in [0, 1] plus the true labels carried from the input."""

    label_name: str
    scores: np.ndarray
    truth: np.ndarray

    def __post_init__(self):
        if self.scores.shape != self.truth.shape or self.scores.ndim != 1:
            raise DataError("prediction/truth length mismatch")

    @property
    def labels(self) -> np.ndarray:
        return (self.scores >= 0.5).astype(np.float64)

    def __eq__(self, other):
        if not isinstance(other, Predictions):
            return NotImplemented
        return (
            self.label_name == other.label_name
            and np.array_equal(self.scores, other.scores)
            and np.array_equal(self.truth, other.truth)
        )

    __hash__ = None


@dataclass(frozen=True)
class Scalar:
    value: float


@dataclass(frozen=True)
class SimBlob:
    """Opaque simulated output of a declared size."""

    declared_bytes: int


Value = Table | FeatureMatrix | Model | Predictions | Scalar | SimBlob


def _pack_str(s: str) -> bytes:
    raw = s.encode("utf-8")
    return struct.pack("<I", len(raw)) + raw


def _pack_floats(a: np.ndarray) -> bytes:
    return np.ascontiguousarray(a, dtype="<f8").tobytes()


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise DataError("truncated artifact")
        out = self.buf[self.pos : self.pos + n]
        self.pos += n
        return out

    def u8(self) -> int:
        return self.take(1)[0]

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def u64(self) -> int:
        return struct.unpack("<Q", self.take(8))[0]

    def f64(self) -> float:
        return struct.unpack("<d", self.take(8))[0]

    def string(self) -> str:
        return self.take(self.u32()).decode("utf-8")

    def floats(self, n: int) -> np.ndarray:
        return np.frombuffer(self.take(8 * n), dtype="<f8").astype(np.float64)


def encode(value: Value) -> bytes:
    """Serialize a value to deterministic container bytes."""
    out = [MAGIC, struct.pack("<H", FORMAT_VERSION)]
    if isinstance(value, Table):
        out.append(struct.pack("<BI", _TAG_TABLE, len(value.columns)))
        out.append(struct.pack("<I", value.num_rows))
        for name, col in zip(value.columns, value.cells):
            out.append(_pack_str(name))
            if isinstance(col, np.ndarray):
                out.append(struct.pack("<B", 0))
                out.append(_pack_floats(col))
            else:
                out.append(struct.pack("<B", 1))
                out.extend(_pack_str(cell) for cell in col)
    elif isinstance(value, FeatureMatrix):
        out.append(
            struct.pack(
                "<BII", _TAG_MATRIX, len(value.feature_names), value.num_rows
            )
        )
        out.extend(_pack_str(n) for n in value.feature_names)
        out.append(_pack_floats(value.matrix))
    elif isinstance(value, Model):
        out.append(struct.pack("<BI", _TAG_MODEL, len(value.feature_names)))
        out.extend(_pack_str(n) for n in value.feature_names)
        out.append(_pack_str(value.label_name))
        out.append(_pack_floats(value.weights))
        out.append(struct.pack("<d", value.bias))
    elif isinstance(value, Predictions):
        out.append(struct.pack("<BI", _TAG_PREDICTIONS, len(value.scores)))
        out.append(_pack_str(value.label_name))
        out.append(_pack_floats(value.scores))
        out.append(_pack_floats(value.truth))
    elif isinstance(value, Scalar):
        out.append(struct.pack("<Bd", _TAG_SCALAR, value.value))
    elif isinstance(value, SimBlob):
        out.append(struct.pack("<BQ", _TAG_SIMBLOB, value.declared_bytes))
        out.append(b"\x00" * value.declared_bytes)
    else:
        raise DataError(f"cannot encode {type(value).__name__}")
    return b"".join(out)


def decode(data: bytes) -> Value:
    """Deserialize container bytes back into a value."""
    r = _Reader(data)
    if r.take(4) != MAGIC:
        raise DataError("not an artifact container")
    version = struct.unpack("<H", r.take(2))[0]
    if version != FORMAT_VERSION:
        raise DataError(f"unsupported artifact format version {version}")
    tag = r.u8()
    if tag == _TAG_TABLE:
        ncols = r.u32()
        nrows = r.u32()
        names, cols = [], []
        for _ in range(ncols):
            names.append(r.string())
            if r.u8() == 0:
                cols.append(r.floats(nrows))
            else:
                cols.append(tuple(r.string() for _ in range(nrows)))
        return Table(columns=tuple(names), cells=tuple(cols))
    if tag == _TAG_MATRIX:
        ncols = r.u32()
        nrows = r.u32()
        names = tuple(r.string() for _ in range(ncols))
        mat = r.floats(nrows * ncols).reshape(nrows, ncols)
        return FeatureMatrix(feature_names=names, matrix=mat)
    if tag == _TAG_MODEL:
        nfeat = r.u32()
        names = tuple(r.string() for _ in range(nfeat))
        label = r.string()
        weights = r.floats(nfeat)
        bias = r.f64()
        return Model(feature_names=names, label_name=label, weights=weights, bias=bias)
    if tag == _TAG_PREDICTIONS:
        n = r.u32()
        label = r.string()
        return Predictions(label_name=label, scores=r.floats(n), truth=r.floats(n))
    if tag == _TAG_SCALAR:
        return Scalar(value=r.f64())
    if tag == _TAG_SIMBLOB:
        size = r.u64()
        r.take(size)
        return SimBlob(declared_bytes=size)
    raise DataError(f"unknown artifact tag {tag}")
