"""Built-in operator implementations.

Every operator is a pure function of (parent values, params, context) so the
engine can content-address outputs: same inputs and params always give
byte-identical artifacts.  Learners derive any randomness from their ``seed``
param; the current logistic-regression trainer is fully deterministic anyway
(zero initialization, full-batch updates).
"""

from __future__ import annotations

import csv as csv_mod
import io
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .values import (
    DataError,
    FeatureMatrix,
    Model,
    Predictions,
    Scalar,
    SimBlob,
    Table,
    Value,
)


@dataclass(frozen=True)
class OpContext:
    base_dir: Path
    seed: int = 0
    wall_mode: bool = True  # in virtual-clock mode sim operators must not sleep


@dataclass(frozen=True)
class OperatorImpl:
    func: str
    min_parents: int
    max_parents: int | None  # None = unbounded
    fn: Callable[[list[Value], dict, OpContext], Value]


def _param(params: dict, key: str, kind, default=None, required=False):
    if key not in params:
        if required:
            raise DataError(f"missing required param {key!r}")
        return default
    val = params[key]
    if kind is float and isinstance(val, int):
        val = float(val)
    if not isinstance(val, kind):
        want = kind.__name__ if isinstance(kind, type) else "number"
        raise DataError(f"param {key!r} must be {want}, got {type(val).__name__}")
    return val


def _want(values: list[Value], i: int, cls, func: str):
    if i >= len(values) or not isinstance(values[i], cls):
        got = type(values[i]).__name__ if i < len(values) else "nothing"
        raise DataError(f"{func} expects {cls.__name__} at position {i}, got {got}")
    return values[i]


# ---------------------------------------------------------------------------
# data loading and feature extraction


def _op_csv(values, params, ctx):
    if not params["_literals"] or not isinstance(params["_literals"][0], str):
        raise DataError("csv() needs a path string")
    path = Path(params["_literals"][0])
    if not path.is_absolute():
        path = ctx.base_dir / path
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    reader = csv_mod.reader(io.StringIO(text))
    rows = list(reader)
    if not rows:
        raise DataError(f"{path} is empty")
    header, body = rows[0], rows[1:]
    if len(set(header)) != len(header):
        raise DataError(f"{path} has duplicate column headers")
    cols = []
    for j, name in enumerate(header):
        raw = [row[j] if j < len(row) else "" for row in body]
        try:
            cols.append(np.array([float(x) for x in raw], dtype=np.float64))
        except ValueError:
            cols.append(tuple(raw))
    return Table(columns=tuple(header), cells=tuple(cols))


def _op_numeric(values, params, ctx):
    table = _want(values, 0, Table, "numeric")
    lits = params["_literals"]
    if len(lits) != 1 or not isinstance(lits[0], str):
        raise DataError("numeric(table, col) needs one column name")
    col = table.column(lits[0])
    if not isinstance(col, np.ndarray):
        raise DataError(f"column {lits[0]!r} is not numeric")
    return FeatureMatrix(feature_names=(lits[0],), matrix=col.reshape(-1, 1))


def _op_categorical(values, params, ctx):
    table = _want(values, 0, Table, "categorical")
    lits = params["_literals"]
    if len(lits) != 1 or not isinstance(lits[0], str):
        raise DataError("categorical(table, col) needs one column name")
    col = table.column(lits[0])
    cells = (
        tuple(repr(v) for v in col.tolist()) if isinstance(col, np.ndarray) else col
    )
    categories = sorted(set(cells))
    mat = np.zeros((len(cells), len(categories)), dtype=np.float64)
    index = {c: i for i, c in enumerate(categories)}
    for row, value in enumerate(cells):
        mat[row, index[value]] = 1.0
    names = tuple(f"{lits[0]}={c}" for c in categories)
    return FeatureMatrix(feature_names=names, matrix=mat)


def _op_bucketize(values, params, ctx):
    table = _want(values, 0, Table, "bucketize")
    lits = params["_literals"]
    if len(lits) < 2 or not isinstance(lits[0], str):
        raise DataError("bucketize(table, col, edge, ...) needs a column and edges")
    edges = [float(e) for e in lits[1:] if isinstance(e, (int, float))]
    if len(edges) != len(lits) - 1:
        raise DataError("bucket edges must be numbers")
    if edges != sorted(edges):
        raise DataError("bucket edges must be ascending")
    col = table.column(lits[0])
    if not isinstance(col, np.ndarray):
        raise DataError(f"column {lits[0]!r} is not numeric")
    k = len(edges) + 1
    idx = np.searchsorted(np.array(edges), col, side="right")
    mat = np.zeros((len(col), k), dtype=np.float64)
    mat[np.arange(len(col)), idx] = 1.0
    names = tuple(f"{lits[0]}@bucket{i}" for i in range(k))
    return FeatureMatrix(feature_names=names, matrix=mat)


def _op_union(values, params, ctx):
    if not values:
        raise DataError("union() needs at least one feature matrix")
    mats = [_want(values, i, FeatureMatrix, "union") for i in range(len(values))]
    rows = {m.num_rows for m in mats}
    if len(rows) > 1:
        raise DataError(f"union over mismatched row counts {sorted(rows)}")
    names: list[str] = []
    for m in mats:
        names.extend(m.feature_names)
    if len(set(names)) != len(names):
        raise DataError("union would duplicate feature columns")
    return FeatureMatrix(
        feature_names=tuple(names), matrix=np.hstack([m.matrix for m in mats])
    )


# ---------------------------------------------------------------------------
# learning, prediction, metrics


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def logloss_and_grad(w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray, reg: float):
    """Mean logistic loss with L2 penalty on weights (bias unpenalized),
    plus its analytic gradient.  Numerically stable via logaddexp."""
    z = X @ w + b
    margins = z * (2.0 * y - 1.0)
    loss = float(np.mean(np.logaddexp(0.0, -margins)) + 0.5 * reg * float(w @ w))
    err = _sigmoid(z) - y
    grad_w = X.T @ err / len(y) + reg * w
    grad_b = float(np.mean(err))
    return loss, grad_w, grad_b


def train_logreg(X: np.ndarray, y: np.ndarray, reg: float, iters: int, lr: float):
    w = np.zeros(X.shape[1], dtype=np.float64)
    b = 0.0
    for _ in range(iters):
        _, gw, gb = logloss_and_grad(w, b, X, y, reg)
        w = w - lr * gw
        b = b - lr * gb
    return w, b


def _split_label(matrix: FeatureMatrix, label: str):
    if label not in matrix.feature_names:
        raise DataError(f"label column {label!r} not in features")
    keep = tuple(n for n in matrix.feature_names if n != label)
    idx = [matrix.feature_names.index(n) for n in keep]
    X = matrix.matrix[:, idx]
    y = matrix.column(label)
    return keep, X, y


def _op_logreg(values, params, ctx):
    feats = _want(values, 0, FeatureMatrix, "logreg")
    label = _param(params, "label", str, required=True)
    reg = _param(params, "reg", float, default=0.0)
    iters = _param(params, "iters", int, default=100)
    lr = _param(params, "lr", float, default=0.1)
    _param(params, "seed", int, default=ctx.seed)  # reserved for stochastic trainers
    if reg < 0 or iters < 0 or lr <= 0:
        raise DataError("logreg needs reg >= 0, iters >= 0, lr > 0")
    names, X, y = _split_label(feats, label)
    if not np.all(np.isin(y, (0.0, 1.0))):
        raise DataError(f"label column {label!r} is not binary 0/1")
    w, b = train_logreg(X, y, reg, iters, lr)
    return Model(feature_names=names, label_name=label, weights=w, bias=b)


def _op_predict(values, params, ctx):
    model = _want(values, 0, Model, "predict")
    feats = _want(values, 1, FeatureMatrix, "predict")
    idx = []
    for n in model.feature_names:
        if n not in feats.feature_names:
            raise DataError(f"features lack model column {n!r}")
        idx.append(feats.feature_names.index(n))
    X = feats.matrix[:, idx]
    scores = _sigmoid(X @ model.weights + model.bias)
    truth = feats.column(model.label_name)
    return Predictions(label_name=model.label_name, scores=scores, truth=truth)


def _binary_outcomes(pred: Predictions, params) -> tuple[np.ndarray, np.ndarray]:
    label = _param(params, "label", str, required=True)
    if label != pred.label_name:
        raise DataError(
            f"metric label {label!r} does not match predictions over {pred.label_name!r}"
        )
    return pred.labels, pred.truth


def _op_accuracy(values, params, ctx):
    pred = _want(values, 0, Predictions, "accuracy")
    guessed, truth = _binary_outcomes(pred, params)
    if len(truth) == 0:
        raise DataError("accuracy over zero rows")
    return Scalar(value=float(np.mean(guessed == truth)))


def _op_f1(values, params, ctx):
    pred = _want(values, 0, Predictions, "f1")
    guessed, truth = _binary_outcomes(pred, params)
    tp = float(np.sum((guessed == 1.0) & (truth == 1.0)))
    fp = float(np.sum((guessed == 1.0) & (truth == 0.0)))
    fn = float(np.sum((guessed == 0.0) & (truth == 1.0)))
    if tp == 0.0:
        return Scalar(value=0.0)
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return Scalar(value=2.0 * precision * recall / (precision + recall))


def _op_sim(values, params, ctx):
    cost_ms = _param(params, "cost_ms", (int, float), required=True)
    size_kb = _param(params, "size_kb", (int, float), required=True)
    if cost_ms < 0 or size_kb < 0:
        raise DataError("sim costs must be nonnegative")
    if ctx.wall_mode and cost_ms:
        time.sleep(cost_ms / 1000.0)
    return SimBlob(declared_bytes=int(size_kb * 1024))


def sim_cost_us(params: dict) -> int:
    """Virtual-clock duration of a sim operator."""
    return int(round(float(params["cost_ms"]) * 1000))


REGISTRY: dict[str, OperatorImpl] = {
    "csv": OperatorImpl("csv", 0, 0, _op_csv),
    "numeric": OperatorImpl("numeric", 1, 1, _op_numeric),
    "categorical": OperatorImpl("categorical", 1, 1, _op_categorical),
    "bucketize": OperatorImpl("bucketize", 1, 1, _op_bucketize),
    "union": OperatorImpl("union", 1, None, _op_union),
    "logreg": OperatorImpl("logreg", 1, 1, _op_logreg),
    "predict": OperatorImpl("predict", 2, 2, _op_predict),
    "accuracy": OperatorImpl("accuracy", 1, 1, _op_accuracy),
    "f1": OperatorImpl("f1", 1, 1, _op_f1),
    "sim": OperatorImpl("sim", 0, None, _op_sim),
}


def run_operator(func: str, parent_values: list[Value], params: dict, ctx: OpContext) -> Value:
    impl = REGISTRY[func]
    n = len(parent_values)
    if n < impl.min_parents or (impl.max_parents is not None and n > impl.max_parents):
        hi = "+" if impl.max_parents is None else str(impl.max_parents)
        raise DataError(f"{func} takes {impl.min_parents}..{hi} parents, got {n}")
    return impl.fn(parent_values, params, ctx)
