"""Input validation helpers used by the estimators and the public functions."""

from __future__ import annotations

import numbers

import numpy as np
from sklearn.utils.validation import check_array

from .exceptions import ConfigError, DataError
from .graph import Graph, Labels, NodeFeatures


def check_graph(g) -> Graph:
    if not isinstance(g, Graph):
        raise TypeError(f"expected a Graph, got {type(g).__name__}")
    return g


def check_features(X, n: int | None = None) -> np.ndarray:
    """Return a finite float64 2-D array, optionally checking the row count."""
    if isinstance(X, NodeFeatures):
        X = X.values
    X = check_array(X, accept_sparse=False, dtype=np.float64, ensure_all_finite=True)
    if n is not None and X.shape[0] != n:
        raise DataError(f"features have {X.shape[0]} rows, graph has {n} nodes")
    return X


def check_labels(y, n: int | None = None, allow_unlabeled: bool = False) -> np.ndarray:
    """Integer label vector; ``-1`` marks unlabeled nodes when allowed."""
    if isinstance(y, Labels):
        y = y.y
    y = check_array(y, ensure_2d=False, dtype=None)
    if y.ndim != 1:
        raise DataError("labels must be 1-D")
    if not np.issubdtype(y.dtype, np.integer):
        if not np.all(np.mod(y, 1) == 0):
            raise DataError("labels must be integers")
        y = y.astype(np.int64)
    lo = -1 if allow_unlabeled else 0
    if y.size and y.min() < lo:
        raise DataError("labels must be non-negative" + (" or -1" if allow_unlabeled else ""))
    if n is not None and len(y) != n:
        raise DataError(f"{len(y)} labels for {n} nodes")
    return y.astype(np.int64)


def check_index_set(idx, n: int, name: str = "index set") -> np.ndarray:
    """Non-empty, duplicate-free node indices in ``[0, n)``; boolean masks accepted."""
    idx = np.asarray(idx)
    if idx.dtype == bool:
        if idx.shape != (n,):
            raise DataError(f"{name}: boolean mask must have length {n}")
        idx = np.flatnonzero(idx)
    idx = idx.astype(np.int64).ravel()
    if idx.size == 0:
        raise DataError(f"{name} is empty")
    if idx.min() < 0 or idx.max() >= n:
        raise DataError(f"{name} has entries outside [0, {n})")
    if len(np.unique(idx)) != idx.size:
        raise DataError(f"{name} has repeated entries")
    return idx


def check_interval(value, name: str, low: float, high: float, closed=(True, True)) -> float:
    """Validate a real hyperparameter against an interval; raises :class:`ConfigError`."""
    if not isinstance(value, numbers.Real) or isinstance(value, bool) or not np.isfinite(value):
        raise ConfigError(f"{name} must be a finite real number, got {value!r}")
    lo_ok = value >= low if closed[0] else value > low
    hi_ok = value <= high if closed[1] else value < high
    if not (lo_ok and hi_ok):
        brackets = ("[" if closed[0] else "(") + f"{low}, {high}" + ("]" if closed[1] else ")")
        raise ConfigError(f"{name} must lie in {brackets}, got {value}")
    return float(value)


def check_positive_int(value, name: str, minimum: int = 1) -> int:
    if isinstance(value, bool) or not isinstance(value, numbers.Integral) or value < minimum:
        raise ConfigError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)
