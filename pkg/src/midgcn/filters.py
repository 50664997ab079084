"""Spatial graph filters and the connected-node distance formulas.

Filters act on node signals through sparse products with the normalized
adjacency ``A_hat`` and never form ``A_hat^2``:

=========  ==============================  ==========================
kind       operator                        response on L = I - A_hat
=========  ==============================  ==========================
low        I + A_hat                       2 - lam
high       I - A_hat                       lam
mid        (I - A_hat)(I + A_hat)          lam (2 - lam)
mid_alpha  (alpha I - A_hat)(I + A_hat)    (alpha - 1 + lam)(2 - lam)
=========  ==============================  ==========================
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .exceptions import DataError
from .graph import Graph, normalized_adjacency
from .spectral import FilterSpec
from .validation import check_features, check_graph

__all__ = [
    "FilteredSignal",
    "GraphFilter",
    "apply_filter",
    "pair_distance_under_filter",
    "theoretic_rate",
    "SpectralFilter",
]


class GraphFilter:
    """A filter bound to one graph; applies ``F @ X`` with sparse products.

    Building it once and reusing it avoids renormalizing the adjacency on
    every call, which matters inside a training loop.
    """

    def __init__(self, spec: FilterSpec, g: Graph, with_self_loops: bool = False):
        self.spec = spec
        self.graph = g
        self.with_self_loops = with_self_loops
        self.a_hat: sp.csr_matrix = normalized_adjacency(g, with_self_loops).matrix

    @property
    def n(self) -> int:
        return self.a_hat.shape[0]

    def __call__(self, x: np.ndarray) -> np.ndarray:
        a = self.a_hat
        kind = self.spec.kind
        if kind == "low":
            return x + a @ x
        if kind == "high":
            return x - a @ x
        t = x + a @ x
        alpha = 1.0 if kind == "mid" else self.spec.alpha
        return alpha * t - a @ t

    # the operator is symmetric, so F^T = F for backpropagation
    rmatmul = __call__

    def toarray(self) -> np.ndarray:
        return self(np.eye(self.n))


@dataclass(frozen=True, eq=False)
class FilteredSignal:
    values: np.ndarray
    spec: FilterSpec
    graph_fingerprint: str

    @property
    def shape(self):
        return self.values.shape


def apply_filter(spec: FilterSpec, g: Graph, x, with_self_loops: bool = False) -> FilteredSignal:
    """Filter node signals ``x`` (``n`` or ``n x f``) on graph ``g``."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] != g.n:
        raise DataError(f"signal has {x.shape[0]} rows, graph has {g.n} nodes")
    y = GraphFilter(spec, g, with_self_loops)(x)
    if not np.isfinite(y).all():
        raise DataError("filtered signal has non-finite entries")
    return FilteredSignal(y, spec, g.fingerprint())


def _check_degrees(d_u, d_v, common: Sequence[float]) -> np.ndarray:
    if d_u < 1 or d_v < 1:
        raise ValueError(f"endpoint degrees must be >= 1, got {d_u}, {d_v}")
    common = np.asarray(common, dtype=np.float64).ravel()
    if common.size and common.min() < 2:
        raise ValueError("a common neighbour has degree >= 2 by construction")
    return common


def pair_distance_under_filter(kind: str, h_u, h_v, d_u: float, d_v: float, common_neighbor_degrees=()) -> float:
    """Distance of a connected pair after one low-, high- or mid-pass step.

    With ``D = ||h_u - h_v||`` and ``s = 1 / sqrt(d_u d_v)``: low gives
    ``(1 - s) D``, high ``(1 + s) D``, and mid ``(1 + s * sum_t 1/d_t) D``
    over the common neighbours ``t`` (just ``D`` when there are none).
    """
    common = _check_degrees(d_u, d_v, common_neighbor_degrees)
    dist = float(np.linalg.norm(np.asarray(h_u, dtype=np.float64) - np.asarray(h_v, dtype=np.float64)))
    s = 1.0 / np.sqrt(d_u * d_v)
    if kind == "low":
        return (1.0 - s) * dist
    if kind == "high":
        return (1.0 + s) * dist
    if kind == "mid":
        if common.size == 0:
            return dist
        return (1.0 + s * float(np.sum(1.0 / common))) * dist
    raise ValueError(f"kind must be 'low', 'high' or 'mid', got {kind!r}")


def theoretic_rate(kind: str, d: float, D: float, common_neighbor_degrees=()) -> float:
    """``|dD_filter / dd|`` with ``d = d_u d_v``.

    Low and high: ``d^{-3/2} D / 2``; mid: the same times ``sum_t 1/d_t``,
    or 0 without common neighbours.
    """
    if d <= 0:
        raise ValueError(f"degree product must be positive, got {d}")
    if D < 0:
        raise ValueError(f"distance must be non-negative, got {D}")
    common = np.asarray(common_neighbor_degrees, dtype=np.float64).ravel()
    base = 0.5 * d**-1.5 * D
    if kind in ("low", "high"):
        return base
    if kind == "mid":
        return base * float(np.sum(1.0 / common)) if common.size else 0.0
    raise ValueError(f"kind must be 'low', 'high' or 'mid', got {kind!r}")


class SpectralFilter(TransformerMixin, BaseEstimator):
    """Scikit-learn transformer that filters node features over a fixed graph.

    Parameters
    ----------
    kind : {'low', 'high', 'mid', 'mid_alpha'}, default='mid_alpha'
    alpha : float, default=1.0
        Used by ``mid_alpha`` only.
    self_loops : bool, default=False
        Normalize ``A + I`` instead of ``A``.

    Examples
    --------
    >>> from midgcn.graph import Graph
    >>> g = Graph.from_edges(3, [(0, 1), (1, 2)])
    >>> SpectralFilter(kind="low").fit([[1.0], [0.0], [0.0]], graph=g).transform([[1.0], [0.0], [0.0]]).ravel().round(3)
    array([1.   , 0.707, 0.   ])
    """

    def __init__(self, kind="mid_alpha", alpha=1.0, self_loops=False):
        self.kind = kind
        self.alpha = alpha
        self.self_loops = self_loops

    def fit(self, X, y=None, graph=None):
        if graph is None:
            raise TypeError("SpectralFilter.fit requires graph=")
        self.graph_ = check_graph(graph)
        check_features(X, n=self.graph_.n)
        alpha = 1.0 if self.kind == "mid" else self.alpha
        self.filter_ = GraphFilter(FilterSpec(self.kind, alpha), self.graph_, self.self_loops)
        self.n_features_in_ = np.asarray(X).shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "filter_")
        X = check_features(X, n=self.graph_.n)
        return self.filter_(X)
