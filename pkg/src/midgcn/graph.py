"""Graph, feature and label containers plus normalized operator construction.

All containers are immutable after construction: the arrays they hold are
marked read-only, and every transformation returns a new object.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, NamedTuple, Sequence

import numpy as np
import scipy.sparse as sp

from .exceptions import DataError, PerturbationError

logger = logging.getLogger(__name__)

__all__ = [
    "Graph",
    "NodeFeatures",
    "Labels",
    "Split",
    "NormalizedOperator",
    "EdgeOp",
    "EdgePerturbation",
    "normalized_adjacency",
    "laplacian",
    "random_split",
    "apply_perturbation",
]

INSERT = "insert"
DELETE = "delete"


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected, unweighted simple graph stored as a symmetric CSR matrix.

    Use :meth:`from_edges` rather than the constructor when starting from an
    edge list; the constructor expects an adjacency that already satisfies the
    invariants (symmetric, 0/1 entries, empty diagonal) and only checks them.
    """

    adjacency: sp.csr_matrix

    def __post_init__(self):
        a = sp.csr_matrix(self.adjacency, dtype=np.float64, copy=True)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DataError(f"adjacency must be square, got shape {a.shape}")
        a.sum_duplicates()
        a.eliminate_zeros()
        a.sort_indices()
        if a.nnz and not np.all(a.data == 1.0):
            raise DataError("adjacency must be unweighted (all stored entries equal to 1)")
        if a.diagonal().any():
            raise DataError("adjacency must not contain self-loops")
        if (a != a.T).nnz:
            raise DataError("adjacency must be symmetric")
        for arr in (a.data, a.indices, a.indptr):
            _freeze(arr)
        object.__setattr__(self, "adjacency", a)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[int]], strict: bool = False) -> "Graph":
        """Build a graph from (u, v) pairs.

        Parameters
        ----------
        n : int
            Number of nodes.
        edges : iterable of pairs
            Node index pairs in ``[0, n)``. Either direction may be listed.
        strict : bool, default=False
            When False the list is symmetrized by union, duplicates are
            collapsed and self-loops dropped. When True self-loops, repeated
            pairs and partially-reversed listings raise :class:`DataError`.
        """
        n = int(n)
        if n < 0:
            raise DataError(f"node count must be non-negative, got {n}")
        arr = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges, dtype=np.int64)
        if arr.size == 0:
            arr = arr.reshape(0, 2)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise DataError("edges must be a sequence of (u, v) pairs")
        if arr.size and (arr.min() < 0 or arr.max() >= n):
            bad = arr[(arr < 0).any(axis=1) | (arr >= n).any(axis=1)][0]
            raise DataError(f"edge {tuple(bad)} has a node index outside [0, {n})")
        loops = arr[:, 0] == arr[:, 1]
        if loops.any():
            if strict:
                raise DataError(f"self-loop on node {arr[loops][0, 0]} in strict mode")
            logger.warning("dropping %d self-loop(s)", int(loops.sum()))
            arr = arr[~loops]
        if strict:
            directed = {(int(u), int(v)) for u, v in arr}
            if len(directed) != len(arr):
                raise DataError("duplicate edge entries in strict mode")
            # a one-direction listing is fine; a partially mirrored one is not
            if any((v, u) in directed for u, v in directed):
                missing = [(u, v) for u, v in directed if (v, u) not in directed]
                if missing:
                    raise DataError(f"asymmetric edge list in strict mode: {missing[0]} has no reverse")
        lo = np.minimum(arr[:, 0], arr[:, 1])
        hi = np.maximum(arr[:, 0], arr[:, 1])
        rows = np.concatenate([lo, hi])
        cols = np.concatenate([hi, lo])
        a = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
        a.sum_duplicates()
        a.data[:] = 1.0
        return cls(a)

    @classmethod
    def empty(cls, n: int) -> "Graph":
        return cls(sp.csr_matrix((n, n)))

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    @property
    def num_edges(self) -> int:
        """Number of undirected edges."""
        return self.adjacency.nnz // 2

    @cached_property
    def degrees(self) -> np.ndarray:
        return _freeze(np.diff(self.adjacency.indptr).astype(np.int64))

    @cached_property
    def edge_array(self) -> np.ndarray:
        """Undirected edges as an ``(m, 2)`` array with ``u < v``, row-major sorted."""
        upper = sp.triu(self.adjacency, k=1, format="coo")
        order = np.lexsort((upper.col, upper.row))
        out = np.column_stack([upper.row[order], upper.col[order]]).astype(np.int64)
        return _freeze(out)

    def neighbors(self, u: int) -> np.ndarray:
        a = self.adjacency
        return a.indices[a.indptr[u]:a.indptr[u + 1]]

    def has_edge(self, u: int, v: int) -> bool:
        nb = self.neighbors(u)
        i = np.searchsorted(nb, v)
        return bool(i < len(nb) and nb[i] == v)

    def edge_set(self) -> set[tuple[int, int]]:
        return {(int(u), int(v)) for u, v in self.edge_array}

    def equals(self, other: "Graph") -> bool:
        """Structural equality (same node count, same edge set)."""
        return self.n == other.n and (self.adjacency != other.adjacency).nnz == 0

    def fingerprint(self) -> str:
        """Short content hash of the structure, stable across processes."""
        h = hashlib.sha256()
        h.update(np.int64(self.n).tobytes())
        h.update(np.ascontiguousarray(self.edge_array).tobytes())
        return h.hexdigest()[:16]

    def to_dense(self) -> np.ndarray:
        return self.adjacency.toarray()

    def __repr__(self):
        return f"Graph(n={self.n}, edges={self.num_edges})"


@dataclass(frozen=True, eq=False)
class NodeFeatures:
    """Dense ``n x f`` real feature matrix."""

    values: np.ndarray

    def __post_init__(self):
        x = np.array(self.values, dtype=np.float64, copy=True)
        if x.ndim != 2:
            raise DataError(f"features must be 2-D, got {x.ndim}-D")
        if x.shape[1] < 1:
            raise DataError("features need at least one column")
        if not np.isfinite(x).all():
            raise DataError("features contain non-finite entries")
        object.__setattr__(self, "values", _freeze(x))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def f(self) -> int:
        return self.values.shape[1]

    @cached_property
    def is_binary(self) -> bool:
        return bool(np.isin(self.values, (0.0, 1.0)).all())

    def row_normalized(self) -> "NodeFeatures":
        """Rows scaled to unit L1 norm; all-zero rows stay zero."""
        s = np.abs(self.values).sum(axis=1, keepdims=True)
        s[s == 0] = 1.0
        return NodeFeatures(self.values / s)


@dataclass(frozen=True, eq=False)
class Labels:
    """Integer class ids in ``[0, n_classes)``."""

    y: np.ndarray
    n_classes: int | None = None

    def __post_init__(self):
        y = np.array(self.y, copy=True)
        if y.ndim != 1:
            raise DataError("labels must be a 1-D vector")
        if y.size and not np.issubdtype(y.dtype, np.integer):
            if not np.all(np.mod(y, 1) == 0):
                raise DataError("labels must be integers")
        y = y.astype(np.int64)
        c = int(y.max()) + 1 if self.n_classes is None and y.size else self.n_classes
        if c is None or c < 2:
            raise DataError(f"need at least two classes, got {c}")
        if y.size and (y.min() < 0 or y.max() >= c):
            raise DataError(f"label ids must lie in [0, {c})")
        object.__setattr__(self, "y", _freeze(y))
        object.__setattr__(self, "n_classes", int(c))

    @property
    def n(self) -> int:
        return len(self.y)


@dataclass(frozen=True, eq=False)
class Split:
    """Disjoint train / validation / test node index sets.

    ``test=None`` marks a split used only for fitting (no held-out score);
    an explicitly empty test set is still an error.
    """

    train: np.ndarray
    val: np.ndarray
    test: np.ndarray | None
    n: int | None = None

    def __post_init__(self):
        parts = []
        for name in ("train", "val", "test"):
            if name == "test" and self.test is None:
                continue
            idx = np.array(getattr(self, name), dtype=np.int64).ravel()
            if idx.size == 0:
                raise DataError(f"{name} index set is empty")
            if len(np.unique(idx)) != idx.size:
                raise DataError(f"{name} index set has repeated entries")
            if idx.min() < 0 or (self.n is not None and idx.max() >= self.n):
                raise DataError(f"{name} index set has entries outside [0, {self.n})")
            object.__setattr__(self, name, _freeze(idx))
            parts.append(idx)
        allidx = np.concatenate(parts)
        if len(np.unique(allidx)) != allidx.size:
            raise DataError("train/val/test index sets overlap")

    def sizes(self) -> tuple[int, int, int]:
        return len(self.train), len(self.val), 0 if self.test is None else len(self.test)


@dataclass(frozen=True, eq=False)
class NormalizedOperator:
    """Symmetric normalized operator: ``adjacency_hat`` or ``laplacian``.

    ``degrees`` are the row sums of the matrix that was normalized (including
    self-loops when present).
    """

    matrix: sp.csr_matrix
    kind: str
    with_self_loops: bool = False
    degrees: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("adjacency_hat", "laplacian"):
            raise ValueError(f"unknown operator kind {self.kind!r}")

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def __matmul__(self, other):
        return self.matrix @ other


def normalized_adjacency(g: Graph, with_self_loops: bool = False) -> NormalizedOperator:
    """Symmetrically normalized adjacency ``D^-1/2 (A [+ I]) D^-1/2``.

    Degrees are taken from the matrix actually normalized, so with self-loops
    every degree grows by one. Isolated nodes get all-zero rows and columns.
    """
    a = g.adjacency
    if with_self_loops:
        a = (a + sp.identity(g.n, format="csr")).tocsr()
    deg = np.asarray(a.sum(axis=1)).ravel()
    inv_sqrt = np.zeros_like(deg)
    nz = deg > 0
    inv_sqrt[nz] = deg[nz] ** -0.5
    d = sp.diags(inv_sqrt)
    m = (d @ a @ d).tocsr()
    m.sort_indices()
    return NormalizedOperator(m, "adjacency_hat", with_self_loops, deg)


def laplacian(g: Graph, with_self_loops: bool = False) -> NormalizedOperator:
    """Normalized Laplacian ``I - A_hat``; an edgeless graph gives the identity."""
    a_hat = normalized_adjacency(g, with_self_loops)
    m = (sp.identity(g.n, format="csr") - a_hat.matrix).tocsr()
    m.sort_indices()
    return NormalizedOperator(m, "laplacian", with_self_loops, a_hat.degrees)


def random_split(labels, fractions: tuple[float, float] = (0.1, 0.1), seed: int = 0) -> Split:
    """Uniformly shuffled train/val/test split.

    ``labels`` may be a :class:`Labels`, a label array or a node count. Train and validation get ``floor(fraction * n)`` nodes each; the rest is test.
    """
    if isinstance(labels, (int, np.integer)):
        n = int(labels)
    else:
        n = labels.n if isinstance(labels, Labels) else len(labels)
    f_train, f_val = (float(f) for f in fractions)
    if f_train <= 0 or f_val <= 0:
        raise DataError("split fractions must be positive")
    if f_train + f_val >= 1:
        raise DataError(f"split fractions must sum to less than 1, got {f_train + f_val}")
    # guard against 0.29 * 100 == 28.999999999999996
    n_train = int(np.floor(f_train * n + 1e-9))
    n_val = int(np.floor(f_val * n + 1e-9))
    if n_train == 0 or n_val == 0 or n - n_train - n_val == 0:
        raise DataError(f"{n} nodes are too few for fractions {fractions}")
    perm = np.random.default_rng(seed).permutation(n)
    return Split(perm[:n_train], perm[n_train:n_train + n_val], perm[n_train + n_val:], n=n)


class EdgeOp(NamedTuple):
    u: int
    v: int
    op: str

    def inverse(self) -> "EdgeOp":
        return EdgeOp(self.u, self.v, DELETE if self.op == INSERT else INSERT)


@dataclass(frozen=True)
class EdgePerturbation:
    """Ordered sequence of single-edge insertions and deletions."""

    ops: tuple[EdgeOp, ...] = field(default_factory=tuple)

    def __post_init__(self):
        ops = []
        for item in self.ops:
            u, v, op = item
            u, v = int(u), int(v)
            if op in ("+", INSERT):
                op = INSERT
            elif op in ("-", DELETE):
                op = DELETE
            else:
                raise PerturbationError(f"unknown edge operation {op!r}")
            if u == v:
                raise PerturbationError(f"self-loop operation on node {u}")
            ops.append(EdgeOp(u, v, op))
        object.__setattr__(self, "ops", tuple(ops))

    def __len__(self) -> int:
        return len(self.ops)

    def __iter__(self) -> Iterator[EdgeOp]:
        return iter(self.ops)

    @property
    def n_inserts(self) -> int:
        return sum(op.op == INSERT for op in self.ops)

    @property
    def n_deletes(self) -> int:
        return sum(op.op == DELETE for op in self.ops)

    def inverse(self) -> "EdgePerturbation":
        """Operations that undo this perturbation when applied afterwards."""
        return EdgePerturbation(tuple(op.inverse() for op in reversed(self.ops)))

    def __add__(self, other: "EdgePerturbation") -> "EdgePerturbation":
        return EdgePerturbation(self.ops + other.ops)


def apply_perturbation(g: Graph, p: EdgePerturbation) -> Graph:
    """Apply ``p`` in order and return a new graph; ``g`` is left untouched."""
    edges = g.edge_set()
    for i, (u, v, op) in enumerate(p):
        if not (0 <= u < g.n and 0 <= v < g.n):
            raise PerturbationError(f"op {i}: node index outside [0, {g.n})")
        key = (u, v) if u < v else (v, u)
        if op == INSERT:
            if key in edges:
                raise PerturbationError(f"op {i}: edge {key} already present")
            edges.add(key)
        else:
            if key not in edges:
                raise PerturbationError(f"op {i}: edge {key} not present")
            edges.remove(key)
    return Graph.from_edges(g.n, sorted(edges))
