"""Structural and feature attack generators.

Every structural generator returns an :class:`~midgcn.graph.EdgePerturbation`
valid against its input graph. Each node pair is touched at most once, so a
perturbation of ``k`` operations changes exactly ``k`` undirected edges and
the perturbation rate is ``k / |E_clean|``. All generators are pure functions
of their inputs and ``seed``.
"""

from __future__ import annotations

import numpy as np

from .exceptions import DataError, PerturbationError
from .graph import DELETE, INSERT, EdgeOp, EdgePerturbation, Graph, Labels, NodeFeatures
from .io import load_perturbed
from .validation import check_graph, check_interval, check_labels, check_positive_int

__all__ = [
    "random_flip",
    "dice_attack",
    "targeted_perturb",
    "feature_flip",
    "diff_edges",
    "homophily",
    "neighborhood_agreement",
    "load_perturbed",
]

# rejection sampling gives up after this many misses and enumerates instead
_MAX_REJECTIONS = 1000


def _n_ops(g: Graph, rate: float) -> int:
    check_interval(rate, "rate", 0.0, 1.0)
    return int(round(rate * g.num_edges))


class _PairSampler:
    """Draws absent node pairs ``(a, b)``, ``a < b``, never touched before.

    ``accept(a, b)`` restricts the candidates (e.g. to inter-class pairs);
    ``capacity`` is the number of admissible pairs absent from the clean
    graph, used to detect exhaustion without enumerating.
    """

    def __init__(self, n, clean_edges, touched, rng, accept=None, capacity=None):
        self.n = n
        self.clean = clean_edges
        self.touched = touched
        self.rng = rng
        self.accept = accept or (lambda a, b: True)
        self.remaining = n * (n - 1) // 2 - len(clean_edges) if capacity is None else capacity

    def _free(self, a, b):
        return a != b and (a, b) not in self.clean and (a, b) not in self.touched and self.accept(a, b)

    def draw(self):
        if self.remaining <= 0:
            return None
        for _ in range(_MAX_REJECTIONS):
            u, v = self.rng.integers(self.n, size=2)
            a, b = (int(u), int(v)) if u < v else (int(v), int(u))
            if self._free(a, b):
                self.remaining -= 1
                return a, b
        free = [(a, b) for a in range(self.n) for b in range(a + 1, self.n) if self._free(a, b)]
        if not free:
            self.remaining = 0
            return None
        self.remaining = len(free) - 1
        return free[self.rng.integers(len(free))]


def random_flip(g: Graph, rate: float, seed: int = 0) -> EdgePerturbation:
    """``round(rate * |E|)`` operations, each an insert or delete with probability 1/2.

    Deletions pick a uniform clean edge; insertions a uniform absent pair.
    When one kind is exhausted the other is used.

    Raises
    ------
    PerturbationError
        If the graph cannot host the requested number of changes.
    """
    check_graph(g)
    k = _n_ops(g, rate)
    rng = np.random.default_rng(seed)
    clean = g.edge_set()
    deletable = [tuple(e) for e in g.edge_array.tolist()]
    rng.shuffle(deletable)
    touched: set[tuple[int, int]] = set()
    sampler = _PairSampler(g.n, clean, touched, rng)
    ops = []
    while len(ops) < k:
        want_delete = rng.random() < 0.5
        if want_delete and deletable:
            pair, op = deletable.pop(), DELETE
        else:
            pair, op = sampler.draw(), INSERT
            if pair is None:
                if not deletable:
                    raise PerturbationError(f"graph too small for {k} edge flips")
                pair, op = deletable.pop(), DELETE
        touched.add(pair)
        ops.append(EdgeOp(pair[0], pair[1], op))
    return EdgePerturbation(tuple(ops))


def dice_attack(g: Graph, labels, rate: float, seed: int = 0) -> EdgePerturbation:
    """Delete intra-class edges and connect inter-class pairs.

    Each of the ``round(rate * |E|)`` operations deletes a uniform intra-class
    clean edge with probability 1/2 and otherwise inserts a uniform absent
    inter-class pair, falling back to the other kind when one pool is empty.

    Raises
    ------
    PerturbationError
        If both pools run dry before ``k`` operations.
    """
    check_graph(g)
    y = check_labels(labels, n=g.n)
    k = _n_ops(g, rate)
    rng = np.random.default_rng(seed)
    clean = g.edge_set()
    e = g.edge_array
    intra = e[y[e[:, 0]] == y[e[:, 1]]] if len(e) else e
    deletable = [tuple(p) for p in intra.tolist()]
    rng.shuffle(deletable)
    counts = np.bincount(y)
    inter_pairs = (int(counts.sum()) ** 2 - int(np.sum(counts.astype(np.int64) ** 2))) // 2
    inter_edges = len(e) - len(intra)
    touched: set[tuple[int, int]] = set()
    sampler = _PairSampler(
        g.n, clean, touched, rng, accept=lambda a, b: y[a] != y[b], capacity=inter_pairs - inter_edges
    )
    ops = []
    while len(ops) < k:
        if rng.random() < 0.5 and deletable:
            pair, op = deletable.pop(), DELETE
        else:
            pair, op = sampler.draw(), INSERT
            if pair is None:
                if not deletable:
                    raise PerturbationError(f"both DICE pools exhausted after {len(ops)} of {k} operations")
                pair, op = deletable.pop(), DELETE
        touched.add(pair)
        ops.append(EdgeOp(pair[0], pair[1], op))
    return EdgePerturbation(tuple(ops))


def neighborhood_agreement(g: Graph, labels, target: int) -> float:
    """Fraction of ``target``'s neighbours sharing its label (NaN if isolated)."""
    y = check_labels(labels, n=g.n)
    nbrs = g.neighbors(target)
    if nbrs.size == 0:
        return float("nan")
    return float(np.mean(y[nbrs] == y[target]))


def targeted_perturb(g: Graph, labels, target: int, n_perturbations: int, seed: int = 0) -> EdgePerturbation:
    """Greedy label-disagreement attack on the neighbourhood of one node.

    Insertions of an edge from ``target`` to a uniform node of another class
    are preferred while such candidates remain; afterwards a uniform
    same-class incident edge is deleted.

    Raises
    ------
    ConfigError
        If ``n_perturbations < 1``.
    PerturbationError
        If the target runs out of modifiable incident structure.
    """
    check_graph(g)
    y = check_labels(labels, n=g.n)
    n_perturbations = check_positive_int(n_perturbations, "n_perturbations")
    if not 0 <= target < g.n:
        raise DataError(f"target {target} outside [0, {g.n})")
    rng = np.random.default_rng(seed)
    nbrs = set(g.neighbors(target).tolist())
    inserts = [int(v) for v in np.flatnonzero(y != y[target]) if v not in nbrs]
    deletes = [int(v) for v in sorted(nbrs) if y[v] == y[target]]
    rng.shuffle(inserts)
    rng.shuffle(deletes)
    ops = []
    for i in range(n_perturbations):
        if inserts:
            ops.append(EdgeOp(target, inserts.pop(), INSERT))
        elif deletes:
            ops.append(EdgeOp(target, deletes.pop(), DELETE))
        else:
            raise PerturbationError(f"target {target} has no modifiable incident structure after {i} operations")
    return EdgePerturbation(tuple(ops))


def feature_flip(X, n_flips: int, seed: int = 0) -> NodeFeatures:
    """Toggle ``n_flips`` distinct (node, dimension) entries of a binary matrix."""
    feats = X if isinstance(X, NodeFeatures) else NodeFeatures(X)
    if not feats.is_binary:
        raise DataError("feature_flip needs binary features")
    n, f = feats.values.shape
    n_flips = check_positive_int(n_flips, "n_flips", minimum=0)
    if n_flips > n * f:
        raise DataError(f"cannot flip {n_flips} of {n * f} entries")
    out = feats.values.copy()
    pos = np.random.default_rng(seed).choice(n * f, size=n_flips, replace=False)
    flat = out.reshape(-1)
    flat[pos] = 1.0 - flat[pos]
    return NodeFeatures(out)


def diff_edges(g_a: Graph, g_b: Graph) -> EdgePerturbation:
    """Operations turning ``g_a`` into ``g_b``: deletions first, then insertions, each sorted."""
    if g_a.n != g_b.n:
        raise DataError(f"node counts differ: {g_a.n} vs {g_b.n}")
    ea, eb = g_a.edge_set(), g_b.edge_set()
    ops = [EdgeOp(u, v, DELETE) for u, v in sorted(ea - eb)]
    ops += [EdgeOp(u, v, INSERT) for u, v in sorted(eb - ea)]
    return EdgePerturbation(tuple(ops))


def homophily(g: Graph, labels) -> float:
    """Fraction of edges whose endpoints share a label (NaN for an edgeless graph)."""
    y = labels.y if isinstance(labels, Labels) else check_labels(labels, n=g.n)
    e = g.edge_array
    if len(e) == 0:
        return float("nan")
    return float(np.mean(y[e[:, 0]] == y[e[:, 1]]))
