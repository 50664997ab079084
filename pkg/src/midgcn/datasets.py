"""Conversion of public citation datasets into the manifest format.

Two raw layouts are supported: the LINQS ``cora.content`` / ``cora.cites``
pair and the Planetoid ``ind.<name>.*`` pickles. Both are reduced to their
largest connected component, which is the desk-scale variant used by the
robustness literature (Cora: 2485 nodes, 5069 edges).
"""

from __future__ import annotations

import pickle
from pathlib import Path

import numpy as np
import scipy.sparse as sp
import yaml
from scipy.sparse.csgraph import connected_components

from .exceptions import DataError
from .graph import Graph
from .io import write_edge_list, write_features, write_labels

__all__ = ["largest_connected_component", "convert_linqs", "convert_planetoid", "write_dataset"]


def largest_connected_component(g: Graph) -> np.ndarray:
    """Sorted node indices of the largest connected component."""
    if g.n == 0:
        return np.zeros(0, dtype=np.int64)
    _, comp = connected_components(g.adjacency, directed=False)
    big = np.argmax(np.bincount(comp))
    return np.flatnonzero(comp == big)


def _induced(g: Graph, keep: np.ndarray) -> Graph:
    return Graph(g.adjacency[keep][:, keep])


def write_dataset(out_dir, name: str, g: Graph, x: np.ndarray, y: np.ndarray) -> Path:
    """Write edges, features, labels and a manifest; returns the manifest path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_edge_list(g, out / "edges.txt")
    write_features(x, out / "features.txt")
    write_labels(y, out / "labels.txt")
    manifest = {
        "name": name,
        "n": int(g.n),
        "f": int(x.shape[1]),
        "c": int(y.max()) + 1,
        "edges": "edges.txt",
        "features": "features.txt",
        "labels": "labels.txt",
    }
    path = out / "manifest.yaml"
    path.write_text(yaml.safe_dump(manifest, sort_keys=False))
    return path


def convert_linqs(content_path, cites_path, out_dir, name: str = "cora", lcc: bool = True) -> Path:
    """Convert a LINQS ``.content`` / ``.cites`` pair.

    Class ids follow the sorted order of the class strings. Citations naming
    papers absent from the content file are skipped.
    """
    rows = [line.split() for line in Path(content_path).read_text().splitlines() if line.strip()]
    if not rows:
        raise DataError(f"{content_path}: no rows")
    ids = {r[0]: i for i, r in enumerate(rows)}
    x = np.array([[float(v) for v in r[1:-1]] for r in rows])
    classes = sorted({r[-1] for r in rows})
    y = np.array([classes.index(r[-1]) for r in rows], dtype=np.int64)
    edges = []
    for line in Path(cites_path).read_text().splitlines():
        parts = line.split()
        if len(parts) == 2 and parts[0] in ids and parts[1] in ids:
            edges.append((ids[parts[0]], ids[parts[1]]))
    g = Graph.from_edges(len(rows), edges)
    if lcc:
        keep = largest_connected_component(g)
        g, x, y = _induced(g, keep), x[keep], y[keep]
    return write_dataset(out_dir, name, g, x, y)


def _load_pickle(path: Path):
    with open(path, "rb") as fh:
        return pickle.load(fh, encoding="latin1")


def convert_planetoid(prefix, out_dir, name: str | None = None, lcc: bool = True) -> Path:
    """Convert Planetoid ``ind.<name>.{x,y,tx,ty,allx,ally,graph,test.index}`` files.

    ``prefix`` is the common path stem, e.g. ``.../ind.citeseer``. Test nodes
    missing from ``tx`` (a known Citeseer quirk) have neither features nor a
    label and are removed before the component reduction.

    Only open pickles you trust: the Planetoid format is a pickle.
    """
    prefix = str(prefix)
    name = name or prefix.rsplit(".", 1)[-1]
    allx, ally, tx, ty, graph = (
        _load_pickle(Path(f"{prefix}.{s}")) for s in ("allx", "ally", "tx", "ty", "graph")
    )
    test_idx = np.array([int(v) for v in Path(f"{prefix}.test.index").read_text().split()])
    test_sorted = np.sort(test_idx)
    n = max(len(graph), allx.shape[0] + test_sorted.max() - test_sorted.min() + 1)
    full_tx = sp.lil_matrix((test_sorted.max() - test_sorted.min() + 1, tx.shape[1]))
    full_ty = np.zeros((full_tx.shape[0], ty.shape[1]))
    full_tx[test_sorted - test_sorted.min(), :] = tx
    full_ty[test_sorted - test_sorted.min(), :] = ty
    feats = sp.vstack([sp.csr_matrix(allx), full_tx.tocsr()]).tolil()
    onehot = np.vstack([ally, full_ty])
    feats[test_idx, :] = feats[test_sorted, :]
    onehot[test_idx, :] = onehot[test_sorted, :]
    x = feats.toarray()
    if x.shape[0] < n:
        x = np.vstack([x, np.zeros((n - x.shape[0], x.shape[1]))])
        onehot = np.vstack([onehot, np.zeros((n - onehot.shape[0], onehot.shape[1]))])
    edges = [(u, v) for u, nbrs in graph.items() for v in nbrs]
    labelled = np.flatnonzero(onehot.sum(axis=1) > 0)
    g = _induced(Graph.from_edges(n, edges), labelled)
    x, y = x[labelled], onehot[labelled].argmax(axis=1)
    if lcc:
        keep = largest_connected_component(g)
        g, x, y = _induced(g, keep), x[keep], y[keep]
    return write_dataset(out_dir, name, g, x, y)
