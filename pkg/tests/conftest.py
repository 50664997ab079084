from pathlib import Path

import numpy as np
import pytest

from midgcn.graph import Graph
from midgcn.io import load_dataset

DATA = Path(__file__).resolve().parents[1] / "data"


def path_graph(n):
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def complete_graph(n):
    return Graph.from_edges(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def ring_graph(n):
    return Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def star_graph(n_leaves):
    return Graph.from_edges(n_leaves + 1, [(0, i) for i in range(1, n_leaves + 1)])


def random_graph(n, p, rng):
    iu = np.triu_indices(n, 1)
    keep = rng.random(len(iu[0])) < p
    return Graph.from_edges(n, np.column_stack([iu[0][keep], iu[1][keep]]))


def two_cluster(n_per=10, p_in=0.5, p_out=0.02, seed=0):
    """Two dense communities with a few cross edges; labels are the community ids."""
    rng = np.random.default_rng(seed)
    n = 2 * n_per
    y = np.repeat([0, 1], n_per)
    edges = [
        (i, j)
        for i in range(n)
        for j in range(i + 1, n)
        if rng.random() < (p_in if y[i] == y[j] else p_out)
    ]
    return Graph.from_edges(n, edges), y


def _load(name):
    manifest = DATA / name / "manifest.yaml"
    if not manifest.is_file():
        pytest.skip(f"{name} data not prepared (run scripts/prepare_datasets.py)")
    return load_dataset(manifest)


@pytest.fixture(scope="session")
def cora():
    return _load("cora")


@pytest.fixture(scope="session")
def citeseer():
    return _load("citeseer")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
