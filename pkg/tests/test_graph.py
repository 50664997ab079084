import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import complete_graph, path_graph, random_graph
from midgcn.exceptions import DataError, PerturbationError
from midgcn.graph import (
    DELETE,
    INSERT,
    EdgeOp,
    EdgePerturbation,
    Graph,
    Labels,
    NodeFeatures,
    Split,
    apply_perturbation,
    laplacian,
    normalized_adjacency,
    random_split,
)


@st.composite
def graphs(draw, max_n=30):
    n = draw(st.integers(1, max_n))
    pairs = draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=3 * n))
    return Graph.from_edges(n, pairs)


class TestGraphConstruction:
    def test_path_degrees(self):
        g = Graph.from_edges(3, [(0, 1), (1, 2)])
        assert g.num_edges == 2
        assert g.degrees.tolist() == [1, 2, 1]

    def test_both_directions_collapse(self):
        g = Graph.from_edges(2, [(0, 1), (1, 0)])
        assert g.num_edges == 1

    def test_duplicates_collapse(self):
        g = Graph.from_edges(3, [(0, 1), (0, 1), (2, 1)])
        assert g.edge_set() == {(0, 1), (1, 2)}

    def test_self_loops_dropped(self):
        g = Graph.from_edges(2, [(0, 0), (0, 1)])
        assert g.num_edges == 1
        assert g.adjacency.diagonal().sum() == 0

    def test_strict_rejects_self_loop(self):
        with pytest.raises(DataError):
            Graph.from_edges(2, [(0, 0)], strict=True)

    def test_strict_rejects_partial_mirror(self):
        with pytest.raises(DataError):
            Graph.from_edges(3, [(0, 1), (1, 0), (1, 2)], strict=True)

    def test_strict_accepts_one_direction(self):
        assert Graph.from_edges(3, [(0, 1), (1, 2)], strict=True).num_edges == 2

    def test_out_of_range(self):
        with pytest.raises(DataError, match="outside"):
            Graph.from_edges(2, [(0, 2)])

    def test_rejects_asymmetric_adjacency(self):
        import scipy.sparse as sp

        with pytest.raises(DataError, match="symmetric"):
            Graph(sp.csr_matrix(np.array([[0, 1], [0, 0]])))

    def test_rejects_weights(self):
        import scipy.sparse as sp

        with pytest.raises(DataError, match="unweighted"):
            Graph(sp.csr_matrix(np.array([[0, 2.0], [2.0, 0]])))

    def test_immutable(self):
        g = path_graph(3)
        with pytest.raises(ValueError):
            g.adjacency.data[0] = 5.0
        with pytest.raises(ValueError):
            g.degrees[0] = 9

    def test_fingerprint_is_structural(self):
        assert path_graph(4).fingerprint() == Graph.from_edges(4, [(3, 2), (1, 2), (0, 1)]).fingerprint()
        assert path_graph(4).fingerprint() != complete_graph(4).fingerprint()

    @given(graphs())
    @settings(max_examples=60, deadline=None)
    def test_invariants(self, g):
        a = g.to_dense()
        assert np.array_equal(a, a.T)
        assert not np.diag(a).any()
        assert np.array_equal(a.sum(axis=1), g.degrees)
        assert set(np.unique(a)) <= {0.0, 1.0}


class TestNormalizedOperators:
    def test_triangle(self):
        a = normalized_adjacency(complete_graph(3)).toarray()
        expected = np.full((3, 3), 0.5) - 0.5 * np.eye(3)
        np.testing.assert_allclose(a, expected)

    def test_single_edge(self):
        a = normalized_adjacency(Graph.from_edges(2, [(0, 1)])).toarray()
        np.testing.assert_allclose(a, [[0, 1], [1, 0]])

    def test_path(self):
        a = normalized_adjacency(path_graph(3)).toarray()
        assert a[0, 1] == pytest.approx(1 / np.sqrt(2))

    def test_laplacian_triangle(self):
        lap = laplacian(complete_graph(3)).toarray()
        np.testing.assert_allclose(np.diag(lap), 1.0)
        np.testing.assert_allclose(lap[~np.eye(3, dtype=bool)], -0.5)

    def test_edgeless_laplacian_is_identity(self):
        np.testing.assert_array_equal(laplacian(Graph.empty(4)).toarray(), np.eye(4))

    def test_path_laplacian_spectrum(self):
        lam = np.linalg.eigvalsh(laplacian(path_graph(3)).toarray())
        np.testing.assert_allclose(lam, [0, 1, 2], atol=1e-12)

    def test_isolated_node_rows_zero(self):
        g = Graph.from_edges(3, [(0, 1)])
        a = normalized_adjacency(g).toarray()
        assert not a[2].any() and not a[:, 2].any()

    def test_self_loops_change_degrees(self):
        a = normalized_adjacency(Graph.from_edges(2, [(0, 1)]), with_self_loops=True).toarray()
        np.testing.assert_allclose(a, np.full((2, 2), 0.5))

    @given(graphs())
    @settings(max_examples=60, deadline=None)
    def test_l_plus_a_is_identity(self, g):
        total = laplacian(g).toarray() + normalized_adjacency(g).toarray()
        np.testing.assert_allclose(total, np.eye(g.n), atol=1e-12)

    def test_spectral_bounds_exhaustive(self, rng):
        for n in (2, 5, 20, 60, 200):
            for p in (0.05, 0.3):
                g = random_graph(n, p, rng)
                lam_a = np.linalg.eigvalsh(normalized_adjacency(g).toarray())
                lam_l = np.linalg.eigvalsh(laplacian(g).toarray())
                assert lam_a.min() >= -1 - 1e-10 and lam_a.max() <= 1 + 1e-10
                assert lam_l.min() >= -1e-10 and lam_l.max() <= 2 + 1e-10


class TestFeaturesLabels:
    def test_binary_flag(self):
        assert NodeFeatures([[0, 1], [1, 0]]).is_binary
        assert not NodeFeatures([[0, 0.5]]).is_binary

    def test_rejects_nan(self):
        with pytest.raises(DataError):
            NodeFeatures([[np.nan]])

    def test_row_normalized(self):
        x = NodeFeatures([[1, 3], [0, 0]]).row_normalized().values
        np.testing.assert_allclose(x, [[0.25, 0.75], [0, 0]])

    def test_labels_need_two_classes(self):
        with pytest.raises(DataError):
            Labels([0, 0, 0])
        assert Labels([0, 0], n_classes=3).n_classes == 3

    def test_labels_range(self):
        with pytest.raises(DataError):
            Labels([0, 3], n_classes=3)


class TestSplit:
    def test_cora_sizes(self):
        assert random_split(2485, (0.1, 0.1), seed=0).sizes() == (248, 248, 1989)

    def test_small_sizes(self):
        assert random_split(10, (0.5, 0.4), seed=3).sizes() == (5, 4, 1)

    def test_deterministic(self):
        a, b = random_split(100, seed=7), random_split(100, seed=7)
        assert all(np.array_equal(getattr(a, k), getattr(b, k)) for k in ("train", "val", "test"))

    def test_partition(self):
        s = random_split(50, (0.2, 0.2), seed=1)
        assert sorted(np.concatenate([s.train, s.val, s.test]).tolist()) == list(range(50))

    def test_accepts_label_array(self):
        assert random_split(np.zeros(40, dtype=int), (0.1, 0.1)).sizes() == (4, 4, 32)

    def test_fraction_sum(self):
        with pytest.raises(DataError):
            random_split(10, (0.6, 0.4))

    def test_overlap_rejected(self):
        with pytest.raises(DataError, match="overlap"):
            Split([0, 1], [1], [2])

    def test_empty_rejected(self):
        with pytest.raises(DataError, match="empty"):
            Split([0], [], [2])


class TestPerturbation:
    def test_k3_minus_edge(self):
        g = apply_perturbation(complete_graph(3), EdgePerturbation(((0, 1, DELETE),)))
        assert g.equals(Graph.from_edges(3, [(0, 2), (2, 1)]))

    def test_empty_identity(self):
        g = path_graph(4)
        assert apply_perturbation(g, EdgePerturbation()).equals(g)

    def test_path_plus_edge(self):
        assert apply_perturbation(path_graph(3), EdgePerturbation(((0, 2, "+"),))).equals(complete_graph(3))

    def test_original_untouched(self):
        g = path_graph(3)
        apply_perturbation(g, EdgePerturbation(((0, 2, INSERT),)))
        assert g.num_edges == 2

    @pytest.mark.parametrize(
        "op, match",
        [((0, 1, INSERT), "already present"), ((0, 2, DELETE), "not present"), ((0, 9, INSERT), "outside")],
    )
    def test_invalid_ops(self, op, match):
        with pytest.raises(PerturbationError, match=match):
            apply_perturbation(path_graph(3), EdgePerturbation((op,)))

    def test_self_loop_op(self):
        with pytest.raises(PerturbationError):
            EdgePerturbation(((1, 1, INSERT),))

    def test_unknown_op(self):
        with pytest.raises(PerturbationError):
            EdgePerturbation(((0, 1, "flip"),))

    def test_inverse_order(self):
        p = EdgePerturbation(((0, 1, INSERT), (1, 2, DELETE)))
        assert p.inverse().ops == (EdgeOp(1, 2, INSERT), EdgeOp(0, 1, DELETE))

    @given(graphs(max_n=15), st.data())
    @settings(max_examples=50, deadline=None)
    def test_inverse_round_trip(self, g, data):
        edges = g.edge_set()
        ops = []
        for _ in range(data.draw(st.integers(0, 8))):
            if g.n < 2:
                break
            u = data.draw(st.integers(0, g.n - 1))
            v = data.draw(st.integers(0, g.n - 1).filter(lambda x: x != u))
            key = (min(u, v), max(u, v))
            if key in edges:
                edges.discard(key)
                ops.append((u, v, DELETE))
            else:
                edges.add(key)
                ops.append((u, v, INSERT))
        p = EdgePerturbation(tuple(ops))
        h = apply_perturbation(g, p)
        assert h.edge_set() == edges
        assert apply_perturbation(h, p.inverse()).equals(g)
