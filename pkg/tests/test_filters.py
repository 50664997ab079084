import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from conftest import complete_graph, path_graph, random_graph
from midgcn.exceptions import DataError
from midgcn.filters import GraphFilter, SpectralFilter, apply_filter, pair_distance_under_filter, theoretic_rate
from midgcn.graph import Graph, laplacian
from midgcn.spectral import FilterSpec, eig, filter_response

SPECS = [FilterSpec("low"), FilterSpec("high"), FilterSpec("mid")] + [
    FilterSpec("mid_alpha", a) for a in (0.2, 0.5, 1.0, 2.0)
]


def spectral_path(spec, g, x):
    dec = eig(laplacian(g))
    u = dec.eigenvectors
    lam = np.clip(dec.eigenvalues, 0.0, 2.0)
    return u @ (filter_response(spec, lam)[:, None] * (u.T @ x))


class TestApplyFilter:
    @pytest.mark.parametrize("spec", SPECS, ids=str)
    def test_edgeless_identity_except_alpha(self, spec, rng):
        x = rng.random((5, 3))
        y = apply_filter(spec, Graph.empty(5), x).values
        scale = spec.alpha if spec.kind == "mid_alpha" else 1.0
        np.testing.assert_allclose(y, scale * x)

    def test_k3_mid_spectral(self, rng):
        x = rng.normal(size=(3, 4))
        g = complete_graph(3)
        np.testing.assert_allclose(apply_filter(FilterSpec("mid"), g, x).values, spectral_path(FilterSpec("mid"), g, x), atol=1e-10)

    @pytest.mark.parametrize("spec", SPECS, ids=str)
    def test_spectral_equivalence(self, spec, rng):
        for _ in range(5):
            g = random_graph(int(rng.integers(2, 60)), 0.15, rng)
            x = rng.normal(size=(g.n, 3))
            got = apply_filter(spec, g, x).values
            assert np.abs(got - spectral_path(spec, g, x)).max() < 1e-9

    @pytest.mark.parametrize("spec", SPECS, ids=str)
    def test_linearity(self, spec, rng):
        g = random_graph(30, 0.2, rng)
        x, y = rng.normal(size=(30, 2)), rng.normal(size=(30, 2))
        lhs = apply_filter(spec, g, 2.5 * x - 0.5 * y).values
        rhs = 2.5 * apply_filter(spec, g, x).values - 0.5 * apply_filter(spec, g, y).values
        np.testing.assert_allclose(lhs, rhs, atol=1e-10)

    def test_vector_signal(self):
        y = apply_filter(FilterSpec("low"), path_graph(3), [1.0, 0.0, 0.0])
        assert y.shape == (3,)

    def test_provenance(self):
        g = path_graph(3)
        out = apply_filter(FilterSpec("high"), g, np.ones((3, 1)))
        assert out.spec == FilterSpec("high") and out.graph_fingerprint == g.fingerprint()

    def test_shape_mismatch(self):
        with pytest.raises(DataError):
            apply_filter(FilterSpec("low"), path_graph(3), np.ones((4, 2)))

    def test_operator_symmetric(self, rng):
        f = GraphFilter(FilterSpec("mid_alpha", 0.3), random_graph(15, 0.3, rng)).toarray()
        np.testing.assert_allclose(f, f.T, atol=1e-14)

    def test_self_loops_low_is_gcn_propagation(self):
        g = Graph.from_edges(2, [(0, 1)])
        f = GraphFilter(FilterSpec("low"), g, with_self_loops=True).toarray()
        np.testing.assert_allclose(f, np.eye(2) + 0.5)


class TestSpectralFilterEstimator:
    def test_fit_transform(self, rng):
        g = random_graph(10, 0.3, rng)
        x = rng.random((10, 3))
        out = SpectralFilter(kind="mid_alpha", alpha=0.5).fit(x, graph=g).transform(x)
        np.testing.assert_allclose(out, apply_filter(FilterSpec("mid_alpha", 0.5), g, x).values)

    def test_needs_graph(self):
        with pytest.raises(TypeError):
            SpectralFilter().fit(np.ones((3, 1)))

    def test_params_round_trip(self):
        f = SpectralFilter(kind="low", alpha=0.7)
        assert f.get_params() == {"kind": "low", "alpha": 0.7, "self_loops": False}


class TestPairDistance:
    def test_isolated_pair(self):
        h_u, h_v = np.array([3.0, 0.0]), np.array([0.0, 4.0])
        assert pair_distance_under_filter("low", h_u, h_v, 1, 1) == 0.0
        assert pair_distance_under_filter("high", h_u, h_v, 1, 1) == 10.0
        assert pair_distance_under_filter("mid", h_u, h_v, 1, 1) == 5.0

    def test_k3_pair(self):
        assert pair_distance_under_filter("mid", [1.0], [0.0], 2, 2, [2]) == pytest.approx(1.25)

    @pytest.mark.parametrize("kind", ["low", "high", "mid"])
    def test_equal_signals(self, kind):
        assert pair_distance_under_filter(kind, [1.0, 2.0], [1.0, 2.0], 3, 4, [2]) == 0.0

    def test_rejects_degree_one_common_neighbor(self):
        with pytest.raises(ValueError):
            pair_distance_under_filter("mid", [1.0], [0.0], 2, 2, [1])

    def test_rejects_kind(self):
        with pytest.raises(ValueError):
            pair_distance_under_filter("band", [1.0], [0.0], 2, 2)


class TestTheoreticRate:
    def test_examples(self):
        assert theoretic_rate("low", 4, 1) == pytest.approx(0.0625)
        assert theoretic_rate("high", 4, 1) == pytest.approx(0.0625)
        assert theoretic_rate("mid", 4, 1, [2]) == pytest.approx(0.03125)
        assert theoretic_rate("mid", 4, 1) == 0.0

    def test_rejects(self):
        with pytest.raises(ValueError):
            theoretic_rate("low", 0, 1)
        with pytest.raises(ValueError):
            theoretic_rate("low", 1, -1)


@st.composite
def pair_draws(draw):
    d_u = draw(st.integers(1, 60))
    d_v = draw(st.integers(1, 60))
    k = draw(st.integers(0, min(d_u, d_v) - 1)) if min(d_u, d_v) > 1 else 0
    common = draw(st.lists(st.integers(2, 80), min_size=k, max_size=k))
    dist = draw(st.floats(1e-3, 1e3))
    return d_u, d_v, common, dist


class TestOrderingProperties:
    @given(pair_draws())
    @settings(max_examples=300, deadline=None)
    def test_distance_ordering(self, draw):
        d_u, d_v, common, dist = draw
        assume(sum(1.0 / t for t in common) < 1.0)
        h_u, h_v = np.array([dist]), np.array([0.0])
        dev = {k: abs(pair_distance_under_filter(k, h_u, h_v, d_u, d_v, common) - dist) for k in ("low", "high", "mid")}
        assert dev["low"] == pytest.approx(dev["high"], rel=1e-12)
        assert dev["low"] == pytest.approx(dist / np.sqrt(d_u * d_v), rel=1e-12)
        assert dev["mid"] < dev["low"]

    @given(pair_draws())
    @settings(max_examples=300, deadline=None)
    def test_rate_ordering(self, draw):
        d_u, d_v, common, dist = draw
        assume(sum(1.0 / t for t in common) < 1.0)
        low = theoretic_rate("low", d_u * d_v, dist, common)
        assert low == theoretic_rate("high", d_u * d_v, dist, common)
        assert theoretic_rate("mid", d_u * d_v, dist, common) < low
