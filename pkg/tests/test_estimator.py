import numpy as np
import pytest
from sklearn.base import clone

from conftest import two_cluster
from midgcn.estimator import MidGCNClassifier
from midgcn.exceptions import DataError
from midgcn.filters import SpectralFilter


@pytest.fixture
def problem():
    g, y = two_cluster(15, p_in=0.5, p_out=0.02, seed=11)
    rng = np.random.default_rng(1)
    x = rng.random((30, 6)) * 0.2
    x[:, 0] += y == 0
    x[:, 1] += y == 1
    return g, x, y


def _fast(**kw):
    return MidGCNClassifier(hidden=8, epochs_max=200, patience=50, **kw)


class TestParams:
    def test_clone_round_trip(self):
        est = MidGCNClassifier(alpha=0.3, hidden=16, random_state=4)
        twin = clone(est)
        assert twin.get_params() == est.get_params()

    def test_set_params(self):
        assert MidGCNClassifier().set_params(filter_kind="low").filter_kind == "low"

    def test_filter_transformer_clone(self):
        assert clone(SpectralFilter(kind="high")).kind == "high"


class TestFit:
    def test_fit_predict(self, problem):
        g, x, y = problem
        y_obs = np.full(30, -1)
        y_obs[[0, 1, 2, 15, 16, 17, 3, 18]] = y[[0, 1, 2, 15, 16, 17, 3, 18]]
        est = _fast().fit(x, y_obs, graph=g)
        assert est.predict(x).shape == (30,)
        assert est.score(x, y) >= 0.9
        np.testing.assert_allclose(est.predict_proba(x).sum(axis=1), 1.0)
        assert est.transform(x).shape == (30, 8)

    def test_explicit_indices(self, problem):
        g, x, y = problem
        est = _fast().fit(x, y, graph=g, train_idx=[0, 1, 15, 16], val_idx=[2, 17])
        assert est.report_.epochs_run > 0

    def test_string_like_labels(self, problem):
        g, x, y = problem
        y_obs = np.where(y == 0, 5, 9)
        est = _fast().fit(x, y_obs, graph=g)
        assert set(est.predict(x)) <= {5, 9}
        assert list(est.classes_) == [5, 9]

    def test_deterministic(self, problem):
        g, x, y = problem
        a = _fast(random_state=2).fit(x, y, graph=g).decision_function(x)
        b = _fast(random_state=2).fit(x, y, graph=g).decision_function(x)
        np.testing.assert_array_equal(a, b)

    def test_needs_graph(self, problem):
        _, x, y = problem
        with pytest.raises(TypeError):
            _fast().fit(x, y)

    def test_no_validation_nodes(self, problem):
        g, x, y = problem
        with pytest.raises(DataError):
            _fast().fit(x, y, graph=g, train_idx=np.arange(30))

    def test_unlabelled_train_node(self, problem):
        g, x, y = problem
        y_obs = y.copy()
        y_obs[0] = -1
        with pytest.raises(DataError):
            _fast().fit(x, y_obs, graph=g, train_idx=[0, 1], val_idx=[2])

    def test_predict_before_fit(self, problem):
        from sklearn.exceptions import NotFittedError

        with pytest.raises(NotFittedError):
            _fast().predict(problem[1])
