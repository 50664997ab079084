"""Scikit-learn style wrapper around the two-layer filter classifier."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from .exceptions import DataError
from .graph import Split
from .model import TrainConfig, forward, hidden_representation, train
from .validation import check_features, check_graph, check_index_set, check_labels


class MidGCNClassifier(ClassifierMixin, BaseEstimator):
    """Transductive node classifier with a pluggable spectral filter.

    All nodes of ``graph`` are present at fit time; ``y`` holds ``-1`` for
    nodes whose label is hidden. Prediction methods take the same feature
    matrix and return one row per node.

    Parameters
    ----------
    filter_kind : {'mid_alpha', 'mid', 'low', 'high'}, default='mid_alpha'
        ``'low'`` gives the GCN-style baseline.
    alpha : float, default=0.5
    hidden : int, default=128
    learning_rate : float, default=0.01
    weight_decay : float, default=5e-4
    dropout_rate : float, default=0.6
    epochs_max : int, default=1000
    patience : int, default=100
        Epochs without validation-accuracy improvement before stopping.
    self_loops : bool, default=False
    row_normalize : bool, default=False
    val_fraction : float, default=0.5
        Share of the labelled nodes held out for early stopping when
        ``val_idx`` is not given to :meth:`fit`.
    random_state : int, default=0

    Attributes
    ----------
    params_ : ModelParams
    report_ : TrainReport
    classes_ : ndarray of shape (n_classes,)
    graph_ : Graph
    """

    def __init__(
        self,
        filter_kind="mid_alpha",
        alpha=0.5,
        hidden=128,
        learning_rate=0.01,
        weight_decay=5e-4,
        dropout_rate=0.6,
        epochs_max=1000,
        patience=100,
        self_loops=False,
        row_normalize=False,
        val_fraction=0.5,
        random_state=0,
    ):
        self.filter_kind = filter_kind
        self.alpha = alpha
        self.hidden = hidden
        self.learning_rate = learning_rate
        self.weight_decay = weight_decay
        self.dropout_rate = dropout_rate
        self.epochs_max = epochs_max
        self.patience = patience
        self.self_loops = self_loops
        self.row_normalize = row_normalize
        self.val_fraction = val_fraction
        self.random_state = random_state

    def _config(self) -> TrainConfig:
        return TrainConfig(
            learning_rate=self.learning_rate,
            weight_decay=self.weight_decay,
            dropout_rate=self.dropout_rate,
            hidden=self.hidden,
            epochs_max=self.epochs_max,
            patience=self.patience,
            seed=self.random_state,
            alpha=self.alpha,
            filter_kind=self.filter_kind,
            self_loops=self.self_loops,
            row_normalize=self.row_normalize,
        )

    def fit(self, X, y, graph=None, train_idx=None, val_idx=None):
        """Train on the labelled nodes.

        Without ``train_idx`` every labelled node not in ``val_idx`` is used
        for training; without ``val_idx`` a seeded ``val_fraction`` share of
        the training candidates is held out.
        """
        if graph is None:
            raise TypeError("MidGCNClassifier.fit requires graph=")
        config = self._config()
        g = check_graph(graph)
        X = check_features(X, n=g.n)
        y = check_labels(y, n=g.n, allow_unlabeled=True)
        labelled = np.flatnonzero(y >= 0)
        if labelled.size < 2:
            raise DataError("need at least two labelled nodes")
        if val_idx is not None:
            val = check_index_set(val_idx, g.n, "val_idx")
        if train_idx is not None:
            tr = check_index_set(train_idx, g.n, "train_idx")
            if val_idx is None:
                val = np.setdiff1d(labelled, tr)
                if val.size == 0:
                    raise DataError("no labelled nodes left for validation; pass val_idx")
        else:
            pool = labelled if val_idx is None else np.setdiff1d(labelled, val)
            if val_idx is None:
                perm = np.random.default_rng(self.random_state).permutation(pool)
                k = min(max(1, int(round(self.val_fraction * pool.size))), pool.size - 1)
                val, tr = np.sort(perm[:k]), np.sort(perm[k:])
            else:
                tr = pool
        if np.any(y[tr] < 0) or np.any(y[val] < 0):
            raise DataError("train and validation nodes must be labelled")

        self.classes_ = np.unique(y[labelled])
        # the model works on contiguous class ids; map back in predict
        y_enc = np.full(g.n, 0, dtype=np.int64)
        y_enc[labelled] = np.searchsorted(self.classes_, y[labelled])
        split = Split(tr, val, None, n=g.n)
        self.params_, self.report_ = train(g, X, y_enc, split, config)
        self.graph_ = g
        self.n_features_in_ = X.shape[1]
        return self

    def decision_function(self, X) -> np.ndarray:
        check_is_fitted(self, "params_")
        return forward(self.params_, self.graph_, X)

    def predict_proba(self, X) -> np.ndarray:
        z = self.decision_function(X)
        z = z - z.max(axis=1, keepdims=True)
        e = np.exp(z)
        return e / e.sum(axis=1, keepdims=True)

    def predict(self, X) -> np.ndarray:
        z = self.decision_function(X)
        return self.classes_[np.argmax(z, axis=1)]

    def transform(self, X) -> np.ndarray:
        """First-layer hidden embeddings (post-ReLU), one row per node."""
        check_is_fitted(self, "params_")
        return hidden_representation(self.params_, self.graph_, X)

    def score(self, X, y, sample_weight=None, idx=None):
        """Accuracy over ``idx`` (default: every node with ``y >= 0``)."""
        y = check_labels(y, n=self.graph_.n, allow_unlabeled=True)
        idx = np.flatnonzero(y >= 0) if idx is None else check_index_set(idx, self.graph_.n)
        pred = self.predict(X)[idx]
        return float(np.average(pred == y[idx], weights=None if sample_weight is None else sample_weight))
