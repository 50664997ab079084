"""Two-layer spectral-filter node classifier trained full-batch with Adam.

The network is ``logits = F(dropout(relu(F(dropout(X) W1))) W2)`` where ``F``
is any :class:`~midgcn.spectral.FilterSpec` operator. With ``mid_alpha`` this
is Mid-GCN; with ``low`` (``F = I + A_hat``) it is the GCN-style baseline.
Gradients are derived by hand; ``F`` is symmetric so the backward pass reuses
the forward operator.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .exceptions import ConfigError, DataError, NumericalError
from .filters import GraphFilter
from .graph import Graph, Labels, NodeFeatures, Split
from .spectral import FilterSpec
from .validation import check_features, check_index_set, check_interval, check_labels, check_positive_int

__all__ = [
    "PUBLISHED_HYPERPARAMETERS",
    "TrainConfig",
    "ModelParams",
    "TrainReport",
    "init_params",
    "forward",
    "hidden_representation",
    "loss_and_gradients",
    "train",
    "evaluate",
    "save_checkpoint",
    "load_checkpoint",
]

CHECKPOINT_FORMAT = "midgcn-checkpoint"
CHECKPOINT_VERSION = 1

# per-dataset Mid-GCN settings; lr 0.01, L2 5e-4 and dropout 0.6 everywhere
PUBLISHED_HYPERPARAMETERS = {
    "cora": {"alpha": 0.5, "hidden": 128},
    "citeseer": {"alpha": 0.55, "hidden": 64},
    "github": {"alpha": 0.55, "hidden": 128},
    "polblogs": {"alpha": 0.2, "hidden": 64},
    "cora_ml": {"alpha": 0.2, "hidden": 64},
    "film": {"alpha": 2.0, "hidden": 64},
}


@dataclass
class TrainConfig:
    """Optimisation and architecture hyperparameters.

    ``filter_kind`` together with ``alpha`` selects the filter; ``alpha`` only
    matters for ``mid_alpha``.
    """

    learning_rate: float = 0.01
    weight_decay: float = 5e-4
    dropout_rate: float = 0.6
    hidden: int = 128
    epochs_max: int = 1000
    patience: int = 100
    seed: int = 0
    alpha: float = 0.5
    filter_kind: str = "mid_alpha"
    self_loops: bool = False
    row_normalize: bool = False

    def __post_init__(self):
        self.validate()

    def validate(self) -> "TrainConfig":
        check_interval(self.learning_rate, "learning_rate", 0.0, np.inf, closed=(False, False))
        check_interval(self.weight_decay, "weight_decay", 0.0, np.inf, closed=(True, False))
        check_interval(self.dropout_rate, "dropout_rate", 0.0, 1.0, closed=(True, False))
        check_positive_int(self.hidden, "hidden")
        check_positive_int(self.epochs_max, "epochs_max")
        check_positive_int(self.patience, "patience")
        check_positive_int(self.seed, "seed", minimum=0)
        check_interval(self.alpha, "alpha", 0.0, 2.0)
        self.filter  # raises ConfigError on a bad kind
        return self

    @property
    def filter(self) -> FilterSpec:
        return FilterSpec(self.filter_kind, 1.0 if self.filter_kind == "mid" else self.alpha)

    @classmethod
    def for_dataset(cls, name: str, **overrides) -> "TrainConfig":
        """Mid-GCN settings published for ``name`` (see ``PUBLISHED_HYPERPARAMETERS``)."""
        key = name.lower().replace("-", "_")
        if key not in PUBLISHED_HYPERPARAMETERS:
            raise ConfigError(f"no published hyperparameters for {name!r}")
        return cls(**{**PUBLISHED_HYPERPARAMETERS[key], **overrides})

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ModelParams:
    W1: np.ndarray
    W2: np.ndarray
    filter: FilterSpec
    self_loops: bool = False
    row_normalize: bool = False

    def __post_init__(self):
        self.W1 = np.asarray(self.W1, dtype=np.float64)
        self.W2 = np.asarray(self.W2, dtype=np.float64)
        if self.W1.ndim != 2 or self.W2.ndim != 2 or self.W1.shape[1] != self.W2.shape[0]:
            raise DataError(f"inconsistent weight shapes {self.W1.shape} and {self.W2.shape}")

    @property
    def hidden(self) -> int:
        return self.W1.shape[1]

    @property
    def n_features(self) -> int:
        return self.W1.shape[0]

    @property
    def n_classes(self) -> int:
        return self.W2.shape[1]

    def copy(self) -> "ModelParams":
        return ModelParams(self.W1.copy(), self.W2.copy(), self.filter, self.self_loops, self.row_normalize)


@dataclass
class TrainReport:
    train_loss: list[float] = field(default_factory=list)
    val_accuracy: list[float] = field(default_factory=list)
    best_epoch: int = -1
    best_val_accuracy: float = 0.0
    test_accuracy: float | None = None
    seconds: float = 0.0

    @property
    def epochs_run(self) -> int:
        return len(self.train_loss)

    def to_dict(self, include_timing: bool = True) -> dict:
        d = asdict(self)
        d["epochs_run"] = self.epochs_run
        if not include_timing:
            d.pop("seconds")
        return d


def init_params(n_features: int, n_classes: int, config: TrainConfig, rng=None) -> ModelParams:
    """Glorot-uniform weights drawn from ``rng`` (default: seeded by ``config.seed``)."""
    rng = np.random.default_rng(config.seed if rng is None else rng)

    def glorot(fan_in, fan_out):
        s = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-s, s, size=(fan_in, fan_out))

    w1 = glorot(n_features, config.hidden)
    w2 = glorot(config.hidden, n_classes)
    return ModelParams(w1, w2, config.filter, config.self_loops, config.row_normalize)


class _Problem:
    """Graph operator and preprocessed features shared by every forward pass."""

    def __init__(self, params_or_config, g: Graph, X):
        spec = params_or_config.filter
        self.op = GraphFilter(spec, g, params_or_config.self_loops)
        feats = NodeFeatures(check_features(X, n=g.n))
        if params_or_config.row_normalize:
            feats = feats.row_normalized()
        self.X = sp.csr_matrix(feats.values)
        self.n = g.n


def _dropout_sparse(x: sp.csr_matrix, p: float, rng) -> sp.csr_matrix:
    if p == 0.0:
        return x
    out = x.copy()
    out.data = out.data * (rng.random(out.nnz) >= p) / (1.0 - p)
    return out


def _forward(params: ModelParams, prob: _Problem, rng, p: float):
    """Forward pass; ``rng=None`` means inference (no dropout). Returns logits and cache."""
    x0 = prob.X if rng is None else _dropout_sparse(prob.X, p, rng)
    pre = prob.op(np.asarray(x0 @ params.W1))
    if not np.isfinite(pre).all():
        raise NumericalError("non-finite pre-activations in layer 1")
    h = np.maximum(pre, 0.0)
    if rng is None or p == 0.0:
        mask = None
        h0 = h
    else:
        mask = (rng.random(h.shape) >= p) / (1.0 - p)
        h0 = h * mask
    z = prob.op(h0 @ params.W2)
    if not np.isfinite(z).all():
        raise NumericalError("non-finite logits in layer 2")
    return z, (x0, pre, h, mask, h0)


def _log_softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=1, keepdims=True))


def _loss_grad(params: ModelParams, prob: _Problem, y: np.ndarray, idx: np.ndarray, weight_decay: float, rng, p: float):
    z, (x0, pre, h, mask, h0) = _forward(params, prob, rng, p)
    logp = _log_softmax(z[idx])
    m = len(idx)
    ce = -logp[np.arange(m), y[idx]].mean()
    l2 = 0.5 * weight_decay * (np.sum(params.W1**2) + np.sum(params.W2**2))
    dz = np.zeros_like(z)
    probs = np.exp(logp)
    probs[np.arange(m), y[idx]] -= 1.0
    dz[idx] = probs / m
    g_out = prob.op.rmatmul(dz)
    g_w2 = h0.T @ g_out + weight_decay * params.W2
    dh = g_out @ params.W2.T
    if mask is not None:
        dh = dh * mask
    dh = dh * (pre > 0)
    g_in = prob.op.rmatmul(dh)
    g_w1 = np.asarray(x0.T @ g_in) + weight_decay * params.W1
    return float(ce + l2), {"W1": g_w1, "W2": g_w2}


def forward(params: ModelParams, g: Graph, X, training: bool = False, rng=None, dropout_rate: float = 0.6) -> np.ndarray:
    """Logits ``n x c``.

    With ``training=True`` dropout at ``dropout_rate`` is applied to the input
    of each layer, with masks drawn from ``rng`` (a seed or a
    ``numpy.random.Generator``); the same seed gives the same masks. In
    inference mode ``rng`` and ``dropout_rate`` are ignored.
    """
    prob = _Problem(params, g, X)
    _check_shapes(params, prob)
    if not training:
        return _forward(params, prob, None, 0.0)[0]
    check_interval(dropout_rate, "dropout_rate", 0.0, 1.0, closed=(True, False))
    return _forward(params, prob, np.random.default_rng(rng), dropout_rate)[0]


def hidden_representation(params: ModelParams, g: Graph, X) -> np.ndarray:
    """Post-activation first-layer embeddings in inference mode."""
    prob = _Problem(params, g, X)
    _check_shapes(params, prob)
    return _forward(params, prob, None, 0.0)[1][2]


def _check_shapes(params: ModelParams, prob: _Problem):
    if prob.X.shape[1] != params.n_features:
        raise DataError(f"features have {prob.X.shape[1]} columns, weights expect {params.n_features}")


def loss_and_gradients(params: ModelParams, g: Graph, X, labels, mask, config: TrainConfig, rng=None):
    """Mean cross-entropy over ``mask`` plus ``weight_decay / 2 * (|W1|^2 + |W2|^2)``.

    ``rng=None`` evaluates the deterministic (dropout-free) network. Passing a
    seed applies ``config.dropout_rate`` dropout with masks drawn from that
    seed, so repeated calls with the same seed see the same network.

    Returns ``(loss, {"W1": dW1, "W2": dW2})``.
    """
    prob = _Problem(params, g, X)
    _check_shapes(params, prob)
    y = check_labels(labels, n=g.n)
    idx = check_index_set(mask, g.n, "mask")
    gen = None if rng is None else np.random.default_rng(rng)
    return _loss_grad(params, prob, y, idx, config.weight_decay, gen, config.dropout_rate)


def _accuracy(z: np.ndarray, y: np.ndarray, idx: np.ndarray) -> float:
    # argmax returns the lowest index among ties
    return float(np.mean(np.argmax(z[idx], axis=1) == y[idx]))


def evaluate(params: ModelParams, g: Graph, X, labels, index_set) -> float:
    """Accuracy of inference-mode predictions over ``index_set``."""
    y = check_labels(labels, n=g.n)
    idx = check_index_set(index_set, g.n)
    return _accuracy(forward(params, g, X), y, idx)


class _Adam:
    def __init__(self, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}

    def step(self, params: ModelParams, grads: dict[str, np.ndarray]):
        self.t += 1
        for name, g in grads.items():
            m = self.m.setdefault(name, np.zeros_like(g))
            v = self.v.setdefault(name, np.zeros_like(g))
            m *= self.beta1
            m += (1 - self.beta1) * g
            v *= self.beta2
            v += (1 - self.beta2) * g * g
            m_hat = m / (1 - self.beta1**self.t)
            v_hat = v / (1 - self.beta2**self.t)
            w = getattr(params, name)
            w -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def train(g: Graph, X, labels, split: Split, config: TrainConfig) -> tuple[ModelParams, TrainReport]:
    """Full-batch training with early stopping on validation accuracy.

    Returns the parameters of the epoch with the best validation accuracy
    (earliest on ties) and the per-epoch history. The run is a pure function
    of the inputs and ``config.seed``.
    """
    config.validate()
    y = check_labels(labels, n=g.n)
    train_idx = check_index_set(split.train, g.n, "train")
    val_idx = check_index_set(split.val, g.n, "val")
    n_classes = labels.n_classes if isinstance(labels, Labels) else int(y.max()) + 1

    start = time.perf_counter()
    rng = np.random.default_rng(config.seed)
    prob = _Problem(config, g, X)
    params = init_params(prob.X.shape[1], n_classes, config, rng)
    opt = _Adam(config.learning_rate)
    report = TrainReport()
    best = params.copy()
    best_acc = -1.0
    stale = 0
    for epoch in range(config.epochs_max):
        try:
            loss, grads = _loss_grad(params, prob, y, train_idx, config.weight_decay, rng, config.dropout_rate)
            if not np.isfinite(loss):
                raise NumericalError(f"non-finite loss {loss}")
            opt.step(params, grads)
            val_acc = _accuracy(_forward(params, prob, None, 0.0)[0], y, val_idx)
        except NumericalError as exc:
            raise NumericalError(f"training diverged at epoch {epoch}: {exc}") from exc
        report.train_loss.append(loss)
        report.val_accuracy.append(val_acc)
        if val_acc > best_acc:
            best_acc = val_acc
            best = params.copy()
            report.best_epoch = epoch
            stale = 0
        else:
            stale += 1
            if stale >= config.patience:
                break
    report.best_val_accuracy = best_acc
    if split.test is not None and len(split.test):
        test_idx = check_index_set(split.test, g.n, "test")
        report.test_accuracy = _accuracy(_forward(best, prob, None, 0.0)[0], y, test_idx)
    report.seconds = time.perf_counter() - start
    return best, report


def save_checkpoint(params: ModelParams, path) -> None:
    """Write a version-tagged JSON checkpoint (weights row-major, exact float repr)."""
    payload = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "filter": params.filter.to_dict(),
        "self_loops": params.self_loops,
        "row_normalize": params.row_normalize,
        "W1": {"shape": list(params.W1.shape), "data": params.W1.ravel().tolist()},
        "W2": {"shape": list(params.W2.shape), "data": params.W2.ravel().tolist()},
    }
    Path(path).write_text(json.dumps(payload))


def load_checkpoint(path) -> ModelParams:
    try:
        payload = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read checkpoint {path}: {exc}") from exc
    if payload.get("format") != CHECKPOINT_FORMAT:
        raise DataError(f"{path} is not a {CHECKPOINT_FORMAT} file")
    if payload.get("version") != CHECKPOINT_VERSION:
        raise DataError(f"unsupported checkpoint version {payload.get('version')}")

    def mat(entry):
        return np.array(entry["data"], dtype=np.float64).reshape(entry["shape"])

    spec = FilterSpec(payload["filter"]["kind"], payload["filter"]["alpha"])
    return ModelParams(mat(payload["W1"]), mat(payload["W2"]), spec, payload["self_loops"], payload["row_normalize"])
