"""Mid-pass graph filtering, the Mid-GCN classifier and a spectral robustness lab."""

from .estimator import MidGCNClassifier
from .exceptions import ConfigError, DataError, MidGCNError, NumericalError, PerturbationError
from .filters import GraphFilter, SpectralFilter, apply_filter, pair_distance_under_filter, theoretic_rate
from .graph import (
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
from .io import load_dataset
from .model import ModelParams, TrainConfig, TrainReport, evaluate, forward, loss_and_gradients, train
from .spectral import FilterSpec, SpectralDecomposition, band_partition, eig, filter_response

__version__ = "0.1.0"

__all__ = [
    "MidGCNClassifier",
    "SpectralFilter",
    "GraphFilter",
    "Graph",
    "NodeFeatures",
    "Labels",
    "Split",
    "EdgePerturbation",
    "FilterSpec",
    "SpectralDecomposition",
    "ModelParams",
    "TrainConfig",
    "TrainReport",
    "load_dataset",
    "normalized_adjacency",
    "laplacian",
    "random_split",
    "apply_perturbation",
    "apply_filter",
    "pair_distance_under_filter",
    "theoretic_rate",
    "eig",
    "filter_response",
    "band_partition",
    "forward",
    "loss_and_gradients",
    "train",
    "evaluate",
    "MidGCNError",
    "ConfigError",
    "DataError",
    "PerturbationError",
    "NumericalError",
]
