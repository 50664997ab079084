"""Diagnostics for filter robustness.

Covers connected-node distance change rates, common-neighbour statistics,
numeric rank growth of ``A`` and ``A^2`` under perturbation, per-band signal
energies and eigenvalue shifts, and the spectral regression loss (SRL)
together with its ``g(0) = g(2)`` generalization condition.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .exceptions import DataError
from .filters import theoretic_rate
from .graph import Graph, apply_perturbation, normalized_adjacency
from .perturb import random_flip
from .spectral import (
    BandPartition,
    FilterSpec,
    SpectralDecomposition,
    band_indices,
    eigvals,
    filter_response,
    graph_fourier,
)

__all__ = [
    "mean_edge_distance",
    "distance_change_rate",
    "common_neighbor_reciprocal_sum",
    "common_neighbor_sum_stats",
    "numeric_rank",
    "rank_growth_curve",
    "band_energy",
    "band_eigendelta_stats",
    "BandDeltaStats",
    "srl",
    "srl_coefficients",
    "generalization_condition",
    "theoretic_rate",
    "write_csv",
    "write_json",
    "to_jsonable",
]


def _qualifying_edges(g: Graph, degree_min: int) -> np.ndarray:
    e = g.edge_array
    d = g.degrees
    keep = (d[e[:, 0]] > degree_min) & (d[e[:, 1]] > degree_min) if len(e) else np.zeros(0, bool)
    return e[keep]


def mean_edge_distance(H, g: Graph, degree_min: int = 0) -> float:
    """Mean Euclidean embedding distance over edges whose endpoints both have degree ``> degree_min``."""
    H = np.asarray(H, dtype=np.float64)
    if H.shape[0] != g.n:
        raise DataError(f"embeddings have {H.shape[0]} rows, graph has {g.n} nodes")
    e = _qualifying_edges(g, degree_min)
    if len(e) == 0:
        raise DataError(f"no edge has both endpoint degrees > {degree_min}")
    return float(np.linalg.norm(H[e[:, 0]] - H[e[:, 1]], axis=1).mean())


def distance_change_rate(H_clean, H_attacked, g_clean: Graph, degree_min: int = 10) -> float:
    """``|D0 - D1| / max(D0, D1)`` of mean connected-node distances.

    Both means run over the *clean* graph's edges whose endpoints have clean
    degree ``> degree_min``; ``H_clean`` and ``H_attacked`` are node-aligned
    embeddings from models trained on the clean and attacked graphs.

    Examples
    --------
    >>> from midgcn.graph import Graph
    >>> g = Graph.from_edges(2, [(0, 1)])
    >>> distance_change_rate([[0.0], [2.0]], [[0.0], [1.0]], g, degree_min=0)
    0.5
    """
    if degree_min < 0:
        raise ValueError("degree_min must be >= 0")
    H_clean = np.asarray(H_clean, dtype=np.float64)
    H_attacked = np.asarray(H_attacked, dtype=np.float64)
    if H_clean.shape != H_attacked.shape:
        raise DataError(f"embedding shapes differ: {H_clean.shape} vs {H_attacked.shape}")
    d0 = mean_edge_distance(H_clean, g_clean, degree_min)
    d1 = mean_edge_distance(H_attacked, g_clean, degree_min)
    top = max(d0, d1)
    return 0.0 if top == 0.0 else abs(d0 - d1) / top


def common_neighbor_reciprocal_sum(g: Graph, u: int, v: int) -> float:
    """``sum 1/d_t`` over nodes ``t`` adjacent to both ``u`` and ``v``."""
    common = np.intersect1d(g.neighbors(u), g.neighbors(v), assume_unique=True)
    return float(np.sum(1.0 / g.degrees[common])) if common.size else 0.0


def _edge_reciprocal_sums(g: Graph, pairs: np.ndarray) -> np.ndarray:
    # (A D^-1 A)[u, v] = sum_t A_ut A_tv / d_t
    a = g.adjacency.astype(np.float64)
    d = g.degrees.astype(np.float64)
    inv = np.divide(1.0, d, out=np.zeros_like(d), where=d > 0)
    s = (a @ sp.diags(inv) @ a).tocsr()
    return np.asarray(s[pairs[:, 0], pairs[:, 1]]).ravel()


def common_neighbor_sum_stats(g: Graph, n_samples: int | None = None, seed: int = 0) -> tuple[float, float]:
    """Mean common-neighbour reciprocal sum over connected pairs, and the share ``>= 1``.

    With ``n_samples=None`` every edge is enumerated; otherwise that many
    edges are drawn uniformly with replacement.
    """
    e = g.edge_array
    if len(e) == 0:
        raise DataError("graph has no edges")
    if n_samples is not None:
        e = e[np.random.default_rng(seed).integers(len(e), size=n_samples)]
    vals = _edge_reciprocal_sums(g, e)
    return float(vals.mean()), float(np.mean(vals >= 1.0))


def numeric_rank(M, rel_tol: float = 1e-8) -> int:
    """Number of singular values above ``rel_tol * sigma_max``.

    Symmetric inputs use a symmetric eigensolver (singular values are the
    absolute eigenvalues), which is several times faster than an SVD.
    """
    if rel_tol <= 0:
        raise ValueError("rel_tol must be positive")
    m = M.toarray() if sp.issparse(M) else np.asarray(M, dtype=np.float64)
    if m.size == 0:
        return 0
    if m.shape[0] == m.shape[1] and np.array_equal(m, m.T):
        s = np.abs(np.linalg.eigvalsh(m))
    else:
        s = np.linalg.svd(m, compute_uv=False)
    top = s.max()
    return 0 if top == 0 else int(np.sum(s > rel_tol * top))


def rank_growth_curve(g: Graph, rates=(0.0, 0.05, 0.10, 0.15, 0.20, 0.25), seed: int = 0, rel_tol: float = 1e-8):
    """Numeric ranks of ``A`` and ``A^2`` after ``random_flip`` at each rate.

    Each rate draws its own perturbation from ``seed``. Relative growth is
    measured against the first entry of ``rates``.

    Returns
    -------
    list of dict
        Keys ``rate``, ``rank_A``, ``rank_A2``, ``growth_A``, ``growth_A2``.
    """
    rows = []
    for rate in rates:
        ga = apply_perturbation(g, random_flip(g, rate, seed)) if rate > 0 else g
        a = ga.adjacency.astype(np.float64)
        rows.append({"rate": float(rate), "rank_A": numeric_rank(a, rel_tol), "rank_A2": numeric_rank(a @ a, rel_tol)})
    for key in ("A", "A2"):
        base = rows[0][f"rank_{key}"]
        for r in rows:
            r[f"growth_{key}"] = (r[f"rank_{key}"] - base) / base if base else math.nan
    return rows


def band_energy(x, dec: SpectralDecomposition, bands: BandPartition) -> tuple[float, float, float]:
    """Spectral energy ``sum x_hat_i^2`` inside the low, mid and high bands."""
    x_hat = graph_fourier(x, dec)
    e = x_hat**2
    return float(e[bands.low].sum()), float(e[bands.mid].sum()), float(e[bands.high].sum())


@dataclass(frozen=True)
class BandDeltaStats:
    """Mean ``|delta lambda|`` per band of the clean ``A_hat`` spectrum; NaN marks an empty band."""

    low: float
    mid: float
    high: float
    n_low: int
    n_mid: int
    n_high: int
    p: float

    def as_tuple(self) -> tuple[float, float, float]:
        return self.low, self.mid, self.high

    def to_dict(self) -> dict:
        return asdict(self)


def band_eigendelta_stats(g_clean: Graph, g_attacked: Graph, p: float = 0.5, with_self_loops: bool = False) -> BandDeltaStats:
    """Rank-paired ``|delta lambda|`` of ``A_hat`` averaged inside each clean band."""
    if g_clean.n != g_attacked.n:
        raise DataError(f"node counts differ: {g_clean.n} vs {g_attacked.n}")
    lam0 = eigvals(normalized_adjacency(g_clean, with_self_loops))
    lam1 = eigvals(normalized_adjacency(g_attacked, with_self_loops))
    bands = band_indices(lam0, p)
    delta = np.abs(lam1 - lam0)

    def mean(idx):
        return float(delta[idx].mean()) if idx.size else math.nan

    return BandDeltaStats(
        mean(bands.low), mean(bands.mid), mean(bands.high), bands.low.size, bands.mid.size, bands.high.size, float(p)
    )


def srl(dec: SpectralDecomposition, spec: FilterSpec, alpha_coeffs, beta_coeffs) -> float:
    """Spectral regression loss ``2 - (2/sqrt N) sum_i a_i g_i b_i / sqrt(sum_j g_j^2 b_j^2)``.

    ``g_i = filter_response(spec, lambda_i)`` on the Laplacian spectrum
    (an ``A_hat`` decomposition is converted). The closed form equals
    ``sum_i (a_i / sqrt N - g_i b_i / |g b|)^2`` when ``|a|^2 = N``, which is
    what :func:`srl_coefficients` produces.
    """
    a = np.asarray(alpha_coeffs, dtype=np.float64)
    b = np.asarray(beta_coeffs, dtype=np.float64)
    lam = dec.laplacian_eigenvalues()
    if not (a.shape == b.shape == lam.shape):
        raise DataError(f"coefficient lengths {a.shape}, {b.shape} do not match spectrum {lam.shape}")
    gb = filter_response(spec, np.clip(lam, 0.0, 2.0)) * b
    norm = float(np.sqrt(gb @ gb))
    if norm == 0.0:
        raise ValueError("SRL undefined: every filtered coefficient g(lambda_j) beta_j is zero")
    return 2.0 - 2.0 / np.sqrt(len(a)) * float(a @ gb) / norm


def srl_coefficients(dec: SpectralDecomposition, labels, signal) -> tuple[np.ndarray, np.ndarray]:
    """``alpha = U^T y`` for ``y`` the +-1 label encoding, ``beta = U^T signal``.

    ``labels`` already in ``{-1, +1}`` are used as given (a single-class
    graph is allowed); otherwise they must take exactly two values and the
    smaller maps to ``-1``. No ``1/sqrt N`` factor is applied to ``alpha``
    so that ``|alpha|^2 = N``.
    """
    y = np.asarray(labels)
    values = np.unique(y)
    if np.isin(values, (-1, 1)).all():
        pm = y.astype(np.float64)
    elif values.size == 2:
        pm = np.where(y == values[1], 1.0, -1.0)
    else:
        raise DataError(f"SRL needs binary labels, got {values.size} classes")
    return graph_fourier(pm, dec), graph_fourier(signal, dec)


def generalization_condition(spec: FilterSpec) -> bool:
    """``|g(0) - g(2)| < 1e-12``, necessary for equal SRL across homophily extremes."""
    return bool(abs(filter_response(spec, 0.0) - filter_response(spec, 2.0)) < 1e-12)


def to_jsonable(obj):
    """Recursively convert numpy scalars/arrays and dataclasses into JSON types (NaN becomes null)."""
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return None if math.isnan(obj) else float(obj)
    return obj


def write_json(obj, path) -> None:
    Path(path).write_text(json.dumps(to_jsonable(obj), indent=2, sort_keys=True) + "\n")


def write_csv(rows, path, fieldnames=None) -> None:
    """Write a list of dicts as CSV; floats use 12 significant digits."""
    rows = list(rows)
    fieldnames = fieldnames or (list(rows[0]) if rows else [])
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fieldnames)
        w.writeheader()
        for r in rows:
            w.writerow({k: (f"{v:.12g}" if isinstance(v, (float, np.floating)) else v) for k, v in r.items()})
