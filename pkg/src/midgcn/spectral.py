"""Spectral toolkit: eigendecomposition, filter responses, graph Fourier
transform, first-order eigenvalue perturbation and frequency bands.

Two eigenvalue conventions coexist. Filter responses are written on the
normalized Laplacian spectrum (``[0, 2]``); perturbation and band analysis use
the normalized adjacency spectrum (``[-1, 1]``). They are related by
``lam_laplacian = 1 - lam_adjacency``; see :func:`adjacency_to_laplacian`.
Nothing converts between them implicitly.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Literal

import numpy as np
import scipy.linalg
import scipy.sparse.linalg as spla

from .exceptions import ConfigError, DataError, NumericalError
from .graph import DELETE, INSERT, Graph, NormalizedOperator, laplacian, normalized_adjacency

__all__ = [
    "DENSE_CAP",
    "FilterSpec",
    "SpectralDecomposition",
    "BandPartition",
    "SpectrumShift",
    "eig",
    "eigvals",
    "filter_response",
    "graph_fourier",
    "inverse_graph_fourier",
    "adjacency_to_laplacian",
    "laplacian_to_adjacency",
    "eigenvalue_delta_first_order",
    "eigenvalue_deltas_first_order",
    "generalized_eigenvectors",
    "band_partition",
    "band_indices",
    "rayleigh_quotient",
    "connected_pair_products",
    "spectrum_shift_report",
]

DENSE_CAP = 4000
FILTER_KINDS = ("low", "high", "mid", "mid_alpha")
# numerical eigenvalues of L may sit a few ulps outside [0, 2]
_LAMBDA_SLACK = 1e-9


@dataclass(frozen=True)
class FilterSpec:
    """Which spectral filter to apply.

    ``mid`` is the fixed mid-pass filter ``L(2I - L)``; ``mid_alpha`` is the
    parametric operator ``(alpha I - A_hat)(I + A_hat)``, identical to ``mid``
    at ``alpha = 1``. ``alpha`` is ignored by ``low`` and ``high``.
    """

    kind: str = "mid_alpha"
    alpha: float = 1.0

    def __post_init__(self):
        if self.kind not in FILTER_KINDS:
            raise ConfigError(f"filter kind must be one of {FILTER_KINDS}, got {self.kind!r}")
        alpha = float(self.alpha)
        if not 0.0 <= alpha <= 2.0:
            raise ConfigError(f"alpha must lie in [0, 2], got {alpha}")
        if self.kind == "mid" and alpha != 1.0:
            raise ConfigError("kind 'mid' has alpha fixed at 1; use 'mid_alpha' for other values")
        object.__setattr__(self, "alpha", alpha)

    @classmethod
    def parse(cls, text: str) -> "FilterSpec":
        """Parse ``low``, ``high``, ``mid`` or ``mid_alpha:0.5``."""
        kind, _, alpha = text.partition(":")
        kind = kind.strip()
        if alpha:
            return cls(kind, float(alpha))
        return cls(kind)

    def __str__(self):
        return f"mid_alpha:{self.alpha:g}" if self.kind == "mid_alpha" else self.kind

    def to_dict(self) -> dict:
        return {"kind": self.kind, "alpha": self.alpha}


def filter_response(spec: FilterSpec, lam):
    """Scalar response ``g(lam)`` on the Laplacian spectrum ``[0, 2]``.

    ``low: 2 - lam``, ``high: lam``, ``mid: lam (2 - lam)``,
    ``mid_alpha: (alpha - 1 + lam)(2 - lam)``. Accepts scalars or arrays.
    """
    lam_arr = np.asarray(lam, dtype=np.float64)
    if np.any(lam_arr < -_LAMBDA_SLACK) or np.any(lam_arr > 2.0 + _LAMBDA_SLACK):
        raise ValueError("Laplacian eigenvalues must lie in [0, 2]")
    if spec.kind == "low":
        out = 2.0 - lam_arr
    elif spec.kind == "high":
        out = lam_arr.copy()
    elif spec.kind == "mid":
        out = lam_arr * (2.0 - lam_arr)
    else:
        out = (spec.alpha - 1.0 + lam_arr) * (2.0 - lam_arr)
    return float(out) if out.ndim == 0 else out


def adjacency_to_laplacian(lam):
    return 1.0 - np.asarray(lam, dtype=np.float64)


def laplacian_to_adjacency(lam):
    return 1.0 - np.asarray(lam, dtype=np.float64)


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Eigenpairs of a normalized operator, eigenvalues ascending.

    Column ``y`` of ``eigenvectors`` pairs with ``eigenvalues[y]``. A partial
    decomposition (iterative mode) holds fewer than ``n`` columns.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    basis_kind: str
    with_self_loops: bool = False
    degrees: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.eigenvectors.shape[0]

    @property
    def is_complete(self) -> bool:
        return self.eigenvectors.shape[1] == self.n

    def reconstruct(self) -> np.ndarray:
        u = self.eigenvectors
        return (u * self.eigenvalues) @ u.T

    def laplacian_eigenvalues(self) -> np.ndarray:
        if self.basis_kind == "laplacian":
            return self.eigenvalues
        return adjacency_to_laplacian(self.eigenvalues)


def _fix_signs(vecs: np.ndarray) -> np.ndarray:
    # first component that is clearly nonzero made positive
    tol = 1e-10 * np.abs(vecs).max(axis=0, initial=0.0)
    mask = np.abs(vecs) > tol
    first = mask.argmax(axis=0)
    signs = np.sign(vecs[first, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    return vecs * signs


def eig(
    op: NormalizedOperator,
    mode: Literal["full", "iterative"] = "full",
    k: int | None = None,
    which: Literal["smallest", "largest", "both"] = "both",
    dense_cap: int = DENSE_CAP,
    max_iter: int | None = None,
    tol: float = 0.0,
) -> SpectralDecomposition:
    """Eigendecomposition of a normalized operator.

    ``mode="full"`` runs a dense symmetric solver and is limited to
    ``n <= dense_cap``. ``mode="iterative"`` runs implicitly restarted Lanczos
    and returns ``k`` extreme pairs (``which="both"`` splits ``k`` between
    the two ends). Eigenvector signs are fixed so the first nonzero entry of
    each vector is positive.
    """
    n = op.n
    if mode == "full":
        if n > dense_cap:
            raise ConfigError(f"n={n} exceeds dense_cap={dense_cap}; use mode='iterative' with k")
        lam, vecs = scipy.linalg.eigh(op.toarray())
        return SpectralDecomposition(lam, _fix_signs(vecs), op.kind, op.with_self_loops, op.degrees)
    if mode != "iterative":
        raise ConfigError(f"unknown eig mode {mode!r}")
    if k is None or not 1 <= k < n:
        raise ConfigError(f"iterative mode needs 1 <= k < n, got k={k}")
    where = {"smallest": "SA", "largest": "LA", "both": "BE"}[which]
    v0 = np.ones(n) / np.sqrt(n)
    try:
        lam, vecs = spla.eigsh(op.matrix, k=k, which=where, v0=v0, maxiter=max_iter, tol=tol)
    except spla.ArpackNoConvergence as exc:
        raise NumericalError(f"Lanczos did not converge: {len(exc.eigenvalues)} of {k} pairs") from exc
    order = np.argsort(lam)
    return SpectralDecomposition(lam[order], _fix_signs(vecs[:, order]), op.kind, op.with_self_loops, op.degrees)


def eigvals(op: NormalizedOperator, dense_cap: int = DENSE_CAP) -> np.ndarray:
    """Ascending eigenvalues only (cheaper than :func:`eig`)."""
    if op.n > dense_cap:
        raise ConfigError(f"n={op.n} exceeds dense_cap={dense_cap}")
    return scipy.linalg.eigh(op.toarray(), eigvals_only=True)


def graph_fourier(x, dec: SpectralDecomposition) -> np.ndarray:
    """Spectral coefficients ``U^T x`` of a signal (vector or column stack)."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] != dec.n:
        raise DataError(f"signal length {x.shape[0]} does not match n={dec.n}")
    return dec.eigenvectors.T @ x


def inverse_graph_fourier(x_hat, dec: SpectralDecomposition) -> np.ndarray:
    x_hat = np.asarray(x_hat, dtype=np.float64)
    if x_hat.shape[0] != dec.eigenvectors.shape[1]:
        raise DataError(f"coefficient length {x_hat.shape[0]} does not match {dec.eigenvectors.shape[1]}")
    return dec.eigenvectors @ x_hat


def _require_adjacency(dec: SpectralDecomposition):
    if dec.basis_kind != "adjacency_hat":
        raise ConfigError(f"needs a decomposition of A_hat, got basis {dec.basis_kind!r}")


def generalized_eigenvectors(dec: SpectralDecomposition) -> np.ndarray:
    """Eigenvectors of ``A u = lam D u``: ``D^-1/2 U``, so that ``u^T D u = 1``.

    Rows of isolated nodes are zero.
    """
    if dec.degrees is None:
        raise ConfigError("decomposition carries no degrees; build it with eig(normalized_adjacency(g))")
    d = np.asarray(dec.degrees, dtype=np.float64)
    scale = np.divide(1.0, np.sqrt(d), out=np.zeros_like(d), where=d > 0)
    return dec.eigenvectors * scale[:, None]


def eigenvalue_deltas_first_order(dec: SpectralDecomposition, u: int, v: int, op: str = INSERT) -> np.ndarray:
    """First-order shift of every eigenvalue of ``A_hat`` when edge (u, v) flips.

    Insertion gives ``2 U[u] U[v] - lam (U[u]^2 + U[v]^2)`` per eigenpair;
    deletion the negation. ``U`` here holds the generalized eigenvectors
    :func:`generalized_eigenvectors`, for which the expression accounts for
    the degree change at ``u`` and ``v`` as well as the new edge.
    """
    _require_adjacency(dec)
    if u == v:
        raise ValueError("u and v must differ")
    if op not in (INSERT, DELETE):
        raise ValueError(f"op must be {INSERT!r} or {DELETE!r}")
    gen = generalized_eigenvectors(dec)
    uu = gen[u]
    uv = gen[v]
    delta = 2.0 * uu * uv - dec.eigenvalues * (uu**2 + uv**2)
    return delta if op == INSERT else -delta


def eigenvalue_delta_first_order(dec: SpectralDecomposition, y: int, u: int, v: int, op: str = INSERT) -> float:
    """First-order shift of the ``y``-th eigenvalue; see :func:`eigenvalue_deltas_first_order`."""
    return float(eigenvalue_deltas_first_order(dec, u, v, op)[y])


@dataclass(frozen=True, eq=False)
class BandPartition:
    """Index sets of the low ``[p, 1]``, mid ``(-p, p)`` and high ``[-1, -p]`` bands of ``A_hat``."""

    p: float
    low: np.ndarray
    mid: np.ndarray
    high: np.ndarray

    def as_dict(self) -> dict[str, np.ndarray]:
        return {"low": self.low, "mid": self.mid, "high": self.high}


def band_partition(dec: SpectralDecomposition, p: float = 0.5) -> BandPartition:
    """Split eigen-indices into frequency bands; ``+-p`` go to low/high."""
    _require_adjacency(dec)
    return band_indices(dec.eigenvalues, p)


def band_indices(lam_adjacency, p: float = 0.5) -> BandPartition:
    """Band split of a bare ``A_hat`` spectrum (no eigenvectors needed)."""
    if not 0.0 < p < 1.0:
        raise ConfigError(f"band threshold p must lie in (0, 1), got {p}")
    lam = np.asarray(lam_adjacency, dtype=np.float64)
    low = np.flatnonzero(lam >= p)
    high = np.flatnonzero(lam <= -p)
    mid = np.flatnonzero((lam > -p) & (lam < p))
    return BandPartition(float(p), low, mid, high)


def rayleigh_quotient(op, x) -> float:
    """``x^T M x / x^T x`` for a normalized operator (or any symmetric matrix)."""
    x = np.asarray(x, dtype=np.float64)
    denom = float(x @ x)
    if denom == 0.0:
        raise ValueError("Rayleigh quotient of the zero vector is undefined")
    m = op.matrix if isinstance(op, NormalizedOperator) else op
    return float(x @ (m @ x)) / denom


def connected_pair_products(dec: SpectralDecomposition, g: Graph) -> np.ndarray:
    """Mean of ``U[u, y] U[v, y]`` over the edges (u, v) of ``g``, for every ``y``."""
    e = g.edge_array
    if len(e) == 0:
        raise DataError("graph has no edges")
    return (dec.eigenvectors[e[:, 0]] * dec.eigenvectors[e[:, 1]]).mean(axis=0)


@dataclass(frozen=True, eq=False)
class SpectrumShift:
    """Rank-paired spectra of a clean and an attacked graph."""

    lambda_clean: np.ndarray
    lambda_attacked: np.ndarray
    basis_kind: str

    @property
    def delta(self) -> np.ndarray:
        return self.lambda_attacked - self.lambda_clean

    def rows(self):
        for i, (a, b, d) in enumerate(zip(self.lambda_clean, self.lambda_attacked, self.delta)):
            yield i, float(a), float(b), float(d)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["index", "lambda_clean", "lambda_attacked", "delta"])
            for i, a, b, d in self.rows():
                w.writerow([i, f"{a:.12g}", f"{b:.12g}", f"{d:.12g}"])


def spectrum_shift_report(
    g_clean: Graph,
    g_attacked: Graph,
    basis: Literal["laplacian", "adjacency_hat"] = "laplacian",
    with_self_loops: bool = False,
) -> SpectrumShift:
    """Sorted spectra of both graphs paired by rank; degenerate eigenvalues are not matched by subspace."""
    if g_clean.n != g_attacked.n:
        raise DataError(f"node counts differ: {g_clean.n} vs {g_attacked.n}")
    build = laplacian if basis == "laplacian" else normalized_adjacency
    lam_a = eigvals(build(g_clean, with_self_loops))
    lam_b = eigvals(build(g_attacked, with_self_loops))
    return SpectrumShift(lam_a, lam_b, basis)
