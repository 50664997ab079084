"""Reading and writing datasets, edge lists and perturbation files.

Dataset manifest (YAML or JSON), paths relative to the manifest::

    name: cora          # optional
    n: 2485             # node count
    f: 1433             # feature dimension
    c: 7                # class count
    edges: edges.txt    # "u v" per line, 0-indexed, '#' comments
    features: features.txt
    labels: labels.txt  # one class id per line
    strict: false       # optional; reject asymmetric/duplicate edge lists

Features are either a dense CSV (``n`` rows, ``f`` comma-separated columns) or
a triplet file whose first line is ``sparse n f`` followed by ``row col value``
lines. Perturbation files hold ``+ u v`` / ``- u v`` lines.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from .exceptions import DataError
from .graph import DELETE, INSERT, EdgeOp, EdgePerturbation, Graph, Labels, NodeFeatures

__all__ = [
    "Manifest",
    "read_manifest",
    "load_dataset",
    "read_edge_list",
    "write_edge_list",
    "read_features",
    "write_features",
    "read_labels",
    "write_labels",
    "read_perturbation",
    "write_perturbation",
    "load_perturbed",
]

_NODES_HEADER = re.compile(r"#\s*nodes\s*[:=]\s*(\d+)")


@dataclass(frozen=True)
class Manifest:
    path: Path
    n: int
    f: int
    c: int
    edges: Path
    features: Path
    labels: Path
    name: str | None = None
    strict: bool = False


def _read_structured(path: Path) -> dict:
    text = path.read_text()
    try:
        data = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise DataError(f"{path}: cannot parse: {exc}") from exc
    if not isinstance(data, dict):
        raise DataError(f"{path}: expected a key-value mapping at top level")
    return data


def read_manifest(path) -> Manifest:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"manifest not found: {path}")
    data = _read_structured(path)
    missing = [k for k in ("n", "f", "c", "edges", "features", "labels") if k not in data]
    if missing:
        raise DataError(f"{path}: missing manifest keys {missing}")
    base = path.parent
    try:
        n, f, c = int(data["n"]), int(data["f"]), int(data["c"])
    except (TypeError, ValueError) as exc:
        raise DataError(f"{path}: n, f, c must be integers") from exc
    return Manifest(
        path=path,
        n=n,
        f=f,
        c=c,
        edges=base / data["edges"],
        features=base / data["features"],
        labels=base / data["labels"],
        name=data.get("name"),
        strict=bool(data.get("strict", False)),
    )


def load_dataset(manifest_path) -> tuple[Graph, NodeFeatures, Labels]:
    """Load the graph, features and labels named by a manifest and check shapes."""
    m = read_manifest(manifest_path)
    for p in (m.edges, m.features, m.labels):
        if not p.is_file():
            raise DataError(f"file named in {m.path} not found: {p}")
    g = read_edge_list(m.edges, n=m.n, strict=m.strict)
    x = read_features(m.features)
    if x.shape != (m.n, m.f):
        raise DataError(f"features have shape {x.shape}, manifest declares ({m.n}, {m.f})")
    y = read_labels(m.labels)
    if len(y) != m.n:
        raise DataError(f"{len(y)} labels, manifest declares n={m.n}")
    if len(y) and (y.min() < 0 or y.max() >= m.c):
        raise DataError(f"label ids must lie in [0, {m.c})")
    return g, NodeFeatures(x), Labels(y, m.c)


def _data_lines(path: Path):
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if line:
                yield lineno, line


def read_edge_list(path, n: int | None = None, strict: bool = False) -> Graph:
    """Parse a whitespace-separated edge list into a :class:`Graph`.

    The node count comes from ``n``, else from a ``# nodes: N`` header line,
    else from the largest index seen.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"edge list not found: {path}")
    header_n = None
    with open(path) as fh:
        for raw in fh:
            m = _NODES_HEADER.match(raw.strip())
            if m:
                header_n = int(m.group(1))
                break
            if raw.strip() and not raw.lstrip().startswith("#"):
                break
    pairs = []
    for lineno, line in _data_lines(path):
        parts = line.split()
        if len(parts) != 2:
            raise DataError(f"{path}:{lineno}: expected 'u v', got {line!r}")
        try:
            pairs.append((int(parts[0]), int(parts[1])))
        except ValueError as exc:
            raise DataError(f"{path}:{lineno}: non-integer node id in {line!r}") from exc
    if n is None:
        n = header_n if header_n is not None else (max(max(p) for p in pairs) + 1 if pairs else 0)
    try:
        return Graph.from_edges(n, pairs, strict=strict)
    except DataError as exc:
        raise DataError(f"{path}: {exc}") from exc


def write_edge_list(g: Graph, path) -> None:
    """Write each undirected edge once as ``u v`` with ``u < v``."""
    with open(path, "w") as fh:
        fh.write(f"# nodes: {g.n}\n")
        for u, v in g.edge_array:
            fh.write(f"{u} {v}\n")


def read_features(path) -> np.ndarray:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"feature file not found: {path}")
    lines = _data_lines(path)
    first = next(lines, None)
    if first is None:
        raise DataError(f"{path}: empty feature file")
    head = first[1].split()
    if head[0] == "sparse":
        if len(head) != 3:
            raise DataError(f"{path}: header must be 'sparse n f'")
        n, f = int(head[1]), int(head[2])
        x = np.zeros((n, f))
        for lineno, line in lines:
            parts = line.split()
            if len(parts) != 3:
                raise DataError(f"{path}:{lineno}: expected 'row col value'")
            r, c, val = int(parts[0]), int(parts[1]), float(parts[2])
            if not (0 <= r < n and 0 <= c < f):
                raise DataError(f"{path}:{lineno}: entry ({r}, {c}) outside ({n}, {f})")
            x[r, c] = val
        return x
    rows = [first[1].split(",")]
    rows.extend(line.split(",") for _, line in lines)
    try:
        x = np.array(rows, dtype=np.float64)
    except ValueError as exc:
        raise DataError(f"{path}: ragged or non-numeric CSV rows") from exc
    return x


def write_features(x, path, sparse: bool | None = None) -> None:
    """Write features as triplets (default when under 10% dense) or dense CSV."""
    x = np.asarray(x.values if isinstance(x, NodeFeatures) else x, dtype=np.float64)
    if sparse is None:
        sparse = np.count_nonzero(x) < 0.1 * x.size
    with open(path, "w") as fh:
        if sparse:
            fh.write(f"sparse {x.shape[0]} {x.shape[1]}\n")
            for r, c in zip(*np.nonzero(x)):
                fh.write(f"{r} {c} {x[r, c]:.17g}\n")
        else:
            for row in x:
                fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def read_labels(path) -> np.ndarray:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"label file not found: {path}")
    out = []
    for lineno, line in _data_lines(path):
        try:
            out.append(int(line))
        except ValueError as exc:
            raise DataError(f"{path}:{lineno}: non-integer label {line!r}") from exc
    return np.array(out, dtype=np.int64)


def write_labels(y, path) -> None:
    y = y.y if isinstance(y, Labels) else np.asarray(y)
    with open(path, "w") as fh:
        fh.writelines(f"{int(v)}\n" for v in y)


def read_perturbation(path) -> EdgePerturbation:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"perturbation file not found: {path}")
    ops = []
    for lineno, line in _data_lines(path):
        parts = line.split()
        if len(parts) != 3 or parts[0] not in "+-":
            raise DataError(f"{path}:{lineno}: expected '+ u v' or '- u v', got {line!r}")
        ops.append(EdgeOp(int(parts[1]), int(parts[2]), INSERT if parts[0] == "+" else DELETE))
    return EdgePerturbation(tuple(ops))


def write_perturbation(p: EdgePerturbation, path) -> None:
    with open(path, "w") as fh:
        for u, v, op in p:
            fh.write(f"{'+' if op == INSERT else '-'} {u} {v}\n")


def load_perturbed(edge_list_path, n: int | None = None, strict: bool = False) -> Graph:
    """Ingest an externally attacked graph stored as an edge list."""
    return read_edge_list(edge_list_path, n=n, strict=strict)
