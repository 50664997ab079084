"""Experiment configuration for the command line.

An experiment file is YAML (or JSON). Every key is optional except
``dataset``; paths are resolved relative to the config file::

    dataset: ../data/cora/manifest.yaml
    name: cora-dice
    seeds: [0, 1, 2, 3, 4]
    split: {train: 0.1, val: 0.1}
    train:                      # TrainConfig fields (Mid-GCN model)
      alpha: 0.5
      hidden: 128
    baseline:                   # overrides applied on top of ``train``
      filter_kind: low
    attack:
      kind: dice                # random_flip | dice | targeted | feature | file
      rate: 0.25
      seed: 0                   # attack seed (default: the first run seed)
      path: attacked_edges.txt  # kind=file: external edge list or perturbation file
    compare:
      rates: [0.0, 0.05, 0.10, 0.15, 0.20, 0.25]
      alphas: []                # alpha sweep, run at ``alpha_sweep_rate``
      alpha_sweep_rate: 0.10
    analysis:
      degree_min: 10
      band_p: 0.5
      rank_rates: [0.0, 0.05, 0.10, 0.15, 0.20, 0.25]
      common_neighbors: true
      rank: true
      band: true
      embedding: hidden         # hidden | logits

Validation happens in :func:`load_config` before any data file is read.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field, fields
from pathlib import Path

import yaml

from .exceptions import ConfigError
from .model import PUBLISHED_HYPERPARAMETERS, TrainConfig
from .validation import check_interval, check_positive_int

ATTACK_KINDS = ("random_flip", "dice", "targeted", "feature", "file")
DEFAULT_RATES = (0.0, 0.05, 0.10, 0.15, 0.20, 0.25)


@dataclass
class AttackSpec:
    kind: str = "dice"
    rate: float = 0.25
    n_perturbations: int = 5
    targets: list[int] = field(default_factory=list)
    n_flips: int = 0
    seed: int | None = None
    path: Path | None = None

    def validate(self):
        if self.kind not in ATTACK_KINDS:
            raise ConfigError(f"attack.kind must be one of {ATTACK_KINDS}, got {self.kind!r}")
        check_interval(self.rate, "attack.rate", 0.0, 1.0)
        check_positive_int(self.n_perturbations, "attack.n_perturbations")
        check_positive_int(self.n_flips, "attack.n_flips", minimum=0)
        for t in self.targets:
            check_positive_int(t, "attack.targets entry", minimum=0)
        if self.seed is not None:
            check_positive_int(self.seed, "attack.seed", minimum=0)
        if self.kind == "file":
            if self.path is None:
                raise ConfigError("attack.kind=file needs attack.path")
        if self.path is not None and not Path(self.path).is_file():
            raise ConfigError(f"attack.path does not exist: {self.path}")


@dataclass
class CompareSpec:
    rates: list[float] = field(default_factory=lambda: list(DEFAULT_RATES))
    alphas: list[float] = field(default_factory=list)
    alpha_sweep_rate: float = 0.10

    def validate(self):
        if not self.rates:
            raise ConfigError("compare.rates must be non-empty")
        for r in self.rates:
            check_interval(r, "compare.rates entry", 0.0, 1.0)
        for a in self.alphas:
            check_interval(a, "compare.alphas entry", 0.0, 2.0)
        check_interval(self.alpha_sweep_rate, "compare.alpha_sweep_rate", 0.0, 1.0)


@dataclass
class AnalysisSpec:
    degree_min: int = 10
    band_p: float = 0.5
    rank_rates: list[float] = field(default_factory=lambda: list(DEFAULT_RATES))
    common_neighbors: bool = True
    rank: bool = True
    band: bool = True
    embedding: str = "hidden"

    def validate(self):
        check_positive_int(self.degree_min, "analysis.degree_min", minimum=0)
        check_interval(self.band_p, "analysis.band_p", 0.0, 1.0, closed=(False, False))
        for r in self.rank_rates:
            check_interval(r, "analysis.rank_rates entry", 0.0, 1.0)
        if self.embedding not in ("hidden", "logits"):
            raise ConfigError(f"analysis.embedding must be 'hidden' or 'logits', got {self.embedding!r}")


@dataclass
class ExperimentConfig:
    dataset: Path
    name: str | None = None
    seeds: list[int] = field(default_factory=lambda: [0, 1, 2, 3, 4])
    train_fraction: float = 0.1
    val_fraction: float = 0.1
    train: TrainConfig = field(default_factory=TrainConfig)
    baseline: TrainConfig = field(default_factory=lambda: TrainConfig(filter_kind="low"))
    attack: AttackSpec = field(default_factory=AttackSpec)
    compare: CompareSpec = field(default_factory=CompareSpec)
    analysis: AnalysisSpec = field(default_factory=AnalysisSpec)
    source: Path | None = None
    attack_explicit: bool = False

    def validate(self) -> "ExperimentConfig":
        if not Path(self.dataset).is_file():
            raise ConfigError(f"dataset manifest does not exist: {self.dataset}")
        if not self.seeds:
            raise ConfigError("seeds must be a non-empty list")
        for s in self.seeds:
            check_positive_int(s, "seeds entry", minimum=0)
        check_interval(self.train_fraction, "split.train", 0.0, 1.0, closed=(False, False))
        check_interval(self.val_fraction, "split.val", 0.0, 1.0, closed=(False, False))
        if self.train_fraction + self.val_fraction >= 1.0:
            raise ConfigError("split fractions must sum to less than 1")
        self.train.validate()
        self.baseline.validate()
        self.attack.validate()
        self.compare.validate()
        self.analysis.validate()
        return self

    @property
    def attack_seed(self) -> int:
        return self.seeds[0] if self.attack.seed is None else self.attack.seed

    def train_config(self, seed: int, baseline: bool = False, **overrides) -> TrainConfig:
        base = self.baseline if baseline else self.train
        return TrainConfig(**{**base.to_dict(), "seed": seed, **overrides})

    def to_dict(self) -> dict:
        return {
            "dataset": str(self.dataset),
            "name": self.name,
            "seeds": list(self.seeds),
            "split": {"train": self.train_fraction, "val": self.val_fraction},
            "train": self.train.to_dict(),
            "baseline": self.baseline.to_dict(),
            "attack": {
                **{f.name: getattr(self.attack, f.name) for f in fields(self.attack)},
                "path": None if self.attack.path is None else str(self.attack.path),
            },
            "compare": {f.name: getattr(self.compare, f.name) for f in fields(self.compare)},
            "analysis": {f.name: getattr(self.analysis, f.name) for f in fields(self.analysis)},
        }


def _section(data: dict, key: str, cls, base_dir: Path | None = None):
    raw = data.get(key) or {}
    if not isinstance(raw, dict):
        raise ConfigError(f"section {key!r} must be a mapping")
    known = {f.name for f in fields(cls)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown keys in {key!r}: {sorted(unknown)}")
    raw = dict(raw)
    if "path" in raw and raw["path"] is not None and base_dir is not None:
        raw["path"] = base_dir / raw["path"]
    try:
        return cls(**raw)
    except TypeError as exc:
        raise ConfigError(f"section {key!r}: {exc}") from exc


_TOP_KEYS = {"dataset", "name", "seeds", "split", "train", "baseline", "attack", "compare", "analysis"}


def config_from_dict(data: dict, base_dir: Path | None = None, source: Path | None = None) -> ExperimentConfig:
    """Build and validate an :class:`ExperimentConfig` from a parsed mapping."""
    data = copy.deepcopy(data)
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    if "dataset" not in data:
        raise ConfigError("config needs a 'dataset' manifest path")
    base_dir = base_dir or Path.cwd()
    dataset = base_dir / data["dataset"]

    train_raw = data.get("train") or {}
    if not isinstance(train_raw, dict):
        raise ConfigError("section 'train' must be a mapping")
    preset = train_raw.pop("preset", None)
    if preset is not None:
        if preset not in PUBLISHED_HYPERPARAMETERS:
            raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PUBLISHED_HYPERPARAMETERS)}")
        train_raw = {**PUBLISHED_HYPERPARAMETERS[preset], **train_raw}
    try:
        train = TrainConfig(**train_raw)
        baseline_raw = data.get("baseline") or {"filter_kind": "low"}
        if not isinstance(baseline_raw, dict):
            raise ConfigError("section 'baseline' must be a mapping")
        baseline = TrainConfig(**{**train.to_dict(), **baseline_raw})
    except TypeError as exc:
        raise ConfigError(f"train/baseline: {exc}") from exc

    split = data.get("split") or {}
    if not isinstance(split, dict) or set(split) - {"train", "val"}:
        raise ConfigError("split must be a mapping with keys 'train' and 'val'")
    seeds = data.get("seeds", [0, 1, 2, 3, 4])
    if isinstance(seeds, int):
        seeds = [seeds]
    if not isinstance(seeds, list):
        raise ConfigError("seeds must be a list of integers")
    cfg = ExperimentConfig(
        dataset=dataset,
        name=data.get("name"),
        seeds=seeds,
        train_fraction=split.get("train", 0.1),
        val_fraction=split.get("val", 0.1),
        train=train,
        baseline=baseline,
        attack=_section(data, "attack", AttackSpec, base_dir),
        compare=_section(data, "compare", CompareSpec),
        analysis=_section(data, "analysis", AnalysisSpec),
        source=source,
        attack_explicit="attack" in data,
    )
    return cfg.validate()


def load_config(path) -> ExperimentConfig:
    """Parse and validate an experiment file (YAML, or JSON by ``.json`` suffix)."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        text = path.read_text()
        data = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError(f"{path}: cannot parse: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping at top level")
    return config_from_dict(data, base_dir=path.parent, source=path)
