"""Command line entry point: ``midgcn {spectrum,train,attack,analyze,compare}``.

Each run writes one experiment directory (``--out``) holding
``config.json`` (the resolved configuration), ``inputs.json`` (SHA-256 of
every input file) and the command's CSV/JSON outputs. Exit codes: 0 success,
2 configuration error, 3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import analysis, perturb
from .config import ATTACK_KINDS, ExperimentConfig, config_from_dict, load_config
from .exceptions import ConfigError, DataError, MidGCNError
from .graph import Graph, apply_perturbation, random_split
from .io import (
    load_dataset,
    load_perturbed,
    read_manifest,
    read_perturbation,
    write_edge_list,
    write_features,
    write_perturbation,
)
from .model import forward, hidden_representation, save_checkpoint, train
from .spectral import FilterSpec, SpectrumShift, eigvals, laplacian, normalized_adjacency

log = logging.getLogger("midgcn")

COMMANDS = ("spectrum", "train", "attack", "analyze", "compare")


# -- configuration -----------------------------------------------------------


def _resolve_config(args) -> ExperimentConfig:
    """Merge the config file (if any) with command-line overrides, then validate."""
    if args.config is not None:
        cfg = load_config(args.config)
        data = cfg.to_dict()
        base = Path.cwd()
        data["dataset"] = str(cfg.dataset)
        explicit = cfg.attack_explicit
    elif getattr(args, "dataset", None) is not None:
        data = {"dataset": args.dataset}
        base = Path.cwd()
        explicit = False
    else:
        raise ConfigError("pass --config FILE or --dataset MANIFEST")
    if getattr(args, "dataset", None) is not None:
        data["dataset"] = args.dataset
    if args.seed is not None:
        data["seeds"] = [args.seed]
    train = data.setdefault("train", {})
    for key in ("alpha", "hidden", "epochs_max", "patience"):
        value = getattr(args, key, None)
        if value is not None:
            train[key] = value
    if getattr(args, "filter", None):
        spec = FilterSpec.parse(args.filter)
        train["filter_kind"], train["alpha"] = spec.kind, spec.alpha
    if getattr(args, "self_loops", False):
        train["self_loops"] = True
    if getattr(args, "row_normalize", False):
        train["row_normalize"] = True
    if "baseline" in data and data["baseline"] is not None:
        # keep the baseline in step with command-line changes to the shared settings
        shared = {k: v for k, v in train.items() if k not in ("filter_kind", "alpha")}
        data["baseline"] = {**data["baseline"], **shared}
    attack = data.setdefault("attack", {})
    for flag, key in (("attack_kind", "kind"), ("rate", "rate"), ("n_perturbations", "n_perturbations"),
                      ("n_flips", "n_flips"), ("attack_seed", "seed")):
        value = getattr(args, flag, None)
        if value is not None:
            attack[key] = value
            explicit = True
    if getattr(args, "targets", None):
        attack["targets"] = args.targets
        explicit = True
    if getattr(args, "attacked", None):
        attack["kind"], attack["path"] = "file", str(Path(args.attacked).resolve())
        explicit = True
    if attack.get("path") is not None:
        attack["path"] = str(Path(attack["path"]).resolve())
    if getattr(args, "rates", None):
        data.setdefault("compare", {})["rates"] = args.rates
    if getattr(args, "alphas", None):
        data.setdefault("compare", {})["alphas"] = args.alphas
    if getattr(args, "band_p", None) is not None:
        data.setdefault("analysis", {})["band_p"] = args.band_p
    if getattr(args, "degree_min", None) is not None:
        data.setdefault("analysis", {})["degree_min"] = args.degree_min
    cfg = config_from_dict(data, base_dir=base, source=args.config)
    cfg.attack_explicit = explicit
    return cfg


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _prepare_run(cfg: ExperimentConfig, command: str, out: str | None) -> Path:
    name = cfg.name or Path(cfg.dataset).parent.name
    run_dir = Path(out) if out else Path("runs") / f"{command}-{name}"
    run_dir.mkdir(parents=True, exist_ok=True)
    analysis.write_json({"command": command, **cfg.to_dict()}, run_dir / "config.json")
    m = read_manifest(cfg.dataset)
    inputs = {str(p): _sha256(p) for p in (m.path, m.edges, m.features, m.labels) if p.is_file()}
    if cfg.attack.path is not None:
        inputs[str(cfg.attack.path)] = _sha256(Path(cfg.attack.path))
    analysis.write_json(inputs, run_dir / "inputs.json")
    log.info("writing results to %s", run_dir)
    return run_dir


# -- attacks -----------------------------------------------------------------


def _is_perturbation_file(path: Path) -> bool:
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if line:
                return line[0] in "+-"
    return False


def _attack(cfg: ExperimentConfig, g: Graph, x, y, rate: float | None = None):
    """Return ``(perturbation or None, attacked graph, attacked features)``."""
    spec = cfg.attack
    rate = spec.rate if rate is None else rate
    seed = cfg.attack_seed
    if spec.kind == "file":
        path = Path(spec.path)
        if _is_perturbation_file(path):
            p = read_perturbation(path)
            return p, apply_perturbation(g, p), x
        ga = load_perturbed(path, n=g.n)
        if ga.n != g.n:
            raise DataError(f"{path} has {ga.n} nodes, clean graph has {g.n}")
        return perturb.diff_edges(g, ga), ga, x
    if spec.kind == "feature":
        return None, g, perturb.feature_flip(x, spec.n_flips, seed).values
    if spec.kind == "targeted":
        if not spec.targets:
            raise ConfigError("attack.kind=targeted needs attack.targets")
        total, cur = None, g
        for i, t in enumerate(spec.targets):
            p = perturb.targeted_perturb(cur, y, t, spec.n_perturbations, seed + i)
            cur = apply_perturbation(cur, p)
            total = p if total is None else total + p
        return total, cur, x
    gen = perturb.random_flip(g, rate, seed) if spec.kind == "random_flip" else perturb.dice_attack(g, y, rate, seed)
    return gen, apply_perturbation(g, gen), x


# -- training tasks (module-level so worker processes can pickle them) --------


def _train_task(task):
    g, x, y, split, config, embedding = task
    params, report = train(g, x, y, split, config)
    if embedding == "logits":
        emb = forward(params, g, x)
    else:
        emb = hidden_representation(params, g, x)
    return params, report, emb


def _run_tasks(tasks, threads: int):
    if threads <= 1 or len(tasks) <= 1:
        return [_train_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(_train_task, tasks))


def _mean_std(values):
    a = np.asarray(values, dtype=np.float64)
    std = float(a.std(ddof=1)) if a.size > 1 else 0.0
    return float(a.mean()), std


# -- commands ----------------------------------------------------------------


def cmd_spectrum(cfg: ExperimentConfig, run_dir: Path, args) -> dict:
    g, x, y = load_dataset(cfg.dataset)
    build = laplacian if args.basis == "laplacian" else normalized_adjacency
    lam0 = eigvals(build(g, cfg.train.self_loops))
    result = {"n": g.n, "basis": args.basis}
    if not cfg.attack_explicit:
        analysis.write_csv(
            ({"index": i, "lambda_clean": float(v)} for i, v in enumerate(lam0)), run_dir / "spectrum.csv",
            ["index", "lambda_clean"],
        )
        print(f"spectrum: {g.n} eigenvalues in [{lam0[0]:.6g}, {lam0[-1]:.6g}]")
        return result
    _, ga, _ = _attack(cfg, g, x, y)
    lam1 = eigvals(build(ga, cfg.train.self_loops))
    SpectrumShift(lam0, lam1, args.basis).to_csv(run_dir / "spectrum.csv")
    stats = analysis.band_eigendelta_stats(g, ga, cfg.analysis.band_p, cfg.train.self_loops)
    analysis.write_json(stats, run_dir / "band_stats.json")
    result.update(band_stats=stats.to_dict(), mean_abs_delta=float(np.abs(lam1 - lam0).mean()))
    print(f"mean |delta lambda| by band (p={stats.p}): low={stats.low:.6g} mid={stats.mid:.6g} high={stats.high:.6g}")
    return result


def _splits(cfg, y):
    return {s: random_split(y, (cfg.train_fraction, cfg.val_fraction), seed=s) for s in cfg.seeds}


def cmd_train(cfg: ExperimentConfig, run_dir: Path, args) -> dict:
    g, x, y = load_dataset(cfg.dataset)
    if cfg.attack_explicit:
        _, g, x = _attack(cfg, g, x, y)
    splits = _splits(cfg, y)
    tasks = [(g, x, y, splits[s], cfg.train_config(s, baseline=args.baseline), "hidden") for s in cfg.seeds]
    accs = []
    for seed, (params, report, _) in zip(cfg.seeds, _run_tasks(tasks, args.threads)):
        save_checkpoint(params, run_dir / f"checkpoint_seed{seed}.json")
        analysis.write_json(report.to_dict(include_timing=False), run_dir / f"report_seed{seed}.json")
        accs.append(report.test_accuracy)
        print(f"seed {seed}: test_accuracy={report.test_accuracy:.4f} best_epoch={report.best_epoch} "
              f"seconds={report.seconds:.1f}")
    mean, std = _mean_std(accs)
    summary = {"filter": str(tasks[0][4].filter), "seeds": cfg.seeds, "test_accuracy": accs,
               "mean": mean, "std": std}
    analysis.write_json(summary, run_dir / "summary.json")
    print(f"test accuracy {mean:.4f} +- {std:.4f} over {len(accs)} seed(s)")
    return summary


def cmd_attack(cfg: ExperimentConfig, run_dir: Path, args) -> dict:
    g, x, y = load_dataset(cfg.dataset)
    p, ga, xa = _attack(cfg, g, x, y)
    result = {"kind": cfg.attack.kind, "seed": cfg.attack_seed}
    if cfg.attack.kind == "feature":
        write_features(xa, run_dir / "features_attacked.txt")
        result["n_flips"] = cfg.attack.n_flips
        print(f"flipped {cfg.attack.n_flips} feature entries")
    else:
        write_perturbation(p, run_dir / "perturbation.txt")
        write_edge_list(ga, run_dir / "attacked_edges.txt")
        result.update(
            n_operations=len(p), n_inserts=p.n_inserts, n_deletes=p.n_deletes,
            edges_clean=g.num_edges, edges_attacked=ga.num_edges,
            homophily_clean=perturb.homophily(g, y), homophily_attacked=perturb.homophily(ga, y),
        )
        if cfg.attack.kind in ("random_flip", "dice"):
            result["rate"] = cfg.attack.rate
        print(f"{len(p)} edge operations ({p.n_inserts} inserts, {p.n_deletes} deletes)")
    analysis.write_json(result, run_dir / "attack.json")
    return result


def cmd_analyze(cfg: ExperimentConfig, run_dir: Path, args) -> dict:
    g, x, y = load_dataset(cfg.dataset)
    spec = cfg.analysis
    result = {}
    if spec.common_neighbors:
        mean, frac = analysis.common_neighbor_sum_stats(g)
        result["common_neighbors"] = {"mean": mean, "violation_fraction": frac, "n_edges": g.num_edges}
        print(f"common-neighbour reciprocal sum: mean={mean:.4f} violations={frac:.4f}")
    if spec.rank:
        rows = analysis.rank_growth_curve(g, spec.rank_rates, seed=cfg.attack_seed)
        analysis.write_csv(rows, run_dir / "rank_growth.csv")
        result["rank_growth"] = rows
        last = rows[-1]
        print(f"rank growth at rate {last['rate']}: A {last['growth_A']:.4%}, A^2 {last['growth_A2']:.4%}")
    if spec.band:
        _, ga, _ = _attack(cfg, g, x, y)
        stats = analysis.band_eigendelta_stats(g, ga, spec.band_p, cfg.train.self_loops)
        result["band_stats"] = stats.to_dict()
        print(f"mean |delta lambda|: low={stats.low:.6g} mid={stats.mid:.6g} high={stats.high:.6g}")
    result["generalization_condition"] = {
        str(s): analysis.generalization_condition(s)
        for s in (FilterSpec("low"), FilterSpec("high"), FilterSpec("mid"), cfg.train.filter)
    }
    analysis.write_json(result, run_dir / "analysis.json")
    return result


def cmd_compare(cfg: ExperimentConfig, run_dir: Path, args) -> dict:
    g, x, y = load_dataset(cfg.dataset)
    splits = _splits(cfg, y)
    rates = sorted(set(cfg.compare.rates) | {0.0})
    graphs = {r: (g, x) if r == 0 else _attack(cfg, g, x, y, rate=r)[1:] for r in rates}
    models = {"mid": False, "baseline": True}
    keys, tasks = [], []
    for r in rates:
        gr, xr = graphs[r]
        for name, is_base in models.items():
            for s in cfg.seeds:
                keys.append((r, name, s))
                tasks.append((gr, xr, y, splits[s], cfg.train_config(s, baseline=is_base), cfg.analysis.embedding))
    results = dict(zip(keys, _run_tasks(tasks, args.threads)))

    grid, summary = [], []
    for r in rates:
        for name in models:
            accs, rates_dc = [], []
            for s in cfg.seeds:
                _, report, emb = results[(r, name, s)]
                dcr = analysis.distance_change_rate(results[(0.0, name, s)][2], emb, g, cfg.analysis.degree_min) \
                    if r > 0 else 0.0
                grid.append({"rate": r, "model": name, "seed": s, "test_accuracy": report.test_accuracy,
                             "distance_change_rate": dcr})
                accs.append(report.test_accuracy)
                rates_dc.append(dcr)
            mean, std = _mean_std(accs)
            summary.append({"rate": r, "model": name, "mean_accuracy": mean, "std_accuracy": std,
                            "mean_distance_change_rate": float(np.mean(rates_dc))})
            print(f"rate {r:.2f} {name:8s} accuracy {mean:.4f} +- {std:.4f}  "
                  f"distance change {np.mean(rates_dc):.4f}")
    analysis.write_csv(grid, run_dir / "grid.csv")
    analysis.write_csv(summary, run_dir / "summary.csv")
    out = {"models": {k: str(cfg.train_config(0, baseline=v).filter) for k, v in models.items()},
           "attack": cfg.attack.kind, "summary": summary}

    if cfg.compare.alphas:
        r = cfg.compare.alpha_sweep_rate
        gr, xr = (g, x) if r == 0 else _attack(cfg, g, x, y, rate=r)[1:]
        sweep_tasks = [(gr, xr, y, splits[s], cfg.train_config(s, alpha=a, filter_kind="mid_alpha"), "hidden")
                       for a in cfg.compare.alphas for s in cfg.seeds]
        sweep = _run_tasks(sweep_tasks, args.threads)
        rows = []
        for i, a in enumerate(cfg.compare.alphas):
            accs = [sweep[i * len(cfg.seeds) + j][1].test_accuracy for j in range(len(cfg.seeds))]
            mean, std = _mean_std(accs)
            rows.append({"alpha": a, "rate": r, "mean_accuracy": mean, "std_accuracy": std})
            print(f"alpha {a:.2f} accuracy {mean:.4f} +- {std:.4f}")
        analysis.write_csv(rows, run_dir / "alpha_sweep.csv")
        out["alpha_sweep"] = rows
    analysis.write_json(out, run_dir / "compare.json")
    return out


HANDLERS = {
    "spectrum": cmd_spectrum,
    "train": cmd_train,
    "attack": cmd_attack,
    "analyze": cmd_analyze,
    "compare": cmd_compare,
}


# -- argument parsing --------------------------------------------------------


def _global_flags(parser, suppress: bool):
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", type=Path, default=default, help="experiment YAML/JSON file")
    parser.add_argument("--seed", type=int, default=default, help="run a single seed (overrides the seed list)")
    parser.add_argument("--out", default=default, help="experiment output directory")
    parser.add_argument("--threads", type=int, default=argparse.SUPPRESS if suppress else 1,
                        help="worker processes for independent training runs")
    parser.add_argument("--dataset", default=default, help="dataset manifest (overrides the config)")
    parser.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS if suppress else False)


def _attack_flags(parser):
    parser.add_argument("--attack-kind", choices=ATTACK_KINDS)
    parser.add_argument("--rate", type=float)
    parser.add_argument("--attack-seed", type=int)
    parser.add_argument("--attacked", help="externally attacked edge list or perturbation file")


def _model_flags(parser):
    parser.add_argument("--filter", help="filter spec, e.g. 'low' or 'mid_alpha:0.5'")
    parser.add_argument("--alpha", type=float)
    parser.add_argument("--hidden", type=int)
    parser.add_argument("--epochs-max", type=int)
    parser.add_argument("--patience", type=int)
    parser.add_argument("--self-loops", action="store_true")
    parser.add_argument("--row-normalize", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="midgcn", description=__doc__.split("\n\n")[0])
    _global_flags(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", parents=[common], help="eigenvalue shift between clean and attacked graphs")
    _attack_flags(p)
    p.add_argument("--band-p", type=float)
    p.add_argument("--basis", choices=("laplacian", "adjacency_hat"), default="laplacian")
    p.add_argument("--self-loops", action="store_true")

    p = sub.add_parser("train", parents=[common], help="train over the seed list")
    _attack_flags(p)
    _model_flags(p)
    p.add_argument("--baseline", action="store_true", help="train the baseline model instead")

    p = sub.add_parser("attack", parents=[common], help="generate a perturbation")
    _attack_flags(p)
    p.add_argument("--n-perturbations", type=int)
    p.add_argument("--targets", type=int, nargs="+")
    p.add_argument("--n-flips", type=int)

    p = sub.add_parser("analyze", parents=[common], help="structural diagnostics")
    _attack_flags(p)
    p.add_argument("--band-p", type=float)

    p = sub.add_parser("compare", parents=[common], help="Mid-GCN vs baseline over attack rates")
    _attack_flags(p)
    _model_flags(p)
    p.add_argument("--rates", type=float, nargs="+")
    p.add_argument("--alphas", type=float, nargs="+")
    p.add_argument("--degree-min", type=int)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        cfg = _resolve_config(args)
        run_dir = _prepare_run(cfg, args.command, args.out)
        HANDLERS[args.command](cfg, run_dir, args)
    except MidGCNError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DataError.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
